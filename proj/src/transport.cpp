#include "fedmt/transport.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cstring>

#include "fedmt/errors.hpp"

namespace fedmt {

void send_message(Channel& ch, const wire::RoundMessage& msg) {
    ch.send(wire::encode_frame(msg));
}

wire::RoundMessage recv_message(Channel& ch) { return wire::decode_frame(ch.recv()); }

namespace {

// One direction of the in-process transport.
struct FrameQueue {
    std::mutex mu;
    std::condition_variable cv;
    std::deque<std::vector<uint8_t>> frames;
    bool closed = false;

    void push(const std::vector<uint8_t>& frame) {
        {
            std::lock_guard lock(mu);
            if (closed) throw ConnectionError("send on closed channel");
            frames.push_back(frame);
        }
        cv.notify_one();
    }

    std::vector<uint8_t> pop() {
        std::unique_lock lock(mu);
        cv.wait(lock, [this] { return !frames.empty() || closed; });
        if (frames.empty()) throw ConnectionError("recv on closed channel");
        std::vector<uint8_t> frame = std::move(frames.front());
        frames.pop_front();
        return frame;
    }

    void close() {
        {
            std::lock_guard lock(mu);
            closed = true;
        }
        cv.notify_all();
    }
};

class InProcessChannel : public Channel {
  public:
    InProcessChannel(std::shared_ptr<FrameQueue> out, std::shared_ptr<FrameQueue> in)
        : out_(std::move(out)), in_(std::move(in)) {}

    void send(const std::vector<uint8_t>& frame) override { out_->push(frame); }
    std::vector<uint8_t> recv() override { return in_->pop(); }
    void close() override {
        out_->close();
        in_->close();
    }

  private:
    std::shared_ptr<FrameQueue> out_;
    std::shared_ptr<FrameQueue> in_;
};

class TcpChannel : public Channel {
  public:
    explicit TcpChannel(int fd) : fd_(fd) {}
    ~TcpChannel() override { close(); }

    void send(const std::vector<uint8_t>& frame) override {
        std::size_t sent = 0;
        while (sent < frame.size()) {
            const ssize_t n = ::send(fd_, frame.data() + sent, frame.size() - sent, MSG_NOSIGNAL);
            if (n <= 0) throw ConnectionError("tcp send failed");
            sent += static_cast<std::size_t>(n);
        }
    }

    std::vector<uint8_t> recv() override {
        std::vector<uint8_t> frame(wire::kFrameHeaderSize);
        read_exact(frame.data(), frame.size());
        // body length sits at offset 6, little-endian u64
        uint64_t body_len = 0;
        for (int i = 0; i < 8; ++i) {
            body_len |= static_cast<uint64_t>(frame[6 + i]) << (8 * i);
        }
        const std::size_t rest = body_len + 4;  // body + crc
        const std::size_t head = frame.size();
        frame.resize(head + rest);
        read_exact(frame.data() + head, rest);
        return frame;
    }

    void close() override {
        if (fd_ >= 0) {
            ::close(fd_);
            fd_ = -1;
        }
    }

  private:
    void read_exact(uint8_t* dst, std::size_t n) {
        std::size_t got = 0;
        while (got < n) {
            const ssize_t r = ::recv(fd_, dst + got, n - got, 0);
            if (r <= 0) throw ConnectionError("tcp connection closed mid-frame");
            got += static_cast<std::size_t>(r);
        }
    }

    int fd_;
};

class TraceChannel : public Channel {
  public:
    TraceChannel(std::unique_ptr<Channel> inner, std::shared_ptr<MessageTrace> trace)
        : inner_(std::move(inner)), trace_(std::move(trace)) {}

    void send(const std::vector<uint8_t>& frame) override {
        trace_->record(frame);
        inner_->send(frame);
    }
    std::vector<uint8_t> recv() override {
        std::vector<uint8_t> frame = inner_->recv();
        trace_->record(frame);
        return frame;
    }
    void close() override { inner_->close(); }

  private:
    std::unique_ptr<Channel> inner_;
    std::shared_ptr<MessageTrace> trace_;
};

}  // namespace

ChannelPair make_in_process_pair() {
    auto a = std::make_shared<FrameQueue>();
    auto b = std::make_shared<FrameQueue>();
    ChannelPair pair;
    pair.server_side = std::make_unique<InProcessChannel>(a, b);
    pair.node_side = std::make_unique<InProcessChannel>(b, a);
    return pair;
}

TcpListener::TcpListener() {
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd_ < 0) throw ConnectionError("cannot create listen socket");
    int one = 1;
    ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = 0;
    if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0 ||
        ::listen(fd_, 16) != 0) {
        ::close(fd_);
        throw ConnectionError("cannot bind loopback listener");
    }
    socklen_t len = sizeof(addr);
    ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
}

TcpListener::~TcpListener() {
    if (fd_ >= 0) ::close(fd_);
}

std::unique_ptr<Channel> TcpListener::accept() {
    const int fd = ::accept(fd_, nullptr, nullptr);
    if (fd < 0) throw ConnectionError("accept failed");
    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    return std::make_unique<TcpChannel>(fd);
}

std::unique_ptr<Channel> tcp_connect(uint16_t port) {
    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) throw ConnectionError("cannot create socket");
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = htons(port);
    if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
        ::close(fd);
        throw ConnectionError("cannot connect to loopback port " + std::to_string(port));
    }
    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    return std::make_unique<TcpChannel>(fd);
}

void MessageTrace::record(const std::vector<uint8_t>& frame) {
    wire::RoundMessage msg = wire::decode_frame(frame);
    std::lock_guard lock(mu);
    messages.push_back(std::move(msg));
}

std::vector<wire::RoundMessage> MessageTrace::snapshot() {
    std::lock_guard lock(mu);
    return messages;
}

std::unique_ptr<Channel> trace_channel(std::unique_ptr<Channel> inner,
                                       std::shared_ptr<MessageTrace> trace) {
    return std::make_unique<TraceChannel>(std::move(inner), std::move(trace));
}

}  // namespace fedmt
