#pragma once

#include <condition_variable>
#include <deque>
#include <memory>
#include <mutex>
#include <vector>

#include "fedmt/wire.hpp"

namespace fedmt {

// Ordered, reliable delivery of whole frames. One writer and one reader per
// direction. recv blocks; a closed peer raises ConnectionError.
class Channel {
  public:
    virtual ~Channel() = default;
    virtual void send(const std::vector<uint8_t>& frame) = 0;
    virtual std::vector<uint8_t> recv() = 0;
    virtual void close() = 0;
};

void send_message(Channel& ch, const wire::RoundMessage& msg);
wire::RoundMessage recv_message(Channel& ch);

struct ChannelPair {
    std::unique_ptr<Channel> server_side;
    std::unique_ptr<Channel> node_side;
};

// Two blocking byte-buffer queues; frames cross untouched, so the bytes on
// this transport equal the stream transport's bytes exactly.
ChannelPair make_in_process_pair();

// Loopback TCP. The listener hands out one connected pair per accept.
class TcpListener {
  public:
    TcpListener();  // binds 127.0.0.1 on an ephemeral port
    ~TcpListener();
    uint16_t port() const { return port_; }
    std::unique_ptr<Channel> accept();

  private:
    int fd_ = -1;
    uint16_t port_ = 0;
};

std::unique_ptr<Channel> tcp_connect(uint16_t port);

// Message trace for protocol-level assertions. Wrapping a channel records a
// copy of every frame it carries, in both directions.
struct MessageTrace {
    std::mutex mu;
    std::vector<wire::RoundMessage> messages;

    void record(const std::vector<uint8_t>& frame);
    std::vector<wire::RoundMessage> snapshot();
};

std::unique_ptr<Channel> trace_channel(std::unique_ptr<Channel> inner,
                                       std::shared_ptr<MessageTrace> trace);

}  // namespace fedmt
