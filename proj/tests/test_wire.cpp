#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fedmt/errors.hpp"
#include "fedmt/rng.hpp"
#include "fedmt/transport.hpp"
#include "fedmt/wire.hpp"

using namespace fedmt;

namespace {

ParameterSet random_params(Rng& rng) {
    ParameterSet p;
    const int entries = 1 + static_cast<int>(rng.index(5));
    for (int e = 0; e < entries; ++e) {
        std::string name = "p" + std::to_string(rng.index(1000));
        if (p.entries.count(name)) continue;
        std::vector<uint32_t> dims;
        const int rank = 1 + static_cast<int>(rng.index(4));
        for (int d = 0; d < rank; ++d) dims.push_back(1 + static_cast<uint32_t>(rng.index(5)));
        Tensor t(dims);
        for (std::size_t i = 0; i < t.size(); ++i) {
            t[i] = static_cast<float>(rng.uniform(-10.0, 10.0));
        }
        p.entries.emplace(std::move(name), std::move(t));
    }
    return p;
}

}  // namespace

TEST_CASE("empty set encodes to 4 zero bytes") {
    CHECK(wire::encode_params(ParameterSet{}) == std::vector<uint8_t>{0, 0, 0, 0});
}

TEST_CASE("single scalar 'b' = 1.0 has the documented 16-byte layout") {
    ParameterSet p;
    p.entries.emplace("b", Tensor::scalar(1.0f));
    const std::vector<uint8_t> bytes = wire::encode_params(p);
    const std::vector<uint8_t> expected = {
        1, 0, 0, 0,        // entry count
        1, 0,              // name length
        'b',               // name
        1,                 // rank
        1, 0, 0, 0,        // dim
        0x00, 0x00, 0x80, 0x3F,  // 1.0f little-endian
    };
    CHECK(bytes == expected);
    CHECK(bytes.size() == 16);
}

TEST_CASE("encode/decode round trip is bitwise identity on randomized sets") {
    Rng rng(77);
    for (int trial = 0; trial < 100; ++trial) {
        const ParameterSet p = random_params(rng);
        const std::vector<uint8_t> bytes = wire::encode_params(p);
        const ParameterSet q = wire::decode_params(bytes);
        CHECK(q.same_entries(p));
        CHECK(wire::encode_params(q) == bytes);  // canonical re-encode
    }
}

TEST_CASE("decode rejects truncation, bad order, and trailing bytes") {
    ParameterSet p;
    p.entries.emplace("a", Tensor::scalar(1.0f));
    p.entries.emplace("b", Tensor::scalar(2.0f));
    std::vector<uint8_t> bytes = wire::encode_params(p);

    std::vector<uint8_t> truncated(bytes.begin(), bytes.end() - 3);
    CHECK_THROWS_AS(wire::decode_params(truncated), DecodeError);

    std::vector<uint8_t> trailing = bytes;
    trailing.push_back(0);
    CHECK_THROWS_AS(wire::decode_params(trailing), DecodeError);

    // swap the two entry names to break lexicographic order
    std::vector<uint8_t> reordered = bytes;
    reordered[6] = 'b';
    reordered[18] = 'a';
    CHECK_THROWS_AS(wire::decode_params(reordered), DecodeError);
}

TEST_CASE("frame round trip and header layout") {
    wire::RoundMessage msg;
    msg.kind = wire::MsgKind::local_update;
    msg.round_index = 7;
    msg.sender_id = "node-a";
    ParameterSet p;
    p.entries.emplace("w", Tensor::scalar(3.5f));
    msg.payload = wire::encode_params(p);
    msg.sample_count = 123;

    const std::vector<uint8_t> frame = wire::encode_frame(msg);
    CHECK(frame[0] == 'C');
    CHECK(frame[1] == 'X');
    CHECK(frame[2] == 'V');
    CHECK(frame[3] == 'Z');
    CHECK(frame[4] == 1);  // version
    CHECK(wire::decode_frame(frame) == msg);
}

TEST_CASE("payload rules: control messages must be empty, data messages not") {
    wire::RoundMessage bad;
    bad.kind = wire::MsgKind::global_params;  // requires payload
    CHECK_THROWS_AS(wire::encode_frame(bad), ProtocolError);
    wire::RoundMessage bad2;
    bad2.kind = wire::MsgKind::shutdown;
    bad2.payload = {1, 2, 3};
    CHECK_THROWS_AS(wire::encode_frame(bad2), ProtocolError);
}

TEST_CASE("flipping any single payload byte triggers an integrity error") {
    wire::RoundMessage msg;
    msg.kind = wire::MsgKind::global_params;
    msg.sender_id = "server";
    ParameterSet p;
    p.entries.emplace("w", Tensor({2}, {1.0f, -2.0f}));
    msg.payload = wire::encode_params(p);
    const std::vector<uint8_t> frame = wire::encode_frame(msg);

    for (std::size_t i = wire::kFrameHeaderSize; i + 4 < frame.size(); ++i) {
        std::vector<uint8_t> corrupted = frame;
        corrupted[i] ^= 0x40;
        CHECK_THROWS_AS(wire::decode_frame(corrupted), IntegrityError);
    }
}

TEST_CASE("loopback send/recv is identity on both transports") {
    wire::RoundMessage msg;
    msg.kind = wire::MsgKind::head_upload;
    msg.round_index = 3;
    msg.sender_id = "n";
    ParameterSet p;
    p.entries.emplace("h", Tensor({3}, {1.0f, 2.0f, 3.0f}));
    msg.payload = wire::encode_params(p);
    msg.sample_count = 10;

    ChannelPair pair = make_in_process_pair();
    send_message(*pair.server_side, msg);
    CHECK(recv_message(*pair.node_side) == msg);

    TcpListener listener;
    auto client = tcp_connect(listener.port());
    auto server = listener.accept();
    send_message(*client, msg);
    CHECK(recv_message(*server) == msg);
}

TEST_CASE("recv on a closed channel raises a connection error") {
    ChannelPair pair = make_in_process_pair();
    pair.server_side->close();
    CHECK_THROWS_AS(pair.node_side->recv(), ConnectionError);
}
