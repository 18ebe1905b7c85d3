#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fedmt/params.hpp"

namespace fedmt::wire {

enum class MsgKind : uint8_t {
    join_request = 1,
    join_ack = 2,
    global_params = 3,
    local_update = 4,
    head_request = 5,
    head_upload = 6,
    shutdown = 7,
};

const char* msg_kind_name(MsgKind k);

// Envelope for one server<->node exchange. payload is an encode_params
// buffer and must be empty exactly for join-request/join-ack/head-request/
// shutdown. sample_count is meaningful for local-update and head-upload.
struct RoundMessage {
    MsgKind kind = MsgKind::join_request;
    uint32_t round_index = 0;
    std::string sender_id;
    std::vector<uint8_t> payload;
    uint64_t sample_count = 0;

    bool operator==(const RoundMessage&) const = default;
};

// Canonical parameter encoding: u32 entry count, then per entry (in
// lexicographic name order) u16 name length + UTF-8 name, u8 rank, u32 per
// dim, f32 per element. Everything little-endian.
std::vector<uint8_t> encode_params(const ParameterSet& params);
ParameterSet decode_params(const std::vector<uint8_t>& bytes);

std::vector<uint8_t> encode_message(const RoundMessage& msg);
RoundMessage decode_message(const std::vector<uint8_t>& bytes);

// Frame layout: magic "CXVZ", u16 version (=1), u64 body length, body
// (RoundMessage bytes), u32 CRC-32 of the body. Little-endian throughout.
std::vector<uint8_t> encode_frame(const RoundMessage& msg);
RoundMessage decode_frame(const std::vector<uint8_t>& frame);

constexpr std::size_t kFrameHeaderSize = 4 + 2 + 8;
constexpr uint16_t kFrameVersion = 1;
extern const char kFrameMagic[4];

uint32_t crc32(const uint8_t* data, std::size_t len);

}  // namespace fedmt::wire
