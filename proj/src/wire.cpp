#include "fedmt/wire.hpp"

#include <cstring>
#include <zlib.h>

#include "fedmt/errors.hpp"

namespace fedmt::wire {

const char kFrameMagic[4] = {'C', 'X', 'V', 'Z'};

const char* msg_kind_name(MsgKind k) {
    switch (k) {
        case MsgKind::join_request: return "join-request";
        case MsgKind::join_ack: return "join-ack";
        case MsgKind::global_params: return "global-params";
        case MsgKind::local_update: return "local-update";
        case MsgKind::head_request: return "head-request";
        case MsgKind::head_upload: return "head-upload";
        case MsgKind::shutdown: return "shutdown";
    }
    return "?";
}

namespace {

void put_u16(std::vector<uint8_t>& out, uint16_t v) {
    out.push_back(v & 0xff);
    out.push_back((v >> 8) & 0xff);
}

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back((v >> (8 * i)) & 0xff);
}

void put_u64(std::vector<uint8_t>& out, uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back((v >> (8 * i)) & 0xff);
}

void put_f32(std::vector<uint8_t>& out, float v) {
    uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(out, bits);
}

struct Reader {
    const std::vector<uint8_t>& buf;
    std::size_t pos = 0;

    void need(std::size_t n, const char* what) const {
        if (pos + n > buf.size()) throw DecodeError(std::string("truncated ") + what, pos);
    }
    uint8_t u8(const char* what) {
        need(1, what);
        return buf[pos++];
    }
    uint16_t u16(const char* what) {
        need(2, what);
        uint16_t v = static_cast<uint16_t>(buf[pos]) | (static_cast<uint16_t>(buf[pos + 1]) << 8);
        pos += 2;
        return v;
    }
    uint32_t u32(const char* what) {
        need(4, what);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(buf[pos + i]) << (8 * i);
        pos += 4;
        return v;
    }
    uint64_t u64(const char* what) {
        need(8, what);
        uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(buf[pos + i]) << (8 * i);
        pos += 8;
        return v;
    }
    float f32(const char* what) {
        uint32_t bits = u32(what);
        float v;
        std::memcpy(&v, &bits, 4);
        return v;
    }
    std::string str(std::size_t n, const char* what) {
        need(n, what);
        std::string s(reinterpret_cast<const char*>(buf.data() + pos), n);
        pos += n;
        return s;
    }
};

bool payload_required(MsgKind k) {
    return k == MsgKind::global_params || k == MsgKind::local_update ||
           k == MsgKind::head_upload;
}

}  // namespace

uint32_t crc32(const uint8_t* data, std::size_t len) {
    return static_cast<uint32_t>(::crc32(0L, data, static_cast<uInt>(len)));
}

std::vector<uint8_t> encode_params(const ParameterSet& params) {
    std::vector<uint8_t> out;
    put_u32(out, static_cast<uint32_t>(params.entries.size()));
    // std::map iterates in lexicographic key order already
    for (const auto& [name, tensor] : params.entries) {
        if (name.size() > 0xffff) {
            throw DomainError("parameter name longer than 65535 bytes: " + name.substr(0, 32));
        }
        put_u16(out, static_cast<uint16_t>(name.size()));
        out.insert(out.end(), name.begin(), name.end());
        out.push_back(static_cast<uint8_t>(tensor.rank()));
        for (uint32_t d : tensor.dims()) put_u32(out, d);
        for (std::size_t i = 0; i < tensor.size(); ++i) put_f32(out, tensor[i]);
    }
    return out;
}

ParameterSet decode_params(const std::vector<uint8_t>& bytes) {
    Reader r{bytes};
    const uint32_t count = r.u32("entry count");
    ParameterSet out;
    std::string prev_name;
    for (uint32_t e = 0; e < count; ++e) {
        const uint16_t name_len = r.u16("name length");
        const std::size_t name_pos = r.pos;
        std::string name = r.str(name_len, "name");
        if (e > 0 && !(prev_name < name)) {
            throw DecodeError("entries not in lexicographic order ('" + name + "' after '" +
                                  prev_name + "')",
                              name_pos);
        }
        prev_name = name;
        const uint8_t rank = r.u8("rank");
        if (rank == 0) throw DecodeError("zero tensor rank", r.pos - 1);
        std::vector<uint32_t> dims(rank);
        std::size_t numel = 1;
        for (uint8_t d = 0; d < rank; ++d) {
            dims[d] = r.u32("dim");
            if (dims[d] == 0) throw DecodeError("zero dimension", r.pos - 4);
            numel *= dims[d];
        }
        r.need(numel * 4, "tensor data");
        std::vector<float> data(numel);
        for (std::size_t i = 0; i < numel; ++i) data[i] = r.f32("tensor data");
        out.entries.emplace(std::move(name), Tensor(std::move(dims), std::move(data)));
    }
    if (r.pos != bytes.size()) {
        throw DecodeError("trailing bytes after last entry", r.pos);
    }
    return out;
}

std::vector<uint8_t> encode_message(const RoundMessage& msg) {
    if (payload_required(msg.kind) == msg.payload.empty()) {
        throw ProtocolError(std::string(msg_kind_name(msg.kind)) + " message must have " +
                            (payload_required(msg.kind) ? "a" : "no") + " payload");
    }
    if (msg.sender_id.size() > 0xffff) throw DomainError("sender id too long");
    std::vector<uint8_t> out;
    out.push_back(static_cast<uint8_t>(msg.kind));
    put_u32(out, msg.round_index);
    put_u16(out, static_cast<uint16_t>(msg.sender_id.size()));
    out.insert(out.end(), msg.sender_id.begin(), msg.sender_id.end());
    put_u64(out, msg.sample_count);
    out.insert(out.end(), msg.payload.begin(), msg.payload.end());
    return out;
}

RoundMessage decode_message(const std::vector<uint8_t>& bytes) {
    Reader r{bytes};
    RoundMessage msg;
    const uint8_t kind = r.u8("message kind");
    if (kind < 1 || kind > 7) throw DecodeError("unknown message kind", 0);
    msg.kind = static_cast<MsgKind>(kind);
    msg.round_index = r.u32("round index");
    const uint16_t id_len = r.u16("sender length");
    msg.sender_id = r.str(id_len, "sender id");
    msg.sample_count = r.u64("sample count");
    msg.payload.assign(bytes.begin() + static_cast<std::ptrdiff_t>(r.pos), bytes.end());
    if (payload_required(msg.kind) == msg.payload.empty()) {
        throw DecodeError(std::string(msg_kind_name(msg.kind)) +
                              (payload_required(msg.kind) ? " missing payload"
                                                          : " carries unexpected payload"),
                          r.pos);
    }
    return msg;
}

std::vector<uint8_t> encode_frame(const RoundMessage& msg) {
    const std::vector<uint8_t> body = encode_message(msg);
    std::vector<uint8_t> out;
    out.reserve(kFrameHeaderSize + body.size() + 4);
    out.insert(out.end(), kFrameMagic, kFrameMagic + 4);
    put_u16(out, kFrameVersion);
    put_u64(out, body.size());
    out.insert(out.end(), body.begin(), body.end());
    put_u32(out, crc32(body.data(), body.size()));
    return out;
}

RoundMessage decode_frame(const std::vector<uint8_t>& frame) {
    Reader r{frame};
    r.need(4, "magic");
    if (std::memcmp(frame.data(), kFrameMagic, 4) != 0) {
        throw IntegrityError("bad frame magic");
    }
    r.pos = 4;
    const uint16_t version = r.u16("version");
    if (version != kFrameVersion) {
        throw IntegrityError("unsupported frame version " + std::to_string(version));
    }
    const uint64_t body_len = r.u64("body length");
    r.need(body_len + 4, "frame body");
    std::vector<uint8_t> body(frame.begin() + static_cast<std::ptrdiff_t>(r.pos),
                              frame.begin() + static_cast<std::ptrdiff_t>(r.pos + body_len));
    r.pos += body_len;
    const uint32_t stored = r.u32("checksum");
    if (r.pos != frame.size()) throw DecodeError("trailing bytes after frame", r.pos);
    if (stored != crc32(body.data(), body.size())) {
        throw IntegrityError("frame checksum mismatch");
    }
    return decode_message(body);
}

}  // namespace fedmt::wire
