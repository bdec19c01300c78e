#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace meshmac {

// Frame kinds handled by the transmitter. Rtx/Ctx are reserved: the
// draft names them for backhaul channel switching but defines no wire
// format, so they carry no subtype code and cannot be built or encoded.
enum class FrameKind {
    Data,
    Ack,
    Cts,
    Rts,
    PsPoll,
    CfpEnd,
    MgmtGeneric,
    MgmtMultihopAction,
    Rtx,
    Ctx,
};

struct ReservedKindError : std::invalid_argument {
    explicit ReservedKindError(FrameKind k)
        : std::invalid_argument("reserved frame kind has no subtype code"), kind(k) {}
    FrameKind kind;
};

struct UnknownSubtypeError : std::invalid_argument {
    explicit UnknownSubtypeError(uint8_t c)
        : std::invalid_argument("unknown 6-bit subtype code " + std::to_string(int(c))),
          code(c) {}
    uint8_t code;
};

// 6-bit frame subtype constant, written MSB-first as in the design docs.
struct SubtypeCode {
    uint8_t code = 0;  // < 64

    constexpr bool operator==(const SubtypeCode&) const = default;
};

namespace subtype {
inline constexpr SubtypeCode kAck{0b101011};
inline constexpr SubtypeCode kData{0b010000};
inline constexpr SubtypeCode kCts{0b010011};
inline constexpr SubtypeCode kRts{0b101101};
inline constexpr SubtypeCode kPsPoll{0b100101};
inline constexpr SubtypeCode kCfpEnd{0b010110};
// Management kinds have no printed constant; codes from the base
// standard's management type space (type 00), disjoint from the six
// control/data constants above.
inline constexpr SubtypeCode kMgmtGeneric{0b000000};
inline constexpr SubtypeCode kMgmtMultihopAction{0b001101};
}  // namespace subtype

// MSB-first 6-character bit string, the form the codes are written in.
inline std::string subtype_bit_string(SubtypeCode c) {
    std::string s(6, '0');
    for (int i = 0; i < 6; ++i)
        if (c.code & (1u << (5 - i))) s[i] = '1';
    return s;
}

inline SubtypeCode subtype_code(FrameKind kind) {
    switch (kind) {
        case FrameKind::Ack: return subtype::kAck;
        case FrameKind::Data: return subtype::kData;
        case FrameKind::Cts: return subtype::kCts;
        case FrameKind::Rts: return subtype::kRts;
        case FrameKind::PsPoll: return subtype::kPsPoll;
        case FrameKind::CfpEnd: return subtype::kCfpEnd;
        case FrameKind::MgmtGeneric: return subtype::kMgmtGeneric;
        case FrameKind::MgmtMultihopAction: return subtype::kMgmtMultihopAction;
        case FrameKind::Rtx:
        case FrameKind::Ctx:
            throw ReservedKindError(kind);
    }
    throw ReservedKindError(kind);
}

// Inverse of subtype_code on the six wire constants.
inline FrameKind classify(SubtypeCode c) {
    switch (c.code) {
        case subtype::kAck.code: return FrameKind::Ack;
        case subtype::kData.code: return FrameKind::Data;
        case subtype::kCts.code: return FrameKind::Cts;
        case subtype::kRts.code: return FrameKind::Rts;
        case subtype::kPsPoll.code: return FrameKind::PsPoll;
        case subtype::kCfpEnd.code: return FrameKind::CfpEnd;
        case subtype::kMgmtGeneric.code: return FrameKind::MgmtGeneric;
        case subtype::kMgmtMultihopAction.code: return FrameKind::MgmtMultihopAction;
        default: throw UnknownSubtypeError(c.code);
    }
}

// 16-bit Frame Control field. The 6-bit subtype constant occupies the
// top bits of the packed word (2-bit type + 4-bit subtype, as printed),
// followed by the eight single-bit flags, with the always-00 protocol
// version in the low two bits.
struct FrameControlField {
    uint8_t type = 0;     // 2 bits, top half of the 6-bit constant
    uint8_t subtype = 0;  // 4 bits, bottom half
    bool to_ds = false;
    bool from_ds = false;
    bool more_fragments = false;
    bool retry = false;
    bool power_mgmt = false;
    bool more_data = false;
    bool wep = false;
    bool order = false;
    // protocol_version is fixed at 00 and not stored.

    uint16_t packed() const {
        uint16_t w = 0;
        w |= uint16_t(type & 0x3) << 14;
        w |= uint16_t(subtype & 0xF) << 10;
        w |= uint16_t(to_ds) << 9;
        w |= uint16_t(from_ds) << 8;
        w |= uint16_t(more_fragments) << 7;
        w |= uint16_t(retry) << 6;
        w |= uint16_t(power_mgmt) << 5;
        w |= uint16_t(more_data) << 4;
        w |= uint16_t(wep) << 3;
        w |= uint16_t(order) << 2;
        return w;  // bits 1..0 = version 00
    }

    static FrameControlField unpack(uint16_t w) {
        FrameControlField f;
        f.type = uint8_t((w >> 14) & 0x3);
        f.subtype = uint8_t((w >> 10) & 0xF);
        f.to_ds = (w >> 9) & 1;
        f.from_ds = (w >> 8) & 1;
        f.more_fragments = (w >> 7) & 1;
        f.retry = (w >> 6) & 1;
        f.power_mgmt = (w >> 5) & 1;
        f.more_data = (w >> 4) & 1;
        f.wep = (w >> 3) & 1;
        f.order = (w >> 2) & 1;
        return f;
    }

    SubtypeCode six_bit_code() const {
        return SubtypeCode{uint8_t((type << 4) | (subtype & 0xF))};
    }

    bool operator==(const FrameControlField&) const = default;
};

struct MacAddress {
    std::array<uint8_t, 6> octets{};

    static constexpr MacAddress wildcard() {
        return MacAddress{{0xFF, 0xFF, 0xFF, 0xFF, 0xFF, 0xFF}};
    }
    static constexpr MacAddress zero() { return MacAddress{}; }

    bool is_wildcard() const { return *this == wildcard(); }

    std::string to_string() const;
    static std::optional<MacAddress> parse(const std::string& text);

    auto operator<=>(const MacAddress&) const = default;
};

inline std::string MacAddress::to_string() const {
    static const char* digits = "0123456789abcdef";
    std::string s;
    s.reserve(17);
    for (size_t i = 0; i < 6; ++i) {
        if (i) s += ':';
        s += digits[octets[i] >> 4];
        s += digits[octets[i] & 0xF];
    }
    return s;
}

inline std::optional<MacAddress> MacAddress::parse(const std::string& text) {
    MacAddress m;
    if (text.size() != 17) return std::nullopt;
    auto hex = [](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        if (c >= 'A' && c <= 'F') return c - 'A' + 10;
        return -1;
    };
    for (size_t i = 0; i < 6; ++i) {
        int hi = hex(text[i * 3]);
        int lo = hex(text[i * 3 + 1]);
        if (hi < 0 || lo < 0) return std::nullopt;
        if (i < 5 && text[i * 3 + 2] != ':') return std::nullopt;
        m.octets[i] = uint8_t((hi << 4) | lo);
    }
    return m;
}

// 802.11s mesh header: flags, TTL, mesh sequence number and an optional
// address extension of 1..3 MACs selected by the low two flag bits (AE).
struct MeshHeader {
    uint8_t mesh_flags = 0;  // low 2 bits = AE mode, rest reserved-zero
    uint8_t ttl = 0;
    uint32_t mesh_seq = 0;
    std::vector<MacAddress> addr_ext;  // size == AE

    uint8_t ae_mode() const { return mesh_flags & 0b11; }
    size_t packed_length() const { return 6 + 6 * size_t(ae_mode()); }

    // TTL decrement saturates at zero; forwarding itself is out of scope
    // but the type must not wrap.
    void decrement_ttl() {
        if (ttl > 0) --ttl;
    }

    bool consistent() const { return addr_ext.size() == ae_mode(); }

    bool operator==(const MeshHeader&) const = default;
};

// Packed length of a mesh header with the given flags byte: 6..24 bytes.
inline size_t mesh_header_length(uint8_t flags) {
    return 6 + 6 * size_t(flags & 0b11);
}

struct SequenceControl {
    uint16_t raw = 0;  // seq number in bits 15..4, fragment number in 3..0

    static SequenceControl make(uint16_t seq, uint8_t frag) {
        return SequenceControl{uint16_t(((seq & 0x0FFF) << 4) | (frag & 0xF))};
    }
    uint16_t seq_number() const { return (raw >> 4) & 0x0FFF; }
    uint8_t fragment_number() const { return raw & 0xF; }

    bool operator==(const SequenceControl&) const = default;
};

struct Frame {
    FrameKind kind = FrameKind::Data;
    FrameControlField fch;
    uint16_t did = 0;
    std::optional<MacAddress> addr1;
    std::optional<MacAddress> addr2;
    std::optional<MacAddress> addr3;
    std::optional<MacAddress> addr4;
    std::optional<SequenceControl> seq_ctl;
    std::optional<MeshHeader> mesh_header;
    std::vector<uint8_t> body;
    uint32_t fcs = 0;

    bool operator==(const Frame&) const = default;
};

// Structural shape required of each kind: which addresses, whether the
// sequence-control and mesh-header fields are carried.
struct FrameShape {
    int address_count = 0;  // addr1..addrN present
    bool has_seq_ctl = false;
    bool has_mesh_header = false;
    bool body_allowed = false;
};

inline FrameShape frame_shape(FrameKind kind) {
    switch (kind) {
        case FrameKind::Data: return {4, true, true, true};
        case FrameKind::MgmtGeneric:
        case FrameKind::MgmtMultihopAction: return {3, true, false, true};
        case FrameKind::Rts: return {2, false, false, false};
        case FrameKind::Cts:
        case FrameKind::Ack:
        case FrameKind::PsPoll:
        case FrameKind::CfpEnd: return {1, false, false, false};
        case FrameKind::Rtx:
        case FrameKind::Ctx: throw ReservedKindError(kind);
    }
    throw ReservedKindError(kind);
}

inline bool satisfies_shape(const Frame& f) {
    FrameShape s = frame_shape(f.kind);
    const std::optional<MacAddress>* addrs[4] = {&f.addr1, &f.addr2, &f.addr3, &f.addr4};
    for (int i = 0; i < 4; ++i) {
        if ((i < s.address_count) != addrs[i]->has_value()) return false;
    }
    if (s.has_seq_ctl != f.seq_ctl.has_value()) return false;
    if (s.has_mesh_header != f.mesh_header.has_value()) return false;
    if (!s.body_allowed && !f.body.empty()) return false;
    if (f.mesh_header && !f.mesh_header->consistent()) return false;
    return true;
}

inline const char* frame_kind_name(FrameKind k) {
    switch (k) {
        case FrameKind::Data: return "data";
        case FrameKind::Ack: return "ack";
        case FrameKind::Cts: return "cts";
        case FrameKind::Rts: return "rts";
        case FrameKind::PsPoll: return "ps-poll";
        case FrameKind::CfpEnd: return "cfp-end";
        case FrameKind::MgmtGeneric: return "mgmt";
        case FrameKind::MgmtMultihopAction: return "mgmt-multihop";
        case FrameKind::Rtx: return "rtx";
        case FrameKind::Ctx: return "ctx";
    }
    return "?";
}

}  // namespace meshmac
