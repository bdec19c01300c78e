#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "meshmac/frame.hpp"

namespace meshmac {

struct CodecError : std::runtime_error {
    enum class Code { TooShort, BadFcs, UnknownSubtype, InvariantViolation };
    CodecError(Code c, const std::string& what) : std::runtime_error(what), code(c) {}
    Code code;
};

// CRC-32 over the encoded header+body, 802.11 FCS convention:
// polynomial 0x04C11DB7, init all-ones, reflected input/output,
// final complement. Bitwise form, no table.
inline uint32_t compute_fcs(std::span<const uint8_t> bytes) {
    uint32_t crc = 0xFFFFFFFFu;
    for (uint8_t b : bytes) {
        crc ^= b;
        for (int i = 0; i < 8; ++i) {
            crc = (crc >> 1) ^ (0xEDB88320u & (0u - (crc & 1u)));
        }
    }
    return ~crc;
}

namespace detail {

inline void put_u16(std::vector<uint8_t>& out, uint16_t v) {
    out.push_back(uint8_t(v & 0xFF));
    out.push_back(uint8_t(v >> 8));
}

inline void put_u32(std::vector<uint8_t>& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(uint8_t((v >> (8 * i)) & 0xFF));
}

inline void put_mac(std::vector<uint8_t>& out, const MacAddress& m) {
    out.insert(out.end(), m.octets.begin(), m.octets.end());
}

struct ByteReader {
    std::span<const uint8_t> data;
    size_t pos = 0;

    void need(size_t n) const {
        if (pos + n > data.size())
            throw CodecError(CodecError::Code::TooShort, "truncated frame");
    }
    uint16_t u16() {
        need(2);
        uint16_t v = uint16_t(data[pos]) | uint16_t(data[pos + 1]) << 8;
        pos += 2;
        return v;
    }
    uint32_t u32() {
        need(4);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= uint32_t(data[pos + i]) << (8 * i);
        pos += 4;
        return v;
    }
    uint8_t u8() {
        need(1);
        return data[pos++];
    }
    MacAddress mac() {
        need(6);
        MacAddress m;
        for (int i = 0; i < 6; ++i) m.octets[i] = data[pos + i];
        pos += 6;
        return m;
    }
};

}  // namespace detail

// Serialize header+body without the trailing FCS. Used both by encode
// and by the frame builder to compute the FCS it stores.
inline std::vector<uint8_t> encode_without_fcs(const Frame& f) {
    if (!satisfies_shape(f))
        throw CodecError(CodecError::Code::InvariantViolation,
                         "frame violates its kind's structural invariants");
    std::vector<uint8_t> out;
    detail::put_u16(out, f.fch.packed());
    detail::put_u16(out, f.did);
    FrameShape shape = frame_shape(f.kind);
    if (shape.address_count >= 1) detail::put_mac(out, *f.addr1);
    if (shape.address_count >= 2) detail::put_mac(out, *f.addr2);
    if (shape.address_count >= 3) detail::put_mac(out, *f.addr3);
    if (f.seq_ctl) detail::put_u16(out, f.seq_ctl->raw);
    if (shape.address_count >= 4) detail::put_mac(out, *f.addr4);
    if (f.mesh_header) {
        const MeshHeader& mh = *f.mesh_header;
        out.push_back(mh.mesh_flags);
        out.push_back(mh.ttl);
        detail::put_u32(out, mh.mesh_seq);
        for (const MacAddress& a : mh.addr_ext) detail::put_mac(out, a);
    }
    out.insert(out.end(), f.body.begin(), f.body.end());
    return out;
}

// Wire layout:
//   data:  FC DID A1 A2 A3 SeqCtl A4 MeshHeader Body FCS
//   mgmt:  FC DID A1 A2 A3 SeqCtl Body FCS
//   rts:   FC DID A1 A2 FCS
//   cts/ack/ps-poll/cfp-end: FC DID A1 FCS
// Multi-byte fields little-endian; addresses in octet order; FCS covers
// everything before it.
inline std::vector<uint8_t> encode(const Frame& f) {
    std::vector<uint8_t> out = encode_without_fcs(f);
    detail::put_u32(out, compute_fcs(out));
    return out;
}

inline bool verify_fcs(std::span<const uint8_t> bytes) {
    if (bytes.size() < 4) return false;
    auto covered = bytes.first(bytes.size() - 4);
    uint32_t stored = 0;
    for (int i = 0; i < 4; ++i)
        stored |= uint32_t(bytes[bytes.size() - 4 + i]) << (8 * i);
    return compute_fcs(covered) == stored;
}

inline Frame decode(std::span<const uint8_t> bytes) {
    // Smallest frame: FC DID A1 FCS
    if (bytes.size() < 14)
        throw CodecError(CodecError::Code::TooShort, "frame shorter than 14 bytes");
    if (!verify_fcs(bytes))
        throw CodecError(CodecError::Code::BadFcs, "frame check sequence mismatch");

    detail::ByteReader r{bytes.first(bytes.size() - 4)};
    Frame f;
    f.fch = FrameControlField::unpack(r.u16());
    try {
        f.kind = classify(f.fch.six_bit_code());
    } catch (const UnknownSubtypeError& e) {
        throw CodecError(CodecError::Code::UnknownSubtype,
                         "unrecognized subtype code " + std::to_string(int(e.code)));
    }
    f.did = r.u16();
    FrameShape shape = frame_shape(f.kind);
    if (shape.address_count >= 1) f.addr1 = r.mac();
    if (shape.address_count >= 2) f.addr2 = r.mac();
    if (shape.address_count >= 3) f.addr3 = r.mac();
    if (shape.has_seq_ctl) f.seq_ctl = SequenceControl{r.u16()};
    if (shape.address_count >= 4) f.addr4 = r.mac();
    if (shape.has_mesh_header) {
        MeshHeader mh;
        mh.mesh_flags = r.u8();
        mh.ttl = r.u8();
        mh.mesh_seq = r.u32();
        for (int i = 0; i < mh.ae_mode(); ++i) mh.addr_ext.push_back(r.mac());
        f.mesh_header = std::move(mh);
    }
    f.body.assign(r.data.begin() + long(r.pos), r.data.end());
    uint32_t stored = 0;
    for (int i = 0; i < 4; ++i)
        stored |= uint32_t(bytes[bytes.size() - 4 + i]) << (8 * i);
    f.fcs = stored;
    return f;
}

// --- TX serializer -------------------------------------------------------
//
// Models the transmission path: a multiplexer selects the frame fields
// in wire order, each is loaded into a 32-bit shift register and shifted
// onto TX_LINE least-significant bit first.

struct TxWord {
    uint32_t bits = 0;
    int valid_bits = 0;  // 1..32, unused high bits zero
};

// 4-bit mux select; 8 inputs used, the rest reserved.
enum class MuxSelect : uint8_t {
    Fch = 0,
    Did = 1,
    Addr1 = 2,
    Addr2 = 3,
    Addr3 = 4,
    Addr4 = 5,
    Fcs = 6,
    Data = 7,  // sequence control, mesh header and body all ride this input
};

inline bool mux_select_valid(uint8_t sel) { return sel < 8; }

struct Bitstream {
    std::vector<uint8_t> bits;  // one entry per bit, 0 or 1

    size_t length() const { return bits.size(); }

    std::vector<uint8_t> to_bytes() const {
        std::vector<uint8_t> out((bits.size() + 7) / 8, 0);
        for (size_t i = 0; i < bits.size(); ++i)
            if (bits[i]) out[i / 8] |= uint8_t(1u << (i % 8));
        return out;
    }
};

namespace detail {

// One mux selection: load the field's bytes through the 32-bit shift
// register, emitting LSB first.
inline void shift_out(Bitstream& bs, std::span<const uint8_t> field) {
    size_t off = 0;
    while (off < field.size()) {
        size_t chunk = std::min<size_t>(4, field.size() - off);
        TxWord w;
        for (size_t i = 0; i < chunk; ++i)
            w.bits |= uint32_t(field[off + i]) << (8 * i);
        w.valid_bits = int(chunk * 8);
        for (int i = 0; i < w.valid_bits; ++i)
            bs.bits.push_back(uint8_t((w.bits >> i) & 1u));
        off += chunk;
    }
}

}  // namespace detail

inline Bitstream serialize_tx(const Frame& f) {
    std::vector<uint8_t> wire = encode(f);
    FrameShape shape = frame_shape(f.kind);

    // Field boundaries in the encoded image, in wire order.
    struct Segment {
        MuxSelect sel;
        size_t offset, length;
    };
    std::vector<Segment> segs;
    size_t pos = 0;
    auto add = [&](MuxSelect sel, size_t len) {
        if (len) segs.push_back({sel, pos, len});
        pos += len;
    };
    add(MuxSelect::Fch, 2);
    add(MuxSelect::Did, 2);
    if (shape.address_count >= 1) add(MuxSelect::Addr1, 6);
    if (shape.address_count >= 2) add(MuxSelect::Addr2, 6);
    if (shape.address_count >= 3) add(MuxSelect::Addr3, 6);
    if (shape.has_seq_ctl) add(MuxSelect::Data, 2);
    if (shape.address_count >= 4) add(MuxSelect::Addr4, 6);
    if (f.mesh_header) add(MuxSelect::Data, f.mesh_header->packed_length());
    add(MuxSelect::Data, f.body.size());
    add(MuxSelect::Fcs, 4);

    Bitstream bs;
    bs.bits.reserve(wire.size() * 8);
    for (const Segment& s : segs)
        detail::shift_out(bs, std::span<const uint8_t>(wire).subspan(s.offset, s.length));
    return bs;
}

// --- hex dump ------------------------------------------------------------

// Lowercase, space-separated bytes; the format used by the CLI and the
// golden fixtures.
inline std::string to_hex(std::span<const uint8_t> bytes) {
    static const char* digits = "0123456789abcdef";
    std::string s;
    s.reserve(bytes.size() * 3);
    for (size_t i = 0; i < bytes.size(); ++i) {
        if (i) s += ' ';
        s += digits[bytes[i] >> 4];
        s += digits[bytes[i] & 0xF];
    }
    return s;
}

inline std::vector<uint8_t> from_hex(const std::string& text) {
    auto val = [](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        if (c >= 'A' && c <= 'F') return c - 'A' + 10;
        return -1;
    };
    std::vector<uint8_t> out;
    int hi = -1;
    for (char c : text) {
        if (c == ' ' || c == '\n' || c == '\t' || c == '\r') {
            if (hi >= 0) throw std::invalid_argument("odd hex digit count");
            continue;
        }
        int v = val(c);
        if (v < 0) throw std::invalid_argument(std::string("bad hex character '") + c + "'");
        if (hi < 0) {
            hi = v;
        } else {
            out.push_back(uint8_t((hi << 4) | v));
            hi = -1;
        }
    }
    if (hi >= 0) throw std::invalid_argument("odd hex digit count");
    return out;
}

}  // namespace meshmac
