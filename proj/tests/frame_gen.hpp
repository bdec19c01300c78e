// Test-only helpers: seeded random generation of valid frames.
#pragma once

#include "meshmac/frame_builder.hpp"
#include "meshmac/medium_access.hpp"

namespace meshmac::testgen {

inline MacAddress random_mac(Splitmix64& rng) {
    MacAddress m;
    uint64_t v = rng.next();
    for (int i = 0; i < 6; ++i) m.octets[i] = uint8_t(v >> (8 * i));
    return m;
}

inline std::vector<uint8_t> random_bytes(Splitmix64& rng, size_t max_len) {
    size_t len = rng.next() % (max_len + 1);
    std::vector<uint8_t> out(len);
    for (size_t i = 0; i < len; ++i) out[i] = uint8_t(rng.next());
    return out;
}

// A structurally valid frame of the given kind with random field values
// and a correct FCS.
inline Frame random_frame(FrameKind kind, Splitmix64& rng) {
    Frame f;
    f.kind = kind;
    SubtypeCode code = subtype_code(kind);
    f.fch.type = uint8_t(code.code >> 4);
    f.fch.subtype = uint8_t(code.code & 0xF);
    uint64_t flags = rng.next();
    f.fch.to_ds = flags & 1;
    f.fch.from_ds = flags & 2;
    f.fch.more_fragments = flags & 4;
    f.fch.retry = flags & 8;
    f.fch.power_mgmt = flags & 16;
    f.fch.more_data = flags & 32;
    f.fch.wep = flags & 64;
    f.fch.order = flags & 128;
    f.did = compute_did(kind, NavRegister{uint16_t(rng.next())});

    FrameShape shape = frame_shape(kind);
    if (shape.address_count >= 1) f.addr1 = random_mac(rng);
    if (shape.address_count >= 2) f.addr2 = random_mac(rng);
    if (shape.address_count >= 3) f.addr3 = random_mac(rng);
    if (shape.address_count >= 4) f.addr4 = random_mac(rng);
    if (shape.has_seq_ctl)
        f.seq_ctl = SequenceControl::make(uint16_t(rng.next() & 0x0FFF),
                                          uint8_t(rng.next() & 0xF));
    if (shape.has_mesh_header) {
        MeshHeader mh;
        mh.mesh_flags = uint8_t(rng.next() & 0b11);
        mh.ttl = uint8_t(rng.next());
        mh.mesh_seq = uint32_t(rng.next());
        for (int i = 0; i < mh.ae_mode(); ++i) mh.addr_ext.push_back(random_mac(rng));
        f.mesh_header = std::move(mh);
    }
    if (shape.body_allowed) f.body = random_bytes(rng, 256);
    f.fcs = compute_fcs(encode_without_fcs(f));
    return f;
}

inline const std::vector<FrameKind>& encodable_kinds() {
    static const std::vector<FrameKind> kinds = {
        FrameKind::Data,   FrameKind::Ack,         FrameKind::Cts,
        FrameKind::Rts,    FrameKind::PsPoll,      FrameKind::CfpEnd,
        FrameKind::MgmtGeneric, FrameKind::MgmtMultihopAction};
    return kinds;
}

}  // namespace meshmac::testgen
