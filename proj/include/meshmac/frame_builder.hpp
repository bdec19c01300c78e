#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "meshmac/codec.hpp"
#include "meshmac/frame.hpp"

namespace meshmac {

// Network allocation vector register: remaining reservation in
// microseconds, as read by the Duration/ID entity.
struct NavRegister {
    uint16_t value = 0;
};

struct MissingAddressError : std::invalid_argument {
    explicit MissingAddressError(const char* field)
        : std::invalid_argument(std::string("buffer descriptor missing ") + field) {}
};

// Outgoing-MSDU descriptor handed down with MSDURDY.
struct BufferDescriptor {
    uint64_t buff_ptr = 0;
    std::optional<MacAddress> da;
    std::optional<MacAddress> sa;
    std::optional<MacAddress> bssid;
    std::optional<MacAddress> ra;
    std::optional<MacAddress> ta;
    std::vector<uint8_t> payload;
};

inline constexpr size_t kDefaultFragThreshold = 2304;  // classic MSDU maximum

struct SequenceState {
    uint16_t seq_counter = 0;  // wraps mod 4096
    uint8_t frag_counter = 0;  // resets per MSDU
    size_t frag_threshold = kDefaultFragThreshold;
};

enum class StationRole {
    ApAssociated,          // AP, or STA associated with one: A3 = AP's BSSID
    IbssMember,            // A3 = IBSS BSSID
    ProbeRequestSpecific,  // A3 = specific BSSID
    ProbeRequestWildcard,  // A3 = wildcard (all-ones)
    SingleHopMeshPoint,    // BSSID unused: A3 = 0
};

struct FrameFlags {
    bool to_ds = false;
    bool from_ds = false;
    bool more_fragments = false;
    bool retry = false;
    bool power_mgmt = false;
    bool more_data = false;
    bool wep = false;
    bool order = false;
};

inline FrameControlField build_fch(FrameKind kind, const FrameFlags& flags) {
    SubtypeCode code = subtype_code(kind);  // throws ReservedKindError
    FrameControlField f;
    f.type = uint8_t(code.code >> 4);
    f.subtype = uint8_t(code.code & 0xF);
    f.to_ds = flags.to_ds;
    f.from_ds = flags.from_ds;
    f.more_fragments = flags.more_fragments;
    f.retry = flags.retry;
    f.power_mgmt = flags.power_mgmt;
    f.more_data = flags.more_data;
    f.wep = flags.wep;
    f.order = flags.order;
    return f;
}

// Duration/ID rules: PS-Poll carries the NAV value with the two low bits
// forced to 1; CFP-End is the constant 1; everything else carries the
// NAV value with the low bit forced to 0.
inline uint16_t compute_did(FrameKind kind, NavRegister nav) {
    switch (kind) {
        case FrameKind::PsPoll: return uint16_t(nav.value | 0b11);
        case FrameKind::CfpEnd: return 0b0000000000000001;
        default: return uint16_t(nav.value & ~uint16_t(1));
    }
}

struct AddressSet {
    std::optional<MacAddress> addr1, addr2, addr3, addr4;
};

inline AddressSet generate_addresses(FrameKind kind, const BufferDescriptor& buf,
                                     StationRole role) {
    auto require = [](const std::optional<MacAddress>& a, const char* name) -> MacAddress {
        if (!a) throw MissingAddressError(name);
        return *a;
    };
    AddressSet out;
    switch (kind) {
        case FrameKind::Data:
            out.addr1 = require(buf.ra, "RA");
            out.addr2 = require(buf.ta, "TA");
            out.addr3 = require(buf.da, "DA");
            out.addr4 = require(buf.sa, "SA");
            break;
        case FrameKind::MgmtGeneric:
            out.addr1 = require(buf.da, "DA");
            out.addr2 = require(buf.sa, "SA");
            switch (role) {
                case StationRole::ApAssociated:
                case StationRole::IbssMember:
                case StationRole::ProbeRequestSpecific:
                    out.addr3 = require(buf.bssid, "BSSID");
                    break;
                case StationRole::ProbeRequestWildcard:
                    out.addr3 = MacAddress::wildcard();
                    break;
                case StationRole::SingleHopMeshPoint:
                    out.addr3 = MacAddress::zero();
                    break;
            }
            break;
        case FrameKind::MgmtMultihopAction:
            out.addr1 = require(buf.ra, "RA");
            out.addr2 = require(buf.ta, "TA");
            out.addr3 = require(buf.da, "DA");
            break;
        case FrameKind::Rts:
            out.addr1 = require(buf.ra, "RA");
            out.addr2 = require(buf.ta, "TA");
            break;
        case FrameKind::Cts:
        case FrameKind::Ack:
        case FrameKind::PsPoll:
        case FrameKind::CfpEnd:
            out.addr1 = require(buf.ra, "RA");
            break;
        case FrameKind::Rtx:
        case FrameKind::Ctx:
            throw ReservedKindError(kind);
    }
    return out;
}

struct SequenceControlResult {
    SequenceControl seq_ctl;  // for the MSDU's first fragment
    bool fragment = false;
    SequenceState next;
};

// Start of a new MSDU: bump the sequence counter (mod 4096), reset the
// fragment counter, and decide whether fragmentation is needed.
inline SequenceControlResult sequence_control(SequenceState state, size_t msdu_len) {
    SequenceControlResult r;
    r.next = state;
    r.next.seq_counter = uint16_t((state.seq_counter + 1) & 0x0FFF);
    r.next.frag_counter = 0;
    r.fragment = msdu_len > state.frag_threshold;
    r.seq_ctl = SequenceControl::make(r.next.seq_counter, 0);
    return r;
}

// Advance to the next fragment of the current MSDU.
inline SequenceControlResult next_fragment(SequenceState state) {
    SequenceControlResult r;
    r.next = state;
    r.next.frag_counter = uint8_t((state.frag_counter + 1) & 0xF);
    r.seq_ctl = SequenceControl::make(state.seq_counter, r.next.frag_counter);
    r.fragment = true;
    return r;
}

inline size_t fragment_count(size_t msdu_len, size_t frag_threshold) {
    if (msdu_len == 0) return 1;
    return (msdu_len + frag_threshold - 1) / frag_threshold;
}

// Sequence-control words for every fragment of one MSDU, in order.
inline std::pair<std::vector<SequenceControl>, SequenceState>
fragment_sequence_controls(SequenceState state, size_t msdu_len) {
    std::vector<SequenceControl> out;
    SequenceControlResult first = sequence_control(state, msdu_len);
    out.push_back(first.seq_ctl);
    SequenceState s = first.next;
    size_t n = fragment_count(msdu_len, state.frag_threshold);
    for (size_t i = 1; i < n; ++i) {
        SequenceControlResult f = next_fragment(s);
        out.push_back(f.seq_ctl);
        s = f.next;
    }
    return {std::move(out), s};
}

// Mesh header parameters for outgoing data frames.
struct MeshParams {
    uint8_t flags = 0;  // AE mode in the low two bits
    uint8_t ttl = 31;
    uint32_t mesh_seq = 0;
    std::vector<MacAddress> addr_ext;  // length must equal flags & 0b11
};

struct BuildResult {
    Frame frame;
    bool frame_done = false;
    SequenceState next_state;
};

// The frame-computing path: compose the header entities, attach the
// sequence control and mesh header for data frames, and seal with the
// FCS. frame_done is raised on completion.
inline BuildResult build_frame(FrameKind kind, const BufferDescriptor& buf,
                               NavRegister nav, SequenceState state,
                               const FrameFlags& flags, StationRole role,
                               const MeshParams& mesh = {}) {
    BuildResult out;
    out.next_state = state;

    Frame f;
    f.kind = kind;
    f.fch = build_fch(kind, flags);
    f.did = compute_did(kind, nav);
    AddressSet addrs = generate_addresses(kind, buf, role);
    f.addr1 = addrs.addr1;
    f.addr2 = addrs.addr2;
    f.addr3 = addrs.addr3;
    f.addr4 = addrs.addr4;

    FrameShape shape = frame_shape(kind);
    if (shape.has_seq_ctl) {
        SequenceControlResult sc = sequence_control(state, buf.payload.size());
        f.seq_ctl = sc.seq_ctl;
        f.fch.more_fragments = f.fch.more_fragments || sc.fragment;
        out.next_state = sc.next;
    }
    if (shape.has_mesh_header) {
        MeshHeader mh;
        mh.mesh_flags = mesh.flags;
        mh.ttl = mesh.ttl;
        mh.mesh_seq = mesh.mesh_seq;
        mh.addr_ext = mesh.addr_ext;
        if (!mh.consistent())
            throw std::invalid_argument("mesh address extension length does not match AE mode");
        f.mesh_header = std::move(mh);
    }
    if (shape.body_allowed) f.body = buf.payload;

    f.fcs = compute_fcs(encode_without_fcs(f));
    out.frame = std::move(f);
    out.frame_done = true;
    return out;
}

}  // namespace meshmac
