#pragma once

#include <cassert>
#include <cstdint>
#include <stdexcept>

#include "meshmac/frame_builder.hpp"

namespace meshmac {

// Seedable 64-bit generator used for backoff draws. splitmix64: the
// output function of Steele/Lea/Flood's SplittableRandom. One name, one
// algorithm, recorded in trace metadata so runs are reproducible across
// implementations.
struct Splitmix64 {
    uint64_t state = 0;

    explicit Splitmix64(uint64_t seed = 0) : state(seed) {}

    uint64_t next() {
        uint64_t z = (state += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    static constexpr const char* algorithm_name() { return "splitmix64"; }
};

inline constexpr unsigned kDefaultRetryThreshold = 10;  // dot11rst_threshold

struct RetryCounter {
    unsigned attempts = 0;
    unsigned threshold = kDefaultRetryThreshold;

    void reset() { attempts = 0; }
};

struct BackoffParams {
    unsigned cw_min = 15;    // slots; must be 2^k - 1
    unsigned cw_max = 1023;  // slots; must be 2^k - 1
    uint64_t slot_time_us = 20;

    bool valid() const {
        auto pow2m1 = [](unsigned v) { return ((v + 1) & v) == 0; };
        return cw_min <= cw_max && pow2m1(cw_min) && pow2m1(cw_max);
    }
};

enum class DenyReason { NavBusy, RetryExhausted };

struct AccessOutcome {
    enum class Kind { Granted, Denied, Wait };
    Kind kind = Kind::Granted;
    DenyReason reason = DenyReason::NavBusy;  // valid when Denied
    unsigned backoff_slots = 0;               // valid when Wait

    static AccessOutcome granted() { return {Kind::Granted, {}, 0}; }
    static AccessOutcome denied(DenyReason r) { return {Kind::Denied, r, 0}; }
    static AccessOutcome wait(unsigned slots) {
        return {Kind::Wait, {}, slots};
    }
};

// Contention window after the given number of attempts: binary
// exponential growth from cw_min, clamped at cw_max.
inline unsigned contention_window(unsigned attempts, const BackoffParams& bp) {
    assert(attempts >= 1);
    // (cw_min+1) << attempts, saturating well before 32 doublings
    unsigned shift = attempts < 31 ? attempts : 31;
    uint64_t cw = (uint64_t(bp.cw_min) + 1) << shift;
    cw -= 1;
    return unsigned(cw > bp.cw_max ? bp.cw_max : cw);
}

// Uniform draw in [0, CW]. CW+1 is always a power of two, so masking
// the raw 64-bit output is exact.
inline unsigned backoff_val(unsigned attempts, const BackoffParams& bp,
                            Splitmix64& rng) {
    if (attempts < 1) throw std::invalid_argument("backoff requires attempts >= 1");
    unsigned cw = contention_window(attempts, bp);
    return unsigned(rng.next() & cw);
}

enum class AccessMode { Initial, Retry };

struct AccessResult {
    AccessOutcome outcome;
    RetryCounter rc;
};

// Carrier-sense + NAV admission with the retry counter. A retry first
// bumps the tentative counter; a busy medium (NAV or carrier) bumps it
// again and triggers backoff. Exceeding dot11rst_threshold denies the
// access outright.
inline AccessResult request_access(AccessMode mode, NavRegister nav,
                                   bool carrier_sense, RetryCounter rc,
                                   const BackoffParams& bp, Splitmix64& rng) {
    if (mode == AccessMode::Retry) ++rc.attempts;
    bool busy = nav.value != 0 || carrier_sense;
    if (busy) ++rc.attempts;
    if (rc.attempts > rc.threshold)
        return {AccessOutcome::denied(DenyReason::RetryExhausted), rc};
    if (!busy) return {AccessOutcome::granted(), rc};
    return {AccessOutcome::wait(backoff_val(rc.attempts, bp, rng)), rc};
}

// --- NAV maintenance -----------------------------------------------------

// NAV tracked as an expiry instant; the 16-bit register value is the
// remaining time at the moment of reading.
struct NavTimer {
    uint64_t expiry_us = 0;

    uint16_t remaining(uint64_t now_us) const {
        uint64_t rem = expiry_us > now_us ? expiry_us - now_us : 0;
        return rem > 0xFFFF ? uint16_t(0xFFFF) : uint16_t(rem);
    }
    NavRegister reg(uint64_t now_us) const { return NavRegister{remaining(now_us)}; }
};

// Standard max rule: extend only if the overheard duration outlasts the
// current reservation.
inline NavTimer update_nav(NavTimer nav, uint16_t overheard_did, uint64_t now_us) {
    uint64_t candidate = now_us + overheard_did;
    if (candidate > nav.expiry_us) nav.expiry_us = candidate;
    return nav;
}

// --- backoff countdown ---------------------------------------------------

// Slot countdown with freeze-and-resume: a slot is consumed only when
// the medium is idle at its boundary; busy boundaries defer without
// consuming. BusyFn(time_us) -> bool.
template <class BusyFn>
uint64_t backoff_grant_time(unsigned slots, uint64_t slot_time_us,
                            uint64_t start_us, BusyFn&& busy) {
    uint64_t t = start_us;
    unsigned remaining = slots;
    while (remaining > 0) {
        t += slot_time_us;
        if (!busy(t)) --remaining;
    }
    return t;
}

}  // namespace meshmac
