#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

#include "meshmac/codec.hpp"
#include "meshmac/frame_builder.hpp"
#include "meshmac/medium_access.hpp"
#include "meshmac/trace.hpp"
#include "meshmac/tx_control.hpp"

namespace meshmac {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct MediumParams {
    uint64_t bitrate_bps = 1'000'000;
    uint64_t sifs_us = 10;
    uint64_t difs_us = 50;
};

struct TrafficItem {
    uint64_t time_us = 0;
    int dest = 0;  // node id
    std::vector<uint8_t> payload;
};

struct NodeConfig {
    int id = 0;
    MacAddress mac;
    StationRole role = StationRole::SingleHopMeshPoint;
    std::vector<TrafficItem> traffic;
    bool silent = false;  // drops everything it hears; never responds
};

// One on-air frame. Overlapping transmissions corrupt each other.
struct Transmission {
    int sender = -1;
    Bitstream bits;
    uint64_t start_us = 0;
    uint64_t end_us = 0;
    bool corrupted = false;
};

// Single shared channel: a newly started transmission corrupts, and is
// corrupted by, everything still on the air. Returns the senders whose
// transmissions were corrupted just now.
inline std::vector<int> corrupt_overlapping(std::vector<Transmission>& active,
                                            Transmission& incoming) {
    std::vector<int> newly;
    for (Transmission& other : active) {
        if (!other.corrupted) newly.push_back(other.sender);
        other.corrupted = true;
        incoming.corrupted = true;
    }
    return newly;
}

struct NodeCounters {
    uint64_t offered = 0;
    uint64_t delivered = 0;
    uint64_t failed = 0;
    uint64_t retries = 0;
    uint64_t collisions = 0;

    uint64_t in_flight() const { return offered - delivered - failed; }
};

struct SimReport {
    std::map<int, NodeCounters> nodes;
    uint64_t end_time_us = 0;
    bool quiescent = false;  // event queue drained before the horizon
    Trace trace;
};

class Simulator {
public:
    Simulator(std::vector<NodeConfig> configs, MediumParams medium,
              BackoffParams backoff, unsigned retry_threshold, uint64_t seed,
              uint64_t horizon_us)
        : medium_(medium),
          backoff_(backoff),
          horizon_us_(horizon_us),
          seed_(seed) {
        if (horizon_us == 0) throw ConfigError("horizon must be positive");
        if (!backoff_.valid())
            throw ConfigError("cw_min/cw_max must be of the form 2^k - 1");
        std::sort(configs.begin(), configs.end(),
                  [](const NodeConfig& a, const NodeConfig& b) { return a.id < b.id; });
        for (const NodeConfig& cfg : configs) {
            if (nodes_.count(cfg.id))
                throw ConfigError("duplicate node id " + std::to_string(cfg.id));
            Node n;
            n.cfg = cfg;
            n.rc.threshold = retry_threshold;
            // per-node stream split off the scenario seed
            n.rng = Splitmix64(seed ^ (0x9E3779B97F4A7C15ull * uint64_t(cfg.id + 1)));
            nodes_.emplace(cfg.id, std::move(n));
        }
        for (auto& [id, n] : nodes_) {
            for (const TrafficItem& item : n.cfg.traffic) {
                if (item.time_us > horizon_us)
                    throw ConfigError("traffic scheduled after the horizon");
                if (!nodes_.count(item.dest))
                    throw ConfigError("traffic destination " +
                                      std::to_string(item.dest) + " is not a node");
                if (item.dest == id)
                    throw ConfigError("node " + std::to_string(id) +
                                      " addresses traffic to itself");
                schedule(item.time_us, id, EventKind::TrafficArrival, 0,
                         TrafficItem(item));
            }
        }
        trace_.metadata.emplace_back("rng", Splitmix64::algorithm_name());
        trace_.metadata.emplace_back("seed", std::to_string(seed));
    }

    bool complete() const {
        return queue_.empty() || queue_.top().time_us > horizon_us_;
    }

    // Process the earliest event; returns the trace records it produced.
    std::vector<TraceRecord> step() {
        size_t before = trace_.size();
        if (complete()) return {};
        Event e = queue_.top();
        queue_.pop();
        now_ = e.time_us;
        dispatch(e);
        return {trace_.records().begin() + long(before), trace_.records().end()};
    }

    SimReport run() {
        while (!complete()) step();
        SimReport report;
        for (const auto& [id, n] : nodes_) report.nodes[id] = n.counters;
        report.end_time_us = std::min(now_, horizon_us_);
        report.quiescent = queue_.empty();
        report.trace = trace_;
        return report;
    }

    const Trace& trace() const { return trace_; }
    uint64_t now() const { return now_; }

    // 1 iff any other node's transmission covers this instant.
    bool carrier_sense(int node_id, uint64_t t) const {
        for (const Transmission& tx : active_)
            if (tx.sender != node_id && tx.start_us <= t && t < tx.end_us)
                return true;
        return false;
    }

private:
    enum class EventKind {
        TrafficArrival,
        MediumCheck,
        BackoffTick,
        TxEnd,
        TimeoutFire,
    };

    struct Event {
        uint64_t time_us;
        int node;
        uint64_t seq;  // insertion order, final tie-break
        EventKind kind;
        uint64_t gen = 0;              // staleness guard for per-exchange events
        AccessMode mode = AccessMode::Initial;
        TimeoutKind timeout = TimeoutKind::CtsTimeout;
        std::optional<TrafficItem> traffic;
        size_t tx_index = 0;
    };

    struct EventOrder {
        bool operator()(const Event& a, const Event& b) const {
            if (a.time_us != b.time_us) return a.time_us > b.time_us;
            if (a.node != b.node) return a.node > b.node;
            return a.seq > b.seq;
        }
    };

    struct Node {
        NodeConfig cfg;
        TxState st;
        RetryCounter rc;
        Splitmix64 rng{0};
        NavTimer nav;
        SequenceState seqstate;
        uint32_t mesh_seq = 0;
        std::optional<Frame> built;
        std::vector<uint8_t> payload;  // MSDU of the current exchange
        MacAddress peer;
        bool is_initiator = false;
        unsigned slots_remaining = 0;
        uint64_t op_gen = 0;       // bumped at exchange end; stales old events
        uint64_t timeout_gen = 0;  // bumped when a wait is satisfied
        std::deque<TrafficItem> backlog;
        NodeCounters counters;

        std::string scope() const { return "node" + std::to_string(cfg.id); }
    };

    // --- scheduling ------------------------------------------------------

    void schedule(uint64_t t, int node, EventKind kind, uint64_t gen,
                  std::optional<TrafficItem> traffic = std::nullopt,
                  AccessMode mode = AccessMode::Initial,
                  TimeoutKind timeout = TimeoutKind::CtsTimeout, size_t tx_index = 0) {
        Event e;
        e.time_us = t;
        e.node = node;
        e.seq = next_seq_++;
        e.kind = kind;
        e.gen = gen;
        e.mode = mode;
        e.timeout = timeout;
        e.traffic = std::move(traffic);
        e.tx_index = tx_index;
        queue_.push(std::move(e));
    }

    void dispatch(const Event& e) {
        switch (e.kind) {
            case EventKind::TrafficArrival: on_traffic(nodes_.at(e.node), *e.traffic); break;
            case EventKind::MediumCheck: on_medium_check(nodes_.at(e.node), e); break;
            case EventKind::BackoffTick: on_backoff_tick(nodes_.at(e.node), e); break;
            case EventKind::TxEnd: on_tx_end(e); break;
            case EventKind::TimeoutFire: on_timeout(nodes_.at(e.node), e); break;
        }
    }

    // --- event handlers --------------------------------------------------

    void on_traffic(Node& n, const TrafficItem& item) {
        n.counters.offered++;
        if (n.st.phase == TxState::Phase::Idle && !n.is_initiator) {
            start_exchange(n, item);
        } else {
            n.backlog.push_back(item);
        }
    }

    void start_exchange(Node& n, const TrafficItem& item) {
        n.is_initiator = true;
        n.peer = nodes_.at(item.dest).cfg.mac;
        n.payload = item.payload;
        BufferDescriptor buf;
        buf.ra = n.peer;
        buf.ta = n.cfg.mac;
        buf.da = n.peer;
        buf.sa = n.cfg.mac;
        buf.payload = item.payload;
        trace_.record(now_, n.scope(), "msdurdy", true);
        feed(n, StimulusEvent{ev::Msdurdy{std::move(buf)}});
    }

    void on_medium_check(Node& n, const Event& e) {
        if (e.gen != n.op_gen || n.st.phase != TxState::Phase::WaitingMedium) return;
        bool cs = carrier_sense(n.cfg.id, now_);
        NavRegister nav = n.nav.reg(now_);
        trace_.record(now_, n.scope(), "carrier_sense", cs);
        trace_.record(now_, n.scope(), "nav_reg", uint64_t(nav.value));
        AccessResult res = request_access(e.mode, nav, cs, n.rc, backoff_, n.rng);
        n.rc = res.rc;
        if (e.mode == AccessMode::Retry &&
            res.outcome.kind != AccessOutcome::Kind::Denied)
            n.counters.retries++;
        apply_access_outcome(n, res.outcome);
    }

    void apply_access_outcome(Node& n, const AccessOutcome& outcome) {
        switch (outcome.kind) {
            case AccessOutcome::Kind::Granted:
                grant(n);
                break;
            case AccessOutcome::Kind::Denied:
                trace_.record(now_, n.scope(), "access_granted", false);
                feed(n, StimulusEvent{ev::AccessGranted{false}});
                break;
            case AccessOutcome::Kind::Wait:
                trace_.record(now_, n.scope(), "en_backoff", true);
                trace_.record(now_, n.scope(), "start_count", true);
                trace_.record(now_, n.scope(), "backoff_val",
                              uint64_t(outcome.backoff_slots));
                n.slots_remaining = outcome.backoff_slots;
                schedule(now_ + backoff_.slot_time_us, n.cfg.id,
                         EventKind::BackoffTick, n.op_gen);
                break;
        }
    }

    void grant(Node& n) {
        trace_.record(now_, n.scope(), "access_granted", true);
        feed(n, StimulusEvent{ev::AccessGranted{true}});
    }

    // Slot boundary of a backoff countdown. Busy boundaries freeze the
    // counter; idle ones consume a slot. The final grant re-checks the
    // medium by construction (it only fires on an idle boundary).
    void on_backoff_tick(Node& n, const Event& e) {
        if (e.gen != n.op_gen || n.st.phase != TxState::Phase::WaitingMedium) return;
        bool busy = carrier_sense(n.cfg.id, now_) || n.nav.remaining(now_) != 0;
        if (!busy) {
            if (n.slots_remaining > 0) n.slots_remaining--;
            if (n.slots_remaining == 0) {
                grant(n);
                return;
            }
        }
        schedule(now_ + backoff_.slot_time_us, n.cfg.id, EventKind::BackoffTick,
                 e.gen);
    }

    void on_tx_end(const Event& e) {
        auto it = std::find_if(active_.begin(), active_.end(),
                               [&](const Transmission& t) {
                                   return t.end_us == now_ && t.sender == e.node;
                               });
        if (it == active_.end()) return;
        Transmission tx = *it;
        active_.erase(it);

        Node& sender = nodes_.at(tx.sender);
        trace_.record(now_, sender.scope(), "tx_line", false);
        for (auto& [id, other] : nodes_) {
            if (id != tx.sender)
                trace_.record(now_, other.scope(), "carrier_sense",
                              carrier_sense(id, now_));
        }
        trace_.record(now_, sender.scope(), "transmit_complete", true);
        feed(sender, StimulusEvent{ev::TransmitComplete{}});

        if (tx.corrupted) return;  // collided frames reach nobody

        Frame frame = decode(tx.bits.to_bytes());
        for (auto& [id, node] : nodes_) {
            if (id == tx.sender) continue;
            if (frame.addr1 && node.cfg.mac == *frame.addr1) {
                if (!node.cfg.silent) deliver_frame(node, frame);
            } else {
                // overheard: virtual carrier sense from the Duration/ID
                node.nav = update_nav(node.nav, frame.did, now_);
                trace_.record(now_, node.scope(), "nav_reg",
                              uint64_t(node.nav.remaining(now_)));
            }
        }
    }

    void deliver_frame(Node& n, const Frame& frame) {
        switch (frame.kind) {
            case FrameKind::Rts:
                n.peer = *frame.addr2;
                trace_.record(now_, n.scope(), "rec_rts", true);
                feed(n, StimulusEvent{ev::RecRts{*frame.addr2}});
                break;
            case FrameKind::Cts:
                trace_.record(now_, n.scope(), "rec_cts", true);
                feed(n, StimulusEvent{ev::RecCts{}});
                break;
            case FrameKind::Data:
                n.peer = *frame.addr2;
                trace_.record(now_, n.scope(), "rec_data", true);
                feed(n, StimulusEvent{ev::RecData{frame}});
                break;
            case FrameKind::Ack:
                trace_.record(now_, n.scope(), "rec_ack", true);
                feed(n, StimulusEvent{ev::RecAck{}});
                break;
            default:
                break;  // ps-poll/cfp-end/mgmt carry no transmitter stimulus
        }
    }

    void on_timeout(Node& n, const Event& e) {
        if (e.gen != n.timeout_gen) return;
        bool fits = (e.timeout == TimeoutKind::CtsTimeout &&
                     n.st.phase == TxState::Phase::WaitCts) ||
                    (e.timeout == TimeoutKind::AckTimeout &&
                     n.st.phase == TxState::Phase::WaitAck);
        if (!fits) return;
        feed(n, StimulusEvent{ev::Timeout{e.timeout}});
    }

    // --- FSM plumbing ----------------------------------------------------

    void feed(Node& n, const StimulusEvent& event) {
        TxState before = n.st;
        TransitionResult r = handle_event(n.st, event);
        if (r.unexpected) return;  // logged by omission; state unchanged
        n.st = r.state;
        if ((before.phase == TxState::Phase::WaitCts ||
             before.phase == TxState::Phase::WaitAck) &&
            n.st.phase != before.phase)
            n.timeout_gen++;  // wait satisfied or abandoned
        for (const ActionSignal& a : r.actions) apply_action(n, a);
        finalize_if_terminal(n);
    }

    void apply_action(Node& n, const ActionSignal& a) {
        switch (a.kind) {
            case ActionSignal::Kind::EnBuildFrame: do_build(n, *a.subtype); break;
            case ActionSignal::Kind::EnMedium: do_medium(n, AccessMode::Initial); break;
            case ActionSignal::Kind::EnRetry: do_retry(n); break;
            case ActionSignal::Kind::Transmitted: do_transmit(n); break;
            case ActionSignal::Kind::ResetAll: do_reset_signals(n); break;
        }
    }

    void do_build(Node& n, SubtypeCode code) {
        trace_.record(now_, n.scope(), "en_buildframe", true);
        trace_.record(now_, n.scope(), "frame_subtype", subtype_bit_string(code));
        FrameKind kind = classify(code);
        BufferDescriptor buf;
        buf.ra = n.peer;
        buf.ta = n.cfg.mac;
        if (kind == FrameKind::Data) {
            buf.da = n.peer;
            buf.sa = n.cfg.mac;
            buf.payload = n.payload;
        }
        MeshParams mesh;
        mesh.mesh_seq = n.mesh_seq;
        BuildResult built = build_frame(kind, buf, n.nav.reg(now_), n.seqstate, {},
                                        n.cfg.role, mesh);
        if (kind == FrameKind::Data) n.mesh_seq++;
        n.seqstate = built.next_state;
        n.built = std::move(built.frame);
        trace_.record(now_, n.scope(), "frame_done", true);
        feed(n, StimulusEvent{ev::FrameDone{}});
    }

    void do_medium(Node& n, AccessMode mode) {
        trace_.record(now_, n.scope(), "en_medium", true);
        // responses follow after SIFS, fresh contention after DIFS
        bool responder = n.built && (n.built->kind == FrameKind::Cts ||
                                     n.built->kind == FrameKind::Ack);
        uint64_t ifs = responder ? medium_.sifs_us : medium_.difs_us;
        schedule(now_ + ifs, n.cfg.id, EventKind::MediumCheck, n.op_gen,
                 std::nullopt, mode);
    }

    void do_retry(Node& n) {
        trace_.record(now_, n.scope(), "en_retry", true);
        schedule(now_ + medium_.difs_us, n.cfg.id, EventKind::MediumCheck, n.op_gen,
                 std::nullopt, AccessMode::Retry);
    }

    uint64_t airtime_us(size_t bits) const {
        return (bits * 1'000'000 + medium_.bitrate_bps - 1) / medium_.bitrate_bps;
    }

    void do_transmit(Node& n) {
        trace_.record(now_, n.scope(), "transmitted", true);
        trace_.record(now_, n.scope(), "tx_line", true);
        Transmission tx;
        tx.sender = n.cfg.id;
        tx.bits = serialize_tx(*n.built);
        tx.start_us = now_;
        tx.end_us = now_ + airtime_us(tx.bits.length());
        for (int sender : corrupt_overlapping(active_, tx))
            nodes_.at(sender).counters.collisions++;
        if (tx.corrupted) n.counters.collisions++;
        for (auto& [id, other] : nodes_) {
            if (id != n.cfg.id)
                trace_.record(now_, other.scope(), "carrier_sense", true);
        }
        schedule(tx.end_us, n.cfg.id, EventKind::TxEnd, n.op_gen);
        active_.push_back(std::move(tx));
    }

    void do_reset_signals(Node& n) {
        for (const char* sig :
             {"msdurdy", "rec_data", "rec_cts", "rec_rts", "rec_ack",
              "en_buildframe", "frame_done", "en_medium", "access_granted",
              "transmitted", "transmit_complete", "en_retry", "en_backoff",
              "start_count"})
            trace_.record(now_, n.scope(), sig, false);
        schedule_wait_timeout(n);
    }

    // Entering a wait state arms the corresponding timeout: twice the
    // SIFS-plus-response-airtime the handshake would need.
    void schedule_wait_timeout(Node& n) {
        uint64_t resp_air = airtime_us(14 * 8);  // CTS and ACK are 14 bytes
        uint64_t span = 2 * (medium_.sifs_us + resp_air);
        if (n.st.phase == TxState::Phase::WaitCts) {
            schedule(now_ + span, n.cfg.id, EventKind::TimeoutFire, ++n.timeout_gen,
                     std::nullopt, AccessMode::Initial, TimeoutKind::CtsTimeout);
        } else if (n.st.phase == TxState::Phase::WaitAck) {
            schedule(now_ + span, n.cfg.id, EventKind::TimeoutFire, ++n.timeout_gen,
                     std::nullopt, AccessMode::Initial, TimeoutKind::AckTimeout);
        }
    }

    void finalize_if_terminal(Node& n) {
        if (n.st.phase == TxState::Phase::Done) {
            if (n.is_initiator) n.counters.delivered++;
        } else if (n.st.phase == TxState::Phase::Failed) {
            if (n.is_initiator) n.counters.failed++;
        } else {
            return;
        }
        n.st = reset(n.st);
        n.rc.reset();
        n.built.reset();
        n.payload.clear();
        n.is_initiator = false;
        n.op_gen++;
        n.timeout_gen++;
        if (!n.backlog.empty()) {
            TrafficItem next = n.backlog.front();
            n.backlog.pop_front();
            n.counters.offered--;  // re-offered via the arrival path below
            schedule(now_, n.cfg.id, EventKind::TrafficArrival, 0, std::move(next));
        }
    }

    MediumParams medium_;
    BackoffParams backoff_;
    uint64_t horizon_us_;
    uint64_t seed_;
    uint64_t now_ = 0;
    uint64_t next_seq_ = 0;
    std::map<int, Node> nodes_;
    std::vector<Transmission> active_;
    std::priority_queue<Event, std::vector<Event>, EventOrder> queue_;
    Trace trace_;
};

inline SimReport run(std::vector<NodeConfig> configs, MediumParams medium,
                     BackoffParams backoff, unsigned retry_threshold,
                     uint64_t seed, uint64_t horizon_us) {
    Simulator sim(std::move(configs), medium, backoff, retry_threshold, seed,
                  horizon_us);
    return sim.run();
}

}  // namespace meshmac
