#pragma once

#include <optional>
#include <variant>
#include <vector>

#include "meshmac/frame.hpp"
#include "meshmac/frame_builder.hpp"

namespace meshmac {

// --- stimulus events -----------------------------------------------------

enum class TimeoutKind { CtsTimeout, AckTimeout };

namespace ev {
struct Msdurdy {
    BufferDescriptor buf;
};
struct RecRts {
    MacAddress src;
};
struct RecCts {};
struct RecData {
    Frame frame;
};
struct RecAck {};
struct FrameDone {};
struct AccessGranted {
    bool granted = false;
};
struct TransmitComplete {};
struct Timeout {
    TimeoutKind kind;
};
}  // namespace ev

using StimulusEvent =
    std::variant<ev::Msdurdy, ev::RecRts, ev::RecCts, ev::RecData, ev::RecAck,
                 ev::FrameDone, ev::AccessGranted, ev::TransmitComplete, ev::Timeout>;

// --- action signals ------------------------------------------------------

struct ActionSignal {
    enum class Kind { EnBuildFrame, EnMedium, EnRetry, Transmitted, ResetAll };
    Kind kind;
    std::optional<SubtypeCode> subtype;  // present iff kind == EnBuildFrame

    static ActionSignal build_frame(SubtypeCode c) {
        return {Kind::EnBuildFrame, c};
    }
    static ActionSignal medium() { return {Kind::EnMedium, std::nullopt}; }
    static ActionSignal retry() { return {Kind::EnRetry, std::nullopt}; }
    static ActionSignal transmitted() { return {Kind::Transmitted, std::nullopt}; }
    static ActionSignal reset_all() { return {Kind::ResetAll, std::nullopt}; }

    bool operator==(const ActionSignal&) const = default;
};

// --- FSM state -----------------------------------------------------------

struct TxState {
    enum class Phase {
        Idle,
        Building,        // frame computing in progress
        WaitingMedium,   // allocation control active
        Transmitting,
        WaitCts,
        WaitAck,
        Failed,          // terminal until reset
        Done,            // terminal until reset
    };
    Phase phase = Phase::Idle;
    FrameKind kind = FrameKind::Data;  // frame in flight; meaningful for
                                       // Building/WaitingMedium/Transmitting

    auto operator<=>(const TxState&) const = default;
};

struct TransitionResult {
    TxState state;
    std::vector<ActionSignal> actions;
    bool unexpected = false;  // event outside the transition table; state kept
};

inline TxState reset(TxState) { return TxState{}; }

// The transmission-control transition table. Initiator path: MSDURDY
// builds an RTS, the CTS answer builds the data frame, a missing ACK
// raises en_retry. Responder paths: REC_RTS builds a CTS, REC_DATA
// builds the ACK. Every frame goes through the same handshake:
// en_buildframe -> frame_done -> en_medium -> access_granted ->
// transmitted -> transmit_complete -> reset.
inline TransitionResult handle_event(TxState st, const StimulusEvent& event) {
    using Phase = TxState::Phase;
    TransitionResult r;
    r.state = st;

    auto start_build = [&](FrameKind k) {
        r.state = TxState{Phase::Building, k};
        r.actions.push_back(ActionSignal::build_frame(subtype_code(k)));
    };
    auto unexpected = [&] { r.unexpected = true; };

    std::visit(
        [&](const auto& e) {
            using E = std::decay_t<decltype(e)>;
            if constexpr (std::is_same_v<E, ev::Msdurdy>) {
                if (st.phase == Phase::Idle) start_build(FrameKind::Rts);
                else unexpected();
            } else if constexpr (std::is_same_v<E, ev::RecRts>) {
                if (st.phase == Phase::Idle) start_build(FrameKind::Cts);
                else unexpected();  // incl. WaitCts: two-way contention rejected
            } else if constexpr (std::is_same_v<E, ev::RecCts>) {
                if (st.phase == Phase::WaitCts) start_build(FrameKind::Data);
                else unexpected();
            } else if constexpr (std::is_same_v<E, ev::RecData>) {
                if (st.phase == Phase::Idle) start_build(FrameKind::Ack);
                else unexpected();
            } else if constexpr (std::is_same_v<E, ev::RecAck>) {
                if (st.phase == Phase::WaitAck)
                    r.state = TxState{Phase::Done, st.kind};
                else unexpected();
            } else if constexpr (std::is_same_v<E, ev::FrameDone>) {
                if (st.phase == Phase::Building) {
                    r.state = TxState{Phase::WaitingMedium, st.kind};
                    r.actions.push_back(ActionSignal::medium());
                } else {
                    unexpected();
                }
            } else if constexpr (std::is_same_v<E, ev::AccessGranted>) {
                if (st.phase == Phase::WaitingMedium) {
                    if (e.granted) {
                        r.state = TxState{Phase::Transmitting, st.kind};
                        r.actions.push_back(ActionSignal::transmitted());
                    } else {
                        r.state = TxState{Phase::Failed, st.kind};
                    }
                } else {
                    unexpected();
                }
            } else if constexpr (std::is_same_v<E, ev::TransmitComplete>) {
                if (st.phase == Phase::Transmitting) {
                    r.actions.push_back(ActionSignal::reset_all());
                    switch (st.kind) {
                        case FrameKind::Rts:
                            r.state = TxState{Phase::WaitCts, st.kind};
                            break;
                        case FrameKind::Data:
                            r.state = TxState{Phase::WaitAck, st.kind};
                            break;
                        case FrameKind::Cts:
                            // responder now awaits REC_DATA from Idle
                            r.state = TxState{};
                            break;
                        case FrameKind::Ack:
                            r.state = TxState{Phase::Done, st.kind};
                            break;
                        default:
                            r.state = TxState{};
                            break;
                    }
                } else {
                    unexpected();
                }
            } else if constexpr (std::is_same_v<E, ev::Timeout>) {
                if (st.phase == Phase::WaitCts && e.kind == TimeoutKind::CtsTimeout) {
                    // missing CTS: retry medium access for the pending RTS
                    r.state = TxState{Phase::WaitingMedium, FrameKind::Rts};
                    r.actions.push_back(ActionSignal::retry());
                } else if (st.phase == Phase::WaitAck &&
                           e.kind == TimeoutKind::AckTimeout) {
                    r.state = TxState{Phase::WaitingMedium, FrameKind::Data};
                    r.actions.push_back(ActionSignal::retry());
                } else {
                    unexpected();
                }
            }
        },
        event);
    return r;
}

inline const char* phase_name(TxState::Phase p) {
    switch (p) {
        case TxState::Phase::Idle: return "idle";
        case TxState::Phase::Building: return "building";
        case TxState::Phase::WaitingMedium: return "waiting-medium";
        case TxState::Phase::Transmitting: return "transmitting";
        case TxState::Phase::WaitCts: return "wait-cts";
        case TxState::Phase::WaitAck: return "wait-ack";
        case TxState::Phase::Failed: return "failed";
        case TxState::Phase::Done: return "done";
    }
    return "?";
}

}  // namespace meshmac
