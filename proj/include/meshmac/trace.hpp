#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace meshmac {

struct UnknownSignalError : std::invalid_argument {
    explicit UnknownSignalError(const std::string& name)
        : std::invalid_argument("signal '" + name + "' is not in the registry") {}
};

// The fixed signal vocabulary; everything the transmitter, the
// allocation control and the medium can toggle.
inline const std::set<std::string>& signal_registry() {
    static const std::set<std::string> names = {
        "msdurdy",        "rec_data",      "rec_cts",       "rec_rts",
        "rec_ack",        "en_buildframe", "frame_subtype", "frame_done",
        "en_medium",      "access_granted", "transmitted",  "transmit_complete",
        "en_retry",       "en_backoff",    "start_count",   "backoff_val",
        "carrier_sense",  "nav_reg",       "tx_line",
    };
    return names;
}

// One value change: (time, scope, signal, new value). Values are kept
// in canonical text form: "0"/"1" for bits, decimal for vectors,
// bit strings or labels as given.
struct TraceRecord {
    uint64_t time_us = 0;
    std::string scope;
    std::string signal;
    std::string value;

    bool operator==(const TraceRecord&) const = default;
};

class Trace {
public:
    // Trace metadata lines, emitted into the export header (rng name,
    // seed, scenario id...). Order preserved.
    std::vector<std::pair<std::string, std::string>> metadata;

    void record(uint64_t time_us, std::string_view scope, std::string_view signal,
                std::string_view value) {
        std::string sig(signal);
        if (!signal_registry().count(sig)) throw UnknownSignalError(sig);
        std::string key = std::string(scope) + "." + sig;
        auto it = last_value_.find(key);
        if (it != last_value_.end() && it->second == value) return;  // edge-triggered
        last_value_[key] = std::string(value);
        records_.push_back({time_us, std::string(scope), std::move(sig),
                            std::string(value)});
    }

    void record(uint64_t t, std::string_view scope, std::string_view signal, bool v) {
        record(t, scope, signal, std::string_view(v ? "1" : "0"));
    }
    // const char* would otherwise decay to the bool overload
    void record(uint64_t t, std::string_view scope, std::string_view signal,
                const char* v) {
        record(t, scope, signal, std::string_view(v));
    }
    void record(uint64_t t, std::string_view scope, std::string_view signal,
                uint64_t v) {
        record(t, scope, signal, std::to_string(v));
    }

    const std::vector<TraceRecord>& records() const { return records_; }
    size_t size() const { return records_.size(); }

    // Last stored value of a signal in a scope, or empty if never set.
    std::string last(std::string_view scope, std::string_view signal) const {
        auto it = last_value_.find(std::string(scope) + "." + std::string(signal));
        return it == last_value_.end() ? std::string() : it->second;
    }

private:
    std::vector<TraceRecord> records_;
    std::map<std::string, std::string> last_value_;
};

// Value-change text export. Grammar:
//   $timescale 1us $end
//   $meta <key> <value> $end            (zero or more)
//   $signals
//   <scope>.<signal>                    (declaration order = first appearance)
//   $end
//   #<time>
//   <scope>.<signal> <value>
// Deterministic and diffable; identical traces export byte-identically.
inline std::string export_waveform(const Trace& trace) {
    std::ostringstream out;
    out << "$timescale 1us $end\n";
    for (const auto& [k, v] : trace.metadata)
        out << "$meta " << k << " " << v << " $end\n";
    out << "$signals\n";
    std::set<std::string> declared;
    for (const TraceRecord& r : trace.records()) {
        std::string name = r.scope + "." + r.signal;
        if (declared.insert(name).second) out << name << "\n";
    }
    out << "$end\n";
    uint64_t current = UINT64_MAX;
    for (const TraceRecord& r : trace.records()) {
        if (r.time_us != current) {
            current = r.time_us;
            out << "#" << current << "\n";
        }
        out << r.scope << "." << r.signal << " " << r.value << "\n";
    }
    return out.str();
}

inline Trace parse_waveform(const std::string& text) {
    Trace t;
    std::istringstream in(text);
    std::string line;
    uint64_t current = 0;
    bool in_signals = false;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line == "$signals") {
            in_signals = true;
            continue;
        }
        if (line == "$end") {
            in_signals = false;
            continue;
        }
        if (line.rfind("$timescale", 0) == 0) continue;
        if (line.rfind("$meta ", 0) == 0) {
            std::istringstream ls(line.substr(6));
            std::string key, value, end;
            ls >> key >> value >> end;
            t.metadata.emplace_back(key, value);
            continue;
        }
        if (in_signals) continue;  // declarations are implied by the changes
        if (line[0] == '#') {
            current = std::stoull(line.substr(1));
            continue;
        }
        size_t sp = line.find(' ');
        if (sp == std::string::npos)
            throw std::invalid_argument("malformed change line: " + line);
        std::string name = line.substr(0, sp);
        std::string value = line.substr(sp + 1);
        size_t dot = name.rfind('.');
        if (dot == std::string::npos)
            throw std::invalid_argument("malformed signal name: " + name);
        t.record(current, name.substr(0, dot), name.substr(dot + 1), value);
    }
    return t;
}

// True iff the named signals each have a record with the given value in
// the given scope, in the listed relative order (subsequence match).
// Values default to rising edges ("1").
struct SignalEdge {
    std::string signal;
    std::string value = "1";
};

inline bool assert_order(const Trace& trace, std::string_view scope,
                         const std::vector<SignalEdge>& edges) {
    size_t want = 0;
    for (const TraceRecord& r : trace.records()) {
        if (want == edges.size()) break;
        if (r.scope == scope && r.signal == edges[want].signal &&
            r.value == edges[want].value)
            ++want;
    }
    return want == edges.size();
}

inline bool assert_order(const Trace& trace, std::string_view scope,
                         const std::vector<std::string>& rising_signals) {
    std::vector<SignalEdge> edges;
    edges.reserve(rising_signals.size());
    for (const std::string& s : rising_signals) edges.push_back({s, "1"});
    return assert_order(trace, scope, edges);
}

}  // namespace meshmac
