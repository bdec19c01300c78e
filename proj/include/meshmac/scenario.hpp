#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "meshmac/sim.hpp"

namespace meshmac {

// A scenario is one self-contained JSON document; no environment
// variables feed into a run. Unknown keys are rejected so that typos
// fail loudly instead of silently falling back to defaults.
struct Scenario {
    std::vector<NodeConfig> nodes;
    MediumParams medium;
    BackoffParams backoff;
    unsigned retry_threshold = kDefaultRetryThreshold;
    uint64_t seed = 0;
    uint64_t horizon_us = 1'000'000;
};

namespace detail {

inline void reject_unknown(const nlohmann::json& obj,
                           std::initializer_list<const char*> allowed,
                           const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool ok = false;
        for (const char* key : allowed)
            if (it.key() == key) ok = true;
        if (!ok)
            throw ConfigError("unknown key '" + it.key() + "' in " + where);
    }
}

inline StationRole parse_role(const std::string& s) {
    if (s == "mesh-point") return StationRole::SingleHopMeshPoint;
    if (s == "ap") return StationRole::ApAssociated;
    if (s == "ibss") return StationRole::IbssMember;
    throw ConfigError("unknown role '" + s + "'");
}

}  // namespace detail

inline Scenario parse_scenario(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("scenario is not valid JSON: ") + e.what());
    }
    try {
        detail::reject_unknown(
            j, {"seed", "horizon_us", "medium", "access", "nodes"}, "scenario");
        Scenario sc;
        if (j.contains("seed")) sc.seed = j.at("seed").get<uint64_t>();
        if (j.contains("horizon_us"))
            sc.horizon_us = j.at("horizon_us").get<uint64_t>();
        if (j.contains("medium")) {
            const auto& m = j.at("medium");
            detail::reject_unknown(m, {"bitrate_bps", "sifs_us", "difs_us", "slot_time_us"},
                                   "medium");
            if (m.contains("bitrate_bps"))
                sc.medium.bitrate_bps = m.at("bitrate_bps").get<uint64_t>();
            if (m.contains("sifs_us")) sc.medium.sifs_us = m.at("sifs_us").get<uint64_t>();
            if (m.contains("difs_us")) sc.medium.difs_us = m.at("difs_us").get<uint64_t>();
            if (m.contains("slot_time_us"))
                sc.backoff.slot_time_us = m.at("slot_time_us").get<uint64_t>();
        }
        if (j.contains("access")) {
            const auto& a = j.at("access");
            detail::reject_unknown(a, {"cw_min", "cw_max", "retry_threshold"}, "access");
            if (a.contains("cw_min")) sc.backoff.cw_min = a.at("cw_min").get<unsigned>();
            if (a.contains("cw_max")) sc.backoff.cw_max = a.at("cw_max").get<unsigned>();
            if (a.contains("retry_threshold"))
                sc.retry_threshold = a.at("retry_threshold").get<unsigned>();
        }
        if (!j.contains("nodes") || !j.at("nodes").is_array() || j.at("nodes").empty())
            throw ConfigError("scenario needs a non-empty 'nodes' array");
        for (const auto& nj : j.at("nodes")) {
            detail::reject_unknown(nj, {"id", "mac", "role", "traffic", "silent"},
                                   "node");
            NodeConfig n;
            n.id = nj.at("id").get<int>();
            auto mac = MacAddress::parse(nj.at("mac").get<std::string>());
            if (!mac)
                throw ConfigError("node " + std::to_string(n.id) + ": bad mac address");
            n.mac = *mac;
            if (nj.contains("role"))
                n.role = detail::parse_role(nj.at("role").get<std::string>());
            if (nj.contains("silent")) n.silent = nj.at("silent").get<bool>();
            if (nj.contains("traffic")) {
                for (const auto& tj : nj.at("traffic")) {
                    detail::reject_unknown(tj, {"time_us", "dest", "payload_hex"},
                                           "traffic item");
                    TrafficItem item;
                    item.time_us = tj.at("time_us").get<uint64_t>();
                    item.dest = tj.at("dest").get<int>();
                    if (tj.contains("payload_hex"))
                        item.payload = from_hex(tj.at("payload_hex").get<std::string>());
                    n.traffic.push_back(std::move(item));
                }
            }
            sc.nodes.push_back(std::move(n));
        }
        return sc;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed scenario: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("malformed scenario: ") + e.what());
    }
}

inline Simulator make_simulator(const Scenario& sc) {
    return Simulator(sc.nodes, sc.medium, sc.backoff, sc.retry_threshold, sc.seed,
                     sc.horizon_us);
}

// --- report / trace JSON -------------------------------------------------

inline nlohmann::json report_to_json(const SimReport& report) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& [id, c] : report.nodes) {
        nodes.push_back({{"id", id},
                         {"offered", c.offered},
                         {"delivered", c.delivered},
                         {"failed", c.failed},
                         {"retries", c.retries},
                         {"collisions", c.collisions},
                         {"in_flight", c.in_flight()}});
    }
    return {{"end_time_us", report.end_time_us},
            {"quiescent", report.quiescent},
            {"nodes", nodes}};
}

inline nlohmann::json trace_to_json(const Trace& trace) {
    nlohmann::json meta = nlohmann::json::object();
    for (const auto& [k, v] : trace.metadata) meta[k] = v;
    nlohmann::json records = nlohmann::json::array();
    for (const TraceRecord& r : trace.records())
        records.push_back({{"time_us", r.time_us},
                           {"scope", r.scope},
                           {"signal", r.signal},
                           {"value", r.value}});
    return {{"metadata", meta}, {"records", records}};
}

inline Trace trace_from_json(const nlohmann::json& j) {
    Trace t;
    if (j.contains("metadata"))
        for (auto it = j.at("metadata").begin(); it != j.at("metadata").end(); ++it)
            t.metadata.emplace_back(it.key(), it.value().get<std::string>());
    for (const auto& rj : j.at("records"))
        t.record(rj.at("time_us").get<uint64_t>(),
                 rj.at("scope").get<std::string>(),
                 rj.at("signal").get<std::string>(),
                 rj.at("value").get<std::string>());
    return t;
}

}  // namespace meshmac
