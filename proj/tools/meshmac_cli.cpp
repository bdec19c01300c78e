// Batch front door: frame encode/decode, scenario runs, trace export
// and the golden conformance suite.
//
// Exit codes: 0 success, 1 conformance failure, 2 usage, 3 config, 4 I/O.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "meshmac/meshmac.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConformance = 1;
constexpr int kExitUsage = 2;
constexpr int kExitConfig = 3;
constexpr int kExitIo = 4;

using nlohmann::json;
using namespace meshmac;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::ios_base::failure("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::ios_base::failure("cannot open " + path + " for writing");
    out << content;
    if (!out) throw std::ios_base::failure("write to " + path + " failed");
}

std::optional<FrameKind> kind_from_name(const std::string& name) {
    static const std::map<std::string, FrameKind> kinds = {
        {"data", FrameKind::Data},
        {"ack", FrameKind::Ack},
        {"cts", FrameKind::Cts},
        {"rts", FrameKind::Rts},
        {"ps-poll", FrameKind::PsPoll},
        {"cfp-end", FrameKind::CfpEnd},
        {"mgmt", FrameKind::MgmtGeneric},
        {"mgmt-multihop", FrameKind::MgmtMultihopAction},
    };
    auto it = kinds.find(name);
    if (it == kinds.end()) return std::nullopt;
    return it->second;
}

struct EncodeArgs {
    std::string kind;
    std::string ra, ta, da, sa, bssid;
    std::string payload_hex;
    std::string role = "mesh-point";
    unsigned nav = 0;
    unsigned seq = 0;
    bool retry = false;
    bool more_data = false;
    bool json_out = false;
};

int cmd_encode(const EncodeArgs& args) {
    auto kind = kind_from_name(args.kind);
    if (!kind) {
        std::cerr << "error: unknown frame kind '" << args.kind << "'\n";
        return kExitUsage;
    }
    auto mac_arg = [](const std::string& s,
                      const char* name) -> std::optional<MacAddress> {
        if (s.empty()) return std::nullopt;
        auto m = MacAddress::parse(s);
        if (!m)
            throw std::invalid_argument(std::string("bad MAC for --") + name + ": " + s);
        return m;
    };
    try {
        BufferDescriptor buf;
        buf.ra = mac_arg(args.ra, "ra");
        buf.ta = mac_arg(args.ta, "ta");
        buf.da = mac_arg(args.da, "da");
        buf.sa = mac_arg(args.sa, "sa");
        buf.bssid = mac_arg(args.bssid, "bssid");
        buf.payload = from_hex(args.payload_hex);
        StationRole role = detail::parse_role(args.role);
        FrameFlags flags;
        flags.retry = args.retry;
        flags.more_data = args.more_data;
        SequenceState seq;
        seq.seq_counter = uint16_t(args.seq & 0x0FFF);
        BuildResult built = build_frame(*kind, buf, NavRegister{uint16_t(args.nav)},
                                        seq, flags, role);
        std::string hex = to_hex(encode(built.frame));
        if (args.json_out) {
            json out = {{"kind", args.kind},
                        {"bytes", encode(built.frame).size()},
                        {"hex", hex}};
            std::cout << out.dump() << "\n";
        } else {
            std::cout << hex << "\n";
        }
        return kExitOk;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
}

json frame_to_json(const Frame& f) {
    json out;
    out["kind"] = frame_kind_name(f.kind);
    out["fch"] = {{"packed", f.fch.packed()},
                  {"subtype_code", subtype_bit_string(f.fch.six_bit_code())},
                  {"retry", f.fch.retry},
                  {"more_fragments", f.fch.more_fragments}};
    out["did"] = f.did;
    auto put_addr = [&](const char* name, const std::optional<MacAddress>& a) {
        if (a) out[name] = a->to_string();
    };
    put_addr("addr1", f.addr1);
    put_addr("addr2", f.addr2);
    put_addr("addr3", f.addr3);
    put_addr("addr4", f.addr4);
    if (f.seq_ctl)
        out["seq_ctl"] = {{"seq", f.seq_ctl->seq_number()},
                          {"frag", f.seq_ctl->fragment_number()}};
    if (f.mesh_header)
        out["mesh_header"] = {{"flags", f.mesh_header->mesh_flags},
                              {"ttl", f.mesh_header->ttl},
                              {"mesh_seq", f.mesh_header->mesh_seq}};
    out["body_hex"] = to_hex(f.body);
    out["fcs"] = f.fcs;
    return out;
}

int cmd_decode(const std::string& hex, bool json_out) {
    try {
        std::vector<uint8_t> bytes = from_hex(hex);
        Frame f = decode(bytes);
        json out = frame_to_json(f);
        if (json_out) {
            std::cout << out.dump() << "\n";
        } else {
            std::cout << out.dump(2) << "\n";
        }
        return kExitOk;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
}

int cmd_run(const std::string& scenario_path, const std::string& out_dir,
            std::optional<uint64_t> seed_override, bool json_out) {
    std::string text;
    try {
        text = read_file(scenario_path);
    } catch (const std::ios_base::failure& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    }
    SimReport report;
    try {
        Scenario sc = parse_scenario(text);
        if (seed_override) sc.seed = *seed_override;
        report = make_simulator(sc).run();
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
    json report_json = report_to_json(report);
    try {
        if (!out_dir.empty()) {
            std::filesystem::create_directories(out_dir);
            write_file(out_dir + "/report.json", report_json.dump(2) + "\n");
            write_file(out_dir + "/trace.txt", export_waveform(report.trace));
            write_file(out_dir + "/trace.json", trace_to_json(report.trace).dump() + "\n");
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    }
    if (json_out)
        std::cout << report_json.dump() << "\n";
    else
        std::cout << report_json.dump(2) << "\n";
    return kExitOk;
}

int cmd_trace(const std::string& path, bool json_out) {
    try {
        std::string text = read_file(path);
        Trace t;
        if (!text.empty() && text[0] == '{')
            t = trace_from_json(json::parse(text));
        else
            t = parse_waveform(text);
        if (json_out)
            std::cout << trace_to_json(t).dump() << "\n";
        else
            std::cout << export_waveform(t);
        return kExitOk;
    } catch (const std::ios_base::failure& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
}

// --- conformance suite ---------------------------------------------------

struct ConformCase {
    std::string name;
    bool passed;
    std::string detail;
};

void check(std::vector<ConformCase>& cases, const std::string& name, bool ok,
           const std::string& detail = "") {
    cases.push_back({name, ok, detail});
}

Scenario two_node_scenario(bool silent_responder, uint64_t seed) {
    Scenario sc;
    sc.seed = seed;
    sc.horizon_us = 1'000'000;
    NodeConfig a;
    a.id = 0;
    a.mac = *MacAddress::parse("02:00:00:00:00:01");
    a.traffic = {{0, 1, {0xde, 0xad, 0xbe, 0xef}}};
    NodeConfig b;
    b.id = 1;
    b.mac = *MacAddress::parse("02:00:00:00:00:02");
    b.silent = silent_responder;
    sc.nodes = {a, b};
    return sc;
}

int cmd_conform(unsigned threshold, bool json_out) {
    std::vector<ConformCase> cases;

    // Subtype constants and bijectivity
    {
        bool ok = subtype_code(FrameKind::Ack).code == 0b101011 &&
                  subtype_code(FrameKind::Data).code == 0b010000 &&
                  subtype_code(FrameKind::Cts).code == 0b010011 &&
                  subtype_code(FrameKind::Rts).code == 0b101101 &&
                  subtype_code(FrameKind::PsPoll).code == 0b100101 &&
                  subtype_code(FrameKind::CfpEnd).code == 0b010110;
        for (FrameKind k : {FrameKind::Ack, FrameKind::Data, FrameKind::Cts,
                            FrameKind::Rts, FrameKind::PsPoll, FrameKind::CfpEnd})
            ok = ok && classify(subtype_code(k)) == k;
        check(cases, "subtype constants", ok);
    }

    // FSM handshake orderings
    {
        Scenario sc = two_node_scenario(false, 7);
        sc.retry_threshold = threshold;
        SimReport report = make_simulator(sc).run();
        const std::vector<std::string> handshake = {
            "en_buildframe", "frame_done", "en_medium", "access_granted",
            "transmitted",   "transmit_complete"};
        bool ok = true;
        // initiator: msdurdy path then rec_cts path
        std::vector<std::string> initiator = {"msdurdy"};
        initiator.insert(initiator.end(), handshake.begin(), handshake.end());
        initiator.push_back("rec_cts");
        initiator.insert(initiator.end(), handshake.begin(), handshake.end());
        initiator.push_back("rec_ack");
        ok = ok && assert_order(report.trace, "node0", initiator);
        // responder: rec_rts path then rec_data path
        std::vector<std::string> responder = {"rec_rts"};
        responder.insert(responder.end(), handshake.begin(), handshake.end());
        responder.push_back("rec_data");
        responder.insert(responder.end(), handshake.begin(), handshake.end());
        ok = ok && assert_order(report.trace, "node1", responder);
        check(cases, "handshake signal order", ok);

        bool delivered = report.nodes.at(0).delivered == 1 &&
                         report.nodes.at(0).retries == 0;
        check(cases, "clean exchange delivers", delivered);
    }

    // Missing ACK/CTS raises en_retry; threshold ends in failure
    {
        Scenario sc = two_node_scenario(true, 7);
        sc.retry_threshold = threshold;
        SimReport report = make_simulator(sc).run();
        bool retry_raised = assert_order(report.trace, "node0",
                                         std::vector<std::string>{"en_retry"});
        bool counts = report.nodes.at(0).retries == 10 &&
                      report.nodes.at(0).failed == 1;
        check(cases, "missing response raises en_retry", retry_raised);
        check(cases, "retry threshold exhausts at 10",
              counts,
              "retries=" + std::to_string(report.nodes.at(0).retries) +
                  " failed=" + std::to_string(report.nodes.at(0).failed));
    }

    // Duration/ID rules, exhaustive over the register range
    {
        bool ok = true;
        for (uint32_t nav = 0; nav <= 0xFFFF && ok; ++nav) {
            NavRegister r{uint16_t(nav)};
            uint16_t pspoll = compute_did(FrameKind::PsPoll, r);
            ok = ok && (pspoll & 0b11) == 0b11 && (pspoll >> 2) == (nav >> 2);
            ok = ok && compute_did(FrameKind::CfpEnd, r) == 1;
            for (FrameKind k : {FrameKind::Data, FrameKind::Ack, FrameKind::Cts,
                                FrameKind::Rts, FrameKind::MgmtGeneric}) {
                uint16_t v = compute_did(k, r);
                ok = ok && (v & 1) == 0 && (v >> 1) == (nav >> 1);
            }
        }
        check(cases, "duration/id rules", ok);
    }

    // Collision avoidance: busy block, retry limit, slot-exact grant
    {
        BackoffParams bp;
        Splitmix64 rng(11);
        // (a) carrier busy: access stays un-granted
        RetryCounter rc{0, threshold};
        AccessResult res =
            request_access(AccessMode::Initial, NavRegister{0}, true, rc, bp, rng);
        bool a_ok = res.outcome.kind != AccessOutcome::Kind::Granted;
        check(cases, "busy carrier blocks access", a_ok);
        // (b) attempts past the threshold: denied
        RetryCounter rc_b{threshold, threshold};
        AccessResult res_b =
            request_access(AccessMode::Initial, NavRegister{0}, true, rc_b, bp, rng);
        bool b_ok = res_b.outcome.kind == AccessOutcome::Kind::Denied &&
                    res_b.outcome.reason == DenyReason::RetryExhausted &&
                    threshold == kDefaultRetryThreshold;
        check(cases, "retry limit denies access", b_ok,
              "threshold=" + std::to_string(threshold));
        // (c) otherwise granted after exactly backoff_val slots
        bool c_ok = true;
        for (uint64_t seed = 0; seed < 64 && c_ok; ++seed) {
            Splitmix64 r(seed);
            RetryCounter rcc{0, threshold};
            AccessResult w =
                request_access(AccessMode::Initial, NavRegister{0}, true, rcc, bp, r);
            if (w.outcome.kind != AccessOutcome::Kind::Wait) {
                c_ok = false;
                break;
            }
            uint64_t grant = backoff_grant_time(w.outcome.backoff_slots,
                                                bp.slot_time_us, 1000,
                                                [](uint64_t) { return false; });
            c_ok = grant == 1000 + w.outcome.backoff_slots * bp.slot_time_us;
        }
        check(cases, "grant after exactly backoff_val slots", c_ok);
    }

    bool all = true;
    for (const ConformCase& c : cases) all = all && c.passed;

    if (json_out) {
        json out;
        out["pass"] = all;
        out["cases"] = json::array();
        for (const ConformCase& c : cases)
            out["cases"].push_back(
                {{"name", c.name}, {"pass", c.passed}, {"detail", c.detail}});
        std::cout << out.dump() << "\n";
    } else {
        for (const ConformCase& c : cases) {
            std::printf("%-40s %s%s%s\n", c.name.c_str(),
                        c.passed ? "PASS" : "FAIL", c.detail.empty() ? "" : "  ",
                        c.detail.c_str());
        }
        std::printf("%-40s %s\n", "overall", all ? "PASS" : "FAIL");
    }
    return all ? kExitOk : kExitConformance;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"802.11s mesh MAC transmitter model"};
    app.require_subcommand(1);

    EncodeArgs enc;
    CLI::App* encode_cmd = app.add_subcommand("encode", "build a frame, print hex");
    encode_cmd->add_option("kind", enc.kind,
                           "data|ack|cts|rts|ps-poll|cfp-end|mgmt|mgmt-multihop")
        ->required();
    encode_cmd->add_option("--ra", enc.ra, "receiver address");
    encode_cmd->add_option("--ta", enc.ta, "transmitter address");
    encode_cmd->add_option("--da", enc.da, "destination address");
    encode_cmd->add_option("--sa", enc.sa, "source address");
    encode_cmd->add_option("--bssid", enc.bssid, "BSSID for management frames");
    encode_cmd->add_option("--nav", enc.nav, "NAV register value (us)");
    encode_cmd->add_option("--seq", enc.seq, "sequence counter before this frame");
    encode_cmd->add_option("--payload-hex", enc.payload_hex, "body bytes as hex");
    encode_cmd->add_option("--role", enc.role, "mesh-point|ap|ibss");
    encode_cmd->add_flag("--retry", enc.retry, "set the retry bit");
    encode_cmd->add_flag("--more-data", enc.more_data, "set the more-data bit");
    encode_cmd->add_flag("--json", enc.json_out, "JSON output");

    std::string decode_hex;
    bool decode_json = false;
    CLI::App* decode_cmd = app.add_subcommand("decode", "parse a hex frame");
    decode_cmd->add_option("hex", decode_hex, "frame bytes as hex")->required();
    decode_cmd->add_flag("--json", decode_json, "JSON output");

    std::string run_scenario, run_out;
    bool run_json = false;
    std::optional<uint64_t> run_seed;
    uint64_t run_seed_value = 0;
    CLI::App* run_cmd = app.add_subcommand("run", "run a scenario file");
    run_cmd->add_option("scenario", run_scenario, "scenario JSON path")->required();
    run_cmd->add_option("--out", run_out, "output directory for report and traces");
    CLI::Option* seed_opt =
        run_cmd->add_option("--seed", run_seed_value, "override the scenario seed");
    run_cmd->add_flag("--json", run_json, "JSON output");

    std::string trace_path;
    bool trace_json = false;
    CLI::App* trace_cmd =
        app.add_subcommand("trace", "re-export a trace (waveform text or JSON)");
    trace_cmd->add_option("file", trace_path, "trace file")->required();
    trace_cmd->add_flag("--json", trace_json, "JSON output");

    unsigned conform_threshold = kDefaultRetryThreshold;
    bool conform_json = false;
    CLI::App* conform_cmd =
        app.add_subcommand("conform", "run the golden conformance suite");
    conform_cmd->add_option("--threshold", conform_threshold,
                            "retry threshold under test");
    conform_cmd->add_flag("--json", conform_json, "JSON output");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    if (*encode_cmd) return cmd_encode(enc);
    if (*decode_cmd) return cmd_decode(decode_hex, decode_json);
    if (*run_cmd) {
        if (seed_opt->count()) run_seed = run_seed_value;
        return cmd_run(run_scenario, run_out, run_seed, run_json);
    }
    if (*trace_cmd) return cmd_trace(trace_path, trace_json);
    if (*conform_cmd) return cmd_conform(conform_threshold, conform_json);
    return kExitUsage;
}
