#include <catch2/catch_amalgamated.hpp>

#include "meshmac/scenario.hpp"
#include "meshmac/sim.hpp"

using namespace meshmac;

namespace {

NodeConfig node(int id, const char* mac) {
    NodeConfig n;
    n.id = id;
    n.mac = *MacAddress::parse(mac);
    return n;
}

std::vector<NodeConfig> two_nodes(bool silent_responder = false) {
    NodeConfig a = node(0, "02:00:00:00:00:01");
    a.traffic = {{0, 1, {0xde, 0xad, 0xbe, 0xef}}};
    NodeConfig b = node(1, "02:00:00:00:00:02");
    b.silent = silent_responder;
    return {a, b};
}

const std::vector<std::string> kHandshake = {
    "en_buildframe", "frame_done",  "en_medium",
    "access_granted", "transmitted", "transmit_complete"};

}  // namespace

TEST_CASE("clean two-node exchange delivers one msdu without retries") {
    SimReport r = run(two_nodes(), {}, {}, 10, 42, 1'000'000);
    CHECK(r.nodes.at(0).offered == 1);
    CHECK(r.nodes.at(0).delivered == 1);
    CHECK(r.nodes.at(0).retries == 0);
    CHECK(r.nodes.at(0).failed == 0);
    CHECK(r.nodes.at(0).in_flight() == 0);
    CHECK(r.quiescent);

    // the event log shows the four frames in handshake order
    bool rts_cts_data_ack =
        assert_order(r.trace, "node0",
                     std::vector<SignalEdge>{{"frame_subtype", "101101"},
                                             {"rec_cts", "1"},
                                             {"frame_subtype", "010000"},
                                             {"rec_ack", "1"}}) &&
        assert_order(r.trace, "node1",
                     std::vector<SignalEdge>{{"rec_rts", "1"},
                                             {"frame_subtype", "010011"},
                                             {"rec_data", "1"},
                                             {"frame_subtype", "101011"}});
    CHECK(rts_cts_data_ack);
}

TEST_CASE("airtimes follow the frame lengths on the simulated clock") {
    // 1 Mb/s: rts 20 bytes -> 160 us starting after difs=50
    SimReport r = run(two_nodes(), {}, {}, 10, 1, 1'000'000);
    const auto& recs = r.trace.records();
    uint64_t rts_start = 0, rts_end = 0;
    for (const TraceRecord& rec : recs) {
        if (rec.scope == "node0" && rec.signal == "tx_line") {
            if (rec.value == "1" && rts_start == 0) rts_start = rec.time_us;
            else if (rec.value == "0" && rts_end == 0) rts_end = rec.time_us;
        }
    }
    CHECK(rts_start == 50);
    CHECK(rts_end == 210);
}

TEST_CASE("every handshake leg satisfies the signal ordering") {
    SimReport r = run(two_nodes(), {}, {}, 10, 7, 1'000'000);
    std::vector<std::string> initiator = {"msdurdy"};
    initiator.insert(initiator.end(), kHandshake.begin(), kHandshake.end());
    initiator.push_back("rec_cts");
    initiator.insert(initiator.end(), kHandshake.begin(), kHandshake.end());
    initiator.push_back("rec_ack");
    CHECK(assert_order(r.trace, "node0", initiator));

    std::vector<std::string> responder = {"rec_rts"};
    responder.insert(responder.end(), kHandshake.begin(), kHandshake.end());
    responder.push_back("rec_data");
    responder.insert(responder.end(), kHandshake.begin(), kHandshake.end());
    CHECK(assert_order(r.trace, "node1", responder));
}

TEST_CASE("silent responder: retries climb to the threshold then failure") {
    SimReport r = run(two_nodes(true), {}, {}, 10, 42, 10'000'000);
    CHECK(r.nodes.at(0).retries == 10);
    CHECK(r.nodes.at(0).failed == 1);
    CHECK(r.nodes.at(0).delivered == 0);
    CHECK(assert_order(r.trace, "node0", std::vector<std::string>{"en_retry"}));
    CHECK(r.nodes.at(0).in_flight() == 0);
}

TEST_CASE("identical scenario and seed give byte-identical traces") {
    SimReport a = run(two_nodes(), {}, {}, 10, 1234, 1'000'000);
    SimReport b = run(two_nodes(), {}, {}, 10, 1234, 1'000'000);
    CHECK(export_waveform(a.trace) == export_waveform(b.trace));

    SimReport c = run(two_nodes(true), {}, {}, 10, 1234, 10'000'000);
    SimReport d = run(two_nodes(true), {}, {}, 10, 1234, 10'000'000);
    CHECK(export_waveform(c.trace) == export_waveform(d.trace));
}

TEST_CASE("conservation of offered msdus") {
    NodeConfig a = node(0, "02:00:00:00:00:01");
    a.traffic = {{0, 1, {1}}, {100, 1, {2}}, {200, 1, {3}}};
    NodeConfig b = node(1, "02:00:00:00:00:02");
    SimReport r = run({a, b}, {}, {}, 10, 5, 10'000'000);
    const NodeCounters& c = r.nodes.at(0);
    CHECK(c.offered == 3);
    CHECK(c.delivered + c.failed + c.in_flight() == c.offered);
    CHECK(c.delivered == 3);

    // short horizon leaves work in flight but still conserves
    SimReport cut = run({a, b}, {}, {}, 10, 5, 300);
    const NodeCounters& cc = cut.nodes.at(0);
    CHECK(cc.offered == cc.delivered + cc.failed + cc.in_flight());
}

TEST_CASE("simulator flags configuration errors") {
    NodeConfig a = node(0, "02:00:00:00:00:01");
    NodeConfig dup = node(0, "02:00:00:00:00:02");
    CHECK_THROWS_AS(Simulator({a, dup}, {}, {}, 10, 1, 1000), ConfigError);

    NodeConfig late = node(0, "02:00:00:00:00:01");
    late.traffic = {{5000, 1, {}}};
    CHECK_THROWS_AS(Simulator({late, node(1, "02:00:00:00:00:02")}, {}, {}, 10, 1, 1000),
                    ConfigError);

    NodeConfig missing_dest = node(0, "02:00:00:00:00:01");
    missing_dest.traffic = {{0, 9, {}}};
    CHECK_THROWS_AS(
        Simulator({missing_dest, node(1, "02:00:00:00:00:02")}, {}, {}, 10, 1, 1000),
        ConfigError);

    BackoffParams bad;
    bad.cw_min = 16;  // not 2^k - 1
    CHECK_THROWS_AS(Simulator(two_nodes(), {}, bad, 10, 1, 1000), ConfigError);
}

TEST_CASE("step is a no-op once the queue drains") {
    NodeConfig lone = node(0, "02:00:00:00:00:01");
    Simulator sim({lone, node(1, "02:00:00:00:00:02")}, {}, {}, 10, 1, 1000);
    CHECK(sim.complete());  // no traffic, nothing to do
    CHECK(sim.step().empty());
    SimReport r = sim.run();
    CHECK(r.trace.size() == 0);
    CHECK(r.quiescent);
}

TEST_CASE("carrier sense sees neighbors but not the node itself") {
    Simulator sim(two_nodes(), {}, {}, 10, 3, 1'000'000);
    CHECK_FALSE(sim.carrier_sense(0, 0));
    // advance until the rts is in the air
    bool on_air = false;
    while (!sim.complete() && !on_air) {
        for (const TraceRecord& rec : sim.step())
            if (rec.signal == "tx_line" && rec.value == "1") on_air = true;
    }
    REQUIRE(on_air);
    CHECK(sim.carrier_sense(1, sim.now()));       // neighbor hears it
    CHECK_FALSE(sim.carrier_sense(0, sim.now())); // sender does not sense itself
}

TEST_CASE("overlapping transmissions corrupt each other") {
    std::vector<Transmission> active;
    Transmission first{0, {}, 100, 300, false};
    active.push_back(first);
    Transmission second{1, {}, 100, 260, false};
    auto newly = corrupt_overlapping(active, second);
    REQUIRE(newly == std::vector<int>{0});
    CHECK(active[0].corrupted);
    CHECK(second.corrupted);
    // a third one joining reports no new victims beyond itself
    Transmission third{2, {}, 120, 200, false};
    CHECK(corrupt_overlapping(active, third).empty());
    CHECK(third.corrupted);
}

TEST_CASE("trace metadata names the rng and seed") {
    SimReport r = run(two_nodes(), {}, {}, 10, 77, 1'000'000);
    bool has_rng = false, has_seed = false;
    for (auto& [k, v] : r.trace.metadata) {
        if (k == "rng" && v == "splitmix64") has_rng = true;
        if (k == "seed" && v == "77") has_seed = true;
    }
    CHECK(has_rng);
    CHECK(has_seed);
}

// --- scenario files ------------------------------------------------------

TEST_CASE("scenario parsing accepts the documented schema") {
    const char* text = R"({
        "seed": 9,
        "horizon_us": 500000,
        "medium": {"bitrate_bps": 2000000, "sifs_us": 5, "difs_us": 25, "slot_time_us": 10},
        "access": {"cw_min": 7, "cw_max": 255, "retry_threshold": 4},
        "nodes": [
            {"id": 0, "mac": "02:00:00:00:00:01",
             "traffic": [{"time_us": 0, "dest": 1, "payload_hex": "01 02"}]},
            {"id": 1, "mac": "02:00:00:00:00:02", "silent": true}
        ]
    })";
    Scenario sc = parse_scenario(text);
    CHECK(sc.seed == 9);
    CHECK(sc.horizon_us == 500000);
    CHECK(sc.medium.bitrate_bps == 2000000);
    CHECK(sc.backoff.cw_min == 7);
    CHECK(sc.backoff.slot_time_us == 10);
    CHECK(sc.retry_threshold == 4);
    REQUIRE(sc.nodes.size() == 2);
    CHECK(sc.nodes[0].traffic.size() == 1);
    CHECK(sc.nodes[0].traffic[0].payload == std::vector<uint8_t>{1, 2});
    CHECK(sc.nodes[1].silent);

    SimReport r = make_simulator(sc).run();
    CHECK(r.nodes.at(0).failed == 1);
    CHECK(r.nodes.at(0).retries == 4);
}

TEST_CASE("scenario parsing rejects unknown keys and bad values") {
    CHECK_THROWS_AS(parse_scenario("not json"), ConfigError);
    CHECK_THROWS_AS(parse_scenario(R"({"nodes": []})"), ConfigError);
    CHECK_THROWS_AS(parse_scenario(R"({"typo_key": 1,
        "nodes": [{"id":0,"mac":"02:00:00:00:00:01"}]})"),
                    ConfigError);
    CHECK_THROWS_AS(parse_scenario(R"({"nodes":
        [{"id":0,"mac":"02:00:00:00:00:01","color":"red"}]})"),
                    ConfigError);
    CHECK_THROWS_AS(parse_scenario(R"({"nodes":
        [{"id":0,"mac":"oops"}]})"),
                    ConfigError);
}

TEST_CASE("report json carries the per-node counters") {
    SimReport r = run(two_nodes(), {}, {}, 10, 1, 1'000'000);
    nlohmann::json j = report_to_json(r);
    REQUIRE(j.at("nodes").size() == 2);
    CHECK(j.at("nodes")[0].at("delivered") == 1);
    CHECK(j.at("quiescent") == true);

    nlohmann::json tj = trace_to_json(r.trace);
    Trace round = trace_from_json(tj);
    CHECK(round.records() == r.trace.records());
}
