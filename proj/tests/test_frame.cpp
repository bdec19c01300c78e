#include <catch2/catch_amalgamated.hpp>

#include "meshmac/frame.hpp"

using namespace meshmac;

TEST_CASE("subtype codes match the design constants") {
    CHECK(subtype_code(FrameKind::Ack).code == 0b101011);
    CHECK(subtype_code(FrameKind::Data).code == 0b010000);
    CHECK(subtype_code(FrameKind::Cts).code == 0b010011);
    CHECK(subtype_code(FrameKind::Rts).code == 0b101101);
    CHECK(subtype_code(FrameKind::PsPoll).code == 0b100101);
    CHECK(subtype_code(FrameKind::CfpEnd).code == 0b010110);
}

TEST_CASE("subtype_code and classify are inverse on supported kinds") {
    for (FrameKind k :
         {FrameKind::Data, FrameKind::Ack, FrameKind::Cts, FrameKind::Rts,
          FrameKind::PsPoll, FrameKind::CfpEnd, FrameKind::MgmtGeneric,
          FrameKind::MgmtMultihopAction}) {
        CHECK(classify(subtype_code(k)) == k);
    }
    // every defined code round-trips the other way
    for (uint8_t c = 0; c < 64; ++c) {
        try {
            FrameKind k = classify(SubtypeCode{c});
            CHECK(subtype_code(k).code == c);
        } catch (const UnknownSubtypeError&) {
            // undefined code; nothing to round-trip
        }
    }
}

TEST_CASE("classify rejects unknown codes") {
    CHECK_THROWS_AS(classify(SubtypeCode{0b111111}), UnknownSubtypeError);
    CHECK(classify(SubtypeCode{0b010011}) == FrameKind::Cts);
    CHECK(classify(SubtypeCode{0b100101}) == FrameKind::PsPoll);
}

TEST_CASE("reserved kinds have no subtype code") {
    CHECK_THROWS_AS(subtype_code(FrameKind::Rtx), ReservedKindError);
    CHECK_THROWS_AS(subtype_code(FrameKind::Ctx), ReservedKindError);
}

TEST_CASE("frame control field packs to 16 bits for every combination") {
    // exhaustive: 2 type bits, 4 subtype bits, 8 flags
    for (uint32_t v = 0; v < (1u << 14); ++v) {
        FrameControlField f;
        f.type = uint8_t(v & 0x3);
        f.subtype = uint8_t((v >> 2) & 0xF);
        f.to_ds = (v >> 6) & 1;
        f.from_ds = (v >> 7) & 1;
        f.more_fragments = (v >> 8) & 1;
        f.retry = (v >> 9) & 1;
        f.power_mgmt = (v >> 10) & 1;
        f.more_data = (v >> 11) & 1;
        f.wep = (v >> 12) & 1;
        f.order = (v >> 13) & 1;
        uint16_t packed = f.packed();
        CHECK((packed & 0b11) == 0);  // protocol version stays 00
        CHECK(FrameControlField::unpack(packed) == f);
    }
}

TEST_CASE("mesh header length covers 6 to 24 bytes") {
    CHECK(mesh_header_length(0b00) == 6);
    CHECK(mesh_header_length(0b01) == 12);
    CHECK(mesh_header_length(0b10) == 18);
    CHECK(mesh_header_length(0b11) == 24);
    for (int flags = 0; flags < 256; ++flags) {
        size_t len = mesh_header_length(uint8_t(flags));
        CHECK((len == 6 || len == 12 || len == 18 || len == 24));
    }
}

TEST_CASE("ttl decrement saturates at zero") {
    MeshHeader mh;
    mh.ttl = 1;
    mh.decrement_ttl();
    CHECK(mh.ttl == 0);
    mh.decrement_ttl();
    CHECK(mh.ttl == 0);
}

TEST_CASE("mac address special values and parsing") {
    CHECK(MacAddress::wildcard().to_string() == "ff:ff:ff:ff:ff:ff");
    CHECK(MacAddress::zero().to_string() == "00:00:00:00:00:00");
    auto m = MacAddress::parse("12:34:56:78:9a:bc");
    REQUIRE(m);
    CHECK(m->octets == std::array<uint8_t, 6>{0x12, 0x34, 0x56, 0x78, 0x9a, 0xbc});
    CHECK(m->to_string() == "12:34:56:78:9a:bc");
    CHECK_FALSE(MacAddress::parse("12:34:56:78:9a"));
    CHECK_FALSE(MacAddress::parse("12:34:56:78:9a:zz"));
}

TEST_CASE("frame shapes constrain addresses and optional fields") {
    CHECK(frame_shape(FrameKind::Data).address_count == 4);
    CHECK(frame_shape(FrameKind::Data).has_mesh_header);
    CHECK(frame_shape(FrameKind::MgmtGeneric).address_count == 3);
    CHECK_FALSE(frame_shape(FrameKind::MgmtGeneric).has_mesh_header);
    CHECK(frame_shape(FrameKind::Rts).address_count == 2);
    CHECK(frame_shape(FrameKind::Ack).address_count == 1);
    CHECK_FALSE(frame_shape(FrameKind::Ack).body_allowed);

    Frame ack;
    ack.kind = FrameKind::Ack;
    ack.addr1 = MacAddress::zero();
    CHECK(satisfies_shape(ack));
    ack.addr2 = MacAddress::zero();
    CHECK_FALSE(satisfies_shape(ack));
    ack.addr2.reset();
    ack.body = {1};
    CHECK_FALSE(satisfies_shape(ack));
}
