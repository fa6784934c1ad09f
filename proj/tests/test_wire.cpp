#include <doctest.h>

#include "arrf/wire.hpp"
#include "testutil.hpp"

using namespace arrf;

namespace {

// The RFC 1035 layout of a one-question A query for example.com, written out
// field by field.
Bytes golden_a_query() {
    Bytes b = {
        0x12, 0x34,              // id
        0x01, 0x00,              // flags: RD
        0x00, 0x01,              // qdcount
        0x00, 0x00,              // ancount
        0x00, 0x00,              // nscount
        0x00, 0x00,              // arcount
        0x07, 'e', 'x', 'a', 'm', 'p', 'l', 'e',
        0x03, 'c', 'o', 'm',
        0x00,                    // root terminator
        0x00, 0x01,              // qtype A
        0x00, 0x01,              // qclass IN
    };
    return b;
}

}  // namespace

TEST_CASE("header-only message parses to empty sections") {
    Bytes b(12, 0);
    DnsMessage msg = parse_message(b);
    CHECK(msg.header.id == 0);
    CHECK(msg.questions.empty());
    CHECK(msg.answers.empty());
    CHECK(msg.authority.empty());
    CHECK(msg.additional.empty());
    CHECK(serialize_message(msg) == b);
    CHECK(encoded_size(msg) == 12);
}

TEST_CASE("golden A query round trips") {
    Bytes golden = golden_a_query();
    DnsMessage msg = parse_message(golden);
    CHECK(msg.header.id == 0x1234);
    CHECK(msg.questions.size() == 1);
    CHECK(msg.questions[0].qtype == kTypeA);
    CHECK(msg.questions[0].qclass == kClassIn);
    CHECK(msg.questions[0].qname.to_string() == "example.com.");
    CHECK(serialize_message(msg) == golden);
    CHECK(encoded_size(msg) == golden.size());
}

TEST_CASE("truncated input rejected") {
    Bytes b(11, 0);
    CHECK_THROWS_AS(parse_message(b), MalformedMessage);
}

TEST_CASE("count larger than available records rejected") {
    Bytes b(12, 0);
    b[5] = 1;  // qdcount=1 with no question bytes
    CHECK_THROWS_AS(parse_message(b), MalformedMessage);
}

TEST_CASE("trailing bytes rejected") {
    Bytes b(13, 0);
    CHECK_THROWS_AS(parse_message(b), MalformedMessage);
}

TEST_CASE("one-record message length is fixed fields plus name plus rdata") {
    DnsMessage msg;
    msg.header.set_qr(true);
    ResourceRecord rr;
    rr.name = DnsName::from_string("a.b.");
    rr.rrtype = kTypeA;
    rr.rdata = {1, 2, 3, 4};
    msg.answers.push_back(rr);
    // 12 header + (1+1+1+1+1) name + 2+2+4+2 fixed + 4 rdata
    CHECK(encoded_size(msg) == 12 + 5 + 10 + 4);
    CHECK(serialize_message(msg).size() == encoded_size(msg));
}

TEST_CASE("adding an empty RRFRAG grows a message by exactly 13 bytes") {
    DnsMessage msg;
    msg.header.set_qr(true);
    std::size_t before = encoded_size(msg);
    msg.answers.push_back(RrFrag::chunk(7, 0, 100, {}));
    CHECK(encoded_size(msg) - before == 13);
}

TEST_CASE("compression pointers expand to canonical names") {
    Bytes b = golden_a_query();
    b[2] |= 0x80;  // QR: response
    b[7] = 1;      // ancount=1
    // answer: name = pointer to offset 12, type A, class IN, ttl 60, rdata 1.2.3.4
    Bytes answer = {0xC0, 0x0C, 0x00, 0x01, 0x00, 0x01, 0x00, 0x00,
                    0x00, 0x3C, 0x00, 0x04, 1,    2,    3,    4};
    b.insert(b.end(), answer.begin(), answer.end());

    DnsMessage msg = parse_message(b);
    const auto& rr = std::get<ResourceRecord>(msg.answers[0]);
    CHECK(rr.name.to_string() == "example.com.");
    CHECK(rr.rdata == Bytes{1, 2, 3, 4});

    // Uncompressed re-serialization parses back to the same structure.
    Bytes out = serialize_message(msg);
    CHECK(out.size() > b.size());
    CHECK(parse_message(out) == msg);
}

TEST_CASE("pointer loops and forward pointers are rejected") {
    Bytes b = golden_a_query();
    b[12] = 0xC0;  // qname becomes a pointer to itself
    b[13] = 0x0C;
    b.resize(12 + 2 + 4);
    CHECK_THROWS_AS(parse_message(b), MalformedMessage);
}

TEST_CASE("label over 63 bytes is rejected") {
    Bytes b(12, 0);
    b[5] = 1;
    b.push_back(0x40);  // 64-byte label
    b.insert(b.end(), 64, 'x');
    b.push_back(0);
    b.push_back(0);
    b.push_back(1);
    b.push_back(0);
    b.push_back(1);
    CHECK_THROWS_AS(parse_message(b), MalformedMessage);
}

TEST_CASE("OPT outside the additional section is rejected") {
    DnsMessage msg;
    msg.header.set_qr(true);
    msg.answers.push_back(OptRecord{});
    CHECK_THROWS_AS(serialize_message(msg), MalformedMessage);
    msg.answers.clear();
    msg.additional.push_back(OptRecord{});
    msg.additional.push_back(OptRecord{});
    CHECK_THROWS_AS(serialize_message(msg), MalformedMessage);
}

TEST_CASE("oversize message rejected at serialization") {
    DnsMessage msg;
    msg.header.set_qr(true);
    for (int i = 0; i < 2; ++i) {
        ResourceRecord rr;
        rr.name = DnsName::from_string("big.");
        rr.rrtype = kTypeRrsig;
        rr.rdata = Bytes(40000, 0xAA);
        msg.answers.push_back(std::move(rr));
    }
    CHECK_THROWS_AS(serialize_message(msg), OversizeMessage);
}

TEST_CASE("property: randomized messages survive serialize/parse byte-identically") {
    testutil::Rng rng(0xC0FFEE);
    for (int i = 0; i < 1000; ++i) {
        DnsMessage msg = testutil::random_response(rng, rng.range(30, 4000));
        Bytes wire = serialize_message(msg);
        CHECK(wire.size() == encoded_size(msg));
        DnsMessage back = parse_message(wire);
        REQUIRE(back == msg);
        CHECK(serialize_message(back) == wire);
    }
}

TEST_CASE("query-context RRFRAG descriptors carry no fragdata on the wire") {
    DnsMessage q;
    q.header.id = 9;
    Question question;
    question.qname = DnsName::root();
    question.qtype = kDefaultRrfragType;
    q.questions.push_back(question);
    q.additional.push_back(RrFrag::request(3, 100, 900, 400));

    Bytes wire = serialize_message(q);
    CHECK(wire.size() == 12 + 5 + 13);
    DnsMessage back = parse_message(wire);
    const auto& frag = std::get<RrFrag>(back.additional[0]);
    CHECK(frag.rrid == 3);
    CHECK(frag.curidx == 100);
    CHECK(frag.fragsize == 400);  // requested size, not payload
    CHECK(frag.rrsize == 900);
    CHECK(frag.fragdata.empty());
}
