#include <doctest.h>

#include <set>

#include "arrf/rrfrag.hpp"
#include "testutil.hpp"

using namespace arrf;

TEST_CASE("empty-fragdata RRFRAG encodes to 13 bytes starting with root") {
    RrFrag f = RrFrag::chunk(1, 0, 100, {});
    Bytes wire = encode_rrfrag(f);
    CHECK(wire.size() == 13);
    CHECK(wire[0] == 0x00);
    CHECK(decode_rrfrag(wire) == f);
}

TEST_CASE("field widths sum to 13 plus fragdata") {
    RrFrag f = RrFrag::chunk(5, 690, 702, Bytes(10, 0xAB));
    CHECK(f.fragsize == 12);
    Bytes wire = encode_rrfrag(f);
    CHECK(wire.size() == 23);
    CHECK(decode_rrfrag(wire) == f);
}

TEST_CASE("fragsize below 2 is malformed") {
    RrFrag f = RrFrag::chunk(1, 0, 100, {});
    Bytes wire = encode_rrfrag(f);
    wire[9] = 0;
    wire[10] = 1;  // fragsize = 1
    CHECK_THROWS_AS(decode_rrfrag(wire), MalformedRrFrag);
}

TEST_CASE("fragsize claiming more data than present is malformed") {
    RrFrag f = RrFrag::chunk(1, 0, 100, Bytes(5, 1));
    Bytes wire = encode_rrfrag(f);
    wire[10] = 10;  // fragsize=10 wants 8 trailing bytes, only 5 present
    CHECK_THROWS_AS(decode_rrfrag(wire), MalformedRrFrag);
}

TEST_CASE("non-root name is malformed") {
    Bytes wire = encode_rrfrag(RrFrag::chunk(1, 0, 100, {}));
    wire[0] = 1;
    CHECK_THROWS_AS(decode_rrfrag(wire), MalformedRrFrag);
}

TEST_CASE("wrong type code is malformed") {
    Bytes wire = encode_rrfrag(RrFrag::chunk(1, 0, 100, {}), 65280);
    CHECK_THROWS_AS(decode_rrfrag(wire, 65281), MalformedRrFrag);
}

TEST_CASE("query-context decode stops after RRSIZE") {
    RrFrag f = RrFrag::request(9, 400, 900, 512);
    Bytes wire = encode_rrfrag(f);
    CHECK(wire.size() == 13);
    RrFrag back = decode_rrfrag(wire, kDefaultRrfragType, /*query_context=*/true);
    CHECK(back == f);
    // Response-context decode of the same bytes underruns instead.
    CHECK_THROWS_AS(decode_rrfrag(wire), MalformedRrFrag);
}

TEST_CASE("property: encode/decode identity over random instances") {
    testutil::Rng rng(0x5EED);
    for (int i = 0; i < 1000; ++i) {
        Bytes data = rng.bytes(rng.range(0, 500));
        RrFrag f = RrFrag::chunk(static_cast<std::uint16_t>(rng.range(0, 0xFFFF)),
                                 static_cast<std::uint32_t>(rng.range(0, 100000)),
                                 static_cast<std::uint16_t>(rng.range(data.size(), 0xFFFF)),
                                 data);
        Bytes wire = encode_rrfrag(f);
        CHECK(wire.size() == 13 + data.size());
        CHECK(decode_rrfrag(wire) == f);
    }
}

TEST_CASE("fnv16 of the empty string folds the offset basis") {
    CHECK(fnv16({}) == 0x1cd9);
}

TEST_CASE("assign_rrid hashes, then probes linearly") {
    auto none = [](std::uint16_t) { return false; };
    CHECK(assign_rrid({}, none) == 0x1cd9);

    Bytes b = {1, 2, 3};
    std::uint16_t h = fnv16(b);
    std::set<std::uint16_t> occupied{h};
    auto in_set = [&](std::uint16_t id) { return occupied.count(id) != 0; };
    CHECK(assign_rrid(b, in_set) == static_cast<std::uint16_t>(h + 1));

    // Same bytes, same occupancy: same answer.
    CHECK(assign_rrid(b, in_set) == assign_rrid(b, in_set));
}

TEST_CASE("distinct records in one cache get distinct rrids") {
    ResponderCache cache;
    Bytes a = {1, 2, 3};
    Bytes b = {4, 5, 6};
    std::uint16_t ra = cache.intern(a);
    std::uint16_t rb = cache.intern(b);
    CHECK(ra != rb);
    // Re-interning identical bytes returns the same rrid.
    CHECK(cache.intern(a) == ra);
    CHECK(cache.intern(b) == rb);
}

TEST_CASE("cache evicts least recently used entries at capacity") {
    ResponderCache cache(2);
    std::uint16_t r1 = cache.intern({1});
    std::uint16_t r2 = cache.intern({2});
    CHECK(cache.get(r1).has_value());  // refresh r1; r2 becomes the victim
    std::uint16_t r3 = cache.intern({3});
    CHECK(cache.size() == 2);
    CHECK(cache.get(r1).has_value());
    CHECK_FALSE(cache.get(r2).has_value());
    CHECK(cache.get(r3).has_value());
}
