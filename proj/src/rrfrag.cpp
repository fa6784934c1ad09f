#include "arrf/rrfrag.hpp"

namespace arrf {

std::uint16_t fnv16(std::span<const std::uint8_t> bytes) {
    std::uint32_t h = 0x811c9dc5u;
    for (std::uint8_t b : bytes) {
        h ^= b;
        h *= 16777619u;
    }
    return static_cast<std::uint16_t>((h >> 16) ^ (h & 0xFFFFu));
}

Bytes encode_rrfrag(const RrFrag& frag, std::uint16_t type_code) {
    Bytes out;
    out.reserve(13 + frag.fragdata.size());
    out.push_back(0);  // root name
    detail::put_u16(out, type_code);
    detail::put_u16(out, frag.rrid);
    detail::put_u32(out, frag.curidx);
    detail::put_u16(out, frag.fragsize);
    detail::put_u16(out, frag.rrsize);
    out.insert(out.end(), frag.fragdata.begin(), frag.fragdata.end());
    return out;
}

RrFrag decode_rrfrag(std::span<const std::uint8_t> wire, std::uint16_t type_code,
                     bool query_context) {
    if (wire.size() < 13) throw MalformedRrFrag("shorter than the 13-byte RRFRAG minimum");
    if (wire[0] != 0) throw MalformedRrFrag("name is not root");
    auto u16 = [&](std::size_t at) {
        return static_cast<std::uint16_t>(wire[at] << 8 | wire[at + 1]);
    };
    if (u16(1) != type_code) throw MalformedRrFrag("type code mismatch");

    RrFrag frag;
    frag.rrid = u16(3);
    frag.curidx = static_cast<std::uint32_t>(wire[5]) << 24 |
                  static_cast<std::uint32_t>(wire[6]) << 16 |
                  static_cast<std::uint32_t>(wire[7]) << 8 | static_cast<std::uint32_t>(wire[8]);
    frag.fragsize = u16(9);
    frag.rrsize = u16(11);
    if (frag.fragsize < 2) throw MalformedRrFrag("fragsize below 2");
    if (!query_context) {
        const std::size_t datalen = frag.fragsize - 2u;
        if (wire.size() < 13 + datalen) throw MalformedRrFrag("fragdata underrun");
        frag.fragdata.assign(wire.begin() + 13, wire.begin() + 13 + datalen);
    }
    return frag;
}

std::uint16_t assign_rrid(std::span<const std::uint8_t> canonical_bytes,
                          const std::function<bool(std::uint16_t)>& occupied) {
    std::uint16_t rrid = fnv16(canonical_bytes);
    for (unsigned probes = 0; probes < 65536; ++probes) {
        if (!occupied(rrid)) return rrid;
        ++rrid;  // wraps mod 2^16
    }
    throw std::runtime_error("rrid space exhausted");
}

}  // namespace arrf
