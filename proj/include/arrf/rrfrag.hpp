#pragma once

#include <cstdint>
#include <functional>
#include <span>

#include "arrf/wire.hpp"

namespace arrf {

// 16-bit xor-fold of the 32-bit FNV-1a hash.
std::uint16_t fnv16(std::span<const std::uint8_t> bytes);

// Encodes one RRFRAG as a generic resource record with the given type code.
// Output length is 13 + fragdata bytes.
Bytes encode_rrfrag(const RrFrag& frag, std::uint16_t type_code = kDefaultRrfragType);

// Inverse of encode_rrfrag. In query context no fragdata follows RRSIZE and
// FRAGSIZE is the requested size. Throws MalformedRrFrag on a non-root name,
// wrong type, fragsize < 2, or buffer underrun.
RrFrag decode_rrfrag(std::span<const std::uint8_t> wire,
                     std::uint16_t type_code = kDefaultRrfragType,
                     bool query_context = false);

// Deterministic RRID assignment: FNV-1a fold of the record's canonical
// bytes, linear probing (increment mod 2^16) past occupied ids.
// `occupied` must answer membership for candidate ids.
std::uint16_t assign_rrid(std::span<const std::uint8_t> canonical_bytes,
                          const std::function<bool(std::uint16_t)>& occupied);

}  // namespace arrf
