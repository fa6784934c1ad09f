#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "arrf/errors.hpp"

namespace arrf {

using Bytes = std::vector<std::uint8_t>;

inline constexpr std::uint16_t kTypeA = 1;
inline constexpr std::uint16_t kTypeNs = 2;
inline constexpr std::uint16_t kTypeSoa = 6;
inline constexpr std::uint16_t kTypeOpt = 41;
inline constexpr std::uint16_t kTypeRrsig = 46;
inline constexpr std::uint16_t kClassIn = 1;

// First value of the IANA private-use RR-type range; configurable everywhere
// it is consumed.
inline constexpr std::uint16_t kDefaultRrfragType = 65280;

inline constexpr std::size_t kHeaderSize = 12;
inline constexpr std::size_t kMaxMessageSize = 65535;
inline constexpr std::size_t kMaxNameSize = 255;
inline constexpr std::size_t kMaxLabelSize = 63;

enum Rcode : std::uint8_t {
    kRcodeNoError = 0,
    kRcodeFormErr = 1,
    kRcodeServFail = 2,
    kRcodeNxDomain = 3,
};

// A domain name as an explicit label sequence. Labels hold raw bytes; the
// wire form is always emitted uncompressed.
class DnsName {
public:
    DnsName() = default;

    // Parses presentation form ("example.com." or "example.com"); an empty
    // string or "." yields the root name.
    static DnsName from_string(std::string_view dotted);
    static DnsName root() { return DnsName{}; }

    void append_label(std::string_view label);

    bool is_root() const { return labels_.empty(); }
    const std::vector<std::string>& labels() const { return labels_; }

    // Length of the uncompressed wire encoding, terminator included.
    std::size_t encoded_size() const;
    std::string to_string() const;

    bool operator==(const DnsName&) const = default;

private:
    std::vector<std::string> labels_;
};

struct DnsHeader {
    std::uint16_t id = 0;
    std::uint16_t flags = 0;

    static constexpr std::uint16_t kQrMask = 0x8000;
    static constexpr std::uint16_t kTcMask = 0x0200;
    static constexpr std::uint16_t kRcodeMask = 0x000F;

    bool qr() const { return flags & kQrMask; }
    bool tc() const { return flags & kTcMask; }
    std::uint8_t rcode() const { return static_cast<std::uint8_t>(flags & kRcodeMask); }

    void set_qr(bool v) { flags = v ? (flags | kQrMask) : (flags & ~kQrMask); }
    void set_tc(bool v) { flags = v ? (flags | kTcMask) : (flags & ~kTcMask); }
    void set_rcode(std::uint8_t rc) {
        flags = static_cast<std::uint16_t>((flags & ~kRcodeMask) | (rc & kRcodeMask));
    }

    bool operator==(const DnsHeader&) const = default;
};

struct Question {
    DnsName qname;
    std::uint16_t qtype = 0;
    std::uint16_t qclass = kClassIn;

    std::size_t encoded_size() const { return qname.encoded_size() + 4; }
    bool operator==(const Question&) const = default;
};

struct ResourceRecord {
    DnsName name;
    std::uint16_t rrtype = 0;
    std::uint16_t rrclass = kClassIn;
    std::uint32_t ttl = 0;
    Bytes rdata;

    std::size_t encoded_size() const { return name.encoded_size() + 10 + rdata.size(); }
    bool operator==(const ResourceRecord&) const = default;
};

// EDNS(0) OPT pseudo-record. Never fragmented, never more than one per
// message, additional section only.
struct OptRecord {
    std::uint16_t udp_payload_size = 512;
    std::uint32_t ttl_fields = 0;  // extended rcode, version, DO bit, zeros
    Bytes rdata;

    std::size_t encoded_size() const { return 11 + rdata.size(); }
    bool operator==(const OptRecord&) const = default;
};

// The RRFRAG pseudo-record. On the wire it reuses the generic RR layout:
// root NAME, TYPE, RRID in the CLASS slot, CURIDX in the TTL slot, FRAGSIZE
// in the RDLENGTH slot, then RRSIZE and FRAGDATA as the RDATA body.
//
// FRAGSIZE is context dependent: in responses it equals fragdata length + 2
// (the two bytes being RRSIZE); in queries it is the fragment size the
// requester wants back and no fragdata bytes follow RRSIZE.
struct RrFrag {
    std::uint16_t rrid = 0;
    std::uint32_t curidx = 0;
    std::uint16_t fragsize = 2;
    std::uint16_t rrsize = 0;
    Bytes fragdata;

    // A response-context fragment carrying bytes of the original record.
    static RrFrag chunk(std::uint16_t rrid, std::uint32_t curidx, std::uint16_t rrsize,
                        Bytes data);
    // A query-context descriptor requesting `requested` bytes (fragdata + 2).
    static RrFrag request(std::uint16_t rrid, std::uint32_t curidx, std::uint16_t rrsize,
                          std::uint16_t requested);

    std::size_t encoded_size() const { return 13 + fragdata.size(); }
    bool operator==(const RrFrag&) const = default;
};

using SectionEntry = std::variant<ResourceRecord, RrFrag, OptRecord>;

struct DnsMessage {
    DnsHeader header;
    std::vector<Question> questions;
    std::vector<SectionEntry> answers;
    std::vector<SectionEntry> authority;
    std::vector<SectionEntry> additional;

    // First OPT in the additional section, if any.
    const OptRecord* opt() const;
    OptRecord* opt();

    bool operator==(const DnsMessage&) const = default;
};

// Parses a complete DNS message. Compression pointers in owner names are
// expanded; rdata is carried opaquely. Records whose type equals
// `rrfrag_type` decode as RrFrag, with query/response context taken from the
// header QR bit. Throws MalformedMessage / MalformedRrFrag.
DnsMessage parse_message(std::span<const std::uint8_t> wire,
                         std::uint16_t rrfrag_type = kDefaultRrfragType);

// Serializes with uncompressed names; section counts are derived from the
// section vectors. Throws OversizeMessage above 65535 bytes.
Bytes serialize_message(const DnsMessage& msg, std::uint16_t rrfrag_type = kDefaultRrfragType);

// Equals serialize_message(msg).size() without materializing the buffer.
std::size_t encoded_size(const DnsMessage& msg);

// True if any section entry is an RrFrag. Complete (reassembled) messages
// must never contain one; this is the audit hook for the never-cache rule.
bool contains_rrfrag(const DnsMessage& msg);

namespace detail {
void put_u16(Bytes& out, std::uint16_t v);
void put_u32(Bytes& out, std::uint32_t v);
void put_name(Bytes& out, const DnsName& name);
}  // namespace detail

}  // namespace arrf
