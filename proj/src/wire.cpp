#include "arrf/wire.hpp"

#include <cstring>

namespace arrf {

namespace {

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> buf) : buf_(buf) {}

    std::size_t pos() const { return pos_; }
    std::size_t remaining() const { return buf_.size() - pos_; }

    std::uint8_t u8() {
        need(1);
        return buf_[pos_++];
    }
    std::uint16_t u16() {
        need(2);
        std::uint16_t v = static_cast<std::uint16_t>(buf_[pos_] << 8 | buf_[pos_ + 1]);
        pos_ += 2;
        return v;
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = static_cast<std::uint32_t>(buf_[pos_]) << 24 |
                          static_cast<std::uint32_t>(buf_[pos_ + 1]) << 16 |
                          static_cast<std::uint32_t>(buf_[pos_ + 2]) << 8 |
                          static_cast<std::uint32_t>(buf_[pos_ + 3]);
        pos_ += 4;
        return v;
    }
    Bytes bytes(std::size_t n) {
        need(n);
        Bytes out(buf_.begin() + pos_, buf_.begin() + pos_ + n);
        pos_ += n;
        return out;
    }

    // Reads a possibly compressed name starting at the current position and
    // leaves the cursor after it. Pointers must target earlier offsets, which
    // bounds the walk.
    DnsName name() {
        DnsName out;
        std::size_t total = 0;
        std::size_t cursor = pos_;
        bool jumped = false;
        std::size_t lowest_target = buf_.size();
        for (;;) {
            if (cursor >= buf_.size()) throw MalformedMessage("name runs off the buffer");
            std::uint8_t len = buf_[cursor];
            if ((len & 0xC0) == 0xC0) {
                if (cursor + 1 >= buf_.size()) throw MalformedMessage("truncated name pointer");
                std::size_t target =
                    static_cast<std::size_t>(len & 0x3F) << 8 | buf_[cursor + 1];
                if (target >= lowest_target)
                    throw MalformedMessage("name pointer does not point backwards");
                lowest_target = target;
                if (!jumped) {
                    pos_ = cursor + 2;
                    jumped = true;
                }
                cursor = target;
                continue;
            }
            if (len & 0xC0) throw MalformedMessage("reserved label type");
            if (len == 0) {
                if (!jumped) pos_ = cursor + 1;
                return out;
            }
            if (len > kMaxLabelSize) throw MalformedMessage("label exceeds 63 bytes");
            if (cursor + 1 + len > buf_.size()) throw MalformedMessage("truncated label");
            total += 1 + len;
            if (total + 1 > kMaxNameSize) throw MalformedMessage("name exceeds 255 bytes");
            out.append_label(std::string_view(
                reinterpret_cast<const char*>(buf_.data() + cursor + 1), len));
            cursor += 1 + len;
        }
    }

private:
    void need(std::size_t n) const {
        if (pos_ + n > buf_.size()) throw MalformedMessage("truncated field");
    }

    std::span<const std::uint8_t> buf_;
    std::size_t pos_ = 0;
};

SectionEntry parse_entry(Reader& r, std::uint16_t rrfrag_type, bool query_context) {
    DnsName name = r.name();
    std::uint16_t type = r.u16();
    if (type == rrfrag_type) {
        if (!name.is_root()) throw MalformedRrFrag("RRFRAG name must be root");
        RrFrag frag;
        frag.rrid = r.u16();
        frag.curidx = r.u32();
        frag.fragsize = r.u16();
        if (frag.fragsize < 2) throw MalformedRrFrag("fragsize below 2");
        frag.rrsize = r.u16();
        if (!query_context) frag.fragdata = r.bytes(frag.fragsize - 2u);
        return frag;
    }
    if (type == kTypeOpt) {
        if (!name.is_root()) throw MalformedMessage("OPT name must be root");
        OptRecord opt;
        opt.udp_payload_size = r.u16();
        opt.ttl_fields = r.u32();
        std::uint16_t rdlen = r.u16();
        opt.rdata = r.bytes(rdlen);
        return opt;
    }
    ResourceRecord rr;
    rr.name = std::move(name);
    rr.rrtype = type;
    rr.rrclass = r.u16();
    rr.ttl = r.u32();
    std::uint16_t rdlen = r.u16();
    rr.rdata = r.bytes(rdlen);
    return rr;
}

void serialize_entry(Bytes& out, const SectionEntry& entry, std::uint16_t rrfrag_type,
                     bool query_context) {
    if (const auto* rr = std::get_if<ResourceRecord>(&entry)) {
        detail::put_name(out, rr->name);
        detail::put_u16(out, rr->rrtype);
        detail::put_u16(out, rr->rrclass);
        detail::put_u32(out, rr->ttl);
        detail::put_u16(out, static_cast<std::uint16_t>(rr->rdata.size()));
        out.insert(out.end(), rr->rdata.begin(), rr->rdata.end());
    } else if (const auto* frag = std::get_if<RrFrag>(&entry)) {
        out.push_back(0);  // root name
        detail::put_u16(out, rrfrag_type);
        detail::put_u16(out, frag->rrid);
        detail::put_u32(out, frag->curidx);
        detail::put_u16(out, frag->fragsize);
        detail::put_u16(out, frag->rrsize);
        if (!query_context)
            out.insert(out.end(), frag->fragdata.begin(), frag->fragdata.end());
    } else {
        const auto& opt = std::get<OptRecord>(entry);
        out.push_back(0);
        detail::put_u16(out, kTypeOpt);
        detail::put_u16(out, opt.udp_payload_size);
        detail::put_u32(out, opt.ttl_fields);
        detail::put_u16(out, static_cast<std::uint16_t>(opt.rdata.size()));
        out.insert(out.end(), opt.rdata.begin(), opt.rdata.end());
    }
}

std::size_t entry_size(const SectionEntry& entry) {
    if (const auto* rr = std::get_if<ResourceRecord>(&entry)) return rr->encoded_size();
    if (const auto* frag = std::get_if<RrFrag>(&entry)) return frag->encoded_size();
    return std::get<OptRecord>(entry).encoded_size();
}

void check_section_invariants(const DnsMessage& msg) {
    std::size_t opt_count = 0;
    for (const auto& e : msg.additional)
        if (std::holds_alternative<OptRecord>(e)) ++opt_count;
    if (opt_count > 1) throw MalformedMessage("more than one OPT record");
    for (const auto* section : {&msg.answers, &msg.authority})
        for (const auto& e : *section)
            if (std::holds_alternative<OptRecord>(e))
                throw MalformedMessage("OPT outside additional section");
}

}  // namespace

namespace detail {

void put_u16(Bytes& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

void put_u32(Bytes& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

void put_name(Bytes& out, const DnsName& name) {
    for (const auto& label : name.labels()) {
        out.push_back(static_cast<std::uint8_t>(label.size()));
        out.insert(out.end(), label.begin(), label.end());
    }
    out.push_back(0);
}

}  // namespace detail

DnsName DnsName::from_string(std::string_view dotted) {
    DnsName out;
    std::size_t start = 0;
    while (start < dotted.size()) {
        std::size_t dot = dotted.find('.', start);
        if (dot == std::string_view::npos) dot = dotted.size();
        if (dot > start) out.append_label(dotted.substr(start, dot - start));
        start = dot + 1;
    }
    return out;
}

void DnsName::append_label(std::string_view label) {
    if (label.empty() || label.size() > kMaxLabelSize)
        throw MalformedMessage("label length out of range");
    if (encoded_size() + 1 + label.size() > kMaxNameSize)
        throw MalformedMessage("name exceeds 255 bytes");
    labels_.emplace_back(label);
}

std::size_t DnsName::encoded_size() const {
    std::size_t n = 1;  // terminator
    for (const auto& label : labels_) n += 1 + label.size();
    return n;
}

std::string DnsName::to_string() const {
    if (labels_.empty()) return ".";
    std::string out;
    for (const auto& label : labels_) {
        for (char c : label) {
            if (c == '.' || c == '\\') out.push_back('\\');
            out.push_back(c);
        }
        out.push_back('.');
    }
    return out;
}

RrFrag RrFrag::chunk(std::uint16_t rrid, std::uint32_t curidx, std::uint16_t rrsize, Bytes data) {
    RrFrag f;
    f.rrid = rrid;
    f.curidx = curidx;
    f.rrsize = rrsize;
    f.fragsize = static_cast<std::uint16_t>(data.size() + 2);
    f.fragdata = std::move(data);
    return f;
}

RrFrag RrFrag::request(std::uint16_t rrid, std::uint32_t curidx, std::uint16_t rrsize,
                       std::uint16_t requested) {
    RrFrag f;
    f.rrid = rrid;
    f.curidx = curidx;
    f.rrsize = rrsize;
    f.fragsize = requested < 2 ? 2 : requested;
    return f;
}

const OptRecord* DnsMessage::opt() const {
    for (const auto& e : additional)
        if (const auto* o = std::get_if<OptRecord>(&e)) return o;
    return nullptr;
}

OptRecord* DnsMessage::opt() {
    for (auto& e : additional)
        if (auto* o = std::get_if<OptRecord>(&e)) return o;
    return nullptr;
}

DnsMessage parse_message(std::span<const std::uint8_t> wire, std::uint16_t rrfrag_type) {
    if (wire.size() < kHeaderSize) throw MalformedMessage("shorter than a DNS header");
    if (wire.size() > kMaxMessageSize) throw MalformedMessage("exceeds 65535 bytes");

    Reader r(wire);
    DnsMessage msg;
    msg.header.id = r.u16();
    msg.header.flags = r.u16();
    std::uint16_t qdcount = r.u16();
    std::uint16_t ancount = r.u16();
    std::uint16_t nscount = r.u16();
    std::uint16_t arcount = r.u16();

    const bool query_context = !msg.header.qr();

    for (std::uint16_t i = 0; i < qdcount; ++i) {
        Question q;
        q.qname = r.name();
        q.qtype = r.u16();
        q.qclass = r.u16();
        msg.questions.push_back(std::move(q));
    }
    for (std::uint16_t i = 0; i < ancount; ++i)
        msg.answers.push_back(parse_entry(r, rrfrag_type, query_context));
    for (std::uint16_t i = 0; i < nscount; ++i)
        msg.authority.push_back(parse_entry(r, rrfrag_type, query_context));
    for (std::uint16_t i = 0; i < arcount; ++i)
        msg.additional.push_back(parse_entry(r, rrfrag_type, query_context));

    if (r.remaining() != 0) throw MalformedMessage("trailing bytes after last record");
    check_section_invariants(msg);
    return msg;
}

Bytes serialize_message(const DnsMessage& msg, std::uint16_t rrfrag_type) {
    check_section_invariants(msg);
    const std::size_t total = encoded_size(msg);
    if (total > kMaxMessageSize) throw OversizeMessage("message exceeds 65535 bytes");

    Bytes out;
    out.reserve(total);
    detail::put_u16(out, msg.header.id);
    detail::put_u16(out, msg.header.flags);
    detail::put_u16(out, static_cast<std::uint16_t>(msg.questions.size()));
    detail::put_u16(out, static_cast<std::uint16_t>(msg.answers.size()));
    detail::put_u16(out, static_cast<std::uint16_t>(msg.authority.size()));
    detail::put_u16(out, static_cast<std::uint16_t>(msg.additional.size()));

    const bool query_context = !msg.header.qr();
    for (const auto& q : msg.questions) {
        detail::put_name(out, q.qname);
        detail::put_u16(out, q.qtype);
        detail::put_u16(out, q.qclass);
    }
    for (const auto& e : msg.answers) serialize_entry(out, e, rrfrag_type, query_context);
    for (const auto& e : msg.authority) serialize_entry(out, e, rrfrag_type, query_context);
    for (const auto& e : msg.additional) serialize_entry(out, e, rrfrag_type, query_context);
    return out;
}

std::size_t encoded_size(const DnsMessage& msg) {
    std::size_t n = kHeaderSize;
    const bool query_context = !msg.header.qr();
    for (const auto& q : msg.questions) n += q.encoded_size();
    for (const auto* section : {&msg.answers, &msg.authority, &msg.additional})
        for (const auto& e : *section) {
            std::size_t sz = entry_size(e);
            // query-context RRFRAGs carry no fragdata on the wire
            if (query_context && std::holds_alternative<RrFrag>(e)) sz = 13;
            n += sz;
        }
    return n;
}

bool contains_rrfrag(const DnsMessage& msg) {
    for (const auto* section : {&msg.answers, &msg.authority, &msg.additional})
        for (const auto& e : *section)
            if (std::holds_alternative<RrFrag>(e)) return true;
    return false;
}

}  // namespace arrf
