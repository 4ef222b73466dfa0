#include "nullstate/memory.hpp"

#include <charconv>
#include <sstream>

#include "nullstate/context_registry.hpp"

namespace nullstate::memory {

namespace {

constexpr int kContextShift = packet::kInputBits - packet::kContextBits;

std::uint64_t parse_u64(std::string_view text, std::string_view what) {
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
        throw packet::codec_error(packet::codec_error::kind::frame, "bad " + std::string(what) + " '" + std::string(text) + "'");
    }
    return v;
}

// Parses one bracketed record starting at text[pos]; advances pos past the closing bracket.
MemoryRecord parse_at(std::string_view text, std::size_t& pos, int depth) {
    auto fail = [&](const std::string& why) -> MemoryRecord {
        throw packet::codec_error(packet::codec_error::kind::frame, "memory record: " + why);
    };
    if (depth > kMaxDepth) throw nesting_error("memory record nested deeper than " + std::to_string(kMaxDepth));
    if (pos >= text.size() || text[pos] != '[') return fail("expected '['");
    const auto at = text.find('@', pos);
    if (at == std::string_view::npos) return fail("missing '@'");
    const auto header = text.substr(pos + 1, at - pos - 1);
    if (header.size() != static_cast<std::size_t>(packet::kContextBits)) return fail("bad header");
    MemoryRecord r;
    r.header = ContextCode{static_cast<std::uint8_t>(packet::from_bits(header))};
    if (r.header != packet::contexts::memory) return fail("header is not a memory tag");

    auto end_time = text.find_first_of("([", at + 1);
    if (end_time == std::string_view::npos) return fail("missing body");
    r.time = parse_u64(text.substr(at + 1, end_time - at - 1), "time");
    pos = end_time;
    if (text[pos] == '[') {
        r.body = std::make_shared<const MemoryRecord>(parse_at(text, pos, depth + 1));
    } else {
        const auto close = text.find(')', pos);
        if (close == std::string_view::npos) return fail("unterminated event");
        const auto body = text.substr(pos + 1, close - pos - 1);
        const auto arrow = body.find("->");
        if (arrow == std::string_view::npos) return fail("event without '->'");
        r.body = Event{packet::parse_input(body.substr(0, arrow)), packet::parse_output(body.substr(arrow + 2))};
        pos = close + 1;
    }
    if (pos >= text.size() || text[pos] != ']') return fail("expected ']'");
    ++pos;
    return r;
}

}  // namespace

std::string_view provenance_name(Provenance p) noexcept { return p == Provenance::sensor ? "sensor" : "internal"; }

int MemoryRecord::depth() const noexcept {
    int d = 1;
    for (const MemoryRecord* r = this; std::holds_alternative<std::shared_ptr<const MemoryRecord>>(r->body); ++d) {
        r = std::get<std::shared_ptr<const MemoryRecord>>(r->body).get();
    }
    return d;
}

const Event& MemoryRecord::event() const noexcept {
    const MemoryRecord* r = this;
    while (auto inner = std::get_if<std::shared_ptr<const MemoryRecord>>(&r->body)) r = inner->get();
    return std::get<Event>(r->body);
}

bool operator==(const MemoryRecord& a, const MemoryRecord& b) {
    if (a.header != b.header || a.time != b.time || a.body.index() != b.body.index()) return false;
    if (auto ea = std::get_if<Event>(&a.body)) return *ea == std::get<Event>(b.body);
    return *std::get<1>(a.body) == *std::get<1>(b.body);
}

void Query::check() const {
    if ((pattern & ~mask) != 0) throw std::invalid_argument("query pattern has bits outside its mask");
    if (mask >> packet::kInputBits) throw std::invalid_argument("query mask wider than a frame");
}

bool Query::matches(const InputFrame& frame) const noexcept { return (packet::pack(frame) & mask) == pattern; }

Query Query::person(ContextCode who) {
    const std::uint32_t ctx_mask = packet::ContextRegistry::reality_bits() | packet::ContextRegistry::person_bits();
    return {static_cast<std::uint32_t>(who.bits & ctx_mask) << kContextShift, ctx_mask << kContextShift};
}

Query Query::exact(const InputFrame& frame) { return {packet::pack(frame), (1u << packet::kInputBits) - 1}; }

void MemoryStore::advance(std::uint64_t time) {
    if (time < clock_) {
        throw clock_error("time " + std::to_string(time) + " precedes the store clock " + std::to_string(clock_));
    }
    clock_ = time;
}

RecordId MemoryStore::store_event(const InputFrame& frame, const OutputFrame& out, std::uint64_t time) {
    return insert(MemoryRecord{packet::contexts::memory, time, Event{frame, out}});
}

RecordId MemoryStore::insert(MemoryRecord record) {
    if (record.depth() > kMaxDepth) throw nesting_error("record deeper than " + std::to_string(kMaxDepth));
    advance(record.time);
    records_.push_back(std::move(record));
    return records_.size() - 1;
}

std::vector<MemoryRecord> MemoryStore::recall(const Query& q) const {
    q.check();
    std::vector<MemoryRecord> hits;
    for (auto it = records_.rbegin(); it != records_.rend(); ++it) {
        if (q.matches(it->event().frame)) hits.push_back(*it);
    }
    return hits;
}

MemoryRecord MemoryStore::nest(RecordId id, std::uint64_t time) const {
    if (time < clock_) {
        throw clock_error("time " + std::to_string(time) + " precedes the store clock " + std::to_string(clock_));
    }
    return memory::nest(at(id), time);
}

const MemoryRecord& MemoryStore::at(RecordId id) const {
    if (id >= records_.size()) throw std::out_of_range("no memory record " + std::to_string(id));
    return records_[id];
}

std::string MemoryStore::dump() const {
    std::string out;
    for (const auto& r : records_) out += format_record(r) + '\n';
    return out;
}

MemoryStore MemoryStore::load(std::string_view text) {
    MemoryStore store;
    std::istringstream in{std::string(text)};
    for (std::string line; std::getline(in, line);) {
        if (line.empty() || line.front() == '#') continue;
        store.insert(parse_record(line));
    }
    return store;
}

MemoryRecord nest(const MemoryRecord& inner, std::uint64_t time) {
    if (inner.depth() >= kMaxDepth) {
        throw nesting_error("cannot nest a depth-" + std::to_string(inner.depth()) + " record; the cap is " +
                            std::to_string(kMaxDepth));
    }
    return MemoryRecord{packet::contexts::memory, time, std::make_shared<const MemoryRecord>(inner)};
}

std::variant<PerceivedFrame, MemoryRecord> strip_memory_tags(const MemoryRecord& record) {
    if (auto e = std::get_if<Event>(&record.body)) return PerceivedFrame{e->frame, Provenance::internal};
    return *std::get<std::shared_ptr<const MemoryRecord>>(record.body);
}

std::string format_record(const MemoryRecord& r) {
    std::string s = "[" + packet::to_bits(r.header.bits, packet::kContextBits) + "@" + std::to_string(r.time);
    if (auto e = std::get_if<Event>(&r.body)) {
        s += "(" + packet::format_input(e->frame) + "->" + packet::format_output(e->out) + ")";
    } else {
        s += format_record(*std::get<std::shared_ptr<const MemoryRecord>>(r.body));
    }
    return s + "]";
}

MemoryRecord parse_record(std::string_view text) {
    std::size_t pos = 0;
    auto r = parse_at(text, pos, 1);
    if (pos != text.size()) {
        throw packet::codec_error(packet::codec_error::kind::frame, "trailing characters after memory record");
    }
    return r;
}

}  // namespace nullstate::memory
