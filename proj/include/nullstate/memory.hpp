#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "nullstate/packet.hpp"

namespace nullstate::memory {

using packet::ContextCode;
using packet::InputFrame;
using packet::OutputFrame;

class clock_error : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

class nesting_error : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline constexpr int kMaxDepth = 3;

/// Where a working-set frame came from. Only the environment feed produces `sensor`.
enum class Provenance { sensor, internal };
std::string_view provenance_name(Provenance p) noexcept;

struct PerceivedFrame {
    InputFrame frame;
    Provenance provenance = Provenance::sensor;

    friend bool operator==(const PerceivedFrame&, const PerceivedFrame&) = default;
};

struct Event {
    InputFrame frame;
    OutputFrame out;

    friend bool operator==(const Event&, const Event&) = default;
};

/// [M, time, body]: a remembered event, or a memory of a memory.
struct MemoryRecord {
    ContextCode header = packet::contexts::memory;
    std::uint64_t time = 0;
    std::variant<Event, std::shared_ptr<const MemoryRecord>> body;

    int depth() const noexcept;
    /// The event at the bottom of the nesting.
    const Event& event() const noexcept;

    friend bool operator==(const MemoryRecord& a, const MemoryRecord& b);
};

using RecordId = std::size_t;

/// Masked match over the 19 packed bits of the embedded event frame.
struct Query {
    std::uint32_t pattern = 0;
    std::uint32_t mask = 0;

    /// Throws std::invalid_argument when pattern has bits outside mask or outside the frame.
    void check() const;
    bool matches(const InputFrame& frame) const noexcept;

    static Query everything() { return {}; }
    /// Events whose context names the same person as `who`.
    static Query person(ContextCode who);
    static Query exact(const InputFrame& frame);
};

class MemoryStore {
public:
    /// Appends a depth-1 record. Throws clock_error when time < clock().
    RecordId store_event(const InputFrame& frame, const OutputFrame& out, std::uint64_t time);
    /// Appends an already built record (e.g. a nested one). Same clock rule.
    RecordId insert(MemoryRecord record);

    /// Matching records, newest first.
    std::vector<MemoryRecord> recall(const Query& q) const;

    /// {M, time, record}. Throws nesting_error past kMaxDepth and clock_error when time < clock().
    MemoryRecord nest(RecordId id, std::uint64_t time) const;

    const MemoryRecord& at(RecordId id) const;
    std::size_t size() const noexcept { return records_.size(); }
    std::uint64_t clock() const noexcept { return clock_; }

    /// One record per line; lines starting with '#' are ignored by load.
    std::string dump() const;
    static MemoryStore load(std::string_view text);

private:
    void advance(std::uint64_t time);

    std::vector<MemoryRecord> records_;
    std::uint64_t clock_ = 0;
};

/// Wraps `inner` one more level. Throws nesting_error past kMaxDepth.
MemoryRecord nest(const MemoryRecord& inner, std::uint64_t time);

/// Removes one memory wrapper. Depth 1 yields the embedded frame with internal provenance.
std::variant<PerceivedFrame, MemoryRecord> strip_memory_tags(const MemoryRecord& record);

/// "[11010@2(10000,100,111,0010,0000->100,0000100)]", nested as "[11010@3[11010@2(...)]]".
std::string format_record(const MemoryRecord& record);
MemoryRecord parse_record(std::string_view text);

}  // namespace nullstate::memory
