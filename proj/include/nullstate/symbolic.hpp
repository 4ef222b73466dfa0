#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "nullstate/packet.hpp"

namespace nullstate::symbolic {

using packet::ContextCode;
using packet::Func;
using packet::InputFrame;
using packet::OutputFrame;
using packet::SliceSpec;
using packet::Verb;

/// Key outside the domain a learned map was trained on, or an undefined arithmetic result.
class domain_error : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

class config_error : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

// The two decimal maps a network can end up learning for the square lesson.
inline constexpr std::uint64_t kVerbKeyBase = 128;     // 10000,000
inline constexpr std::uint64_t kSquareKeyBase = 2160;  // 10000,111,0000

std::uint64_t f_verb(std::uint64_t key);    // key - 128
std::uint64_t f_square(std::uint64_t key);  // (key - 2160)^2
/// a op b; floor division; throws domain_error on division by zero.
std::int64_t f_arith(Func op, std::int64_t a, std::int64_t b);

/// Bit pattern over a slice of the frame. Bits where mask is 0 are don't-care.
struct FunctionName {
    std::uint64_t pattern = 0;
    std::uint64_t mask = 0;
    SliceSpec slice;

    /// Throws config_error when pattern has bits outside mask or either is wider than the slice.
    void check() const;
    bool matches(const InputFrame& frame) const;

    /// Mask restricted to the context field, as a 5-bit value (0 when the slice has no context).
    std::uint8_t context_mask() const;
    std::uint8_t context_pattern() const;
    FunctionName with_context(std::uint8_t mask, std::uint8_t pattern) const;

    friend bool operator==(const FunctionName&, const FunctionName&) = default;
};

enum class Kind { verb_map, square, add, sub, mul, div };

std::string_view kind_name(Kind k) noexcept;
Kind parse_kind(std::string_view name);
std::optional<Func> func_of(Kind k) noexcept;
Kind kind_of(Func f) noexcept;

struct LearnedFunction {
    FunctionName name;
    Kind kind = Kind::square;
    /// Fields the numeric map consumes. Operand fields (verb for a verb map) come last.
    SliceSpec input;
    /// Context the map's key offset was learned under; only matters when `input` covers the context.
    ContextCode trained_context = packet::contexts::alice_lab;
    /// The name may be satisfied by the context of a recalled memory frame.
    bool reads_memory = false;

    int arity() const noexcept;
    bool is_operator() const noexcept { return kind != Kind::verb_map; }
    /// Key value of the training frame with every operand field zeroed.
    std::uint64_t key_base() const;
    /// Applies the learned map to the frame's input slice. Throws domain_error.
    std::int64_t apply(const InputFrame& frame) const;
    /// Throws config_error when the slices cannot feed this kind of map.
    void check() const;

    friend bool operator==(const LearnedFunction&, const LearnedFunction&) = default;
};

/// Ordered dispatch table. Verb maps route the output verb; every other entry is a function.
class FunctionTable {
public:
    FunctionTable() = default;
    explicit FunctionTable(std::vector<LearnedFunction> entries);

    const std::vector<LearnedFunction>& entries() const noexcept { return entries_; }
    std::size_t function_count() const noexcept;
    /// Fraction of function entries whose name requires any person-distinguishing context bit.
    double person_dependent_fraction() const noexcept;

    /// One entry per line: kind pattern mask name-slice input-slice trained-context flags
    std::string serialize() const;
    static FunctionTable parse(std::string_view text);

    friend bool operator==(const FunctionTable&, const FunctionTable&) = default;

private:
    std::vector<LearnedFunction> entries_;
};

enum class NullReason { no_matching_name, malformed_output };
std::string_view null_reason_name(NullReason r) noexcept;

struct NullState {
    NullReason reason;
    std::optional<packet::Malformation> malformation;  // set when the output gate rejected a candidate
    std::optional<OutputFrame> candidate;
    std::string detail;
};

class DispatchResult {
public:
    DispatchResult(OutputFrame out) : value_(out) {}
    DispatchResult(NullState null) : value_(std::move(null)) {}

    bool is_output() const noexcept { return std::holds_alternative<OutputFrame>(value_); }
    bool is_null() const noexcept { return !is_output(); }
    const OutputFrame& output() const { return std::get<OutputFrame>(value_); }
    const NullState& null_state() const { return std::get<NullState>(value_); }

private:
    std::variant<OutputFrame, NullState> value_;
};

/// Routes a frame through the first matching verb map and the first matching function.
/// `recalled` holds frames embedded in memory packets currently visible to the machine;
/// only entries flagged reads_memory consult them. Never throws.
DispatchResult dispatch(const InputFrame& frame, const FunctionTable& table,
                        std::span<const InputFrame> recalled = {}) noexcept;

/// Context-free reference answer: same verb, direct arithmetic. nullopt when the result is
/// undefined or does not fit the output field.
std::optional<OutputFrame> oracle_answer(const InputFrame& frame);

struct TableProfile {
    int functions = 10;
    int person_dependent = 8;
    int photo_tolerant = 2;
    int location_dependent = 0;
    int memory_readable = 1;
};

inline constexpr int kMaxFunctions = 10;  // 2 verbs x 5 function codes

/// Function j is addressed by the (func, verb) pair j in func-major order. The first
/// `person_dependent` functions require Alice's person bits; the last `photo_tolerant` of those
/// leave the photograph bit as don't-care; the first `memory_readable` person-dependent,
/// photo-intolerant functions may read embedded memory frames; the first `location_dependent`
/// functions require location L.
FunctionTable build_table(const TableProfile& profile);

/// The two mappings of the square lesson: verb map keyed on context+verb, square keyed on
/// context+func+op1, both learned under 10000 and addressed by verb/func bits only.
FunctionTable square_lesson_table();

struct Probe {
    std::size_t entry;
    Verb verb;
    Func func;
    std::uint8_t op1;
    std::uint8_t op2;

    InputFrame frame(ContextCode context) const { return {context, verb, func, op1, op2}; }
};

inline constexpr std::uint64_t kProbeSeed = 0x5eed'0001;

/// Two probes per function entry: op1 drawn from 0-4 and from 5-9, op2 from the range that
/// keeps the reference answer defined.
std::vector<Probe> probe_suite(const FunctionTable& table, std::uint64_t seed = kProbeSeed);

struct Measurement {
    std::size_t probes = 0;
    std::size_t correct = 0;
    std::size_t null_states = 0;

    double functionality() const noexcept { return probes ? double(correct) / double(probes) : 0.0; }
    double null_fraction() const noexcept { return probes ? double(null_states) / double(probes) : 0.0; }
};

Measurement measure(const FunctionTable& table, ContextCode context, std::span<const InputFrame> recalled = {},
                    std::uint64_t seed = kProbeSeed);
double functionality(const FunctionTable& table, ContextCode context);

}  // namespace nullstate::symbolic
