#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace nullstate::packet {

// Field widths of the tagged input packet, MSB first:
//   context(5) | verb(3) | func(3) | op1(4) | op2(4)
inline constexpr int kContextBits = 5;
inline constexpr int kVerbBits = 3;
inline constexpr int kFuncBits = 3;
inline constexpr int kOperandBits = 4;
inline constexpr int kInputBits = kContextBits + kVerbBits + kFuncBits + 2 * kOperandBits;  // 19

// Output packet: verb(3) | value(7)
inline constexpr int kValueBits = 7;
inline constexpr int kOutputBits = kVerbBits + kValueBits;  // 10
inline constexpr std::uint64_t kMaxValue = (1u << kValueBits) - 1;

inline constexpr std::uint8_t kMaxDigit = 9;

class codec_error : public std::runtime_error {
public:
    enum class kind {
        frame,            // wrong length, stray characters, missing source flag
        invalid_operand,  // operand > 9
        invalid_verb,
        invalid_function,
        spec,             // bad slice descriptor
        registry,
    };

    codec_error(kind k, const std::string& what) : std::runtime_error(what), kind_(k) {}
    kind code() const noexcept { return kind_; }

private:
    kind kind_;
};

/// 5-bit context header. Bit 4 (MSB) flags a present source, bit 3 flags a memory.
struct ContextCode {
    std::uint8_t bits = 0;

    constexpr bool source_present() const noexcept { return (bits & 0b10000) != 0; }
    constexpr bool memory_flag() const noexcept { return (bits & 0b01000) != 0; }
    constexpr bool reality() const noexcept { return source_present() && !memory_flag(); }

    friend constexpr bool operator==(ContextCode, ContextCode) = default;
    friend constexpr auto operator<=>(ContextCode, ContextCode) = default;
};

namespace contexts {
inline constexpr ContextCode alice_lab{0b10000};    // R,T_i,A,L
inline constexpr ContextCode alice_away{0b10101};   // R,T_i,A',L'
inline constexpr ContextCode bob{0b10110};          // R,T_i,B
inline constexpr ContextCode alice_photo{0b10100};  // R,T_i,A' (photograph)
inline constexpr ContextCode memory{0b11010};       // M,T_j
}  // namespace contexts

enum class Verb : std::uint8_t { say = 0b100, write = 0b110 };

enum class Func : std::uint8_t {
    add = 0b001,
    sub = 0b010,
    mul = 0b011,
    div = 0b101,
    square = 0b111,
};

inline constexpr Func kAllFuncs[] = {Func::add, Func::sub, Func::mul, Func::div, Func::square};
inline constexpr Verb kAllVerbs[] = {Verb::say, Verb::write};

bool is_valid_verb(std::uint64_t bits) noexcept;
bool is_valid_func(std::uint64_t bits) noexcept;
std::string_view verb_name(Verb v) noexcept;
std::string_view func_name(Func f) noexcept;
bool is_unary(Func f) noexcept;

struct InputFrame {
    ContextCode context;
    Verb verb = Verb::say;
    Func func = Func::square;
    std::uint8_t op1 = 0;
    std::uint8_t op2 = 0;  // zero for unary functions

    friend bool operator==(const InputFrame&, const InputFrame&) = default;
};

/// Candidate output. Fields are wide so that out-of-range results produced by a
/// mis-addressed function survive until validate_output rejects them.
struct OutputFrame {
    std::uint64_t verb = 0;
    std::uint64_t value = 0;

    friend bool operator==(const OutputFrame&, const OutputFrame&) = default;
};

enum class Malformation { bad_verb, overflow };

/// Total: every candidate is either accepted or rejected with the first failing reason.
std::optional<Malformation> validate_output(const OutputFrame& out) noexcept;
inline bool well_formed(const OutputFrame& out) noexcept { return !validate_output(out); }
std::string_view malformation_name(Malformation m) noexcept;

// --- field slicing ---------------------------------------------------------

enum class Field : std::uint8_t { context = 0, verb = 1, func = 2, op1 = 3, op2 = 4 };

int field_width(Field f) noexcept;
int field_offset(Field f) noexcept;  // bit offset from the LSB of the packed 19-bit frame

/// A selection of frame fields, concatenated in frame order.
class SliceSpec {
public:
    SliceSpec() = default;
    /// Fields must be listed in frame order without repeats.
    explicit SliceSpec(std::initializer_list<Field> fields);
    explicit SliceSpec(std::span<const Field> fields);

    /// Parses "context+verb", "context+func+op1", ...
    static SliceSpec parse(std::string_view text);

    bool contains(Field f) const noexcept { return (mask_ & (1u << static_cast<unsigned>(f))) != 0; }
    int width() const noexcept;
    bool empty() const noexcept { return mask_ == 0; }
    std::vector<Field> fields() const;
    std::string to_string() const;

    /// Bit offset of a contained field inside the slice key (from its LSB).
    int offset_in_slice(Field f) const;

    friend bool operator==(const SliceSpec&, const SliceSpec&) = default;

private:
    std::uint8_t mask_ = 0;
};

namespace slices {
inline const SliceSpec context_verb{Field::context, Field::verb};
inline const SliceSpec context_func_op1{Field::context, Field::func, Field::op1};
}  // namespace slices

std::uint32_t pack(const InputFrame& frame);
InputFrame unpack(std::uint32_t bits);

/// Unsigned value of the selected fields, MSB first.
std::uint64_t slice_key(const InputFrame& frame, const SliceSpec& spec);
std::uint64_t field_value(const InputFrame& frame, Field f) noexcept;

// --- serialization ---------------------------------------------------------

std::string to_bits(std::uint64_t value, int width);
std::uint64_t from_bits(std::string_view bits);

std::string encode_input(const InputFrame& frame);  // 19 chars of '0'/'1'
InputFrame decode_input(std::string_view bits);

std::string encode_output(const OutputFrame& out);  // 10 chars; throws unless well formed
OutputFrame decode_output(std::string_view bits);

/// "10000,100,111,0010,0000"
std::string format_input(const InputFrame& frame);
InputFrame parse_input(std::string_view text);
/// "100,0000100"
std::string format_output(const OutputFrame& out);
OutputFrame parse_output(std::string_view text);

/// Three bytes per frame: the 19 frame bits MSB first, then 5 zero bits.
std::vector<std::uint8_t> write_frames(std::span<const InputFrame> frames);
std::vector<InputFrame> read_frames(std::span<const std::uint8_t> bytes);

}  // namespace nullstate::packet
