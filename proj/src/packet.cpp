#include "nullstate/packet.hpp"

#include <algorithm>
#include <array>
#include <bit>

namespace nullstate::packet {

namespace {

constexpr std::array<int, 5> kWidths = {kContextBits, kVerbBits, kFuncBits, kOperandBits, kOperandBits};
constexpr std::array<std::string_view, 5> kFieldNames = {"context", "verb", "func", "op1", "op2"};

[[noreturn]] void fail(codec_error::kind k, const std::string& what) { throw codec_error(k, what); }

std::vector<std::string_view> split(std::string_view text, char sep) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    while (true) {
        auto pos = text.find(sep, start);
        parts.push_back(text.substr(start, pos == std::string_view::npos ? pos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return parts;
}

void check_operand(std::uint64_t v, std::string_view which) {
    if (v > kMaxDigit) {
        fail(codec_error::kind::invalid_operand,
             std::string(which) + " decodes to " + std::to_string(v) + ", expected a digit 0-9");
    }
}

}  // namespace

bool is_valid_verb(std::uint64_t bits) noexcept {
    return bits == static_cast<std::uint64_t>(Verb::say) || bits == static_cast<std::uint64_t>(Verb::write);
}

bool is_valid_func(std::uint64_t bits) noexcept {
    return std::ranges::any_of(kAllFuncs, [&](Func f) { return static_cast<std::uint64_t>(f) == bits; });
}

std::string_view verb_name(Verb v) noexcept { return v == Verb::say ? "say" : "write"; }

std::string_view func_name(Func f) noexcept {
    switch (f) {
        case Func::add: return "+";
        case Func::sub: return "-";
        case Func::mul: return "*";
        case Func::div: return "/";
        case Func::square: return "n^2";
    }
    return "?";
}

bool is_unary(Func f) noexcept { return f == Func::square; }

std::optional<Malformation> validate_output(const OutputFrame& out) noexcept {
    if (!is_valid_verb(out.verb)) return Malformation::bad_verb;
    if (out.value > kMaxValue) return Malformation::overflow;
    return std::nullopt;
}

std::string_view malformation_name(Malformation m) noexcept {
    return m == Malformation::bad_verb ? "bad-verb" : "overflow";
}

int field_width(Field f) noexcept { return kWidths[static_cast<std::size_t>(f)]; }

int field_offset(Field f) noexcept {
    int offset = 0;
    for (auto i = static_cast<std::size_t>(f) + 1; i < kWidths.size(); ++i) offset += kWidths[i];
    return offset;
}

SliceSpec::SliceSpec(std::initializer_list<Field> fields) : SliceSpec(std::span<const Field>(fields.begin(), fields.size())) {}

SliceSpec::SliceSpec(std::span<const Field> fields) {
    int last = -1;
    for (Field f : fields) {
        const int index = static_cast<int>(f);
        if (index < 0 || index >= static_cast<int>(kWidths.size())) {
            fail(codec_error::kind::spec, "unknown field in slice descriptor");
        }
        // A repeated or reordered field would describe more bits than the frame holds.
        if (index <= last) {
            fail(codec_error::kind::spec, "slice fields must be distinct and in frame order");
        }
        last = index;
        mask_ |= static_cast<std::uint8_t>(1u << index);
    }
}

SliceSpec SliceSpec::parse(std::string_view text) {
    std::vector<Field> fields;
    for (auto part : split(text, '+')) {
        auto it = std::ranges::find(kFieldNames, part);
        if (it == kFieldNames.end()) fail(codec_error::kind::spec, "unknown slice field '" + std::string(part) + "'");
        fields.push_back(static_cast<Field>(it - kFieldNames.begin()));
    }
    return SliceSpec(std::span<const Field>(fields));
}

int SliceSpec::width() const noexcept {
    int w = 0;
    for (std::size_t i = 0; i < kWidths.size(); ++i) {
        if (mask_ & (1u << i)) w += kWidths[i];
    }
    return w;
}

std::vector<Field> SliceSpec::fields() const {
    std::vector<Field> out;
    for (std::size_t i = 0; i < kWidths.size(); ++i) {
        if (mask_ & (1u << i)) out.push_back(static_cast<Field>(i));
    }
    return out;
}

std::string SliceSpec::to_string() const {
    std::string out;
    for (Field f : fields()) {
        if (!out.empty()) out += '+';
        out += kFieldNames[static_cast<std::size_t>(f)];
    }
    return out;
}

int SliceSpec::offset_in_slice(Field f) const {
    if (!contains(f)) fail(codec_error::kind::spec, "field not part of slice");
    int offset = 0;
    for (auto i = static_cast<std::size_t>(f) + 1; i < kWidths.size(); ++i) {
        if (mask_ & (1u << i)) offset += kWidths[i];
    }
    return offset;
}

std::uint64_t field_value(const InputFrame& frame, Field f) noexcept {
    switch (f) {
        case Field::context: return frame.context.bits;
        case Field::verb: return static_cast<std::uint64_t>(frame.verb);
        case Field::func: return static_cast<std::uint64_t>(frame.func);
        case Field::op1: return frame.op1;
        case Field::op2: return frame.op2;
    }
    return 0;
}

std::uint32_t pack(const InputFrame& frame) {
    check_operand(frame.op1, "op1");
    check_operand(frame.op2, "op2");
    std::uint32_t bits = 0;
    for (std::size_t i = 0; i < kWidths.size(); ++i) {
        const auto f = static_cast<Field>(i);
        bits = (bits << kWidths[i]) | static_cast<std::uint32_t>(field_value(frame, f) & ((1u << kWidths[i]) - 1));
    }
    return bits;
}

InputFrame unpack(std::uint32_t bits) {
    if (bits >> kInputBits) fail(codec_error::kind::frame, "frame wider than 19 bits");
    auto take = [&](Field f) { return (bits >> field_offset(f)) & ((1u << field_width(f)) - 1); };

    InputFrame frame;
    frame.context = ContextCode{static_cast<std::uint8_t>(take(Field::context))};
    if (!frame.context.source_present()) fail(codec_error::kind::frame, "context header lacks the source-present bit");

    const auto verb = take(Field::verb);
    if (!is_valid_verb(verb)) fail(codec_error::kind::invalid_verb, "verb " + to_bits(verb, kVerbBits) + " is not say/write");
    frame.verb = static_cast<Verb>(verb);

    const auto func = take(Field::func);
    if (!is_valid_func(func)) fail(codec_error::kind::invalid_function, "unknown function code " + to_bits(func, kFuncBits));
    frame.func = static_cast<Func>(func);

    const auto op1 = take(Field::op1);
    const auto op2 = take(Field::op2);
    check_operand(op1, "op1");
    check_operand(op2, "op2");
    frame.op1 = static_cast<std::uint8_t>(op1);
    frame.op2 = static_cast<std::uint8_t>(op2);
    return frame;
}

std::uint64_t slice_key(const InputFrame& frame, const SliceSpec& spec) {
    if (spec.empty()) fail(codec_error::kind::spec, "empty slice descriptor");
    std::uint64_t key = 0;
    for (Field f : spec.fields()) key = (key << field_width(f)) | field_value(frame, f);
    return key;
}

std::string to_bits(std::uint64_t value, int width) {
    std::string out(static_cast<std::size_t>(width), '0');
    for (int i = 0; i < width; ++i) {
        if (value & (std::uint64_t{1} << i)) out[static_cast<std::size_t>(width - 1 - i)] = '1';
    }
    return out;
}

std::uint64_t from_bits(std::string_view bits) {
    if (bits.empty() || bits.size() > 64) fail(codec_error::kind::frame, "bit string must hold 1..64 bits");
    std::uint64_t value = 0;
    for (char c : bits) {
        if (c != '0' && c != '1') fail(codec_error::kind::frame, "bit string contains '" + std::string(1, c) + "'");
        value = (value << 1) | static_cast<std::uint64_t>(c == '1');
    }
    return value;
}

std::string encode_input(const InputFrame& frame) { return to_bits(pack(frame), kInputBits); }

InputFrame decode_input(std::string_view bits) {
    if (bits.size() != static_cast<std::size_t>(kInputBits)) {
        fail(codec_error::kind::frame, "input frame must be 19 bits, got " + std::to_string(bits.size()));
    }
    return unpack(static_cast<std::uint32_t>(from_bits(bits)));
}

std::string encode_output(const OutputFrame& out) {
    if (auto bad = validate_output(out)) {
        fail(codec_error::kind::frame, "cannot encode malformed output (" + std::string(malformation_name(*bad)) + ")");
    }
    return to_bits(out.verb, kVerbBits) + to_bits(out.value, kValueBits);
}

OutputFrame decode_output(std::string_view bits) {
    if (bits.size() != static_cast<std::size_t>(kOutputBits)) {
        fail(codec_error::kind::frame, "output frame must be 10 bits, got " + std::to_string(bits.size()));
    }
    return OutputFrame{from_bits(bits.substr(0, kVerbBits)), from_bits(bits.substr(kVerbBits))};
}

std::string format_input(const InputFrame& frame) {
    pack(frame);  // validates operands
    std::string out;
    for (std::size_t i = 0; i < kWidths.size(); ++i) {
        if (i) out += ',';
        out += to_bits(field_value(frame, static_cast<Field>(i)), kWidths[i]);
    }
    return out;
}

InputFrame parse_input(std::string_view text) {
    auto parts = split(text, ',');
    if (parts.size() != kWidths.size()) fail(codec_error::kind::frame, "input text needs 5 comma-separated fields");
    std::string joined;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (parts[i].size() != static_cast<std::size_t>(kWidths[i])) {
            fail(codec_error::kind::frame, std::string(kFieldNames[i]) + " field must be " +
                                               std::to_string(kWidths[i]) + " bits");
        }
        joined += parts[i];
    }
    return decode_input(joined);
}

std::string format_output(const OutputFrame& out) {
    // Malformed candidates keep their full width so "101100" stays visible.
    auto width_of = [](std::uint64_t v, int min) { return std::max(min, static_cast<int>(std::bit_width(v))); };
    return to_bits(out.verb, width_of(out.verb, kVerbBits)) + "," + to_bits(out.value, width_of(out.value, kValueBits));
}

OutputFrame parse_output(std::string_view text) {
    auto parts = split(text, ',');
    if (parts.size() != 2) fail(codec_error::kind::frame, "output text needs 2 comma-separated fields");
    return OutputFrame{from_bits(parts[0]), from_bits(parts[1])};
}

std::vector<std::uint8_t> write_frames(std::span<const InputFrame> frames) {
    std::vector<std::uint8_t> bytes;
    bytes.reserve(frames.size() * 3);
    for (const auto& frame : frames) {
        const std::uint32_t word = pack(frame) << (24 - kInputBits);
        bytes.push_back(static_cast<std::uint8_t>(word >> 16));
        bytes.push_back(static_cast<std::uint8_t>(word >> 8));
        bytes.push_back(static_cast<std::uint8_t>(word));
    }
    return bytes;
}

std::vector<InputFrame> read_frames(std::span<const std::uint8_t> bytes) {
    if (bytes.size() % 3 != 0) fail(codec_error::kind::frame, "binary frame stream length is not a multiple of 3");
    std::vector<InputFrame> frames;
    frames.reserve(bytes.size() / 3);
    for (std::size_t i = 0; i < bytes.size(); i += 3) {
        const std::uint32_t word = (std::uint32_t{bytes[i]} << 16) | (std::uint32_t{bytes[i + 1]} << 8) | bytes[i + 2];
        if (word & ((1u << (24 - kInputBits)) - 1)) fail(codec_error::kind::frame, "non-zero padding bits");
        frames.push_back(unpack(word >> (24 - kInputBits)));
    }
    return frames;
}

}  // namespace nullstate::packet
