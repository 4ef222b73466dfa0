#include "nullstate/symbolic.hpp"

#include <algorithm>
#include <random>
#include <sstream>

#include "nullstate/context_registry.hpp"

namespace nullstate::symbolic {

using packet::Field;

namespace {

std::uint64_t width_mask(int width) { return width >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << width) - 1; }

std::vector<Field> operand_fields(Kind k) {
    switch (k) {
        case Kind::verb_map: return {Field::verb};
        case Kind::square: return {Field::op1};
        default: return {Field::op1, Field::op2};
    }
}

std::uint64_t subtract_base(std::uint64_t key, std::uint64_t base) {
    if (key < base) {
        throw domain_error("key " + std::to_string(key) + " is below the learned offset " + std::to_string(base));
    }
    return key - base;
}

}  // namespace

std::uint64_t f_verb(std::uint64_t key) { return subtract_base(key, kVerbKeyBase); }

std::uint64_t f_square(std::uint64_t key) {
    const auto n = subtract_base(key, kSquareKeyBase);
    return n * n;
}

std::int64_t f_arith(Func op, std::int64_t a, std::int64_t b) {
    switch (op) {
        case Func::add: return a + b;
        case Func::sub: return a - b;
        case Func::mul: return a * b;
        case Func::div: {
            if (b == 0) throw domain_error("division by zero");
            auto q = a / b;
            if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
            return q;
        }
        case Func::square: return a * a;
    }
    throw domain_error("unknown operator");
}

// --- FunctionName ------------------------------------------------------------

void FunctionName::check() const {
    if (slice.empty()) throw config_error("function name needs a non-empty slice");
    const auto limit = width_mask(slice.width());
    if ((pattern & ~limit) || (mask & ~limit)) throw config_error("name pattern or mask wider than its slice");
    if (pattern & ~mask) throw config_error("name pattern sets don't-care bits");
}

bool FunctionName::matches(const InputFrame& frame) const {
    return (packet::slice_key(frame, slice) & mask) == pattern;
}

std::uint8_t FunctionName::context_mask() const {
    if (!slice.contains(Field::context)) return 0;
    return static_cast<std::uint8_t>((mask >> slice.offset_in_slice(Field::context)) & 0x1F);
}

std::uint8_t FunctionName::context_pattern() const {
    if (!slice.contains(Field::context)) return 0;
    return static_cast<std::uint8_t>((pattern >> slice.offset_in_slice(Field::context)) & 0x1F);
}

FunctionName FunctionName::with_context(std::uint8_t ctx_mask, std::uint8_t ctx_pattern) const {
    if (!slice.contains(Field::context)) throw config_error("name does not cover the context field");
    const int offset = slice.offset_in_slice(Field::context);
    const std::uint64_t field = std::uint64_t{0x1F} << offset;
    FunctionName out = *this;
    out.mask = (mask & ~field) | (std::uint64_t{ctx_mask} << offset);
    out.pattern = (pattern & ~field) | (std::uint64_t{static_cast<std::uint8_t>(ctx_pattern & ctx_mask)} << offset);
    return out;
}

// --- Kind --------------------------------------------------------------------

std::string_view kind_name(Kind k) noexcept {
    switch (k) {
        case Kind::verb_map: return "verb-map";
        case Kind::square: return "square";
        case Kind::add: return "add";
        case Kind::sub: return "sub";
        case Kind::mul: return "mul";
        case Kind::div: return "div";
    }
    return "?";
}

Kind parse_kind(std::string_view name) {
    for (Kind k : {Kind::verb_map, Kind::square, Kind::add, Kind::sub, Kind::mul, Kind::div}) {
        if (kind_name(k) == name) return k;
    }
    throw config_error("unknown function kind '" + std::string(name) + "'");
}

std::optional<Func> func_of(Kind k) noexcept {
    switch (k) {
        case Kind::verb_map: return std::nullopt;
        case Kind::square: return Func::square;
        case Kind::add: return Func::add;
        case Kind::sub: return Func::sub;
        case Kind::mul: return Func::mul;
        case Kind::div: return Func::div;
    }
    return std::nullopt;
}

Kind kind_of(Func f) noexcept {
    switch (f) {
        case Func::add: return Kind::add;
        case Func::sub: return Kind::sub;
        case Func::mul: return Kind::mul;
        case Func::div: return Kind::div;
        case Func::square: return Kind::square;
    }
    return Kind::square;
}

// --- LearnedFunction ---------------------------------------------------------

int LearnedFunction::arity() const noexcept { return kind == Kind::verb_map || kind == Kind::square ? 1 : 2; }

void LearnedFunction::check() const {
    name.check();
    const auto operands = operand_fields(kind);
    const auto fields = input.fields();
    if (fields.size() < operands.size() ||
        !std::equal(operands.begin(), operands.end(), fields.end() - static_cast<std::ptrdiff_t>(operands.size()))) {
        throw config_error(std::string(kind_name(kind)) + " input slice '" + input.to_string() +
                           "' must end with its operand fields");
    }
}

std::uint64_t LearnedFunction::key_base() const {
    const auto operands = operand_fields(kind);
    std::uint64_t verb_bits = static_cast<std::uint64_t>(Verb::say);
    if (name.slice.contains(Field::verb)) {
        verb_bits = (name.pattern >> name.slice.offset_in_slice(Field::verb)) & 0b111;
    }
    std::uint64_t base = 0;
    for (Field f : input.fields()) {
        std::uint64_t v = 0;
        if (std::ranges::find(operands, f) == operands.end()) {
            switch (f) {
                case Field::context: v = trained_context.bits; break;
                case Field::verb: v = verb_bits; break;
                case Field::func: v = static_cast<std::uint64_t>(func_of(kind).value_or(Func::square)); break;
                default: break;
            }
        }
        base = (base << packet::field_width(f)) | v;
    }
    return base;
}

std::int64_t LearnedFunction::apply(const InputFrame& frame) const {
    const auto r = subtract_base(packet::slice_key(frame, input), key_base());
    switch (kind) {
        case Kind::verb_map: return static_cast<std::int64_t>(r);
        case Kind::square: return static_cast<std::int64_t>(r * r);
        default: {
            const auto a = static_cast<std::int64_t>(r >> packet::kOperandBits);
            const auto b = static_cast<std::int64_t>(r & width_mask(packet::kOperandBits));
            return f_arith(*func_of(kind), a, b);
        }
    }
}

// --- FunctionTable -----------------------------------------------------------

FunctionTable::FunctionTable(std::vector<LearnedFunction> entries) : entries_(std::move(entries)) {
    for (const auto& e : entries_) e.check();
}

std::size_t FunctionTable::function_count() const noexcept {
    return static_cast<std::size_t>(std::ranges::count_if(entries_, &LearnedFunction::is_operator));
}

double FunctionTable::person_dependent_fraction() const noexcept {
    const auto n = function_count();
    if (n == 0) return 0.0;
    const auto dependent = std::ranges::count_if(entries_, [](const LearnedFunction& e) {
        return e.is_operator() && (e.name.context_mask() & packet::ContextRegistry::person_bits()) != 0;
    });
    return static_cast<double>(dependent) / static_cast<double>(n);
}

std::string FunctionTable::serialize() const {
    std::ostringstream out;
    for (const auto& e : entries_) {
        const int w = e.name.slice.width();
        out << kind_name(e.kind) << ' ' << packet::to_bits(e.name.pattern, w) << ' ' << packet::to_bits(e.name.mask, w)
            << ' ' << e.name.slice.to_string() << ' ' << e.input.to_string() << ' '
            << packet::to_bits(e.trained_context.bits, packet::kContextBits) << ' ' << (e.reads_memory ? "memory" : "-")
            << '\n';
    }
    return out.str();
}

FunctionTable FunctionTable::parse(std::string_view text) {
    std::vector<LearnedFunction> entries;
    std::istringstream in{std::string(text)};
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line.front() == '#') continue;
        std::istringstream fields(line);
        std::string kind, pattern, mask, name_slice, input_slice, trained, flags;
        if (!(fields >> kind >> pattern >> mask >> name_slice >> input_slice >> trained >> flags)) {
            throw config_error("table line " + std::to_string(line_no) + ": expected 7 fields");
        }
        try {
            LearnedFunction e;
            e.kind = parse_kind(kind);
            e.name.slice = SliceSpec::parse(name_slice);
            if (pattern.size() != static_cast<std::size_t>(e.name.slice.width()) || mask.size() != pattern.size()) {
                throw config_error("pattern/mask width does not match slice '" + name_slice + "'");
            }
            e.name.pattern = packet::from_bits(pattern);
            e.name.mask = packet::from_bits(mask);
            e.input = SliceSpec::parse(input_slice);
            if (trained.size() != static_cast<std::size_t>(packet::kContextBits)) {
                throw config_error("trained context must be 5 bits");
            }
            e.trained_context = ContextCode{static_cast<std::uint8_t>(packet::from_bits(trained))};
            if (flags != "-" && flags != "memory") throw config_error("unknown flags '" + flags + "'");
            e.reads_memory = flags == "memory";
            entries.push_back(e);
        } catch (const std::exception& ex) {
            throw config_error("table line " + std::to_string(line_no) + ": " + ex.what());
        }
    }
    return FunctionTable(std::move(entries));
}

// --- dispatch ----------------------------------------------------------------

std::string_view null_reason_name(NullReason r) noexcept {
    return r == NullReason::no_matching_name ? "no-matching-name" : "malformed-output";
}

DispatchResult dispatch(const InputFrame& frame, const FunctionTable& table,
                        std::span<const InputFrame> recalled) noexcept {
    try {
        auto match = [&](const LearnedFunction& e) -> std::optional<InputFrame> {
            if (e.name.matches(frame)) return frame;
            if (e.reads_memory) {
                for (const auto& embedded : recalled) {
                    InputFrame substituted = frame;
                    substituted.context = embedded.context;
                    if (e.name.matches(substituted)) return substituted;
                }
            }
            return std::nullopt;
        };

        const LearnedFunction* verb_entry = nullptr;
        const LearnedFunction* op_entry = nullptr;
        std::optional<InputFrame> verb_frame, op_frame;
        for (const auto& e : table.entries()) {
            if (!e.is_operator() && !verb_entry) {
                if ((verb_frame = match(e))) verb_entry = &e;
            } else if (e.is_operator() && !op_entry) {
                if ((op_frame = match(e))) op_entry = &e;
            }
        }
        if (!verb_entry) return NullState{NullReason::no_matching_name, std::nullopt, std::nullopt, "no verb map matches"};
        if (!op_entry) return NullState{NullReason::no_matching_name, std::nullopt, std::nullopt, "no function name matches"};

        std::int64_t verb = 0;
        std::int64_t value = 0;
        try {
            verb = verb_entry->apply(*verb_frame);
            value = op_entry->apply(*op_frame);
        } catch (const domain_error& ex) {
            return NullState{NullReason::malformed_output, std::nullopt, std::nullopt, ex.what()};
        }
        if (value < 0) {
            return NullState{NullReason::malformed_output, packet::Malformation::overflow, std::nullopt,
                             "negative result does not fit the unsigned output field"};
        }
        const OutputFrame candidate{static_cast<std::uint64_t>(verb), static_cast<std::uint64_t>(value)};
        if (auto bad = packet::validate_output(candidate)) {
            return NullState{NullReason::malformed_output, bad, candidate, std::string(packet::malformation_name(*bad))};
        }
        return candidate;
    } catch (const std::exception& ex) {
        return NullState{NullReason::malformed_output, std::nullopt, std::nullopt, ex.what()};
    }
}

std::optional<OutputFrame> oracle_answer(const InputFrame& frame) {
    std::int64_t value = 0;
    try {
        value = f_arith(frame.func, frame.op1, frame.op2);
    } catch (const domain_error&) {
        return std::nullopt;
    }
    if (value < 0 || static_cast<std::uint64_t>(value) > packet::kMaxValue) return std::nullopt;
    return OutputFrame{static_cast<std::uint64_t>(frame.verb), static_cast<std::uint64_t>(value)};
}

// --- table construction ------------------------------------------------------

FunctionTable build_table(const TableProfile& p) {
    if (p.functions < 1 || p.functions > kMaxFunctions) {
        throw config_error("function count must be 1.." + std::to_string(kMaxFunctions));
    }
    auto in_range = [](int v, int hi) { return v >= 0 && v <= hi; };
    if (!in_range(p.person_dependent, p.functions)) throw config_error("person-dependent count exceeds function count");
    if (!in_range(p.location_dependent, p.functions)) throw config_error("location-dependent count exceeds function count");
    if (!in_range(p.photo_tolerant, p.person_dependent)) {
        throw config_error("photo-tolerant count exceeds person-dependent count");
    }
    if (!in_range(p.memory_readable, p.person_dependent - p.photo_tolerant)) {
        throw config_error("memory-readable count exceeds photo-intolerant person-dependent count");
    }

    using packet::ContextRegistry;
    const std::uint8_t alice = packet::contexts::alice_lab.bits;

    std::vector<LearnedFunction> entries;
    LearnedFunction verb_map;
    verb_map.kind = Kind::verb_map;
    verb_map.name = {0b100, 0b101, SliceSpec{Field::verb}};
    verb_map.input = SliceSpec{Field::verb};
    entries.push_back(verb_map);

    int j = 0;
    for (Func func : packet::kAllFuncs) {
        for (Verb verb : packet::kAllVerbs) {
            if (j == p.functions) break;
            std::uint8_t ctx_mask = 0;
            if (j < p.person_dependent) {
                ctx_mask |= ContextRegistry::reality_bits() | ContextRegistry::person_bits();
                if (j >= p.person_dependent - p.photo_tolerant) ctx_mask &= ~ContextRegistry::photo_bits();
            }
            if (j < p.location_dependent) ctx_mask |= ContextRegistry::reality_bits() | ContextRegistry::location_bits();

            const std::uint64_t address = (static_cast<std::uint64_t>(verb) << 3) | static_cast<std::uint64_t>(func);
            LearnedFunction e;
            e.kind = kind_of(func);
            e.input = packet::is_unary(func) ? SliceSpec{Field::op1} : SliceSpec{Field::op1, Field::op2};
            if (ctx_mask) {
                e.name = {(std::uint64_t{static_cast<std::uint8_t>(alice & ctx_mask)} << 6) | address,
                          (std::uint64_t{ctx_mask} << 6) | 0x3F, SliceSpec{Field::context, Field::verb, Field::func}};
            } else {
                e.name = {address, 0x3F, SliceSpec{Field::verb, Field::func}};
            }
            e.reads_memory = j < p.memory_readable;
            entries.push_back(e);
            ++j;
        }
    }
    return FunctionTable(std::move(entries));
}

FunctionTable square_lesson_table() {
    LearnedFunction verb_map;
    verb_map.kind = Kind::verb_map;
    verb_map.name = {0b100, 0b101, SliceSpec{Field::verb}};
    verb_map.input = packet::slices::context_verb;

    LearnedFunction square;
    square.kind = Kind::square;
    square.name = {0b111, 0b111, SliceSpec{Field::func}};
    square.input = packet::slices::context_func_op1;

    return FunctionTable({verb_map, square});
}

// --- probes ------------------------------------------------------------------

std::vector<Probe> probe_suite(const FunctionTable& table, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    auto draw = [&](int lo, int hi) {
        return static_cast<std::uint8_t>(lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1)));
    };

    std::vector<Probe> probes;
    const auto& entries = table.entries();
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const auto& e = entries[i];
        if (!e.is_operator()) continue;
        Verb verb = Verb::say;
        if (e.name.slice.contains(Field::verb)) {
            const int off = e.name.slice.offset_in_slice(Field::verb);
            if (((e.name.mask >> off) & 0b111) == 0b111) {
                const auto bits = (e.name.pattern >> off) & 0b111;
                if (packet::is_valid_verb(bits)) verb = static_cast<Verb>(bits);
            }
        }
        const Func func = *func_of(e.kind);
        for (auto [lo, hi] : {std::pair{0, 4}, std::pair{5, 9}}) {
            const auto a = draw(lo, hi);
            std::uint8_t b = 0;
            switch (func) {
                case Func::add:
                case Func::mul: b = draw(0, 9); break;
                case Func::sub: b = draw(0, a); break;
                case Func::div: b = draw(1, 9); break;
                case Func::square: break;
            }
            probes.push_back({i, verb, func, a, b});
        }
    }
    return probes;
}

Measurement measure(const FunctionTable& table, ContextCode context, std::span<const InputFrame> recalled,
                    std::uint64_t seed) {
    Measurement m;
    for (const auto& probe : probe_suite(table, seed)) {
        const auto frame = probe.frame(context);
        const auto result = dispatch(frame, table, recalled);
        const auto expected = oracle_answer(frame);
        ++m.probes;
        if (result.is_null()) {
            ++m.null_states;
        } else if (expected && *expected == result.output()) {
            ++m.correct;
        }
    }
    return m;
}

double functionality(const FunctionTable& table, ContextCode context) { return measure(table, context).functionality(); }

}  // namespace nullstate::symbolic
