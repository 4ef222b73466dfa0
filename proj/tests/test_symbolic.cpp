#include <gtest/gtest.h>

#include <cmath>

#include "generators.hpp"
#include "nullstate/context_registry.hpp"
#include "nullstate/symbolic.hpp"

using namespace nullstate;
using namespace nullstate::symbolic;
using packet::contexts::alice_lab;
using packet::contexts::alice_photo;
using packet::contexts::bob;

namespace {

// Direct arithmetic, independent of f_arith.
std::optional<std::int64_t> direct(Func f, int a, int b) {
    switch (f) {
        case Func::add: return a + b;
        case Func::sub: return a - b;
        case Func::mul: return a * b;
        case Func::div: return b == 0 ? std::nullopt : std::optional<std::int64_t>(a / b);
        case Func::square: return a * a;
    }
    return std::nullopt;
}

}  // namespace

TEST(Maps, VerbMap) {
    EXPECT_EQ(f_verb(132), 4u);
    EXPECT_EQ(f_verb(134), 6u);
    EXPECT_EQ(f_verb(172), 44u);
    EXPECT_THROW(f_verb(127), domain_error);
}

TEST(Maps, SquareMap) {
    EXPECT_EQ(f_square(2162), 4u);
    EXPECT_EQ(f_square(2160), 0u);
    EXPECT_EQ(f_square(2802), 642u * 642u);
    EXPECT_EQ(f_square(2802), 412164u);
    EXPECT_THROW(f_square(2159), domain_error);
}

TEST(Maps, Arithmetic) {
    EXPECT_EQ(f_arith(Func::add, 4, 2), 6);
    EXPECT_EQ(f_arith(Func::mul, 4, 2), 8);
    EXPECT_EQ(f_arith(Func::div, 4, 2), 2);
    EXPECT_EQ(f_arith(Func::div, 7, 2), 3);
    EXPECT_EQ(f_arith(Func::sub, 2, 4), -2);
    EXPECT_THROW(f_arith(Func::div, 4, 0), domain_error);
}

TEST(Dispatch, SquareLessonSucceedsUnderAlice) {
    const auto r = dispatch({alice_lab, Verb::say, Func::square, 2, 0}, square_lesson_table());
    ASSERT_TRUE(r.is_output());
    EXPECT_EQ(r.output(), (OutputFrame{0b100, 4}));
}

TEST(Dispatch, FailureChainUnderShiftedContext) {
    const InputFrame f{packet::contexts::alice_away, Verb::say, Func::square, 2, 0};
    const auto table = square_lesson_table();
    const auto r = dispatch(f, table);
    ASSERT_TRUE(r.is_null());
    EXPECT_EQ(r.null_state().reason, NullReason::malformed_output);
    EXPECT_EQ(r.null_state().malformation, packet::Malformation::bad_verb);
    ASSERT_TRUE(r.null_state().candidate);
    EXPECT_EQ(r.null_state().candidate->verb, 0b101100u);
    EXPECT_EQ(r.null_state().candidate->value, 412164u);

    const auto& square = table.entries()[1];
    EXPECT_EQ(square.apply(f), 412164);
    EXPECT_EQ(packet::validate_output({0b100, 412164}), packet::Malformation::overflow);
}

TEST(Dispatch, GenericTableIsContextInvariant) {
    const auto table = build_table({10, 0, 0, 0, 0});
    const auto r = dispatch({bob, Verb::say, Func::square, 2, 0}, table);
    ASSERT_TRUE(r.is_output());
    EXPECT_EQ(r.output(), (OutputFrame{0b100, 4}));
    gen::Gen g(21);
    for (int i = 0; i < 2000; ++i) {
        auto f = g.frame();
        const auto a = dispatch(f, table);
        f.context = alice_lab;
        const auto b = dispatch(f, table);
        ASSERT_EQ(a.is_output(), b.is_output());
        if (a.is_output()) ASSERT_EQ(a.output(), b.output());
    }
}

TEST(Dispatch, NoMatchingName) {
    const auto r = dispatch({bob, Verb::say, Func::add, 4, 2}, build_table({}));
    ASSERT_TRUE(r.is_null());
    EXPECT_EQ(r.null_state().reason, NullReason::no_matching_name);
    EXPECT_FALSE(r.null_state().malformation);
}

TEST(Dispatch, NegativeAndDivisionByZeroAreMalformed) {
    const auto table = build_table({});
    auto neg = dispatch({alice_lab, Verb::write, Func::sub, 2, 4}, table);
    ASSERT_TRUE(neg.is_null());
    EXPECT_EQ(neg.null_state().malformation, packet::Malformation::overflow);
    auto zero = dispatch({alice_lab, Verb::say, Func::div, 4, 0}, table);
    ASSERT_TRUE(zero.is_null());
    EXPECT_EQ(zero.null_state().reason, NullReason::malformed_output);
}

TEST(Dispatch, OracleEquivalenceUnderAlice) {
    const auto table = build_table({});
    for (auto verb : packet::kAllVerbs) {
        for (auto func : packet::kAllFuncs) {
            for (int a = 0; a <= 9; ++a) {
                for (int b = 0; b <= 9; ++b) {
                    const InputFrame f{alice_lab, verb, func, static_cast<std::uint8_t>(a),
                                       static_cast<std::uint8_t>(packet::is_unary(func) ? 0 : b)};
                    const auto r = dispatch(f, table);
                    const auto want = direct(func, a, f.op2);
                    if (want && *want >= 0 && *want <= 127) {
                        ASSERT_TRUE(r.is_output()) << packet::format_input(f);
                        ASSERT_EQ(r.output().verb, static_cast<std::uint64_t>(verb));
                        ASSERT_EQ(r.output().value, static_cast<std::uint64_t>(*want));
                    } else {
                        ASSERT_TRUE(r.is_null()) << packet::format_input(f);
                    }
                }
            }
        }
    }
}

TEST(Dispatch, TotalAndDeterministic) {
    gen::Gen g(22);
    for (int t = 0; t < 50; ++t) {
        const auto table = build_table(g.profile());
        for (int i = 0; i < 200; ++i) {
            const auto f = g.frame();
            const auto a = dispatch(f, table);
            const auto b = dispatch(f, table);
            ASSERT_EQ(a.is_output(), b.is_output());
            if (a.is_output()) {
                ASSERT_EQ(a.output(), b.output());
                ASSERT_TRUE(packet::well_formed(a.output()));
            } else {
                ASSERT_EQ(a.null_state().reason, b.null_state().reason);
            }
        }
    }
}

TEST(Dispatch, MemoryReadableEntryMatchesEmbeddedContext) {
    const auto table = build_table({});
    const InputFrame f{bob, Verb::say, Func::add, 4, 2};
    EXPECT_TRUE(dispatch(f, table).is_null());
    const InputFrame remembered{alice_lab, Verb::say, Func::add, 4, 2};
    const auto r = dispatch(f, table, std::span(&remembered, 1));
    ASSERT_TRUE(r.is_output());
    EXPECT_EQ(r.output(), (OutputFrame{0b100, 6}));
    // The next entry is not memory-readable.
    EXPECT_TRUE(dispatch({bob, Verb::write, Func::add, 4, 2}, table, std::span(&remembered, 1)).is_null());
}

TEST(BuildTable, PersonDependentFraction) {
    EXPECT_DOUBLE_EQ(build_table({}).person_dependent_fraction(), 0.8);
    EXPECT_DOUBLE_EQ(build_table({10, 0, 0, 0, 0}).person_dependent_fraction(), 0.0);
    EXPECT_EQ(build_table({}).function_count(), 10u);
}

TEST(BuildTable, RejectsBadCounts) {
    EXPECT_THROW(build_table({11, 0, 0, 0, 0}), config_error);
    EXPECT_THROW(build_table({0, 0, 0, 0, 0}), config_error);
    EXPECT_THROW(build_table({10, 11, 0, 0, 0}), config_error);
    EXPECT_THROW(build_table({10, 8, 9, 0, 0}), config_error);
    EXPECT_THROW(build_table({10, 8, 2, 11, 0}), config_error);
    EXPECT_THROW(build_table({10, 8, 2, 0, 7}), config_error);
}

TEST(BuildTable, FractionMatchesMeasuredMasks) {
    gen::Gen g(23);
    for (int t = 0; t < 200; ++t) {
        const auto p = g.profile();
        const auto table = build_table(p);
        int person = 0;
        for (const auto& e : table.entries()) {
            if (e.is_operator() && (e.name.context_mask() & packet::ContextRegistry::person_bits())) ++person;
        }
        ASSERT_DOUBLE_EQ(table.person_dependent_fraction(), static_cast<double>(person) / p.functions);
        ASSERT_EQ(person, p.person_dependent);
    }
}

TEST(Functionality, DefaultTable) {
    const auto table = build_table({});
    EXPECT_DOUBLE_EQ(functionality(table, alice_lab), 1.0);
    EXPECT_DOUBLE_EQ(functionality(table, bob), 0.2);
    EXPECT_DOUBLE_EQ(functionality(table, alice_photo), 0.4);
}

TEST(Functionality, WideningAContextMaskNeverHurts) {
    gen::Gen g(24);
    packet::ContextRegistry registry;
    for (int t = 0; t < 300; ++t) {
        const auto table = build_table(g.profile());
        auto entries = table.entries();
        auto& e = entries[static_cast<std::size_t>(g.between(1, static_cast<int>(entries.size()) - 1))];
        if (!e.name.slice.contains(packet::Field::context)) continue;
        const auto drop = static_cast<std::uint8_t>(g.below(32));
        const auto mask = static_cast<std::uint8_t>(e.name.context_mask() & ~drop);
        e.name = e.name.with_context(mask, static_cast<std::uint8_t>(e.name.context_pattern() & mask));
        const FunctionTable wider(entries);
        for (int c = 0; c < 32; ++c) {
            const packet::ContextCode ctx{static_cast<std::uint8_t>(0b10000 | c)};
            ASSERT_GE(functionality(wider, ctx), functionality(table, ctx));
        }
    }
}

TEST(Probes, TwoPerFunctionWithDefinedAnswers) {
    const auto table = build_table({});
    const auto probes = probe_suite(table);
    ASSERT_EQ(probes.size(), 20u);
    for (std::size_t i = 0; i < probes.size(); ++i) {
        const auto& p = probes[i];
        EXPECT_EQ(p.entry, i / 2 + 1);
        EXPECT_LE(p.op1, 9);
        EXPECT_LE(p.op2, 9);
        EXPECT_EQ(i % 2 == 0, p.op1 <= 4);
        EXPECT_TRUE(oracle_answer(p.frame(alice_lab)));
    }
    EXPECT_EQ(probe_suite(table).size(), probes.size());
    EXPECT_EQ(probe_suite(table)[3].op2, probes[3].op2);
}

TEST(Serialize, FrozenSquareLessonTable) {
    EXPECT_EQ(square_lesson_table().serialize(),
              "verb-map 100 101 verb context+verb 10000 -\n"
              "square 111 111 func context+func+op1 10000 -\n");
}

TEST(Serialize, RoundTripRandomTables) {
    gen::Gen g(25);
    for (int t = 0; t < 100; ++t) {
        const auto table = build_table(g.profile());
        ASSERT_EQ(FunctionTable::parse(table.serialize()), table);
    }
    EXPECT_THROW(FunctionTable::parse("square 111 011 func func 10000 -\n"), config_error);
    EXPECT_THROW(FunctionTable::parse("cube 111 111 func op1 10000 -\n"), config_error);
}
