#include <gtest/gtest.h>

#include <bitset>
#include <set>
#include <string>

#include "generators.hpp"
#include "nullstate/context_registry.hpp"
#include "nullstate/packet.hpp"

using namespace nullstate::packet;

namespace {

// Independent encoders built on std::bitset and string concatenation.
std::string oracle_bits(const InputFrame& f) {
    return std::bitset<5>(f.context.bits).to_string() + std::bitset<3>(static_cast<unsigned>(f.verb)).to_string() +
           std::bitset<3>(static_cast<unsigned>(f.func)).to_string() + std::bitset<4>(f.op1).to_string() +
           std::bitset<4>(f.op2).to_string();
}

std::string oracle_slice(const InputFrame& f, std::initializer_list<Field> fields) {
    const std::string all = oracle_bits(f);
    const std::pair<int, int> span[] = {{0, 5}, {5, 3}, {8, 3}, {11, 4}, {15, 4}};
    std::string out;
    for (auto fld : fields) {
        auto [start, len] = span[static_cast<int>(fld)];
        out += all.substr(static_cast<std::size_t>(start), static_cast<std::size_t>(len));
    }
    return out;
}

const InputFrame kSayTwoSquared{contexts::alice_lab, Verb::say, Func::square, 2, 0};

template <class F>
codec_error::kind error_kind(F&& f) {
    try {
        f();
    } catch (const codec_error& e) {
        return e.code();
    }
    ADD_FAILURE() << "expected codec_error";
    return codec_error::kind::frame;
}

}  // namespace

TEST(Encode, SquareOfTwoUnderAlice) { EXPECT_EQ(encode_input(kSayTwoSquared), "1000010011100100000"); }

TEST(Encode, ZeroOperandsEndInEightZeros) {
    const auto bits = encode_input({contexts::alice_lab, Verb::say, Func::add, 0, 0});
    ASSERT_EQ(bits.size(), 19u);
    EXPECT_EQ(bits.substr(11), "00000000");
}

TEST(Encode, RejectsOperandAboveNine) {
    EXPECT_EQ(error_kind([] { encode_input({contexts::alice_lab, Verb::say, Func::add, 10, 0}); }),
              codec_error::kind::invalid_operand);
}

TEST(Decode, SayTwoSquaredFrame) { EXPECT_EQ(decode_input("1000010011100100000"), kSayTwoSquared); }

TEST(Decode, AllZeroLacksSourceFlag) {
    EXPECT_EQ(error_kind([] { decode_input(std::string(19, '0')); }), codec_error::kind::frame);
}

TEST(Decode, WrongLengthAndBadOperand) {
    EXPECT_EQ(error_kind([] { decode_input("100001001110010000"); }), codec_error::kind::frame);
    EXPECT_EQ(error_kind([] { decode_input("1000010011110100000"); }), codec_error::kind::invalid_operand);
    EXPECT_EQ(error_kind([] { decode_input("1000010x11100100000"); }), codec_error::kind::frame);
}

TEST(Decode, RejectsUnknownVerbAndFunction) {
    EXPECT_EQ(error_kind([] { decode_input("1000010111100100000"); }), codec_error::kind::invalid_verb);
    EXPECT_EQ(error_kind([] { decode_input("1000010000000100000"); }), codec_error::kind::invalid_function);
}

TEST(RoundTrip, ExhaustiveOverRegistryContexts) {
    ContextRegistry registry;
    std::size_t count = 0;
    for (const auto& entry : registry.entries()) {
        for (auto verb : kAllVerbs) {
            for (auto func : kAllFuncs) {
                for (std::uint8_t a = 0; a <= 9; ++a) {
                    for (std::uint8_t b = 0; b <= 9; ++b) {
                        const InputFrame f{entry.code, verb, func, a, b};
                        const auto bits = encode_input(f);
                        ASSERT_EQ(bits, oracle_bits(f));
                        ASSERT_EQ(decode_input(bits), f);
                        ASSERT_EQ(unpack(pack(f)), f);
                        ++count;
                    }
                }
            }
        }
    }
    EXPECT_EQ(count, 5u * 2 * 5 * 10 * 10);
}

TEST(RoundTrip, RandomBitStringsReencodeWhenDecodable) {
    gen::Gen g(11);
    int decoded = 0;
    for (int i = 0; i < 20000; ++i) {
        const auto bits = std::bitset<19>(g.below(1u << 19)).to_string();
        const bool valid = bits[0] == '1' && (bits.substr(5, 3) == "100" || bits.substr(5, 3) == "110") &&
                           std::set<std::string>{"001", "010", "011", "101", "111"}.count(bits.substr(8, 3)) &&
                           std::stoi(bits.substr(11, 4), nullptr, 2) <= 9 && std::stoi(bits.substr(15, 4), nullptr, 2) <= 9;
        try {
            const auto f = decode_input(bits);
            ASSERT_TRUE(valid) << bits;
            ASSERT_EQ(encode_input(f), bits);
            ++decoded;
        } catch (const codec_error&) {
            ASSERT_FALSE(valid) << bits;
        }
    }
    EXPECT_GT(decoded, 0);
}

TEST(SliceKey, ReferenceKeys) {
    EXPECT_EQ(slice_key(kSayTwoSquared, slices::context_verb), 132u);
    EXPECT_EQ(slice_key({contexts::alice_lab, Verb::write, Func::square, 2, 0}, slices::context_verb), 134u);
    EXPECT_EQ(slice_key({contexts::alice_away, Verb::say, Func::square, 2, 0}, slices::context_verb), 172u);
    EXPECT_EQ(slice_key(kSayTwoSquared, slices::context_func_op1), 2162u);
    EXPECT_EQ(slice_key({contexts::alice_away, Verb::say, Func::square, 2, 0}, slices::context_func_op1), 2802u);
    for (std::uint8_t n = 0; n <= 9; ++n) {
        EXPECT_EQ(slice_key({contexts::alice_lab, Verb::say, Func::square, n, 0}, slices::context_func_op1), 2160u + n);
    }
}

TEST(SliceKey, MatchesBitStringOracleAndIsMonotone) {
    gen::Gen g(12);
    const std::initializer_list<Field> layouts[] = {{Field::context, Field::verb},
                                                    {Field::context, Field::func, Field::op1},
                                                    {Field::verb, Field::func},
                                                    {Field::op1, Field::op2},
                                                    {Field::context, Field::verb, Field::func, Field::op1, Field::op2}};
    for (const auto& layout : layouts) {
        const SliceSpec spec(layout);
        for (int i = 0; i < 500; ++i) {
            const auto a = g.frame(), b = g.frame();
            const auto sa = oracle_slice(a, layout), sb = oracle_slice(b, layout);
            ASSERT_EQ(slice_key(a, spec), std::stoull(sa, nullptr, 2));
            ASSERT_EQ(slice_key(a, spec) < slice_key(b, spec), sa < sb);
        }
    }
}

TEST(SliceSpec, ParseAndErrors) {
    EXPECT_EQ(SliceSpec::parse("context+verb"), slices::context_verb);
    EXPECT_EQ(SliceSpec::parse("context+func+op1").width(), 12);
    EXPECT_EQ(slices::context_func_op1.to_string(), "context+func+op1");
    EXPECT_EQ(error_kind([] { SliceSpec::parse("verb+context"); }), codec_error::kind::spec);
    EXPECT_EQ(error_kind([] { SliceSpec::parse("verb+verb"); }), codec_error::kind::spec);
    EXPECT_EQ(error_kind([] { SliceSpec::parse("colour"); }), codec_error::kind::spec);
    EXPECT_EQ(error_kind([] { slice_key(kSayTwoSquared, SliceSpec{}); }), codec_error::kind::spec);
}

TEST(ValidateOutput, Examples) {
    EXPECT_FALSE(validate_output({0b100, 0b00100}));
    EXPECT_EQ(validate_output({44, 412164}), Malformation::bad_verb);
    EXPECT_EQ(validate_output({0b100, 412164}), Malformation::overflow);
    EXPECT_EQ(validate_output({0b100, kMaxValue + 1}), Malformation::overflow);
}

TEST(ValidateOutput, AcceptsExactlyTwoVerbsTimesValueRange) {
    std::size_t accepted = 0;
    for (std::uint64_t bits = 0; bits < (1u << kOutputBits); ++bits) {
        const OutputFrame out{bits >> kValueBits, bits & kMaxValue};
        const bool expected = out.verb == 0b100 || out.verb == 0b110;
        ASSERT_EQ(well_formed(out), expected);
        accepted += expected;
    }
    EXPECT_EQ(accepted, 2u * (kMaxValue + 1));
}

TEST(Output, EncodeDecode) {
    EXPECT_EQ(encode_output({0b100, 4}), "1000000100");
    EXPECT_EQ(decode_output("1000000100"), (OutputFrame{0b100, 4}));
    EXPECT_THROW(encode_output({44, 4}), codec_error);
    EXPECT_THROW(decode_output("100000010"), codec_error);
}

TEST(Text, CanonicalForms) {
    EXPECT_EQ(format_input(kSayTwoSquared), "10000,100,111,0010,0000");
    EXPECT_EQ(parse_input("10000,100,111,0010,0000"), kSayTwoSquared);
    EXPECT_EQ(format_output({0b100, 4}), "100,0000100");
    EXPECT_EQ(format_output({44, 412164}), "101100,1100100101000000100");
    EXPECT_EQ(parse_output("101100,1100100101000000100"), (OutputFrame{44, 412164}));
    EXPECT_THROW(parse_input("10000,100,111,0010"), codec_error);
}

TEST(Binary, ThreeBytesPerFrame) {
    gen::Gen g(13);
    std::vector<InputFrame> frames;
    for (int i = 0; i < 64; ++i) frames.push_back(g.frame(g.registry_context()));
    const auto bytes = write_frames(frames);
    ASSERT_EQ(bytes.size(), frames.size() * 3);
    EXPECT_EQ(read_frames(bytes), frames);
    for (std::size_t i = 0; i < frames.size(); ++i) EXPECT_EQ(bytes[i * 3 + 2] & 0x1F, 0);

    const auto one = write_frames(std::vector<InputFrame>{kSayTwoSquared});
    EXPECT_EQ(one, (std::vector<std::uint8_t>{0b10000100, 0b11100100, 0b00000000}));

    auto bad = bytes;
    bad[2] |= 1;
    EXPECT_THROW(read_frames(bad), codec_error);
    bad.pop_back();
    EXPECT_THROW(read_frames(bad), codec_error);
}

TEST(Registry, FixedEntries) {
    ContextRegistry r;
    EXPECT_EQ(r.at("R,T_i,A,L"), (ContextCode{0b10000}));
    EXPECT_EQ(r.at("R,T_i,A',L'"), (ContextCode{0b10101}));
    EXPECT_EQ(r.at("R,T_i,B"), (ContextCode{0b10110}));
    EXPECT_EQ(r.at("R,T_i,A' photo"), (ContextCode{0b10100}));
    EXPECT_EQ(r.at("M,T_j"), (ContextCode{0b11010}));
    for (const auto& e : r.entries()) {
        EXPECT_TRUE(e.fixed);
        EXPECT_TRUE(e.code.source_present());
    }
    EXPECT_TRUE(contexts::memory.memory_flag());
    EXPECT_FALSE(contexts::alice_lab.memory_flag());
}

TEST(Registry, InjectiveAndGuarded) {
    ContextRegistry r;
    EXPECT_EQ(error_kind([&] { r.register_context({0b10000}, "copy of alice"); }), codec_error::kind::registry);
    EXPECT_EQ(error_kind([&] { r.register_context({0b10011}, "R,T_i,B"); }), codec_error::kind::registry);
    EXPECT_EQ(error_kind([&] { r.register_context({0b00011}, "no source"); }), codec_error::kind::registry);
    EXPECT_EQ(error_kind([&] { r.register_context({0b100000}, "too wide"); }), codec_error::kind::registry);
    r.register_context({0b10011}, "elsewhere");
    EXPECT_EQ(r.label_of({0b10011}), "elsewhere");
    EXPECT_FALSE(r.find("nowhere"));
    std::set<std::uint8_t> codes;
    for (const auto& e : r.entries()) EXPECT_TRUE(codes.insert(e.code.bits).second);
}

TEST(Registry, BitRoles) {
    EXPECT_EQ(ContextRegistry::person_bits(), 0b00110);
    EXPECT_EQ(ContextRegistry::photo_bits(), 0b00100);
    EXPECT_EQ(ContextRegistry::location_bits(), 0b00001);
    EXPECT_EQ(alice_elsewhere, (ContextCode{0b10001}));
}
