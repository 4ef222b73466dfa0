#include <gtest/gtest.h>

#include "generators.hpp"
#include "nullstate/context_registry.hpp"
#include "nullstate/scenario.hpp"

using namespace nullstate;
using namespace nullstate::scenario;
using packet::contexts::alice_lab;
using packet::contexts::alice_photo;
using packet::contexts::bob;

namespace {

Session bereaved(std::uint64_t seed = 1) {
    Session s(symbolic::build_table({}), Environment{}, seed);
    s.live(2);
    s.environment().alice_departed = true;
    s.environment().scene = bob;
    s.tick();
    return s;
}

std::vector<std::string> answers(const std::vector<QaLine>& lines) {
    std::vector<std::string> out;
    for (const auto& l : lines) out.push_back(l.answer);
    return out;
}

std::vector<std::string> answers(const Session& s) {
    std::vector<std::string> out;
    const auto ws = s.working_set();
    for (const auto& q : standard_battery()) out.push_back(qa_answer(q, ws));
    return out;
}

const std::vector<std::string> kPostSpoof{"No", "No", "Bob", "Yes"};

}  // namespace

TEST(Transfer, LocationDependentTable) {
    const auto r = run_transfer(default_config("transfer"));
    ASSERT_GE(r.rows.size(), 7u);
    EXPECT_EQ(r.rows[0].phase, "at-L");
    EXPECT_DOUBLE_EQ(r.rows[0].functionality, 1.0);
    EXPECT_DOUBLE_EQ(r.rows[1].functionality, 0.0);
    EXPECT_DOUBLE_EQ(r.rows[2].functionality, 1.0);
    EXPECT_DOUBLE_EQ(r.rows[4].functionality, r.rows[3].functionality);
    EXPECT_DOUBLE_EQ(r.rows[5].functionality, r.rows[6].functionality);
    EXPECT_GT(r.rows[3].cost_steps, 0u);
}

TEST(Transfer, NetworkVariant) {
    auto cfg = default_config("transfer");
    cfg.network.enabled = true;
    const auto r = run_transfer(cfg);
    ASSERT_EQ(r.rows.size(), 10u);
    EXPECT_EQ(r.rows[7].phase, "net-at-L");
    EXPECT_DOUBLE_EQ(r.rows[7].functionality, 1.0);
    EXPECT_DOUBLE_EQ(r.rows[9].functionality, 1.0);
}

TEST(Retrain, VariedContextsDropDifferingBits) {
    auto table = symbolic::build_table({10, 0, 0, 10, 0});
    const std::array ctxs{alice_lab, packet::alice_elsewhere};
    EXPECT_EQ(retrain(table, ctxs), 2u * (100 + 100 + 55 + 55 + 100 + 100 + 90 + 90 + 10 + 10));
    for (auto c : ctxs) EXPECT_DOUBLE_EQ(symbolic::functionality(table, c), 1.0);
    EXPECT_EQ(retrain(table, ctxs), 0u);
    EXPECT_THROW(retrain(table, {}), std::invalid_argument);
}

TEST(Attachment, AliceAndBob) {
    const auto r = run_attachment(default_config("attachment"));
    EXPECT_DOUBLE_EQ(r.before, 1.0);
    EXPECT_DOUBLE_EQ(r.after, 0.2);
    EXPECT_EQ(answers(r.qa), (std::vector<std::string>{"Yes", "No", "Alice", "Yes"}));
}

TEST(Attachment, PersonIndependentControl) {
    auto cfg = default_config("attachment");
    cfg.table = {10, 0, 0, 0, 0};
    const auto r = run_attachment(cfg);
    EXPECT_DOUBLE_EQ(r.before, 1.0);
    EXPECT_DOUBLE_EQ(r.after, 1.0);
}

TEST(Follow, Examples) {
    const auto table = symbolic::build_table({});
    EXPECT_EQ(follow_policy_step(AlicePosition::centered, table), Action::stay);
    EXPECT_EQ(follow_policy_step(AlicePosition::off_center, table), Action::rotate);
    EXPECT_EQ(follow_policy_step(AlicePosition::behind_partition, table), Action::move);
    EXPECT_EQ(follow_policy_step(AlicePosition::departed, table), Action::stay);
}

TEST(Follow, MatchesBruteForceArgmax) {
    gen::Gen g(51);
    const AlicePosition positions[] = {AlicePosition::centered, AlicePosition::off_center,
                                       AlicePosition::behind_partition, AlicePosition::departed};
    for (int t = 0; t < 100; ++t) {
        const auto table = symbolic::build_table(g.profile());
        for (auto p : positions) {
            std::vector<double> score;
            for (auto a : kAllActions) score.push_back(symbolic::functionality(table, view_context(next_position(p, a))));
            const auto best = static_cast<std::size_t>(std::max_element(score.begin(), score.end()) - score.begin());
            ASSERT_EQ(follow_policy_step(p, table), kAllActions[best]);
        }
    }
}

TEST(Recovery, RestoreWhenAvailable) {
    Session s(symbolic::build_table({}), Environment{}, 1);
    s.environment().scene = bob;
    EXPECT_DOUBLE_EQ(s.measure().functionality(), 0.2);
    const auto out = s.apply(Strategy::restore_environment);
    EXPECT_EQ(out.cost_steps, 1u);
    EXPECT_DOUBLE_EQ(s.measure().functionality(), 1.0);
}

TEST(Recovery, RestoreUnavailableAfterDeparture) {
    auto s = bereaved();
    EXPECT_THROW(s.apply(Strategy::restore_environment), strategy_unavailable);
}

TEST(Recovery, EachStrategyAlone) {
    {
        auto s = bereaved();
        s.apply(Strategy::spoof_photo);
        EXPECT_DOUBLE_EQ(s.measure().functionality(), 0.4);
    }
    {
        auto s = bereaved();
        s.apply(Strategy::recall_memory);
        EXPECT_DOUBLE_EQ(s.measure().functionality(), 0.3);
        EXPECT_EQ(answers(s)[3], "No");  // unstripped memories are not reality
    }
    {
        auto s = bereaved();
        EXPECT_EQ(s.apply(Strategy::learn_tag_strip).cost_steps, 10u);
        EXPECT_GE(s.measure().functionality(), 0.99);
    }
    {
        auto s = bereaved();
        const auto out = s.apply(Strategy::retrain);
        EXPECT_DOUBLE_EQ(s.measure().functionality(), 1.0);
        EXPECT_GT(out.cost_steps, s.table().function_count());
    }
}

TEST(Recovery, StrategiesNeedTheirResources) {
    Session empty(symbolic::build_table({}), Environment{bob, alice_lab, true, false});
    EXPECT_THROW(empty.apply(Strategy::spoof_photo), strategy_unavailable);
    EXPECT_THROW(empty.apply(Strategy::recall_memory), strategy_unavailable);
    EXPECT_THROW(empty.apply(Strategy::learn_tag_strip), strategy_unavailable);
    EXPECT_EQ(parse_strategy("learn-tag-strip"), Strategy::learn_tag_strip);
    EXPECT_THROW(parse_strategy("forget"), std::invalid_argument);
}

TEST(Recovery, FunctionalityOrdering) {
    const auto r = run_grief_response(default_config("grief-response"));
    ASSERT_EQ(r.rows.size(), 5u);
    const double alice = r.rows[0].functionality, bob_only = r.rows[1].functionality, photo = r.rows[2].functionality,
                 memory = r.rows[3].functionality, strip = r.rows[4].functionality;
    EXPECT_DOUBLE_EQ(bob_only, 0.2);
    EXPECT_DOUBLE_EQ(photo, 0.4);
    EXPECT_LT(bob_only, photo);
    EXPECT_LT(photo, memory);
    EXPECT_LT(memory, strip);
    EXPECT_GE(strip, 0.99);
    EXPECT_LE(strip, alice);
    EXPECT_DOUBLE_EQ(alice, 1.0);
}

TEST(Recovery, CostOrdering) {
    Session s(symbolic::build_table({}), Environment{}, 1);
    s.environment().scene = bob;
    const auto restore = s.apply(Strategy::restore_environment).cost_steps;
    auto b = bereaved();
    const auto photo = b.apply(Strategy::spoof_photo).cost_steps;
    const auto strip = b.apply(Strategy::learn_tag_strip).cost_steps;
    const auto retrain_cost = bereaved().apply(Strategy::retrain).cost_steps;
    EXPECT_LT(restore, std::max(photo, strip));
    EXPECT_LE(std::max(photo, strip), b.table().function_count());
    EXPECT_LT(std::max(photo, strip), retrain_cost);
}

TEST(Recovery, TagStripComposesToTheOriginalEnvironment) {
    auto s = bereaved();
    s.apply(Strategy::learn_tag_strip);
    const auto table = symbolic::build_table({});
    for (const auto& p : symbolic::probe_suite(table, 1)) {
        const auto via_g = s.run(p.frame(bob));
        const auto original = symbolic::dispatch(p.frame(alice_lab), table);
        ASSERT_EQ(via_g.is_output(), original.is_output());
        if (original.is_output()) ASSERT_EQ(via_g.output(), original.output());
    }
}

TEST(QA, PostTagStrip) {
    auto s = bereaved();
    s.apply(Strategy::learn_tag_strip);
    EXPECT_EQ(answers(s), kPostSpoof);
    const auto ws = s.working_set();
    EXPECT_EQ(qa_answer({QuestionKind::present, Person::alice}, ws), "Yes");
    EXPECT_EQ(qa_answer({QuestionKind::visible, Person::alice}, ws), "No");
}

TEST(QA, BobOnlyAndAlicePresent) {
    EXPECT_EQ(answers(bereaved()), (std::vector<std::string>{"No", "No", "Bob", "No"}));
    Session with_alice(symbolic::build_table({}), Environment{});
    EXPECT_EQ(answers(with_alice), (std::vector<std::string>{"Yes", "No", "Alice", "Yes"}));
    Session photo(symbolic::build_table({}), Environment{alice_photo, alice_lab, false, true});
    EXPECT_EQ(answers(photo), (std::vector<std::string>{"No", "No", "nobody", "No"}));
    EXPECT_EQ(question_text({QuestionKind::present, Person::bob}), "present(Bob)");
}

TEST(QA, PersonDecoding) {
    EXPECT_EQ(person_in(alice_lab), Person::alice);
    EXPECT_EQ(person_in(packet::alice_elsewhere), Person::alice);
    EXPECT_EQ(person_in(bob), Person::bob);
    EXPECT_FALSE(person_in(alice_photo));
    EXPECT_FALSE(person_in(packet::contexts::alice_away));
    EXPECT_FALSE(person_in(packet::contexts::memory));
}

TEST(Scenario, GriefResponseStateReplaysTheSameAnswers) {
    SessionState state;
    const auto r = run_grief_response(default_config("grief-response"), &state);
    EXPECT_EQ(answers(r.qa), kPostSpoof);
    EXPECT_EQ(replay_qa(state), r.qa);
    ASSERT_EQ(r.notes.size(), 1u);
    EXPECT_EQ(state.applied.size(), 3u);
    const std::array strategies{Strategy::learn_tag_strip};
    EXPECT_EQ(answers(replay_qa(make_state(bob, true, strategies))), kPostSpoof);
}

TEST(Scenario, Grief) {
    const auto r = run_grief(default_config("grief"));
    EXPECT_DOUBLE_EQ(r.before, 1.0);
    EXPECT_DOUBLE_EQ(r.after, 0.2);
    ASSERT_EQ(r.follow.size(), 1u);
    EXPECT_EQ(r.follow[0].action, Action::stay);
    EXPECT_EQ(answers(r.qa), (std::vector<std::string>{"No", "No", "Bob", "No"}));
}

TEST(Scenario, DeterministicPerSeed) {
    for (auto name : kScenarioNames) {
        auto cfg = default_config(name);
        cfg.seed = 9;
        const auto a = run(cfg), b = run(cfg);
        ASSERT_EQ(a.rows.size(), b.rows.size());
        for (std::size_t i = 0; i < a.rows.size(); ++i) {
            EXPECT_EQ(a.rows[i].functionality, b.rows[i].functionality);
            EXPECT_EQ(a.rows[i].cost_steps, b.rows[i].cost_steps);
        }
    }
    EXPECT_THROW(default_config("picnic"), std::invalid_argument);
}

TEST(Ood, ReportsPerSeed) {
    const std::array<std::uint64_t, 2> seeds{1, 2};
    const auto s = run_ood(seeds, NetworkConfig{});
    ASSERT_EQ(s.seeds.size(), 2u);
    for (const auto& r : s.seeds) {
        EXPECT_TRUE(r.converged);
        EXPECT_EQ(r.samples, 20u);
        EXPECT_GE(r.ood_correct, 0.0);
        EXPECT_LE(r.ood_correct, 1.0);
    }
    EXPECT_GE(s.null_rate, 0.0);
    EXPECT_LE(s.null_rate, 1.0);
}
