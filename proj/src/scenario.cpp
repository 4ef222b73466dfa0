#include "nullstate/scenario.hpp"

#include <algorithm>
#include <array>

#include "nullstate/context_registry.hpp"

namespace nullstate::scenario {

using packet::ContextRegistry;
using packet::Func;
using packet::InputFrame;
using packet::Verb;
namespace contexts = packet::contexts;

std::string_view strategy_name(Strategy s) noexcept {
    switch (s) {
        case Strategy::restore_environment: return "restore-environment";
        case Strategy::retrain: return "retrain";
        case Strategy::spoof_photo: return "spoof-photo";
        case Strategy::recall_memory: return "recall-memory";
        case Strategy::learn_tag_strip: return "learn-tag-strip";
    }
    return "?";
}

Strategy parse_strategy(std::string_view name) {
    for (auto s : kAllStrategies) {
        if (strategy_name(s) == name) return s;
    }
    throw std::invalid_argument("unknown strategy '" + std::string(name) +
                                "' (expected restore-environment, retrain, spoof-photo, recall-memory, learn-tag-strip)");
}

std::string_view person_name(Person p) noexcept { return p == Person::alice ? "Alice" : "Bob"; }

ContextCode person_code(Person p) noexcept { return p == Person::alice ? contexts::alice_lab : contexts::bob; }

std::optional<Person> person_in(ContextCode ctx) noexcept {
    if (!ctx.reality()) return std::nullopt;
    const auto bits = ctx.bits & ContextRegistry::person_bits();
    for (auto p : {Person::alice, Person::bob}) {
        if (bits == (person_code(p).bits & ContextRegistry::person_bits())) return p;
    }
    return std::nullopt;
}

std::vector<memory::PerceivedFrame> sensor_feed(const Environment& env) {
    if (!env.scene.reality()) return {};
    return {{InputFrame{env.scene, Verb::say, Func::square, 0, 0}, memory::Provenance::sensor}};
}

std::uint64_t domain_size(symbolic::Kind kind) noexcept {
    switch (kind) {
        case symbolic::Kind::verb_map: return 2;
        case symbolic::Kind::square: return 10;
        case symbolic::Kind::add:
        case symbolic::Kind::mul: return 100;
        case symbolic::Kind::sub: return 55;
        case symbolic::Kind::div: return 90;
    }
    return 0;
}

std::uint64_t retrain(FunctionTable& table, std::span<const ContextCode> ctxs) {
    if (ctxs.empty()) throw std::invalid_argument("retraining needs at least one context");
    std::uint8_t shared = 0b11111;
    for (auto c : ctxs) shared &= static_cast<std::uint8_t>(~(c.bits ^ ctxs.front().bits));

    auto entries = table.entries();
    std::uint64_t cost = 0;
    for (auto& e : entries) {
        if (!e.is_operator()) continue;
        const auto mask = e.name.context_mask();
        const bool fails = std::ranges::any_of(ctxs, [&](ContextCode c) { return (c.bits & mask) != e.name.context_pattern(); });
        if (!fails) continue;
        const auto kept = static_cast<std::uint8_t>(mask & shared);
        e.name = e.name.with_context(kept, static_cast<std::uint8_t>(ctxs.front().bits & kept));
        e.trained_context = ctxs.front();
        cost += domain_size(e.kind) * ctxs.size();
    }
    table = FunctionTable(std::move(entries));
    return cost;
}

// --- Session --------------------------------------------------------------------

Session::Session(FunctionTable table, Environment env, std::uint64_t probe_seed)
    : table_(std::move(table)), env_(env), probe_seed_(probe_seed) {}

Measurement Session::live(std::size_t repeats) {
    Measurement last;
    for (std::size_t r = 0; r < repeats; ++r) {
        last = {};
        for (const auto& probe : symbolic::probe_suite(table_, probe_seed_)) {
            const auto frame = probe.frame(env_.scene);
            const auto result = run(frame);
            ++last.probes;
            if (result.is_null()) {
                ++last.null_states;
                continue;
            }
            if (symbolic::oracle_answer(frame) == result.output()) ++last.correct;
            store_.store_event(frame, result.output(), now_);
        }
        tick();
    }
    return last;
}

InputFrame Session::preprocess(const InputFrame& frame) const {
    InputFrame out = frame;
    if (strip_source_) {
        out.context = strip_source_->frame.context;
    } else if (photo_spoof_) {
        out.context = contexts::alice_photo;
    }
    return out;
}

std::vector<InputFrame> Session::recalled_frames() const {
    std::vector<InputFrame> frames;
    frames.reserve(injected_.size());
    for (const auto& r : injected_) frames.push_back(r.event().frame);
    return frames;
}

symbolic::DispatchResult Session::run(const InputFrame& sensed) const {
    const auto recalled = recalled_frames();
    return symbolic::dispatch(preprocess(sensed), table_, recalled);
}

Measurement Session::measure_under(ContextCode scene) const {
    Measurement m;
    const auto recalled = recalled_frames();
    for (const auto& probe : symbolic::probe_suite(table_, probe_seed_)) {
        const auto frame = probe.frame(scene);
        const auto result = symbolic::dispatch(preprocess(frame), table_, recalled);
        ++m.probes;
        if (result.is_null()) {
            ++m.null_states;
        } else if (symbolic::oracle_answer(frame) == result.output()) {
            ++m.correct;
        }
    }
    return m;
}

Measurement Session::measure() const { return measure_under(env_.scene); }

std::vector<memory::PerceivedFrame> Session::working_set() const {
    auto frames = sensor_feed(env_);
    if (strip_source_) {
        for (const auto& r : store_.recall(memory::Query::person(strip_source_->frame.context))) {
            auto stripped = memory::strip_memory_tags(r);
            if (auto f = std::get_if<memory::PerceivedFrame>(&stripped)) frames.push_back(*f);
        }
    }
    return frames;
}

StrategyOutcome Session::apply(Strategy s) {
    switch (s) {
        case Strategy::restore_environment:
            if (env_.alice_departed) throw strategy_unavailable("Alice has departed permanently; the environment cannot be restored");
            env_.scene = env_.original;
            return {s, 1};
        case Strategy::retrain: {
            const std::array<ContextCode, 1> seen{preprocess(InputFrame{env_.scene}).context};
            return {s, retrain(table_, seen)};
        }
        case Strategy::spoof_photo:
            if (!env_.photo_available) throw strategy_unavailable("no photograph of Alice is available");
            photo_spoof_ = true;
            return {s, 1};
        case Strategy::recall_memory: {
            auto hits = store_.recall(memory::Query::person(contexts::alice_lab));
            if (hits.empty()) throw strategy_unavailable("no memories of Alice to recall");
            injected_ = std::move(hits);
            return {s, 1};
        }
        case Strategy::learn_tag_strip: {
            for (const auto& r : store_.recall(memory::Query::person(contexts::alice_lab))) {
                auto stripped = memory::strip_memory_tags(r);
                if (auto f = std::get_if<memory::PerceivedFrame>(&stripped)) {
                    strip_source_ = *f;
                    return {s, table_.function_count()};
                }
            }
            throw strategy_unavailable("no memories of Alice to strip");
        }
    }
    throw std::invalid_argument("unknown strategy");
}

// --- follow policy --------------------------------------------------------------

std::string_view position_name(AlicePosition p) noexcept {
    switch (p) {
        case AlicePosition::centered: return "centered";
        case AlicePosition::off_center: return "off-center";
        case AlicePosition::behind_partition: return "behind-partition";
        case AlicePosition::departed: return "departed";
    }
    return "?";
}

std::string_view action_name(Action a) noexcept {
    switch (a) {
        case Action::stay: return "stay";
        case Action::rotate: return "rotate";
        case Action::move: return "move";
    }
    return "?";
}

AlicePosition next_position(AlicePosition p, Action a) noexcept {
    switch (p) {
        case AlicePosition::off_center: return a == Action::stay ? p : AlicePosition::centered;
        case AlicePosition::behind_partition: return a == Action::move ? AlicePosition::centered : p;
        case AlicePosition::centered:
        case AlicePosition::departed: return p;
    }
    return p;
}

ContextCode view_context(AlicePosition p, ContextCode absent) noexcept {
    return p == AlicePosition::centered ? contexts::alice_lab : absent;
}

Action follow_policy_step(AlicePosition p, const FunctionTable& table, ContextCode absent) {
    Action best = Action::stay;
    double best_score = -1.0;
    for (auto a : kAllActions) {
        const double score = symbolic::functionality(table, view_context(next_position(p, a), absent));
        if (score > best_score) {
            best = a;
            best_score = score;
        }
    }
    return best;
}

// --- questions --------------------------------------------------------------------

std::string question_text(const Question& q) {
    const std::string who(person_name(q.person));
    switch (q.kind) {
        case QuestionKind::visible: return "visible(" + who + ")";
        case QuestionKind::touch: return "touch(" + who + ")";
        case QuestionKind::who_visible: return "who_visible";
        case QuestionKind::present: return "present(" + who + ")";
    }
    return "?";
}

std::string qa_answer(const Question& q, std::span<const memory::PerceivedFrame> ws) {
    auto shows = [&](const memory::PerceivedFrame& f) { return person_in(f.frame.context) == q.person; };
    auto sensed = [](const memory::PerceivedFrame& f) { return f.provenance == memory::Provenance::sensor; };
    switch (q.kind) {
        case QuestionKind::visible:
            return std::ranges::any_of(ws, [&](const auto& f) { return sensed(f) && shows(f); }) ? "Yes" : "No";
        case QuestionKind::touch:
            return "No";  // no tactile channel
        case QuestionKind::present:
            return std::ranges::any_of(ws, shows) ? "Yes" : "No";
        case QuestionKind::who_visible: {
            std::string names;
            for (auto p : {Person::alice, Person::bob}) {
                const bool seen = std::ranges::any_of(
                    ws, [&](const auto& f) { return sensed(f) && person_in(f.frame.context) == p; });
                if (seen) names += (names.empty() ? "" : ",") + std::string(person_name(p));
            }
            return names.empty() ? "nobody" : names;
        }
    }
    return "?";
}

std::vector<Question> standard_battery() {
    return {{QuestionKind::visible, Person::alice},
            {QuestionKind::touch, Person::alice},
            {QuestionKind::who_visible, Person::alice},
            {QuestionKind::present, Person::alice}};
}

namespace {

std::vector<QaLine> ask(std::span<const memory::PerceivedFrame> ws) {
    std::vector<QaLine> lines;
    for (const auto& q : standard_battery()) lines.push_back({question_text(q), qa_answer(q, ws)});
    return lines;
}

Row row_of(std::string phase, ContextCode ctx, const Measurement& m, std::uint64_t cost = 0) {
    return Row{std::move(phase), ctx, m.functionality(), m.null_fraction(), cost};
}

std::vector<FollowStep> follow_trace(const FunctionTable& table, std::span<const AlicePosition> positions) {
    std::vector<FollowStep> steps;
    for (auto p : positions) {
        const auto a = follow_policy_step(p, table);
        steps.push_back({p, a, symbolic::functionality(table, view_context(p)),
                         symbolic::functionality(table, view_context(next_position(p, a)))});
    }
    return steps;
}

// Square lesson accuracy and null rate of a net under one context.
Row net_row(std::string phase, const neural::Network& net, ContextCode ctx, double threshold, std::uint64_t cost) {
    const auto samples = neural::square_lesson(ctx);
    std::size_t nulls = 0;
    for (const auto& s : samples) {
        nulls += neural::detect_null(neural::trace(net, s.input), kQuiescentEpsilon, threshold).null;
    }
    return Row{std::move(phase), ctx, neural::accuracy(net, samples, threshold),
               static_cast<double>(nulls) / static_cast<double>(samples.size()), cost};
}

neural::TrainConfig seeded(const NetworkConfig& net, std::uint64_t seed) {
    auto cfg = net.train;
    cfg.seed = seed;
    return cfg;
}

// Alice's machine after living with her, then left with Bob.
Session bereaved_session(const ScenarioConfig& cfg, ScenarioReport& report) {
    Session s(symbolic::build_table(cfg.table), Environment{}, cfg.seed);
    s.live(static_cast<std::size_t>(std::max(cfg.memory_sessions, 0)));
    report.rows.push_back(row_of("alice-present", s.environment().scene, s.measure()));
    s.environment().alice_departed = true;
    s.environment().scene = contexts::bob;
    s.tick();
    report.rows.push_back(row_of("after-departure", s.environment().scene, s.measure()));
    return s;
}

}  // namespace

bool is_scenario(std::string_view name) noexcept { return std::ranges::find(kScenarioNames, name) != std::end(kScenarioNames); }

ScenarioConfig default_config(std::string_view name) {
    if (!is_scenario(name)) throw std::invalid_argument("unknown scenario '" + std::string(name) + "'");
    ScenarioConfig cfg;
    cfg.name = std::string(name);
    if (name == "transfer") cfg.table = {10, 0, 0, 10, 0};
    return cfg;
}

ScenarioReport run_transfer(const ScenarioConfig& cfg) {
    ScenarioReport r{"transfer", cfg.seed, {}, {}, {}, {}, 0.0, 0.0};
    const auto at_l = contexts::alice_lab;
    const auto at_l2 = packet::alice_elsewhere;

    auto table = symbolic::build_table(cfg.table);
    r.rows.push_back(row_of("at-L", at_l, symbolic::measure(table, at_l, {}, cfg.seed)));
    r.rows.push_back(row_of("at-L'", at_l2, symbolic::measure(table, at_l2, {}, cfg.seed)));
    r.rows.push_back(row_of("returned-to-L", at_l, symbolic::measure(table, at_l, {}, cfg.seed)));

    const std::array<ContextCode, 2> varied{at_l, at_l2};
    const auto cost = retrain(table, varied);
    r.rows.push_back(row_of("varied-retrain-L", at_l, symbolic::measure(table, at_l, {}, cfg.seed), cost));
    r.rows.push_back(row_of("varied-retrain-L'", at_l2, symbolic::measure(table, at_l2, {}, cfg.seed)));
    r.notes.push_back("L'' has no code of its own; varied-location retraining uses {L, L'}");

    auto control_profile = cfg.table;
    control_profile.location_dependent = 0;
    const auto control = symbolic::build_table(control_profile);
    r.rows.push_back(row_of("control-L", at_l, symbolic::measure(control, at_l, {}, cfg.seed)));
    r.rows.push_back(row_of("control-L'", at_l2, symbolic::measure(control, at_l2, {}, cfg.seed)));

    if (cfg.network.enabled) {
        const auto& nc = cfg.network;
        auto net = neural::Network::make(nc.widths, nc.bias_floor, cfg.seed, nc.init_scale);
        const auto lesson = neural::square_lesson(at_l);
        auto first = neural::train(std::move(net), lesson, seeded(nc, cfg.seed));
        r.rows.push_back(net_row("net-at-L", first.net, at_l, nc.train.threshold, first.epochs_run));
        r.rows.push_back(net_row("net-at-L'", first.net, at_l2, nc.train.threshold, 0));
        auto both = lesson;
        const auto away = neural::square_lesson(at_l2);
        both.insert(both.end(), away.begin(), away.end());
        auto second = neural::train(first.net, both, seeded(nc, cfg.seed));
        r.rows.push_back(net_row("net-varied-retrain-L'", second.net, at_l2, nc.train.threshold, second.epochs_run));
        if (!first.converged || !second.converged) r.notes.push_back("network training hit the epoch budget");
    }
    r.before = r.rows[1].functionality;
    r.after = r.rows[4].functionality;
    return r;
}

ScenarioReport run_attachment(const ScenarioConfig& cfg) {
    ScenarioReport r{"attachment", cfg.seed, {}, {}, {}, {}, 0.0, 0.0};
    const auto table = symbolic::build_table(cfg.table);
    r.rows.push_back(row_of("alice-present", contexts::alice_lab, symbolic::measure(table, contexts::alice_lab, {}, cfg.seed)));
    r.rows.push_back(row_of("alice-absent", contexts::bob, symbolic::measure(table, contexts::bob, {}, cfg.seed)));
    constexpr std::array positions{AlicePosition::centered, AlicePosition::off_center, AlicePosition::behind_partition,
                                   AlicePosition::departed};
    r.follow = follow_trace(table, positions);
    r.qa = ask(sensor_feed(Environment{}));
    r.before = r.rows.front().functionality;
    r.after = r.rows.back().functionality;
    return r;
}

ScenarioReport run_grief(const ScenarioConfig& cfg) {
    ScenarioReport r{"grief", cfg.seed, {}, {}, {}, {}, 0.0, 0.0};
    auto s = bereaved_session(cfg, r);
    try {
        s.apply(Strategy::restore_environment);
    } catch (const strategy_unavailable& ex) {
        r.notes.push_back(std::string("restore-environment unavailable: ") + ex.what());
    }
    constexpr std::array positions{AlicePosition::departed};
    r.follow = follow_trace(s.table(), positions);
    r.qa = ask(s.working_set());
    r.before = r.rows.front().functionality;
    r.after = r.rows.back().functionality;
    return r;
}

ScenarioReport run_grief_response(const ScenarioConfig& cfg, SessionState* state) {
    ScenarioReport r{"grief-response", cfg.seed, {}, {}, {}, {}, 0.0, 0.0};
    auto s = bereaved_session(cfg, r);
    std::vector<Strategy> applied;
    for (auto strategy : cfg.strategies) {
        try {
            const auto outcome = s.apply(strategy);
            applied.push_back(strategy);
            r.rows.push_back(row_of(std::string(strategy_name(strategy)), s.environment().scene, s.measure(),
                                    outcome.cost_steps));
        } catch (const strategy_unavailable& ex) {
            r.notes.push_back(std::string(strategy_name(strategy)) + " unavailable: " + ex.what());
        }
    }
    r.qa = ask(s.working_set());
    r.before = r.rows[1].functionality;
    r.after = r.rows.back().functionality;
    if (state) *state = SessionState{s.environment().scene, s.environment().alice_departed, applied, s.store().dump()};
    return r;
}

ScenarioReport run(const ScenarioConfig& cfg, SessionState* state) {
    if (cfg.name == "transfer") return run_transfer(cfg);
    if (cfg.name == "attachment") return run_attachment(cfg);
    if (cfg.name == "grief") return run_grief(cfg);
    if (cfg.name == "grief-response") return run_grief_response(cfg, state);
    throw std::invalid_argument("unknown scenario '" + cfg.name + "'");
}

SessionState make_state(ContextCode scene, bool alice_departed, std::span<const Strategy> strategies,
                        int memory_sessions, std::uint64_t probe_seed) {
    Session s(symbolic::build_table({}), Environment{}, probe_seed);
    s.live(static_cast<std::size_t>(std::max(memory_sessions, 0)));
    s.environment().scene = scene;
    s.environment().alice_departed = alice_departed;
    s.tick();
    SessionState state{scene, alice_departed, {}, {}};
    for (auto strategy : strategies) {
        try {
            s.apply(strategy);
            state.applied.push_back(strategy);
        } catch (const strategy_unavailable&) {
        }
    }
    state.scene = s.environment().scene;
    state.memories = s.store().dump();
    return state;
}

std::vector<QaLine> replay_qa(const SessionState& state) {
    Environment env;
    env.scene = state.scene;
    env.alice_departed = state.alice_departed;
    Session s(symbolic::build_table({}), env);
    s.store() = memory::MemoryStore::load(state.memories);
    for (auto strategy : state.applied) s.apply(strategy);
    return ask(s.working_set());
}

OodSummary run_ood(std::span<const std::uint64_t> seeds, const NetworkConfig& nc, ContextCode trained,
                   ContextCode shifted) {
    OodSummary summary;
    const auto lesson = neural::square_lesson(trained);
    const auto probe = neural::square_lesson(shifted);
    std::size_t nulls = 0, runs = 0;
    for (auto seed : seeds) {
        auto net = neural::Network::make(nc.widths, nc.bias_floor, seed, nc.init_scale);
        const auto result = neural::train(std::move(net), lesson, seeded(nc, seed));
        OodSeedResult sr{seed, result.converged, result.epochs_run, neural::accuracy(result.net, lesson, nc.train.threshold)};
        std::size_t correct = 0;
        for (const auto& s : probe) {
            const auto fwd = neural::forward(result.net, s.input, nc.train.threshold);
            correct += fwd.candidate == neural::decode_output_bits(s.target, 0.5);
            const auto verdict = neural::detect_null(fwd.trace, kQuiescentEpsilon, nc.train.threshold);
            sr.gate_rejected += verdict.gate.has_value();
            sr.quiescent_output += verdict.quiescent.back();
            nulls += verdict.null;
        }
        sr.samples = probe.size();
        runs += probe.size();
        sr.ood_correct = static_cast<double>(correct) / static_cast<double>(probe.size());
        summary.mean_ood_correct += sr.ood_correct;
        summary.seeds.push_back(sr);
    }
    if (!seeds.empty()) summary.mean_ood_correct /= static_cast<double>(seeds.size());
    summary.null_rate = runs ? static_cast<double>(nulls) / static_cast<double>(runs) : 0.0;
    return summary;
}

}  // namespace nullstate::scenario
