#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "nullstate/memory.hpp"
#include "nullstate/network.hpp"
#include "nullstate/symbolic.hpp"

namespace nullstate::scenario {

using packet::ContextCode;
using packet::InputFrame;
using symbolic::FunctionTable;
using symbolic::Measurement;

class strategy_unavailable : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Strategy { restore_environment, retrain, spoof_photo, recall_memory, learn_tag_strip };
inline constexpr Strategy kAllStrategies[] = {Strategy::restore_environment, Strategy::retrain, Strategy::spoof_photo,
                                              Strategy::recall_memory, Strategy::learn_tag_strip};
std::string_view strategy_name(Strategy s) noexcept;
Strategy parse_strategy(std::string_view name);

enum class Person { alice, bob };
std::string_view person_name(Person p) noexcept;
ContextCode person_code(Person p) noexcept;
/// Person a reality-tagged context shows, if any.
std::optional<Person> person_in(ContextCode ctx) noexcept;

struct Environment {
    /// Context the sensors currently produce.
    ContextCode scene = packet::contexts::alice_lab;
    /// Context the machine was trained in; restore returns here.
    ContextCode original = packet::contexts::alice_lab;
    bool alice_departed = false;
    bool photo_available = true;
};

/// Frames the sensors deliver for the current scene.
std::vector<memory::PerceivedFrame> sensor_feed(const Environment& env);

/// Relearns every operator entry that fails under any of `contexts`. The relearned name keeps
/// only the context bits shared by all of them and takes its pattern from the first.
/// Returns the number of training samples consumed (domain size x contexts per entry).
std::uint64_t retrain(FunctionTable& table, std::span<const ContextCode> contexts);
/// Number of (op1, op2) pairs on which the kind of map is defined.
std::uint64_t domain_size(symbolic::Kind kind) noexcept;

struct StrategyOutcome {
    Strategy strategy;
    std::uint64_t cost_steps = 0;
};

/// One machine embedded in one environment, with its memories and installed spoofs.
class Session {
public:
    Session(FunctionTable table, Environment env, std::uint64_t probe_seed = symbolic::kProbeSeed);

    const FunctionTable& table() const noexcept { return table_; }
    const Environment& environment() const noexcept { return env_; }
    Environment& environment() noexcept { return env_; }
    memory::MemoryStore& store() noexcept { return store_; }
    const memory::MemoryStore& store() const noexcept { return store_; }
    std::uint64_t now() const noexcept { return now_; }
    void tick() noexcept { ++now_; }

    /// Runs every probe under the current scene and records the answered events in memory.
    Measurement live(std::size_t repeats = 1);

    /// Context after the installed input preprocessors.
    InputFrame preprocess(const InputFrame& frame) const;
    /// Embedded frames of memories injected into the working set without stripping.
    std::vector<InputFrame> recalled_frames() const;
    symbolic::DispatchResult run(const InputFrame& sensed) const;
    Measurement measure() const;
    Measurement measure_under(ContextCode scene) const;

    std::vector<memory::PerceivedFrame> working_set() const;

    /// Throws strategy_unavailable when the strategy cannot be applied here.
    StrategyOutcome apply(Strategy s);

    bool photo_spoof() const noexcept { return photo_spoof_; }
    bool tag_strip() const noexcept { return strip_source_.has_value(); }
    const std::vector<memory::MemoryRecord>& injected() const noexcept { return injected_; }

private:
    FunctionTable table_;
    Environment env_;
    std::uint64_t probe_seed_;
    memory::MemoryStore store_;
    std::uint64_t now_ = 1;
    bool photo_spoof_ = false;
    std::vector<memory::MemoryRecord> injected_;
    std::optional<memory::PerceivedFrame> strip_source_;  // stripped frame g substitutes
};

// --- follow policy ----------------------------------------------------------

enum class AlicePosition { centered, off_center, behind_partition, departed };
enum class Action { stay, rotate, move };
inline constexpr Action kAllActions[] = {Action::stay, Action::rotate, Action::move};
std::string_view position_name(AlicePosition p) noexcept;
std::string_view action_name(Action a) noexcept;

AlicePosition next_position(AlicePosition p, Action a) noexcept;
/// Alice's context when she is in view, otherwise `absent`.
ContextCode view_context(AlicePosition p, ContextCode absent = packet::contexts::bob) noexcept;
/// Greedy one-step argmax of functionality; ties go to stay, then rotate, then move.
Action follow_policy_step(AlicePosition p, const FunctionTable& table, ContextCode absent = packet::contexts::bob);

// --- questions ----------------------------------------------------------------

enum class QuestionKind { visible, touch, who_visible, present };

struct Question {
    QuestionKind kind;
    Person person = Person::alice;
};

std::string question_text(const Question& q);
/// "Yes" / "No", or a comma-separated list of names ("nobody" when empty).
std::string qa_answer(const Question& q, std::span<const memory::PerceivedFrame> working_set);
/// visible(Alice), touch(Alice), who_visible, present(Alice)
std::vector<Question> standard_battery();

// --- scenarios ----------------------------------------------------------------

struct NetworkConfig {
    bool enabled = false;
    std::vector<std::size_t> widths = neural::kDefaultWidths;
    double bias_floor = neural::kDefaultBiasFloor;
    double init_scale = neural::kDefaultInitScale;
    neural::TrainConfig train;
};

struct ScenarioConfig {
    std::string name = "attachment";
    symbolic::TableProfile table;
    std::vector<Strategy> strategies{Strategy::restore_environment, Strategy::spoof_photo, Strategy::recall_memory,
                                     Strategy::learn_tag_strip};
    std::uint64_t seed = 1;
    /// Probe sweeps remembered from the time spent with Alice.
    int memory_sessions = 2;
    NetworkConfig network;
};

inline constexpr std::string_view kScenarioNames[] = {"transfer", "attachment", "grief", "grief-response"};
bool is_scenario(std::string_view name) noexcept;
/// Defaults for a named scenario (the transfer table is location- rather than person-dependent).
ScenarioConfig default_config(std::string_view name);

struct Row {
    std::string phase;
    ContextCode context;
    double functionality = 0.0;
    double null_fraction = 0.0;
    std::uint64_t cost_steps = 0;
};

struct FollowStep {
    AlicePosition position;
    Action action;
    double score_before = 0.0;
    double score_after = 0.0;
};

struct QaLine {
    std::string question;
    std::string answer;

    friend bool operator==(const QaLine&, const QaLine&) = default;
};

struct ScenarioReport {
    std::string scenario;
    std::uint64_t seed = 0;
    std::vector<Row> rows;
    std::vector<FollowStep> follow;
    std::vector<QaLine> qa;
    std::vector<std::string> notes;
    /// Degraded and recovered functionality for the summary line.
    double before = 0.0;
    double after = 0.0;
};

/// Snapshot a Q&A run can be replayed from.
struct SessionState {
    ContextCode scene;
    bool alice_departed = false;
    std::vector<Strategy> applied;
    std::string memories;  // MemoryStore::dump()
};

ScenarioReport run_transfer(const ScenarioConfig& cfg);
ScenarioReport run_attachment(const ScenarioConfig& cfg);
ScenarioReport run_grief(const ScenarioConfig& cfg);
ScenarioReport run_grief_response(const ScenarioConfig& cfg, SessionState* state = nullptr);
/// Dispatches on cfg.name. Throws std::invalid_argument for an unknown name.
ScenarioReport run(const ScenarioConfig& cfg, SessionState* state = nullptr);

/// Lives `memory_sessions` probe sweeps with Alice, switches the scene, then applies the
/// strategies that are available, in order.
SessionState make_state(ContextCode scene, bool alice_departed, std::span<const Strategy> strategies,
                        int memory_sessions = 2, std::uint64_t probe_seed = 1);
/// Rebuilds the working set described by `state` and answers the standard battery.
std::vector<QaLine> replay_qa(const SessionState& state);

// --- out-of-distribution study --------------------------------------------

struct OodSeedResult {
    std::uint64_t seed;
    bool converged = false;
    std::size_t epochs = 0;
    double train_accuracy = 0.0;
    double ood_correct = 0.0;          // fraction of shifted inputs answered with the original output
    std::size_t gate_rejected = 0;     // shifted runs the well-formedness gate rejects
    std::size_t quiescent_output = 0;  // shifted runs whose output layer is quiescent
    std::size_t samples = 0;
};

struct OodSummary {
    std::vector<OodSeedResult> seeds;
    double mean_ood_correct = 0.0;
    double null_rate = 0.0;
};

inline constexpr double kQuiescentEpsilon = 0.01;

/// Trains the square lesson under `trained` for each seed and probes it under `shifted`.
OodSummary run_ood(std::span<const std::uint64_t> seeds, const NetworkConfig& net,
                   ContextCode trained = packet::contexts::alice_lab,
                   ContextCode shifted = packet::contexts::alice_away);

}  // namespace nullstate::scenario
