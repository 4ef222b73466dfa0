#include "nullstate/cli.hpp"

#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include <boost/program_options.hpp>
#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fmt/format.h>
#include <fstream>
#include <ostream>
#include <sstream>

#include "nullstate/context_registry.hpp"

namespace nullstate::cli {

namespace fs = std::filesystem;
namespace po = boost::program_options;
using nlohmann::json;

namespace {

std::vector<std::string> split(std::string_view text, char sep) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (true) {
        const auto end = text.find(sep, start);
        parts.emplace_back(text.substr(start, end - start));
        if (end == std::string_view::npos) break;
        start = end + 1;
    }
    return parts;
}

void reject_unknown(const json& j, std::initializer_list<std::string_view> keys, std::string_view where) {
    if (!j.is_object()) throw usage_error(std::string(where) + " must be a JSON object");
    for (const auto& [k, v] : j.items()) {
        if (std::find(keys.begin(), keys.end(), k) == keys.end()) {
            throw usage_error("unknown key '" + k + "' in " + std::string(where));
        }
    }
}

template <class T>
void read(const json& j, const char* key, T& into) {
    if (!j.contains(key)) return;
    try {
        into = j.at(key).get<T>();
    } catch (const json::exception& ex) {
        throw usage_error(std::string("bad value for '") + key + "': " + ex.what());
    }
}

packet::ContextCode parse_context(const json& j) {
    if (!j.is_string()) throw usage_error("context must be a string");
    const auto text = j.get<std::string>();
    packet::ContextRegistry registry;
    if (auto code = registry.find(text)) return *code;
    if (text.size() == static_cast<std::size_t>(packet::kContextBits) &&
        text.find_first_not_of("01") == std::string::npos) {
        return packet::ContextCode{static_cast<std::uint8_t>(packet::from_bits(text))};
    }
    throw usage_error("unknown context '" + text + "' (use 5 bits or a registry label)");
}

std::string loss_name(neural::Loss l) { return l == neural::Loss::mse ? "mse" : "cross_entropy"; }

neural::Loss parse_loss(const std::string& s) {
    if (s == "mse") return neural::Loss::mse;
    if (s == "cross_entropy") return neural::Loss::cross_entropy;
    throw usage_error("unknown loss '" + s + "' (mse or cross_entropy)");
}

std::string bits(packet::ContextCode c) { return packet::to_bits(c.bits, packet::kContextBits); }

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw usage_error("cannot write " + path.string());
    f << content;
    spdlog::info("wrote {}", path.string());
}

void configure_logging() {
    auto logger = spdlog::stderr_logger_st("nullstate");
    spdlog::set_default_logger(logger);
    spdlog::set_pattern("[%l] %v");
    const char* level = std::getenv("NULLSTATE_LOG");
    spdlog::set_level(level ? spdlog::level::from_str(level) : spdlog::level::warn);
}

struct Options {
    std::string command;
    std::string name;
    std::optional<std::string> config;
    std::optional<std::string> state;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> seeds;
    std::string out = "out";
    std::vector<std::string> emit;
};

constexpr std::string_view kUsageText =
    "usage: nullstate <command> [args] [options]\n"
    "commands:\n"
    "  train                 train the square lesson network\n"
    "  scenario NAME         run transfer | attachment | grief | grief-response\n"
    "  qa                    answer the question battery (--state or --config)\n"
    "  ood                   out-of-distribution study over --seeds\n"
    "options:\n"
    "  --config PATH  --seed N  --seeds N1,N2,...  --out DIR  --emit csv,json,text  --state PATH\n";

std::vector<std::uint64_t> seed_list(const Options& o, std::uint64_t fallback) {
    if (o.seeds) return parse_seeds(*o.seeds);
    return {o.seed.value_or(fallback)};
}

json config_or_empty(const Options& o) { return o.config ? load_config(*o.config) : json::object(); }

int cmd_train(const Options& o, std::ostream& out) {
    const json j = config_or_empty(o);
    reject_unknown(j, {"seed", "network", "train"}, "train config");
    auto nc = network_config(j.value("network", json::object()));
    packet::ContextCode context = packet::contexts::alice_lab;
    if (j.contains("train")) {
        const auto& t = j.at("train");
        reject_unknown(t, {"context"}, "train section");
        if (t.contains("context")) context = parse_context(t.at("context"));
    }
    std::uint64_t base_seed = 1;
    read(j, "seed", base_seed);

    const auto samples = neural::square_lesson(context);
    fs::create_directories(o.out);
    int code = kOk;
    for (auto seed : seed_list(o, base_seed)) {
        json canonical = {{"network", to_json(nc)}, {"train", {{"context", bits(context)}}}};
        const auto hash = config_hash(canonical);
        auto cfg = nc.train;
        cfg.seed = seed;
        auto net = neural::Network::make(nc.widths, nc.bias_floor, seed, nc.init_scale);
        const auto result = neural::train(std::move(net), samples, cfg);
        const auto correct = static_cast<std::size_t>(
            std::lround(neural::accuracy(result.net, samples, cfg.threshold) * static_cast<double>(samples.size())));

        const auto header = "# " + provenance_line(seed, hash) + "\n";
        write_file(fs::path(o.out) / fmt::format("checkpoint-seed{}.txt", seed), header + neural::write_checkpoint(result.net));
        std::string csv = header + "epoch,loss,accuracy\n";
        for (const auto& e : result.history) csv += fmt::format("{},{:.9g},{:.6f}\n", e.epoch, e.loss, e.accuracy);
        write_file(fs::path(o.out) / fmt::format("loss-seed{}.csv", seed), csv);

        out << fmt::format("train seed={} accuracy={}/{} epochs={} {}\n", seed, correct, samples.size(), result.epochs_run,
                           result.converged ? "converged" : "budget-exhausted");
        if (!result.converged) code = kBudget;
    }
    return code;
}

int cmd_scenario(const Options& o, std::ostream& out) {
    if (o.name.empty()) throw usage_error("scenario needs a name: transfer, attachment, grief, grief-response");
    if (!scenario::is_scenario(o.name)) {
        throw usage_error("unknown scenario '" + o.name + "'; valid names: transfer, attachment, grief, grief-response");
    }
    auto cfg = scenario_config(o.name, config_or_empty(o));
    const auto emit = parse_emit(o.emit);
    fs::create_directories(o.out);
    for (auto seed : seed_list(o, cfg.seed)) {
        cfg.seed = seed;
        const auto hash = config_hash(to_json(cfg));
        scenario::SessionState state;
        const auto report = scenario::run(cfg, &state);
        const auto stem = fs::path(o.out) / fmt::format("{}-seed{}", cfg.name, seed);
        if (emit.contains(Emit::csv)) write_file(stem.string() + ".csv", report_csv(report, hash));
        if (emit.contains(Emit::json)) write_file(stem.string() + ".json", report_json(report, hash));
        if (emit.contains(Emit::text)) write_file(stem.string() + ".txt", report_text(report, hash));
        if (cfg.name == "grief-response") {
            auto js = state_to_json(state);
            js["meta"] = {{"version", kVersion}, {"seed", seed}, {"config_hash", hash}};
            write_file(stem.string() + ".state.json", js.dump(2) + "\n");
        }
        out << summary_line(report) << '\n';
    }
    return kOk;
}

int cmd_qa(const Options& o, std::ostream& out) {
    scenario::SessionState state;
    std::uint64_t seed = o.seed.value_or(1);
    json canonical;
    if (o.state) {
        const auto j = load_config(*o.state);
        state = state_from_json(j);
        canonical = state_to_json(state);
    } else if (o.config) {
        const auto j = load_config(*o.config);
        reject_unknown(j, {"seed", "qa"}, "qa config");
        if (!j.contains("qa")) throw usage_error("qa config needs a 'qa' section");
        const auto& q = j.at("qa");
        reject_unknown(q, {"scene", "alice_departed", "strategies", "memory_sessions"}, "qa section");
        if (!o.seed) read(j, "seed", seed);
        const auto scene = q.contains("scene") ? parse_context(q.at("scene")) : packet::contexts::alice_lab;
        bool departed = false;
        int sessions = 2;
        std::vector<std::string> names;
        read(q, "alice_departed", departed);
        read(q, "memory_sessions", sessions);
        read(q, "strategies", names);
        std::vector<scenario::Strategy> strategies;
        for (const auto& n : names) strategies.push_back(scenario::parse_strategy(n));
        state = scenario::make_state(scene, departed, strategies, sessions, seed);
        canonical = {{"scene", bits(scene)}, {"alice_departed", departed}, {"strategies", names},
                     {"memory_sessions", sessions}};
    } else {
        throw usage_error("qa needs a session state (--state PATH) or a config with a 'qa' section (--config PATH)");
    }
    std::string transcript;
    for (const auto& line : scenario::replay_qa(state)) transcript += line.question + ": " + line.answer + "\n";
    out << transcript;
    fs::create_directories(o.out);
    write_file(fs::path(o.out) / "qa.txt", "# " + provenance_line(seed, config_hash(canonical)) + "\n" + transcript);
    return kOk;
}

int cmd_ood(const Options& o, std::ostream& out) {
    const json j = config_or_empty(o);
    reject_unknown(j, {"seed", "network"}, "ood config");
    const auto nc = network_config(j.value("network", json::object()));
    std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    if (o.seeds) {
        seeds = parse_seeds(*o.seeds);
    } else if (o.seed) {
        seeds = {*o.seed};
    }
    const auto summary = scenario::run_ood(seeds, nc);
    const auto hash = config_hash({{"network", to_json(nc)}});
    std::string csv = "# " + provenance_line(seeds.front(), hash) +
                      "\nseed,converged,epochs,train_accuracy,ood_correct,gate_rejected,quiescent_output,samples\n";
    for (const auto& s : summary.seeds) {
        csv += fmt::format("{},{},{},{:.4f},{:.4f},{},{},{}\n", s.seed, s.converged ? 1 : 0, s.epochs, s.train_accuracy,
                           s.ood_correct, s.gate_rejected, s.quiescent_output, s.samples);
    }
    fs::create_directories(o.out);
    write_file(fs::path(o.out) / "ood.csv", csv);
    out << fmt::format("ood seeds={} mean_correct={:.4f} null_rate={:.4f}\n", seeds.size(), summary.mean_ood_correct,
                       summary.null_rate);
    return kOk;
}

}  // namespace

std::set<Emit> parse_emit(const std::vector<std::string>& values) {
    if (values.empty()) return {Emit::csv, Emit::json, Emit::text};
    std::set<Emit> emit;
    for (const auto& v : values) {
        for (const auto& part : split(v, ',')) {
            if (part == "csv") emit.insert(Emit::csv);
            else if (part == "json") emit.insert(Emit::json);
            else if (part == "text") emit.insert(Emit::text);
            else throw usage_error("unknown --emit format '" + part + "' (csv, json, text)");
        }
    }
    return emit;
}

std::vector<std::uint64_t> parse_seeds(std::string_view list) {
    std::vector<std::uint64_t> seeds;
    for (const auto& part : split(list, ',')) {
        std::uint64_t v = 0;
        auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), v);
        if (part.empty() || ec != std::errc() || ptr != part.data() + part.size()) {
            throw usage_error("bad seed '" + part + "' in --seeds");
        }
        seeds.push_back(v);
    }
    return seeds;
}

json load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw usage_error("cannot read config '" + path + "'");
    try {
        return json::parse(f);
    } catch (const json::parse_error& ex) {
        throw usage_error("config '" + path + "' is not valid JSON: " + ex.what());
    }
}

scenario::NetworkConfig network_config(const json& j) {
    reject_unknown(j, {"enabled", "widths", "bias_floor", "init_scale", "learning_rate", "epochs", "loss", "threshold"},
                   "network section");
    scenario::NetworkConfig nc;
    read(j, "enabled", nc.enabled);
    read(j, "widths", nc.widths);
    read(j, "bias_floor", nc.bias_floor);
    read(j, "init_scale", nc.init_scale);
    read(j, "learning_rate", nc.train.learning_rate);
    read(j, "epochs", nc.train.epochs);
    read(j, "threshold", nc.train.threshold);
    if (j.contains("loss")) {
        std::string loss;
        read(j, "loss", loss);
        nc.train.loss = parse_loss(loss);
    }
    if (nc.widths.size() < 2 || nc.widths.front() != static_cast<std::size_t>(packet::kInputBits) ||
        nc.widths.back() != static_cast<std::size_t>(packet::kOutputBits)) {
        throw usage_error(fmt::format("network widths must start at {} and end at {}", packet::kInputBits, packet::kOutputBits));
    }
    return nc;
}

json to_json(const scenario::NetworkConfig& nc) {
    return {{"enabled", nc.enabled},
            {"widths", nc.widths},
            {"bias_floor", nc.bias_floor},
            {"init_scale", nc.init_scale},
            {"learning_rate", nc.train.learning_rate},
            {"epochs", nc.train.epochs},
            {"loss", loss_name(nc.train.loss)},
            {"threshold", nc.train.threshold}};
}

scenario::ScenarioConfig scenario_config(std::string_view name, const json& j) {
    reject_unknown(j, {"scenario", "seed", "table", "strategies", "memory_sessions", "network"}, "scenario config");
    auto cfg = scenario::default_config(name);
    read(j, "seed", cfg.seed);
    read(j, "memory_sessions", cfg.memory_sessions);
    if (j.contains("table")) {
        const auto& t = j.at("table");
        reject_unknown(t, {"functions", "person_dependent", "photo_tolerant", "location_dependent", "memory_readable"},
                       "table section");
        read(t, "functions", cfg.table.functions);
        read(t, "person_dependent", cfg.table.person_dependent);
        read(t, "photo_tolerant", cfg.table.photo_tolerant);
        read(t, "location_dependent", cfg.table.location_dependent);
        read(t, "memory_readable", cfg.table.memory_readable);
        try {
            symbolic::build_table(cfg.table);
        } catch (const symbolic::config_error& ex) {
            throw usage_error(std::string("table section: ") + ex.what());
        }
    }
    if (j.contains("strategies")) {
        std::vector<std::string> names;
        read(j, "strategies", names);
        cfg.strategies.clear();
        for (const auto& n : names) {
            try {
                cfg.strategies.push_back(scenario::parse_strategy(n));
            } catch (const std::invalid_argument& ex) {
                throw usage_error(ex.what());
            }
        }
    }
    if (j.contains("network")) cfg.network = network_config(j.at("network"));
    return cfg;
}

json to_json(const scenario::ScenarioConfig& cfg) {
    std::vector<std::string> strategies;
    for (auto s : cfg.strategies) strategies.emplace_back(scenario::strategy_name(s));
    return {{"scenario", cfg.name},
            {"seed", cfg.seed},
            {"memory_sessions", cfg.memory_sessions},
            {"table",
             {{"functions", cfg.table.functions},
              {"person_dependent", cfg.table.person_dependent},
              {"photo_tolerant", cfg.table.photo_tolerant},
              {"location_dependent", cfg.table.location_dependent},
              {"memory_readable", cfg.table.memory_readable}}},
            {"strategies", strategies},
            {"network", to_json(cfg.network)}};
}

std::string config_hash(const json& canonical) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : canonical.dump()) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return fmt::format("{:016x}", h);
}

std::string provenance_line(std::uint64_t seed, std::string_view hash) {
    return fmt::format("nullstate {} seed={} config={}", kVersion, seed, hash);
}

std::string report_csv(const scenario::ScenarioReport& r, std::string_view hash) {
    std::string csv = "# " + provenance_line(r.seed, hash) + "\n";
    csv += "scenario,phase,context,functionality,null_fraction,cost_steps,seed\n";
    for (const auto& row : r.rows) {
        csv += fmt::format("{},{},{},{:.4f},{:.4f},{},{}\n", r.scenario, row.phase, bits(row.context), row.functionality,
                           row.null_fraction, row.cost_steps, r.seed);
    }
    return csv;
}

std::string report_json(const scenario::ScenarioReport& r, std::string_view hash) {
    json rows = json::array();
    for (const auto& row : r.rows) {
        rows.push_back({{"phase", row.phase},
                        {"context", bits(row.context)},
                        {"functionality", row.functionality},
                        {"null_fraction", row.null_fraction},
                        {"cost_steps", row.cost_steps}});
    }
    json follow = json::array();
    for (const auto& f : r.follow) {
        follow.push_back({{"position", scenario::position_name(f.position)},
                          {"action", scenario::action_name(f.action)},
                          {"score_before", f.score_before},
                          {"score_after", f.score_after}});
    }
    json qa = json::array();
    for (const auto& q : r.qa) qa.push_back({{"question", q.question}, {"answer", q.answer}});
    const json j = {{"meta", {{"version", kVersion}, {"seed", r.seed}, {"config_hash", hash}}},
                    {"scenario", r.scenario},
                    {"rows", rows},
                    {"follow", follow},
                    {"qa", qa},
                    {"notes", r.notes},
                    {"summary", {{"before", r.before}, {"after", r.after}}}};
    return j.dump(2) + "\n";
}

std::string report_text(const scenario::ScenarioReport& r, std::string_view hash) {
    std::ostringstream s;
    s << "# " << provenance_line(r.seed, hash) << '\n';
    s << "scenario " << r.scenario << '\n';
    for (const auto& row : r.rows) {
        s << fmt::format("  {:<24} {}  functionality {:.2f}  null {:.2f}  cost {}\n", row.phase, bits(row.context),
                         row.functionality, row.null_fraction, row.cost_steps);
    }
    for (const auto& f : r.follow) {
        s << fmt::format("  follow {:<17} -> {:<6} score {:.2f} -> {:.2f}\n", scenario::position_name(f.position),
                         scenario::action_name(f.action), f.score_before, f.score_after);
    }
    for (const auto& q : r.qa) s << "  " << q.question << ": " << q.answer << '\n';
    for (const auto& n : r.notes) s << "  note: " << n << '\n';
    s << summary_line(r) << '\n';
    return s.str();
}

std::string summary_line(const scenario::ScenarioReport& r) {
    return fmt::format("{} seed={} before={:.2f} after={:.2f}", r.scenario, r.seed, r.before, r.after);
}

json state_to_json(const scenario::SessionState& s) {
    std::vector<std::string> applied;
    for (auto a : s.applied) applied.emplace_back(scenario::strategy_name(a));
    return {{"scene", bits(s.scene)}, {"alice_departed", s.alice_departed}, {"applied", applied}, {"memories", s.memories}};
}

scenario::SessionState state_from_json(const json& j) {
    reject_unknown(j, {"scene", "alice_departed", "applied", "memories", "meta"}, "session state");
    if (!j.contains("scene") || !j.contains("memories")) throw usage_error("session state needs 'scene' and 'memories'");
    scenario::SessionState s;
    s.scene = parse_context(j.at("scene"));
    read(j, "alice_departed", s.alice_departed);
    read(j, "memories", s.memories);
    std::vector<std::string> applied;
    read(j, "applied", applied);
    for (const auto& a : applied) s.applied.push_back(scenario::parse_strategy(a));
    return s;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    if (!spdlog::get("nullstate")) configure_logging();

    Options o;
    po::options_description flags("options");
    flags.add_options()
        ("help,h", "show usage")
        ("config", po::value<std::string>(), "JSON config file")
        ("state", po::value<std::string>(), "session state file for qa")
        ("seed", po::value<std::uint64_t>(), "seed")
        ("seeds", po::value<std::string>(), "comma-separated seed list")
        ("out", po::value<std::string>()->default_value("out"), "output directory")
        ("emit", po::value<std::vector<std::string>>()->composing(), "csv, json, text")
        ("command", po::value<std::string>(), "")
        ("name", po::value<std::string>(), "");
    po::positional_options_description positional;
    positional.add("command", 1).add("name", 1);

    try {
        po::variables_map vm;
        po::store(po::command_line_parser(args).options(flags).positional(positional).run(), vm);
        po::notify(vm);
        if (vm.count("help") || !vm.count("command")) {
            (vm.count("help") ? out : err) << kUsageText;
            return vm.count("help") ? kOk : kUsage;
        }
        o.command = vm["command"].as<std::string>();
        if (vm.count("name")) o.name = vm["name"].as<std::string>();
        if (vm.count("config")) o.config = vm["config"].as<std::string>();
        if (vm.count("state")) o.state = vm["state"].as<std::string>();
        if (vm.count("seed")) o.seed = vm["seed"].as<std::uint64_t>();
        if (vm.count("seeds")) o.seeds = vm["seeds"].as<std::string>();
        if (vm.count("emit")) o.emit = vm["emit"].as<std::vector<std::string>>();
        o.out = vm["out"].as<std::string>();
        if (!o.name.empty() && o.command != "scenario") throw usage_error("unexpected argument '" + o.name + "'");
        spdlog::debug("command {} out {}", o.command, o.out);

        if (o.command == "train") return cmd_train(o, out);
        if (o.command == "scenario") return cmd_scenario(o, out);
        if (o.command == "qa") return cmd_qa(o, out);
        if (o.command == "ood") return cmd_ood(o, out);
        throw usage_error("unknown command '" + o.command + "'");
    } catch (const po::error& ex) {
        err << "nullstate: " << ex.what() << '\n' << kUsageText;
    } catch (const usage_error& ex) {
        err << "nullstate: " << ex.what() << '\n';
    } catch (const neural::divergence_error& ex) {
        err << "nullstate: training diverged: " << ex.what() << '\n';
        return kBudget;
    } catch (const std::exception& ex) {
        err << "nullstate: " << ex.what() << '\n';
    }
    return kUsage;
}

}  // namespace nullstate::cli
