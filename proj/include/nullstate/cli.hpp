#pragma once

#include <cstdint>
#include <iosfwd>
#include <nlohmann/json.hpp>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "nullstate/scenario.hpp"

namespace nullstate::cli {

inline constexpr std::string_view kVersion = "0.1.0";

enum ExitCode : int { kOk = 0, kUsage = 1, kBudget = 2 };

class usage_error : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Emit { csv, json, text };
std::set<Emit> parse_emit(const std::vector<std::string>& values);
std::vector<std::uint64_t> parse_seeds(std::string_view list);

/// Reads a JSON config file. Throws usage_error when it is missing or malformed.
nlohmann::json load_config(const std::string& path);

/// Applies a JSON config over the named scenario's defaults. Unknown keys are rejected.
scenario::ScenarioConfig scenario_config(std::string_view name, const nlohmann::json& j);
scenario::NetworkConfig network_config(const nlohmann::json& j);
nlohmann::json to_json(const scenario::ScenarioConfig& cfg);
nlohmann::json to_json(const scenario::NetworkConfig& cfg);

/// FNV-1a 64 of the canonical JSON text, as 16 hex digits.
std::string config_hash(const nlohmann::json& canonical);
/// "nullstate 0.1.0 seed=N config=HASH"
std::string provenance_line(std::uint64_t seed, std::string_view hash);

/// Columns: scenario, phase, context, functionality, null_fraction, cost_steps, seed.
std::string report_csv(const scenario::ScenarioReport& r, std::string_view hash);
std::string report_json(const scenario::ScenarioReport& r, std::string_view hash);
std::string report_text(const scenario::ScenarioReport& r, std::string_view hash);
std::string summary_line(const scenario::ScenarioReport& r);

nlohmann::json state_to_json(const scenario::SessionState& s);
scenario::SessionState state_from_json(const nlohmann::json& j);

/// Entry point behind `nullstate`. args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace nullstate::cli
