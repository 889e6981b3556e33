#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "interleave/environment.hpp"
#include "interleave/evaluation.hpp"
#include "interleave/fitting.hpp"
#include "interleave/flat_agent.hpp"
#include "interleave/hrl_agent.hpp"
#include "interleave/scenario.hpp"

namespace interleave {

using ordered_json = nlohmann::ordered_json;

inline constexpr int kFormatVersion = 1;

std::vector<std::string> builtin_names();
Scenario builtin_scenario(const std::string& name);

// --- scenarios -------------------------------------------------------------

ordered_json scenario_to_json(const Scenario& scenario);
/// Field-level errors are reported as ValidationError("<path>: <problem>").
Scenario scenario_from_json(const ordered_json& j);
/// Canonical text: fixed key order, two-space indent, trailing newline.
std::string dump_scenario(const Scenario& scenario);

Scenario load_scenario(const std::filesystem::path& path);
void save_scenario(const Scenario& scenario, const std::filesystem::path& path);
/// A builtin name or a path to a scenario file.
Scenario resolve_scenario(const std::string& name_or_path);

// --- traces ----------------------------------------------------------------

ordered_json state_to_json(const EnvState& s);
EnvState state_from_json(const ordered_json& j, const std::string& where);

/// Line-delimited JSON: a header line followed by one line per record.
std::string trace_to_jsonl(const Trace& trace);
/// Empty input gives an empty trace. Chain and reward sum are revalidated.
Trace trace_from_jsonl(const std::string& text);

void write_trace(const Trace& trace, const std::filesystem::path& path);
Trace read_trace(const std::filesystem::path& path);
void write_trace_csv(const Trace& trace, const std::filesystem::path& path);

/// Every trace file (*.jsonl) in a directory, in file-name order.
std::vector<Trace> read_trace_dir(const std::filesystem::path& dir);

/// Re-executes every record against the environment and checks the
/// outcome matches. Throws ValidationError on the first mismatch.
void check_trace_replays(const Environment& env, const Trace& trace);

// --- policies --------------------------------------------------------------

ordered_json config_to_json(const LearningConfig& config);
LearningConfig config_from_json(const ordered_json& j);

ordered_json policy_to_json(const HierarchicalPolicy& policy, const Scenario& scenario);
HierarchicalPolicy hierarchical_from_json(const ordered_json& j, const Scenario& scenario);
ordered_json policy_to_json(const FlatAgent& agent, const Scenario& scenario);
FlatAgent flat_from_json(const ordered_json& j, const Scenario& scenario);

/// "hrl" or "flat", read from a snapshot's `agent` field.
std::string snapshot_kind(const ordered_json& j);

ordered_json read_json(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

// --- reports ---------------------------------------------------------------

ordered_json report_to_json(const MetricReport& report);
std::string report_csv_header();
std::string report_csv_row(const std::string& participant, const std::string& model, const MetricReport& report);

/// episode,mean,std per line, after a header.
std::string curve_csv(const std::vector<CurvePoint>& curve);

// --- fits ------------------------------------------------------------------

ordered_json params_to_json(const ParamSet& params);
ParamSet params_from_json(const ordered_json& j, const std::string& where);
/// Best parameters, fractions and the full evaluation history.
ordered_json fit_result_to_json(const FitResult& result);
std::string fit_csv_header();
std::string fit_csv_row(const std::string& participant, const FitResult& result);

/// Shortest round-trip decimal text of a double.
std::string format_double(double v);

}  // namespace interleave
