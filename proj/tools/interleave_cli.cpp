#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "interleave/baselines.hpp"
#include "interleave/evaluation.hpp"
#include "interleave/experiments.hpp"
#include "interleave/fitting.hpp"
#include "interleave/flat_agent.hpp"
#include "interleave/hrl_agent.hpp"
#include "interleave/io.hpp"

namespace fs = std::filesystem;
using namespace interleave;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitRuntime = 3;

EpisodeMode parse_mode(const std::string& text, const Scenario& scenario) {
  if (text.empty()) return scenario.default_mode;
  if (text == "completion") return EpisodeMode::to_completion();
  const std::string prefix = "budget=";
  if (text.rfind(prefix, 0) == 0) {
    const std::string number = text.substr(prefix.size());
    char* end = nullptr;
    const double b = std::strtod(number.c_str(), &end);
    if (number.empty() || *end != '\0' || !(b > 0.0)) throw ValidationError("--mode: bad budget '" + number + "'");
    return EpisodeMode::budget(b);
  }
  throw ValidationError("--mode: expected 'completion' or 'budget=B', got '" + text + "'");
}

// Loads a policy for rollouts. Snapshots are read from `file`; without a
// file, learning agents are trained from scratch with `config`.
struct LoadedPolicy {
  std::optional<HierarchicalPolicy> hrl;
  std::optional<FlatAgent> flat;
  std::unique_ptr<Policy> policy;
};

LoadedPolicy load_policy(const std::string& kind, const std::string& file, const Environment& env,
                         const LearningConfig& config, std::uint64_t seed) {
  LoadedPolicy out;
  std::string k = kind;
  std::optional<ordered_json> snapshot;
  if (!file.empty()) {
    snapshot = read_json(file);
    const std::string stored = snapshot_kind(*snapshot);
    if (k.empty()) k = stored;
    if (k != stored) throw ValidationError("--policy " + k + " does not match snapshot agent '" + stored + "'");
  }
  if (k.empty()) k = "hrl";
  if (k == "hrl") {
    out.hrl = snapshot ? hierarchical_from_json(*snapshot, env.scenario()) : train(env, config);
    out.policy = std::make_unique<HierarchicalGreedy>(*out.hrl, env);
  } else if (k == "flat") {
    out.flat = snapshot ? flat_from_json(*snapshot, env.scenario()) : train_flat(env, config);
    out.policy = std::make_unique<FlatGreedy>(out.flat->table, env);
  } else if (k == "myopic" || k == "random") {
    if (snapshot) throw ValidationError("--policy-file is only meaningful for hrl and flat");
    if (k == "myopic") out.policy = std::make_unique<MyopicPolicy>(env);
    else out.policy = std::make_unique<RandomPolicy>(env, seed);
  } else {
    throw ValidationError("unknown policy '" + k + "'");
  }
  return out;
}

void check_scenario_match(const Trace& trace, const Scenario& scenario, const std::string& where) {
  if (trace.scenario_id != scenario.scenario_id) {
    throw ValidationError(where + ": trace belongs to scenario '" + trace.scenario_id + "', not '" +
                          scenario.scenario_id + "'");
  }
}

std::vector<Trace> load_references(const std::vector<std::string>& paths, const Environment& env) {
  std::vector<Trace> out;
  for (const auto& p : paths) {
    std::vector<Trace> batch;
    if (fs::is_directory(p)) batch = read_trace_dir(p);
    else batch.push_back(read_trace(p));
    for (auto& t : batch) {
      check_scenario_match(t, env.scenario(), p);
      check_trace_replays(env, t);
      out.push_back(std::move(t));
    }
  }
  if (out.empty()) throw ValidationError("no reference traces found");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hierarchical task-interleaving simulator, trainer and fitter"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for all subcommands");

  std::string scenario_arg;
  bool free_first = false;
  bool serial = false;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--scenario", scenario_arg, "Builtin scenario name or scenario file")->required();
    sub->add_flag("--free-first-selection", free_first, "First root selection of an episode pays no R_r");
  };

  LearningConfig learning;
  auto add_learning = [&](CLI::App* sub) {
    sub->add_option("--episodes", learning.episodes, "Training episodes")->capture_default_str();
    sub->add_option("--gamma-t", learning.gamma_t, "Type-level discount")->capture_default_str();
    sub->add_option("--gamma-r", learning.gamma_r, "Root-level discount")->capture_default_str();
    sub->add_option("--alpha", learning.alpha, "Learning rate")->capture_default_str();
  };

  std::uint64_t seed = 0;
  std::string out_path;

  // scenario
  auto* scen = app.add_subcommand("scenario", "Write a scenario in canonical form");
  add_common(scen);
  scen->add_option("--out", out_path, "Output scenario file")->required();

  // simulate
  std::string policy_kind, policy_file, mode_text, csv_path;
  auto* sim = app.add_subcommand("simulate", "Roll out one episode and store its trace");
  add_common(sim);
  add_learning(sim);
  sim->add_option("--policy", policy_kind, "Policy")->check(CLI::IsMember({"hrl", "flat", "myopic", "random"}));
  sim->add_option("--policy-file", policy_file, "Trained policy snapshot");
  sim->add_option("--seed", seed, "Episode seed")->capture_default_str();
  sim->add_option("--mode", mode_text, "completion or budget=B (default: scenario mode)");
  sim->add_option("--out", out_path, "Trace file (JSONL)")->required();
  sim->add_option("--csv", csv_path, "Also write the trace as CSV");

  // train
  std::string agent = "hrl", curve_path;
  int runs = 1;
  auto* tr = app.add_subcommand("train", "Train agents and write a snapshot and learning curve");
  add_common(tr);
  add_learning(tr);
  tr->add_option("--agent", agent, "Agent")->check(CLI::IsMember({"hrl", "flat"}))->capture_default_str();
  tr->add_option("--runs", runs, "Independent runs for the curve")->capture_default_str();
  tr->add_option("--seed", seed, "Base seed")->capture_default_str();
  tr->add_option("--out", out_path, "Snapshot of run 0")->required();
  tr->add_option("--curve", curve_path, "Learning curve CSV over runs");
  tr->add_flag("--serial", serial, "Train runs serially");

  // fit
  FitConfig fit_config;
  std::string traces_dir, summary_path, participant = "participant";
  auto* fit = app.add_subcommand("fit", "Fit a ParamSet to recorded traces (last file held out)");
  add_common(fit);
  fit->add_option("--traces", traces_dir, "Directory of *.jsonl traces")->required();
  fit->add_option("--iterations", fit_config.iterations, "Objective evaluations")->capture_default_str();
  fit->add_option("--trainings", fit_config.trainings_per_eval, "Trainings per evaluation")->capture_default_str();
  fit->add_option("--weights", fit_config.weights, "Comma separated discrepancy weights")->delimiter(',');
  fit->add_option("--initial-design", fit_config.initial_design, "Latin hypercube points")->capture_default_str();
  fit->add_option("--episodes", fit_config.learning.episodes, "Training episodes per policy")->capture_default_str();
  fit->add_option("--seed", seed, "Seed")->capture_default_str();
  fit->add_option("--out", out_path, "Fit result JSON")->required();
  fit->add_option("--summary", summary_path, "One-row CSV summary");
  fit->add_option("--participant", participant, "Label used in the summary")->capture_default_str();
  fit->add_flag("--serial", serial, "Evaluate trainings serially");

  // eval
  std::vector<std::string> references;
  auto* ev = app.add_subcommand("eval", "Score a policy against reference traces");
  add_common(ev);
  add_learning(ev);
  ev->add_option("--reference", references, "Reference trace file(s) or directory")->required();
  ev->add_option("--policy-file", policy_file, "Trained policy snapshot");
  ev->add_option("--policy", policy_kind, "Policy")->check(CLI::IsMember({"hrl", "flat", "myopic", "random"}));
  ev->add_option("--seed", seed, "Seed for rollouts")->capture_default_str();
  ev->add_option("--out", out_path, "Report JSON")->required();
  ev->add_option("--csv", csv_path, "Also write a one-row CSV");
  ev->add_option("--participant", participant, "Label used in the CSV")->capture_default_str();

  // synthesize
  std::string truth_path;
  int trials = 5;
  double type_noise = 0.15, root_noise = 0.0;
  auto* syn = app.add_subcommand("synthesize", "Generate trials of a synthetic participant with known parameters");
  add_common(syn);
  add_learning(syn);
  syn->add_option("--truth", truth_path, "ParamSet JSON (default: drawn from the seed)");
  syn->add_option("--trials", trials, "Trials to generate")->capture_default_str();
  syn->add_option("--type-noise", type_noise, "Random type-level action probability")->capture_default_str();
  syn->add_option("--root-noise", root_noise, "Random root-level action probability")->capture_default_str();
  syn->add_option("--seed", seed, "Seed")->capture_default_str();
  syn->add_option("--out", out_path, "Output directory")->required();

  // compare-flat
  auto* cmp = app.add_subcommand("compare-flat", "Hierarchical vs flat learning curves");
  add_common(cmp);
  add_learning(cmp);
  int cmp_runs = 100;
  cmp->add_option("--runs", cmp_runs, "Runs per agent")->capture_default_str();
  cmp->add_option("--seed", seed, "Base seed")->capture_default_str();
  cmp->add_option("--out", out_path, "Curves CSV")->required();
  cmp->add_option("--summary", summary_path, "Summary JSON");
  cmp->add_flag("--serial", serial, "Train runs serially");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  try {
    const Scenario scenario = resolve_scenario(scenario_arg);
    EnvOptions options;
    options.free_first_selection = free_first;
    const Environment env(scenario, options);
    learning.seed = seed;

    if (*scen) {
      save_scenario(scenario, out_path);
    } else if (*sim) {
      validate_config(learning);
      const EpisodeMode mode = parse_mode(mode_text, scenario);
      LoadedPolicy loaded = load_policy(policy_kind, policy_file, env, learning, seed);
      const Trace trace = rollout(env, *loaded.policy, env.reset(mode, seed), seed);
      write_trace(trace, out_path);
      if (!csv_path.empty()) write_trace_csv(trace, csv_path);
      std::cout << "total_reward " << format_double(trace.total_reward) << " records " << trace.records.size()
                << (trace.truncated ? " truncated" : "") << "\n";
    } else if (*tr) {
      validate_config(learning);
      LearningConfig first = learning;
      first.seed = training_seed(seed, 0);
      std::vector<std::vector<double>> returns;
      if (agent == "hrl") {
        write_text(out_path, policy_to_json(train(env, first), scenario).dump(2) + "\n");
        if (!curve_path.empty()) returns = hrl_runs(env, learning, runs, !serial);
      } else {
        write_text(out_path, policy_to_json(train_flat(env, first), scenario).dump(2) + "\n");
        if (!curve_path.empty()) returns = flat_runs(env, learning, runs, !serial);
      }
      if (!curve_path.empty()) write_text(curve_path, curve_csv(learning_curve(returns)));
    } else if (*fit) {
      fit_config.seed = seed;
      fit_config.parallel = !serial;
      validate_fit_config(fit_config);
      std::vector<Trace> trials = read_trace_dir(traces_dir);
      if (trials.size() < 2) throw ValidationError("--traces: need at least two traces (the last is held out)");
      for (const auto& t : trials) {
        check_scenario_match(t, scenario, traces_dir);
        check_trace_replays(env, t);
      }
      const Trace test = trials.back();
      trials.pop_back();
      const FitResult result = fit_participant(trials, test, scenario, fit_config, options);
      write_text(out_path, fit_result_to_json(result).dump(2) + "\n");
      if (!summary_path.empty()) write_text(summary_path, fit_csv_header() + fit_csv_row(participant, result));
      for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
      std::cout << "train_fraction " << format_double(result.train_fraction) << " test_fraction "
                << format_double(result.test_fraction) << "\n";
    } else if (*ev) {
      validate_config(learning);
      if (policy_kind.empty() && policy_file.empty()) {
        throw ValidationError("eval needs --policy-file or --policy myopic|random");
      }
      const std::vector<Trace> refs = load_references(references, env);
      LoadedPolicy loaded = load_policy(policy_kind, policy_file, env, learning, seed);
      const MetricReport report = evaluate_policy(env, *loaded.policy, refs, seed);
      write_text(out_path, report_to_json(report).dump(2) + "\n");
      if (!csv_path.empty()) {
        const std::string model = policy_kind.empty() ? (loaded.hrl ? "hrl" : "flat") : policy_kind;
        write_text(csv_path, report_csv_header() + report_csv_row(participant, model, report));
      }
    } else if (*syn) {
      validate_config(learning);
      ParamSet truth;
      if (truth_path.empty()) {
        std::mt19937_64 rng(seed);
        truth = random_params(scenario, rng);
      } else {
        truth = params_from_json(read_json(truth_path), "truth");
      }
      const SyntheticParticipant p =
          synthetic_participant(scenario, truth, trials, type_noise, root_noise, learning, seed);
      write_text(fs::path(out_path) / "truth.json", params_to_json(p.truth).dump(2) + "\n");
      for (std::size_t k = 0; k < p.trials.size(); ++k) {
        char name[32];
        std::snprintf(name, sizeof name, "trial_%03zu.jsonl", k);
        write_trace(p.trials[k], fs::path(out_path) / name);
      }
    } else if (*cmp) {
      const FlatComparison c = compare_flat(env, learning, cmp_runs, !serial);
      std::string csv = "episode,hrl_mean,hrl_std,flat_mean,flat_std\n";
      for (std::size_t e = 0; e < c.hrl.size(); ++e) {
        csv += std::to_string(e) + "," + format_double(c.hrl[e].mean) + "," + format_double(c.hrl[e].std) + "," +
               format_double(c.flat[e].mean) + "," + format_double(c.flat[e].std) + "\n";
      }
      write_text(out_path, csv);
      ordered_json s;
      s["format_version"] = kFormatVersion;
      s["runs"] = cmp_runs;
      s["episodes"] = learning.episodes;
      s["hrl_asymptote"] = c.hrl_summary.asymptote;
      s["flat_asymptote"] = c.flat_summary.asymptote;
      s["hrl_first_reach_90"] = c.hrl_summary.first_reach_90;
      s["flat_first_reach_90"] = c.flat_summary.first_reach_90;
      s["hrl_entries"] = c.hrl_entries;
      s["flat_entries"] = c.flat_entries;
      s["entry_ratio"] = c.hrl_entries > 0 ? c.flat_entries / c.hrl_entries : 0.0;
      if (!summary_path.empty()) write_text(summary_path, s.dump(2) + "\n");
      std::cout << s.dump(2) << "\n";
    }
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return 0;
}
