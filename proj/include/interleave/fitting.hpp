#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "interleave/environment.hpp"
#include "interleave/evaluation.hpp"
#include "interleave/hrl_agent.hpp"

namespace interleave {

struct FitConfig {
  int iterations = 60;
  int trainings_per_eval = 10;
  /// One independent fit per weight; the best by training fraction wins.
  std::vector<double> weights{100.0};
  int initial_design = 10;
  /// Exploration weight of the lower confidence bound mu - kappa * sigma.
  double kappa = 2.0;
  /// Random candidates scored by the acquisition per proposal.
  int acquisition_candidates = 2000;
  LearningConfig learning;  // gamma_t is overridden by each candidate
  std::uint64_t seed = 0;
  bool parallel = true;
};

void validate_fit_config(const FitConfig& config);

struct FitRecord {
  ParamSet params;
  double discrepancy = 0.0;
};

struct FitResult {
  ParamSet best_params;
  double best_discrepancy = 0.0;
  std::vector<FitRecord> history;
  double train_fraction = 0.0;
  double test_fraction = 0.0;
  double weight = 0.0;
  /// Set when the surrogate failed and proposals came from random search.
  bool surrogate_fallback = false;
  std::vector<std::string> warnings;
};

/// w * (1 - fraction of events where the policy picks the recorded instance).
double discrepancy(std::span<const SwitchEvent> events, Policy& policy, double w);

/// Fraction of the trial's switch events the policy reproduces.
double reproduced_fraction(Policy& policy, const Trace& trial);

/// Seed of the k-th training run of one evaluation. Shared across
/// candidates so that every candidate sees the same training noise.
std::uint64_t training_seed(std::uint64_t base, std::size_t k);

/// Mean discrepancy over `trainings_per_eval` trained policies and over
/// the training trials that contain switch events.
double evaluate_params(const ParamSet& params, std::span<const Trace> train_trials, const Scenario& scenario,
                       const FitConfig& config, double weight, const EnvOptions& options = {});

/// Mean held-out reproduced fraction over `trainings_per_eval` policies.
double heldout_fraction(const ParamSet& params, const Trace& test_trial, const Scenario& scenario,
                        const FitConfig& config, const EnvOptions& options = {});

FitResult fit_participant(std::span<const Trace> train_trials, const Trace& test_trial, const Scenario& scenario,
                          const FitConfig& config, const EnvOptions& options = {});

// --- parameter box ---------------------------------------------------------

/// Number of fitted coordinates: gamma_t, c_p, then one scale per type.
std::size_t param_dimension(const Scenario& scenario);
/// Maps the open unit cube onto the open parameter box.
ParamSet params_from_unit(std::span<const double> u, const Scenario& scenario);
std::vector<double> unit_from_params(const ParamSet& params, const Scenario& scenario);
ParamSet random_params(const Scenario& scenario, std::mt19937_64& rng);

/// n points of a latin hypercube in the unit cube, strictly inside it.
std::vector<std::vector<double>> latin_hypercube(std::size_t n, std::size_t dim, std::mt19937_64& rng);

// --- synthetic participants ------------------------------------------------

/// Follows `inner` but takes a uniformly random legal action with
/// probability `type_noise` at type-level and `root_noise` at root-level
/// decisions.
class NoisyPolicy : public Policy {
 public:
  NoisyPolicy(Policy& inner, const Environment& env, double type_noise, double root_noise, std::uint64_t seed)
      : inner_(inner), env_(env), type_noise_(type_noise), root_noise_(root_noise), rng_(seed) {}
  Primitive type_action(const EnvState& s) override;
  std::size_t root_action(const EnvState& s) override;

 private:
  Policy& inner_;
  const Environment& env_;
  double type_noise_;
  double root_noise_;
  std::mt19937_64 rng_;
};

struct SyntheticParticipant {
  ParamSet truth;
  std::vector<Trace> trials;  // the last one is the held-out trial
};

/// Trains one HRL agent on `truth` and rolls out `trials` noisy greedy
/// trials in the scenario's default mode. Trials without a switch event
/// are redrawn (bounded attempts).
SyntheticParticipant synthetic_participant(const Scenario& scenario, const ParamSet& truth, int trials,
                                           double type_noise, double root_noise, const LearningConfig& learning,
                                           std::uint64_t seed);

}  // namespace interleave
