#include "interleave/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "interleave/gp.hpp"
#include "interleave/kernels.hpp"

namespace interleave {

void validate_fit_config(const FitConfig& c) {
  if (c.iterations < 1) throw ValidationError("iterations must be >= 1");
  if (c.trainings_per_eval < 1) throw ValidationError("trainings_per_eval must be >= 1");
  if (c.initial_design < 1) throw ValidationError("initial_design must be >= 1");
  if (c.iterations < c.initial_design) throw ValidationError("iterations must be >= the initial design size");
  if (c.weights.empty()) throw ValidationError("at least one weight is required");
  for (double w : c.weights) {
    if (!(w > 0.0) || !std::isfinite(w)) throw ValidationError("weights must be positive");
  }
  if (!(c.kappa >= 0.0)) throw ValidationError("kappa must be non-negative");
  if (c.acquisition_candidates < 1) throw ValidationError("acquisition_candidates must be >= 1");
  validate_config(c.learning);
}

double discrepancy(std::span<const SwitchEvent> events, Policy& policy, double w) {
  if (events.empty()) throw ValidationError("discrepancy needs at least one switch event");
  if (!(w > 0.0)) throw ValidationError("weight must be positive");
  std::size_t hits = 0;
  for (const auto& e : events) {
    if (policy.root_action(e.state) == e.chosen) ++hits;
  }
  return w * (1.0 - static_cast<double>(hits) / static_cast<double>(events.size()));
}

double reproduced_fraction(Policy& policy, const Trace& trial) {
  const auto events = switch_events(trial);
  if (events.empty()) throw ValidationError("trial has no switch events");
  std::size_t hits = 0;
  for (const auto& e : events) {
    if (policy.root_action(e.state) == e.chosen) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(events.size());
}

std::uint64_t training_seed(std::uint64_t base, std::size_t k) {
  // splitmix64 finalizer over base and index
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(k) + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

namespace {

template <class T, class Fn>
std::vector<T> map_trainings(const FitConfig& config, Fn&& fn) {
  const auto n = static_cast<std::size_t>(config.trainings_per_eval);
  return config.parallel ? kernels::map_parallel<T>(n, fn) : kernels::map_serial<T>(n, fn);
}

EnvOptions perceived(const ParamSet& params, EnvOptions options) {
  options.perceived = params;
  return options;
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double evaluate_with_base(const ParamSet& params, std::span<const Trace> train_trials, const Scenario& scenario,
                          const FitConfig& config, double weight, const EnvOptions& options, std::uint64_t base) {
  validate_params(params, scenario.type_ids());
  std::vector<std::vector<SwitchEvent>> events;
  for (const auto& t : train_trials) {
    auto e = switch_events(t);
    if (!e.empty()) events.push_back(std::move(e));
  }
  if (events.empty()) throw ValidationError("no training trial contains a switch event");

  const Environment env(scenario, perceived(params, options));
  const auto per_training = map_trainings<double>(config, [&](std::size_t k) {
    LearningConfig learning = config.learning;
    learning.seed = training_seed(base, k);
    learning.gamma_t = params.gamma_t;
    const HierarchicalPolicy policy = train(env, learning);
    HierarchicalGreedy greedy(policy, env);
    double total = 0.0;
    for (const auto& e : events) total += discrepancy(e, greedy, weight);
    return total / static_cast<double>(events.size());
  });
  return mean(per_training);
}

double heldout_with_base(const ParamSet& params, const Trace& test_trial, const Scenario& scenario,
                         const FitConfig& config, const EnvOptions& options, std::uint64_t base) {
  validate_params(params, scenario.type_ids());
  if (switch_events(test_trial).empty()) throw ValidationError("held-out trial has no switch events");
  const Environment env(scenario, perceived(params, options));
  const auto fractions = map_trainings<double>(config, [&](std::size_t k) {
    LearningConfig learning = config.learning;
    learning.seed = training_seed(base, k);
    learning.gamma_t = params.gamma_t;
    const HierarchicalPolicy policy = train(env, learning);
    HierarchicalGreedy greedy(policy, env);
    return reproduced_fraction(greedy, test_trial);
  });
  return mean(fractions);
}

std::vector<double> clamp_unit(std::vector<double> u) {
  for (double& x : u) x = std::clamp(x, 1e-4, 1.0 - 1e-4);
  return u;
}

struct Bounds {
  double lo, hi;
};

std::vector<Bounds> box(const Scenario& scenario) {
  std::vector<Bounds> b{{ParamBounds::kGammaLo, ParamBounds::kGammaHi}, {ParamBounds::kCostLo, ParamBounds::kCostHi}};
  for (std::size_t t = 0; t < scenario.task_types.size(); ++t) b.push_back({ParamBounds::kScaleLo, ParamBounds::kScaleHi});
  return b;
}

}  // namespace

double evaluate_params(const ParamSet& params, std::span<const Trace> train_trials, const Scenario& scenario,
                       const FitConfig& config, double weight, const EnvOptions& options) {
  return evaluate_with_base(params, train_trials, scenario, config, weight, options, config.seed);
}

double heldout_fraction(const ParamSet& params, const Trace& test_trial, const Scenario& scenario,
                        const FitConfig& config, const EnvOptions& options) {
  return heldout_with_base(params, test_trial, scenario, config, options, config.seed);
}

std::size_t param_dimension(const Scenario& scenario) { return 2 + scenario.task_types.size(); }

ParamSet params_from_unit(std::span<const double> u_in, const Scenario& scenario) {
  if (u_in.size() != param_dimension(scenario)) throw ValidationError("unit vector has the wrong dimension");
  const auto u = clamp_unit({u_in.begin(), u_in.end()});
  const auto b = box(scenario);
  auto at = [&](std::size_t k) { return b[k].lo + u[k] * (b[k].hi - b[k].lo); };
  ParamSet p;
  p.gamma_t = at(0);
  p.c_p = at(1);
  for (std::size_t t = 0; t < scenario.task_types.size(); ++t) p.s_pt[scenario.task_types[t].type_id] = at(2 + t);
  return p;
}

std::vector<double> unit_from_params(const ParamSet& p, const Scenario& scenario) {
  const auto b = box(scenario);
  std::vector<double> u{p.gamma_t, p.c_p};
  for (const auto& t : scenario.task_types) u.push_back(p.s_pt.at(t.type_id));
  for (std::size_t k = 0; k < u.size(); ++k) u[k] = (u[k] - b[k].lo) / (b[k].hi - b[k].lo);
  return u;
}

ParamSet random_params(const Scenario& scenario, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> u(param_dimension(scenario));
  for (double& x : u) x = unit(rng);
  return params_from_unit(u, scenario);
}

std::vector<std::vector<double>> latin_hypercube(std::size_t n, std::size_t dim, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<std::vector<double>> pts(n, std::vector<double>(dim));
  std::vector<std::size_t> perm(n);
  for (std::size_t d = 0; d < dim; ++d) {
    for (std::size_t k = 0; k < n; ++k) perm[k] = k;
    std::shuffle(perm.begin(), perm.end(), rng);
    for (std::size_t k = 0; k < n; ++k) {
      pts[k][d] = (static_cast<double>(perm[k]) + unit(rng)) / static_cast<double>(n);
    }
  }
  for (auto& p : pts) p = clamp_unit(std::move(p));
  return pts;
}

namespace {

struct SearchOutcome {
  std::vector<FitRecord> history;
  bool fallback = false;
  std::vector<std::string> warnings;
};

SearchOutcome search(std::span<const Trace> train_trials, const Scenario& scenario, const FitConfig& config,
                     double weight, const EnvOptions& options, std::uint64_t base, std::mt19937_64& rng) {
  const std::size_t dim = param_dimension(scenario);
  const auto n_init = static_cast<std::size_t>(config.initial_design);
  const auto design = latin_hypercube(n_init, dim, rng);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> jitter(0.0, 0.05);

  SearchOutcome out;
  std::vector<std::vector<double>> xs;
  std::vector<double> ys;
  for (int it = 0; it < config.iterations; ++it) {
    std::vector<double> u;
    if (static_cast<std::size_t>(it) < n_init) {
      u = design[static_cast<std::size_t>(it)];
    } else {
      bool proposed = false;
      if (!out.fallback) {
        try {
          Eigen::MatrixXd X(static_cast<Eigen::Index>(xs.size()), static_cast<Eigen::Index>(dim));
          Eigen::VectorXd y(static_cast<Eigen::Index>(ys.size()));
          for (std::size_t r = 0; r < xs.size(); ++r) {
            for (std::size_t d = 0; d < dim; ++d) X(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(d)) = xs[r][d];
            y(static_cast<Eigen::Index>(r)) = ys[r];
          }
          GaussianProcess gp;
          gp.fit(X, y);
          const std::size_t best_k =
              static_cast<std::size_t>(std::min_element(ys.begin(), ys.end()) - ys.begin());
          double best_acq = std::numeric_limits<double>::infinity();
          Eigen::VectorXd c(static_cast<Eigen::Index>(dim));
          for (int k = 0; k < config.acquisition_candidates; ++k) {
            // Half global samples, half local moves around the incumbent.
            std::vector<double> cand(dim);
            for (std::size_t d = 0; d < dim; ++d) {
              cand[d] = (k % 2 == 0) ? unit(rng) : xs[best_k][d] + jitter(rng);
            }
            cand = clamp_unit(std::move(cand));
            for (std::size_t d = 0; d < dim; ++d) c(static_cast<Eigen::Index>(d)) = cand[d];
            const auto pred = gp.predict(c);
            const double acq = pred.mean - config.kappa * std::sqrt(pred.variance);
            if (acq < best_acq) {
              best_acq = acq;
              u = cand;
            }
          }
          proposed = std::isfinite(best_acq);
          if (!proposed) throw SurrogateError("acquisition is not finite");
        } catch (const SurrogateError& e) {
          out.fallback = true;
          out.warnings.push_back(std::string("surrogate failed, falling back to random search: ") + e.what());
        }
      }
      if (!proposed) {
        u.assign(dim, 0.0);
        for (double& x : u) x = unit(rng);
        u = clamp_unit(std::move(u));
      }
    }
    const ParamSet params = params_from_unit(u, scenario);
    const double d = evaluate_with_base(params, train_trials, scenario, config, weight, options, base);
    out.history.push_back({params, d});
    xs.push_back(std::move(u));
    ys.push_back(d);
  }
  return out;
}

}  // namespace

FitResult fit_participant(std::span<const Trace> train_trials, const Trace& test_trial, const Scenario& scenario,
                          const FitConfig& config, const EnvOptions& options) {
  validate_fit_config(config);
  if (train_trials.empty()) throw ValidationError("fitting needs at least one training trial");

  std::optional<FitResult> best;
  for (std::size_t r = 0; r < config.weights.size(); ++r) {
    const double w = config.weights[r];
    // Repetitions over weights are independent runs with their own seeds.
    const std::uint64_t base = r == 0 ? config.seed : training_seed(config.seed, 1000 + r);
    std::mt19937_64 rng(training_seed(base, 7));
    SearchOutcome outcome = search(train_trials, scenario, config, w, options, base, rng);

    FitResult result;
    result.weight = w;
    result.history = std::move(outcome.history);
    result.surrogate_fallback = outcome.fallback;
    result.warnings = std::move(outcome.warnings);
    const auto it = std::min_element(result.history.begin(), result.history.end(),
                                     [](const auto& a, const auto& b) { return a.discrepancy < b.discrepancy; });
    result.best_params = it->params;
    result.best_discrepancy = it->discrepancy;
    result.train_fraction = 1.0 - result.best_discrepancy / w;
    result.test_fraction = heldout_with_base(result.best_params, test_trial, scenario, config, options, base);
    if (!best || result.train_fraction > best->train_fraction) best = std::move(result);
  }
  return *best;
}

// ---------------------------------------------------------------------------
// Synthetic participants

Primitive NoisyPolicy::type_action(const EnvState& s) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  if (unit(rng_) < type_noise_) {
    if (!env_.can_leave(s)) return Primitive::Continue;
    return unit(rng_) < 0.5 ? Primitive::Continue : Primitive::Leave;
  }
  return inner_.type_action(s);
}

std::size_t NoisyPolicy::root_action(const EnvState& s) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  if (unit(rng_) < root_noise_) {
    const auto avail = env_.available_root_actions(s);
    return avail[std::uniform_int_distribution<std::size_t>(0, avail.size() - 1)(rng_)];
  }
  return inner_.root_action(s);
}

SyntheticParticipant synthetic_participant(const Scenario& scenario, const ParamSet& truth, int trials,
                                           double type_noise, double root_noise, const LearningConfig& learning,
                                           std::uint64_t seed) {
  if (trials < 2) throw ValidationError("a synthetic participant needs at least two trials");
  validate_params(truth, scenario.type_ids());
  const Environment actual(scenario);
  const Environment perceived_env(scenario, EnvOptions{false, truth});
  LearningConfig config = learning;
  config.gamma_t = truth.gamma_t;
  config.seed = training_seed(seed, 0);
  const HierarchicalPolicy policy = train(perceived_env, config);
  HierarchicalGreedy greedy(policy, perceived_env);

  SyntheticParticipant out{truth, {}};
  std::size_t attempt = 0;
  const std::size_t max_attempts = 50 * static_cast<std::size_t>(trials);
  while (static_cast<int>(out.trials.size()) < trials) {
    if (++attempt > max_attempts) throw std::runtime_error("could not generate trials with switch events");
    const std::uint64_t trial_seed = training_seed(seed, attempt);
    NoisyPolicy noisy(greedy, actual, type_noise, root_noise, trial_seed);
    try {
      Trace t = rollout(actual, noisy, actual.reset(trial_seed), trial_seed);
      if (!switch_events(t).empty()) out.trials.push_back(std::move(t));
    } catch (const EnvironmentError&) {
      // A greedy leave/select cycle that the noise did not break; redraw.
    }
  }
  return out;
}

}  // namespace interleave
