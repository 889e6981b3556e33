#include "interleave/flat_agent.hpp"

#include <cmath>
#include <deque>
#include <limits>
#include <random>

namespace interleave {

std::size_t FlatKeyHash::operator()(const FlatKey& key) const noexcept {
  std::uint64_t h = 1469598103934665603ULL;
  for (std::uint8_t c : key.cells) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return static_cast<std::size_t>(h);
}

FlatKey flat_key(const EnvState& s) {
  FlatKey key;
  key.cells.reserve(s.progress.size() + 1);
  key.cells.push_back(s.active ? static_cast<std::uint8_t>(*s.active + 1) : 0);
  for (int p : s.progress) key.cells.push_back(static_cast<std::uint8_t>(p));
  return key;
}

double FlatQTable::q(const FlatKey& key, const FlatAction& a) const {
  auto it = rows_.find(key);
  return it == rows_.end() ? 0.0 : it->second.q[slot(a)];
}

void FlatQTable::set(const FlatKey& key, const FlatAction& a, double value) {
  auto [it, inserted] = rows_.try_emplace(key);
  if (inserted) {
    it->second.q.assign(num_instances_ + 1, 0.0);
    it->second.set.assign(num_instances_ + 1, false);
  }
  it->second.q[slot(a)] = value;
  it->second.set[slot(a)] = true;
}

std::size_t FlatQTable::populated_count() const {
  std::size_t n = 0;
  for (const auto& [key, row] : rows_) {
    for (bool b : row.set) n += b ? 1 : 0;
  }
  return n;
}

FlatAction greedy_flat(const FlatQTable& table, const Environment& env, const EnvState& s) {
  std::vector<FlatAction> acts;
  FlatKey key;
  if (!s.active && s.just_left) {
    // Teacher-forced query right after a leave: the decision was taken from
    // the state where the left instance was still active.
    EnvState from = s;
    from.active = s.just_left;
    from.just_left.reset();
    key = flat_key(from);
    for (std::size_t i : env.available_root_actions(s)) acts.push_back(FlatAction::switch_to(i));
  } else {
    key = flat_key(s);
    acts = env.flat_actions(s);
  }
  if (acts.empty()) throw EnvironmentError("no flat action available");
  auto it = table.rows().find(key);
  if (it == table.rows().end()) return acts.front();
  const auto& q = it->second.q;
  FlatAction best = acts.front();
  double best_q = q[FlatQTable::slot(best)];
  for (const auto& a : acts) {
    if (q[FlatQTable::slot(a)] > best_q) {
      best = a;
      best_q = q[FlatQTable::slot(a)];
    }
  }
  return best;
}

namespace {

double flat_state_value(const FlatQTable& table, const Environment& env, const EnvState& s) {
  if (s.all_completed()) return 0.0;
  const auto acts = env.flat_actions(s);
  if (acts.empty()) return 0.0;
  const FlatKey key = flat_key(s);
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& a : acts) best = std::max(best, table.q(key, a));
  return best;
}

}  // namespace

FlatAgent train_flat(const Environment& env, const LearningConfig& config) {
  validate_config(config);
  FlatAgent agent{FlatQTable(env.num_instances()), config, {}, scenario_fingerprint(env.scenario())};
  agent.episode_returns.reserve(static_cast<std::size_t>(config.episodes));

  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::size_t cap = 100 * env.step_cap();

  for (int episode = 0; episode < config.episodes; ++episode) {
    const double epsilon = config.epsilon_at(episode);
    EnvState s = env.reset(rng());
    double episode_return = 0.0;
    std::size_t steps = 0;
    while (!env.is_terminal(s)) {
      if (++steps > cap) throw std::runtime_error("flat training episode exceeded step cap");
      FlatAction a;
      if (unit(rng) < epsilon) {
        const auto acts = env.flat_actions(s);
        a = acts[std::uniform_int_distribution<std::size_t>(0, acts.size() - 1)(rng)];
      } else {
        a = greedy_flat(agent.table, env, s);
      }
      if (a.is_continue() && !env.continue_fits(s)) break;

      const FlatTransition tr = flat_step(env, s, a);
      const double target =
          tr.reward + tr.discount(config.gamma_t, config.gamma_r) * flat_state_value(agent.table, env, tr.post());
      if (!std::isfinite(target)) throw std::runtime_error("non-finite flat Q target");
      const FlatKey key = flat_key(s);
      agent.table.set(key, a, (1.0 - config.alpha) * agent.table.q(key, a) + config.alpha * target);
      episode_return += tr.reward;
      s = tr.post();
    }
    agent.episode_returns.push_back(episode_return);
  }
  return agent;
}

FlatAgent train_flat(const Scenario& scenario, const LearningConfig& config, const std::optional<ParamSet>& params,
                     EnvOptions options) {
  LearningConfig used = config;
  if (params) {
    used.gamma_t = params->gamma_t;
    options.perceived = params;
  }
  const Environment env(scenario, std::move(options));
  return train_flat(env, used);
}

// ---------------------------------------------------------------------------
// Exact value iteration

namespace {

FlatKey node_key(const EnvState& s) {
  FlatKey key;
  key.cells.reserve(s.progress.size() + 3);
  key.cells.push_back(s.active ? static_cast<std::uint8_t>(*s.active + 1) : 0);
  key.cells.push_back(s.just_left ? static_cast<std::uint8_t>(*s.just_left + 1) : 0);
  key.cells.push_back(s.selections == 0 ? 1 : 0);
  for (int p : s.progress) key.cells.push_back(static_cast<std::uint8_t>(p));
  return key;
}

/// Canonical state of a node: clock, budget and selection count beyond the
/// first do not affect decisions under to-completion semantics.
EnvState canonical(const EnvState& s) {
  EnvState c;
  c.progress = s.progress;
  c.completed = s.completed;
  c.active = s.active;
  c.just_left = s.just_left;
  c.selections = s.selections == 0 ? 0 : 1;
  return c;
}

}  // namespace

std::size_t ValueIterationResult::node_of(const EnvState& s) const {
  auto it = index_.find(node_key(s));
  if (it == index_.end()) throw EnvironmentError("state not reachable in the value-iteration graph");
  return it->second;
}

bool ValueIterationResult::contains(const EnvState& s) const { return index_.contains(node_key(s)); }

double ValueIterationResult::value(const EnvState& s) const {
  if (s.all_completed()) return 0.0;
  return values_[node_of(s)];
}

std::vector<std::pair<Action, double>> ValueIterationResult::q_values(const EnvState& s) const {
  const std::size_t n = node_of(s);
  std::vector<std::pair<Action, double>> out;
  for (std::size_t e = graph_.offset[n], k = 0; e < graph_.offset[n + 1]; ++e, ++k) {
    const double cont = graph_.next[e] < 0 ? 0.0 : values_[static_cast<std::size_t>(graph_.next[e])];
    out.emplace_back(actions_[n][k], graph_.reward[e] + graph_.discount[e] * cont);
  }
  return out;
}

Action ValueIterationResult::greedy(const EnvState& s) const {
  const auto q = q_values(s);
  std::size_t best = 0;
  for (std::size_t k = 1; k < q.size(); ++k) {
    if (q[k].second > q[best].second) best = k;
  }
  return q[best].first;
}

ValueIterationResult value_iteration(const Environment& env, double gamma_t, double gamma_r,
                                     const ValueIterationOptions& options) {
  if (!(gamma_t >= 0.0 && gamma_t <= 1.0) || !(gamma_r >= 0.0 && gamma_r <= 1.0)) {
    throw ValidationError("discounts must lie in [0, 1]");
  }
  ValueIterationResult result;
  std::vector<EnvState> states;
  std::deque<std::size_t> frontier;

  auto intern = [&](const EnvState& raw) -> std::int64_t {
    if (raw.all_completed()) return -1;
    const EnvState s = canonical(raw);
    auto [it, inserted] = result.index_.try_emplace(node_key(s), states.size());
    if (inserted) {
      if (states.size() >= options.state_cap) {
        throw std::runtime_error("value iteration state cap of " + std::to_string(options.state_cap) + " exceeded");
      }
      states.push_back(s);
      frontier.push_back(it->second);
    }
    return static_cast<std::int64_t>(it->second);
  };

  intern(env.reset(EpisodeMode::to_completion(), 0));
  auto& g = result.graph_;
  // Nodes are expanded in interning order, so node n's edges are appended
  // exactly when the CSR cursor reaches n.
  while (!frontier.empty()) {
    const std::size_t n = frontier.front();
    frontier.pop_front();
    const EnvState s = states[n];
    std::vector<Action> acts;
    if (s.active) {
      acts.emplace_back(Primitive::Continue);
      if (env.can_leave(s)) acts.emplace_back(Primitive::Leave);
    } else {
      for (std::size_t j : env.available_root_actions(s)) acts.emplace_back(Select{j});
    }
    for (const auto& a : acts) {
      const TransitionRecord rec = env.step(s, a);
      double d = std::pow(gamma_t, rec.duration);
      if (rec.exited) d *= gamma_r;
      g.reward.push_back(rec.reward);
      g.discount.push_back(d);
      g.next.push_back(intern(rec.post));
    }
    g.offset.push_back(g.reward.size());
    result.actions_.push_back(std::move(acts));
  }

  std::vector<double> v(states.size(), 0.0), next(states.size(), 0.0);
  for (int sweep = 0; sweep < options.max_sweeps; ++sweep) {
    const double residual = options.parallel ? kernels::bellman_sweep_parallel(g, v, next)
                                             : kernels::bellman_sweep_serial(g, v, next);
    v.swap(next);
    result.residuals_.push_back(residual);
    if (residual < options.tolerance) break;
  }
  result.bellman_residual_ = kernels::bellman_sweep_serial(g, v, next);
  result.values_ = std::move(v);
  return result;
}

}  // namespace interleave
