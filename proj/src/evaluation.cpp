#include "interleave/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace interleave {

std::vector<SwitchEvent> switch_events(const Trace& trace) {
  std::vector<SwitchEvent> out;
  for (const auto& rec : trace.records) {
    if (rec.is_root() && rec.pre.just_left) out.push_back({rec.pre, rec.instance()});
  }
  return out;
}

namespace {

std::optional<double> fraction(std::size_t hits, std::size_t total) {
  if (total == 0) return std::nullopt;
  return static_cast<double>(hits) / static_cast<double>(total);
}

std::optional<double> primitive_accuracy(const Trace& reference, Policy& policy, Primitive kind) {
  std::size_t hits = 0, total = 0;
  for (const auto& rec : reference.records) {
    const auto* a = std::get_if<Primitive>(&rec.action);
    if (a == nullptr || *a != kind) continue;
    ++total;
    if (policy.type_action(rec.pre) == kind) ++hits;
  }
  return fraction(hits, total);
}

}  // namespace

std::optional<double> next_task_accuracy(const Trace& reference, Policy& policy) {
  std::size_t hits = 0;
  const auto events = switch_events(reference);
  for (const auto& e : events) {
    if (policy.root_action(e.state) == e.chosen) ++hits;
  }
  return fraction(hits, events.size());
}

std::optional<double> leave_accuracy(const Trace& reference, Policy& policy) {
  return primitive_accuracy(reference, policy, Primitive::Leave);
}

std::optional<double> continue_accuracy(const Trace& reference, Policy& policy) {
  return primitive_accuracy(reference, policy, Primitive::Continue);
}

std::size_t order_error(std::span<const std::size_t> a, std::span<const std::size_t> b) {
  const std::size_t n = std::max(a.size(), b.size());
  std::size_t err = 0;
  for (std::size_t k = 0; k < n; ++k) {
    if (k >= a.size() || k >= b.size() || a[k] != b[k]) ++err;
  }
  return err;
}

std::vector<double> state_visitation_histogram(std::span<const Trace> traces, const Environment& env,
                                               const std::string& type_id) {
  const std::size_t t = env.scenario().type_index(type_id);
  std::vector<double> counts(static_cast<std::size_t>(env.scenario().task_types[t].length), 0.0);
  double total = 0.0;
  for (const auto& trace : traces) {
    for (const auto& rec : trace.records) {
      const auto* a = std::get_if<Primitive>(&rec.action);
      if (a == nullptr || *a != Primitive::Continue) continue;
      const std::size_t i = *rec.pre.active;
      if (env.type_index_of(i) != t) continue;
      counts[static_cast<std::size_t>(rec.pre.progress[i])] += 1.0;
      total += 1.0;
    }
  }
  if (total == 0.0) return {};
  for (double& c : counts) c /= total;
  return counts;
}

double histogram_intersection(std::span<const double> h1, std::span<const double> h2) {
  if (h1.empty() || h2.empty()) return 0.0;
  if (h1.size() != h2.size()) {
    throw ValidationError("histogram lengths differ: " + std::to_string(h1.size()) + " vs " +
                          std::to_string(h2.size()));
  }
  double s = 0.0;
  for (std::size_t k = 0; k < h1.size(); ++k) s += std::min(h1[k], h2[k]);
  return s;
}

std::vector<CurvePoint> learning_curve(const std::vector<std::vector<double>>& runs) {
  if (runs.empty()) throw ValidationError("learning curve needs at least one run");
  const std::size_t len = runs.front().size();
  for (const auto& r : runs) {
    if (r.size() != len) throw ValidationError("learning-curve runs differ in length");
  }
  std::vector<CurvePoint> out(len);
  const double n = static_cast<double>(runs.size());
  for (std::size_t e = 0; e < len; ++e) {
    double mean = 0.0;
    for (const auto& r : runs) mean += r[e];
    mean /= n;
    double var = 0.0;
    for (const auto& r : runs) var += (r[e] - mean) * (r[e] - mean);
    out[e] = {mean, std::sqrt(var / n)};
  }
  return out;
}

MetricReport evaluate_policy(const Environment& env, Policy& policy, std::span<const Trace> references,
                             std::uint64_t seed) {
  if (references.empty()) throw ValidationError("evaluation needs at least one reference trace");
  MetricReport report;

  std::size_t next_hits = 0, next_total = 0;
  std::size_t leave_hits = 0, leave_total = 0;
  std::size_t cont_hits = 0, cont_total = 0;
  std::vector<Trace> produced;
  produced.reserve(references.size());
  double reward = 0.0;

  for (std::size_t k = 0; k < references.size(); ++k) {
    const Trace& ref = references[k];
    for (const auto& rec : ref.records) {
      if (rec.is_root()) {
        if (!rec.pre.just_left) continue;
        ++next_total;
        if (policy.root_action(rec.pre) == rec.instance()) ++next_hits;
      } else {
        const Primitive a = std::get<Primitive>(rec.action);
        const bool hit = policy.type_action(rec.pre) == a;
        if (a == Primitive::Leave) {
          ++leave_total;
          leave_hits += hit ? 1 : 0;
        } else {
          ++cont_total;
          cont_hits += hit ? 1 : 0;
        }
      }
    }
    produced.push_back(rollout(env, policy, ref.initial, seed + k));
    reward += produced.back().total_reward;
    const auto a = visit_sequence(produced.back());
    const auto b = visit_sequence(ref);
    report.order_error += order_error(a, b);
  }
  report.reward = reward / static_cast<double>(references.size());
  report.next_task_accuracy = fraction(next_hits, next_total);
  report.leave_accuracy = fraction(leave_hits, leave_total);
  report.continue_accuracy = fraction(cont_hits, cont_total);

  std::vector<double> pooled_policy, pooled_reference;
  for (const auto& type : env.scenario().task_types) {
    auto hp = state_visitation_histogram(produced, env, type.type_id);
    auto hr = state_visitation_histogram(references, env, type.type_id);
    report.intersections[type.type_id] = histogram_intersection(hp, hr);
    // Pooled histograms weight each type by its share of continue steps.
    auto count = [&](std::span<const Trace> traces) {
      double c = 0.0;
      for (const auto& tr : traces) {
        for (const auto& rec : tr.records) {
          if (!rec.is_root() && std::get<Primitive>(rec.action) == Primitive::Continue &&
              env.type_of(*rec.pre.active).type_id == type.type_id) {
            c += 1.0;
          }
        }
      }
      return c;
    };
    const double cp = count(produced), cr = count(references);
    for (int s = 0; s < type.length; ++s) {
      pooled_policy.push_back(hp.empty() ? 0.0 : hp[static_cast<std::size_t>(s)] * cp);
      pooled_reference.push_back(hr.empty() ? 0.0 : hr[static_cast<std::size_t>(s)] * cr);
    }
    report.visitation[type.type_id] = std::move(hp);
    report.reference_visitation[type.type_id] = std::move(hr);
  }
  auto normalize = [](std::vector<double>& h) {
    double total = 0.0;
    for (double v : h) total += v;
    if (total == 0.0) {
      h.clear();
      return;
    }
    for (double& v : h) v /= total;
  };
  normalize(pooled_policy);
  normalize(pooled_reference);
  report.pooled_intersection = histogram_intersection(pooled_policy, pooled_reference);
  return report;
}

const TransitionRecord& ReplayPolicy::find(const EnvState& s) const {
  for (const auto& rec : trace_.records) {
    if (rec.pre == s) return rec;
  }
  throw EnvironmentError("replay queried at a state absent from the trace");
}

Primitive ReplayPolicy::type_action(const EnvState& s) {
  // A truncated reference ends with a refused continue that left no record.
  if (trace_.truncated && s == trace_.final_state()) return Primitive::Continue;
  const auto& rec = find(s);
  if (rec.is_root()) throw EnvironmentError("replay: root record at a type-level query");
  return std::get<Primitive>(rec.action);
}

std::size_t ReplayPolicy::root_action(const EnvState& s) {
  const auto& rec = find(s);
  if (!rec.is_root()) throw EnvironmentError("replay: type record at a root query");
  return rec.instance();
}

}  // namespace interleave
