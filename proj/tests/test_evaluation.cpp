#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>
#include <set>

#include "interleave/baselines.hpp"
#include "interleave/evaluation.hpp"
#include "interleave/io.hpp"
#include "support.hpp"

using namespace interleave;

namespace {

std::vector<Trace> random_traces(const Environment& env, std::size_t n, std::uint64_t base) {
  std::vector<Trace> out;
  for (std::uint64_t k = 0; out.size() < n; ++k) {
    RandomPolicy p(env, base + k);
    Trace t = rollout(env, p, env.reset(base + k), base + k);
    if (!switch_events(t).empty()) out.push_back(std::move(t));
  }
  return out;
}

double sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

}  // namespace

TEST_SUITE("evaluation") {
  TEST_CASE("next-task accuracy counts matched switch events") {
    const Environment env(builtin_scenario("study_six_instance"));
    Trace ref;
    for (std::uint64_t seed = 0;; ++seed) {
      RandomPolicy p(env, seed);
      ref = rollout(env, p, env.reset(seed), seed);
      const auto ev = switch_events(ref);
      const bool missable = std::all_of(ev.begin(), ev.end(), [&](const SwitchEvent& e) {
        return env.available_root_actions(e.state).size() > 1;
      });
      if (!ev.empty() && ev.size() % 2 == 0 && missable) break;
    }
    const auto events = switch_events(ref);
    test::LambdaPolicy half([](const EnvState&) { return Primitive::Continue; },
                            [&](const EnvState& s) {
                              for (std::size_t k = 0; k < events.size(); ++k) {
                                if (events[k].state != s) continue;
                                if (k < events.size() / 2) return events[k].chosen;
                                for (std::size_t j : env.available_root_actions(s)) {
                                  if (j != events[k].chosen) return j;
                                }
                              }
                              return std::size_t{0};
                            });
    CHECK(next_task_accuracy(ref, half) == 0.5);

    ReplayPolicy replay(ref);
    CHECK(next_task_accuracy(ref, replay) == 1.0);

    // A policy that always names an instance the reference never chose next.
    std::set<std::size_t> chosen;
    for (const auto& e : events) chosen.insert(e.chosen);
    std::size_t never = 0;
    while (chosen.contains(never)) ++never;
    test::LambdaPolicy wrong([](const EnvState&) { return Primitive::Continue; },
                             [&](const EnvState&) { return never; });
    CHECK(next_task_accuracy(ref, wrong) == 0.0);
  }

  TEST_CASE("accuracies are absent without events") {
    const Environment env(test::make_scenario({test::make_type("t", {1, 1, 1}, {0, 0, 0})}));
    test::ContinuePolicy pol(env);
    const Trace t = rollout(env, pol, env.reset(0), 0);
    CHECK_FALSE(next_task_accuracy(t, pol));
    CHECK_FALSE(leave_accuracy(t, pol));
    CHECK(continue_accuracy(t, pol) == 1.0);
  }

  TEST_CASE("continue accuracy counts matched continue events") {
    const Environment env(test::make_scenario({test::make_type("t", std::vector<double>(10, 1.0),
                                                               std::vector<double>(10, 0.0))}));
    test::ContinuePolicy pol(env);
    const Trace t = rollout(env, pol, env.reset(0), 0);
    test::LambdaPolicy eight([](const EnvState& s) { return s.progress[0] < 8 ? Primitive::Continue : Primitive::Leave; },
                             [](const EnvState&) { return std::size_t{0}; });
    CHECK(continue_accuracy(t, eight) == doctest::Approx(0.8));
  }

  TEST_CASE("always-continue policy against a trace with leaves") {
    const Environment env(builtin_scenario("study_six_instance"));
    const auto refs = random_traces(env, 5, 10);
    test::ContinuePolicy cont(env);
    for (const auto& r : refs) {
      CHECK(continue_accuracy(r, cont) == 1.0);
      CHECK(leave_accuracy(r, cont) == 0.0);
    }
  }

  TEST_CASE("order_error") {
    using V = std::vector<std::size_t>;
    CHECK(order_error(V{0, 1, 2}, V{0, 1, 2}) == 0);
    CHECK(order_error(V{0, 1}, V{1, 0}) == 2);
    CHECK(order_error(V{0, 1}, V{0, 1, 2}) == 1);
    std::mt19937_64 rng(1);
    for (int k = 0; k < 500; ++k) {
      V a(rng() % 8), b(rng() % 8);
      for (auto& x : a) x = rng() % 3;
      for (auto& x : b) x = rng() % 3;
      CHECK(order_error(a, b) == order_error(b, a));
      CHECK(order_error(a, b) <= std::max(a.size(), b.size()));
    }
  }

  TEST_CASE("state visitation histograms") {
    const Environment env(test::make_scenario(
        {test::make_type("t", {1, 1, 1}, {0, 0, 0}), test::make_type("u", {1, 1}, {0, 0})}));
    const std::size_t t = env.scenario().instance_index("i_t");
    test::LambdaPolicy t_first([](const EnvState&) { return Primitive::Continue; },
                               [&](const EnvState& s) {
                                 return s.completed[t] ? env.available_root_actions(s).front() : t;
                               });
    const Trace full = rollout(env, t_first, env.reset(EpisodeMode::budget(3), 0), 0);
    const Trace aborted = rollout(env, t_first, env.reset(EpisodeMode::budget(1), 0), 0);
    REQUIRE(aborted.records.size() == 2);
    const std::vector<Trace> one{full}, both{full, aborted};
    const auto h1 = state_visitation_histogram(one, env, "t");
    REQUIRE(h1.size() == 3);
    for (double v : h1) CHECK(v == doctest::Approx(1.0 / 3));
    CHECK(state_visitation_histogram(both, env, "t") == std::vector<double>{0.5, 0.25, 0.25});
    CHECK(state_visitation_histogram(one, env, "u").empty());
  }

  TEST_CASE("histogram intersection") {
    using V = std::vector<double>;
    CHECK(histogram_intersection(V{0.5, 0.5}, V{0.5, 0.5}) == 1.0);
    CHECK(histogram_intersection(V{1, 0}, V{0, 1}) == 0.0);
    CHECK(histogram_intersection(V{0.5, 0.5}, V{0.25, 0.75}) == 0.75);
    CHECK(histogram_intersection(V{}, V{1.0}) == 0.0);
    CHECK_THROWS_AS(histogram_intersection(V{1.0}, V{0.5, 0.5}), ValidationError);

    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < 300; ++k) {
      V a(4), b(4);
      for (auto& x : a) x = u(rng);
      for (auto& x : b) x = u(rng);
      const double sa = sum(a), sb = sum(b);
      for (auto& x : a) x /= sa;
      for (auto& x : b) x /= sb;
      const double ab = histogram_intersection(a, b);
      CHECK(ab == histogram_intersection(b, a));
      CHECK(ab < 1.0);
      CHECK(ab >= 0.0);
      CHECK(histogram_intersection(a, a) == doctest::Approx(1.0));
    }
  }

  TEST_CASE("learning_curve") {
    CHECK(learning_curve({{1.0, 2.0}})[1].std == 0.0);
    const auto c = learning_curve({{1.0}, {3.0}});
    CHECK(c[0].mean == 2.0);
    CHECK(c[0].std == 1.0);
    CHECK_THROWS_AS(learning_curve({}), ValidationError);
    CHECK_THROWS_AS(learning_curve({{1.0}, {1.0, 2.0}}), ValidationError);
  }

  TEST_CASE("replayed traces agree with themselves on every metric") {
    const Environment env(builtin_scenario("study_six_instance"));
    const auto refs = random_traces(env, 30, 100);
    for (const auto& ref : refs) {
      ReplayPolicy replay(ref);
      const std::span<const Trace> one(&ref, 1);
      const MetricReport r = evaluate_policy(env, replay, one, 0);
      CHECK(r.next_task_accuracy == 1.0);
      CHECK((!r.leave_accuracy || *r.leave_accuracy == 1.0));
      CHECK(r.continue_accuracy == 1.0);
      CHECK(r.order_error == 0);
      CHECK(r.pooled_intersection == doctest::Approx(1.0));
      CHECK(r.reward == doctest::Approx(ref.total_reward));
      for (const auto& [type, v] : r.intersections) {
        if (!r.visitation.at(type).empty()) CHECK(v == doctest::Approx(1.0));
      }
    }
  }

  TEST_CASE("metric report ranges") {
    const Environment env(builtin_scenario("study_six_instance"));
    const auto refs = random_traces(env, 10, 300);
    MyopicPolicy myopic(env);
    const MetricReport r = evaluate_policy(env, myopic, refs, 0);
    for (const auto& a : {r.next_task_accuracy, r.leave_accuracy, r.continue_accuracy}) {
      REQUIRE(a);
      CHECK(*a >= 0.0);
      CHECK(*a <= 1.0);
    }
    for (const auto& [type, h] : r.visitation) {
      if (!h.empty()) CHECK(sum(h) == doctest::Approx(1.0));
    }
    CHECK(r.pooled_intersection >= 0.0);
    CHECK(r.pooled_intersection <= 1.0 + 1e-12);
    CHECK(r.teacher_forced);
  }

  TEST_CASE("random policy's next-task accuracy matches its expectation") {
    const Environment env(builtin_scenario("study_six_instance"));
    const auto refs = random_traces(env, 150, 500);
    double hits = 0, mean = 0, var = 0;
    for (std::size_t k = 0; k < refs.size(); ++k) {
      RandomPolicy p(env, 77 + k);
      for (const auto& e : switch_events(refs[k])) {
        const double q = 1.0 / static_cast<double>(env.available_root_actions(e.state).size());
        mean += q;
        var += q * (1 - q);
        hits += p.root_action(e.state) == e.chosen;
      }
    }
    CHECK(std::abs(hits - mean) <= 3 * std::sqrt(var));
  }
}
