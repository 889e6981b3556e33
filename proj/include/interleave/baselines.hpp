#pragma once

#include <cstdint>
#include <random>

#include "interleave/environment.hpp"

namespace interleave {

/// One-step lookahead on the true task model:
///   v(T) = r_T(s'_T) - [T != ongoing] (c_T(s'_T) + c_ongoing(s_ongoing)),
/// where s'_T is the successor of T's current state (clamped to the last
/// state). Ties go to the ongoing task, then to the lowest index.
FlatAction myopic_action(const Environment& env, const EnvState& s);

/// Uniform over the available flat actions.
FlatAction random_action(const Environment& env, const EnvState& s, std::mt19937_64& rng);

class MyopicPolicy : public FlatPolicy {
 public:
  explicit MyopicPolicy(const Environment& env) : env_(env) {}
  FlatAction act(const EnvState& s) override { return myopic_action(env_, s); }

 private:
  const Environment& env_;
};

class RandomPolicy : public FlatPolicy {
 public:
  RandomPolicy(const Environment& env, std::uint64_t seed) : env_(env), rng_(seed) {}
  FlatAction act(const EnvState& s) override { return random_action(env_, s, rng_); }

 private:
  const Environment& env_;
  std::mt19937_64 rng_;
};

}  // namespace interleave
