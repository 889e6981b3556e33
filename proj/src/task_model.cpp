#include "interleave/task_model.hpp"

#include <cmath>
#include <sstream>

namespace interleave {

namespace {

void check_array(const std::vector<double>& values, const char* what, int length) {
  if (static_cast<int>(values.size()) != length) {
    std::ostringstream msg;
    msg << what << " length " << values.size() << " != " << length;
    throw ValidationError(msg.str());
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      std::ostringstream msg;
      msg << "non-finite " << (std::string(what) == "rewards" ? "reward" : "cost") << " at state " << i;
      throw ValidationError(msg.str());
    }
    if (values[i] < 0.0) {
      std::ostringstream msg;
      msg << "negative " << (std::string(what) == "rewards" ? "reward" : "cost") << " at state " << i;
      throw ValidationError(msg.str());
    }
  }
}

void check_state(const TaskTypeSpec& spec, int s) {
  if (s < 0 || s >= spec.length) {
    std::ostringstream msg;
    msg << "state " << s << " out of range [0, " << spec.length << ") for type '" << spec.type_id << "'";
    throw ValidationError(msg.str());
  }
}

void check_open(double v, double lo, double hi, const std::string& name) {
  if (!(v > lo && v < hi)) {
    std::ostringstream msg;
    msg << name << " = " << v << " outside open interval (" << lo << ", " << hi << ")";
    throw ValidationError(msg.str());
  }
}

}  // namespace

const TaskTypeSpec& validate_task_type(const TaskTypeSpec& spec) {
  if (spec.length <= 0) throw ValidationError("type '" + spec.type_id + "': length must be positive");
  check_array(spec.rewards, "rewards", spec.length);
  check_array(spec.costs, "costs", spec.length);
  if (!(spec.dwell > 0.0) || !std::isfinite(spec.dwell)) {
    throw ValidationError("type '" + spec.type_id + "': dwell must be positive");
  }
  return spec;
}

void validate_params(const ParamSet& params, const std::vector<std::string>& type_ids) {
  check_open(params.gamma_t, ParamBounds::kGammaLo, ParamBounds::kGammaHi, "gamma_t");
  check_open(params.c_p, ParamBounds::kCostLo, ParamBounds::kCostHi, "c_p");
  for (const auto& [type, scale] : params.s_pt) {
    check_open(scale, ParamBounds::kScaleLo, ParamBounds::kScaleHi, "s_pt[" + type + "]");
  }
  for (const auto& type : type_ids) {
    if (!params.s_pt.contains(type)) throw ValidationError("missing s_pt for type '" + type + "'");
  }
}

double reward_at(const TaskTypeSpec& spec, int s) {
  check_state(spec, s);
  return spec.rewards[static_cast<std::size_t>(s)];
}

double cost_at(const TaskTypeSpec& spec, int s) {
  check_state(spec, s);
  return spec.costs[static_cast<std::size_t>(s)];
}

double personalized_cost(const ParamSet& params, const TaskTypeSpec& spec, int s) {
  const double c = cost_at(spec, s);
  auto it = params.s_pt.find(spec.type_id);
  if (it == params.s_pt.end()) throw ValidationError("missing s_pt for type '" + spec.type_id + "'");
  return params.c_p + it->second * c;
}

bool is_subtask_boundary(const TaskTypeSpec& spec, int s) {
  const double c = cost_at(spec, s);
  if (c == 0.0) return true;
  const auto i = static_cast<std::size_t>(s);
  const bool below_prev = s == 0 || c < spec.costs[i - 1];
  const bool below_next = s == spec.length - 1 || c < spec.costs[i + 1];
  return below_prev && below_next;
}

}  // namespace interleave
