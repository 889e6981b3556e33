#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace interleave {

/// Raised for malformed inputs (bad specs, out-of-range indices, bad files).
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A task type: a chain of `length` discrete states with a reward and a
/// switch cost per state. `dwell` is the time one `continue` step takes.
struct TaskTypeSpec {
  std::string type_id;
  int length = 0;
  std::vector<double> rewards;
  std::vector<double> costs;
  double dwell = 1.0;
  std::string label;

  bool operator==(const TaskTypeSpec&) const = default;
};

struct TaskInstanceSpec {
  std::string instance_id;
  std::string type_id;
  int start_state = 0;

  bool operator==(const TaskInstanceSpec&) const = default;
};

/// Individual parameters: type-level discount, general switch cost and a
/// per-type scale on the designed cost function.
struct ParamSet {
  double gamma_t = 0.9;
  double c_p = 0.0;
  std::map<std::string, double> s_pt;

  bool operator==(const ParamSet&) const = default;
};

/// Open-interval box the individual parameters live in.
struct ParamBounds {
  static constexpr double kGammaLo = 0.0, kGammaHi = 1.0;
  static constexpr double kCostLo = 0.0, kCostHi = 0.3;
  static constexpr double kScaleLo = 0.0, kScaleHi = 1.0;
};

const TaskTypeSpec& validate_task_type(const TaskTypeSpec& spec);

/// Throws ValidationError unless every value is strictly inside its bound.
/// When `type_ids` is non-empty every listed type must carry a scale.
void validate_params(const ParamSet& params, const std::vector<std::string>& type_ids = {});

double reward_at(const TaskTypeSpec& spec, int s);
double cost_at(const TaskTypeSpec& spec, int s);

/// c_P + s_PT * c_T(s)
double personalized_cost(const ParamSet& params, const TaskTypeSpec& spec, int s);

/// Zero-cost state or strict local minimum of the cost array. Reporting only.
bool is_subtask_boundary(const TaskTypeSpec& spec, int s);

}  // namespace interleave
