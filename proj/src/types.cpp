#include "rlvr/types.hpp"

#include <cmath>
#include <set>
#include <string>

namespace rlvr {

namespace {

constexpr double kWeightTolerance = 1e-9;

bool in_unit_interval(double v) { return v >= 0.0 && v <= 1.0; }

}  // namespace

std::vector<std::string> RewardConfig::validate() const {
  std::vector<std::string> violations;
  if (!in_unit_interval(alpha_fmt)) violations.push_back("alpha_fmt outside [0,1]");
  if (!in_unit_interval(alpha_ans)) violations.push_back("alpha_ans outside [0,1]");
  if (mode == RewardMode::Aggregated) {
    if (!in_unit_interval(alpha_desc)) violations.push_back("alpha_desc outside [0,1]");
    const double sum = alpha_fmt + alpha_desc + alpha_ans;
    if (std::abs(sum - 1.0) > kWeightTolerance)
      violations.push_back("aggregated weights do not sum to 1");
  } else {
    const double sum = alpha_fmt + alpha_ans;
    if (std::abs(sum - 1.0) > kWeightTolerance)
      violations.push_back("conditional weights do not sum to 1");
    if (!in_unit_interval(gamma)) violations.push_back("gamma outside [0,1]");
  }
  if (match.numeric_rel_tol < 0.0) violations.push_back("numeric_rel_tol negative");
  return violations;
}

std::vector<std::string> validate_group(const Group& group) {
  std::vector<std::string> violations;
  if (group.task.id.empty()) violations.push_back("task.id: empty");
  if (group.task.choices) {
    std::set<std::string> labels;
    for (std::size_t i = 0; i < group.task.choices->size(); ++i) {
      const auto& label = (*group.task.choices)[i].label;
      const std::string path = "task.choices[" + std::to_string(i) + "].label";
      if (label.size() != 1 || !std::isalpha(static_cast<unsigned char>(label[0])))
        violations.push_back(path + ": not a single letter");
      if (!labels.insert(label).second) violations.push_back(path + ": duplicate label");
    }
  }

  const std::size_t k = group.rollouts.size();
  if (k < 2) violations.push_back("rollouts: group size < 2");

  std::set<int> seen_indices;
  std::size_t advantages_present = 0;
  double advantage_sum = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const auto& r = group.rollouts[i];
    const std::string path = "rollouts[" + std::to_string(i) + "]";
    if (r.task_id != group.task.id) violations.push_back(path + ".task_id: does not match task.id");
    if (r.sample_index < 0) violations.push_back(path + ".sample_index: negative");
    if (!seen_indices.insert(r.sample_index).second)
      violations.push_back(path + ".sample_index: duplicate");
    if (r.breakdown) {
      if (r.breakdown->total < 0.0 || r.breakdown->total > 1.0)
        violations.push_back(path + ".breakdown.total: outside [0,1]");
      if (r.breakdown->r_fmt != 0 && r.breakdown->r_fmt != 1)
        violations.push_back(path + ".breakdown.r_fmt: not a bit");
      if (r.breakdown->r_ans != 0 && r.breakdown->r_ans != 1)
        violations.push_back(path + ".breakdown.r_ans: not a bit");
      if (r.breakdown->r_desc && *r.breakdown->r_desc != 0 && *r.breakdown->r_desc != 1)
        violations.push_back(path + ".breakdown.r_desc: not a bit");
    }
    if (r.advantage) {
      ++advantages_present;
      advantage_sum += *r.advantage;
    }
  }

  if (advantages_present > 0 && advantages_present < k)
    violations.push_back("rollouts: advantages partially assigned");
  if (advantages_present == k && k > 0 &&
      std::abs(advantage_sum) > 1e-9 * static_cast<double>(k))
    violations.push_back("rollouts: advantages not zero-sum");

  return violations;
}

}  // namespace rlvr
