#ifndef PUMPCAUSE_GROUPING_HPP
#define PUMPCAUSE_GROUPING_HPP

#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "pumpcause/features.hpp"
#include "pumpcause/random_effects.hpp"

namespace pumpcause {

enum class Group { positive, negative };

std::string_view group_name(Group g);

struct GroupAssignment {
  int pump_index = 0;
  std::string pump_id;
  double u_mean = 0.0;
  Group group = Group::negative;
};

/// Positive iff u_mean > 0; zero goes to Negative. pump_ids may be empty,
/// in which case the decimal pump index is used as the id.
std::vector<GroupAssignment> assign_groups(const std::vector<RandomEffectEstimate>& estimates,
                                           const std::vector<std::string>& pump_ids = {});

struct GroupDataset {
  Group group = Group::negative;
  std::vector<std::string> pump_ids;  // sorted; row order of features/target
  std::vector<std::string> feature_names;
  Eigen::MatrixXd features;
  Eigen::VectorXd target;

  int members() const { return static_cast<int>(pump_ids.size()); }
  /// At least d + 2 members are needed for causal discovery.
  bool sufficient_for_discovery() const { return members() >= static_cast<int>(feature_names.size()) + 2; }
};

struct GroupSummary {
  Group group = Group::negative;
  int count = 0;
  double share = 0.0;
  double u_min = 0.0;  // meaningless when count == 0
  double u_max = 0.0;
  std::string warning;
};

struct GroupSplit {
  GroupDataset positive;
  GroupDataset negative;
  std::vector<GroupSummary> summaries;  // positive, negative
};

/// Throws ValidationError when a pump appears in only one of the inputs.
GroupSplit build_group_datasets(const FeatureMatrix& features, const std::vector<GroupAssignment>& assignments);

void write_groups(std::ostream& out, const std::vector<GroupAssignment>& assignments);
std::vector<GroupAssignment> parse_groups(std::istream& in, const std::string& name);

}  // namespace pumpcause

#endif  // PUMPCAUSE_GROUPING_HPP
