#ifndef PUMPCAUSE_LINGAM_HPP
#define PUMPCAUSE_LINGAM_HPP

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pumpcause/grouping.hpp"
#include "pumpcause/ica.hpp"
#include "pumpcause/parallel.hpp"

namespace pumpcause {

/// Name of the target column appended after the features.
inline constexpr const char* kTargetName = "u";

struct StandardizedData {
  Eigen::MatrixXd X;  // n x m, columns centred with unit population sd
  Eigen::VectorXd mean;
  Eigen::VectorXd sd;
};

/// Throws ValidationError naming the first constant column.
StandardizedData standardize(const Eigen::MatrixXd& raw);

/**
 * Minimum-cost perfect assignment (Hungarian algorithm). Returns, for each
 * row, the column it is assigned to.
 */
std::vector<int> min_cost_assignment(const Eigen::MatrixXd& cost);

/**
 * Causal order from an ICA demixing matrix.
 *
 * Rows are matched to variables by the assignment that maximizes
 * sum_i |W(row(i), i)| and each matched row is sign-normalized to a positive
 * diagonal. Variables are then ordered by increasing
 * r_i = ||w_i||_2 / max_j |w_ij|, peeling one variable at a time: after a
 * variable is placed, its column is removed from every remaining row and
 * r_i is recomputed over the remaining columns. Ties go to the lower index.
 * Returns order[position] = variable.
 */
std::vector<int> causal_order(const IcaResult& ica);

struct EffectEstimate {
  Eigen::MatrixXd adjacency;  // (from, to); zero unless from precedes to
  bool rank_deficient = false;
};

/// OLS of each variable on all of its predecessors in `order` (min-norm
/// solution when the predecessor block is rank deficient).
EffectEstimate estimate_effects(const Eigen::MatrixXd& X, const std::vector<int>& order);

struct LingamFit {
  StandardizedData data;
  IcaResult ica;
  std::vector<int> order;
  Eigen::MatrixXd adjacency;      // standardized units
  Eigen::MatrixXd adjacency_raw;  // de-standardized: effect * sd(to) / sd(from)
  bool rank_deficient = false;
};

/// Standardize -> ICA -> causal order -> effects on one data matrix.
LingamFit fit_lingam(const Eigen::MatrixXd& raw, const IcaSettings& ica = {});

struct BootstrapResult {
  int resamples = 0;
  int unconverged = 0;  // ICA hit max_iter; estimate kept
  int failed = 0;       // degenerate resample; contributes zeros
  Eigen::MatrixXd ci_low, ci_high;          // standardized units
  Eigen::MatrixXd ci_low_raw, ci_high_raw;  // de-standardized
  Eigen::MatrixXd sign_stability;           // share of resamples agreeing in sign with the point estimate
};

/**
 * Percentile 95% intervals from B full re-fits on row-resampled data.
 * Resample b draws rows with Rng(seed, b + 1); resamples run through
 * for_each_index. `point` (standardized) is used for sign stability.
 */
BootstrapResult bootstrap_cis(const Eigen::MatrixXd& raw, const Eigen::MatrixXd& point, int resamples,
                              std::uint64_t seed, const IcaSettings& ica = {}, const Parallelism& par = {});

struct LingamSettings {
  int bootstrap = 1000;  // 0 disables
  IcaSettings ica{};
  std::uint64_t seed = 0;
  Parallelism parallelism{};
};

struct TargetEffect {
  std::string feature;
  double effect = 0.0;  // standardized
  double effect_raw = 0.0;
  double ci_low = 0.0, ci_high = 0.0;
  double ci_low_raw = 0.0, ci_high_raw = 0.0;
  double sign_stability = 0.0;
};

struct CausalModel {
  Group group = Group::negative;
  int samples = 0;
  std::vector<std::string> variables;  // features then the target
  std::vector<int> order;
  Eigen::MatrixXd adjacency;
  Eigen::MatrixXd adjacency_raw;
  Eigen::VectorXd mean, sd;
  bool has_bootstrap = false;
  BootstrapResult bootstrap;
  std::vector<TargetEffect> effects_to_target;  // sorted by |effect_raw| descending
  std::vector<std::string> dropped_columns;
  std::vector<std::string> warnings;
  std::vector<std::string> notes;
  bool ica_converged = false;

  int target_index() const { return static_cast<int>(variables.size()) - 1; }
};

/// Full pipeline on one group (target joins the features as the last variable).
/// Constant columns are dropped with a warning. Columns that are a linear
/// combination of earlier kept columns (1 - R^2 < 1e-8, e.g. iqr = q75 - q25)
/// are dropped with a note.
CausalModel discover(const GroupDataset& group, const LingamSettings& settings = {});

/// (d+1)^2 rows: from,to,effect,ci_low,ci_high,sign_stability (standardized units).
void write_adjacency_csv(std::ostream& out, const CausalModel& model);
/// JSON array of variable names in causal order.
void write_order_json(std::ostream& out, const CausalModel& model);
void write_effects_csv(std::ostream& out, const CausalModel& model);
/// variable,mean,sd used for standardization.
void write_standardization_csv(std::ostream& out, const CausalModel& model);

}  // namespace pumpcause

#endif  // PUMPCAUSE_LINGAM_HPP
