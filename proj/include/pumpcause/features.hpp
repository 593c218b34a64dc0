#ifndef PUMPCAUSE_FEATURES_HPP
#define PUMPCAUSE_FEATURES_HPP

#include <array>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "pumpcause/data.hpp"
#include "pumpcause/parallel.hpp"

namespace pumpcause {

/// Guard added to denominators (cv, ratio, drawdown).
inline constexpr double kFeatureEpsilon = 1e-10;

// Column order of every features export.
enum class Feature : int {
  mean,
  std,
  q25,
  q50,
  q75,
  iqr,
  min,
  max,
  skewness,
  kurtosis,
  cv,
  trend_slope_90d,
  trend_intercept,
  recent_vs_past_ratio,
  recent_vs_past_diff,
  recent_change_rate,
  diff_mean,
  diff_abs_mean,
  rolling_std_7d_mean,
  rolling_std_14d_mean,
  rolling_std_30d_mean,
  max_drawdown,
  mean_drawdown,
};

inline constexpr int kFeatureCount = 23;

std::string_view feature_name(Feature f);
/// Throws ValidationError for unknown names.
Feature feature_from_name(std::string_view name);
std::vector<Feature> all_features();
/// The 22 features used for causal discovery: everything except diff_mean.
std::vector<Feature> default_active_features();

struct StatisticalFeatures {
  double mean, std, q25, q50, q75, iqr, min, max, skewness, kurtosis, cv;
};

struct TrendFeatures {
  double slope, intercept, recent_vs_past_ratio, recent_vs_past_diff, recent_change_rate;
};

struct VariabilityFeatures {
  double diff_mean, diff_abs_mean, rolling_std_7d_mean, rolling_std_14d_mean, rolling_std_30d_mean, max_drawdown,
      mean_drawdown;
};

/// Population moments (1/T), excess kurtosis, linear-interpolation quantiles.
/// Needs at least 2 values; a constant window has skewness = kurtosis = 0.
StatisticalFeatures statistical_features(std::span<const double> window);

/// OLS trend on t = 1..T, last-third vs first-third comparison, 7-day change.
/// Needs at least 8 values.
TrendFeatures trend_features(std::span<const double> window);

/// First differences, trailing rolling std (w = 7, 14, 30), drawdowns.
/// Needs at least 31 values.
VariabilityFeatures variability_features(std::span<const double> window);

using FeatureVector = std::array<double, kFeatureCount>;

FeatureVector compute_features(std::span<const double> window);

inline double get(const FeatureVector& v, Feature f) { return v[static_cast<std::size_t>(f)]; }

/// Rows are pumps, columns are the named features.
struct FeatureMatrix {
  std::vector<std::string> pump_ids;
  std::vector<std::string> names;
  Eigen::MatrixXd values;

  Eigen::Index column(std::string_view name) const;  // -1 when absent
};

struct FeatureSettings {
  int window = 90;
  std::vector<Feature> active = default_active_features();
  Parallelism parallelism{};
};

/**
 * Features of the T-day window ending at window_end (inclusive) for every
 * series, in the order given. Throws ValidationError listing every pump whose
 * series does not cover the window.
 */
FeatureMatrix extract_features(const std::vector<CovariateSeries>& series, long window_end,
                               const FeatureSettings& settings = {});

/// Last day covered by every series.
long common_last_day(const std::vector<CovariateSeries>& series);

void write_features(std::ostream& out, const FeatureMatrix& features);
FeatureMatrix parse_features(std::istream& in, const std::string& name);

}  // namespace pumpcause

#endif  // PUMPCAUSE_FEATURES_HPP
