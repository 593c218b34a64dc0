#include "pumpcause/features.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pumpcause/errors.hpp"
#include "pumpcause/io.hpp"

namespace pumpcause {

namespace {

constexpr std::array<std::string_view, kFeatureCount> kNames = {
    "mean",
    "std",
    "q25",
    "q50",
    "q75",
    "iqr",
    "min",
    "max",
    "skewness",
    "kurtosis",
    "cv",
    "trend_slope_90d",
    "trend_intercept",
    "recent_vs_past_ratio",
    "recent_vs_past_diff",
    "recent_change_rate",
    "diff_mean",
    "diff_abs_mean",
    "rolling_std_7d_mean",
    "rolling_std_14d_mean",
    "rolling_std_30d_mean",
    "max_drawdown",
    "mean_drawdown",
};

void require_finite(std::span<const double> w) {
  for (double v : w)
    if (!std::isfinite(v)) throw ValidationError("window contains a non-finite value");
}

// Linear interpolation between order statistics: h = (n - 1) q.
double sorted_quantile(const std::vector<double>& sorted, double q) {
  const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const double frac = h - static_cast<double>(lo);
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

double mean_of(std::span<const double> w) {
  return std::accumulate(w.begin(), w.end(), 0.0) / static_cast<double>(w.size());
}

// Mean over valid trailing windows of the population std of each window.
double mean_rolling_std(std::span<const double> w, std::size_t width) {
  double total = 0.0;
  std::size_t windows = 0;
  for (std::size_t end = width; end <= w.size(); ++end) {
    const auto segment = w.subspan(end - width, width);
    const double m = mean_of(segment);
    double ss = 0.0;
    for (double v : segment) ss += (v - m) * (v - m);
    total += std::sqrt(ss / static_cast<double>(width));
    ++windows;
  }
  return total / static_cast<double>(windows);
}

}  // namespace

std::string_view feature_name(Feature f) { return kNames[static_cast<std::size_t>(f)]; }

Feature feature_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kNames.size(); ++i)
    if (kNames[i] == name) return static_cast<Feature>(i);
  throw ValidationError("unknown feature '" + std::string(name) + "'");
}

std::vector<Feature> all_features() {
  std::vector<Feature> out;
  for (int i = 0; i < kFeatureCount; ++i) out.push_back(static_cast<Feature>(i));
  return out;
}

std::vector<Feature> default_active_features() {
  auto out = all_features();
  std::erase(out, Feature::diff_mean);
  return out;
}

StatisticalFeatures statistical_features(std::span<const double> window) {
  if (window.size() < 2) throw ValidationError("statistical features need at least 2 values");
  require_finite(window);
  const double n = static_cast<double>(window.size());

  std::vector<double> sorted(window.begin(), window.end());
  std::sort(sorted.begin(), sorted.end());

  StatisticalFeatures f{};
  f.mean = mean_of(window);
  f.min = sorted.front();
  f.max = sorted.back();
  f.q25 = sorted_quantile(sorted, 0.25);
  f.q50 = sorted_quantile(sorted, 0.50);
  f.q75 = sorted_quantile(sorted, 0.75);
  f.iqr = f.q75 - f.q25;

  if (f.min == f.max) {
    // Constant window: exact zeros instead of rounding noise.
    f.mean = f.min;
    f.std = 0.0;
    f.skewness = 0.0;
    f.kurtosis = 0.0;
    f.cv = 0.0;
    return f;
  }
  double m2 = 0.0;
  for (double v : window) m2 += (v - f.mean) * (v - f.mean);
  f.std = std::sqrt(m2 / n);
  double m3 = 0.0;
  double m4 = 0.0;
  for (double v : window) {
    const double z = (v - f.mean) / f.std;
    m3 += z * z * z;
    m4 += z * z * z * z;
  }
  f.skewness = m3 / n;
  f.kurtosis = m4 / n - 3.0;
  f.cv = f.std / (std::abs(f.mean) + kFeatureEpsilon);
  return f;
}

TrendFeatures trend_features(std::span<const double> window) {
  if (window.size() < 8) throw ValidationError("trend features need at least 8 values");
  require_finite(window);
  const std::size_t T = window.size();
  const double t_bar = (static_cast<double>(T) + 1.0) / 2.0;
  const double mu = mean_of(window);
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < T; ++i) {
    const double dt = static_cast<double>(i + 1) - t_bar;
    sxy += dt * (window[i] - mu);
    sxx += dt * dt;
  }
  TrendFeatures f{};
  f.slope = sxy / sxx;
  f.intercept = mu - f.slope * t_bar;

  const std::size_t third = T / 3;
  const double past = mean_of(window.first(third));
  const double recent = mean_of(window.last(third));
  f.recent_vs_past_ratio = recent / (past + kFeatureEpsilon);
  f.recent_vs_past_diff = recent - past;
  f.recent_change_rate = (window[T - 1] - window[T - 8]) / 7.0;
  return f;
}

VariabilityFeatures variability_features(std::span<const double> window) {
  if (window.size() < 31) throw ValidationError("variability features need at least 31 values");
  require_finite(window);
  const std::size_t T = window.size();

  VariabilityFeatures f{};
  double diff_sum = 0.0;
  double abs_sum = 0.0;
  for (std::size_t i = 1; i < T; ++i) {
    const double d = window[i] - window[i - 1];
    diff_sum += d;
    abs_sum += std::abs(d);
  }
  f.diff_mean = diff_sum / static_cast<double>(T - 1);
  f.diff_abs_mean = abs_sum / static_cast<double>(T - 1);
  f.rolling_std_7d_mean = mean_rolling_std(window, 7);
  f.rolling_std_14d_mean = mean_rolling_std(window, 14);
  f.rolling_std_30d_mean = mean_rolling_std(window, 30);

  double running_max = window[0];
  double dd_sum = 0.0;
  double dd_max = 0.0;
  for (double v : window) {
    running_max = std::max(running_max, v);
    const double dd = (running_max - v) / (running_max + kFeatureEpsilon);
    dd_sum += dd;
    dd_max = std::max(dd_max, dd);
  }
  f.max_drawdown = dd_max;
  f.mean_drawdown = dd_sum / static_cast<double>(T);
  return f;
}

FeatureVector compute_features(std::span<const double> window) {
  const auto s = statistical_features(window);
  const auto t = trend_features(window);
  const auto v = variability_features(window);
  return {s.mean,
          s.std,
          s.q25,
          s.q50,
          s.q75,
          s.iqr,
          s.min,
          s.max,
          s.skewness,
          s.kurtosis,
          s.cv,
          t.slope,
          t.intercept,
          t.recent_vs_past_ratio,
          t.recent_vs_past_diff,
          t.recent_change_rate,
          v.diff_mean,
          v.diff_abs_mean,
          v.rolling_std_7d_mean,
          v.rolling_std_14d_mean,
          v.rolling_std_30d_mean,
          v.max_drawdown,
          v.mean_drawdown};
}

Eigen::Index FeatureMatrix::column(std::string_view name) const {
  for (std::size_t j = 0; j < names.size(); ++j)
    if (names[j] == name) return static_cast<Eigen::Index>(j);
  return -1;
}

long common_last_day(const std::vector<CovariateSeries>& series) {
  if (series.empty()) throw ValidationError("no time series");
  long last = series.front().last_day();
  for (const auto& s : series) last = std::min(last, s.last_day());
  return last;
}

FeatureMatrix extract_features(const std::vector<CovariateSeries>& series, long window_end,
                               const FeatureSettings& settings) {
  if (settings.window < 31) throw ValidationError("feature window must be at least 31 days");
  if (settings.active.empty()) throw ValidationError("active feature set is empty");
  const long first = window_end - settings.window + 1;

  std::string missing;
  for (const auto& s : series) {
    if (!s.covers(first, window_end)) {
      if (!missing.empty()) missing += "; ";
      missing += s.pump_id + " covers days " + std::to_string(s.first_day) + ".." + std::to_string(s.last_day());
    }
  }
  if (!missing.empty())
    throw ValidationError("series too short for window " + std::to_string(first) + ".." +
                          std::to_string(window_end) + ": " + missing);

  FeatureMatrix out;
  for (auto f : settings.active) out.names.emplace_back(feature_name(f));
  out.values.resize(static_cast<Eigen::Index>(series.size()), static_cast<Eigen::Index>(settings.active.size()));
  for (const auto& s : series) out.pump_ids.push_back(s.pump_id);

  for_each_index(series.size(), settings.parallelism, [&](std::size_t i) {
    const auto& s = series[i];
    const auto offset = static_cast<std::size_t>(first - s.first_day);
    const auto full = compute_features(std::span<const double>(s.values).subspan(offset, settings.window));
    for (std::size_t j = 0; j < settings.active.size(); ++j)
      out.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = get(full, settings.active[j]);
  });
  return out;
}

void write_features(std::ostream& out, const FeatureMatrix& features) {
  out << "pump_id";
  for (const auto& n : features.names) out << ',' << n;
  out << '\n';
  for (Eigen::Index i = 0; i < features.values.rows(); ++i) {
    out << features.pump_ids[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < features.values.cols(); ++j) out << ',' << io::format_double(features.values(i, j));
    out << '\n';
  }
}

FeatureMatrix parse_features(std::istream& in, const std::string& name) {
  io::LineReader reader(in, name);
  std::string line;
  if (!reader.next(line)) throw ParseError(name, 1, "empty features file");
  const auto header = io::split_csv(line);
  if (header.empty() || header[0] != "pump_id") throw ParseError(name, 1, "features header must start with pump_id");
  FeatureMatrix out;
  for (std::size_t j = 1; j < header.size(); ++j) out.names.emplace_back(header[j]);
  std::vector<std::vector<double>> rows;
  while (reader.next(line)) {
    if (io::trim(line).empty()) continue;
    const auto fields = io::split_csv(line);
    if (fields.size() != header.size()) throw ParseError(name, reader.line_number(), "wrong field count");
    out.pump_ids.emplace_back(fields[0]);
    std::vector<double> row;
    for (std::size_t j = 1; j < fields.size(); ++j) {
      const auto v = io::parse_double(fields[j]);
      if (!v || !std::isfinite(*v)) throw ParseError(name, reader.line_number(), "malformed feature value");
      row.push_back(*v);
    }
    rows.push_back(std::move(row));
  }
  out.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(out.names.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      out.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return out;
}

}  // namespace pumpcause
