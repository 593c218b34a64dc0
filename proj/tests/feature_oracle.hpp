#ifndef PUMPCAUSE_TESTS_FEATURE_ORACLE_HPP
#define PUMPCAUSE_TESTS_FEATURE_ORACLE_HPP

// Brute-force reference for the 23 window features, written from the
// formulas without sharing code with the library.

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

namespace oracle {

inline constexpr double kEps = 1e-10;

inline double mean(const std::vector<double>& v, std::size_t from, std::size_t to) {
  long double s = 0;
  for (std::size_t i = from; i < to; ++i) s += v[i];
  return static_cast<double>(s / static_cast<long double>(to - from));
}

inline double pop_sd(const std::vector<double>& v, std::size_t from, std::size_t to) {
  const double m = mean(v, from, to);
  long double s = 0;
  for (std::size_t i = from; i < to; ++i) s += (v[i] - m) * (v[i] - m);
  return std::sqrt(static_cast<double>(s / static_cast<long double>(to - from)));
}

// Quantile q: position (n - 1) q in the sorted sample, linear between neighbours.
inline double quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const double below = std::floor(pos);
  const double above = std::ceil(pos);
  const double a = v[static_cast<std::size_t>(below)];
  const double b = v[static_cast<std::size_t>(above)];
  return a + (pos - below) * (b - a);
}

inline std::array<double, 23> features(const std::vector<double>& x) {
  const std::size_t T = x.size();
  std::array<double, 23> f{};
  const double mu = mean(x, 0, T);
  const double sigma = pop_sd(x, 0, T);
  f[0] = mu;
  f[1] = sigma;
  f[2] = quantile(x, 0.25);
  f[3] = quantile(x, 0.50);
  f[4] = quantile(x, 0.75);
  f[5] = f[4] - f[2];
  f[6] = *std::min_element(x.begin(), x.end());
  f[7] = *std::max_element(x.begin(), x.end());
  if (sigma > 0) {
    long double s3 = 0, s4 = 0;
    for (double v : x) {
      s3 += std::pow((v - mu) / sigma, 3);
      s4 += std::pow((v - mu) / sigma, 4);
    }
    f[8] = static_cast<double>(s3 / T);
    f[9] = static_cast<double>(s4 / T) - 3.0;
  }
  f[10] = sigma / (std::abs(mu) + kEps);

  // Normal equations for x_t = a + b t, t = 1..T.
  long double st = 0, stt = 0, sx = 0, stx = 0;
  for (std::size_t i = 0; i < T; ++i) {
    const long double t = static_cast<long double>(i + 1);
    st += t;
    stt += t * t;
    sx += x[i];
    stx += t * x[i];
  }
  const long double n = static_cast<long double>(T);
  const long double b = (n * stx - st * sx) / (n * stt - st * st);
  f[11] = static_cast<double>(b);
  f[12] = static_cast<double>((sx - b * st) / n);

  const std::size_t third = T / 3;
  const double past = mean(x, 0, third);
  const double recent = mean(x, T - third, T);
  f[13] = recent / (past + kEps);
  f[14] = recent - past;
  f[15] = (x[T - 1] - x[T - 8]) / 7.0;

  long double d = 0, ad = 0;
  for (std::size_t i = 1; i < T; ++i) {
    d += x[i] - x[i - 1];
    ad += std::abs(x[i] - x[i - 1]);
  }
  f[16] = static_cast<double>(d / (T - 1));
  f[17] = static_cast<double>(ad / (T - 1));

  const std::array<std::size_t, 3> widths = {7, 14, 30};
  for (std::size_t k = 0; k < 3; ++k) {
    const std::size_t w = widths[k];
    long double total = 0;
    std::size_t count = 0;
    for (std::size_t t = w; t <= T; ++t) {
      total += pop_sd(x, t - w, t);
      ++count;
    }
    f[18 + k] = static_cast<double>(total / count);
  }

  double max_dd = 0;
  long double sum_dd = 0;
  for (std::size_t t = 0; t < T; ++t) {
    const double peak = *std::max_element(x.begin(), x.begin() + static_cast<long>(t) + 1);
    const double dd = (peak - x[t]) / (peak + kEps);
    max_dd = std::max(max_dd, dd);
    sum_dd += dd;
  }
  f[21] = max_dd;
  f[22] = static_cast<double>(sum_dd / T);
  return f;
}

}  // namespace oracle

#endif  // PUMPCAUSE_TESTS_FEATURE_ORACLE_HPP
