#include "pumpcause/lingam.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <nlohmann/json.hpp>

#include "pumpcause/errors.hpp"
#include "pumpcause/io.hpp"
#include "pumpcause/rng.hpp"

namespace pumpcause {

namespace {

int sign_of(double v) { return (v > 0.0) - (v < 0.0); }

double percentile(std::vector<double>& values, double q) {
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= values.size()) return values.back();
  return values[lo] + (h - static_cast<double>(lo)) * (values[lo + 1] - values[lo]);
}

Eigen::MatrixXd destandardize(const Eigen::MatrixXd& adjacency, const Eigen::VectorXd& sd) {
  Eigen::MatrixXd raw = adjacency;
  for (Eigen::Index from = 0; from < raw.rows(); ++from)
    for (Eigen::Index to = 0; to < raw.cols(); ++to) raw(from, to) *= sd[to] / sd[from];
  return raw;
}

}  // namespace

StandardizedData standardize(const Eigen::MatrixXd& raw) {
  const Eigen::Index n = raw.rows();
  if (n < 2) throw ValidationError("standardization needs at least two rows");
  StandardizedData out;
  out.mean = raw.colwise().mean().transpose();
  out.X = raw.rowwise() - out.mean.transpose();
  out.sd = (out.X.colwise().squaredNorm() / static_cast<double>(n)).cwiseSqrt().transpose();
  for (Eigen::Index j = 0; j < raw.cols(); ++j) {
    if (!(out.sd[j] > 0.0)) throw ValidationError("column " + std::to_string(j) + " is constant");
    out.X.col(j) /= out.sd[j];
  }
  return out;
}

std::vector<int> min_cost_assignment(const Eigen::MatrixXd& cost) {
  const int n = static_cast<int>(cost.rows());
  if (cost.cols() != cost.rows()) throw ValidationError("assignment cost matrix must be square");
  const double inf = std::numeric_limits<double>::infinity();
  // 1-based potentials / matching, column 0 is a sentinel.
  std::vector<double> u(static_cast<std::size_t>(n) + 1, 0.0), v(static_cast<std::size_t>(n) + 1, 0.0);
  std::vector<int> match(static_cast<std::size_t>(n) + 1, 0), way(static_cast<std::size_t>(n) + 1, 0);
  for (int i = 1; i <= n; ++i) {
    match[0] = i;
    int j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(n) + 1, inf);
    std::vector<char> used(static_cast<std::size_t>(n) + 1, 0);
    do {
      used[static_cast<std::size_t>(j0)] = 1;
      const int i0 = match[static_cast<std::size_t>(j0)];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        const auto uj = static_cast<std::size_t>(j);
        if (used[uj]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] - v[uj];
        if (cur < minv[uj]) {
          minv[uj] = cur;
          way[uj] = j0;
        }
        if (minv[uj] < delta) {
          delta = minv[uj];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        const auto uj = static_cast<std::size_t>(j);
        if (used[uj]) {
          u[static_cast<std::size_t>(match[uj])] += delta;
          v[uj] -= delta;
        } else {
          minv[uj] -= delta;
        }
      }
      j0 = j1;
    } while (match[static_cast<std::size_t>(j0)] != 0);
    do {
      const int j1 = way[static_cast<std::size_t>(j0)];
      match[static_cast<std::size_t>(j0)] = match[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> row_to_col(static_cast<std::size_t>(n), -1);
  for (int j = 1; j <= n; ++j) row_to_col[static_cast<std::size_t>(match[static_cast<std::size_t>(j)] - 1)] = j - 1;
  return row_to_col;
}

std::vector<int> causal_order(const IcaResult& ica) {
  const Eigen::MatrixXd& W = ica.demixing;
  const Eigen::Index m = W.rows();
  if (!W.allFinite()) throw NumericalError("demixing matrix is not finite");

  const auto row_to_var = min_cost_assignment(-W.cwiseAbs());
  Eigen::MatrixXd matched(m, m);
  for (Eigen::Index r = 0; r < m; ++r) {
    const Eigen::Index var = row_to_var[static_cast<std::size_t>(r)];
    matched.row(var) = W.row(r);
    if (matched(var, var) < 0.0) matched.row(var) *= -1.0;
  }

  std::vector<int> remaining(static_cast<std::size_t>(m));
  std::iota(remaining.begin(), remaining.end(), 0);
  std::vector<int> order;
  order.reserve(static_cast<std::size_t>(m));
  while (!remaining.empty()) {
    int best = -1;
    double best_ratio = std::numeric_limits<double>::infinity();
    for (int var : remaining) {
      double norm2 = 0.0;
      double max_abs = 0.0;
      for (int col : remaining) {
        const double w = matched(var, col);
        norm2 += w * w;
        max_abs = std::max(max_abs, std::abs(w));
      }
      const double ratio = max_abs > 0.0 ? std::sqrt(norm2) / max_abs : std::numeric_limits<double>::infinity();
      if (ratio < best_ratio || best < 0) {
        best_ratio = ratio;
        best = var;
      }
    }
    order.push_back(best);
    std::erase(remaining, best);
  }
  return order;
}

EffectEstimate estimate_effects(const Eigen::MatrixXd& X, const std::vector<int>& order) {
  const Eigen::Index m = X.cols();
  if (static_cast<Eigen::Index>(order.size()) != m) throw ValidationError("order length does not match columns");
  EffectEstimate out;
  out.adjacency = Eigen::MatrixXd::Zero(m, m);
  for (std::size_t k = 1; k < order.size(); ++k) {
    if (static_cast<Eigen::Index>(k) >= X.rows())
      throw ValidationError("more predecessors than samples in effect regression");
    Eigen::MatrixXd P(X.rows(), static_cast<Eigen::Index>(k));
    for (std::size_t i = 0; i < k; ++i) P.col(static_cast<Eigen::Index>(i)) = X.col(order[i]);
    const Eigen::VectorXd y = X.col(order[k]);
    Eigen::VectorXd coef;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(P);
    if (qr.rank() < P.cols()) {
      out.rank_deficient = true;
      coef = Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd>(P).solve(y);
    } else {
      coef = qr.solve(y);
    }
    for (std::size_t i = 0; i < k; ++i) out.adjacency(order[i], order[k]) = coef[static_cast<Eigen::Index>(i)];
  }
  return out;
}

LingamFit fit_lingam(const Eigen::MatrixXd& raw, const IcaSettings& ica) {
  LingamFit fit;
  fit.data = standardize(raw);
  fit.ica = fast_ica(fit.data.X, ica);
  fit.order = causal_order(fit.ica);
  auto effects = estimate_effects(fit.data.X, fit.order);
  fit.adjacency = std::move(effects.adjacency);
  fit.rank_deficient = effects.rank_deficient;
  fit.adjacency_raw = destandardize(fit.adjacency, fit.data.sd);
  return fit;
}

BootstrapResult bootstrap_cis(const Eigen::MatrixXd& raw, const Eigen::MatrixXd& point, int resamples,
                              std::uint64_t seed, const IcaSettings& ica, const Parallelism& par) {
  const Eigen::Index n = raw.rows();
  const Eigen::Index m = raw.cols();
  if (resamples < 1) throw ValidationError("bootstrap needs at least one resample");
  if (n < 10) throw ValidationError("bootstrap needs at least 10 rows");

  struct Sample {
    Eigen::MatrixXd std_effects;
    Eigen::MatrixXd raw_effects;
    bool converged = true;
    bool failed = false;
  };
  std::vector<Sample> samples(static_cast<std::size_t>(resamples));

  for_each_index(samples.size(), par, [&](std::size_t b) {
    Rng rng(seed, b + 1);
    Eigen::MatrixXd resampled(n, m);
    for (Eigen::Index r = 0; r < n; ++r)
      resampled.row(r) = raw.row(static_cast<Eigen::Index>(rng.uniform_index(static_cast<std::uint64_t>(n))));
    IcaSettings local = ica;
    local.seed = rng.next();
    auto& s = samples[b];
    try {
      auto fit = fit_lingam(resampled, local);
      s.std_effects = std::move(fit.adjacency);
      s.raw_effects = std::move(fit.adjacency_raw);
      s.converged = fit.ica.converged;
    } catch (const std::runtime_error&) {
      s.failed = true;
      s.std_effects = Eigen::MatrixXd::Zero(m, m);
      s.raw_effects = Eigen::MatrixXd::Zero(m, m);
    }
  });

  BootstrapResult out;
  out.resamples = resamples;
  out.ci_low.resize(m, m);
  out.ci_high.resize(m, m);
  out.ci_low_raw.resize(m, m);
  out.ci_high_raw.resize(m, m);
  out.sign_stability.resize(m, m);
  for (const auto& s : samples) {
    out.failed += s.failed ? 1 : 0;
    out.unconverged += (!s.failed && !s.converged) ? 1 : 0;
  }
  std::vector<double> values(static_cast<std::size_t>(resamples));
  std::vector<double> raw_values(static_cast<std::size_t>(resamples));
  for (Eigen::Index from = 0; from < m; ++from) {
    for (Eigen::Index to = 0; to < m; ++to) {
      int agree = 0;
      const int point_sign = sign_of(point(from, to));
      for (std::size_t b = 0; b < samples.size(); ++b) {
        values[b] = samples[b].std_effects(from, to);
        raw_values[b] = samples[b].raw_effects(from, to);
        agree += sign_of(values[b]) == point_sign ? 1 : 0;
      }
      out.sign_stability(from, to) = static_cast<double>(agree) / resamples;
      out.ci_low(from, to) = percentile(values, 0.025);
      out.ci_high(from, to) = percentile(values, 0.975);
      out.ci_low_raw(from, to) = percentile(raw_values, 0.025);
      out.ci_high_raw(from, to) = percentile(raw_values, 0.975);
    }
  }
  return out;
}

constexpr double kDependenceTolerance = 1e-8;  // on 1 - R^2

CausalModel discover(const GroupDataset& group, const LingamSettings& settings) {
  CausalModel model;
  model.group = group.group;
  model.samples = group.members();
  const Eigen::Index n = group.features.rows();
  if (group.target.size() != n) throw ValidationError("feature rows and target length differ");

  std::vector<Eigen::Index> kept;
  for (Eigen::Index j = 0; j < group.features.cols(); ++j) {
    const auto col = group.features.col(j);
    if (n > 0 && (col.array() == col[0]).all()) {
      model.dropped_columns.push_back(group.feature_names[static_cast<std::size_t>(j)]);
      model.warnings.push_back("dropped constant column " + group.feature_names[static_cast<std::size_t>(j)]);
    } else {
      kept.push_back(j);
    }
  }
  // drop columns spanned by earlier kept columns, via Gram-Schmidt on the centred data
  {
    std::vector<Eigen::Index> independent;
    Eigen::MatrixXd basis(n, 0);
    for (Eigen::Index j : kept) {
      Eigen::VectorXd c = group.features.col(j).array() - group.features.col(j).mean();
      c /= c.norm();
      Eigen::VectorXd r = c;
      for (int pass = 0; pass < 2; ++pass) r -= basis * (basis.transpose() * r);
      const auto& name = group.feature_names[static_cast<std::size_t>(j)];
      if (r.squaredNorm() < kDependenceTolerance) {
        model.dropped_columns.push_back(name);
        model.notes.push_back("dropped " + name + ": linear combination of other features");
        continue;
      }
      basis.conservativeResize(Eigen::NoChange, basis.cols() + 1);
      basis.col(basis.cols() - 1) = r / r.norm();
      independent.push_back(j);
    }
    kept = std::move(independent);
  }
  const auto d = static_cast<Eigen::Index>(kept.size());
  if (n < d + 2)
    throw ValidationError("group " + std::string(group_name(group.group)) + " has " + std::to_string(n) +
                          " members; causal discovery needs at least " + std::to_string(d + 2));
  if ((group.target.array() == group.target[0]).all()) throw ValidationError("target u is constant within the group");

  Eigen::MatrixXd raw(n, d + 1);
  for (Eigen::Index k = 0; k < d; ++k) {
    raw.col(k) = group.features.col(kept[static_cast<std::size_t>(k)]);
    model.variables.push_back(group.feature_names[static_cast<std::size_t>(kept[static_cast<std::size_t>(k)])]);
  }
  raw.col(d) = group.target;
  model.variables.emplace_back(kTargetName);

  IcaSettings ica = settings.ica;
  ica.seed = settings.seed;
  auto fit = fit_lingam(raw, ica);
  model.order = fit.order;
  model.adjacency = fit.adjacency;
  model.adjacency_raw = fit.adjacency_raw;
  model.mean = fit.data.mean;
  model.sd = fit.data.sd;
  model.ica_converged = fit.ica.converged;
  if (!fit.ica.converged) model.warnings.push_back("ICA did not converge; estimates are unreliable");
  if (fit.rank_deficient) model.warnings.push_back("rank-deficient regression; minimum-norm effects reported");

  if (settings.bootstrap > 0) {
    model.has_bootstrap = true;
    model.bootstrap = bootstrap_cis(raw, model.adjacency, settings.bootstrap, settings.seed, settings.ica,
                                    settings.parallelism);
    if (model.bootstrap.unconverged > 0)
      model.warnings.push_back(std::to_string(model.bootstrap.unconverged) +
                               " bootstrap resamples did not reach ICA convergence");
    if (model.bootstrap.failed > 0)
      model.warnings.push_back(std::to_string(model.bootstrap.failed) + " bootstrap resamples were degenerate");
  }

  const Eigen::Index t = d;
  for (Eigen::Index f = 0; f < d; ++f) {
    TargetEffect e;
    e.feature = model.variables[static_cast<std::size_t>(f)];
    e.effect = model.adjacency(f, t);
    e.effect_raw = model.adjacency_raw(f, t);
    if (model.has_bootstrap) {
      e.ci_low = model.bootstrap.ci_low(f, t);
      e.ci_high = model.bootstrap.ci_high(f, t);
      e.ci_low_raw = model.bootstrap.ci_low_raw(f, t);
      e.ci_high_raw = model.bootstrap.ci_high_raw(f, t);
      e.sign_stability = model.bootstrap.sign_stability(f, t);
    } else {
      e.ci_low = e.ci_high = e.effect;
      e.ci_low_raw = e.ci_high_raw = e.effect_raw;
      e.sign_stability = 1.0;
    }
    model.effects_to_target.push_back(std::move(e));
  }
  std::stable_sort(model.effects_to_target.begin(), model.effects_to_target.end(),
                   [](const auto& a, const auto& b) { return std::abs(a.effect_raw) > std::abs(b.effect_raw); });
  return model;
}

void write_adjacency_csv(std::ostream& out, const CausalModel& model) {
  out << "from,to,effect,ci_low,ci_high,sign_stability\n";
  const auto m = static_cast<Eigen::Index>(model.variables.size());
  for (Eigen::Index from = 0; from < m; ++from) {
    for (Eigen::Index to = 0; to < m; ++to) {
      const double effect = model.adjacency(from, to);
      out << model.variables[static_cast<std::size_t>(from)] << ',' << model.variables[static_cast<std::size_t>(to)]
          << ',' << io::format_double(effect) << ',';
      if (model.has_bootstrap)
        out << io::format_double(model.bootstrap.ci_low(from, to)) << ','
            << io::format_double(model.bootstrap.ci_high(from, to)) << ','
            << io::format_double(model.bootstrap.sign_stability(from, to));
      else
        out << io::format_double(effect) << ',' << io::format_double(effect) << ",1";
      out << '\n';
    }
  }
}

void write_order_json(std::ostream& out, const CausalModel& model) {
  nlohmann::json names = nlohmann::json::array();
  for (int v : model.order) names.push_back(model.variables[static_cast<std::size_t>(v)]);
  out << names.dump(2) << '\n';
}

void write_effects_csv(std::ostream& out, const CausalModel& model) {
  out << "feature,effect_raw,ci_low_raw,ci_high_raw,effect,ci_low,ci_high,sign_stability\n";
  for (const auto& e : model.effects_to_target)
    out << e.feature << ',' << io::format_double(e.effect_raw) << ',' << io::format_double(e.ci_low_raw) << ','
        << io::format_double(e.ci_high_raw) << ',' << io::format_double(e.effect) << ','
        << io::format_double(e.ci_low) << ',' << io::format_double(e.ci_high) << ','
        << io::format_double(e.sign_stability) << '\n';
}

void write_standardization_csv(std::ostream& out, const CausalModel& model) {
  out << "variable,mean,sd\n";
  for (std::size_t j = 0; j < model.variables.size(); ++j)
    out << model.variables[j] << ',' << io::format_double(model.mean[static_cast<Eigen::Index>(j)]) << ','
        << io::format_double(model.sd[static_cast<Eigen::Index>(j)]) << '\n';
}

}  // namespace pumpcause
