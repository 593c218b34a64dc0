#include "pumpcause/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include <nlohmann/json.hpp>

#include "pumpcause/errors.hpp"
#include "pumpcause/rng.hpp"

namespace pumpcause {

namespace {

std::string make_id(char prefix, int index, int count) {
  std::size_t width = 3;
  for (int c = count; c >= 1000; c /= 10) ++width;
  std::string digits = std::to_string(index);
  if (digits.size() < width) digits.insert(0, width - digits.size(), '0');
  return prefix + digits;
}

std::vector<int> shuffled(int n, Rng& rng) {
  std::vector<int> v(static_cast<std::size_t>(n));
  std::iota(v.begin(), v.end(), 0);
  for (int i = n - 1; i > 0; --i)
    std::swap(v[static_cast<std::size_t>(i)],
              v[rng.uniform_index(static_cast<std::uint64_t>(i) + 1)]);
  return v;
}

// Lower-triangular (in `order`) weights with random signs.
Eigen::MatrixXd random_dag(const std::vector<int>& order, double edge_prob, double w_min, double w_max, Rng& rng) {
  const auto d = static_cast<Eigen::Index>(order.size());
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(d, d);
  for (std::size_t later = 1; later < order.size(); ++later) {
    for (std::size_t earlier = 0; earlier < later; ++earlier) {
      const bool edge = rng.uniform() < edge_prob;
      const double w = rng.uniform(w_min, w_max) * (rng.uniform() < 0.5 ? -1.0 : 1.0);
      if (edge) B(order[earlier], order[later]) = w;
    }
  }
  return B;
}

void sample_sem(const Eigen::MatrixXd& B, const std::vector<int>& order, double noise, Rng& rng,
                Eigen::RowVectorXd& row) {
  for (int v : order) {
    double value = rng.uniform(-noise, noise);
    for (Eigen::Index p = 0; p < B.rows(); ++p)
      if (B(p, v) != 0.0) value += B(p, v) * row[p];
    row[v] = value;
  }
}

}  // namespace

void SynthConfig::validate() const {
  if (n_pumps < 1) throw ValidationError("n_pumps must be at least 1");
  if (n_states < 2) throw ValidationError("n_states must be at least 2");
  if (n_covariates != 0 && n_covariates != 1) throw ValidationError("n_covariates must be 0 or 1");
  if (static_cast<int>(beta.size()) != n_covariates) throw ValidationError("beta length must equal n_covariates");
  if (static_cast<int>(log_lambda0.size()) != n_states)
    throw ValidationError("log_lambda0 length must equal n_states");
  for (double v : log_lambda0)
    if (!std::isfinite(v)) throw ValidationError("log_lambda0 must be finite");
  for (double v : beta)
    if (!std::isfinite(v)) throw ValidationError("beta must be finite");
  if (!(sigma_u >= 0.0) || !std::isfinite(sigma_u)) throw ValidationError("sigma_u must be finite and >= 0");
  if (interval_min < 1 || interval_max < interval_min)
    throw ValidationError("inspection interval bounds must satisfy 1 <= min <= max");
  if (study_days <= interval_max) throw ValidationError("study length must exceed the maximum inspection interval");
  if (!(std::abs(ar_phi) < 1.0)) throw ValidationError("AR(1) coefficient must lie in (-1, 1)");
  if (!(ar_noise_sd >= 0.0)) throw ValidationError("AR(1) noise sd must be >= 0");
  if (lingam_samples < 1) throw ValidationError("lingam_samples must be at least 1");
  if (!(feature_noise > 0.0) || !(target_noise > 0.0)) throw ValidationError("SEM noise scales must be positive");
  if (!(feature_edge_prob >= 0.0 && feature_edge_prob <= 1.0))
    throw ValidationError("feature_edge_prob must lie in [0, 1]");
  if (!std::isfinite(null_effect_scale)) throw ValidationError("null_effect_scale must be finite");
  if (features.empty()) throw ValidationError("at least one feature is required");
  std::set<std::string> names;
  for (Feature f : features) names.emplace(feature_name(f));
  if (names.size() != features.size()) throw ValidationError("duplicate feature in synthetic feature list");
  for (const auto& [name, effect] : planted_effects) {
    if (!names.contains(name)) throw ValidationError("planted effect references unknown feature " + name);
    if (!std::isfinite(effect)) throw ValidationError("planted effect for " + name + " is not finite");
  }
}

HazardSynth generate_hazard_data(const SynthConfig& config) {
  config.validate();
  const int n = config.n_pumps;
  const int K = config.n_states;
  HazardSynth out;
  auto& truth = out.truth;
  truth.covariate_level = config.covariate_level;
  truth.params.log_lambda0 = Eigen::Map<const Eigen::VectorXd>(config.log_lambda0.data(), K);
  truth.params.beta = Eigen::Map<const Eigen::VectorXd>(config.beta.data(), config.n_covariates);
  truth.params.sigma_u = config.sigma_u;
  truth.params.u_raw.resize(n);

  Rng u_rng(config.seed, 0);
  for (int i = 0; i < n; ++i) {
    const double z = u_rng.normal();
    truth.pump_ids.push_back(make_id('P', i + 1, n));
    truth.u.push_back(config.sigma_u * z);
    truth.params.u_raw[i] = config.sigma_u > 0.0 ? z : truth.u.back();
  }

  const double stationary_sd = config.ar_noise_sd / std::sqrt(1.0 - config.ar_phi * config.ar_phi);
  for (int i = 0; i < n; ++i) {
    Rng rng(config.seed, static_cast<std::uint64_t>(i) + 1);
    const std::string& id = truth.pump_ids[static_cast<std::size_t>(i)];

    CovariateSeries series{id, 0, {}};
    if (config.n_covariates > 0) {
      series.values.resize(static_cast<std::size_t>(config.study_days) + 1);
      double x = config.covariate_level + stationary_sd * rng.normal();
      for (auto& v : series.values) {
        v = x;
        x = config.covariate_level + config.ar_phi * (x - config.covariate_level) + config.ar_noise_sd * rng.normal();
      }
    }

    long day = 0;
    int state = 1;
    out.records.push_back({id, day, HealthState(state, K)});
    for (;;) {
      const long gap = config.interval_min +
                       static_cast<long>(rng.uniform_index(static_cast<std::uint64_t>(config.interval_max - config.interval_min + 1)));
      if (day + gap > config.study_days) break;
      if (state < K) {
        double eta = config.log_lambda0[static_cast<std::size_t>(state - 1)] + truth.u[static_cast<std::size_t>(i)];
        if (config.n_covariates > 0) eta += config.beta[0] * (series.mean_over(day, day + gap) - config.covariate_level);
        const double p = transition_prob(std::exp(eta), static_cast<double>(gap));
        if (rng.uniform() < p) ++state;
      }
      day += gap;
      out.records.push_back({id, day, HealthState(state, K)});
    }
    if (config.n_covariates > 0) out.series.push_back(std::move(series));
  }

  auto built = build_transitions(out.records, out.series, K);
  for (auto& obs : built.dataset.observations)
    for (double& x : obs.x) x -= config.covariate_level;
  out.dataset = std::move(built.dataset);
  return out;
}

LingamScenario generate_lingam_scenario(const SynthConfig& config) {
  config.validate();
  const auto d = static_cast<int>(config.features.size());
  const int m = config.lingam_samples;

  LingamScenario out;
  auto& truth = out.truth;
  for (Feature f : config.features) truth.feature_names.emplace_back(feature_name(f));

  Rng structure_rng(config.seed, 0x5E3);
  const auto order = shuffled(d, structure_rng);
  truth.feature_adjacency = random_dag(order, config.feature_edge_prob, 0.3, 0.8, structure_rng);

  std::map<std::string, double> null_effects;
  for (const auto& [name, effect] : config.planted_effects) null_effects[name] = effect * config.null_effect_scale;
  const bool positive_planted = config.planted_group == Group::positive;
  truth.positive_effects = positive_planted ? config.planted_effects : null_effects;
  truth.negative_effects = positive_planted ? null_effects : config.planted_effects;

  out.features.names = truth.feature_names;
  out.features.values.resize(2 * m, d);
  out.u.resize(2 * m);
  for (int g = 0; g < 2; ++g) {
    const Group group = g == 0 ? Group::positive : Group::negative;
    const auto& effects = g == 0 ? truth.positive_effects : truth.negative_effects;
    Eigen::VectorXd w = Eigen::VectorXd::Zero(d);
    for (int j = 0; j < d; ++j) {
      const auto it = effects.find(truth.feature_names[static_cast<std::size_t>(j)]);
      if (it != effects.end()) w[j] = it->second;
    }

    Rng rng(config.seed, 0x11A0 + static_cast<std::uint64_t>(g));
    const int base = g * m;
    Eigen::RowVectorXd row(d);
    for (int r = 0; r < m; ++r) {
      sample_sem(truth.feature_adjacency, order, config.feature_noise, rng, row);
      out.features.values.row(base + r) = row;
      out.u[base + r] = row.dot(w) + rng.uniform(-config.target_noise, config.target_noise);
    }
    auto block = out.u.segment(base, m);
    const double shift = group == Group::positive ? 0.05 - block.minCoeff() : -0.05 - block.maxCoeff();
    block.array() += shift;
    for (int r = 0; r < m; ++r) {
      out.features.pump_ids.push_back(make_id('S', base + r + 1, 2 * m));
      out.groups.push_back(group);
    }
  }
  return out;
}

RandomSem generate_random_sem(int d, int n, std::uint64_t seed, double edge_prob, double w_min, double w_max) {
  if (d < 1 || n < 1) throw ValidationError("random SEM needs d >= 1 and n >= 1");
  RandomSem sem;
  Rng structure_rng(seed, 0);
  sem.order = shuffled(d, structure_rng);
  sem.adjacency = random_dag(sem.order, edge_prob, w_min, w_max, structure_rng);
  sem.data.resize(n, d);
  Rng noise_rng(seed, 1);
  Eigen::RowVectorXd row(d);
  for (int r = 0; r < n; ++r) {
    sample_sem(sem.adjacency, sem.order, 1.0, noise_rng, row);
    sem.data.row(r) = row;
  }
  return sem;
}

void write_ground_truth(std::ostream& out, const SynthConfig& config, const HazardTruth& truth) {
  nlohmann::ordered_json j;
  j["scenario"] = "hazard";
  j["seed"] = config.seed;
  j["n_pumps"] = config.n_pumps;
  j["n_states"] = config.n_states;
  j["sigma_u"] = truth.params.sigma_u;
  j["log_lambda0"] = std::vector<double>(truth.params.log_lambda0.begin(), truth.params.log_lambda0.end());
  j["beta"] = std::vector<double>(truth.params.beta.begin(), truth.params.beta.end());
  j["covariate"] = {{"level", config.covariate_level}, {"ar_phi", config.ar_phi}, {"noise_sd", config.ar_noise_sd}};
  auto pumps = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < truth.u.size(); ++i) pumps.push_back({{"pump_id", truth.pump_ids[i]}, {"u", truth.u[i]}});
  j["pumps"] = std::move(pumps);
  out << j.dump(2) << '\n';
}

void write_ground_truth(std::ostream& out, const SynthConfig& config, const LingamTruth& truth) {
  nlohmann::ordered_json j;
  j["scenario"] = "lingam";
  j["seed"] = config.seed;
  j["samples_per_group"] = config.lingam_samples;
  j["planted_group"] = std::string(group_name(config.planted_group));
  j["effects"] = {{"positive", truth.positive_effects}, {"negative", truth.negative_effects}};
  auto edges = nlohmann::ordered_json::array();
  for (Eigen::Index from = 0; from < truth.feature_adjacency.rows(); ++from)
    for (Eigen::Index to = 0; to < truth.feature_adjacency.cols(); ++to)
      if (truth.feature_adjacency(from, to) != 0.0)
        edges.push_back({{"from", truth.feature_names[static_cast<std::size_t>(from)]},
                         {"to", truth.feature_names[static_cast<std::size_t>(to)]},
                         {"weight", truth.feature_adjacency(from, to)}});
  j["feature_edges"] = std::move(edges);
  out << j.dump(2) << '\n';
}

}  // namespace pumpcause
