#ifndef PUMPCAUSE_SYNTH_HPP
#define PUMPCAUSE_SYNTH_HPP

#include <cstdint>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pumpcause/data.hpp"
#include "pumpcause/features.hpp"
#include "pumpcause/grouping.hpp"
#include "pumpcause/hazard_model.hpp"

namespace pumpcause {

/**
 * Settings for both synthetic scenarios.
 *
 * Hazard scenario: pump i has u_i ~ Normal(0, sigma_u^2) and a daily
 * covariate following an AR(1) around covariate_level. Inspections start on
 * day 0 in state 1 and follow at uniform integer gaps in
 * [interval_min, interval_max] while they fit in study_days. Over each
 * interval the pump moves up one state with probability 1 - exp(-lambda dt),
 * lambda = exp(log_lambda0[k] + beta * (xbar - covariate_level) + u_i),
 * with xbar the covariate mean over the interval.
 *
 * LiNGAM scenario: two groups of lingam_samples rows each. The active
 * features follow one random lower-triangular SEM with Uniform noise on
 * [-feature_noise, feature_noise]; u = sum_j effect_j * feature_j + noise
 * (half-width target_noise), shifted by a constant so every u in the
 * positive group is > 0 and every u in the negative group is <= 0. The
 * planted group uses planted_effects; the other uses them scaled by
 * null_effect_scale.
 */
struct SynthConfig {
  int n_pumps = 30;
  int n_states = kDefaultStates;
  int n_covariates = 1;  // 0 or 1
  double sigma_u = 1.0;
  std::vector<double> log_lambda0 = std::vector<double>(kDefaultStates, -4.0);
  std::vector<double> beta = {0.5};
  long study_days = 650;
  long interval_min = 30;
  long interval_max = 150;
  double ar_phi = 0.9;
  double ar_noise_sd = 0.5;
  double covariate_level = 5.0;

  int lingam_samples = 2000;  // per group
  std::map<std::string, double> planted_effects = {{"std", 1.5}};
  Group planted_group = Group::negative;
  double null_effect_scale = 0.0;
  double feature_noise = 2.0;
  double target_noise = 0.5;
  double feature_edge_prob = 0.15;
  std::vector<Feature> features = default_active_features();

  std::uint64_t seed = 0;

  void validate() const;
};

struct HazardTruth {
  std::vector<std::string> pump_ids;
  std::vector<double> u;
  ModelParams params;  // u_raw = u / sigma_u (u itself when sigma_u == 0)
  double covariate_level = 0.0;
};

struct HazardSynth {
  /// Transitions with covariates centred at covariate_level, so
  /// truth.params applies to it directly.
  Dataset dataset;
  std::vector<InspectionRecord> records;
  std::vector<CovariateSeries> series;
  HazardTruth truth;
};

HazardSynth generate_hazard_data(const SynthConfig& config);

struct LingamTruth {
  std::vector<std::string> feature_names;
  Eigen::MatrixXd feature_adjacency;  // (from, to) among features
  std::map<std::string, double> positive_effects;
  std::map<std::string, double> negative_effects;
};

struct LingamScenario {
  FeatureMatrix features;  // both groups, rows sorted by pump id
  Eigen::VectorXd u;
  std::vector<Group> groups;  // generating group per row
  LingamTruth truth;
};

LingamScenario generate_lingam_scenario(const SynthConfig& config);

/// A random linear SEM with uniform noise on [-1, 1].
struct RandomSem {
  Eigen::MatrixXd data;       // n x d
  Eigen::MatrixXd adjacency;  // (from, to)
  std::vector<int> order;     // order[position] = variable
};

/**
 * d variables in a random order; each pair (earlier, later) is an edge with
 * probability edge_prob and weight +-Uniform[w_min, w_max].
 */
RandomSem generate_random_sem(int d, int n, std::uint64_t seed, double edge_prob = 0.5, double w_min = 0.5,
                              double w_max = 1.5);

void write_ground_truth(std::ostream& out, const SynthConfig& config, const HazardTruth& truth);
void write_ground_truth(std::ostream& out, const SynthConfig& config, const LingamTruth& truth);

}  // namespace pumpcause

#endif  // PUMPCAUSE_SYNTH_HPP
