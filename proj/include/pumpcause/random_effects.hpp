#ifndef PUMPCAUSE_RANDOM_EFFECTS_HPP
#define PUMPCAUSE_RANDOM_EFFECTS_HPP

#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "pumpcause/hazard_model.hpp"
#include "pumpcause/nuts.hpp"

namespace pumpcause {

struct RandomEffectEstimate {
  int pump_index = 0;
  double u_mean = 0.0;
  double hdi_low = 0.0;
  double hdi_high = 0.0;
};

/// Posterior mean and 95% HDI of u_i = u_raw_i * exp(zeta) over all chains and draws.
std::vector<RandomEffectEstimate> extract_random_effects(const PosteriorSamples& samples, const ParamLayout& layout);

/// Posterior mean of sigma_u = exp(zeta).
double posterior_mean_sigma_u(const PosteriorSamples& samples, const ParamLayout& layout);

/// Header `pump_id,u_mean,hdi_low,hdi_high`; pump_ids[e.pump_index] names each row.
void write_random_effects(std::ostream& out, const std::vector<RandomEffectEstimate>& estimates,
                          const std::vector<std::string>& pump_ids);

struct RandomEffectTable {
  std::vector<std::string> pump_ids;
  std::vector<RandomEffectEstimate> estimates;  // pump_index = row
};

RandomEffectTable parse_random_effects(std::istream& in, const std::string& name);

}  // namespace pumpcause

#endif  // PUMPCAUSE_RANDOM_EFFECTS_HPP
