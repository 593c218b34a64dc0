#include "pumpcause/random_effects.hpp"

#include <algorithm>
#include <cmath>

#include "pumpcause/diagnostics.hpp"
#include "pumpcause/errors.hpp"
#include "pumpcause/io.hpp"

namespace pumpcause {

std::vector<RandomEffectEstimate> extract_random_effects(const PosteriorSamples& samples, const ParamLayout& layout) {
  if (samples.dim != layout.dim()) throw ValidationError("parameter layout does not match posterior dimension");
  const std::size_t total = static_cast<std::size_t>(samples.n_chains) * static_cast<std::size_t>(samples.n_draws);
  std::vector<RandomEffectEstimate> out;
  out.reserve(static_cast<std::size_t>(layout.n_pumps));
  std::vector<double> u(total);
  for (int i = 0; i < layout.n_pumps; ++i) {
    std::size_t s = 0;
    double sum = 0.0;
    for (const auto& chain : samples.draws) {
      for (Eigen::Index t = 0; t < chain.rows(); ++t) {
        u[s] = chain(t, layout.u_raw(i)) * std::exp(chain(t, layout.log_sigma()));
        sum += u[s++];
      }
    }
    RandomEffectEstimate est;
    est.pump_index = i;
    est.u_mean = sum / static_cast<double>(total);
    std::tie(est.hdi_low, est.hdi_high) = hdi(u, 0.95);
    // Widen so the interval always contains the mean (strong skew can push it outside).
    est.hdi_low = std::min(est.hdi_low, est.u_mean);
    est.hdi_high = std::max(est.hdi_high, est.u_mean);
    out.push_back(est);
  }
  return out;
}

double posterior_mean_sigma_u(const PosteriorSamples& samples, const ParamLayout& layout) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& chain : samples.draws) {
    for (Eigen::Index t = 0; t < chain.rows(); ++t) {
      sum += std::exp(chain(t, layout.log_sigma()));
      ++count;
    }
  }
  return count > 0 ? sum / static_cast<double>(count) : 0.0;
}

void write_random_effects(std::ostream& out, const std::vector<RandomEffectEstimate>& estimates,
                          const std::vector<std::string>& pump_ids) {
  out << "pump_id,u_mean,hdi_low,hdi_high\n";
  for (const auto& e : estimates) {
    if (e.pump_index < 0 || e.pump_index >= static_cast<int>(pump_ids.size()))
      throw ValidationError("random effect estimate references unknown pump index");
    out << pump_ids[static_cast<std::size_t>(e.pump_index)] << ',' << io::format_double(e.u_mean) << ','
        << io::format_double(e.hdi_low) << ',' << io::format_double(e.hdi_high) << '\n';
  }
}

RandomEffectTable parse_random_effects(std::istream& in, const std::string& name) {
  io::LineReader reader(in, name);
  io::expect_header(reader, "pump_id,u_mean,hdi_low,hdi_high");
  RandomEffectTable table;
  std::string line;
  while (reader.next(line)) {
    if (io::trim(line).empty()) continue;
    const auto fields = io::split_csv(line);
    if (fields.size() != 4) throw ParseError(name, reader.line_number(), "expected 4 fields");
    if (fields[0].empty()) throw ParseError(name, reader.line_number(), "empty pump_id");
    RandomEffectEstimate e;
    e.pump_index = static_cast<int>(table.estimates.size());
    double* targets[] = {&e.u_mean, &e.hdi_low, &e.hdi_high};
    for (std::size_t f = 0; f < 3; ++f) {
      const auto v = io::parse_double(fields[f + 1]);
      if (!v || !std::isfinite(*v)) throw ParseError(name, reader.line_number(), "malformed number");
      *targets[f] = *v;
    }
    if (e.hdi_low > e.hdi_high) throw ParseError(name, reader.line_number(), "hdi_low exceeds hdi_high");
    table.pump_ids.emplace_back(fields[0]);
    table.estimates.push_back(e);
  }
  return table;
}

}  // namespace pumpcause
