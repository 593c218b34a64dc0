#ifndef PUMPCAUSE_PIPELINE_HPP
#define PUMPCAUSE_PIPELINE_HPP

#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "pumpcause/features.hpp"
#include "pumpcause/hazard_model.hpp"
#include "pumpcause/lingam.hpp"
#include "pumpcause/nuts.hpp"
#include "pumpcause/synth.hpp"

namespace pumpcause {

enum class Scenario { hazard, lingam };

/**
 * Every setting of a run. Loaded from an INI file whose sections are
 * [pipeline], [data], [synth], [sampler], [hazard], [features], [lingam] and
 * [report]; see README.md for the keys and their defaults.
 */
struct PipelineConfig {
  // [pipeline]
  std::uint64_t seed = 0;
  int threads = 0;  // 0 = all hardware threads
  std::filesystem::path out_dir = "results";
  bool use_cache = true;

  // [data]; empty paths fall back to upstream stage outputs
  std::filesystem::path inspections;
  std::filesystem::path timeseries;
  std::filesystem::path features_csv;
  std::filesystem::path u_estimates;
  int n_states = kDefaultStates;

  // [synth]
  Scenario scenario = Scenario::hazard;
  SynthConfig synth;

  // [sampler]
  SamplerConfig sampler;

  // [hazard]
  PriorSpec prior;
  bool use_covariates = true;
  bool center_covariates = true;

  // [features]
  FeatureSettings features;
  std::optional<long> window_end;  // default: last day shared by every series

  // [lingam]
  LingamSettings lingam;
  int top_k = 10;

  // [report]
  double rhat_threshold = 1.01;
  double min_ess = 400.0;
  int histogram_bins = 20;
  bool svg = false;

  /// Parses INI text over the defaults. Unknown sections or keys are errors.
  static PipelineConfig parse(std::istream& in, const std::string& name);
  static PipelineConfig load(const std::filesystem::path& path);

  /// Copies seed and threads into the per-stage settings. Call after edits.
  void propagate();
  void validate() const;

  /// Canonical INI text of one section, or of the whole config when empty.
  std::string to_ini(std::string_view section = {}) const;

  bool synthetic() const { return inspections.empty() && features_csv.empty() && u_estimates.empty(); }
};

/// Output locations under out_dir.
struct RunLayout {
  std::filesystem::path root;

  std::filesystem::path synth_dir() const { return root / "synth"; }
  std::filesystem::path fit_dir() const { return root / "fit"; }
  std::filesystem::path features_dir() const { return root / "features"; }
  std::filesystem::path group_dir() const { return root / "group"; }
  std::filesystem::path discover_dir() const { return root / "discover"; }
  std::filesystem::path report_dir() const { return root / "report"; }
  std::filesystem::path cache_dir() const { return root / ".cache"; }
};

/// Failure inside a named stage. validation() is true for bad input or config.
class StageError : public std::runtime_error {
public:
  StageError(std::string stage, const std::string& message, bool validation);
  const std::string& stage() const { return stage_; }
  bool validation() const { return validation_; }

private:
  std::string stage_;
  bool validation_;
};

struct StageOutcome {
  std::string stage;
  std::vector<std::string> warnings;  // diagnostic flags; lead to exit status 3
  std::vector<std::string> notes;     // informational only
  std::vector<std::filesystem::path> outputs;
  bool cached = false;
};

StageOutcome cmd_synth(const PipelineConfig& config);
StageOutcome cmd_fit(const PipelineConfig& config);
StageOutcome cmd_features(const PipelineConfig& config);
StageOutcome cmd_group(const PipelineConfig& config);
/// Runs discovery on every group, then cmd_report.
StageOutcome cmd_discover(const PipelineConfig& config);
StageOutcome cmd_report(const PipelineConfig& config);
/// synth-or-ingest, fit, features, group, discover, report; stages whose
/// inputs and settings are unchanged are restored from the cache.
std::vector<StageOutcome> cmd_pipeline(const PipelineConfig& config);

/// Larger over smaller of two max |effect| values (>= 1). Infinity when only
/// the smaller is zero; NaN when both are.
double effect_gap_ratio(double max_abs_a, double max_abs_b);

/// Exit status for a finished run: 0, or 3 when any stage raised a warning.
int exit_status(const std::vector<StageOutcome>& outcomes);

/// Merges one stage duration into <out_dir>/timings.json.
void record_timing(const std::filesystem::path& out_dir, const std::string& stage, double seconds);

}  // namespace pumpcause

#endif  // PUMPCAUSE_PIPELINE_HPP
