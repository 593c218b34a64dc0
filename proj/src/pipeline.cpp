#include "pumpcause/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <nlohmann/json.hpp>

#include "pumpcause/data.hpp"
#include "pumpcause/errors.hpp"
#include "pumpcause/grouping.hpp"
#include "pumpcause/io.hpp"
#include "pumpcause/random_effects.hpp"

namespace pumpcause {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

// ---------------------------------------------------------------------------
// config value parsing

std::string where(std::string_view section, std::string_view key) {
  return "[" + std::string(section) + "] " + std::string(key);
}

double to_double(std::string_view section, std::string_view key, std::string_view value) {
  const auto v = io::parse_double(value);
  if (!v || !std::isfinite(*v)) throw ValidationError(where(section, key) + ": expected a number, got '" + std::string(value) + "'");
  return *v;
}

int to_int(std::string_view section, std::string_view key, std::string_view value) {
  const auto v = io::parse_int(value);
  if (!v || *v < std::numeric_limits<int>::min() || *v > std::numeric_limits<int>::max())
    throw ValidationError(where(section, key) + ": expected an integer, got '" + std::string(value) + "'");
  return static_cast<int>(*v);
}

std::uint64_t to_u64(std::string_view section, std::string_view key, std::string_view value) {
  const auto t = io::trim(value);
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc{} || ptr != t.data() + t.size() || t.empty())
    throw ValidationError(where(section, key) + ": expected an unsigned integer, got '" + std::string(value) + "'");
  return v;
}

bool to_bool(std::string_view section, std::string_view key, std::string_view value) {
  const auto t = io::trim(value);
  if (t == "true" || t == "yes" || t == "1") return true;
  if (t == "false" || t == "no" || t == "0") return false;
  throw ValidationError(where(section, key) + ": expected true or false, got '" + std::string(value) + "'");
}

std::vector<std::string_view> to_list(std::string_view value) {
  std::vector<std::string_view> out;
  for (auto item : io::split_csv(value))
    if (!item.empty()) out.push_back(item);
  return out;
}

std::vector<double> to_doubles(std::string_view section, std::string_view key, std::string_view value) {
  std::vector<double> out;
  for (auto item : to_list(value)) out.push_back(to_double(section, key, item));
  return out;
}

std::string join_doubles(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) out += (i ? "," : "") + io::format_double(values[i]);
  return out;
}

std::string_view bool_text(bool b) { return b ? "true" : "false"; }

// ---------------------------------------------------------------------------
// files

std::string read_required(const fs::path& path, std::string_view what) {
  if (!fs::exists(path)) throw ValidationError("missing " + std::string(what) + " file " + path.string());
  return io::read_file(path);
}

void write_text(const fs::path& path, const std::string& text, StageOutcome& outcome) {
  io::write_file(path, text);
  outcome.outputs.push_back(path);
}

template <typename Writer>
void write_with(const fs::path& path, StageOutcome& outcome, Writer&& writer) {
  std::ostringstream out;
  writer(out);
  write_text(path, out.str(), outcome);
}

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

fs::path inspections_path(const PipelineConfig& c) {
  return c.inspections.empty() ? RunLayout{c.out_dir}.synth_dir() / "inspections.csv" : c.inspections;
}
fs::path timeseries_path(const PipelineConfig& c) {
  return c.timeseries.empty() ? RunLayout{c.out_dir}.synth_dir() / "timeseries.csv" : c.timeseries;
}
bool lingam_only(const PipelineConfig& c) { return c.synthetic() && c.scenario == Scenario::lingam; }
fs::path u_estimates_path(const PipelineConfig& c) {
  if (!c.u_estimates.empty()) return c.u_estimates;
  const RunLayout layout{c.out_dir};
  return lingam_only(c) ? layout.synth_dir() / "u_estimates.csv" : layout.fit_dir() / "u_estimates.csv";
}
fs::path features_path(const PipelineConfig& c) {
  if (!c.features_csv.empty()) return c.features_csv;
  const RunLayout layout{c.out_dir};
  return lingam_only(c) ? layout.synth_dir() / "features.csv" : layout.features_dir() / "features.csv";
}

FeatureMatrix load_features(const PipelineConfig& c) {
  const auto path = features_path(c);
  std::istringstream in(read_required(path, "features"));
  return parse_features(in, path.string());
}

template <typename Body>
StageOutcome run_stage(const PipelineConfig& config, const std::string& name, Body&& body) {
  const auto start = std::chrono::steady_clock::now();
  StageOutcome outcome;
  try {
    outcome = body();
  } catch (const StageError&) {
    throw;
  } catch (const ValidationError& e) {
    throw StageError(name, e.what(), true);
  } catch (const std::exception& e) {
    throw StageError(name, e.what(), false);
  }
  outcome.stage = name;
  record_timing(config.out_dir, name,
                std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
  return outcome;
}

// ---------------------------------------------------------------------------
// stages

StageOutcome synth_stage(const PipelineConfig& config) {
  StageOutcome outcome;
  const auto dir = RunLayout{config.out_dir}.synth_dir();
  if (config.scenario == Scenario::hazard) {
    const auto gen = generate_hazard_data(config.synth);
    write_with(dir / "inspections.csv", outcome, [&](auto& o) { write_inspections(o, gen.records); });
    write_with(dir / "timeseries.csv", outcome, [&](auto& o) { write_timeseries(o, gen.series); });
    write_with(dir / "ground_truth.json", outcome, [&](auto& o) { write_ground_truth(o, config.synth, gen.truth); });
  } else {
    const auto scenario = generate_lingam_scenario(config.synth);
    std::vector<RandomEffectEstimate> estimates;
    for (Eigen::Index i = 0; i < scenario.u.size(); ++i)
      estimates.push_back({static_cast<int>(i), scenario.u[i], scenario.u[i], scenario.u[i]});
    write_with(dir / "features.csv", outcome, [&](auto& o) { write_features(o, scenario.features); });
    write_with(dir / "u_estimates.csv", outcome,
               [&](auto& o) { write_random_effects(o, estimates, scenario.features.pump_ids); });
    write_with(dir / "ground_truth.json", outcome,
               [&](auto& o) { write_ground_truth(o, config.synth, scenario.truth); });
  }
  return outcome;
}

StageOutcome fit_stage(const PipelineConfig& config) {
  StageOutcome outcome;
  const auto insp_path = inspections_path(config);
  std::istringstream insp_in(read_required(insp_path, "inspections"));
  const auto records = parse_inspections(insp_in, insp_path.string(), config.n_states);
  std::vector<CovariateSeries> series;
  if (config.use_covariates) {
    const auto ts_path = timeseries_path(config);
    std::istringstream ts_in(read_required(ts_path, "timeseries"));
    series = parse_timeseries(ts_in, ts_path.string());
  }

  auto build = build_transitions(records, series, config.n_states);
  Dataset& data = build.dataset;
  if (data.observations.empty()) throw ValidationError("no usable transition intervals in " + insp_path.string());
  std::vector<double> centers(static_cast<std::size_t>(data.n_covariates), 0.0);
  if (config.center_covariates && data.n_covariates > 0) {
    for (const auto& obs : data.observations)
      for (std::size_t j = 0; j < centers.size(); ++j) centers[j] += obs.x[j];
    for (double& c : centers) c /= static_cast<double>(data.observations.size());
    for (auto& obs : data.observations)
      for (std::size_t j = 0; j < centers.size(); ++j) obs.x[j] -= centers[j];
  }
  data.validate();

  const HazardModel model(data, config.prior);
  const auto samples =
      sample([&](const Eigen::VectorXd& q, Eigen::VectorXd& g) { return model.log_posterior_grad(q, g); },
             model.dim(), config.sampler);
  const auto& layout = model.layout();
  const auto estimates = extract_random_effects(samples, layout);
  const auto names = layout.names();

  const auto dir = RunLayout{config.out_dir}.fit_dir();
  write_with(dir / "transitions.csv", outcome, [&](auto& o) { write_transitions(o, data); });
  write_with(dir / "draws.csv", outcome, [&](auto& o) {
    o << "chain,draw";
    for (const auto& n : names) o << ',' << n;
    o << '\n';
    for (int c = 0; c < samples.n_chains; ++c) {
      const auto& draws = samples.draws[static_cast<std::size_t>(c)];
      for (Eigen::Index t = 0; t < draws.rows(); ++t) {
        o << c << ',' << t;
        for (Eigen::Index d = 0; d < draws.cols(); ++d) o << ',' << io::format_double(draws(t, d));
        o << '\n';
      }
    }
  });
  write_with(dir / "u_estimates.csv", outcome, [&](auto& o) { write_random_effects(o, estimates, data.pump_ids); });

  const double max_rhat = samples.max_rhat();
  const double min_ess = samples.min_ess();
  const int divergences = samples.total_divergences();
  json flags = json::array();
  if (!(max_rhat < config.rhat_threshold)) {
    flags.push_back("max R-hat " + io::format_double(max_rhat) + " >= " + io::format_double(config.rhat_threshold));
  }
  if (!(min_ess >= config.min_ess))
    flags.push_back("min ESS " + io::format_double(min_ess) + " < " + io::format_double(config.min_ess));
  if (divergences > 0) flags.push_back(std::to_string(divergences) + " post-warmup divergences");
  for (const auto& f : flags) outcome.warnings.push_back(f.get<std::string>());

  json diag;
  diag["seed"] = config.sampler.seed;
  diag["n_chains"] = samples.n_chains;
  diag["n_draws"] = samples.n_draws;
  diag["n_tune"] = config.sampler.n_tune;
  diag["target_accept"] = config.sampler.target_accept;
  diag["observations"] = data.observations.size();
  diag["intervals"] = build.intervals;
  diag["dropped_decreases"] = build.dropped_decreases;
  diag["dropped_absorbing"] = build.dropped_absorbing;
  diag["multi_step_jumps"] = build.multi_step_jumps;
  diag["covariate_centers"] = centers;
  diag["max_rhat"] = number(max_rhat);
  diag["min_ess"] = number(min_ess);
  diag["divergences"] = divergences;
  int warmup_divergences = 0;
  for (const auto& c : samples.chains) warmup_divergences += c.warmup_divergences;
  diag["warmup_divergences"] = warmup_divergences;
  diag["sigma_u_mean"] = number(posterior_mean_sigma_u(samples, layout));
  diag["flags"] = flags;
  json params = json::array();
  for (std::size_t d = 0; d < names.size(); ++d)
    params.push_back({{"name", names[d]},
                      {"rhat", number(samples.diagnostics[d].rhat)},
                      {"ess_bulk", number(samples.diagnostics[d].ess)}});
  diag["parameters"] = std::move(params);
  json chains = json::array();
  for (std::size_t c = 0; c < samples.chains.size(); ++c) {
    const auto& s = samples.chains[c];
    chains.push_back({{"chain", c},
                      {"divergences", s.divergences},
                      {"warmup_divergences", s.warmup_divergences},
                      {"step_size", number(s.step_size)},
                      {"mean_accept_stat", number(s.mean_accept_stat)},
                      {"mean_tree_depth", number(s.mean_tree_depth)},
                      {"leapfrog_steps", s.leapfrog_steps}});
  }
  diag["chains"] = std::move(chains);
  write_text(dir / "diagnostics.json", diag.dump(2) + "\n", outcome);
  return outcome;
}

StageOutcome features_stage(const PipelineConfig& config) {
  StageOutcome outcome;
  const auto ts_path = timeseries_path(config);
  std::istringstream in(read_required(ts_path, "timeseries"));
  const auto series = parse_timeseries(in, ts_path.string());
  if (series.empty()) throw ValidationError("timeseries file " + ts_path.string() + " has no pumps");
  const long end = config.window_end ? *config.window_end : common_last_day(series);
  const auto features = extract_features(series, end, config.features);
  outcome.notes.push_back("feature window ends on day " + std::to_string(end));
  write_with(RunLayout{config.out_dir}.features_dir() / "features.csv", outcome,
             [&](auto& o) { write_features(o, features); });
  return outcome;
}

void write_histogram(std::ostream& out, const std::vector<GroupAssignment>& assignments, int bins) {
  out << "bin_low,bin_high,positive,negative\n";
  if (assignments.empty()) return;
  double lo = assignments.front().u_mean, hi = lo;
  for (const auto& a : assignments) {
    lo = std::min(lo, a.u_mean);
    hi = std::max(hi, a.u_mean);
  }
  if (hi == lo) bins = 1;
  std::vector<int> pos(static_cast<std::size_t>(bins), 0), neg(static_cast<std::size_t>(bins), 0);
  const double width = (hi - lo) / bins;
  for (const auto& a : assignments) {
    int b = width > 0.0 ? static_cast<int>((a.u_mean - lo) / width) : 0;
    b = std::clamp(b, 0, bins - 1);
    (a.group == Group::positive ? pos : neg)[static_cast<std::size_t>(b)]++;
  }
  for (int b = 0; b < bins; ++b) {
    const double edge_hi = b + 1 == bins ? hi : lo + width * (b + 1);
    out << io::format_double(lo + width * b) << ',' << io::format_double(edge_hi) << ','
        << pos[static_cast<std::size_t>(b)] << ',' << neg[static_cast<std::size_t>(b)] << '\n';
  }
}

StageOutcome group_stage(const PipelineConfig& config) {
  StageOutcome outcome;
  const auto u_path = u_estimates_path(config);
  std::istringstream in(read_required(u_path, "u-estimates"));
  const auto table = parse_random_effects(in, u_path.string());
  const auto features = load_features(config);
  const auto assignments = assign_groups(table.estimates, table.pump_ids);
  const auto split = build_group_datasets(features, assignments);
  for (const auto& s : split.summaries)
    if (!s.warning.empty()) outcome.notes.push_back(std::string(group_name(s.group)) + ": " + s.warning);
  const auto dir = RunLayout{config.out_dir}.group_dir();
  write_with(dir / "groups.csv", outcome, [&](auto& o) { write_groups(o, assignments); });
  write_with(dir / "u_histogram.csv", outcome, [&](auto& o) { write_histogram(o, assignments, config.histogram_bins); });
  return outcome;
}

StageOutcome discover_groups(const PipelineConfig& config) {
  StageOutcome outcome;
  const RunLayout layout{config.out_dir};
  const auto groups_file = layout.group_dir() / "groups.csv";
  std::istringstream in(read_required(groups_file, "groups"));
  const auto assignments = parse_groups(in, groups_file.string());
  const auto features = load_features(config);
  const auto split = build_group_datasets(features, assignments);

  for (const GroupDataset* ds : {&split.positive, &split.negative}) {
    const std::string name(group_name(ds->group));
    const auto dir = layout.discover_dir() / name;
    fs::remove_all(dir);
    json status;
    status["group"] = name;
    status["samples"] = ds->members();

    std::optional<CausalModel> model;
    std::string reason;
    if (!ds->sufficient_for_discovery()) {
      reason = "insufficient samples: " + std::to_string(ds->members()) + " members, need " +
               std::to_string(ds->feature_names.size() + 2);
    } else {
      try {
        model = discover(*ds, config.lingam);
      } catch (const ValidationError& e) {
        reason = e.what();
      }
    }
    if (!model) {
      status["status"] = "skipped";
      status["reason"] = reason;
      outcome.notes.push_back(name + " group skipped: " + reason);
      write_text(dir / "model.json", status.dump(2) + "\n", outcome);
      continue;
    }

    status["status"] = "ran";
    status["variables"] = model->variables;
    json order = json::array();
    for (int v : model->order) order.push_back(model->variables[static_cast<std::size_t>(v)]);
    status["order"] = std::move(order);
    status["dropped_columns"] = model->dropped_columns;
    status["ica_converged"] = model->ica_converged;
    status["bootstrap"] = {{"resamples", model->bootstrap.resamples},
                           {"unconverged", model->bootstrap.unconverged},
                           {"failed", model->bootstrap.failed}};
    status["warnings"] = model->warnings;
    for (const auto& w : model->warnings) outcome.warnings.push_back(name + ": " + w);
    for (const auto& note : model->notes) outcome.notes.push_back(name + ": " + note);

    write_with(dir / "adjacency.csv", outcome, [&](auto& o) { write_adjacency_csv(o, *model); });
    write_with(dir / "order.json", outcome, [&](auto& o) { write_order_json(o, *model); });
    write_with(dir / "effects.csv", outcome, [&](auto& o) { write_effects_csv(o, *model); });
    write_with(dir / "standardization.csv", outcome, [&](auto& o) { write_standardization_csv(o, *model); });
    write_with(dir / "top_effects.csv", outcome, [&](auto& o) {
      o << "rank,feature,effect_raw,ci_low_raw,ci_high_raw,sign_stability\n";
      const auto k = std::min<std::size_t>(static_cast<std::size_t>(config.top_k), model->effects_to_target.size());
      for (std::size_t r = 0; r < k; ++r) {
        const auto& e = model->effects_to_target[r];
        o << r + 1 << ',' << e.feature << ',' << io::format_double(e.effect_raw) << ','
          << io::format_double(e.ci_low_raw) << ',' << io::format_double(e.ci_high_raw) << ','
          << io::format_double(e.sign_stability) << '\n';
      }
    });
    write_text(dir / "model.json", status.dump(2) + "\n", outcome);
  }
  return outcome;
}

// ---------------------------------------------------------------------------
// report

struct EffectRow {
  std::string feature;
  double effect = 0.0, ci_low = 0.0, ci_high = 0.0, sign_stability = 0.0;
};

std::vector<EffectRow> read_effects(const fs::path& path) {
  std::istringstream in(read_required(path, "effects"));
  io::LineReader reader(in, path.string());
  io::expect_header(reader, "feature,effect_raw,ci_low_raw,ci_high_raw,effect,ci_low,ci_high,sign_stability");
  std::vector<EffectRow> rows;
  std::string line;
  while (reader.next(line)) {
    if (io::trim(line).empty()) continue;
    const auto f = io::split_csv(line);
    if (f.size() != 8) throw ParseError(path.string(), reader.line_number(), "expected 8 fields");
    auto num = [&](std::size_t i) {
      const auto v = io::parse_double(f[i]);
      if (!v) throw ParseError(path.string(), reader.line_number(), "malformed number");
      return *v;
    };
    rows.push_back({std::string(f[0]), num(1), num(2), num(3), num(7)});
  }
  return rows;
}

struct HistogramRow {
  double lo, hi;
  int pos, neg;
};

std::vector<HistogramRow> read_histogram(const fs::path& path) {
  std::vector<HistogramRow> rows;
  if (!fs::exists(path)) return rows;
  std::istringstream in(io::read_file(path));
  io::LineReader reader(in, path.string());
  io::expect_header(reader, "bin_low,bin_high,positive,negative");
  std::string line;
  while (reader.next(line)) {
    const auto f = io::split_csv(line);
    if (f.size() != 4) continue;
    rows.push_back({io::parse_double(f[0]).value_or(0.0), io::parse_double(f[1]).value_or(0.0),
                    static_cast<int>(io::parse_int(f[2]).value_or(0)),
                    static_cast<int>(io::parse_int(f[3]).value_or(0))});
  }
  return rows;
}

std::string svg_text(double x, double y, const std::string& text, const char* anchor = "start", int size = 11) {
  std::ostringstream o;
  o << "<text x=\"" << x << "\" y=\"" << y << "\" font-size=\"" << size << "\" text-anchor=\"" << anchor
    << "\" font-family=\"sans-serif\">" << text << "</text>\n";
  return o.str();
}

std::string histogram_svg(const std::vector<HistogramRow>& rows) {
  const double W = 640, H = 360, left = 50, right = 20, top = 30, bottom = 40;
  int max_count = 1;
  for (const auto& r : rows) max_count = std::max(max_count, r.pos + r.neg);
  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  o << svg_text(W / 2, 18, "Posterior mean random effects by group", "middle", 13);
  const double plot_w = W - left - right, plot_h = H - top - bottom;
  const double bar_w = rows.empty() ? 0.0 : plot_w / static_cast<double>(rows.size());
  for (std::size_t b = 0; b < rows.size(); ++b) {
    const double x = left + bar_w * static_cast<double>(b);
    const double h_neg = plot_h * rows[b].neg / max_count;
    const double h_pos = plot_h * rows[b].pos / max_count;
    o << "<rect x=\"" << x << "\" y=\"" << top + plot_h - h_neg << "\" width=\"" << bar_w * 0.95 << "\" height=\""
      << h_neg << "\" fill=\"#1b9e77\"/>\n";
    o << "<rect x=\"" << x << "\" y=\"" << top + plot_h - h_neg - h_pos << "\" width=\"" << bar_w * 0.95
      << "\" height=\"" << h_pos << "\" fill=\"#d95f02\"/>\n";
  }
  o << "<line x1=\"" << left << "\" y1=\"" << top + plot_h << "\" x2=\"" << W - right << "\" y2=\"" << top + plot_h
    << "\" stroke=\"black\"/>\n";
  if (!rows.empty()) {
    o << svg_text(left, H - 20, io::format_double(rows.front().lo), "start");
    o << svg_text(W - right, H - 20, io::format_double(rows.back().hi), "end");
  }
  o << svg_text(W / 2, H - 8, "u (positive: orange, negative: green)", "middle");
  o << svg_text(left - 5, top + 10, std::to_string(max_count), "end");
  o << "</svg>\n";
  return o.str();
}

std::string effects_svg(const std::vector<std::pair<std::string, std::vector<EffectRow>>>& panels) {
  const double W = 640, label_w = 180, right = 30, row_h = 20, panel_gap = 40;
  double extent = 0.0;
  std::size_t total_rows = 0;
  for (const auto& [name, rows] : panels) {
    total_rows += rows.size();
    for (const auto& r : rows) extent = std::max({extent, std::abs(r.ci_low), std::abs(r.ci_high), std::abs(r.effect)});
  }
  if (extent == 0.0) extent = 1.0;
  const double H = 30 + panel_gap * static_cast<double>(panels.size()) + row_h * static_cast<double>(total_rows);
  const double plot_w = W - label_w - right;
  auto sx = [&](double v) { return label_w + plot_w * (v + extent) / (2.0 * extent); };
  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  o << svg_text(W / 2, 18, "Top effects on u with 95% bootstrap intervals", "middle", 13);
  double y = 30;
  for (const auto& [name, rows] : panels) {
    o << svg_text(10, y + 16, name + " group", "start", 12);
    y += panel_gap - row_h / 2;
    o << "<line x1=\"" << sx(0) << "\" y1=\"" << y << "\" x2=\"" << sx(0) << "\" y2=\""
      << y + row_h * static_cast<double>(rows.size()) << "\" stroke=\"#999\" stroke-dasharray=\"3,3\"/>\n";
    for (const auto& r : rows) {
      const double cy = y + row_h / 2;
      o << svg_text(label_w - 8, cy + 4, r.feature, "end");
      o << "<line x1=\"" << sx(r.ci_low) << "\" y1=\"" << cy << "\" x2=\"" << sx(r.ci_high) << "\" y2=\"" << cy
        << "\" stroke=\"black\"/>\n";
      o << "<circle cx=\"" << sx(r.effect) << "\" cy=\"" << cy << "\" r=\"3.5\" fill=\"#7570b3\"/>\n";
      y += row_h;
    }
  }
  o << svg_text(sx(-extent), H - 4, io::format_double(-extent), "start");
  o << svg_text(sx(extent), H - 4, io::format_double(extent), "end");
  o << "</svg>\n";
  return o.str();
}

StageOutcome report_stage(const PipelineConfig& config) {
  StageOutcome outcome;
  const RunLayout layout{config.out_dir};
  json report;
  report["seed"] = config.seed;

  const auto diag_path = layout.fit_dir() / "diagnostics.json";
  if (fs::exists(diag_path) && !lingam_only(config) && config.u_estimates.empty()) {
    json diag;
    try {
      diag = json::parse(io::read_file(diag_path));
    } catch (const json::exception& e) {
      throw ValidationError("cannot parse " + diag_path.string() + ": " + e.what());
    }
    json sampler;
    for (const char* key : {"max_rhat", "min_ess", "divergences", "warmup_divergences", "sigma_u_mean", "flags"})
      sampler[key] = diag.value(key, json(nullptr));
    sampler["rhat_threshold"] = config.rhat_threshold;
    sampler["min_ess_threshold"] = config.min_ess;
    report["sampler"] = std::move(sampler);
  } else {
    report["sampler"] = nullptr;
  }

  const auto groups_file = layout.group_dir() / "groups.csv";
  std::istringstream in(read_required(groups_file, "groups"));
  const auto assignments = parse_groups(in, groups_file.string());
  report["total_pumps"] = assignments.size();
  json groups = json::array();
  for (Group g : {Group::positive, Group::negative}) {
    int count = 0;
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& a : assignments) {
      if (a.group != g) continue;
      ++count;
      lo = std::min(lo, a.u_mean);
      hi = std::max(hi, a.u_mean);
    }
    const double share = assignments.empty() ? 0.0 : static_cast<double>(count) / static_cast<double>(assignments.size());
    groups.push_back({{"group", std::string(group_name(g))},
                      {"count", count},
                      {"share", share},
                      {"u_min", count ? json(lo) : json(nullptr)},
                      {"u_max", count ? json(hi) : json(nullptr)}});
  }
  report["groups"] = std::move(groups);

  json discovery = json::array();
  std::map<std::string, double> max_abs;
  std::vector<std::pair<std::string, std::vector<EffectRow>>> panels;
  for (Group g : {Group::positive, Group::negative}) {
    const std::string name(group_name(g));
    const auto dir = layout.discover_dir() / name;
    json entry;
    entry["group"] = name;
    if (!fs::exists(dir / "model.json")) {
      entry["status"] = "not_run";
      discovery.push_back(std::move(entry));
      continue;
    }
    json model;
    try {
      model = json::parse(io::read_file(dir / "model.json"));
    } catch (const json::exception& e) {
      throw ValidationError("cannot parse " + (dir / "model.json").string() + ": " + e.what());
    }
    entry["status"] = model.value("status", "unknown");
    entry["samples"] = model.value("samples", 0);
    if (entry["status"] != "ran") {
      entry["reason"] = model.value("reason", "");
      discovery.push_back(std::move(entry));
      continue;
    }
    entry["warnings"] = model.value("warnings", json::array());
    auto rows = read_effects(dir / "effects.csv");
    double group_max = 0.0;
    bool all_contain_zero = true;
    for (const auto& r : rows) {
      group_max = std::max(group_max, std::abs(r.effect));
      all_contain_zero = all_contain_zero && r.ci_low <= 0.0 && 0.0 <= r.ci_high;
    }
    max_abs[name] = group_max;
    entry["max_abs_effect"] = group_max;
    entry["all_cis_contain_zero"] = all_contain_zero;
    json top = json::array();
    const auto k = std::min<std::size_t>(static_cast<std::size_t>(config.top_k), rows.size());
    rows.resize(k);
    for (std::size_t r = 0; r < k; ++r) {
      const auto& e = rows[r];
      top.push_back({{"rank", r + 1},
                     {"feature", e.feature},
                     {"effect", e.effect},
                     {"ci_low", e.ci_low},
                     {"ci_high", e.ci_high},
                     {"ci_excludes_zero", e.ci_low > 0.0 || e.ci_high < 0.0},
                     {"sign_stability", e.sign_stability}});
    }
    entry["top_effects"] = std::move(top);
    panels.emplace_back(name, std::move(rows));
    discovery.push_back(std::move(entry));
  }
  report["effect_units"] = "change in u per unit change of the feature (de-standardized)";
  report["discovery"] = std::move(discovery);

  if (max_abs.size() == 2) {
    const double a = max_abs["positive"], b = max_abs["negative"];
    const double ratio = effect_gap_ratio(a, b);
    report["gap_ratio"] = number(ratio);
    report["gap_ratio_larger_group"] = a >= b ? "positive" : "negative";
    if (std::isinf(ratio)) report["gap_ratio_note"] = "the smaller group has no nonzero effect on u; ratio is infinite";
    if (std::isnan(ratio)) report["gap_ratio_note"] = "neither group has a nonzero effect on u";
  } else {
    report["gap_ratio"] = nullptr;
    report["gap_ratio_note"] = "defined only when discovery ran in both groups";
  }

  write_text(config.out_dir / "run_report.json", report.dump(2) + "\n", outcome);
  if (config.svg) {
    write_text(layout.report_dir() / "u_histogram.svg",
               histogram_svg(read_histogram(layout.group_dir() / "u_histogram.csv")), outcome);
    write_text(layout.report_dir() / "top_effects.svg", effects_svg(panels), outcome);
  }
  return outcome;
}

// ---------------------------------------------------------------------------
// cache

std::string file_digest(const fs::path& path) {
  if (!fs::exists(path)) return "missing";
  return io::hex64(io::fnv1a(io::read_file(path)));
}

std::string stage_key(const std::string& stage, const std::string& settings, const std::vector<fs::path>& inputs) {
  std::string material = stage + "\n" + settings;
  for (const auto& p : inputs) material += "\n" + p.generic_string() + "=" + file_digest(p);
  return io::hex64(io::fnv1a(material));
}

std::optional<StageOutcome> load_cached(const fs::path& manifest, const std::string& key, const fs::path& root) {
  if (!fs::exists(manifest)) return std::nullopt;
  try {
    const auto j = json::parse(io::read_file(manifest));
    if (j.at("key").get<std::string>() != key) return std::nullopt;
    StageOutcome outcome;
    for (const auto& o : j.at("outputs")) {
      const fs::path path = root / o.at("path").get<std::string>();
      if (file_digest(path) != o.at("hash").get<std::string>()) return std::nullopt;
      outcome.outputs.push_back(path);
    }
    outcome.warnings = j.at("warnings").get<std::vector<std::string>>();
    outcome.notes = j.at("notes").get<std::vector<std::string>>();
    outcome.cached = true;
    return outcome;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

void store_manifest(const fs::path& manifest, const std::string& key, const fs::path& root, const StageOutcome& o) {
  json j;
  j["key"] = key;
  json outputs = json::array();
  for (const auto& p : o.outputs)
    outputs.push_back({{"path", fs::relative(p, root).generic_string()}, {"hash", file_digest(p)}});
  j["outputs"] = std::move(outputs);
  j["warnings"] = o.warnings;
  j["notes"] = o.notes;
  io::write_file(manifest, j.dump(2) + "\n");
}

}  // namespace

// ---------------------------------------------------------------------------
// PipelineConfig

PipelineConfig PipelineConfig::parse(std::istream& in, const std::string& name) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ParseError(name, e.line(), e.message());
  }

  PipelineConfig c;
  std::vector<double> log_lambda0 = {-4.0};
  using Setter = std::function<void(std::string_view section, std::string_view key, const std::string& value)>;
  const std::map<std::string, std::map<std::string, Setter>> keys = {
      {"pipeline",
       {{"seed", [&](auto s, auto k, auto& v) { c.seed = to_u64(s, k, v); }},
        {"threads", [&](auto s, auto k, auto& v) { c.threads = to_int(s, k, v); }},
        {"out", [&](auto, auto, auto& v) { c.out_dir = v; }},
        {"cache", [&](auto s, auto k, auto& v) { c.use_cache = to_bool(s, k, v); }}}},
      {"data",
       {{"inspections", [&](auto, auto, auto& v) { c.inspections = v; }},
        {"timeseries", [&](auto, auto, auto& v) { c.timeseries = v; }},
        {"features", [&](auto, auto, auto& v) { c.features_csv = v; }},
        {"u_estimates", [&](auto, auto, auto& v) { c.u_estimates = v; }},
        {"states", [&](auto s, auto k, auto& v) { c.n_states = to_int(s, k, v); }}}},
      {"synth",
       {{"scenario",
         [&](auto s, auto k, auto& v) {
           if (v == "hazard")
             c.scenario = Scenario::hazard;
           else if (v == "lingam")
             c.scenario = Scenario::lingam;
           else
             throw ValidationError(where(s, k) + ": expected hazard or lingam");
         }},
        {"pumps", [&](auto s, auto k, auto& v) { c.synth.n_pumps = to_int(s, k, v); }},
        {"sigma_u", [&](auto s, auto k, auto& v) { c.synth.sigma_u = to_double(s, k, v); }},
        {"log_lambda0", [&](auto s, auto k, auto& v) { log_lambda0 = to_doubles(s, k, v); }},
        {"covariates", [&](auto s, auto k, auto& v) { c.synth.n_covariates = to_int(s, k, v); }},
        {"beta", [&](auto s, auto k, auto& v) { c.synth.beta = to_doubles(s, k, v); }},
        {"study_days", [&](auto s, auto k, auto& v) { c.synth.study_days = to_int(s, k, v); }},
        {"interval_min", [&](auto s, auto k, auto& v) { c.synth.interval_min = to_int(s, k, v); }},
        {"interval_max", [&](auto s, auto k, auto& v) { c.synth.interval_max = to_int(s, k, v); }},
        {"ar_phi", [&](auto s, auto k, auto& v) { c.synth.ar_phi = to_double(s, k, v); }},
        {"ar_noise_sd", [&](auto s, auto k, auto& v) { c.synth.ar_noise_sd = to_double(s, k, v); }},
        {"covariate_level", [&](auto s, auto k, auto& v) { c.synth.covariate_level = to_double(s, k, v); }},
        {"lingam_samples", [&](auto s, auto k, auto& v) { c.synth.lingam_samples = to_int(s, k, v); }},
        {"planted_effects",
         [&](auto s, auto k, auto& v) {
           c.synth.planted_effects.clear();
           for (auto item : to_list(v)) {
             const auto colon = item.find(':');
             if (colon == std::string_view::npos)
               throw ValidationError(where(s, k) + ": expected feature:effect pairs");
             c.synth.planted_effects[std::string(io::trim(item.substr(0, colon)))] =
                 to_double(s, k, item.substr(colon + 1));
           }
         }},
        {"planted_group",
         [&](auto s, auto k, auto& v) {
           if (v == "positive")
             c.synth.planted_group = Group::positive;
           else if (v == "negative")
             c.synth.planted_group = Group::negative;
           else
             throw ValidationError(where(s, k) + ": expected positive or negative");
         }},
        {"null_effect_scale", [&](auto s, auto k, auto& v) { c.synth.null_effect_scale = to_double(s, k, v); }},
        {"feature_noise", [&](auto s, auto k, auto& v) { c.synth.feature_noise = to_double(s, k, v); }},
        {"target_noise", [&](auto s, auto k, auto& v) { c.synth.target_noise = to_double(s, k, v); }},
        {"feature_edge_prob", [&](auto s, auto k, auto& v) { c.synth.feature_edge_prob = to_double(s, k, v); }}}},
      {"sampler",
       {{"draws", [&](auto s, auto k, auto& v) { c.sampler.n_draws = to_int(s, k, v); }},
        {"tune", [&](auto s, auto k, auto& v) { c.sampler.n_tune = to_int(s, k, v); }},
        {"chains", [&](auto s, auto k, auto& v) { c.sampler.n_chains = to_int(s, k, v); }},
        {"target_accept", [&](auto s, auto k, auto& v) { c.sampler.target_accept = to_double(s, k, v); }},
        {"max_tree_depth", [&](auto s, auto k, auto& v) { c.sampler.max_tree_depth = to_int(s, k, v); }}}},
      {"hazard",
       {{"prior_log_lambda0_mean", [&](auto s, auto k, auto& v) { c.prior.mu_log_lambda0 = to_double(s, k, v); }},
        {"prior_log_lambda0_sd", [&](auto s, auto k, auto& v) { c.prior.sd_log_lambda0 = to_double(s, k, v); }},
        {"prior_beta_sd", [&](auto s, auto k, auto& v) { c.prior.sd_beta = to_double(s, k, v); }},
        {"prior_sigma_u_scale", [&](auto s, auto k, auto& v) { c.prior.sigma_u_scale = to_double(s, k, v); }},
        {"use_covariates", [&](auto s, auto k, auto& v) { c.use_covariates = to_bool(s, k, v); }},
        {"center_covariates", [&](auto s, auto k, auto& v) { c.center_covariates = to_bool(s, k, v); }}}},
      {"features",
       {{"window", [&](auto s, auto k, auto& v) { c.features.window = to_int(s, k, v); }},
        {"window_end",
         [&](auto s, auto k, auto& v) {
           if (io::trim(v).empty())
             c.window_end.reset();
           else
             c.window_end = to_int(s, k, v);
         }},
        {"active",
         [&](auto, auto, auto& v) {
           const auto t = io::trim(v);
           if (t == "default")
             c.features.active = default_active_features();
           else if (t == "all")
             c.features.active = all_features();
           else {
             c.features.active.clear();
             for (auto item : to_list(v)) c.features.active.push_back(feature_from_name(item));
           }
         }}}},
      {"lingam",
       {{"bootstrap", [&](auto s, auto k, auto& v) { c.lingam.bootstrap = to_int(s, k, v); }},
        {"ica_tol", [&](auto s, auto k, auto& v) { c.lingam.ica.tol = to_double(s, k, v); }},
        {"ica_max_iter", [&](auto s, auto k, auto& v) { c.lingam.ica.max_iter = to_int(s, k, v); }},
        {"top_k", [&](auto s, auto k, auto& v) { c.top_k = to_int(s, k, v); }}}},
      {"report",
       {{"rhat_threshold", [&](auto s, auto k, auto& v) { c.rhat_threshold = to_double(s, k, v); }},
        {"min_ess", [&](auto s, auto k, auto& v) { c.min_ess = to_double(s, k, v); }},
        {"histogram_bins", [&](auto s, auto k, auto& v) { c.histogram_bins = to_int(s, k, v); }},
        {"svg", [&](auto s, auto k, auto& v) { c.svg = to_bool(s, k, v); }}}},
  };

  for (const auto& [section, body] : tree) {
    const auto sec = keys.find(section);
    if (sec == keys.end()) {
      if (body.empty()) throw ValidationError(name + ": key '" + section + "' outside any section");
      throw ValidationError(name + ": unknown section [" + section + "]");
    }
    for (const auto& [key, value] : body) {
      const auto setter = sec->second.find(key);
      if (setter == sec->second.end()) throw ValidationError(name + ": unknown key " + where(section, key));
      setter->second(section, key, std::string(io::trim(value.data())));
    }
  }

  c.synth.log_lambda0 = log_lambda0.size() == 1 ? std::vector<double>(static_cast<std::size_t>(std::max(c.n_states, 0)),
                                                                        log_lambda0.front())
                                                : log_lambda0;
  if (c.synth.n_covariates == 0) c.synth.beta.clear();
  c.propagate();
  return c;
}

PipelineConfig PipelineConfig::load(const fs::path& path) {
  if (!fs::exists(path)) throw ValidationError("config file " + path.string() + " does not exist");
  std::istringstream in(io::read_file(path));
  return parse(in, path.string());
}

void PipelineConfig::propagate() {
  synth.seed = seed;
  synth.n_states = n_states;
  synth.features = features.active;
  sampler.seed = seed;
  lingam.seed = seed;
  const Parallelism par = threads == 1 ? Parallelism::serial() : Parallelism{Execution::parallel, threads};
  sampler.parallelism = par;
  features.parallelism = par;
  lingam.parallelism = par;
}

void PipelineConfig::validate() const {
  if (threads < 0) throw ValidationError("[pipeline] threads must be >= 0");
  if (out_dir.empty()) throw ValidationError("[pipeline] out must not be empty");
  if (n_states < 2) throw ValidationError("[data] states must be at least 2");
  for (const auto* p : {&inspections, &timeseries, &features_csv, &u_estimates})
    if (!p->empty() && !fs::exists(*p)) throw ValidationError("input file " + p->string() + " does not exist");
  if (synthetic()) {
    synth.validate();
    if (scenario == Scenario::hazard && synth.n_covariates == 0 && use_covariates)
      throw ValidationError("[synth] covariates = 0 requires [hazard] use_covariates = false");
  }
  sampler.validate();
  prior.validate();
  if (features.window < 31) throw ValidationError("[features] window must be at least 31 days");
  if (features.active.empty()) throw ValidationError("[features] active must list at least one feature");
  if (lingam.bootstrap < 0) throw ValidationError("[lingam] bootstrap must be >= 0");
  if (!(lingam.ica.tol > 0.0)) throw ValidationError("[lingam] ica_tol must be positive");
  if (lingam.ica.max_iter < 1) throw ValidationError("[lingam] ica_max_iter must be at least 1");
  if (top_k < 1) throw ValidationError("[lingam] top_k must be at least 1");
  if (histogram_bins < 1) throw ValidationError("[report] histogram_bins must be at least 1");
  if (!(rhat_threshold > 1.0)) throw ValidationError("[report] rhat_threshold must exceed 1");
  if (!(min_ess >= 0.0)) throw ValidationError("[report] min_ess must be >= 0");
}

std::string PipelineConfig::to_ini(std::string_view section) const {
  std::ostringstream o;
  auto emit = [&](std::string_view name, auto&& body) {
    if (!section.empty() && section != name) return;
    o << '[' << name << "]\n";
    body();
    if (section.empty()) o << '\n';
  };
  auto kv = [&](std::string_view key, const auto& value) { o << key << " = " << value << '\n'; };
  auto kd = [&](std::string_view key, double value) { kv(key, io::format_double(value)); };

  emit("pipeline", [&] {
    kv("seed", seed);
    kv("threads", threads);
    kv("out", out_dir.generic_string());
    kv("cache", bool_text(use_cache));
  });
  emit("data", [&] {
    kv("inspections", inspections.generic_string());
    kv("timeseries", timeseries.generic_string());
    kv("features", features_csv.generic_string());
    kv("u_estimates", u_estimates.generic_string());
    kv("states", n_states);
  });
  emit("synth", [&] {
    kv("scenario", scenario == Scenario::hazard ? "hazard" : "lingam");
    kv("pumps", synth.n_pumps);
    kd("sigma_u", synth.sigma_u);
    const bool uniform = std::all_of(synth.log_lambda0.begin(), synth.log_lambda0.end(),
                                     [&](double v) { return v == synth.log_lambda0.front(); });
    kv("log_lambda0", uniform && !synth.log_lambda0.empty() ? io::format_double(synth.log_lambda0.front())
                                                            : join_doubles(synth.log_lambda0));
    kv("covariates", synth.n_covariates);
    kv("beta", join_doubles(synth.beta));
    kv("study_days", synth.study_days);
    kv("interval_min", synth.interval_min);
    kv("interval_max", synth.interval_max);
    kd("ar_phi", synth.ar_phi);
    kd("ar_noise_sd", synth.ar_noise_sd);
    kd("covariate_level", synth.covariate_level);
    kv("lingam_samples", synth.lingam_samples);
    std::string planted;
    for (const auto& [f, e] : synth.planted_effects) planted += (planted.empty() ? "" : ",") + f + ":" + io::format_double(e);
    kv("planted_effects", planted);
    kv("planted_group", group_name(synth.planted_group));
    kd("null_effect_scale", synth.null_effect_scale);
    kd("feature_noise", synth.feature_noise);
    kd("target_noise", synth.target_noise);
    kd("feature_edge_prob", synth.feature_edge_prob);
  });
  emit("sampler", [&] {
    kv("draws", sampler.n_draws);
    kv("tune", sampler.n_tune);
    kv("chains", sampler.n_chains);
    kd("target_accept", sampler.target_accept);
    kv("max_tree_depth", sampler.max_tree_depth);
  });
  emit("hazard", [&] {
    kd("prior_log_lambda0_mean", prior.mu_log_lambda0);
    kd("prior_log_lambda0_sd", prior.sd_log_lambda0);
    kd("prior_beta_sd", prior.sd_beta);
    kd("prior_sigma_u_scale", prior.sigma_u_scale);
    kv("use_covariates", bool_text(use_covariates));
    kv("center_covariates", bool_text(center_covariates));
  });
  emit("features", [&] {
    kv("window", features.window);
    kv("window_end", window_end ? std::to_string(*window_end) : std::string());
    std::string active;
    for (Feature f : features.active) active += (active.empty() ? "" : ",") + std::string(feature_name(f));
    kv("active", active);
  });
  emit("lingam", [&] {
    kv("bootstrap", lingam.bootstrap);
    kd("ica_tol", lingam.ica.tol);
    kv("ica_max_iter", lingam.ica.max_iter);
    kv("top_k", top_k);
  });
  emit("report", [&] {
    kd("rhat_threshold", rhat_threshold);
    kd("min_ess", min_ess);
    kv("histogram_bins", histogram_bins);
    kv("svg", bool_text(svg));
  });
  return o.str();
}

// ---------------------------------------------------------------------------
// commands

StageError::StageError(std::string stage, const std::string& message, bool validation)
    : std::runtime_error("[" + stage + "] " + message), stage_(std::move(stage)), validation_(validation) {}

StageOutcome cmd_synth(const PipelineConfig& config) {
  return run_stage(config, "synth", [&] { return synth_stage(config); });
}
StageOutcome cmd_fit(const PipelineConfig& config) {
  return run_stage(config, "fit", [&] { return fit_stage(config); });
}
StageOutcome cmd_features(const PipelineConfig& config) {
  return run_stage(config, "features", [&] { return features_stage(config); });
}
StageOutcome cmd_group(const PipelineConfig& config) {
  return run_stage(config, "group", [&] { return group_stage(config); });
}
StageOutcome cmd_report(const PipelineConfig& config) {
  return run_stage(config, "report", [&] { return report_stage(config); });
}
StageOutcome cmd_discover(const PipelineConfig& config) {
  auto outcome = run_stage(config, "discover", [&] { return discover_groups(config); });
  const auto report = cmd_report(config);
  outcome.outputs.insert(outcome.outputs.end(), report.outputs.begin(), report.outputs.end());
  return outcome;
}

std::vector<StageOutcome> cmd_pipeline(const PipelineConfig& config) {
  const RunLayout layout{config.out_dir};
  const std::string seed_line = "seed = " + std::to_string(config.seed) + "\n";
  std::vector<StageOutcome> outcomes;

  auto cached_stage = [&](const std::string& name, const std::string& settings, const std::vector<fs::path>& inputs,
                          const std::function<StageOutcome()>& run) {
    const auto manifest = layout.cache_dir() / (name + ".json");
    const auto key = stage_key(name, settings, inputs);
    if (config.use_cache) {
      if (auto hit = load_cached(manifest, key, config.out_dir)) {
        hit->stage = name;
        outcomes.push_back(std::move(*hit));
        return;
      }
    }
    auto outcome = run();
    store_manifest(manifest, key, config.out_dir, outcome);
    outcomes.push_back(std::move(outcome));
  };

  io::write_file(config.out_dir / "config.ini", config.to_ini());

  if (config.synthetic())
    cached_stage("synth", seed_line + config.to_ini("data") + config.to_ini("synth") + config.to_ini("features"), {},
                 [&] { return cmd_synth(config); });
  if (config.u_estimates.empty() && !lingam_only(config)) {
    std::vector<fs::path> inputs = {inspections_path(config)};
    if (config.use_covariates) inputs.push_back(timeseries_path(config));
    cached_stage("fit", seed_line + config.to_ini("data") + config.to_ini("sampler") + config.to_ini("hazard") +
                            config.to_ini("report"),
                 inputs, [&] { return cmd_fit(config); });
  }
  if (config.features_csv.empty() && !lingam_only(config))
    cached_stage("features", config.to_ini("features"), {timeseries_path(config)},
                 [&] { return cmd_features(config); });
  cached_stage("group", config.to_ini("report"), {u_estimates_path(config), features_path(config)},
               [&] { return cmd_group(config); });
  cached_stage("discover", seed_line + config.to_ini("lingam"), {layout.group_dir() / "groups.csv", features_path(config)},
               [&] { return run_stage(config, "discover", [&] { return discover_groups(config); }); });
  outcomes.push_back(cmd_report(config));
  return outcomes;
}

double effect_gap_ratio(double max_abs_a, double max_abs_b) {
  const double hi = std::max(std::abs(max_abs_a), std::abs(max_abs_b));
  const double lo = std::min(std::abs(max_abs_a), std::abs(max_abs_b));
  if (hi == 0.0) return std::numeric_limits<double>::quiet_NaN();
  if (lo == 0.0) return std::numeric_limits<double>::infinity();
  return hi / lo;
}

int exit_status(const std::vector<StageOutcome>& outcomes) {
  for (const auto& o : outcomes)
    if (!o.warnings.empty()) return 3;
  return 0;
}

void record_timing(const fs::path& out_dir, const std::string& stage, double seconds) {
  const auto path = out_dir / "timings.json";
  std::map<std::string, double> timings;
  if (fs::exists(path)) {
    try {
      timings = nlohmann::json::parse(io::read_file(path)).get<std::map<std::string, double>>();
    } catch (const std::exception&) {
      timings.clear();
    }
  }
  timings[stage] = seconds;
  io::write_file(path, nlohmann::json(timings).dump(2) + "\n");
}

}  // namespace pumpcause
