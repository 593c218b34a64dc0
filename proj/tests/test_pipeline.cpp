#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <doctest.h>
#include <nlohmann/json.hpp>

#include "pumpcause/errors.hpp"
#include "pumpcause/io.hpp"
#include "pumpcause/pipeline.hpp"
#include "pumpcause/random_effects.hpp"

using namespace pumpcause;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("pumpcause_test_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

PipelineConfig quick_config(const fs::path& out) {
  PipelineConfig c;
  c.out_dir = out;
  c.seed = 7;
  c.threads = 1;
  c.sampler.n_draws = 100;
  c.sampler.n_tune = 100;
  c.sampler.n_chains = 2;
  c.lingam.bootstrap = 10;
  c.propagate();
  return c;
}

PipelineConfig parse_text(const std::string& text) {
  std::istringstream in(text);
  return PipelineConfig::parse(in, "test.ini");
}

json read_json(const fs::path& p) { return json::parse(io::read_file(p)); }

}  // namespace

TEST_CASE("config defaults") {
  const PipelineConfig c = parse_text("");
  CHECK(c.sampler.n_draws == 2000);
  CHECK(c.sampler.n_tune == 1000);
  CHECK(c.sampler.n_chains == 8);
  CHECK(c.sampler.target_accept == 0.95);
  CHECK(c.lingam.bootstrap == 1000);
  CHECK(c.features.window == 90);
  CHECK(c.features.active.size() == 22);
  CHECK(c.synthetic());
}

TEST_CASE("config parse") {
  const auto c = parse_text(
      "; comment\n[pipeline]\nseed = 42\nthreads = 2\n[sampler]\ndraws = 300\n"
      "[lingam]\nbootstrap = 50\n[synth]\nscenario = lingam\npumps = 12\n");
  CHECK(c.seed == 42);
  CHECK(c.threads == 2);
  CHECK(c.sampler.n_draws == 300);
  CHECK(c.lingam.bootstrap == 50);
  CHECK(c.scenario == Scenario::lingam);
  CHECK(c.synth.n_pumps == 12);
  auto p = c;
  p.propagate();
  CHECK(p.sampler.seed == 42);
  CHECK(p.lingam.seed == 42);
  CHECK(p.synth.seed == 42);

  // canonical text parses back to the same settings
  const auto again = parse_text(c.to_ini());
  CHECK(again.to_ini() == c.to_ini());
}

TEST_CASE("config errors") {
  CHECK_THROWS_AS(parse_text("[sampler]\nunknown_key = 1\n"), ValidationError);
  CHECK_THROWS_AS(parse_text("[nosuch]\nx = 1\n"), ValidationError);
  CHECK_THROWS_AS(parse_text("[sampler]\ndraws = many\n"), ValidationError);
  auto c = parse_text("[sampler]\ntarget_accept = 1.5\n");
  CHECK_THROWS_AS(c.validate(), ValidationError);
}

TEST_CASE("synth writes three files deterministically") {
  TempDir a("synth_a"), b("synth_b");
  auto ca = quick_config(a.path);
  auto cb = quick_config(b.path);
  const auto oa = cmd_synth(ca);
  cmd_synth(cb);
  CHECK(oa.outputs.size() == 3);
  for (const char* name : {"inspections.csv", "timeseries.csv", "ground_truth.json"}) {
    const auto pa = a.path / "synth" / name;
    REQUIRE(fs::exists(pa));
    CHECK(io::read_file(pa) == io::read_file(b.path / "synth" / name));
  }
  auto bad = quick_config(a.path);
  bad.synth.n_pumps = 0;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("missing input is a stage-labelled validation error") {
  TempDir t("missing");
  auto c = quick_config(t.path);
  cmd_synth(c);
  fs::remove(t.path / "synth" / "timeseries.csv");
  try {
    cmd_fit(c);
    FAIL("expected a stage error");
  } catch (const StageError& e) {
    CHECK(e.stage() == "fit");
    CHECK(e.validation());
    CHECK(std::string(e.what()).find("[fit]") == 0);
    CHECK(std::string(e.what()).find("timeseries") != std::string::npos);
  }
}

TEST_CASE("pipeline caches stages and recovers from corruption") {
  TempDir t("cache");
  auto c = quick_config(t.path);
  const auto first = cmd_pipeline(c);
  REQUIRE(first.size() == 6);
  for (const auto& o : first) CHECK_FALSE(o.cached);
  const auto report = io::read_file(t.path / "run_report.json");
  const auto diag = read_json(t.path / "fit" / "diagnostics.json");
  CHECK(diag.contains("max_rhat"));
  CHECK(diag["parameters"][0].contains("ess_bulk"));
  CHECK(diag["chains"][0].contains("step_size"));
  CHECK(io::read_file(t.path / "fit" / "draws.csv").rfind("chain,draw,", 0) == 0);

  const auto second = cmd_pipeline(c);
  for (const auto& o : second)
    if (o.stage != "report") CHECK(o.cached);
  CHECK(io::read_file(t.path / "run_report.json") == report);

  // corrupt the fit manifest: fit re-runs, downstream stays cached
  io::write_file(t.path / ".cache" / "fit.json", "{not json");
  const auto third = cmd_pipeline(c);
  for (const auto& o : third) {
    if (o.stage == "fit") CHECK_FALSE(o.cached);
    if (o.stage == "synth" || o.stage == "group") CHECK(o.cached);
  }
  CHECK(io::read_file(t.path / "run_report.json") == report);

  // a modified output invalidates its stage
  io::write_file(t.path / "features" / "features.csv", "pump_id\n");
  const auto fourth = cmd_pipeline(c);
  for (const auto& o : fourth)
    if (o.stage == "features") CHECK_FALSE(o.cached);
  CHECK(io::read_file(t.path / "run_report.json") == report);

  auto no_cache = c;
  no_cache.use_cache = false;
  for (const auto& o : cmd_pipeline(no_cache)) CHECK_FALSE(o.cached);
}

TEST_CASE("small groups are skipped and recorded") {
  TempDir t("skip");
  auto c = quick_config(t.path);
  c.min_ess = 0.0;
  c.rhat_threshold = 10.0;
  const auto outcomes = cmd_pipeline(c);
  CHECK(exit_status(outcomes) == 0);
  const auto report = read_json(t.path / "run_report.json");
  for (const auto& d : report["discovery"]) CHECK(d["status"] == "skipped");
  CHECK(report["gap_ratio"].is_null());
  int total = 0;
  for (const auto& g : report["groups"]) total += g["count"].get<int>();
  CHECK(total == 30);
  CHECK(report["total_pumps"] == 30);
}

TEST_CASE("single-group data finishes with a skipped group") {
  TempDir t("single");
  auto c = quick_config(t.path);
  c.scenario = Scenario::lingam;
  c.synth.lingam_samples = 100;
  c.propagate();
  cmd_synth(c);
  // rewrite the targets so every pump is positive
  const auto upath = t.path / "synth" / "u_estimates.csv";
  std::istringstream in(io::read_file(upath));
  auto table = parse_random_effects(in, "u");
  for (auto& e : table.estimates) {
    e.u_mean = std::abs(e.u_mean) + 0.1;
    e.hdi_low = e.u_mean;
    e.hdi_high = e.u_mean;
  }
  std::ostringstream out;
  write_random_effects(out, table.estimates, table.pump_ids);
  io::write_file(t.path / "all_positive.csv", out.str());
  c.u_estimates = t.path / "all_positive.csv";
  c.features_csv = t.path / "synth" / "features.csv";
  cmd_group(c);
  const auto outcome = cmd_discover(c);
  // the skipped group adds a note, never a warning
  for (const auto& w : outcome.warnings) CHECK(w.find("negative") == std::string::npos);
  bool noted = false;
  for (const auto& n : outcome.notes) noted = noted || n.find("negative") != std::string::npos;
  CHECK(noted);
  const auto report = read_json(t.path / "run_report.json");
  for (const auto& d : report["discovery"]) {
    if (d["group"] == "positive") CHECK(d["status"] == "ran");
    if (d["group"] == "negative") CHECK(d["status"] == "skipped");
  }
  CHECK(report["gap_ratio"].is_null());
  CHECK(report.contains("gap_ratio_note"));
}

TEST_CASE("null scenario flags every interval containing zero") {
  TempDir t("null");
  auto c = quick_config(t.path);
  c.scenario = Scenario::lingam;
  c.synth.lingam_samples = 400;
  c.synth.planted_effects = {{"std", 0.0}};
  c.lingam.bootstrap = 50;
  c.propagate();
  cmd_pipeline(c);
  const auto report = read_json(t.path / "run_report.json");
  for (const auto& d : report["discovery"]) {
    REQUIRE(d["status"] == "ran");
    CHECK(d["all_cis_contain_zero"] == true);
  }
}

TEST_CASE("gap ratio") {
  CHECK(effect_gap_ratio(1.5, 0.01) == doctest::Approx(150.0));
  CHECK(effect_gap_ratio(0.01, 1.5) == doctest::Approx(150.0));
  CHECK(std::isinf(effect_gap_ratio(1.5, 0.0)));
  CHECK(std::isnan(effect_gap_ratio(0.0, 0.0)));
}

TEST_CASE("exit status") {
  StageOutcome ok{"fit", {}, {"note"}, {}, false};
  StageOutcome warn{"fit", {"max R-hat 1.2"}, {}, {}, false};
  CHECK(exit_status({ok}) == 0);
  CHECK(exit_status({ok, warn}) == 3);
}
