#include <sstream>
#include <string>

#include <doctest.h>

#include "pumpcause/data.hpp"
#include "pumpcause/errors.hpp"
#include "pumpcause/synth.hpp"

using namespace pumpcause;

namespace {

std::vector<InspectionRecord> parse(const std::string& body) {
  std::istringstream in("pump_id,day,state\n" + body);
  return parse_inspections(in, "inspections.csv");
}

CovariateSeries flat_series(const std::string& id, long days, double value) {
  return {id, 0, std::vector<double>(static_cast<std::size_t>(days), value)};
}

}  // namespace

TEST_CASE("health state bounds") {
  CHECK(HealthState(1).value() == 1);
  CHECK(HealthState(8).value() == 8);
  CHECK_THROWS_AS(HealthState(0), ValidationError);
  CHECK_THROWS_AS(HealthState(9), ValidationError);
}

TEST_CASE("inspections parse") {
  const auto records = parse("P001,0,1\nP001,90,2\n");
  REQUIRE(records.size() == 2);
  CHECK(records[0].pump_id == "P001");
  CHECK(records[0].day == 0);
  CHECK(records[1].day == 90);
  CHECK(records[1].state.value() == 2);
}

TEST_CASE("inspection state out of range reports the line") {
  try {
    parse("P001,0,9\n");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
    CHECK(std::string(e.what()).find("out of range") != std::string::npos);
  }
}

TEST_CASE("inspection days must increase within a pump") {
  try {
    parse("P001,90,1\nP001,0,1\n");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
    CHECK(std::string(e.what()).find("non-monotone") != std::string::npos);
  }
  CHECK_THROWS_AS(parse("P001,5,1\nP001,5,2\n"), ParseError);
}

TEST_CASE("malformed inspection rows") {
  CHECK_THROWS_AS(parse("P001,0\n"), ParseError);
  CHECK_THROWS_AS(parse("P001,x,1\n"), ParseError);
  CHECK_THROWS_AS(parse("P001,-1,1\n"), ParseError);
  std::istringstream bad_header("id,day,state\nP001,0,1\n");
  CHECK_THROWS_AS(parse_inspections(bad_header, "x"), ParseError);
}

TEST_CASE("records are grouped by pump and sorted by day") {
  const auto records = parse("P002,0,1\nP001,0,1\nP002,30,1\nP001,10,2\n");
  REQUIRE(records.size() == 4);
  CHECK(records[0].pump_id == "P001");
  CHECK(records[1].pump_id == "P001");
  CHECK(records[1].day == 10);
  CHECK(records[2].pump_id == "P002");
  CHECK(records[3].day == 30);
}

TEST_CASE("timeseries parse requires consecutive days") {
  std::istringstream ok("pump_id,day,value\nP1,3,1.5\nP1,4,2.5\n");
  const auto series = parse_timeseries(ok, "ts");
  REQUIRE(series.size() == 1);
  CHECK(series[0].first_day == 3);
  CHECK(series[0].last_day() == 4);
  CHECK(series[0].mean_over(3, 5) == doctest::Approx(2.0));
  std::istringstream gap("pump_id,day,value\nP1,3,1.5\nP1,5,2.5\n");
  CHECK_THROWS_AS(parse_timeseries(gap, "ts"), ParseError);
  std::istringstream nan("pump_id,day,value\nP1,3,nan\n");
  CHECK_THROWS_AS(parse_timeseries(nan, "ts"), ParseError);
}

TEST_CASE("transition building") {
  SUBCASE("no change") {
    const auto b = build_transitions(parse("P001,0,1\nP001,90,1\n"), {});
    REQUIRE(b.dataset.observations.size() == 1);
    const auto& o = b.dataset.observations[0];
    CHECK(o.state_index == 1);
    CHECK(o.delta_t == 90.0);
    CHECK(o.y == 0);
    CHECK(b.dataset.n_covariates == 0);
  }
  SUBCASE("single step") {
    const auto b = build_transitions(parse("P001,0,1\nP001,90,2\n"), {});
    REQUIRE(b.dataset.observations.size() == 1);
    CHECK(b.dataset.observations[0].y == 1);
  }
  SUBCASE("absorbing state") {
    const auto b = build_transitions(parse("P001,0,8\nP001,90,8\n"), {});
    CHECK(b.dataset.observations.empty());
    CHECK(b.dropped_absorbing == 1);
  }
  SUBCASE("repairs are dropped") {
    const auto b = build_transitions(parse("P001,0,3\nP001,90,2\nP001,120,2\n"), {});
    CHECK(b.dropped_decreases == 1);
    REQUIRE(b.dataset.observations.size() == 1);
    CHECK(b.dataset.observations[0].state_index == 2);
  }
  SUBCASE("multi-step jumps count once") {
    const auto b = build_transitions(parse("P001,0,1\nP001,90,4\n"), {});
    CHECK(b.multi_step_jumps == 1);
    REQUIRE(b.dataset.observations.size() == 1);
    CHECK(b.dataset.observations[0].y == 1);
    CHECK(b.dataset.observations[0].state_index == 1);
  }
  SUBCASE("interval covariate is the mean over [start, end)") {
    CovariateSeries s{"P001", 0, {}};
    for (int d = 0; d < 100; ++d) s.values.push_back(d);
    const auto b = build_transitions(parse("P001,0,1\nP001,10,1\n"), {s});
    REQUIRE(b.dataset.observations.size() == 1);
    CHECK(b.dataset.observations[0].x.at(0) == doctest::Approx(4.5));
  }
  SUBCASE("pump indices follow lexicographic id order") {
    const auto b = build_transitions(parse("B,0,1\nB,5,1\nA,0,1\nA,5,1\n"), {});
    CHECK(b.dataset.pump_ids == std::vector<std::string>{"A", "B"});
    REQUIRE(b.dataset.observations.size() == 2);
    CHECK(b.dataset.observations[0].pump_index == 0);
    CHECK(b.dataset.observations[1].pump_index == 1);
  }
  SUBCASE("missing or short covariates") {
    CHECK_THROWS_AS(build_transitions(parse("P001,0,1\nP001,90,1\n"), {flat_series("P002", 100, 1)}),
                    ValidationError);
    CHECK_THROWS_AS(build_transitions(parse("P001,0,1\nP001,90,1\n"), {flat_series("P001", 50, 1)}),
                    ValidationError);
  }
}

TEST_CASE("transition counts are conserved") {
  SynthConfig cfg;
  cfg.seed = 3;
  const auto synth = generate_hazard_data(cfg);
  const auto b = build_transitions(synth.records, synth.series);
  CHECK(b.dataset.observations.size() + b.dropped_absorbing + b.dropped_decreases == b.intervals);
  CHECK(b.intervals + static_cast<std::size_t>(b.dataset.n_pumps) == synth.records.size());
  for (const auto& o : b.dataset.observations) {
    CHECK(o.delta_t > 0);
    CHECK(o.state_index < b.dataset.n_states);
  }
}

TEST_CASE("transitions csv round trip") {
  SynthConfig cfg;
  cfg.seed = 5;
  const auto synth = generate_hazard_data(cfg);
  const auto& data = synth.dataset;
  std::ostringstream out;
  write_transitions(out, data);
  std::istringstream in(out.str());
  const auto back = parse_transitions(in, "t.csv", {data.n_pumps, data.n_states, data.pump_ids});
  CHECK(back == data);
}

TEST_CASE("inspections and timeseries round trip") {
  SynthConfig cfg;
  cfg.n_pumps = 4;
  const auto synth = generate_hazard_data(cfg);
  std::ostringstream a;
  write_inspections(a, synth.records);
  std::istringstream ia(a.str());
  const auto records = parse_inspections(ia, "i");
  REQUIRE(records.size() == synth.records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    CHECK(records[i].pump_id == synth.records[i].pump_id);
    CHECK(records[i].day == synth.records[i].day);
    CHECK(records[i].state == synth.records[i].state);
  }
  std::ostringstream b;
  write_timeseries(b, synth.series);
  std::istringstream ib(b.str());
  const auto series = parse_timeseries(ib, "t");
  REQUIRE(series.size() == synth.series.size());
  for (std::size_t i = 0; i < series.size(); ++i) CHECK(series[i].values == synth.series[i].values);
}

TEST_CASE("dataset validation") {
  Dataset d;
  d.n_pumps = 1;
  d.observations.push_back({0, 1, 10.0, 0, {}});
  CHECK_NOTHROW(d.validate());
  d.observations.push_back({1, 1, 10.0, 0, {}});
  CHECK_THROWS_AS(d.validate(), ValidationError);
  d.observations.back() = {0, 8, 10.0, 0, {}};
  CHECK_THROWS_AS(d.validate(), ValidationError);
  d.observations.back() = {0, 1, 0.0, 0, {}};
  CHECK_THROWS_AS(d.validate(), ValidationError);
  d.observations.back() = {0, 1, 1.0, 2, {}};
  CHECK_THROWS_AS(d.validate(), ValidationError);
  d.observations.back() = {0, 1, 1.0, 1, {0.5}};
  CHECK_THROWS_AS(d.validate(), ValidationError);
}
