#include "pumpcause/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <string_view>
#include <unordered_map>

#include "pumpcause/errors.hpp"
#include "pumpcause/io.hpp"

namespace pumpcause {

namespace {

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  return in;
}

bool valid_pump_id(std::string_view id) {
  return !id.empty() && id.find_first_of(",\"\n") == std::string_view::npos;
}

}  // namespace

HealthState::HealthState(int value, int n_states) : value_(value) {
  if (value < 1 || value > n_states)
    throw ValidationError("health state " + std::to_string(value) + " outside 1.." + std::to_string(n_states));
}

double CovariateSeries::mean_over(long from, long to) const {
  const auto begin = values.begin() + (from - first_day);
  const auto end = values.begin() + (to - first_day);
  return std::accumulate(begin, end, 0.0) / static_cast<double>(to - from);
}

void Dataset::validate() const {
  if (n_pumps < 0) throw ValidationError("negative pump count");
  if (n_states < 2) throw ValidationError("need at least two health states");
  if (n_covariates < 0) throw ValidationError("negative covariate count");
  if (!pump_ids.empty() && static_cast<int>(pump_ids.size()) != n_pumps)
    throw ValidationError("pump id list does not match pump count");
  for (std::size_t n = 0; n < observations.size(); ++n) {
    const auto& obs = observations[n];
    const auto where = " (observation " + std::to_string(n) + ")";
    if (obs.pump_index < 0 || obs.pump_index >= n_pumps) throw ValidationError("pump index out of range" + where);
    if (obs.state_index < 1 || obs.state_index >= n_states) throw ValidationError("state index out of range" + where);
    if (!(obs.delta_t > 0.0) || !std::isfinite(obs.delta_t)) throw ValidationError("delta_t must be positive" + where);
    if (obs.y != 0 && obs.y != 1) throw ValidationError("y must be 0 or 1" + where);
    if (static_cast<int>(obs.x.size()) != n_covariates) throw ValidationError("covariate length mismatch" + where);
    for (double v : obs.x)
      if (!std::isfinite(v)) throw ValidationError("non-finite covariate" + where);
  }
}

std::vector<InspectionRecord> parse_inspections(std::istream& in, const std::string& name, int n_states) {
  io::LineReader reader(in, name);
  io::expect_header(reader, "pump_id,day,state");
  std::vector<InspectionRecord> records;
  std::unordered_map<std::string, long> last_day;
  std::string line;
  while (reader.next(line)) {
    if (io::trim(line).empty()) continue;
    const auto fields = io::split_csv(line);
    const auto lineno = reader.line_number();
    if (fields.size() != 3) throw ParseError(name, lineno, "expected 3 fields, got " + std::to_string(fields.size()));
    if (!valid_pump_id(fields[0])) throw ParseError(name, lineno, "invalid pump_id");
    const auto day = io::parse_int(fields[1]);
    if (!day || *day < 0) throw ParseError(name, lineno, "day must be a non-negative integer");
    const auto state = io::parse_int(fields[2]);
    if (!state) throw ParseError(name, lineno, "state must be an integer");
    if (*state < 1 || *state > n_states)
      throw ParseError(name, lineno, "state " + std::to_string(*state) + " out of range 1.." + std::to_string(n_states));
    std::string id(fields[0]);
    auto [it, inserted] = last_day.try_emplace(id, *day);
    if (!inserted) {
      if (*day <= it->second)
        throw ParseError(name, lineno, "non-monotone days for pump " + id + ": " + std::to_string(*day) +
                                           " after " + std::to_string(it->second));
      it->second = *day;
    }
    records.push_back({std::move(id), static_cast<long>(*day), HealthState(static_cast<int>(*state), n_states)});
  }
  std::stable_sort(records.begin(), records.end(), [](const auto& a, const auto& b) {
    return a.pump_id != b.pump_id ? a.pump_id < b.pump_id : a.day < b.day;
  });
  return records;
}

std::vector<InspectionRecord> ingest_inspections(const std::filesystem::path& path, int n_states) {
  auto in = open_input(path);
  return parse_inspections(in, path.string(), n_states);
}

std::vector<CovariateSeries> parse_timeseries(std::istream& in, const std::string& name) {
  io::LineReader reader(in, name);
  io::expect_header(reader, "pump_id,day,value");
  std::map<std::string, CovariateSeries> by_pump;
  std::string line;
  while (reader.next(line)) {
    if (io::trim(line).empty()) continue;
    const auto fields = io::split_csv(line);
    const auto lineno = reader.line_number();
    if (fields.size() != 3) throw ParseError(name, lineno, "expected 3 fields, got " + std::to_string(fields.size()));
    if (!valid_pump_id(fields[0])) throw ParseError(name, lineno, "invalid pump_id");
    const auto day = io::parse_int(fields[1]);
    if (!day || *day < 0) throw ParseError(name, lineno, "day must be a non-negative integer");
    const auto value = io::parse_double(fields[2]);
    if (!value || !std::isfinite(*value)) throw ParseError(name, lineno, "value must be a finite number");
    std::string id(fields[0]);
    auto [it, inserted] = by_pump.try_emplace(id);
    auto& series = it->second;
    if (inserted) {
      series.pump_id = id;
      series.first_day = static_cast<long>(*day);
    } else if (*day != series.last_day() + 1) {
      throw ParseError(name, lineno, "days for pump " + id + " must be consecutive (expected day " +
                                         std::to_string(series.last_day() + 1) + ")");
    }
    series.values.push_back(*value);
  }
  std::vector<CovariateSeries> out;
  out.reserve(by_pump.size());
  for (auto& [id, series] : by_pump) out.push_back(std::move(series));
  return out;
}

std::vector<CovariateSeries> ingest_timeseries(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_timeseries(in, path.string());
}

std::vector<std::string> pump_order(const std::vector<InspectionRecord>& records) {
  std::vector<std::string> ids;
  ids.reserve(records.size());
  for (const auto& r : records) ids.push_back(r.pump_id);
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

TransitionBuild build_transitions(const std::vector<InspectionRecord>& records,
                                  const std::vector<CovariateSeries>& covariates, int n_states) {
  TransitionBuild result;
  auto& data = result.dataset;
  data.n_states = n_states;
  data.n_covariates = covariates.empty() ? 0 : 1;
  data.pump_ids = pump_order(records);
  data.n_pumps = static_cast<int>(data.pump_ids.size());

  std::map<std::string, const CovariateSeries*> series_by_pump;
  for (const auto& s : covariates) series_by_pump[s.pump_id] = &s;

  std::map<std::string, std::vector<const InspectionRecord*>> by_pump;
  for (const auto& r : records) by_pump[r.pump_id].push_back(&r);

  int pump_index = 0;
  for (auto& [id, rows] : by_pump) {
    std::stable_sort(rows.begin(), rows.end(), [](auto* a, auto* b) { return a->day < b->day; });
    const CovariateSeries* series = nullptr;
    if (data.n_covariates > 0) {
      const auto it = series_by_pump.find(id);
      if (it == series_by_pump.end()) throw ValidationError("no covariate series for pump " + id);
      series = it->second;
    }
    for (std::size_t j = 1; j < rows.size(); ++j) {
      const auto& start = *rows[j - 1];
      const auto& end = *rows[j];
      ++result.intervals;
      if (end.day <= start.day) throw ValidationError("non-monotone days for pump " + id);
      const int k = start.state.value();
      if (k >= n_states) {
        ++result.dropped_absorbing;
        continue;
      }
      if (end.state.value() < k) {
        ++result.dropped_decreases;
        continue;
      }
      TransitionObservation obs;
      obs.pump_index = pump_index;
      obs.state_index = k;
      obs.delta_t = static_cast<double>(end.day - start.day);
      obs.y = end.state.value() > k ? 1 : 0;
      if (end.state.value() > k + 1) ++result.multi_step_jumps;
      if (series) {
        if (!series->covers(start.day, end.day - 1))
          throw ValidationError("covariate series for pump " + id + " does not cover days " +
                                std::to_string(start.day) + ".." + std::to_string(end.day - 1));
        obs.x.push_back(series->mean_over(start.day, end.day));
      }
      data.observations.push_back(std::move(obs));
    }
    ++pump_index;
  }
  data.validate();
  return result;
}

void write_inspections(std::ostream& out, const std::vector<InspectionRecord>& records) {
  out << "pump_id,day,state\n";
  for (const auto& r : records) out << r.pump_id << ',' << r.day << ',' << r.state.value() << '\n';
}

void write_timeseries(std::ostream& out, const std::vector<CovariateSeries>& series) {
  out << "pump_id,day,value\n";
  for (const auto& s : series)
    for (std::size_t j = 0; j < s.values.size(); ++j)
      out << s.pump_id << ',' << s.first_day + static_cast<long>(j) << ',' << io::format_double(s.values[j]) << '\n';
}

void write_transitions(std::ostream& out, const Dataset& data) {
  out << "pump_index,state_index,delta_t,y";
  for (int j = 0; j < data.n_covariates; ++j) out << ",x" << j;
  out << '\n';
  for (const auto& obs : data.observations) {
    out << obs.pump_index << ',' << obs.state_index << ',' << io::format_double(obs.delta_t) << ',' << obs.y;
    for (double v : obs.x) out << ',' << io::format_double(v);
    out << '\n';
  }
}

Dataset parse_transitions(std::istream& in, const std::string& name, const DatasetShape& shape) {
  io::LineReader reader(in, name);
  std::string line;
  if (!reader.next(line)) throw ParseError(name, 1, "empty transitions file");
  const auto header = io::split_csv(line);
  if (header.size() < 4 || header[0] != "pump_index" || header[1] != "state_index" || header[2] != "delta_t" ||
      header[3] != "y")
    throw ParseError(name, 1, "unexpected transitions header");
  const int p = static_cast<int>(header.size()) - 4;
  for (int j = 0; j < p; ++j)
    if (header[static_cast<std::size_t>(4 + j)] != "x" + std::to_string(j))
      throw ParseError(name, 1, "covariate columns must be named x0..x{p-1}");

  Dataset data;
  data.n_pumps = shape.n_pumps;
  data.n_states = shape.n_states;
  data.n_covariates = p;
  data.pump_ids = shape.pump_ids;
  while (reader.next(line)) {
    if (io::trim(line).empty()) continue;
    const auto fields = io::split_csv(line);
    const auto lineno = reader.line_number();
    if (static_cast<int>(fields.size()) != 4 + p) throw ParseError(name, lineno, "wrong field count");
    const auto i = io::parse_int(fields[0]);
    const auto k = io::parse_int(fields[1]);
    const auto dt = io::parse_double(fields[2]);
    const auto y = io::parse_int(fields[3]);
    if (!i || !k || !dt || !y) throw ParseError(name, lineno, "malformed numeric field");
    TransitionObservation obs{static_cast<int>(*i), static_cast<int>(*k), *dt, static_cast<int>(*y), {}};
    for (int j = 0; j < p; ++j) {
      const auto v = io::parse_double(fields[static_cast<std::size_t>(4 + j)]);
      if (!v) throw ParseError(name, lineno, "malformed covariate");
      obs.x.push_back(*v);
    }
    data.observations.push_back(std::move(obs));
  }
  data.validate();
  return data;
}

}  // namespace pumpcause
