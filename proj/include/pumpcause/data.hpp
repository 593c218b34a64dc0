#ifndef PUMPCAUSE_DATA_HPP
#define PUMPCAUSE_DATA_HPP

#include <cstddef>
#include <filesystem>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

namespace pumpcause {

inline constexpr int kDefaultStates = 8;

/// Discrete health level, 1 (pristine) .. K (worst, absorbing).
class HealthState {
public:
  HealthState(int value, int n_states = kDefaultStates);
  int value() const { return value_; }
  friend bool operator==(HealthState, HealthState) = default;

private:
  int value_;
};

struct InspectionRecord {
  std::string pump_id;
  long day = 0;
  HealthState state{1};
};

/// Daily measurements for one pump; values[j] is the reading on day first_day + j.
struct CovariateSeries {
  std::string pump_id;
  long first_day = 0;
  std::vector<double> values;

  long last_day() const { return first_day + static_cast<long>(values.size()) - 1; }
  bool covers(long from, long to) const { return from >= first_day && to <= last_day(); }
  /// Arithmetic mean over days [from, to).
  double mean_over(long from, long to) const;
};

struct TransitionObservation {
  int pump_index = 0;
  int state_index = 1;  // k_n in 1..K-1
  double delta_t = 0.0;
  int y = 0;
  std::vector<double> x;

  friend bool operator==(const TransitionObservation&, const TransitionObservation&) = default;
};

struct Dataset {
  std::vector<TransitionObservation> observations;
  int n_pumps = 0;
  int n_states = kDefaultStates;
  int n_covariates = 0;
  std::vector<std::string> pump_ids;  // index -> external id; may be empty

  /// Throws ValidationError if any invariant is violated.
  void validate() const;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

struct TransitionBuild {
  Dataset dataset;
  std::size_t intervals = 0;          // consecutive inspection pairs seen
  std::size_t dropped_decreases = 0;  // repairs
  std::size_t dropped_absorbing = 0;  // start state == K
  std::size_t multi_step_jumps = 0;   // kept as y = 1
};

std::vector<InspectionRecord> parse_inspections(std::istream& in, const std::string& name,
                                                int n_states = kDefaultStates);
std::vector<InspectionRecord> ingest_inspections(const std::filesystem::path& path,
                                                 int n_states = kDefaultStates);

std::vector<CovariateSeries> parse_timeseries(std::istream& in, const std::string& name);
std::vector<CovariateSeries> ingest_timeseries(const std::filesystem::path& path);

/// Distinct pump ids in lexicographic order; this is the pump index order.
std::vector<std::string> pump_order(const std::vector<InspectionRecord>& records);

/**
 * One observation per consecutive inspection pair of each pump.
 *
 * Intervals starting in the absorbing state K are dropped, as are intervals
 * where the state decreases (repairs). A jump of two or more states counts
 * as a single transition out of the start state. The interval covariate is
 * the mean of the daily series over [start, end). Pass an empty covariate
 * list for a model without covariates (p = 0).
 */
TransitionBuild build_transitions(const std::vector<InspectionRecord>& records,
                                  const std::vector<CovariateSeries>& covariates,
                                  int n_states = kDefaultStates);

void write_inspections(std::ostream& out, const std::vector<InspectionRecord>& records);
void write_timeseries(std::ostream& out, const std::vector<CovariateSeries>& series);

/// Header `pump_index,state_index,delta_t,y,x0,...,x{p-1}`.
void write_transitions(std::ostream& out, const Dataset& data);

/// Shape information the transitions file does not carry.
struct DatasetShape {
  int n_pumps = 0;
  int n_states = kDefaultStates;
  std::vector<std::string> pump_ids;
};

Dataset parse_transitions(std::istream& in, const std::string& name, const DatasetShape& shape);

}  // namespace pumpcause

#endif  // PUMPCAUSE_DATA_HPP
