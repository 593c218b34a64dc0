#include "pumpcause/grouping.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "pumpcause/errors.hpp"
#include "pumpcause/io.hpp"

namespace pumpcause {

std::string_view group_name(Group g) { return g == Group::positive ? "positive" : "negative"; }

std::vector<GroupAssignment> assign_groups(const std::vector<RandomEffectEstimate>& estimates,
                                           const std::vector<std::string>& pump_ids) {
  std::vector<GroupAssignment> out;
  out.reserve(estimates.size());
  for (const auto& e : estimates) {
    GroupAssignment a;
    a.pump_index = e.pump_index;
    if (pump_ids.empty()) {
      a.pump_id = std::to_string(e.pump_index);
    } else {
      if (e.pump_index < 0 || e.pump_index >= static_cast<int>(pump_ids.size()))
        throw ValidationError("random effect estimate references unknown pump index");
      a.pump_id = pump_ids[static_cast<std::size_t>(e.pump_index)];
    }
    a.u_mean = e.u_mean;
    a.group = e.u_mean > 0.0 ? Group::positive : Group::negative;
    out.push_back(std::move(a));
  }
  return out;
}

GroupSplit build_group_datasets(const FeatureMatrix& features, const std::vector<GroupAssignment>& assignments) {
  std::map<std::string, Eigen::Index> feature_row;
  for (std::size_t i = 0; i < features.pump_ids.size(); ++i)
    if (!feature_row.emplace(features.pump_ids[i], static_cast<Eigen::Index>(i)).second)
      throw ValidationError("duplicate pump " + features.pump_ids[i] + " in feature matrix");

  std::map<std::string, const GroupAssignment*> by_id;
  for (const auto& a : assignments) {
    if (!by_id.emplace(a.pump_id, &a).second) throw ValidationError("duplicate pump " + a.pump_id + " in assignments");
    if (!feature_row.contains(a.pump_id)) throw ValidationError("pump " + a.pump_id + " has no feature row");
  }
  for (const auto& [id, row] : feature_row)
    if (!by_id.contains(id)) throw ValidationError("pump " + id + " has features but no random effect estimate");

  GroupSplit split;
  split.positive.group = Group::positive;
  split.negative.group = Group::negative;
  for (auto* g : {&split.positive, &split.negative}) {
    g->feature_names = features.names;
    std::vector<const GroupAssignment*> members;
    for (const auto& [id, a] : by_id)  // map order: sorted by pump id
      if (a->group == g->group) members.push_back(a);
    const auto n = static_cast<Eigen::Index>(members.size());
    g->features.resize(n, features.values.cols());
    g->target.resize(n);
    for (Eigen::Index r = 0; r < n; ++r) {
      const auto* a = members[static_cast<std::size_t>(r)];
      g->pump_ids.push_back(a->pump_id);
      g->features.row(r) = features.values.row(feature_row.at(a->pump_id));
      g->target[r] = a->u_mean;
    }

    GroupSummary s;
    s.group = g->group;
    s.count = g->members();
    s.share = assignments.empty() ? 0.0 : static_cast<double>(s.count) / static_cast<double>(assignments.size());
    if (s.count > 0) {
      s.u_min = g->target.minCoeff();
      s.u_max = g->target.maxCoeff();
    }
    if (s.count == 0)
      s.warning = "group is empty";
    else if (!g->sufficient_for_discovery())
      s.warning = "insufficient for causal discovery (" + std::to_string(s.count) + " members, need " +
                  std::to_string(g->feature_names.size() + 2) + ")";
    split.summaries.push_back(std::move(s));
  }
  return split;
}

void write_groups(std::ostream& out, const std::vector<GroupAssignment>& assignments) {
  out << "pump_id,u_mean,group\n";
  for (const auto& a : assignments)
    out << a.pump_id << ',' << io::format_double(a.u_mean) << ',' << group_name(a.group) << '\n';
}

std::vector<GroupAssignment> parse_groups(std::istream& in, const std::string& name) {
  io::LineReader reader(in, name);
  io::expect_header(reader, "pump_id,u_mean,group");
  std::vector<GroupAssignment> out;
  std::string line;
  while (reader.next(line)) {
    if (io::trim(line).empty()) continue;
    const auto fields = io::split_csv(line);
    if (fields.size() != 3) throw ParseError(name, reader.line_number(), "expected 3 fields");
    const auto u = io::parse_double(fields[1]);
    if (!u || !std::isfinite(*u)) throw ParseError(name, reader.line_number(), "malformed u_mean");
    GroupAssignment a;
    a.pump_index = static_cast<int>(out.size());
    a.pump_id = std::string(fields[0]);
    a.u_mean = *u;
    if (fields[2] == "positive")
      a.group = Group::positive;
    else if (fields[2] == "negative")
      a.group = Group::negative;
    else
      throw ParseError(name, reader.line_number(), "group must be positive or negative");
    if ((a.group == Group::positive) != (a.u_mean > 0.0))
      throw ParseError(name, reader.line_number(), "group label contradicts the sign of u_mean");
    out.push_back(std::move(a));
  }
  return out;
}

}  // namespace pumpcause
