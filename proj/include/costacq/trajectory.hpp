#pragma once

#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "costacq/cost.hpp"
#include "costacq/csv.hpp"

namespace costacq {

// One purchase: `episode_id,step,feature_index,cost,spent_after`.
struct TrajectoryStep {
  std::size_t episode_id = 0;
  std::size_t step = 0;
  std::size_t feature_index = 0;
  Cost cost;
  Cost spent_after;

  friend bool operator==(const TrajectoryStep&, const TrajectoryStep&) = default;
};

inline void write_trajectory_header(std::ostream& out) {
  out << "episode_id,step,feature_index,cost,spent_after\n";
}

inline void write_trajectory_step(std::ostream& out, const TrajectoryStep& s) {
  out << s.episode_id << ',' << s.step << ',' << s.feature_index << ',' << s.cost.str() << ','
      << s.spent_after.str() << '\n';
}

inline std::vector<TrajectoryStep> read_trajectory(std::istream& in) {
  const auto table = csv::parse(in, "trajectory");
  const auto c_ep = table.column("episode_id"), c_step = table.column("step"),
             c_feat = table.column("feature_index"), c_cost = table.column("cost"),
             c_after = table.column("spent_after");
  std::vector<TrajectoryStep> out;
  for (const auto& row : table.rows) {
    out.push_back({static_cast<std::size_t>(csv::parse_int(row[c_ep])),
                   static_cast<std::size_t>(csv::parse_int(row[c_step])),
                   static_cast<std::size_t>(csv::parse_int(row[c_feat])), Cost::parse(row[c_cost]),
                   Cost::parse(row[c_after])});
  }
  return out;
}

// Sums logged costs per episode. Fails if a logged running total disagrees.
inline std::map<std::size_t, Cost> replay_costs(const std::vector<TrajectoryStep>& log) {
  std::map<std::size_t, Cost> totals;
  for (const auto& s : log) {
    auto& total = totals[s.episode_id];
    total += s.cost;
    if (total != s.spent_after) {
      fail(ErrorCode::parse_error, "episode " + std::to_string(s.episode_id) + " step " +
                                       std::to_string(s.step) + ": running total mismatch");
    }
  }
  return totals;
}

}  // namespace costacq
