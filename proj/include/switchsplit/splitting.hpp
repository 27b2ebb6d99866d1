#pragma once

#include <optional>
#include <vector>

#include "switchsplit/model.hpp"
#include "switchsplit/simulate.hpp"

namespace switchsplit {

enum class LevelFunction { Coordinate, EuclideanNorm };

// Nested target sets described by a scalar score phi and increasing
// thresholds L_1 < ... < L_n: set k is { x : phi(x) >= L_k }. Level
// indices are 1-based throughout so that index 0 can denote the trivial
// whole-space set every path starts in.
class LevelSchedule {
 public:
  LevelSchedule(LevelFunction kind, int coord_index, std::vector<double> thresholds,
                double horizon_T);

  double phi(const Eigen::Ref<const Vector>& x) const {
    return kind_ == LevelFunction::Coordinate ? x[coord_index_] : x.norm();
  }

  LevelFunction kind() const { return kind_; }
  int coord_index() const { return coord_index_; }
  int levels() const { return static_cast<int>(thresholds_.size()); }
  double threshold(int k) const;  // k in [1, levels()]
  const std::vector<double>& thresholds() const { return thresholds_; }
  double horizon() const { return horizon_T_; }

 private:
  LevelFunction kind_;
  int coord_index_;
  std::vector<double> thresholds_;
  double horizon_T_;
};

// First-entry analysis of one path against a schedule with n levels. All
// arrays have n + 1 entries indexed by level; entry 0 describes the
// trivial level (hit at the start by definition). Entries for levels never
// reached hold an empty hit and the truncation at the path's end.
struct HittingReport {
  std::vector<std::optional<int>> hit_step;  // grid index of first entry into set k
  std::vector<int> stop_step;                // hit index, or last index if never hit
  std::vector<double> stop_time;             // grid time of stop_step
  std::vector<PathSegment> segments;         // piece between stops k-1 and k

  int levels() const { return static_cast<int>(hit_step.size()) - 1; }
  bool reached(int k) const { return hit_step[static_cast<std::size_t>(k)].has_value(); }
};

// Scan the grid points of `path` (which must start at time 0) and record,
// for each level, the first grid index whose point lies in the level's
// set. Detection has grid resolution: excursions between grid points are
// not seen. Because the sets are nested and scanned in threshold order,
// recorded hit times are nondecreasing in the level, and a point entering
// several sets at once hits them all at that index.
HittingReport detect_hits(const PathSegment& path, const LevelSchedule& schedule);

// Potential of a path piece for level k: 1 if the piece's endpoint lies in
// set k, else 0. Level 0 is the whole space, so always 1.
int potential(const PathSegment& segment, int k, const LevelSchedule& schedule);

// Run the filter across every increment of a path piece starting from
// pi_prev. Stepping a path and filtering it afterwards piece by piece
// commute bit-exactly: this replays the same increments with the same
// step lengths through the same update as the inline propagation.
SimplexVector segment_filter_update(const SwitchingModel& model, const SimplexVector& pi_prev,
                                    const PathSegment& segment);

}  // namespace switchsplit
