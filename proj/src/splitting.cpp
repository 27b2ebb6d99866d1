#include "switchsplit/splitting.hpp"

#include <cmath>

namespace switchsplit {

LevelSchedule::LevelSchedule(LevelFunction kind, int coord_index,
                             std::vector<double> thresholds, double horizon_T)
    : kind_(kind), coord_index_(coord_index), thresholds_(std::move(thresholds)),
      horizon_T_(horizon_T) {
  if (thresholds_.empty()) throw UsageError("levels: at least one threshold required");
  for (double L : thresholds_)
    if (!std::isfinite(L)) throw UsageError("levels: thresholds must be finite");
  for (std::size_t k = 1; k < thresholds_.size(); ++k)
    if (!(thresholds_[k - 1] < thresholds_[k]))
      throw UsageError("levels: thresholds must be strictly increasing");
  if (kind_ == LevelFunction::Coordinate) {
    if (coord_index_ < 0) throw UsageError("levels: coord_index must be >= 0");
  } else {
    coord_index_ = 0;
    for (double L : thresholds_)
      if (L < 0.0) throw UsageError("levels: norm thresholds must be >= 0");
  }
  if (!(horizon_T_ > 0.0) || !std::isfinite(horizon_T_))
    throw UsageError("levels: horizon must be finite and > 0");
}

double LevelSchedule::threshold(int k) const {
  if (k < 1 || k > levels()) throw UsageError("level index out of range");
  return thresholds_[static_cast<std::size_t>(k - 1)];
}

HittingReport detect_hits(const PathSegment& path, const LevelSchedule& schedule) {
  const int K = path.num_points();
  if (K < 1) throw UsageError("detect_hits: empty path");
  if (path.s != 0.0) throw UsageError("detect_hits: path must start at time 0");
  if (!path.points.allFinite()) throw NumericalError("detect_hits: non-finite path");
  if (schedule.kind() == LevelFunction::Coordinate &&
      schedule.coord_index() >= path.points.rows())
    throw UsageError("detect_hits: coord_index out of range for this path");

  const int n = schedule.levels();
  HittingReport report;
  report.hit_step.assign(static_cast<std::size_t>(n) + 1, std::nullopt);
  report.stop_step.assign(static_cast<std::size_t>(n) + 1, K - 1);
  report.stop_time.assign(static_cast<std::size_t>(n) + 1, path.t);
  report.hit_step[0] = 0;
  report.stop_step[0] = 0;
  report.stop_time[0] = path.s;

  int next = 1;  // lowest level not yet hit
  for (int j = 0; j < K && next <= n; ++j) {
    const double score = schedule.phi(path.points.col(j));
    while (next <= n && score >= schedule.threshold(next)) {
      report.hit_step[static_cast<std::size_t>(next)] = j;
      report.stop_step[static_cast<std::size_t>(next)] = j;
      report.stop_time[static_cast<std::size_t>(next)] = path.time_at(j);
      ++next;
    }
  }

  report.segments.reserve(static_cast<std::size_t>(n) + 1);
  report.segments.push_back(path.slice(0, 0));
  for (int k = 1; k <= n; ++k)
    report.segments.push_back(path.slice(report.stop_step[static_cast<std::size_t>(k - 1)],
                                         report.stop_step[static_cast<std::size_t>(k)]));
  return report;
}

int potential(const PathSegment& segment, int k, const LevelSchedule& schedule) {
  if (k < 0 || k > schedule.levels()) throw UsageError("potential: level out of range");
  if (segment.num_points() < 1) throw UsageError("potential: empty segment");
  if (k == 0) return 1;
  return schedule.phi(segment.points.col(segment.num_points() - 1)) >=
                 schedule.threshold(k)
             ? 1
             : 0;
}

SimplexVector segment_filter_update(const SwitchingModel& model, const SimplexVector& pi_prev,
                                    const PathSegment& segment) {
  if (pi_prev.size() != model.modes())
    throw UsageError("segment_filter_update: filter size mismatch");
  if (segment.num_points() < 1) throw UsageError("segment_filter_update: empty segment");
  if (segment.points.rows() != model.dim())
    throw UsageError("segment_filter_update: dimension mismatch");
  if (!segment.points.allFinite())
    throw NumericalError("segment_filter_update: non-finite segment");

  FilterWorkspace ws;
  ws.resize(model.dim(), model.modes());
  Vector pi = pi_prev.weights();
  Vector x_from(model.dim());
  Vector dx(model.dim());
  for (int j = 0; j + 1 < segment.num_points(); ++j) {
    x_from = segment.points.col(j);
    model.eval_drift_matrix_into(x_from, ws.b);
    model.eval_rates_into(x_from, ws.lambda);
    dx = segment.points.col(j + 1) - x_from;
    filter_update_core(dx, segment.dt(j), pi, ws);
  }
  return SimplexVector::from_projected(std::move(pi));
}

}  // namespace switchsplit
