#include <doctest.h>

#include <cmath>
#include <cstring>
#include <limits>

#include "switchsplit/rng.hpp"
#include "switchsplit/splitting.hpp"

using namespace switchsplit;

namespace {

Vector vec1(double a) {
  Vector v(1);
  v << a;
  return v;
}

Vector vec2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

bool bits_equal(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

// x(t) = t sampled on the grid t = 0, 0.1, ..., 1.0.
PathSegment ramp_path() {
  PathSegment p;
  p.s = 0.0;
  p.t = 1.0;
  p.h = 0.1;
  p.final_dt = 0.1;
  p.points.resize(1, 11);
  for (int j = 0; j <= 10; ++j) p.points(0, j) = 0.1 * j;
  return p;
}

SwitchingModel two_mode() {
  DriftSpec drift;
  drift.family = DriftFamily::Constant;
  drift.c = {vec1(-0.5), vec1(1.5)};
  RateSpec rates;
  rates.family = RateFamily::Constant;
  rates.lambda_bar = Matrix(2, 2);
  rates.lambda_bar << 0.0, 0.1, 1.0, 0.0;
  InitialLaw init;
  init.x0 = vec1(0.0);
  init.scale0 = 0.0;
  init.theta_probs = vec2(0.9, 0.1);
  return SwitchingModel(1, 2, drift, rates, init);
}

}  // namespace

TEST_CASE("hit detection on a deterministic ramp") {
  const PathSegment path = ramp_path();
  const LevelSchedule schedule(LevelFunction::Coordinate, 0, {0.25, 0.45}, 1.0);
  const HittingReport rep = detect_hits(path, schedule);

  CHECK(rep.levels() == 2);
  CHECK(rep.hit_step[0] == 0);
  CHECK(rep.stop_time[0] == 0.0);

  REQUIRE(rep.reached(1));
  REQUIRE(rep.reached(2));
  CHECK(*rep.hit_step[1] == 3);  // x = 0.3 is the first point at or above 0.25
  CHECK(*rep.hit_step[2] == 5);
  CHECK(rep.stop_step[1] == 3);
  CHECK(rep.stop_step[2] == 5);
  CHECK(rep.stop_time[1] == doctest::Approx(0.3));
  CHECK(rep.stop_time[2] == doctest::Approx(0.5));

  REQUIRE(rep.segments.size() == 3);
  CHECK(rep.segments[0].num_points() == 1);
  CHECK(rep.segments[1].num_points() == 4);
  CHECK(rep.segments[1].s == 0.0);
  CHECK(rep.segments[2].num_points() == 3);
  CHECK(rep.segments[2].s == doctest::Approx(0.3));
  CHECK(rep.segments[2].t == doctest::Approx(0.5));

  CHECK(potential(rep.segments[0], 0, schedule) == 1);
  CHECK(potential(rep.segments[1], 1, schedule) == 1);
  CHECK(potential(rep.segments[2], 2, schedule) == 1);
  // The first piece ends below the second threshold.
  CHECK(potential(rep.segments[1], 2, schedule) == 0);
}

TEST_CASE("unreached levels truncate at the path end") {
  const PathSegment path = ramp_path();
  const LevelSchedule schedule(LevelFunction::Coordinate, 0, {0.25, 2.0}, 1.0);
  const HittingReport rep = detect_hits(path, schedule);

  CHECK(rep.reached(1));
  CHECK_FALSE(rep.reached(2));
  CHECK(rep.stop_step[2] == 10);
  CHECK(rep.stop_time[2] == 1.0);
  CHECK(rep.segments[2].t == 1.0);
  CHECK(potential(rep.segments[2], 2, schedule) == 0);
}

TEST_CASE("a start state inside the first set hits at index zero") {
  const PathSegment path = ramp_path();
  const LevelSchedule schedule(LevelFunction::Coordinate, 0, {-0.5, 0.45}, 1.0);
  const HittingReport rep = detect_hits(path, schedule);

  REQUIRE(rep.reached(1));
  CHECK(*rep.hit_step[1] == 0);
  CHECK(rep.segments[1].num_points() == 1);
  CHECK(potential(rep.segments[1], 1, schedule) == 1);
  CHECK(*rep.hit_step[2] == 5);
}

TEST_CASE("norm levels score by distance from the origin") {
  PathSegment p;
  p.s = 0.0;
  p.t = 0.2;
  p.h = 0.1;
  p.final_dt = 0.1;
  p.points.resize(2, 3);
  p.points.col(0) = vec2(0.0, 0.0);
  p.points.col(1) = vec2(0.6, 0.8);  // norm 1
  p.points.col(2) = vec2(3.0, 4.0);  // norm 5

  const LevelSchedule schedule(LevelFunction::EuclideanNorm, 7, {0.9, 4.5}, 0.2);
  CHECK(schedule.coord_index() == 0);  // ignored for norm levels
  const HittingReport rep = detect_hits(p, schedule);
  CHECK(*rep.hit_step[1] == 1);
  CHECK(*rep.hit_step[2] == 2);
}

TEST_CASE("schedule validation") {
  using LS = LevelSchedule;
  CHECK_THROWS_AS(LS(LevelFunction::Coordinate, 0, {}, 1.0), UsageError);
  CHECK_THROWS_AS(LS(LevelFunction::Coordinate, 0, {1.0, 1.0}, 1.0), UsageError);
  CHECK_THROWS_AS(LS(LevelFunction::Coordinate, 0, {2.0, 1.0}, 1.0), UsageError);
  CHECK_THROWS_AS(LS(LevelFunction::Coordinate, 0,
                     {std::numeric_limits<double>::infinity()}, 1.0),
                  UsageError);
  CHECK_THROWS_AS(LS(LevelFunction::Coordinate, -1, {1.0}, 1.0), UsageError);
  CHECK_THROWS_AS(LS(LevelFunction::EuclideanNorm, 0, {-0.5, 1.0}, 1.0), UsageError);
  CHECK_THROWS_AS(LS(LevelFunction::Coordinate, 0, {1.0}, 0.0), UsageError);
  CHECK_THROWS_AS(LS(LevelFunction::Coordinate, 0, {1.0}, -2.0), UsageError);

  const LS ok(LevelFunction::Coordinate, 0, {1.0, 2.0}, 1.0);
  CHECK(ok.threshold(1) == 1.0);
  CHECK(ok.threshold(2) == 2.0);
  CHECK_THROWS_AS(ok.threshold(0), UsageError);
  CHECK_THROWS_AS(ok.threshold(3), UsageError);
}

TEST_CASE("hit detection input checks") {
  const LevelSchedule schedule(LevelFunction::Coordinate, 0, {0.5}, 1.0);

  PathSegment late = ramp_path();
  late.s = 0.5;
  CHECK_THROWS_AS(detect_hits(late, schedule), UsageError);

  PathSegment empty;
  CHECK_THROWS_AS(detect_hits(empty, schedule), UsageError);

  PathSegment nan = ramp_path();
  nan.points(0, 4) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(detect_hits(nan, schedule), NumericalError);

  const LevelSchedule wide(LevelFunction::Coordinate, 3, {0.5}, 1.0);
  CHECK_THROWS_AS(detect_hits(ramp_path(), wide), UsageError);

  CHECK_THROWS_AS(potential(empty, 0, schedule), UsageError);
  CHECK_THROWS_AS(potential(ramp_path(), 2, schedule), UsageError);
  CHECK_THROWS_AS(potential(ramp_path(), -1, schedule), UsageError);
}

TEST_CASE("nested sets give nondecreasing hit indices") {
  const SwitchingModel model = two_mode();
  const LevelSchedule schedule(LevelFunction::Coordinate, 0, {0.3, 0.6, 0.9}, 1.0);
  for (int i = 0; i < 200; ++i) {
    RngStream rng(derive_seed(5150, static_cast<std::uint64_t>(i)));
    const JointTrajectory traj = simulate_path_joint(model, 0.01, 1.0, rng);
    const HittingReport rep = detect_hits(traj.path, schedule);
    for (int k = 1; k <= 3; ++k) {
      CHECK(rep.stop_step[k] >= rep.stop_step[k - 1]);
      if (rep.reached(k) && k > 1) CHECK(rep.reached(k - 1));
      if (rep.reached(k))
        CHECK(schedule.phi(traj.path.points.col(*rep.hit_step[k])) >=
              schedule.threshold(k));
      // No earlier grid point crosses the threshold.
      const int first = rep.reached(k) ? *rep.hit_step[k] : traj.path.num_points();
      for (int j = 0; j < first; ++j)
        CHECK(schedule.phi(traj.path.points.col(j)) < schedule.threshold(k));
    }
  }
}

TEST_CASE("filtering segment by segment equals filtering the whole path") {
  const SwitchingModel model = two_mode();
  const LevelSchedule schedule(LevelFunction::Coordinate, 0, {0.2, 0.5}, 1.0);
  for (int i = 0; i < 20; ++i) {
    RngStream rng(derive_seed(5151, static_cast<std::uint64_t>(i)));
    const MarginalTrajectory traj = simulate_path_marginal(model, 0.01, 1.0, rng);
    const HittingReport rep = detect_hits(traj.path, schedule);

    SimplexVector pi = SimplexVector::from_probabilities(model.initial().theta_probs);
    for (std::size_t k = 0; k < rep.segments.size(); ++k) {
      pi = segment_filter_update(model, pi, rep.segments[k]);
      const int col = rep.stop_step[k];
      for (int r = 0; r < 2; ++r) REQUIRE(bits_equal(pi[r], traj.filters(r, col)));
    }

    const SimplexVector whole = segment_filter_update(
        model, SimplexVector::from_probabilities(model.initial().theta_probs), traj.path);
    for (int r = 0; r < 2; ++r)
      CHECK(bits_equal(whole[r], traj.filters(r, traj.path.num_points() - 1)));
  }
}

TEST_CASE("segment filter update input checks") {
  const SwitchingModel model = two_mode();
  const SimplexVector pi = SimplexVector::uniform(2);

  PathSegment empty;
  CHECK_THROWS_AS(segment_filter_update(model, pi, empty), UsageError);

  CHECK_THROWS_AS(segment_filter_update(model, SimplexVector::uniform(3), ramp_path()),
                  UsageError);

  PathSegment wide = ramp_path();
  wide.points.resize(2, 3);
  wide.points.setZero();
  CHECK_THROWS_AS(segment_filter_update(model, pi, wide), UsageError);

  PathSegment nan = ramp_path();
  nan.points(0, 2) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(segment_filter_update(model, pi, nan), NumericalError);

  // A single-point segment applies no increments.
  const PathSegment point = ramp_path().slice(4, 4);
  const SimplexVector same = segment_filter_update(model, pi, point);
  CHECK(bits_equal(same[0], pi[0]));
  CHECK(bits_equal(same[1], pi[1]));
}
