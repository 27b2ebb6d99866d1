#include "switchsplit/report.hpp"

#include <cmath>
#include <cstdio>

#include "switchsplit/simulate.hpp"

namespace switchsplit {

std::string format_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

namespace {

nlohmann::ordered_json result_to_json(const SplittingResult& res, int r) {
  nlohmann::ordered_json row;
  row["replicate"] = r;
  row["seed"] = res.seed;
  row["estimate"] = res.estimate;
  // -inf and NaN have no JSON literal; nlohmann serializes them as null.
  row["log_estimate"] = res.log_estimate;
  nlohmann::json p = nlohmann::json::array();
  for (double v : res.p_hat) {
    if (std::isnan(v))
      p.push_back(nullptr);
    else
      p.push_back(v);
  }
  row["p_hat"] = p;
  if (res.extinct_at)
    row["extinct_at"] = *res.extinct_at;
  else
    row["extinct_at"] = nullptr;
  return row;
}

}  // namespace

void write_results_csv(std::ostream& out, const ComparisonReport& report, int n_levels) {
  out << "scheme,dynamics,replicate,seed,estimate,log_estimate";
  for (int k = 1; k <= n_levels; ++k) out << ",p_hat_" << k;
  out << ",extinct_at\n";
  for (const CellStats& cell : report.cells) {
    for (std::size_t r = 0; r < cell.results.size(); ++r) {
      const SplittingResult& res = cell.results[r];
      out << scheme_name(cell.scheme) << ',' << dynamics_name(cell.dynamics) << ',' << r
          << ',' << res.seed << ',' << format_double(res.estimate) << ','
          << format_double(res.log_estimate);
      for (double v : res.p_hat) {
        out << ',';
        if (!std::isnan(v)) out << format_double(v);
      }
      out << ',';
      if (res.extinct_at) out << *res.extinct_at;
      out << '\n';
    }
  }
  for (const CellStats& cell : report.cells) {
    out << "# summary scheme=" << scheme_name(cell.scheme)
        << " dynamics=" << dynamics_name(cell.dynamics) << " replicates=" << cell.replicates
        << " mean=" << format_double(cell.mean)
        << " variance=" << format_double(cell.variance)
        << " relative_variance=" << format_double(cell.relative_variance) << '\n';
  }
}

void write_results_json(std::ostream& out, const ComparisonReport& report, int n_levels) {
  nlohmann::ordered_json root;
  root["n_levels"] = n_levels;
  nlohmann::ordered_json cells = nlohmann::json::array();
  for (const CellStats& cell : report.cells) {
    nlohmann::ordered_json c;
    c["scheme"] = scheme_name(cell.scheme);
    c["dynamics"] = dynamics_name(cell.dynamics);
    c["replicates"] = cell.replicates;
    c["mean"] = cell.mean;
    c["variance"] = cell.variance;
    c["relative_variance"] = cell.relative_variance;
    nlohmann::ordered_json rows = nlohmann::json::array();
    for (std::size_t r = 0; r < cell.results.size(); ++r)
      rows.push_back(result_to_json(cell.results[r], static_cast<int>(r)));
    c["results"] = rows;
    cells.push_back(c);
  }
  root["cells"] = cells;
  out << root.dump(2) << '\n';
}

void write_survivor_paths_csv(std::ostream& out, const ComparisonReport& report, int dim,
                              double step_h, double horizon_T) {
  const int n_steps = grid_steps(horizon_T, step_h);
  out << "scheme,dynamics,replicate,particle,point,time";
  for (int i = 1; i <= dim; ++i) out << ",x_" << i;
  out << '\n';
  for (const CellStats& cell : report.cells) {
    for (std::size_t r = 0; r < cell.results.size(); ++r) {
      const SplittingResult& res = cell.results[r];
      for (std::size_t p = 0; p < res.survivor_paths.size(); ++p) {
        const Matrix& path = res.survivor_paths[p];
        for (Eigen::Index k = 0; k < path.cols(); ++k) {
          const double t = k == n_steps ? horizon_T : static_cast<double>(k) * step_h;
          out << scheme_name(cell.scheme) << ',' << dynamics_name(cell.dynamics) << ','
              << r << ',' << p << ',' << k << ',' << format_double(t);
          for (Eigen::Index i = 0; i < path.rows(); ++i)
            out << ',' << format_double(path(i, k));
          out << '\n';
        }
      }
    }
  }
}

}  // namespace switchsplit
