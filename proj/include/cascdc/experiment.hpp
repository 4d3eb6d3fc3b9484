#pragma once

// Monte Carlo sweeps comparing the clustering methods on simulated networks.

#include <cmath>
#include <string>
#include <vector>

#include "cascdc/clustering.hpp"
#include "cascdc/evaluation.hpp"
#include "cascdc/parallel.hpp"
#include "cascdc/rng.hpp"
#include "cascdc/sbm.hpp"

namespace cascdc {

enum class Method { CascDc, DscDc, DscPz, DscCw };

inline std::string method_name(Method m) {
  switch (m) {
    case Method::CascDc: return "CASC-DC";
    case Method::DscDc: return "DSC-DC";
    case Method::DscPz: return "DSC-PZ";
    case Method::DscCw: return "DSC-Cw";
  }
  return "?";
}

inline Method parse_method(const std::string& s) {
  for (Method m : {Method::CascDc, Method::DscDc, Method::DscPz, Method::DscCw}) {
    std::string a = method_name(m), b = s;
    for (char& c : a) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    for (char& c : b) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (a == b) return m;
  }
  throw ConfigError("unknown method '" + s + "' (expected CASC-DC, DSC-DC, DSC-PZ or DSC-Cw)");
}

inline const std::vector<Method>& all_methods() {
  static const std::vector<Method> m{Method::CascDc, Method::DscDc, Method::DscPz, Method::DscCw};
  return m;
}

struct SweepCell {
  int N = 100;
  int T = 10;
  int K = 3;
  int churn = 0;
};

/// N from `lo` to `hi` in steps of `step`, churn floor(sqrt(N)).
inline std::vector<SweepCell> node_sweep(int lo, int hi, int step, int T, int K) {
  std::vector<SweepCell> out;
  for (int n = lo; n <= hi; n += step) out.push_back({n, T, K, static_cast<int>(std::floor(std::sqrt(static_cast<double>(n))))});
  return out;
}

/// Churn levels {0, N/50, N/25, N/20, N/10, N/5, N/4, N/2, N} at fixed N.
inline std::vector<SweepCell> churn_sweep(int N, int T, int K) {
  std::vector<SweepCell> out;
  for (int d : {0, 50, 25, 20, 10, 5, 4, 2, 1}) out.push_back({N, T, K, d == 0 ? 0 : N / d});
  return out;
}

struct SweepSpec {
  std::vector<SweepCell> cells;
  std::vector<Method> methods = all_methods();
  int reps = 100;
  std::uint64_t seed = 1;
  ClusterOptions cluster;  ///< K is taken from each cell
  DegreeMode degree_mode = DegreeMode::Uniform;
  CovariateMode covariate_mode = CovariateMode::UniformNoise;
  int threads = 1;
};

struct CellResult {
  SweepCell cell;
  /// rates[m][rep]: time-averaged misclustering of method m in replicate rep.
  std::vector<std::vector<double>> rates;
  /// sup_rates[m][rep]: worst period.
  std::vector<std::vector<double>> sup_rates;
  std::vector<double> mean, stderr_mean, sup_mean;
};

inline std::vector<double> run_methods(const SimulatedInstance& inst, const std::vector<Method>& methods, const ClusterOptions& opt,
                                       std::vector<double>* sups = nullptr) {
  std::vector<double> out;
  for (Method m : methods) {
    MembershipSeries z;
    switch (m) {
      case Method::CascDc: z = casc_dc(inst.network, inst.covariates, opt).membership; break;
      case Method::DscDc: z = dsc_dc_baseline(inst.network, opt).membership; break;
      case Method::DscPz: z = dsc_pz_baseline(inst.network, opt).membership; break;
      case Method::DscCw: z = dsc_cw_baseline(inst.covariates, inst.network.periods(), opt).membership; break;
    }
    const MisclusteringRates r = misclustering_rate(z, inst.membership);
    out.push_back(r.mean);
    if (sups) sups->push_back(r.sup);
  }
  return out;
}

/// Every (cell, replicate) pair draws from its own seed stream, so results do
/// not depend on the thread count.
inline std::vector<CellResult> run_sweep(const SweepSpec& spec) {
  if (spec.reps < 1) throw ConfigError("sweep: reps must be positive");
  if (spec.methods.empty()) throw ConfigError("sweep: no methods selected");
  const SeedStream root(spec.seed);
  const std::size_t M = spec.methods.size();
  std::vector<CellResult> out(spec.cells.size());
  const std::size_t jobs = spec.cells.size() * static_cast<std::size_t>(spec.reps);
  for (std::size_t c = 0; c < spec.cells.size(); ++c) {
    out[c].cell = spec.cells[c];
    out[c].rates.assign(M, std::vector<double>(static_cast<std::size_t>(spec.reps)));
    out[c].sup_rates.assign(M, std::vector<double>(static_cast<std::size_t>(spec.reps)));
  }
  parallel_for(jobs, spec.threads, [&](std::size_t job) {
    const std::size_t c = job / static_cast<std::size_t>(spec.reps);
    const std::size_t r = job % static_cast<std::size_t>(spec.reps);
    const SweepCell& cell = spec.cells[c];
    const SeedStream stream = root.child("cell", c).child("rep", r);
    SimConfig cfg;
    cfg.N = cell.N;
    cfg.T = cell.T;
    cfg.K = cell.K;
    cfg.churn = cell.churn;
    cfg.degree_mode = spec.degree_mode;
    cfg.covariate_mode = spec.covariate_mode;
    cfg.seed = stream.child("simulate").seed();
    const BlockProbabilitySeries B = cell.K == 3 ? BlockProbabilitySeries::reference_ramp(cell.T)
                                                 : BlockProbabilitySeries::linear_ramp(Matrix::Identity(cell.K, cell.K) * 0.6 +
                                                                                           Matrix::Constant(cell.K, cell.K, 0.2),
                                                                                       cell.T);
    const SimulatedInstance inst = sample_dynamic_dcbm(cfg, B);
    ClusterOptions opt = spec.cluster;
    opt.K = cell.K;
    opt.seed = stream.child("cluster").seed();
    std::vector<double> sups;
    const std::vector<double> rates = run_methods(inst, spec.methods, opt, &sups);
    for (std::size_t m = 0; m < M; ++m) {
      out[c].rates[m][r] = rates[m];
      out[c].sup_rates[m][r] = sups[m];
    }
  });
  for (CellResult& cr : out) {
    for (std::size_t m = 0; m < M; ++m) {
      const auto& v = cr.rates[m];
      double mean = 0.0, sup = 0.0;
      for (std::size_t r = 0; r < v.size(); ++r) {
        mean += v[r];
        sup += cr.sup_rates[m][r];
      }
      mean /= static_cast<double>(v.size());
      double var = 0.0;
      for (double x : v) var += (x - mean) * (x - mean);
      const double se = v.size() > 1 ? std::sqrt(var / static_cast<double>(v.size() - 1) / static_cast<double>(v.size())) : 0.0;
      cr.mean.push_back(mean);
      cr.stderr_mean.push_back(se);
      cr.sup_mean.push_back(sup / static_cast<double>(v.size()));
    }
  }
  return out;
}

/// Spearman rank correlation with average ranks for ties.
inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw DimensionError("spearman: need two equal-length series");
  auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
      std::size_t j = i;
      while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
      for (std::size_t k = i; k <= j; ++k) r[idx[k]] = 0.5 * static_cast<double>(i + j) + 1.0;
      i = j + 1;
    }
    return r;
  };
  const std::vector<double> rx = ranks(x), ry = ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n, my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace cascdc
