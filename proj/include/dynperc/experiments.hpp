#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <mutex>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "dynperc/errors.hpp"
#include "dynperc/sim.hpp"
#include "dynperc/stats.hpp"

namespace dynperc {

// Monte Carlo orchestration. Replication r of an experiment with base seed s
// always runs on the RNG stream seeded replication_seed(s, r), and distinct
// sub-experiments of one report take distinct lane tags through the same map,
// so every emitted statistic is a pure function of the configuration and base
// seed, independent of worker count and scheduling order.

/// Run fn(rep) for rep in [0, reps) on up to `workers` threads. The first
/// failure (smallest replication index) is rethrown after all threads join,
/// annotated with the replication.
template <typename Fn>
void parallel_for_reps(std::uint64_t reps, int workers, Fn&& fn) {
  if (workers < 1) workers = 1;
  const std::uint64_t nthreads =
      std::min<std::uint64_t>(std::uint64_t(workers), reps ? reps : 1);
  if (nthreads <= 1) {
    for (std::uint64_t rep = 0; rep < reps; ++rep) {
      try {
        fn(rep);
      } catch (const std::exception& e) {
        throw InternalError("replication " + std::to_string(rep) + ": " +
                            e.what());
      }
    }
    return;
  }

  std::atomic<std::uint64_t> next{0};
  std::mutex fail_mutex;
  std::uint64_t fail_rep = ~std::uint64_t{0};
  std::string fail_what;

  auto body = [&] {
    for (;;) {
      const std::uint64_t rep = next.fetch_add(1);
      if (rep >= reps) return;
      try {
        fn(rep);
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(fail_mutex);
        if (rep < fail_rep) {
          fail_rep = rep;
          fail_what = e.what();
        }
      }
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(std::size_t(nthreads));
  for (std::uint64_t i = 0; i < nthreads; ++i) pool.emplace_back(body);
  for (auto& t : pool) t.join();
  if (fail_rep != ~std::uint64_t{0})
    throw InternalError("replication " + std::to_string(fail_rep) + ": " +
                        fail_what);
}

struct McRow {
  std::uint64_t rep;
  std::uint64_t seed;
  double elapsed;
  std::uint64_t n_events;
  std::uint64_t n_jumps;
};

struct McResult {
  EstimateRecord estimate;
  std::vector<double> samples;  ///< elapsed, in replication order
  std::vector<McRow> rows;
};

/// reps independent replications of `base` with per-replication derived
/// seeds; estimates over elapsed times.
inline McResult run_mc(const SimConfig& base, const StopCondition& stop,
                       std::uint64_t reps, int workers,
                       const std::string& label = "elapsed") {
  if (reps < 2) throw ConfigError("reps", "need at least 2 replications");
  base.validate();
  validate_stop(stop, base);
  const TorusLattice lattice(base.d, base.n);

  McResult out;
  out.samples.resize(reps);
  out.rows.resize(reps);
  parallel_for_reps(reps, workers, [&](std::uint64_t rep) {
    SimConfig cfg = base;
    cfg.seed = replication_seed(base.seed, rep);
    SimState sim(lattice, cfg);
    const RunResult r = run_until(sim, stop);
    out.samples[rep] = r.elapsed;
    out.rows[rep] = {rep, cfg.seed, r.elapsed, r.n_events, r.n_jumps};
  });
  out.estimate = EstimateRecord::from_samples(label, out.samples);
  return out;
}

// ---------------------------------------------------------------------------
// presets

/// Default edge-opening probabilities, safely below the bond-percolation
/// thresholds (p_c(1)=1, p_c(2)=1/2, p_c(3) ~ 0.2488).
inline double default_p(int d) {
  if (d <= 1) return 0.4;
  if (d == 2) return 0.3;
  return 0.15;
}

/// Desk-scale side-length grids per dimension.
inline std::vector<int> preset_grid(int d) {
  switch (d) {
    case 1: return {8, 16, 32, 64};
    case 2: return {8, 16, 24, 32};
    case 3: return {6, 8, 12, 16};
    default:
      throw ConfigError("d", "no preset grid for d > 3");
  }
}

/// All-closed explicit configuration: the adversarial start used for
/// worst-case cover experiments.
inline InitialLaw all_closed_law(const TorusLattice& lattice) {
  return InitialLaw::explicit_config(
      std::vector<std::uint8_t>(lattice.edge_count(), 0));
}

// ---------------------------------------------------------------------------
// scaling bands

enum class Normalizer { N2OverMu, N2Log2OverMu, NdLogNOverMu, NdOverMu };

inline const char* to_string(Normalizer f) {
  switch (f) {
    case Normalizer::N2OverMu: return "n2_over_mu";
    case Normalizer::N2Log2OverMu: return "n2_log2n_over_mu";
    case Normalizer::NdLogNOverMu: return "nd_logn_over_mu";
    case Normalizer::NdOverMu: return "nd_over_mu";
  }
  return "?";
}

inline Normalizer cover_normalizer(int d) {
  if (d == 1) return Normalizer::N2OverMu;
  if (d == 2) return Normalizer::N2Log2OverMu;
  return Normalizer::NdLogNOverMu;
}

inline Normalizer hitting_normalizer(int d) {
  if (d == 1) return Normalizer::N2OverMu;
  return Normalizer::NdOverMu;
}

inline double normalizer_value(Normalizer f, int d, double mu, int n) {
  const double nd = std::pow(double(n), double(d));
  const double ln = std::log(double(n));
  switch (f) {
    case Normalizer::N2OverMu: return double(n) * double(n) / mu;
    case Normalizer::N2Log2OverMu: return double(n) * double(n) * ln * ln / mu;
    case Normalizer::NdLogNOverMu: return nd * ln / mu;
    case Normalizer::NdOverMu: return nd / mu;
  }
  return 1.0;
}

struct ScalingBand {
  std::vector<std::pair<int, double>> normalized;  ///< (n, mean / normalizer)
  double band_ratio = 0.0;                         ///< max/min
};

/// Divide each mean by the normalizer at its n; the band ratio is the
/// empirical stand-in for the theorems' two-sided constant bounds.
inline ScalingBand scaling_band(
    std::span<const std::pair<int, EstimateRecord>> series, Normalizer f,
    int d, double mu) {
  std::vector<int> ns;
  for (const auto& [n, est] : series) ns.push_back(n);
  std::sort(ns.begin(), ns.end());
  ns.erase(std::unique(ns.begin(), ns.end()), ns.end());
  if (ns.size() < 3)
    throw ConfigError("series", "need at least 3 distinct n");

  ScalingBand band;
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (const auto& [n, est] : series) {
    if (!(est.mean > 0.0))
      throw ConfigError("series", "means must be positive");
    const double v = est.mean / normalizer_value(f, d, mu, n);
    band.normalized.emplace_back(n, v);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  band.band_ratio = hi / lo;
  return band;
}

// ---------------------------------------------------------------------------
// lazy-representation validation

struct ModeAgreement {
  double tv = 0.0;
  double threshold = 0.02;
  bool pass = false;
  std::uint64_t reps_each = 0;
  std::vector<std::uint64_t> counts_a;
  std::vector<std::uint64_t> counts_b;
};

inline double tv_distance_counts(const std::vector<std::uint64_t>& a,
                                 const std::vector<std::uint64_t>& b,
                                 std::uint64_t reps_a, std::uint64_t reps_b) {
  double tv = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    tv += std::fabs(double(a[i]) / double(reps_a) -
                    double(b[i]) / double(reps_b));
  return 0.5 * tv;
}

/// Empirical law of the walker's position at time T.
inline std::vector<std::uint64_t> position_histogram(
    const SimConfig& base, double T, std::uint64_t reps, int workers,
    Environment::Fault fault = Environment::Fault::None) {
  base.validate();
  const TorusLattice lattice(base.d, base.n);
  std::vector<VertexId> final_pos(reps);
  parallel_for_reps(reps, workers, [&](std::uint64_t rep) {
    SimConfig cfg = base;
    cfg.seed = replication_seed(base.seed, rep);
    SimState sim(lattice, cfg);
    sim.env().inject_fault(fault);
    run_until(sim, StopCondition::time_limit(T));
    final_pos[rep] = sim.walker();
  });
  std::vector<std::uint64_t> counts(lattice.vertex_count(), 0);
  for (const VertexId v : final_pos) ++counts[v];
  return counts;
}

/// Lazy-mode soundness: the walker's law at time T under the lazy
/// representation must match the eager (fully materialized) one. Small
/// instances only; the check is a total-variation test between the two
/// empirical distributions on independent streams.
inline ModeAgreement validate_modes(const SimConfig& base, double T,
                                    std::uint64_t reps, int workers,
                                    double threshold = 0.02) {
  if (base.d != 1) throw ConfigError("d", "mode validation runs at d = 1");
  if (base.n > 6) throw ConfigError("n", "mode validation needs n <= 6");

  SimConfig lazy = base;
  lazy.mode = EnvMode::Lazy;
  lazy.seed = replication_seed(base.seed, 0);  // lane tags 0 and 1
  SimConfig eager = base;
  eager.mode = EnvMode::Eager;
  eager.seed = replication_seed(base.seed, 1);

  ModeAgreement rep;
  rep.reps_each = reps;
  rep.threshold = threshold;
  rep.counts_a = position_histogram(lazy, T, reps, workers);
  rep.counts_b = position_histogram(eager, T, reps, workers);
  rep.tv = tv_distance_counts(rep.counts_a, rep.counts_b, reps, reps);
  rep.pass = rep.tv < threshold;
  return rep;
}

// ---------------------------------------------------------------------------
// regeneration statistics

struct RegenStats {
  std::uint64_t reps = 0;
  std::uint64_t intervals = 0;
  EstimateRecord gap;    ///< checkpoint-grid units
  EstimateRecord range;  ///< |R| per regeneration interval
  std::vector<std::uint64_t> range_histogram;
  LinearFit tail;                 ///< ln P(|R| >= m) against m
  double tail_slope_ci_hi = 0.0;  ///< slope + 1.96 se
  double sigma2_coord0 = 0.0;     ///< per-interval coordinate-0 displacement variance
  std::uint64_t k_half = 0;
  std::uint64_t k_full = 0;
  std::vector<std::uint64_t> pos_half;  ///< law of the position at regeneration k_half
  std::vector<std::uint64_t> pos_full;
  double tv_uniform_half = -1.0;
  double tv_uniform_full = -1.0;
  double min_cell_prob_full = 0.0;
};

/// Aggregate checkpoint gaps, per-interval ranges and the regeneration-walk
/// law over reps runs of K regenerations each, started from the conditioned
/// law at the start vertex (so index 0 regenerates at time 0 and entry k is
/// the k-th regeneration).
inline RegenStats regen_statistics(const SimConfig& base, std::uint64_t K,
                                   std::uint64_t reps, int workers) {
  if (base.law.kind() != InitialLaw::Kind::ConditionedAt ||
      base.law.conditioned_vertex() != base.start)
    throw ConfigError("law",
                      "regeneration statistics require the conditioned law at "
                      "the start vertex");
  if (K < 1) throw ConfigError("K", "need at least one regeneration");
  if (reps < 2) throw ConfigError("reps", "need at least 2 replications");
  SimConfig cfg0 = base;
  cfg0.regen_tracking = true;
  cfg0.validate();
  const TorusLattice lattice(cfg0.d, cfg0.n);

  RegenStats stats;
  stats.reps = reps;
  stats.k_half = (std::uint64_t(cfg0.n) * std::uint64_t(cfg0.n) + 1) / 2;
  stats.k_full = std::uint64_t(cfg0.n) * std::uint64_t(cfg0.n);
  const bool half_ok = K >= stats.k_half;
  const bool full_ok = K >= stats.k_full;
  if (half_ok) stats.pos_half.assign(lattice.vertex_count(), 0);
  if (full_ok) stats.pos_full.assign(lattice.vertex_count(), 0);
  stats.range_histogram.assign(std::size_t(lattice.vertex_count()) + 1, 0);

  // integer accumulators: deterministic under any completion order
  std::mutex merge_mutex;
  std::uint64_t gap_sum = 0, gap_sq = 0;
  std::uint64_t range_sum = 0, range_sq = 0;
  std::int64_t dx_sum = 0;
  std::uint64_t dx_sq = 0;
  std::uint64_t interval_count = 0;

  parallel_for_reps(reps, workers, [&](std::uint64_t rep) {
    SimConfig cfg = cfg0;
    cfg.seed = replication_seed(cfg0.seed, rep);
    SimState sim(lattice, cfg);
    run_until(sim, StopCondition::regenerations(K));
    const auto& log = sim.regen_log();
    if (log.size() != K + 1 || log[0].time != 0.0)
      throw InternalError("regeneration log malformed");

    std::uint64_t l_gap = 0, l_gap_sq = 0, l_rng = 0, l_rng_sq = 0;
    std::int64_t l_dx = 0;
    std::uint64_t l_dx_sq = 0;
    std::vector<std::uint32_t> local_hist;  // sparse per-rep increments
    local_hist.assign(stats.range_histogram.size(), 0);
    for (std::size_t i = 1; i < log.size(); ++i) {
      const std::uint64_t g = log[i].checkpoint - log[i - 1].checkpoint;
      l_gap += g;
      l_gap_sq += g * g;
      const std::uint32_t r = log[i].range_from_prev;
      l_rng += r;
      l_rng_sq += std::uint64_t(r) * r;
      ++local_hist[r];
      const int dx =
          lattice.displacement(log[i - 1].position, log[i].position)[0];
      l_dx += dx;
      l_dx_sq += std::uint64_t(std::int64_t(dx) * dx);
    }

    std::lock_guard<std::mutex> lock(merge_mutex);
    gap_sum += l_gap;
    gap_sq += l_gap_sq;
    range_sum += l_rng;
    range_sq += l_rng_sq;
    dx_sum += l_dx;
    dx_sq += l_dx_sq;
    interval_count += K;
    for (std::size_t i = 0; i < local_hist.size(); ++i)
      stats.range_histogram[i] += local_hist[i];
    if (half_ok) ++stats.pos_half[log[stats.k_half].position];
    if (full_ok) ++stats.pos_full[log[stats.k_full].position];
  });

  stats.intervals = interval_count;
  stats.gap = EstimateRecord::from_moments("checkpoint-gap", interval_count,
                                           double(gap_sum), double(gap_sq));
  stats.range = EstimateRecord::from_moments("interval-range", interval_count,
                                             double(range_sum), double(range_sq));
  stats.sigma2_coord0 =
      (double(dx_sq) -
       double(dx_sum) * double(dx_sum) / double(interval_count)) /
      double(interval_count - 1);

  // log-survival fit over sizes with mass
  std::vector<std::pair<double, double>> pts;
  std::uint64_t above = interval_count;
  for (std::size_t m = 1; m < stats.range_histogram.size(); ++m) {
    if (above == 0) break;
    pts.emplace_back(double(m),
                     std::log(double(above) / double(interval_count)));
    above -= stats.range_histogram[m];
  }
  if (pts.size() >= 3) {
    stats.tail = fit_linear(pts);
    stats.tail_slope_ci_hi = stats.tail.slope + 1.96 * stats.tail.slope_se;
  }

  const double uniform = 1.0 / double(lattice.vertex_count());
  if (half_ok) {
    double tv = 0.0;
    for (const auto c : stats.pos_half)
      tv += std::fabs(double(c) / double(reps) - uniform);
    stats.tv_uniform_half = 0.5 * tv;
  }
  if (full_ok) {
    double tv = 0.0;
    double min_cell = std::numeric_limits<double>::infinity();
    for (const auto c : stats.pos_full) {
      tv += std::fabs(double(c) / double(reps) - uniform);
      min_cell = std::min(min_cell, double(c) / double(reps));
    }
    stats.tv_uniform_full = 0.5 * tv;
    stats.min_cell_prob_full = min_cell;
  }
  return stats;
}

// ---------------------------------------------------------------------------
// Matthews report

/// Vertices whose coordinates are all multiples of floor(sqrt(n)): a set of
/// pairwise well-separated targets for the cover lower-bound combination.
inline std::vector<VertexId> separated_targets(const TorusLattice& lattice) {
  const int n = lattice.side();
  const int spacing = int(std::sqrt(double(n)));
  std::vector<int> values;
  for (int v = 0; v < n; v += spacing) values.push_back(v);
  std::vector<std::vector<int>> tuples{{}};
  for (int a = 0; a < lattice.dim(); ++a) {
    std::vector<std::vector<int>> next;
    for (const auto& t : tuples)
      for (const int v : values) {
        auto u = t;
        u.push_back(v);
        next.push_back(std::move(u));
      }
    tuples = std::move(next);
  }
  std::vector<VertexId> out;
  out.reserve(tuples.size());
  for (const auto& t : tuples) {
    std::vector<long long> coords(t.begin(), t.end());
    out.push_back(lattice.encode(coords));
  }
  return out;
}

struct MatthewsReport {
  struct HitCell {
    VertexId target;
    std::string law;
    EstimateRecord est;
  };

  EstimateRecord cover;  ///< all-closed seeded-lazy start
  std::vector<HitCell> hits;
  double hit_proxy = 0.0;  ///< max mean over the designated cells
  double hit_proxy_se = 0.0;
  double harmonic_full = 0.0;  ///< H(n^d)
  double ratio = 0.0;          ///< cover / (proxy * H)
  double combined_rel_se = 0.0;
  bool upper_consistent = false;  ///< ratio <= 1 + 5*combined_rel_se

  int sep_spacing = 0;
  std::uint64_t sep_count = 0;  ///< |A|
  std::vector<HitCell> sep_hits;
  double min_pair_hit = 0.0;
  double min_pair_hit_se = 0.0;
  double harmonic_sep = 0.0;  ///< H(|A| - 1)
  double lower_combo = 0.0;   ///< min-pair-hit * H(|A| - 1)
};

struct MatthewsParams {
  int d = 2;
  int n = 16;
  double p = 0.3;
  double mu = 1.0;
  double ca = 1.0;
  std::uint64_t seed = 0;
  std::uint64_t reps_cover = 2000;
  std::uint64_t reps_hit = 2000;
  std::uint64_t reps_lower = 500;
  int workers = 1;
};

/// Cover estimate against the Matthews combination hit-proxy * H(n^d). The
/// proxy maximizes hitting estimates over the antipodal and axis-antipodal
/// targets under two adversarial starts, so it sits below the true maximum
/// hitting time; the upper-consistency flag allows 5 combined relative
/// standard errors of slack. Also emits the separated-target lower-bound
/// combination min-pair-hit * H(|A|-1).
inline MatthewsReport matthews_report(const MatthewsParams& par) {
  const TorusLattice lattice(par.d, par.n);
  MatthewsReport rep;

  SimConfig base;
  base.d = par.d;
  base.n = par.n;
  base.p = par.p;
  base.mu = par.mu;
  base.ca = par.ca;
  base.start = 0;

  std::uint64_t lane = 0;
  const auto lane_seed = [&]() { return replication_seed(par.seed, lane++); };

  // worst-style start for the cover estimate
  {
    SimConfig cover = base;
    cover.mode = EnvMode::SeededLazy;
    cover.law = all_closed_law(lattice);
    cover.seed = lane_seed();
    rep.cover = run_mc(cover, StopCondition::cover(), par.reps_cover,
                       par.workers, "cover")
                    .estimate;
  }

  // designated pair set: full antipode plus +/- half-way along each axis
  std::vector<VertexId> targets;
  const auto add_target = [&](VertexId v) {
    if (v != 0 && std::find(targets.begin(), targets.end(), v) == targets.end())
      targets.push_back(v);
  };
  add_target(lattice.antipode(0));
  for (int a = 0; a < par.d; ++a) {
    std::vector<long long> plus(par.d, 0), minus(par.d, 0);
    plus[a] = par.n / 2;
    minus[a] = -(par.n / 2);
    add_target(lattice.encode(plus));
    add_target(lattice.encode(minus));
  }

  for (const VertexId y : targets) {
    SimConfig conditioned = base;
    conditioned.mode = EnvMode::Lazy;
    conditioned.law = InitialLaw::conditioned_at(0);
    conditioned.seed = lane_seed();
    rep.hits.push_back(
        {y, "conditioned",
         run_mc(conditioned, StopCondition::hit(y), par.reps_hit, par.workers,
                "hit")
             .estimate});

    SimConfig closed = base;
    closed.mode = EnvMode::SeededLazy;
    closed.law = all_closed_law(lattice);
    closed.seed = lane_seed();
    rep.hits.push_back(
        {y, "all-closed",
         run_mc(closed, StopCondition::hit(y), par.reps_hit, par.workers,
                "hit")
             .estimate});
  }

  for (const auto& cell : rep.hits) {
    if (cell.est.mean > rep.hit_proxy) {
      rep.hit_proxy = cell.est.mean;
      rep.hit_proxy_se = cell.est.stderror;
    }
  }

  const std::uint64_t nd = lattice.vertex_count();
  rep.harmonic_full = harmonic(nd);
  rep.ratio = rep.cover.mean / (rep.hit_proxy * rep.harmonic_full);
  const double rel_cover = rep.cover.stderror / rep.cover.mean;
  const double rel_hit = rep.hit_proxy_se / rep.hit_proxy;
  rep.combined_rel_se = std::sqrt(rel_cover * rel_cover + rel_hit * rel_hit);
  rep.upper_consistent = rep.ratio <= 1.0 + 5.0 * rep.combined_rel_se;

  // separated-target lower-bound combination
  const auto sep = separated_targets(lattice);
  rep.sep_spacing = int(std::sqrt(double(par.n)));
  rep.sep_count = sep.size();
  rep.min_pair_hit = std::numeric_limits<double>::infinity();
  for (const VertexId y : sep) {
    if (y == 0) continue;
    SimConfig conditioned = base;
    conditioned.mode = EnvMode::Lazy;
    conditioned.law = InitialLaw::conditioned_at(0);
    conditioned.seed = lane_seed();
    const auto est = run_mc(conditioned, StopCondition::hit(y), par.reps_lower,
                            par.workers, "hit")
                         .estimate;
    rep.sep_hits.push_back({y, "conditioned", est});
    if (est.mean < rep.min_pair_hit) {
      rep.min_pair_hit = est.mean;
      rep.min_pair_hit_se = est.stderror;
    }
  }
  rep.harmonic_sep = sep.size() > 1 ? harmonic(sep.size() - 1) : 0.0;
  rep.lower_combo = rep.min_pair_hit * rep.harmonic_sep;
  return rep;
}

}  // namespace dynperc
