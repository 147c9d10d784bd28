#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "dynperc/environment.hpp"
#include "dynperc/errors.hpp"
#include "dynperc/lattice.hpp"
#include "dynperc/rng.hpp"

namespace dynperc {

/// Full parameterization of one replication. The seed is the replication's
/// own stream seed (already mixed by the driver); identical configs produce
/// identical trajectories.
struct SimConfig {
  int d = 1;
  int n = 16;
  double p = 0.4;
  double mu = 1.0;
  double ca = 1.0;  ///< checkpoint spacing is ca/mu
  EnvMode mode = EnvMode::Lazy;
  InitialLaw law = InitialLaw::stationary();
  VertexId start = 0;
  std::uint64_t seed = 0;
  bool regen_tracking = false;
  bool check_invariants = false;  ///< per-event structural checks (tests)

  void validate() const {
    if (d < 1) throw ConfigError("d", "dimension must be >= 1");
    if (n < 3) throw ConfigError("n", "side must be >= 3");
    if (!(p > 0.0 && p < 1.0)) throw ConfigError("p", "must be in (0,1)");
    if (!(mu > 0.0 && mu <= 1.0)) throw ConfigError("mu", "must be in (0,1]");
    if (!(ca > 0.0)) throw ConfigError("ca", "must be > 0");
  }
};

struct StopCondition {
  enum class Kind { Hit, Cover, TimeLimit, Regenerations };

  Kind kind = Kind::Cover;
  VertexId target = 0;       ///< Hit
  double limit = 0.0;        ///< TimeLimit
  std::uint64_t regens = 0;  ///< Regenerations: entries past index 0

  static StopCondition hit(VertexId y) { return {Kind::Hit, y, 0.0, 0}; }
  static StopCondition cover() { return {Kind::Cover, 0, 0.0, 0}; }
  static StopCondition time_limit(double t) {
    return {Kind::TimeLimit, 0, t, 0};
  }
  static StopCondition regenerations(std::uint64_t k) {
    return {Kind::Regenerations, 0, 0.0, k};
  }

  std::string describe() const {
    switch (kind) {
      case Kind::Hit: return "hit";
      case Kind::Cover: return "cover";
      case Kind::TimeLimit: return "time";
      case Kind::Regenerations: return "regens";
    }
    return "?";
  }
};

/// One regeneration: a checkpoint time j*ca/mu at which the information set
/// is exactly the 2d incident edges and all of them are closed. Conditional
/// on the walker's position x, the environment is then distributed as the
/// stationary product law conditioned to close every edge at x.
struct RegenEntry {
  std::uint64_t k;           ///< regeneration index within the run
  std::uint64_t checkpoint;  ///< grid index j, time = j*ca/mu
  double time;
  VertexId position;
  /// Distinct vertices visited in the closed interval from the previous
  /// regeneration to this one (0 for the first entry of the run).
  std::uint32_t range_from_prev;
};

struct Event {
  enum class Type { Attempt, Refresh, Checkpoint };
  Type type;
  double time;
  bool moved = false;        ///< Attempt: the chosen edge was open
  EdgeIndex edge = 0;        ///< Attempt: chosen edge; Refresh: refreshed edge
  bool dropped = false;      ///< Refresh: edge left the tracked set
  bool regenerated = false;  ///< Checkpoint
};

struct RunResult {
  double elapsed = 0.0;
  StopCondition::Kind outcome = StopCondition::Kind::Cover;
  std::uint64_t n_events = 0;
  std::uint64_t n_attempts = 0;
  std::uint64_t n_jumps = 0;
  std::uint64_t n_refreshes = 0;
  std::uint64_t n_drops = 0;
  std::uint64_t n_checkpoints = 0;
  std::uint64_t n_regens = 0;
  std::uint32_t covered = 0;
  double max_first_visit = 0.0;
};

/// Walker plus environment plus observables; one replication, one thread.
///
/// Event times: walk attempts follow a rate-1 exponential clock; each tracked
/// edge carries its own pre-drawn refresh time; checkpoints sit on the fixed
/// grid j*ca/mu (only when regeneration tracking is on). At coinciding times
/// the order is Checkpoint, Refresh, Attempt (a probability-zero tie, fixed
/// for determinism).
///
/// RNG draw order is part of the trajectory contract: environment
/// initialization (state then refresh time per edge, in canonical or incident
/// slot order), then the first attempt time; per attempt, the direction draw,
/// then on a jump the new edges' draws in slot order of the arrival vertex,
/// then the next attempt time.
class SimState {
 public:
  /// The lattice is shared immutable geometry; one instance serves any number
  /// of concurrent replications of the same (d, n).
  SimState(const TorusLattice& lattice, const SimConfig& cfg)
      : cfg_((cfg.validate(), cfg)),
        lattice_(&lattice),
        rng_(cfg.seed),
        env_(lattice, cfg.mode, cfg.p, cfg.mu, cfg.law, cfg.start, rng_),
        walker_(cfg.start),
        checkpoint_step_(cfg.ca / cfg.mu) {
    if (lattice.dim() != cfg.d || lattice.side() != cfg.n)
      throw InternalError("lattice does not match configuration");
    next_attempt_ = rng_.exponential(1.0);
    first_visit_.assign(lattice.vertex_count(),
                        std::numeric_limits<double>::quiet_NaN());
    first_visit_[walker_] = 0.0;
    covered_ = 1;
    if (cfg_.regen_tracking) {
      interval_epoch_.assign(lattice.vertex_count(), 0);
      begin_range_interval();
    }
  }

  const SimConfig& config() const noexcept { return cfg_; }
  const TorusLattice& lattice() const noexcept { return *lattice_; }
  const Environment& env() const noexcept { return env_; }
  Environment& env() noexcept { return env_; }
  double clock() const noexcept { return clock_; }
  VertexId walker() const noexcept { return walker_; }
  std::uint32_t covered_count() const noexcept { return covered_; }
  const std::vector<double>& first_visit() const noexcept { return first_visit_; }
  const std::vector<RegenEntry>& regen_log() const noexcept { return regen_log_; }
  const RunResult& counters() const noexcept { return counters_; }

  /// Checkpoint condition: the information set is exactly the 2d incident
  /// edges and every one of them is closed.
  bool regeneration_condition() const {
    return env_.info_size() == lattice_->degree() &&
           env_.incident_all_closed(walker_);
  }

  double next_event_time() {
    double t = next_attempt_;
    const double tr = env_.next_refresh().time;
    if (tr < t) t = tr;
    if (cfg_.regen_tracking) {
      const double tc = double(checkpoint_index_) * checkpoint_step_;
      if (tc <= t) t = tc;
    }
    return t;
  }

  /// Advance to and process exactly one event.
  Event step() {
    const RefreshEvent rf = env_.next_refresh();
    const double ta = next_attempt_;
    const double tc = cfg_.regen_tracking
                          ? double(checkpoint_index_) * checkpoint_step_
                          : std::numeric_limits<double>::infinity();

    Event ev{};
    if (tc <= rf.time && tc <= ta) {
      clock_ = tc;
      ev = do_checkpoint(tc);
    } else if (rf.time <= ta) {
      clock_ = rf.time;
      ev = do_refresh(rf);
    } else {
      clock_ = ta;
      ev = do_attempt(ta);
    }
    ++counters_.n_events;
    if (cfg_.check_invariants) check_invariants();
    return ev;
  }

 private:
  Event do_checkpoint(double t) {
    Event ev{Event::Type::Checkpoint, t};
    if (regeneration_condition()) {
      ev.regenerated = true;
      const std::uint32_t range_prev =
          regen_log_.empty() ? 0u : interval_range_;
      regen_log_.push_back({regen_log_.size(), checkpoint_index_, t, walker_,
                            range_prev});
      begin_range_interval();
      ++counters_.n_regens;
    }
    ++checkpoint_index_;
    ++counters_.n_checkpoints;
    return ev;
  }

  Event do_refresh(const RefreshEvent& rf) {
    Event ev{Event::Type::Refresh, rf.time};
    ev.edge = rf.edge;
    const RefreshOutcome out = env_.refresh(rf.edge, rf.time, walker_, rng_);
    ev.dropped = out == RefreshOutcome::Dropped;
    if (ev.dropped) ++counters_.n_drops;
    ++counters_.n_refreshes;
    return ev;
  }

  Event do_attempt(double t) {
    Event ev{Event::Type::Attempt, t};
    const unsigned slot = rng_.below(lattice_->degree());
    ev.edge = lattice_->incident_edge(walker_, slot);
    if (env_.query(ev.edge)) {
      ev.moved = true;
      walker_ = lattice_->neighbor(walker_, slot);
      env_.on_arrival(walker_, t, rng_);
      if (std::isnan(first_visit_[walker_])) {
        first_visit_[walker_] = t;
        ++covered_;
        counters_.max_first_visit = t;
      }
      if (cfg_.regen_tracking && interval_epoch_[walker_] != interval_id_) {
        interval_epoch_[walker_] = interval_id_;
        ++interval_range_;
      }
      ++counters_.n_jumps;
    }
    next_attempt_ = t + rng_.exponential(1.0);
    ++counters_.n_attempts;
    return ev;
  }

  void begin_range_interval() {
    ++interval_id_;
    interval_range_ = 1;
    interval_epoch_[walker_] = interval_id_;
  }

  void check_invariants() const {
    if (!env_.incident_tracked(walker_))
      throw InternalError("incident edge of walker not tracked");
    if (env_.info_size() < lattice_->degree())
      throw InternalError("information set smaller than walker degree");
    if (covered_ > lattice_->vertex_count())
      throw InternalError("covered count exceeds vertex count");
    if (std::isnan(first_visit_[walker_]))
      throw InternalError("walker position missing from first-visit map");
  }

  SimConfig cfg_;
  const TorusLattice* lattice_;
  Rng rng_;
  Environment env_;

  double clock_ = 0.0;
  VertexId walker_;
  double next_attempt_ = 0.0;
  double checkpoint_step_;
  std::uint64_t checkpoint_index_ = 0;

  std::vector<double> first_visit_;
  std::uint32_t covered_ = 0;
  std::vector<RegenEntry> regen_log_;

  // per-interval range bookkeeping (epoch-marking, no per-event allocation)
  std::vector<std::uint64_t> interval_epoch_;
  std::uint64_t interval_id_ = 0;
  std::uint32_t interval_range_ = 0;

  RunResult counters_{};

  friend RunResult run_until(SimState&, const StopCondition&);
};

/// Sizes |R| of the closed intervals between consecutive logged
/// regenerations; empty with fewer than two entries.
inline std::vector<std::uint32_t> range_between_regens(const SimState& sim) {
  const auto& log = sim.regen_log();
  std::vector<std::uint32_t> out;
  if (log.size() < 2) return out;
  out.reserve(log.size() - 1);
  for (std::size_t i = 1; i < log.size(); ++i)
    out.push_back(log[i].range_from_prev);
  return out;
}

/// Stop-condition checks shared by run_until and the replication drivers.
inline void validate_stop(const StopCondition& stop, const SimConfig& cfg) {
  if (stop.kind == StopCondition::Kind::TimeLimit && stop.limit < 0.0)
    throw ConfigError("T", "time limit must be >= 0");
  if (stop.kind == StopCondition::Kind::Hit) {
    std::uint64_t nvert = 1;
    for (int a = 0; a < cfg.d; ++a) nvert *= std::uint64_t(cfg.n);
    if (stop.target >= nvert) throw ConfigError("target", "vertex out of range");
  }
  if (stop.kind == StopCondition::Kind::Regenerations && !cfg.regen_tracking)
    throw ConfigError("regen_tracking",
                      "regeneration stop requires regeneration tracking");
}

/// Run the replication to its stop condition.
///
/// Hit stops at the first clock with walker == target (0 when target is the
/// start). Cover stops when every vertex has been visited. TimeLimit runs to
/// clock T exactly. Regenerations(K) stops once the regeneration log holds K
/// entries past index 0.
inline RunResult run_until(SimState& sim, const StopCondition& stop) {
  validate_stop(stop, sim.cfg_);

  const auto done = [&]() -> bool {
    switch (stop.kind) {
      case StopCondition::Kind::Hit:
        return sim.walker_ == stop.target;
      case StopCondition::Kind::Cover:
        return sim.covered_ == sim.lattice().vertex_count();
      case StopCondition::Kind::Regenerations:
        return sim.regen_log_.size() >= stop.regens + 1;
      case StopCondition::Kind::TimeLimit:
        return false;  // handled by the time check below
    }
    return false;
  };

  while (!done()) {
    if (stop.kind == StopCondition::Kind::TimeLimit &&
        sim.next_event_time() > stop.limit) {
      sim.clock_ = stop.limit;
      break;
    }
    sim.step();
  }

  RunResult result = sim.counters_;
  result.outcome = stop.kind;
  result.elapsed = stop.kind == StopCondition::Kind::TimeLimit
                       ? stop.limit
                       : sim.clock_;
  result.covered = sim.covered_;
  return result;
}

/// Convenience wrapper building the lattice for a single run.
inline RunResult run_single(const SimConfig& cfg, const StopCondition& stop) {
  const TorusLattice lattice(cfg.d, cfg.n);
  SimState sim(lattice, cfg);
  return run_until(sim, stop);
}

}  // namespace dynperc
