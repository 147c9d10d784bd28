#pragma once

#include <cstdint>
#include <limits>
#include <queue>
#include <string>
#include <vector>

#include "dynperc/errors.hpp"
#include "dynperc/lattice.hpp"
#include "dynperc/rng.hpp"

namespace dynperc {

/// How the dynamical percolation environment is represented.
///
/// Eager materializes every edge and keeps it refreshing for the whole run;
/// the full configuration eta_t is available at any time. Lazy materializes
/// only the information set: the edges whose current state is determined by
/// the walker's observation history. SeededLazy starts from an explicit
/// full configuration (which the information set initially contains in its
/// entirety) and lets the drop rule shrink it over time.
///
/// Lazy is exact for every observable measurable in the walker's filtration:
/// an edge that left the information set has refreshed at least once while
/// unobserved, so its state is Bernoulli(p) independent of everything
/// observed, and resampling it fresh on next contact is distributionally
/// exact. Full-environment snapshots exist only in Eager mode.
enum class EnvMode { Eager, Lazy, SeededLazy };

inline const char* to_string(EnvMode m) {
  switch (m) {
    case EnvMode::Eager: return "eager";
    case EnvMode::Lazy: return "lazy";
    case EnvMode::SeededLazy: return "seeded-lazy";
  }
  return "?";
}

/// Initial distribution of the edge configuration.
class InitialLaw {
 public:
  enum class Kind {
    Stationary,     ///< i.i.d. Bernoulli(p) on every edge
    ConditionedAt,  ///< Bernoulli(p) conditioned on all edges at a vertex closed
    Explicit        ///< a fixed configuration, one bit per canonical edge index
  };

  static InitialLaw stationary() { return InitialLaw(Kind::Stationary, 0, {}); }
  static InitialLaw conditioned_at(VertexId x) {
    return InitialLaw(Kind::ConditionedAt, x, {});
  }
  static InitialLaw explicit_config(std::vector<std::uint8_t> open_bits) {
    return InitialLaw(Kind::Explicit, 0, std::move(open_bits));
  }

  Kind kind() const noexcept { return kind_; }
  VertexId conditioned_vertex() const noexcept { return vertex_; }
  const std::vector<std::uint8_t>& bits() const noexcept { return bits_; }

  std::string describe() const {
    switch (kind_) {
      case Kind::Stationary: return "stationary";
      case Kind::ConditionedAt:
        return "conditioned@" + std::to_string(vertex_);
      case Kind::Explicit: return "explicit";
    }
    return "?";
  }

 private:
  InitialLaw(Kind k, VertexId x, std::vector<std::uint8_t> bits)
      : kind_(k), vertex_(x), bits_(std::move(bits)) {}

  Kind kind_;
  VertexId vertex_;
  std::vector<std::uint8_t> bits_;
};

/// Hex string of ceil(E/4) digits -> one byte per edge; bit k of the hex
/// value is the edge with canonical index k.
inline std::vector<std::uint8_t> parse_edge_bitmap(const std::string& hex,
                                                   EdgeIndex edge_count) {
  const std::size_t want = (std::size_t(edge_count) + 3) / 4;
  if (hex.size() != want)
    throw ConfigError("eta0", "expected " + std::to_string(want) +
                                  " hex digits for " +
                                  std::to_string(edge_count) + " edges, got " +
                                  std::to_string(hex.size()));
  std::vector<std::uint8_t> bits(edge_count, 0);
  for (std::size_t pos = 0; pos < hex.size(); ++pos) {
    const char c = hex[hex.size() - 1 - pos];  // least significant digit last
    int val;
    if (c >= '0' && c <= '9') val = c - '0';
    else if (c >= 'a' && c <= 'f') val = 10 + (c - 'a');
    else if (c >= 'A' && c <= 'F') val = 10 + (c - 'A');
    else
      throw ConfigError("eta0", std::string("invalid hex digit '") + c + "'");
    for (int b = 0; b < 4; ++b) {
      const std::size_t k = pos * 4 + std::size_t(b);
      const bool bit = (val >> b) & 1;
      if (k < edge_count) {
        bits[k] = bit ? 1 : 0;
      } else if (bit) {
        throw ConfigError("eta0", "bit set beyond edge count");
      }
    }
  }
  return bits;
}

inline std::string format_edge_bitmap(const std::vector<std::uint8_t>& bits) {
  static const char* digits = "0123456789abcdef";
  const std::size_t ndig = (bits.size() + 3) / 4;
  std::string out(ndig, '0');
  for (std::size_t pos = 0; pos < ndig; ++pos) {
    int val = 0;
    for (int b = 0; b < 4; ++b) {
      const std::size_t k = pos * 4 + std::size_t(b);
      if (k < bits.size() && bits[k]) val |= 1 << b;
    }
    out[ndig - 1 - pos] = digits[val];
  }
  return out;
}

struct EdgeRecord {
  double next_refresh;  ///< strictly greater than the current clock
  bool open;
};

enum class RefreshOutcome { KeptOpen, KeptClosed, Dropped };

/// Pending refresh of one tracked edge. Ordered by (time, edge index); the
/// edge-index tiebreak is a probability-zero event but keeps the event order
/// deterministic.
struct RefreshEvent {
  double time;
  EdgeIndex edge;

  friend bool operator>(const RefreshEvent& a, const RefreshEvent& b) {
    if (a.time != b.time) return a.time > b.time;
    return a.edge > b.edge;
  }
};

/// The dynamical percolation environment, together with the information set
/// A_t. Edges refresh at rate mu, becoming open with probability p.
///
/// The tracked map (dense slot array plus membership flags) holds the
/// materialized edges: in Lazy/SeededLazy mode that set IS A_t and the
/// restriction of eta_t to it; in Eager mode every edge stays materialized
/// and A_t is carried as a separate membership flag so that regeneration
/// detection works identically in all modes.
///
/// A_t updates: all edges incident to the walker's arrival vertex are added;
/// a member that refreshes while not incident to the walker is removed. In
/// the non-eager modes removal erases the record entirely and the edge is
/// resampled Bernoulli(p) on next contact.
///
/// An instance is confined to one replication; no internal synchronization.
class Environment {
 public:
  /// Test instrumentation: KeepStaleOnMiss disables the drop rule in the
  /// non-eager modes (a non-incident refresh keeps the edge with its stale
  /// state). Used by the mode-agreement regression test to prove the
  /// validator catches a broken lazy representation.
  enum class Fault { None, KeepStaleOnMiss };

  Environment(const TorusLattice& lattice, EnvMode mode, double p, double mu,
              const InitialLaw& law, VertexId start, Rng& rng)
      : lat_(&lattice), mode_(mode), p_(p), mu_(mu) {
    if (!(p > 0.0 && p < 1.0)) throw ConfigError("p", "must be in (0,1)");
    if (!(mu > 0.0 && mu <= 1.0)) throw ConfigError("mu", "must be in (0,1]");
    if (mode != EnvMode::Eager && mode != EnvMode::SeededLazy &&
        law.kind() == InitialLaw::Kind::Explicit)
      throw ConfigError("law", "explicit configurations require eager or seeded-lazy mode");
    if (mode == EnvMode::Lazy && law.kind() == InitialLaw::Kind::Explicit)
      throw ConfigError("law", "lazy mode requires stationary or conditioned law");
    if (mode == EnvMode::SeededLazy && law.kind() != InitialLaw::Kind::Explicit)
      throw ConfigError("law", "seeded-lazy mode requires an explicit configuration");
    if (law.kind() == InitialLaw::Kind::Explicit &&
        law.bits().size() != lattice.edge_count())
      throw ConfigError("eta0", "bitmap covers " +
                                    std::to_string(law.bits().size()) +
                                    " edges, lattice has " +
                                    std::to_string(lattice.edge_count()));
    if (start >= lattice.vertex_count())
      throw ConfigError("start", "vertex out of range");

    const EdgeIndex ecount = lattice.edge_count();
    slots_.resize(ecount);
    tracked_.assign(ecount, 0);

    if (mode == EnvMode::Lazy) {
      // Only the edges incident to the start vertex, sampled per law.
      for (unsigned k = 0; k < lattice.degree(); ++k) {
        const EdgeIndex e = lattice.incident_edge(start, k);
        if (tracked_[e]) continue;
        materialize(e, initial_state(law, e, rng), 0.0, rng);
      }
    } else {
      // Every edge, sampled per law, in canonical edge order.
      for (EdgeIndex e = 0; e < ecount; ++e)
        materialize(e, initial_state(law, e, rng), 0.0, rng);
      if (mode == EnvMode::Eager) {
        in_info_.assign(ecount, 0);
        if (law.kind() == InitialLaw::Kind::Explicit) {
          // The whole configuration is known data.
          in_info_.assign(ecount, 1);
          info_count_ = ecount;
        } else {
          for (unsigned k = 0; k < lattice.degree(); ++k) {
            const EdgeIndex e = lattice.incident_edge(start, k);
            if (!in_info_[e]) {
              in_info_[e] = 1;
              ++info_count_;
            }
          }
        }
      }
    }
  }

  EnvMode mode() const noexcept { return mode_; }
  double p() const noexcept { return p_; }
  double mu() const noexcept { return mu_; }

  /// Current state of a materialized edge. In the non-eager modes querying an
  /// edge outside the tracked set is an event-loop bug, not a user error.
  bool query(EdgeIndex e) const {
    if (!tracked_[e])
      throw InternalError("query of untracked edge " + std::to_string(e));
    return slots_[e].open;
  }

  bool is_tracked(EdgeIndex e) const noexcept { return tracked_[e] != 0; }

  std::uint32_t tracked_count() const noexcept { return tracked_count_; }

  /// |A_t|. Equals tracked_count() except in Eager mode.
  std::uint32_t info_size() const noexcept {
    return mode_ == EnvMode::Eager ? info_count_ : tracked_count_;
  }

  bool in_info(EdgeIndex e) const noexcept {
    return mode_ == EnvMode::Eager ? in_info_[e] != 0 : tracked_[e] != 0;
  }

  /// Earliest pending refresh over tracked edges, ties broken by canonical
  /// edge index. Skips entries invalidated by drops or reschedules.
  RefreshEvent next_refresh() {
    while (!queue_.empty()) {
      const RefreshEvent top = queue_.top();
      if (tracked_[top.edge] && slots_[top.edge].next_refresh == top.time)
        return top;
      queue_.pop();
    }
    throw InternalError("refresh queue empty (walker always has incident edges)");
  }

  /// Consume the refresh of edge e scheduled at time t. Incident edges (and
  /// every edge in Eager mode) resample Bernoulli(p) and reschedule;
  /// non-incident members are dropped from the tracked set.
  RefreshOutcome refresh(EdgeIndex e, double t, VertexId walker, Rng& rng) {
    const RefreshEvent head = next_refresh();
    if (head.edge != e || head.time != t || slots_[e].next_refresh != t)
      throw InternalError("refresh at wrong time (event-queue corruption)");
    queue_.pop();
    const bool incident = lat_->edge_incident(e, walker);

    if (mode_ == EnvMode::Eager) {
      resample(e, t, rng);
      if (!incident && in_info_[e]) {
        in_info_[e] = 0;
        --info_count_;
      }
      return slots_[e].open ? RefreshOutcome::KeptOpen : RefreshOutcome::KeptClosed;
    }

    if (incident) {
      resample(e, t, rng);
      return slots_[e].open ? RefreshOutcome::KeptOpen : RefreshOutcome::KeptClosed;
    }
    if (fault_ == Fault::KeepStaleOnMiss) {
      slots_[e].next_refresh = t + rng.exponential(mu_);
      queue_.push({slots_[e].next_refresh, e});
      return slots_[e].open ? RefreshOutcome::KeptOpen : RefreshOutcome::KeptClosed;
    }
    tracked_[e] = 0;
    --tracked_count_;
    return RefreshOutcome::Dropped;
  }

  /// The walker has just arrived at v at time t: add every edge incident to
  /// v. New members enter with a fresh Bernoulli(p) state; existing members
  /// are untouched.
  void on_arrival(VertexId v, double t, Rng& rng) {
    for (unsigned k = 0; k < lat_->degree(); ++k) {
      const EdgeIndex e = lat_->incident_edge(v, k);
      if (mode_ == EnvMode::Eager) {
        if (!in_info_[e]) {
          in_info_[e] = 1;
          ++info_count_;
        }
      } else if (!tracked_[e]) {
        materialize(e, rng.bernoulli(p_), t, rng);
      }
    }
  }

  /// True iff all 2d edges incident to v are tracked (holds after every
  /// event for the walker's position).
  bool incident_tracked(VertexId v) const {
    for (unsigned k = 0; k < lat_->degree(); ++k)
      if (!tracked_[lat_->incident_edge(v, k)]) return false;
    return true;
  }

  bool incident_all_closed(VertexId v) const {
    for (unsigned k = 0; k < lat_->degree(); ++k)
      if (query(lat_->incident_edge(v, k))) return false;
    return true;
  }

  const TorusLattice& lattice() const noexcept { return *lat_; }

  void inject_fault(Fault f) noexcept { fault_ = f; }

 private:
  bool initial_state(const InitialLaw& law, EdgeIndex e, Rng& rng) {
    switch (law.kind()) {
      case InitialLaw::Kind::Stationary:
        return rng.bernoulli(p_);
      case InitialLaw::Kind::ConditionedAt:
        if (lat_->edge_incident(e, law.conditioned_vertex())) return false;
        return rng.bernoulli(p_);
      case InitialLaw::Kind::Explicit:
        return law.bits()[e] != 0;
    }
    return false;
  }

  void materialize(EdgeIndex e, bool open, double t, Rng& rng) {
    slots_[e].open = open;
    slots_[e].next_refresh = t + rng.exponential(mu_);
    tracked_[e] = 1;
    ++tracked_count_;
    queue_.push({slots_[e].next_refresh, e});
  }

  void resample(EdgeIndex e, double t, Rng& rng) {
    slots_[e].open = rng.bernoulli(p_);
    slots_[e].next_refresh = t + rng.exponential(mu_);
    queue_.push({slots_[e].next_refresh, e});
  }

  const TorusLattice* lat_;
  EnvMode mode_;
  double p_;
  double mu_;
  std::vector<EdgeRecord> slots_;
  std::vector<std::uint8_t> tracked_;
  std::uint32_t tracked_count_ = 0;
  std::vector<std::uint8_t> in_info_;  // Eager only
  std::uint32_t info_count_ = 0;
  std::priority_queue<RefreshEvent, std::vector<RefreshEvent>, std::greater<>>
      queue_;
  Fault fault_ = Fault::None;
};

}  // namespace dynperc
