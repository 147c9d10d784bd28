#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "dynperc/environment.hpp"
#include "dynperc/errors.hpp"

namespace dynperc::oracle {

// Exact computations for the joint walker/environment chain on the cycle
// (d = 1, 3 <= n <= 5). States pack as x * 2^n + mask, where bit i of mask is
// the state of the edge from vertex i to i+1 (canonical edge index i).
//
// Rates: a closed edge opens at mu*p, an open edge closes at mu*(1-p)
// (refreshes that resample the same state are invisible to the law of the
// process and are omitted); the walker crosses each open incident edge at
// rate 1/2. Expected hitting and cover times solve the absorbing linear
// systems by dense Gaussian elimination, which at these sizes (<= 160
// unknowns per system) is exact to machine precision; the reported residual
// is the maximum defect of the fixed-point form
//   h(s) = (1 + sum_r rate(s->s') h(s')) / total_rate(s).

struct OracleResult {
  double value = 0.0;
  double residual = 0.0;
  std::size_t states = 0;
  const char* method = "";
};

class ExactChain {
 public:
  struct Entry {
    std::uint32_t to;
    double rate;
  };

  ExactChain(int n, double p, double mu) : n_(n), p_(p), mu_(mu) {
    if (n < 3 || n > 5)
      throw UnsupportedInstanceError("n", "exact chain supports 3 <= n <= 5");
    if (!(p > 0.0 && p <= 1.0))
      throw ConfigError("p", "must be in (0,1]");
    if (!(mu > 0.0 && mu <= 1.0)) throw ConfigError("mu", "must be in (0,1]");
    masks_ = 1u << n;
    rows_.resize(state_count());
    rates_.resize(state_count());
    for (std::uint32_t s = 0; s < state_count(); ++s) {
      auto& row = rows_[s];
      const int x = int(s >> n_);
      const std::uint32_t mask = s & (masks_ - 1);
      for (int e = 0; e < n_; ++e) {
        const bool open = (mask >> e) & 1;
        const double rate = open ? mu_ * (1.0 - p_) : mu_ * p_;
        if (rate > 0.0) row.push_back({pack(x, mask ^ (1u << e)), rate});
      }
      const int right = x;                 // edge x -> x+1
      const int left = (x + n_ - 1) % n_;  // edge x-1 -> x
      if ((mask >> right) & 1) row.push_back({pack((x + 1) % n_, mask), 0.5});
      if ((mask >> left) & 1) row.push_back({pack((x + n_ - 1) % n_, mask), 0.5});
      double total = 0.0;
      for (const auto& t : row) total += t.rate;
      rates_[s] = total;
    }
  }

  int n() const noexcept { return n_; }
  double p() const noexcept { return p_; }
  double mu() const noexcept { return mu_; }
  std::uint32_t mask_count() const noexcept { return masks_; }
  std::uint32_t state_count() const noexcept {
    return std::uint32_t(n_) * masks_;
  }

  std::uint32_t pack(int x, std::uint32_t mask) const noexcept {
    return (std::uint32_t(x) << n_) | mask;
  }
  int walker_of(std::uint32_t s) const noexcept { return int(s >> n_); }
  std::uint32_t mask_of(std::uint32_t s) const noexcept {
    return s & (masks_ - 1);
  }

  const std::vector<Entry>& row(std::uint32_t s) const { return rows_[s]; }
  double total_rate(std::uint32_t s) const { return rates_[s]; }

  /// Stationary law of the joint chain: uniform walker times product
  /// Bernoulli(p) edges.
  double stationary(std::uint32_t s) const {
    const std::uint32_t mask = mask_of(s);
    double w = 1.0 / n_;
    for (int e = 0; e < n_; ++e) w *= ((mask >> e) & 1) ? p_ : 1.0 - p_;
    return w;
  }

  /// Weight of an edge configuration under an initial law.
  double law_weight(const InitialLaw& law, std::uint32_t mask) const {
    switch (law.kind()) {
      case InitialLaw::Kind::Stationary: {
        double w = 1.0;
        for (int e = 0; e < n_; ++e) w *= ((mask >> e) & 1) ? p_ : 1.0 - p_;
        return w;
      }
      case InitialLaw::Kind::ConditionedAt: {
        const int v = int(law.conditioned_vertex());
        const int right = v;
        const int left = (v + n_ - 1) % n_;
        if ((mask >> right) & 1 || (mask >> left) & 1) return 0.0;
        double w = 1.0;
        for (int e = 0; e < n_; ++e) {
          if (e == right || e == left) continue;
          w *= ((mask >> e) & 1) ? p_ : 1.0 - p_;
        }
        return w;
      }
      case InitialLaw::Kind::Explicit: {
        const auto& bits = law.bits();
        for (int e = 0; e < n_; ++e) {
          const bool want = e < int(bits.size()) && bits[e] != 0;
          if (want != bool((mask >> e) & 1)) return 0.0;
        }
        return 1.0;
      }
    }
    return 0.0;
  }

 private:
  int n_;
  double p_;
  double mu_;
  std::uint32_t masks_;
  std::vector<std::vector<Entry>> rows_;
  std::vector<double> rates_;
};

/// In-place Gaussian elimination with partial pivoting; a is row-major N*N.
inline void solve_dense(std::vector<double>& a, std::vector<double>& b,
                        std::size_t n) {
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    double best = std::fabs(a[col * n + col]);
    for (std::size_t r = col + 1; r < n; ++r) {
      const double v = std::fabs(a[r * n + col]);
      if (v > best) {
        best = v;
        pivot = r;
      }
    }
    if (best == 0.0) throw InternalError("singular linear system in oracle");
    if (pivot != col) {
      for (std::size_t c = col; c < n; ++c)
        std::swap(a[pivot * n + c], a[col * n + c]);
      std::swap(b[pivot], b[col]);
    }
    const double inv = 1.0 / a[col * n + col];
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = a[r * n + col] * inv;
      if (f == 0.0) continue;
      a[r * n + col] = 0.0;
      for (std::size_t c = col + 1; c < n; ++c) a[r * n + c] -= f * a[col * n + c];
      b[r] -= f * b[col];
    }
  }
  for (std::size_t rr = n; rr-- > 0;) {
    double acc = b[rr];
    for (std::size_t c = rr + 1; c < n; ++c) acc -= a[rr * n + c] * b[c];
    b[rr] = acc / a[rr * n + rr];
  }
}

/// Expected time for the walker to reach y, started at x with edge law
/// `init`. Solves h = (1 + R h) / rate over states with walker != y.
inline OracleResult exact_hitting(int n, double p, double mu, VertexId x,
                                  VertexId y, const InitialLaw& init) {
  const ExactChain chain(n, p, mu);
  if (x >= VertexId(n)) throw ConfigError("x", "vertex out of range");
  if (y >= VertexId(n)) throw ConfigError("y", "vertex out of range");
  OracleResult res;
  res.states = chain.state_count();
  res.method = "dense-elimination";
  if (x == y) return res;

  const std::uint32_t S = chain.state_count();
  std::vector<std::int32_t> index(S, -1);
  std::vector<std::uint32_t> states;
  for (std::uint32_t s = 0; s < S; ++s) {
    if (chain.walker_of(s) != int(y)) {
      index[s] = std::int32_t(states.size());
      states.push_back(s);
    }
  }
  const std::size_t N = states.size();
  std::vector<double> a(N * N, 0.0), b(N, 1.0);
  for (std::size_t i = 0; i < N; ++i) {
    const std::uint32_t s = states[i];
    a[i * N + i] = chain.total_rate(s);
    for (const auto& t : chain.row(s))
      if (index[t.to] >= 0) a[i * N + std::size_t(index[t.to])] -= t.rate;
  }
  solve_dense(a, b, N);

  double residual = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    const std::uint32_t s = states[i];
    double acc = 1.0;
    for (const auto& t : chain.row(s))
      if (index[t.to] >= 0) acc += t.rate * b[std::size_t(index[t.to])];
    residual = std::max(residual,
                        std::fabs(b[i] - acc / chain.total_rate(s)));
  }
  res.residual = residual;

  double value = 0.0;
  for (std::uint32_t mask = 0; mask < chain.mask_count(); ++mask) {
    const double w = chain.law_weight(init, mask);
    if (w > 0.0) value += w * b[std::size_t(index[chain.pack(int(x), mask)])];
  }
  res.value = value;
  return res;
}

/// Transition out of a cover-chain state (x, mask, visited).
struct CoverEntry {
  int x;
  std::uint32_t mask;
  std::uint32_t visited;
  double rate;
};

/// Cover-chain transitions: edge flips keep the visited set; walker moves
/// add the arrival vertex to it. Summing out the visited component recovers
/// the plain chain's rates.
inline std::vector<CoverEntry> cover_transitions(const ExactChain& chain,
                                                 int x, std::uint32_t mask,
                                                 std::uint32_t visited) {
  std::vector<CoverEntry> out;
  const std::uint32_t s = chain.pack(x, mask);
  for (const auto& t : chain.row(s)) {
    const int x2 = chain.walker_of(t.to);
    const std::uint32_t m2 = chain.mask_of(t.to);
    out.push_back({x2, m2, visited | (1u << x2), t.rate});
  }
  return out;
}

/// Expected time until every vertex has been visited, started at x with edge
/// law `init` and visited set {x}. The visited set only grows, so the
/// (x, eta, V) chain is solved layer by layer in decreasing |V|.
inline OracleResult exact_cover(int n, double p, double mu, VertexId x,
                                const InitialLaw& init) {
  const ExactChain chain(n, p, mu);
  if (x >= VertexId(n)) throw ConfigError("x", "vertex out of range");
  const std::uint32_t masks = chain.mask_count();
  const std::uint32_t vfull = (1u << n) - 1;
  const std::uint32_t inner = std::uint32_t(n) * masks;

  OracleResult res;
  res.method = "dense-elimination-layered";

  // h[V][x*2^n + mask]; states with x not in V are never queried.
  std::vector<std::vector<double>> h(vfull + 1);
  h[vfull].assign(inner, 0.0);

  // layers by decreasing popcount
  std::vector<std::vector<std::uint32_t>> by_count(std::size_t(n) + 1);
  for (std::uint32_t v = 1; v <= vfull; ++v)
    by_count[std::size_t(__builtin_popcount(v))].push_back(v);

  std::size_t total_states = inner;  // absorbing layer
  double residual = 0.0;

  for (int pc = n - 1; pc >= 1; --pc) {
    for (const std::uint32_t visited : by_count[std::size_t(pc)]) {
      // unknowns: (walker in visited) x mask
      std::vector<std::int32_t> index(inner, -1);
      std::vector<std::uint32_t> states;
      for (int w = 0; w < n; ++w) {
        if (!((visited >> w) & 1)) continue;
        for (std::uint32_t mask = 0; mask < masks; ++mask) {
          const std::uint32_t s = chain.pack(w, mask);
          index[s] = std::int32_t(states.size());
          states.push_back(s);
        }
      }
      const std::size_t N = states.size();
      std::vector<double> a(N * N, 0.0), b(N, 1.0);
      for (std::size_t i = 0; i < N; ++i) {
        const std::uint32_t s = states[i];
        a[i * N + i] = chain.total_rate(s);
        for (const auto& t : chain.row(s)) {
          const int x2 = chain.walker_of(t.to);
          if ((visited >> x2) & 1) {
            a[i * N + std::size_t(index[t.to])] -= t.rate;
          } else {
            b[i] += t.rate * h[visited | (1u << x2)][t.to];
          }
        }
      }
      solve_dense(a, b, N);
      auto& layer = h[visited];
      layer.assign(inner, 0.0);
      for (std::size_t i = 0; i < N; ++i) layer[states[i]] = b[i];
      total_states += N;

      for (std::size_t i = 0; i < N; ++i) {
        const std::uint32_t s = states[i];
        double acc = 1.0;
        for (const auto& t : chain.row(s)) {
          const int x2 = chain.walker_of(t.to);
          const std::uint32_t v2 = visited | (1u << x2);
          acc += t.rate * h[v2][t.to];
        }
        residual = std::max(
            residual, std::fabs(layer[s] - acc / chain.total_rate(s)));
      }
    }
  }

  res.states = total_states;
  res.residual = residual;
  double value = 0.0;
  const std::uint32_t v0 = 1u << x;
  for (std::uint32_t mask = 0; mask < masks; ++mask) {
    const double w = chain.law_weight(init, mask);
    if (w > 0.0) value += w * h[v0][chain.pack(int(x), mask)];
  }
  res.value = value;
  return res;
}

struct TvCurve {
  std::vector<double> times;
  std::vector<double> tv;
  std::size_t states = 0;
  const char* method = "uniformization";
};

/// Total-variation distance of the chain's law at each requested time to the
/// stationary product law, started from delta_x times `init`. Transient
/// distributions come from uniformization with the Poisson tail truncated
/// below 1e-12.
inline TvCurve exact_tv_curve(int n, double p, double mu, VertexId x,
                              const InitialLaw& init,
                              const std::vector<double>& times) {
  const ExactChain chain(n, p, mu);
  if (x >= VertexId(n)) throw ConfigError("x", "vertex out of range");
  const std::uint32_t S = chain.state_count();

  double lambda = 0.0;
  for (std::uint32_t s = 0; s < S; ++s)
    lambda = std::max(lambda, chain.total_rate(s));

  std::vector<double> nu0(S, 0.0);
  for (std::uint32_t mask = 0; mask < chain.mask_count(); ++mask) {
    const double w = chain.law_weight(init, mask);
    if (w > 0.0) nu0[chain.pack(int(x), mask)] = w;
  }

  const auto apply_kernel = [&](const std::vector<double>& v) {
    std::vector<double> out(S, 0.0);
    for (std::uint32_t s = 0; s < S; ++s) {
      const double m = v[s];
      if (m == 0.0) continue;
      out[s] += m * (1.0 - chain.total_rate(s) / lambda);
      for (const auto& t : chain.row(s)) out[t.to] += m * (t.rate / lambda);
    }
    return out;
  };

  TvCurve curve;
  curve.states = S;
  curve.times = times;
  curve.tv.reserve(times.size());
  for (const double t : times) {
    if (t < 0.0) throw ConfigError("times", "must be nonnegative");
    const double lt = lambda * t;
    std::vector<double> acc(S, 0.0);
    std::vector<double> nu = nu0;
    double cum = 0.0;
    const std::uint64_t kmax =
        std::uint64_t(lt + 60.0 * std::sqrt(lt + 1.0) + 64.0);
    for (std::uint64_t k = 0;; ++k) {
      const double lw = -lt + double(k) * std::log(lt > 0.0 ? lt : 1.0) -
                        std::lgamma(double(k) + 1.0);
      const double w = std::exp(lw);
      if (w > 0.0)
        for (std::uint32_t s = 0; s < S; ++s) acc[s] += w * nu[s];
      cum += w;
      if (cum >= 1.0 - 1e-12 || k >= kmax) break;
      nu = apply_kernel(nu);
    }
    double tv = 0.0;
    for (std::uint32_t s = 0; s < S; ++s)
      tv += std::fabs(acc[s] - chain.stationary(s));
    curve.tv.push_back(0.5 * tv);
  }
  return curve;
}

}  // namespace dynperc::oracle
