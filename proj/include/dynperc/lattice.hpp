#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "dynperc/errors.hpp"

namespace dynperc {

/// Vertex of Z_n^d, encoded mixed-radix with coordinate 0 least significant:
/// v = c_0 + c_1*n + ... + c_{d-1}*n^{d-1}.
using VertexId = std::uint32_t;

/// Canonical edge index base*d + axis, where (base, axis) denotes the edge
/// from base to base + e_axis (mod n). There are exactly d*n^d edges.
using EdgeIndex = std::uint32_t;

/// Geometry of the discrete torus Z_n^d. Neighbor and incident-edge tables
/// are precomputed; all queries after construction are O(1) or O(d) and
/// const, so one instance can serve any number of concurrent replications.
///
/// Incident slots are ordered axis-major with + before -: slot 2a is the
/// edge leaving along +e_a, slot 2a+1 along -e_a. A walk attempt that draws
/// direction k traverses incident_edge(v, k).
class TorusLattice {
 public:
  TorusLattice(int dim, int side) : d_(dim), n_(side) {
    if (dim < 1) throw ConfigError("d", "dimension must be >= 1");
    if (side < 3)
      throw ConfigError("n", "side must be >= 3 (n <= 2 makes Z_n^d a multigraph)");
    std::uint64_t count = 1;
    for (int a = 0; a < dim; ++a) {
      count *= static_cast<std::uint64_t>(side);
      if (count > (1u << 24))
        throw ConfigError("n", "n^d too large (limit 2^24 vertices)");
    }
    vertex_count_ = static_cast<VertexId>(count);
    edge_count_ = static_cast<EdgeIndex>(count * static_cast<std::uint64_t>(dim));

    strides_.resize(d_);
    std::uint32_t s = 1;
    for (int a = 0; a < d_; ++a) {
      strides_[a] = s;
      s *= static_cast<std::uint32_t>(n_);
    }

    const unsigned deg = degree();
    neighbor_.resize(std::size_t(vertex_count_) * deg);
    edge_.resize(std::size_t(vertex_count_) * deg);
    for (VertexId v = 0; v < vertex_count_; ++v) {
      for (int a = 0; a < d_; ++a) {
        const std::uint32_t stride = strides_[a];
        const std::uint32_t c = (v / stride) % static_cast<std::uint32_t>(n_);
        const VertexId up =
            c + 1 == static_cast<std::uint32_t>(n_) ? v - stride * (n_ - 1) : v + stride;
        const VertexId down =
            c == 0 ? v + stride * (n_ - 1) : v - stride;
        neighbor_[std::size_t(v) * deg + 2 * a] = up;
        neighbor_[std::size_t(v) * deg + 2 * a + 1] = down;
        edge_[std::size_t(v) * deg + 2 * a] = static_cast<EdgeIndex>(v) * d_ + a;
        edge_[std::size_t(v) * deg + 2 * a + 1] =
            static_cast<EdgeIndex>(down) * d_ + a;
      }
    }
  }

  int dim() const noexcept { return d_; }
  int side() const noexcept { return n_; }
  VertexId vertex_count() const noexcept { return vertex_count_; }
  EdgeIndex edge_count() const noexcept { return edge_count_; }
  unsigned degree() const noexcept { return 2 * static_cast<unsigned>(d_); }

  /// Coordinates -> vertex id, reducing each coordinate mod n.
  VertexId encode(std::span<const long long> coords) const {
    if (coords.size() != static_cast<std::size_t>(d_))
      throw ConfigError("coords", "expected " + std::to_string(d_) +
                                      " coordinates, got " +
                                      std::to_string(coords.size()));
    VertexId v = 0;
    for (int a = 0; a < d_; ++a) {
      long long c = coords[a] % n_;
      if (c < 0) c += n_;
      v += static_cast<VertexId>(c) * strides_[a];
    }
    return v;
  }

  std::vector<std::uint32_t> decode(VertexId v) const {
    std::vector<std::uint32_t> coords(d_);
    for (int a = 0; a < d_; ++a) {
      coords[a] = (v / strides_[a]) % static_cast<std::uint32_t>(n_);
    }
    return coords;
  }

  VertexId neighbor(VertexId v, unsigned slot) const noexcept {
    return neighbor_[std::size_t(v) * degree() + slot];
  }

  EdgeIndex incident_edge(VertexId v, unsigned slot) const noexcept {
    return edge_[std::size_t(v) * degree() + slot];
  }

  /// The 2d (edge, neighbor) pairs in slot order.
  std::vector<std::pair<EdgeIndex, VertexId>> incident_edges(VertexId v) const {
    std::vector<std::pair<EdgeIndex, VertexId>> out;
    out.reserve(degree());
    for (unsigned k = 0; k < degree(); ++k)
      out.emplace_back(incident_edge(v, k), neighbor(v, k));
    return out;
  }

  VertexId edge_base(EdgeIndex e) const noexcept {
    return static_cast<VertexId>(e / static_cast<EdgeIndex>(d_));
  }
  unsigned edge_axis(EdgeIndex e) const noexcept {
    return static_cast<unsigned>(e % static_cast<EdgeIndex>(d_));
  }
  /// The endpoint of e other than its base.
  VertexId edge_other(EdgeIndex e) const noexcept {
    return neighbor(edge_base(e), 2 * edge_axis(e));
  }

  bool edge_incident(EdgeIndex e, VertexId v) const noexcept {
    return edge_base(e) == v || edge_other(e) == v;
  }

  /// Graph distance on the torus: sum over axes of min(|delta|, n-|delta|).
  unsigned distance(VertexId u, VertexId v) const noexcept {
    unsigned total = 0;
    for (int a = 0; a < d_; ++a) {
      const int cu = int((u / strides_[a]) % static_cast<std::uint32_t>(n_));
      const int cv = int((v / strides_[a]) % static_cast<std::uint32_t>(n_));
      const int delta = cu > cv ? cu - cv : cv - cu;
      total += static_cast<unsigned>(delta < n_ - delta ? delta : n_ - delta);
    }
    return total;
  }

  /// Signed coordinate displacement from u to v, each component wrapped into
  /// (-n/2, n/2].
  std::vector<int> displacement(VertexId u, VertexId v) const {
    std::vector<int> out(d_);
    for (int a = 0; a < d_; ++a) {
      const int cu = int((u / strides_[a]) % static_cast<std::uint32_t>(n_));
      const int cv = int((v / strides_[a]) % static_cast<std::uint32_t>(n_));
      int delta = cv - cu;
      if (delta > n_ / 2) delta -= n_;
      if (delta <= -((n_ + 1) / 2)) delta += n_;
      out[a] = delta;
    }
    return out;
  }

  /// Vertex with every coordinate shifted by floor(n/2): the most distant
  /// vertex from v.
  VertexId antipode(VertexId v) const {
    VertexId out = 0;
    for (int a = 0; a < d_; ++a) {
      const std::uint32_t c = (v / strides_[a]) % static_cast<std::uint32_t>(n_);
      const std::uint32_t shifted = (c + static_cast<std::uint32_t>(n_ / 2)) %
                                    static_cast<std::uint32_t>(n_);
      out += shifted * strides_[a];
    }
    return out;
  }

 private:
  int d_;
  int n_;
  VertexId vertex_count_ = 0;
  EdgeIndex edge_count_ = 0;
  std::vector<std::uint32_t> strides_;
  std::vector<VertexId> neighbor_;
  std::vector<EdgeIndex> edge_;
};

}  // namespace dynperc
