#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <unordered_map>
#include <vector>

#include "obleig/common.hpp"
#include "obleig/domain.hpp"
#include "obleig/errors.hpp"

namespace obleig {

enum class NodeRole {
  interior,  // sdf > h/2 and strictly inside the truncation sphere
  oblique,   // boundary band of the domain, inside the sphere
  cap        // at or beyond the truncation sphere
};

struct GridNode {
  std::int64_t ix = 0, iy = 0;  // lattice offsets from the centre
  Point pos;
  NodeRole role = NodeRole::interior;
  double sdf = 0.0;     // domain SDF at pos
  double radius = 0.0;  // |pos - centre|
  int unknown = -1;     // dense index over interior + oblique nodes
  Point anchor;         // oblique: nearest boundary point
  Point normal;         // oblique: outward unit normal at anchor
};

/// One interpolation contribution: lattice node index and its weight.
struct InterpTerm {
  int node;
  double w;
};

/// Uniform lattice of spacing h centred at y, flood-filled over the
/// connected component of y inside the domain and clipped to the ball of
/// radius r. Nodes just past the domain boundary are kept as oblique
/// nodes (boundary-condition carriers); nodes at or past the sphere are
/// cap nodes (homogeneous Dirichlet, eliminated during assembly).
class TruncatedGrid {
 public:
  static TruncatedGrid truncate(const Domain& dom, Point y, double r, double h) {
    if (!(r > 0) || !(h > 0)) throw ConfigError("truncation needs positive radius and spacing");
    if (!(r / h < double(kMaxIndex))) throw ConfigError("truncation radius too large for spacing");
    if (!(h < r / 4)) throw ConfigError("truncation needs h < r/4");
    if (double rho = dom.interior_ball_radius(); rho > 0 && !(h < rho / 2))
      throw ConfigError("spacing must resolve the declared interior-ball radius (h < rho/2)");
    TruncatedGrid g(dom, y, r, h);
    if (dom.sdf(y) <= h / 2)
      throw SeedOutsideDomain("centre of truncation is not strictly inside the domain");
    g.register_node(0, 0);
    std::deque<int> queue{0};
    const int naxes = g.dim();
    while (!queue.empty()) {
      int cur = queue.front();
      queue.pop_front();
      const GridNode n = g.nodes_[cur];  // copy: vector may reallocate
      if (n.role != NodeRole::interior) continue;
      for (int axis = 0; axis < naxes; ++axis) {
        for (int dir = -1; dir <= 1; dir += 2) {
          std::int64_t i = n.ix + (axis == 0 ? dir : 0);
          std::int64_t j = n.iy + (axis == 1 ? dir : 0);
          if (g.lookup_.count(pack(i, j))) continue;
          int idx = g.register_node(i, j);
          if (g.nodes_[idx].role == NodeRole::interior) queue.push_back(idx);
        }
      }
    }
    g.assign_unknowns();
    if (g.n_interior_ == 0) throw EmptyTruncation("no interior nodes inside the truncation");
    return g;
  }

  int dim() const { return dom_.dim(); }
  double h() const { return h_; }
  double radius() const { return r_; }
  Point centre() const { return y_; }
  const Domain& domain() const { return dom_; }

  const std::vector<GridNode>& nodes() const { return nodes_; }
  const GridNode& node(int idx) const { return nodes_[idx]; }
  int size() const { return static_cast<int>(nodes_.size()); }
  int num_interior() const { return n_interior_; }
  int num_oblique() const { return n_oblique_; }
  int num_cap() const { return n_cap_; }
  /// Nodes that carry an unknown: interior plus oblique.
  int num_unknowns() const { return n_interior_ + n_oblique_; }

  int find(std::int64_t i, std::int64_t j) const {
    auto it = lookup_.find(pack(i, j));
    return it == lookup_.end() ? -1 : it->second;
  }

  /// Registered neighbour of a node along an axis (dir is -1 or +1), or -1
  /// if the neighbour was never reached by the flood fill.
  int neighbor(int idx, int axis, int dir) const {
    const GridNode& n = nodes_[idx];
    return find(n.ix + (axis == 0 ? dir : 0), n.iy + (axis == 1 ? dir : 0));
  }

  /// Fraction theta in (0,1] of the arm from an interior node towards a cap
  /// neighbour at which the arm crosses the truncation sphere. Clamped away
  /// from zero so shortened-arm stencils stay bounded.
  double cap_arm_fraction(int interior_idx, int axis, int dir) const {
    const GridNode& n = nodes_[interior_idx];
    Point d = n.pos - y_;
    double e = axis == 0 ? d.x : d.y;
    // |d + t h e_axis|^2 = r^2, smallest positive root
    double a = h_ * h_, b = 2 * h_ * e * dir, c = dot(d, d) - r_ * r_;
    double disc = b * b - 4 * a * c;
    double t = disc >= 0 ? (-b + std::sqrt(disc)) / (2 * a) : 1.0;
    return std::clamp(t, kMinArm, 1.0);
  }

  /// Fraction of the arm from an inside node to an outside node at which
  /// the domain boundary sits, by linear interpolation of the SDF.
  double wall_arm_fraction(int inside_idx, int outside_idx) const {
    double si = nodes_[inside_idx].sdf, so = nodes_[outside_idx].sdf;
    if (si <= so) return 1.0;  // no crossing resolvable
    return std::clamp(si / (si - so), kMinArm, 1.0);
  }

  /// Multilinear interpolation of a field of nodal unknowns at an arbitrary
  /// point. Cap corners contribute zero (the field vanishes past the
  /// sphere); corners the flood fill never reached have their weight
  /// redistributed over the corners that are present.
  std::vector<InterpTerm> interpolate(Point q, double* cap_weight = nullptr,
                                      std::vector<InterpTerm>* cap_terms = nullptr) const {
    double fx = (q.x - y_.x) / h_, fy = (q.y - y_.y) / h_;
    std::int64_t i0 = static_cast<std::int64_t>(std::floor(fx));
    std::int64_t j0 = dim() == 2 ? static_cast<std::int64_t>(std::floor(fy)) : 0;
    double tx = fx - double(i0), ty = dim() == 2 ? fy - double(j0) : 0.0;
    const int ncorner = dim() == 2 ? 4 : 2;
    std::vector<InterpTerm> terms;
    terms.reserve(ncorner);
    double missing = 0, cap = 0;
    for (int k = 0; k < ncorner; ++k) {
      int di = k & 1, dj = k >> 1;
      double w = (di ? tx : 1 - tx) * (dim() == 2 ? (dj ? ty : 1 - ty) : 1.0);
      if (w == 0) continue;
      int idx = find(i0 + di, j0 + dj);
      if (idx < 0) {
        missing += w;
      } else if (nodes_[idx].role == NodeRole::cap) {
        cap += w;
        if (cap_terms) cap_terms->push_back({idx, w});
      } else {
        terms.push_back({idx, w});
      }
    }
    if (terms.empty()) throw EmptyTruncation("interpolation point has no resolvable neighbours");
    if (missing > 0) {
      double scale = 1.0 / (1.0 - missing);
      for (auto& t : terms) t.w *= scale;
      cap *= scale;
      if (cap_terms)
        for (auto& t : *cap_terms) t.w *= scale;
    }
    if (cap_weight) *cap_weight = cap;
    return terms;
  }

  /// Quadrature of a function over the truncated domain: each interior node
  /// and each oblique node still inside the domain contributes a full cell.
  template <class F>
  double integrate(F&& f) const {
    double acc = 0;
    double cell = std::pow(h_, dim());
    for (const auto& n : nodes_) {
      if (n.role == NodeRole::cap) continue;
      if (n.role == NodeRole::oblique && n.sdf <= 0) continue;
      acc += f(n.pos) * cell;
    }
    return acc;
  }

  /// Measure of the truncated domain under the same quadrature.
  double measure() const {
    return integrate([](Point) { return 1.0; });
  }

 private:
  static constexpr std::int64_t kMaxIndex = std::int64_t(1) << 21;
  static constexpr double kMinArm = 1e-3;

  TruncatedGrid(const Domain& dom, Point y, double r, double h)
      : dom_(dom), y_(y), r_(r), h_(h) {}

  static std::int64_t pack(std::int64_t i, std::int64_t j) {
    return ((i + kMaxIndex) << 22) + (j + kMaxIndex);
  }

  int register_node(std::int64_t i, std::int64_t j) {
    GridNode n;
    n.ix = i;
    n.iy = j;
    n.pos = {y_.x + double(i) * h_, y_.y + double(j) * h_};
    n.sdf = dom_.sdf(n.pos);
    n.radius = dist(n.pos, y_);
    if (n.radius >= r_ * (1 - 1e-12)) {
      n.role = NodeRole::cap;
      ++n_cap_;
    } else if (n.sdf > h_ / 2) {
      n.role = NodeRole::interior;
      ++n_interior_;
    } else {
      n.role = NodeRole::oblique;
      n.anchor = dom_.project_to_boundary(n.pos);
      n.normal = dom_.outward_normal(n.anchor);
      ++n_oblique_;
    }
    int idx = static_cast<int>(nodes_.size());
    nodes_.push_back(n);
    lookup_.emplace(pack(i, j), idx);
    return idx;
  }

  void assign_unknowns() {
    int k = 0;
    for (auto& n : nodes_)
      if (n.role != NodeRole::cap) n.unknown = k++;
  }

  Domain dom_;
  Point y_;
  double r_, h_;
  std::vector<GridNode> nodes_;
  std::unordered_map<std::int64_t, int> lookup_;
  int n_interior_ = 0, n_oblique_ = 0, n_cap_ = 0;
};

}  // namespace obleig
