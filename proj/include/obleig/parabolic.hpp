#pragma once

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <vector>

#include "obleig/common.hpp"
#include "obleig/errors.hpp"
#include "obleig/fields.hpp"
#include "obleig/grid.hpp"
#include "obleig/operators.hpp"

namespace obleig {

/// Reaction term of u_t = L u + f(x, u). The slope at zero and the
/// Lipschitz constant in u over the working range are declared by the
/// caller; the latter drives the time-step restriction.
struct ReactionSpec {
  std::function<double(Point, double)> f = [](Point, double) { return 0.0; };
  std::function<double(Point)> fs0 = [](Point) { return 0.0; };  // d/du f at u = 0
  double lipschitz = 0;
  bool kpp_declared = false;  // f(x, u) <= fs0(x) u claimed on (0, 1]
  double saturation = 0;      // positive: a state with f(x, saturation) = 0

  static ReactionSpec none() { return ReactionSpec{}; }

  static ReactionSpec logistic() { return scaled_logistic(1.0); }

  static ReactionSpec scaled_logistic(double a) {
    ReactionSpec r;
    r.f = [a](Point, double u) { return a * u * (1 - u); };
    r.fs0 = [a](Point) { return a; };
    r.lipschitz = 3 * std::abs(a);  // |1 - 2u| over u in [-1, 2]
    r.kpp_declared = a > 0;
    r.saturation = 1;
    return r;
  }

  static ReactionSpec decay() {
    ReactionSpec r;
    r.f = [](Point, double u) { return -u; };
    r.fs0 = [](Point) { return -1.0; };
    r.lipschitz = 1;
    return r;
  }

  /// Zeroth-order coupling f(x, u) = c(x) u, used to carry the potential
  /// explicitly while the implicit elliptic part runs with c stripped.
  static ReactionSpec linear(ScalarField c) {
    ReactionSpec r;
    if (!c.lower_bound() || !c.upper_bound())
      throw ConfigError("linear reaction needs declared bounds on the coupling field");
    double lip = std::max(std::abs(*c.lower_bound()), std::abs(*c.upper_bound()));
    auto cc = std::make_shared<ScalarField>(std::move(c));
    r.f = [cc](Point p, double u) { return (*cc)(p)*u; };
    r.fs0 = [cc](Point p) { return (*cc)(p); };
    r.lipschitz = lip;
    return r;
  }

  /// Sampled check that the reaction sits below its linearisation at zero
  /// on (0, 1], at the given probe locations. Evidence, not proof.
  bool is_kpp(const std::vector<Point>& probes, double tol = 1e-9, int samples = 64) const {
    for (Point p : probes) {
      if (std::abs(f(p, 0.0)) > tol) return false;
      double slope = fs0(p);
      for (int k = 1; k <= samples; ++k) {
        double u = double(k) / samples;
        if (f(p, u) > slope * u + tol) return false;
      }
    }
    return true;
  }
};

struct SimConfig {
  double t_end = 1;
  double dt = 0.01;
  double frame_dt = 0;         // 0 records every step
  double blowup_factor = 1e6;  // ceiling relative to 1 + initial sup
};

/// Recorded evolution: times and the nodal vectors at those times, in the
/// system ordering of the pencil the run was built on.
struct Trajectory {
  std::shared_ptr<const TruncatedGrid> grid;
  std::vector<int> sys_of_node;
  std::vector<double> times;
  std::vector<Eigen::VectorXd> frames;

  double value_at(size_t frame, int node_idx) const {
    int s = sys_of_node[node_idx];
    return s >= 0 ? frames[frame][s] : 0.0;
  }
};

/// Semi-implicit evolution of u_t = L u + f(x, u): the stiff elliptic part
/// is folded into one factored system (diag(w) + dt M) and the reaction is
/// advanced explicitly. The truncation cap holds the initial state fixed,
/// restored through the eliminated cap couplings; with initial data
/// vanishing there this is the homogeneous Dirichlet cap. First-order
/// oblique rows keep the step monotone, which the comparison check relies
/// on.
inline Trajectory evolve(const DiscreteSystem& sys, const ReactionSpec& reaction,
                         const std::function<double(Point)>& u0, const SimConfig& cfg) {
  if (!(cfg.dt > 0) || !(cfg.t_end > 0)) throw ConfigError("evolution needs positive dt and t_end");
  if (cfg.dt * reaction.lipschitz > 0.5)
    throw ConfigError("dt times the reaction Lipschitz constant must stay at or below 1/2");
  const int n = sys.n();
  Eigen::SparseMatrix<double> S = sys.M * cfg.dt;
  for (int k = 0; k < S.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(S, k); it; ++it)
      if (it.row() == it.col()) it.valueRef() += sys.w[it.row()];
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(S);
  if (lu.info() != Eigen::Success)
    throw ResolventSingular("time-step system did not factor");

  std::vector<Point> pos(n);
  Eigen::VectorXd u(n);
  for (int si = 0; si < n; ++si) {
    pos[si] = sys.grid->node(sys.node_of_sys[si]).pos;
    u[si] = u0(pos[si]);
  }
  // cap data enters each implicit solve through the eliminated couplings
  Eigen::VectorXd lift = Eigen::VectorXd::Zero(n);
  for (const CapLink& cl : sys.cap_links) lift[cl.sys] -= cl.m * u0(cl.at);
  double ceiling = cfg.blowup_factor * (1 + u.cwiseAbs().maxCoeff());

  Trajectory traj;
  traj.grid = sys.grid;
  traj.sys_of_node = sys.sys_of_node;
  traj.times.push_back(0);
  traj.frames.push_back(u);

  int steps = static_cast<int>(std::ceil(cfg.t_end / cfg.dt - 1e-12));
  int stride = cfg.frame_dt > 0 ? std::max(1, int(std::round(cfg.frame_dt / cfg.dt))) : 1;
  for (int step = 1; step <= steps; ++step) {
    Eigen::VectorXd rhs(n);
    for (int si = 0; si < n; ++si)
      rhs[si] = sys.w[si] * (u[si] + cfg.dt * reaction.f(pos[si], u[si])) + cfg.dt * lift[si];
    u = lu.solve(rhs);
    if (!u.allFinite() || u.cwiseAbs().maxCoeff() > ceiling)
      throw BlowUp("evolution exceeded the blow-up ceiling");
    if (step % stride == 0 || step == steps) {
      traj.times.push_back(step * cfg.dt);
      traj.frames.push_back(u);
    }
  }
  return traj;
}

/// Evolve two ordered initial states and report the worst violation of
/// the ordering across all recorded frames. Nonpositive means the
/// comparison principle held to machine accuracy.
inline double comparison_check(const DiscreteSystem& sys, const ReactionSpec& reaction,
                               const std::function<double(Point)>& u_low,
                               const std::function<double(Point)>& u_high,
                               const SimConfig& cfg) {
  Trajectory a = evolve(sys, reaction, u_low, cfg);
  Trajectory b = evolve(sys, reaction, u_high, cfg);
  double worst = -1e300;
  for (size_t k = 0; k < a.frames.size(); ++k)
    worst = std::max(worst, (a.frames[k] - b.frames[k]).maxCoeff());
  return worst;
}

/// Discrete mass sum(w u) of a frame; exactly conserved by the pure
/// divergence-form diffusion step with no reaction and no caps.
inline double frame_mass(const Trajectory& traj, size_t frame, const Eigen::VectorXd& w) {
  return w.dot(traj.frames[frame]);
}

struct FrontFit {
  double speed = 0;
  std::vector<double> times;
  std::vector<double> positions;
};

/// Rightward front position of a one-dimensional trajectory: the largest x
/// where the profile crosses the level, linearly interpolated, fitted by
/// least squares over the requested time window.
inline FrontFit measure_front_speed(const Trajectory& traj, double level, double t_lo,
                                    double t_hi) {
  const TruncatedGrid& g = *traj.grid;
  if (g.dim() != 1) throw MismatchedScenario("front speed is measured on one-dimensional runs");
  // carrier nodes sorted by position
  std::vector<int> order;
  for (int i = 0; i < g.size(); ++i)
    if (traj.sys_of_node[i] >= 0) order.push_back(i);
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return g.node(a).pos.x < g.node(b).pos.x; });
  FrontFit fit;
  for (size_t k = 0; k < traj.times.size(); ++k) {
    double t = traj.times[k];
    if (t < t_lo || t > t_hi) continue;
    double front = -1e300;
    bool found = false;
    for (size_t m = order.size(); m-- > 1;) {
      double uhi = traj.value_at(k, order[m]);
      double ulo = traj.value_at(k, order[m - 1]);
      if (uhi < level && ulo >= level) {
        double x1 = g.node(order[m - 1]).pos.x, x2 = g.node(order[m]).pos.x;
        front = x1 + (level - ulo) / (uhi - ulo) * (x2 - x1);
        found = true;
        break;
      }
    }
    if (!found) continue;
    fit.times.push_back(t);
    fit.positions.push_back(front);
  }
  if (fit.times.size() < 2)
    throw NoFront("no level crossing found in the requested time window");
  double n = double(fit.times.size()), st = 0, sx = 0, stt = 0, stx = 0;
  for (size_t k = 0; k < fit.times.size(); ++k) {
    st += fit.times[k];
    sx += fit.positions[k];
    stt += fit.times[k] * fit.times[k];
    stx += fit.times[k] * fit.positions[k];
  }
  double det = n * stt - st * st;
  if (std::abs(det) < 1e-30) throw NoFront("time window too narrow to fit a speed");
  fit.speed = (n * stx - st * sx) / det;
  return fit;
}

}  // namespace obleig
