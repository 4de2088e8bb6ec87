#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "obleig/common.hpp"
#include "obleig/errors.hpp"
#include "obleig/parabolic.hpp"

namespace obleig {

/// Long-run fate of the zero state as seen through probe windows. The
/// uniform verdicts need every window to agree; the local ones speak only
/// for the central windows.
enum class Stability {
  converges_uniformly_to_zero,
  converges_locally_to_zero,
  locally_repelled,
  uniformly_repelled,
  grows_unbounded,
  inconclusive
};

inline const char* stability_name(Stability s) {
  switch (s) {
    case Stability::converges_uniformly_to_zero: return "converges_uniformly_to_zero";
    case Stability::converges_locally_to_zero: return "converges_locally_to_zero";
    case Stability::locally_repelled: return "locally_repelled";
    case Stability::uniformly_repelled: return "uniformly_repelled";
    case Stability::grows_unbounded: return "grows_unbounded";
    case Stability::inconclusive: return "inconclusive";
  }
  return "?";
}

/// Axis-aligned probe region. Central windows sit where the initial datum
/// lives and decide the local verdicts; the rest watch the far field.
struct ProbeWindow {
  Box box;
  bool central = false;
  std::string label;
};

struct ClassifyThresholds {
  double zero_level = 1e-3;  // tail sup at or below this counts as converged
  double repel_factor = 10;  // tail floor at this multiple of the initial sup means repelled
};

struct WindowReport {
  ProbeWindow window;
  double initial_sup = 0;
  double tail_sup = 0;
  /// min over the window of the running lower envelope over the tail
  /// half of the run: the sampled surrogate of inf_x liminf_t u.
  double lower_envelope = 0;
  bool converged = false;
  bool repelled = false;
};

struct StabilityVerdict {
  Stability classification = Stability::inconclusive;
  std::vector<WindowReport> windows;
  double inf_liminf_estimate = 0;        // min of the window envelopes
  std::vector<double> trace_times;       // recorded times
  std::vector<double> sup_norm_trace;    // global sup |u| at those times
  double supnorm_growth = 0;             // trace at the end over trace at half time
};

/// Classify a recorded run against its probe windows. Convergence reads
/// the tail sup, repulsion the tail lower envelope against the overall
/// initial size (so windows the datum never touched can still register
/// repulsion once the state grows into them).
inline StabilityVerdict classify_long_run(const Trajectory& traj,
                                          const std::vector<ProbeWindow>& windows,
                                          const ClassifyThresholds& th = {}) {
  if (windows.empty()) throw ConfigError("classification needs at least one probe window");
  if (traj.frames.size() < 2) throw ConfigError("classification needs a recorded run");
  const TruncatedGrid& g = *traj.grid;
  const int dim = g.dim();
  const double t_end = traj.times.back();

  StabilityVerdict out;
  double global_initial = 0;
  for (size_t k = 0; k < traj.times.size(); ++k) {
    out.trace_times.push_back(traj.times[k]);
    out.sup_norm_trace.push_back(traj.frames[k].cwiseAbs().maxCoeff());
  }
  global_initial = out.sup_norm_trace.front();
  {
    double half = out.sup_norm_trace.front();
    for (size_t k = 0; k < traj.times.size(); ++k)
      if (traj.times[k] >= t_end / 2) {
        half = out.sup_norm_trace[k];
        break;
      }
    out.supnorm_growth = half > 0 ? out.sup_norm_trace.back() / half : 0.0;
  }

  bool any_central = false;
  for (const ProbeWindow& w : windows) any_central |= w.central;
  if (!any_central) throw ConfigError("classification needs a central probe window");

  double env_min = std::numeric_limits<double>::infinity();
  for (const ProbeWindow& w : windows) {
    WindowReport rep;
    rep.window = w;
    std::vector<int> nodes;
    for (int i = 0; i < g.size(); ++i) {
      if (traj.sys_of_node[i] < 0) continue;
      if (w.box.contains(g.node(i).pos, dim)) nodes.push_back(i);
    }
    if (nodes.empty()) throw ConfigError("probe window contains no carrier nodes");
    for (int i : nodes) rep.initial_sup = std::max(rep.initial_sup, std::abs(traj.value_at(0, i)));
    double env = std::numeric_limits<double>::infinity();
    for (size_t k = 0; k < traj.times.size(); ++k) {
      if (traj.times[k] < t_end / 2) continue;
      double frame_min = std::numeric_limits<double>::infinity();
      for (int i : nodes) {
        double v = traj.value_at(k, i);
        rep.tail_sup = std::max(rep.tail_sup, std::abs(v));
        frame_min = std::min(frame_min, v);
      }
      env = std::min(env, frame_min);
    }
    rep.lower_envelope = std::isfinite(env) ? env : 0.0;
    rep.converged = rep.tail_sup <= th.zero_level;
    rep.repelled = global_initial > 0 && rep.lower_envelope >= th.repel_factor * global_initial;
    env_min = std::min(env_min, rep.lower_envelope);
    out.windows.push_back(rep);
  }
  out.inf_liminf_estimate = std::isfinite(env_min) ? env_min : 0.0;

  bool all_conv = true, all_rep = true, central_conv = true, central_rep = true;
  for (const WindowReport& r : out.windows) {
    all_conv &= r.converged;
    all_rep &= r.repelled;
    if (r.window.central) {
      central_conv &= r.converged;
      central_rep &= r.repelled;
    }
  }
  if (all_conv) out.classification = Stability::converges_uniformly_to_zero;
  else if (central_conv) out.classification = Stability::converges_locally_to_zero;
  else if (all_rep) out.classification = Stability::uniformly_repelled;
  else if (central_rep) out.classification = Stability::locally_repelled;
  else out.classification = Stability::inconclusive;
  return out;
}

struct HairTriggerResult {
  StabilityVerdict verdict;  // from the reference (smaller) radius
  Trajectory traj;           // that run, for plots and follow-up probes
  double max_window_discrepancy = 0;
  /// Soft flag: the window statistics moved by more than five percent
  /// between the two truncation radii, so the verdict may be a cap
  /// artifact rather than a property of the unbounded problem.
  bool truncation_sensitive = false;
};

/// Run the same evolution on two truncation radii and classify on the
/// smaller one; the larger run only audits how much the window statistics
/// depend on the cap.
inline HairTriggerResult hair_trigger_experiment(
    const Domain& dom, const EllipticOperator& L, const ObliqueBoundary& B,
    const ReactionSpec& reaction, const std::function<double(Point)>& u0, Point y,
    double r_small, double r_large, double h, const SimConfig& cfg,
    const std::vector<ProbeWindow>& windows, const ClassifyThresholds& th = {},
    ObliqueOrder order = ObliqueOrder::first) {
  if (!(r_small < r_large)) throw ConfigError("sensitivity pair needs increasing radii");
  auto run = [&](double r) {
    auto grid = std::make_shared<const TruncatedGrid>(TruncatedGrid::truncate(dom, y, r, h));
    DiscreteSystem sys = assemble(grid, L, B, order);
    return evolve(sys, reaction, u0, cfg);
  };
  HairTriggerResult res;
  res.traj = run(r_small);
  res.verdict = classify_long_run(res.traj, windows, th);
  StabilityVerdict other = classify_long_run(run(r_large), windows, th);
  double floor = std::max(th.zero_level, 1e-12);
  for (size_t k = 0; k < res.verdict.windows.size(); ++k) {
    const WindowReport& a = res.verdict.windows[k];
    const WindowReport& b = other.windows[k];
    double denom = std::max({std::abs(b.tail_sup), std::abs(a.tail_sup), floor});
    double d1 = std::abs(a.tail_sup - b.tail_sup) / denom;
    double denom2 = std::max({std::abs(b.lower_envelope), std::abs(a.lower_envelope), floor});
    double d2 = std::abs(a.lower_envelope - b.lower_envelope) / denom2;
    res.max_window_discrepancy = std::max({res.max_window_discrepancy, d1, d2});
  }
  res.truncation_sensitive = res.max_window_discrepancy > 0.05;
  return res;
}

}  // namespace obleig
