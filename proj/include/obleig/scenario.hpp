#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "obleig/averages.hpp"
#include "obleig/certificates.hpp"
#include "obleig/classify.hpp"
#include "obleig/common.hpp"
#include "obleig/csvio.hpp"
#include "obleig/domain.hpp"
#include "obleig/eigensolver.hpp"
#include "obleig/errors.hpp"
#include "obleig/fields.hpp"
#include "obleig/geometry.hpp"
#include "obleig/grid.hpp"
#include "obleig/operators.hpp"
#include "obleig/parabolic.hpp"
#include "obleig/plot.hpp"
#include "obleig/relations.hpp"

namespace obleig {

using json = nlohmann::ordered_json;

/// Command-line and programmatic overrides applied on top of a scenario's
/// own numerics block.
struct RunOptions {
  std::string out_dir;  // empty: no artifacts written
  std::optional<double> h, dt, tol;
  std::optional<std::vector<double>> radii;
  bool keep_trajectory = false;
};

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Everything a scenario run produced: named scalar results, the
/// pass/fail record of its expectation checks, the bound bundle feeding
/// the relations audit, and the task-specific payloads.
struct RunReport {
  std::string scenario, task, provenance, anchor;
  bool ok = true;
  std::vector<CheckResult> checks;
  std::vector<std::pair<std::string, double>> values;
  std::string classification;  // simulate/classify tasks

  RelationsLedger ledger;
  bool selfadjoint = false;
  bool iv_applicable = true;

  std::optional<SweepResult> sweep;
  std::optional<GlobalSweepResult> global_sweep;
  std::optional<AverageSchedule> means;
  std::optional<LeastMeanResult> least;
  std::optional<StabilityVerdict> verdict;
  std::optional<FrontFit> front;
  std::vector<CertificateReport> certificates;
  std::vector<std::pair<std::string, GrowthAudit>> growth;
  std::vector<std::pair<std::string, InteriorBallAudit>> interior_ball;
  std::vector<std::pair<std::string, TransversalityReport>> transversality;
  std::optional<CoveringReport> covering;
  std::optional<RelationsAudit> relations;
  std::vector<RunReport> members;
  std::optional<Trajectory> trajectory;
  std::vector<std::string> artifacts;

  void set(const std::string& key, double v) {
    for (auto& kv : values)
      if (kv.first == key) {
        kv.second = v;
        return;
      }
    values.emplace_back(key, v);
  }
  std::optional<double> get(const std::string& key) const {
    for (const auto& kv : values)
      if (kv.first == key) return kv.second;
    return std::nullopt;
  }
  void check(const std::string& name, bool passed, const std::string& detail) {
    checks.push_back({name, passed, detail});
    ok = ok && passed;
  }
};

/// A parsed scenario file: validated envelope plus the raw configuration.
class Scenario {
 public:
  static Scenario from_json_text(const std::string& text) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded()) throw SchemaMismatch("scenario file is not valid JSON");
    return Scenario(std::move(j));
  }

  static Scenario from_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open scenario file '" + path + "'");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return from_json_text(text);
  }

  const std::string& name() const { return name_; }
  const std::string& task() const { return task_; }
  const std::string& provenance() const { return provenance_; }
  const std::string& anchor() const { return anchor_; }
  const json& config() const { return j_; }

 private:
  explicit Scenario(json j) : j_(std::move(j)) {
    if (!j_.is_object()) throw SchemaMismatch("scenario must be a JSON object");
    if (j_.value("schema", 0) != 1) throw SchemaMismatch("unsupported scenario schema version");
    for (const char* key : {"name", "task", "provenance", "anchor"})
      if (!j_.contains(key) || !j_[key].is_string())
        throw SchemaMismatch(std::string("scenario is missing the '") + key + "' field");
    name_ = j_["name"].get<std::string>();
    task_ = j_["task"].get<std::string>();
    provenance_ = j_["provenance"].get<std::string>();
    anchor_ = j_["anchor"].get<std::string>();
    if (provenance_ != "PAPER" && provenance_ != "TRIVIAL" && provenance_ != "DERIVED")
      throw SchemaMismatch("provenance must be PAPER, TRIVIAL or DERIVED");
  }

  json j_;
  std::string name_, task_, provenance_, anchor_;
};

namespace detail {

inline Point parse_point(const json& j) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_array() && (j.size() == 1 || j.size() == 2)) {
    Point p{j[0].get<double>(), 0.0};
    if (j.size() == 2) p.y = j[1].get<double>();
    return p;
  }
  throw SchemaMismatch("expected a point: number or [x, y]");
}

inline std::vector<double> parse_numbers(const json& j) {
  if (!j.is_array()) throw SchemaMismatch("expected an array of numbers");
  std::vector<double> out;
  for (const auto& v : j) out.push_back(v.get<double>());
  return out;
}

inline Domain parse_domain(const json& j) {
  if (!j.is_object() || !j.contains("kind")) throw SchemaMismatch("domain needs a 'kind'");
  std::string kind = j["kind"].get<std::string>();
  int dim = j.value("dim", 2);
  Domain d = [&]() -> Domain {
    if (kind == "whole_space") return Domain::whole_space(dim);
    if (kind == "strip")
      return Domain::strip(j.at("half_width").get<double>(), j.value("axis", dim == 1 ? 0 : 1),
                           j.value("center", 0.0), dim);
    if (kind == "ball")
      return Domain::ball(parse_point(j.value("centre", json::array({0, 0}))),
                          j.at("radius").get<double>(), dim);
    if (kind == "ball_complement")
      return Domain::ball_complement(parse_point(j.value("centre", json::array({0, 0}))),
                                     j.at("radius").get<double>(), dim);
    if (kind == "half_plane")
      return Domain::half_plane(parse_point(j.at("normal")), j.value("offset", 0.0), dim);
    if (kind == "annulus")
      return Domain::annulus(parse_point(j.value("centre", json::array({0, 0}))),
                             j.at("r_in").get<double>(), j.at("r_out").get<double>(), dim);
    if (kind == "annuli_chain") return annuli_chain(j.value("n", 4), dim);
    if (kind == "join" || kind == "meet") {
      std::vector<Domain> parts;
      for (const auto& p : j.at("parts")) parts.push_back(parse_domain(p));
      double rho = j.value("interior_ball_radius", 0.0);
      std::string desc = j.value("label", kind);
      return kind == "join" ? Domain::join(std::move(parts), rho, desc)
                            : Domain::meet(std::move(parts), rho, desc);
    }
    throw SchemaMismatch("unknown domain kind '" + kind + "'");
  }();
  if (j.contains("interior_ball_radius"))
    d.declare_interior_ball(j["interior_ball_radius"].get<double>());
  return d;
}

inline ScalarField parse_scalar(const json& j) {
  if (j.is_number()) return ScalarField::constant(j.get<double>());
  if (j.is_string()) {
    std::string s = j.get<std::string>();
    if (s.rfind("builtin:comb:", 0) == 0) {
      int n = std::stoi(s.substr(13));
      ScalarField f = comb_profile(n);
      f.with_bounds(-1, 1);
      return f;
    }
    return ScalarField::from_expression(s);
  }
  throw SchemaMismatch("expected a number or an expression string");
}

inline EllipticOperator parse_operator(const json& j, int dim) {
  EllipticOperator L;
  std::string form = j.value("form", "nondivergence");
  if (form == "selfadjoint") L.form = EllipticOperator::Form::selfadjoint_divergence;
  else if (form == "nondivergence") L.form = EllipticOperator::Form::nondivergence;
  else throw SchemaMismatch("operator form must be 'selfadjoint' or 'nondivergence'");
  if (j.contains("a")) {
    const json& a = j["a"];
    if (a.is_number()) L.A = MatrixField::isotropic(a.get<double>());
    else if (a.is_array() && a.size() == 2)
      L.A = MatrixField(parse_scalar(a[0]), parse_scalar(a[1]));
    else if (a.is_array() && a.size() == 3)
      L.A = MatrixField(parse_scalar(a[0]), parse_scalar(a[1]), parse_scalar(a[2]));
    else throw SchemaMismatch("operator 'a' must be a number, [a11, a22] or [a11, a12, a22]");
  }
  if (j.contains("b")) {
    std::vector<double> b = parse_numbers(j["b"]);
    if ((int)b.size() != dim) throw SchemaMismatch("drift length must match the dimension");
    Point bv{b[0], b.size() > 1 ? b[1] : 0.0};
    L.b = VectorField::constant(bv);
  }
  if (j.contains("c")) {
    L.c = parse_scalar(j["c"]);
    if (j.contains("c_bounds")) {
      std::vector<double> cb = parse_numbers(j["c_bounds"]);
      if (cb.size() != 2) throw SchemaMismatch("c_bounds must be [lo, hi]");
      L.c.with_bounds(cb[0], cb[1]);
    }
  }
  return L;
}

inline ObliqueBoundary parse_boundary(const json& parent) {
  ObliqueBoundary B = ObliqueBoundary::neumann();
  if (!parent.contains("boundary")) return B;
  const json& j = parent["boundary"];
  std::string kind = j.value("kind", "oblique");
  if (kind == "dirichlet") return ObliqueBoundary::dirichlet();
  if (kind != "oblique") throw SchemaMismatch("boundary kind must be 'oblique' or 'dirichlet'");
  std::string beta = j.value("beta", "normal");
  if (beta == "conormal") B.beta_mode = ObliqueBoundary::BetaMode::conormal;
  else if (beta != "normal") throw SchemaMismatch("beta mode must be 'normal' or 'conormal'");
  if (j.contains("gamma")) B.gamma = parse_scalar(j["gamma"]);
  return B;
}

/// Reaction block; returns the spec plus whether the zeroth-order part of
/// the operator moves into the reaction for time stepping.
inline std::pair<ReactionSpec, bool> parse_reaction(const json& parent, const ScalarField& c) {
  if (!parent.contains("reaction")) return {ReactionSpec::none(), false};
  const json& j = parent["reaction"];
  std::string kind = j.value("kind", "none");
  if (kind == "none") return {ReactionSpec::none(), false};
  if (kind == "logistic") return {ReactionSpec::logistic(), false};
  if (kind == "scaled_logistic")
    return {ReactionSpec::scaled_logistic(j.at("a").get<double>()), false};
  if (kind == "decay") return {ReactionSpec::decay(), false};
  if (kind == "linear_c") return {ReactionSpec::linear(c), true};
  throw SchemaMismatch("unknown reaction kind '" + kind + "'");
}

inline std::function<double(Point)> parse_u0(const json& j) {
  if (j.is_null()) return [](Point) { return 0.0; };
  std::string kind = j.value("kind", "zero");
  if (kind == "zero") return [](Point) { return 0.0; };
  if (kind == "constant") {
    double v = j.at("value").get<double>();
    return [v](Point) { return v; };
  }
  if (kind == "bump") {
    double amp = j.value("amplitude", 1.0);
    double width = j.value("width", 1.0);
    Point c = parse_point(j.value("centre", json::array({0, 0})));
    return [amp, width, c](Point p) {
      double t = dist(p, c) / width;
      if (t >= 1) return 0.0;
      double q = 1 - t * t;
      return amp * q * q * q;
    };
  }
  if (kind == "left_step") {
    double edge = j.value("edge", 0.0);
    double v = j.value("value", 1.0);
    return [edge, v](Point p) { return p.x <= edge ? v : 0.0; };
  }
  if (kind == "expr") {
    Expr e = Expr::parse(j.at("value").get<std::string>());
    return [e](Point p) { return e.eval(p.x, p.y); };
  }
  throw SchemaMismatch("unknown initial-state kind '" + kind + "'");
}

inline std::vector<ProbeWindow> parse_windows(const json& j) {
  std::vector<ProbeWindow> out;
  if (j.is_null()) return out;
  for (const auto& w : j) {
    ProbeWindow pw;
    const json& box = w.at("box");
    if (!box.is_array() || box.size() != 2) throw SchemaMismatch("window box must be [lo, hi]");
    if (box[0].is_number()) {
      pw.box.lo = {box[0].get<double>(), -1e30};
      pw.box.hi = {box[1].get<double>(), 1e30};
    } else {
      pw.box.lo = parse_point(box[0]);
      pw.box.hi = parse_point(box[1]);
    }
    pw.central = w.value("central", false);
    pw.label = w.value("label", std::string(pw.central ? "central" : "window"));
    out.push_back(pw);
  }
  return out;
}

struct CertificateSpec {
  Certificate cert;
  std::optional<json> operator_override;
  Point centre;
  double radius = 10;
  double sample_h = 0.01;
  std::string label;
};

inline CertificateSpec parse_certificate(const json& j, size_t index) {
  CertificateSpec spec;
  Certificate& c = spec.cert;
  c.phi = Expr::parse(j.at("phi").get<std::string>());
  c.lambda = j.at("lambda").get<double>();
  std::string sense = j.value("sense", "super");
  if (sense == "super") c.sense = Certificate::Sense::super;
  else if (sense == "sub") c.sense = Certificate::Sense::sub;
  else throw SchemaMismatch("certificate sense must be 'super' or 'sub'");
  c.claims_positive = false;
  c.claims_inf_positive = false;
  c.claims_bounded = false;
  for (const auto& cl : j.value("classes", json::array())) {
    std::string s = cl.get<std::string>();
    if (s == "positive") c.claims_positive = true;
    else if (s == "inf_positive") c.claims_positive = c.claims_inf_positive = true;
    else if (s == "bounded") c.claims_bounded = true;
    else throw SchemaMismatch("unknown certificate class '" + s + "'");
  }
  c.inf_margin = j.value("inf_margin", 0.0);
  c.sup_bound = j.value("sup_bound", 0.0);
  c.tol = j.value("tol", 1e-8);
  spec.centre = parse_point(j.value("centre", json::array({0, 0})));
  spec.radius = j.value("radius", 10.0);
  spec.sample_h = j.value("sample_h", 0.01);
  if (j.contains("operator")) spec.operator_override = j["operator"];
  spec.label = j.value("label", "certificate_" + std::to_string(index + 1));
  return spec;
}

struct Numerics {
  double h = 0.1;
  std::vector<double> radii;
  Point centre{};
  std::vector<Point> centres;
  double dt = 0.01, t_end = 1, frame_dt = 0;
  double trunc_radius = 0, trunc_radius_check = 0;
  ObliqueOrder order = ObliqueOrder::second;
  double front_level = 0, fit_t0 = 0, fit_t1 = 0;
  double blowup_factor = 1e6;
  double tol = 1e-9;
  std::vector<ProbeWindow> windows;
  json u0 = nullptr;
};

inline Numerics parse_numerics(const json& parent, const RunOptions& opt) {
  Numerics n;
  const json j = parent.value("numerics", json::object());
  n.h = j.value("h", 0.1);
  if (j.contains("radii")) n.radii = parse_numbers(j["radii"]);
  if (j.contains("centre")) n.centre = parse_point(j["centre"]);
  if (j.contains("centers"))
    for (const auto& c : j["centers"]) n.centres.push_back(parse_point(c));
  n.dt = j.value("dt", 0.01);
  n.t_end = j.value("t_end", 1.0);
  n.frame_dt = j.value("frame_dt", 0.0);
  n.trunc_radius = j.value("trunc_radius", 0.0);
  n.trunc_radius_check = j.value("trunc_radius_check", 0.0);
  std::string order = j.value("order", "second");
  if (order == "first") n.order = ObliqueOrder::first;
  else if (order != "second") throw SchemaMismatch("order must be 'first' or 'second'");
  n.front_level = j.value("front_level", 0.0);
  if (j.contains("fit_window")) {
    std::vector<double> w = parse_numbers(j["fit_window"]);
    if (w.size() != 2) throw SchemaMismatch("fit_window must be [t0, t1]");
    n.fit_t0 = w[0];
    n.fit_t1 = w[1];
  }
  n.blowup_factor = j.value("blowup_factor", 1e6);
  n.tol = j.value("tol", 1e-9);
  if (j.contains("windows")) n.windows = parse_windows(j["windows"]);
  if (j.contains("u0")) n.u0 = j["u0"];
  if (opt.h) n.h = *opt.h;
  if (opt.dt) n.dt = *opt.dt;
  if (opt.radii) n.radii = *opt.radii;
  if (opt.tol) n.tol = *opt.tol;
  return n;
}

/// Deterministic per-scenario RNG seed.
inline std::uint64_t seed_of(const std::string& name) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : name) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

/// Variational cross-checks on a self-adjoint truncation: the eigenvector's
/// field quotient against its eigenvalue, the identity between the field
/// quotient and the pencil form, and the worst shortfall of random trial
/// fields against the principal value.
struct VariationalChecks {
  double lambda = 0;
  double eigen_gap = 0;      // |field quotient at eigenvector - lambda|
  double identity_gap = 0;   // worst |field quotient - pencil form| over trials
  double random_min_gap = 0; // min over trials of (quotient - lambda)
};

inline VariationalChecks variational_checks(const Domain& dom, const EllipticOperator& L,
                                            const ObliqueBoundary& B, Point y, double r,
                                            double h, double tol, std::uint64_t seed,
                                            int trials = 50) {
  auto grid = std::make_shared<const TruncatedGrid>(TruncatedGrid::truncate(dom, y, r, h));
  DiscreteSystem sys = assemble(grid, L, B);
  EigResult e = principal_eigenpair(sys, tol);
  VariationalChecks out;
  out.lambda = e.lambda;
  out.eigen_gap = std::abs(rayleigh_quotient(sys, L, B, e.v) - e.lambda);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  out.random_min_gap = std::numeric_limits<double>::infinity();
  for (int t = 0; t < trials; ++t) {
    Eigen::VectorXd v(sys.n());
    for (int i = 0; i < sys.n(); ++i) v[i] = uni(rng) + (t % 2 ? 1.5 : 0.0);
    double qf = rayleigh_quotient(sys, L, B, v);
    double qp = pencil_form_quotient(sys, v);
    out.identity_gap = std::max(out.identity_gap, std::abs(qf - qp));
    out.random_min_gap = std::min(out.random_min_gap, qf - e.lambda);
  }
  return out;
}

inline double worst_consecutive_increase(const std::vector<double>& v) {
  double worst = -std::numeric_limits<double>::infinity();
  for (size_t i = 1; i < v.size(); ++i) {
    if (!std::isfinite(v[i]) || !std::isfinite(v[i - 1])) continue;
    worst = std::max(worst, v[i] - v[i - 1]);
  }
  return std::isfinite(worst) ? worst : 0.0;
}

}  // namespace detail

class ScenarioRegistry;
inline RunReport run_scenario(const Scenario& sc, const RunOptions& opt,
                              const ScenarioRegistry* registry = nullptr);

/// Named collection of scenarios; the built-in one is compiled in from the
/// scenario data files.
class ScenarioRegistry {
 public:
  static const ScenarioRegistry& builtin();

  void add(Scenario sc) {
    names_.push_back(sc.name());
    map_.emplace(sc.name(), std::move(sc));
  }
  const std::vector<std::string>& names() const { return names_; }
  bool has(const std::string& name) const { return map_.count(name) > 0; }
  const Scenario& get(const std::string& name) const {
    auto it = map_.find(name);
    if (it == map_.end()) throw ConfigError("unknown scenario '" + name + "'");
    return it->second;
  }

 private:
  std::vector<std::string> names_;
  std::map<std::string, Scenario> map_;
};

namespace detail {

// Task runners. Each fills the report's payloads and values; expectation
// checks run afterwards over the named values.

inline void run_certificates(const json& cfg, const Domain& dom, const EllipticOperator& L,
                             const ObliqueBoundary& B, RunReport& rep) {
  if (!cfg.contains("certificates")) return;
  const json& list = cfg["certificates"];
  int valid = 0;
  for (size_t i = 0; i < list.size(); ++i) {
    CertificateSpec spec = parse_certificate(list[i], i);
    EllipticOperator Lc = spec.operator_override ? parse_operator(*spec.operator_override, dom.dim())
                                                 : L;
    CertificateReport r =
        check_certificate(dom, Lc, B, spec.cert, spec.centre, spec.radius, spec.sample_h);
    rep.certificates.push_back(r);
    if (r.valid) {
      ++valid;
      rep.ledger.add_implied(r.implied, rep.scenario + ":" + spec.label);
    }
    rep.set("cert_" + std::to_string(i + 1) + "_valid", r.valid ? 1.0 : 0.0);
    rep.set("cert_" + std::to_string(i + 1) + "_worst_interior", r.worst_interior);
  }
  rep.set("certificates_valid", valid);
  rep.set("certificates_total", double(list.size()));
}

inline void run_eig_task(const Numerics& num, const Domain& dom, const EllipticOperator& L,
                         const ObliqueBoundary& B, RunReport& rep) {
  double r = num.trunc_radius > 0 ? num.trunc_radius : (num.radii.empty() ? 0 : num.radii[0]);
  if (!(r > 0)) throw ConfigError("eig task needs a truncation radius");
  auto grid =
      std::make_shared<const TruncatedGrid>(TruncatedGrid::truncate(dom, num.centre, r, num.h));
  DiscreteSystem sys = assemble(grid, L, B, num.order);
  EigResult e = principal_eigenpair(sys, num.tol);
  rep.set("lambda", e.lambda);
  rep.set("residual", e.residual);
  rep.set("positivity_margin", e.positivity_margin);
  rep.selfadjoint = sys.symmetric;
  if (sys.symmetric) {
    VariationalChecks vc = variational_checks(dom, L, B, num.centre, r, num.h, num.tol,
                                              seed_of(rep.scenario));
    rep.set("rr_eigen_gap", vc.eigen_gap);
    rep.set("rr_identity_gap", vc.identity_gap);
    rep.set("rr_random_min_gap", vc.random_min_gap);
  }
}

inline void run_sweep_task(const Numerics& num, const Domain& dom, const EllipticOperator& L,
                           const ObliqueBoundary& B, RunReport& rep) {
  if (num.radii.empty()) throw ConfigError("sweep task needs a radius schedule");
  SweepResult s = truncation_sweep(dom, L, B, num.centre, num.radii, num.h, num.order, num.tol);
  rep.sweep = s;
  rep.set("lambdaB_estimate", s.extrapolated);
  std::vector<double> lambdas;
  for (const SweepPoint& p : s.points) {
    rep.set("lambda_r" + format_num(p.r), p.lambda);
    lambdas.push_back(p.lambda);
  }
  rep.set("monotonicity_worst", worst_consecutive_increase(lambdas));
  double est_tol = std::abs(lambdas.back() - s.extrapolated) + 1e-6 * (1 + std::abs(s.extrapolated));
  rep.set("lambdaB_estimate_tol", est_tol);
  rep.ledger.add_estimate(Quantity::lambdaB, s.extrapolated, est_tol, rep.scenario + ":sweep");
  DiscreteSystem probe = assemble(
      std::make_shared<const TruncatedGrid>(
          TruncatedGrid::truncate(dom, num.centre, num.radii.front(), num.h)),
      L, B, num.order);
  rep.selfadjoint = probe.symmetric;
  if (probe.symmetric) {
    VariationalChecks vc = variational_checks(dom, L, B, num.centre, num.radii.front(), num.h,
                                              num.tol, seed_of(rep.scenario));
    rep.set("rr_eigen_gap", vc.eigen_gap);
    rep.set("rr_identity_gap", vc.identity_gap);
    rep.set("rr_random_min_gap", vc.random_min_gap);
  }
}

inline void run_global_sweep_task(const Numerics& num, const Domain& dom,
                                  const EllipticOperator& L, const ObliqueBoundary& B,
                                  RunReport& rep) {
  if (num.radii.empty() || num.centres.empty())
    throw ConfigError("global sweep needs centres and radii");
  GlobalSweepResult g =
      lambda_global_sweep(dom, L, B, num.centres, num.radii, num.h, num.order, num.tol);
  rep.global_sweep = g;
  rep.set("LambdaB_estimate", g.estimate);
  for (size_t i = 0; i < g.radii.size(); ++i)
    rep.set("sup_lambda_r" + format_num(g.radii[i]), g.sup_lambda[i]);
  double worst = worst_consecutive_increase(g.sup_lambda);
  for (size_t ci = 0; ci < g.centres.size(); ++ci) {
    std::vector<double> curve;
    for (size_t ri = 0; ri < g.radii.size(); ++ri) curve.push_back(g.lambda[ri][ci]);
    worst = std::max(worst, worst_consecutive_increase(curve));
  }
  rep.set("monotonicity_worst", worst);
  double est_tol =
      std::abs(g.sup_lambda.back() - g.estimate) + 1e-6 * (1 + std::abs(g.estimate));
  rep.set("LambdaB_estimate_tol", est_tol);
  rep.ledger.add_estimate(Quantity::LambdaB, g.estimate, est_tol, rep.scenario + ":global");
  DiscreteSystem probe = assemble(
      std::make_shared<const TruncatedGrid>(
          TruncatedGrid::truncate(dom, num.centres.front(), num.radii.front(), num.h)),
      L, B, num.order);
  rep.selfadjoint = probe.symmetric;
  if (probe.symmetric) {
    VariationalChecks vc = variational_checks(dom, L, B, num.centres.front(), num.radii.front(),
                                              num.h, num.tol, seed_of(rep.scenario));
    rep.set("rr_eigen_gap", vc.eigen_gap);
    rep.set("rr_identity_gap", vc.identity_gap);
    rep.set("rr_random_min_gap", vc.random_min_gap);
  }
}

inline void run_averages_block(const json& cfg, const Domain& dom, const ScalarField& field,
                               RunReport& rep) {
  if (!cfg.contains("averages")) return;
  const json& a = cfg["averages"];
  if (a.contains("mean_radii")) {
    AverageSchedule s = mean_schedule(dom, field, parse_point(a.value("centre", json(0.0))),
                                      parse_numbers(a["mean_radii"]), a.value("mean_h", 0.1));
    rep.means = s;
    rep.set("mean_estimate", s.estimate);
  }
  if (a.contains("least_centers")) {
    std::vector<Point> centres;
    for (const auto& c : a["least_centers"]) centres.push_back(parse_point(c));
    LeastMeanResult lm = least_mean_of(dom, field, centres, parse_numbers(a.at("least_radii")),
                                       a.value("least_h", 0.05));
    rep.least = lm;
    rep.set("least_mean_estimate", lm.value);
    rep.set("least_mean_argmin_x", lm.argmin_centre.x);
  }
  double margin = a.value("audit_margin", 0.1);
  auto lam = rep.get("lambdaB_estimate");
  if (lam && rep.means) {
    AverageAudit audit = average_bound_audit(*lam, rep.means->estimate, margin);
    rep.set("mean_audit_holds", audit.holds ? 1.0 : 0.0);
  }
  auto Lam = rep.get("LambdaB_estimate");
  if (Lam && rep.least) {
    AverageAudit audit = average_bound_audit(*Lam, rep.least->value, margin);
    rep.set("least_mean_audit_holds", audit.holds ? 1.0 : 0.0);
  }
}

struct SimulationOutcome {
  Trajectory traj;
  bool blew_up = false;
};

inline SimulationOutcome run_evolution(const Numerics& num, const Domain& dom,
                                       const EllipticOperator& L, const ObliqueBoundary& B,
                                       const ReactionSpec& reaction,
                                       const std::function<double(Point)>& u0, double radius) {
  auto grid = std::make_shared<const TruncatedGrid>(
      TruncatedGrid::truncate(dom, num.centre, radius, num.h));
  DiscreteSystem sys = assemble(grid, L, B, num.order);
  SimConfig cfg;
  cfg.dt = num.dt;
  cfg.t_end = num.t_end;
  cfg.frame_dt = num.frame_dt > 0 ? num.frame_dt : std::max(num.dt, num.t_end / 200);
  cfg.blowup_factor = num.blowup_factor;
  SimulationOutcome out;
  try {
    out.traj = evolve(sys, reaction, u0, cfg);
  } catch (const BlowUp&) {
    out.blew_up = true;
  }
  return out;
}

inline void run_simulate_task(const json& cfg, const Numerics& num, const Domain& dom,
                              const EllipticOperator& L, const ObliqueBoundary& B,
                              RunReport& rep) {
  if (!(num.trunc_radius > 0)) throw ConfigError("simulation needs a truncation radius");
  auto [reaction, strip_c] = parse_reaction(cfg, L.c);
  EllipticOperator Lrun = L;
  if (strip_c) Lrun.c = ScalarField::constant(0);
  std::function<double(Point)> u0 = parse_u0(num.u0);

  if (num.trunc_radius_check > 0) {
    // sensitivity pair: classify on the smaller radius, audit on the larger
    HairTriggerResult ht =
        hair_trigger_experiment(dom, Lrun, B, reaction, u0, num.centre, num.trunc_radius,
                                num.trunc_radius_check, num.h,
                                [&] {
                                  SimConfig c;
                                  c.dt = num.dt;
                                  c.t_end = num.t_end;
                                  c.frame_dt =
                                      num.frame_dt > 0 ? num.frame_dt : num.t_end / 150;
                                  c.blowup_factor = num.blowup_factor;
                                  return c;
                                }(),
                                num.windows, {}, num.order);
    rep.verdict = ht.verdict;
    rep.trajectory = std::move(ht.traj);
    rep.set("truncation_discrepancy", ht.max_window_discrepancy);
    rep.set("truncation_sensitive", ht.truncation_sensitive ? 1.0 : 0.0);
  } else {
    SimulationOutcome out = run_evolution(num, dom, Lrun, B, reaction, u0, num.trunc_radius);
    if (out.blew_up) {
      rep.classification = stability_name(Stability::grows_unbounded);
      rep.set("blew_up", 1.0);
      return;
    }
    rep.trajectory = std::move(out.traj);
    if (!num.windows.empty()) rep.verdict = classify_long_run(*rep.trajectory, num.windows);
  }

  const Trajectory& traj = *rep.trajectory;
  double final_sup = traj.frames.back().cwiseAbs().maxCoeff();
  rep.set("final_sup", final_sup);
  double run_min = std::numeric_limits<double>::infinity();
  for (const auto& f : traj.frames) run_min = std::min(run_min, f.minCoeff());
  rep.set("min_over_run", run_min);
  int centre_node = traj.grid->find(0, 0);
  if (centre_node >= 0 && traj.sys_of_node[centre_node] >= 0)
    rep.set("final_centre_value", traj.frames.back()[traj.sys_of_node[centre_node]]);
  if (rep.verdict) {
    rep.classification = stability_name(rep.verdict->classification);
    rep.set("inf_liminf_estimate", rep.verdict->inf_liminf_estimate);
    rep.set("supnorm_growth", rep.verdict->supnorm_growth);
    double env_min = std::numeric_limits<double>::infinity();
    for (const WindowReport& w : rep.verdict->windows) {
      rep.set("envelope_" + w.window.label, w.lower_envelope);
      rep.set("tail_sup_" + w.window.label, w.tail_sup);
      env_min = std::min(env_min, w.lower_envelope);
    }
    rep.set("envelope_min", env_min);
  }
  if (num.front_level > 0) {
    FrontFit fit = measure_front_speed(traj, num.front_level,
                                       num.fit_t1 > 0 ? num.fit_t0 : traj.times.front(),
                                       num.fit_t1 > 0 ? num.fit_t1 : traj.times.back());
    rep.front = fit;
    rep.set("front_speed", fit.speed);
  }
}

inline void run_geometry_task(const json& cfg, RunReport& rep) {
  const json& audits = cfg.value("audits", json::object());
  for (const auto& g : audits.value("growth", json::array())) {
    Domain dom = parse_domain(g.at("domain"));
    std::string label = g.value("label", dom.describe());
    ScalarField f = g.contains("f") ? parse_scalar(g["f"]) : ScalarField::constant(1);
    GrowthAudit a = growth_audit(dom, f, parse_point(g.value("centre", json::array({0, 0}))),
                                 g.value("n", 4), g.value("h", 0.05), g.value("r0", 1.0));
    rep.growth.emplace_back(label, a);
    rep.set("growth_ok_" + label, a.ok ? 1.0 : 0.0);
    rep.set("growth_min_ratio_" + label, a.min_ratio);
    rep.set("growth_bound_" + label, a.bound);
  }
  for (const auto& g : audits.value("interior_ball", json::array())) {
    Domain dom = parse_domain(g.at("domain"));
    std::string label = g.value("label", dom.describe());
    InteriorBallAudit a =
        interior_ball_bounds(dom, parse_point(g.value("centre", json::array({0, 0}))),
                             g.at("rho").get<double>(), g.value("h", 0.02));
    rep.interior_ball.emplace_back(label, a);
    rep.set("omega1_ok_" + label, a.omega1_ok ? 1.0 : 0.0);
    rep.set("annulus_ok_" + label, a.annulus_ok ? 1.0 : 0.0);
    rep.set("omega1_measured_" + label, a.omega1_measured);
  }
  if (audits.contains("covering")) {
    const json& c = audits["covering"];
    double r = c.value("r", 1.0), R = c.value("R", 2.0), sh = c.value("sample_h", 0.05);
    int d = c.value("dim", 2);
    std::vector<Point> samples;
    auto n = static_cast<long>(std::floor(R / sh));
    for (long i = -n; i <= n; ++i) {
      if (d == 1) {
        Point p{i * sh, 0};
        if (std::abs(p.x) <= R) samples.push_back(p);
        continue;
      }
      for (long j2 = -n; j2 <= n; ++j2) {
        Point p{i * sh, j2 * sh};
        if (norm(p) <= R) samples.push_back(p);
      }
    }
    CoveringReport cov = internal_covering(samples, r, R, d);
    rep.covering = cov;
    double worst = 0;
    for (const Point& s : samples) {
      double best = std::numeric_limits<double>::infinity();
      for (const Point& p : cov.cover_points) best = std::min(best, dist(s, p));
      worst = std::max(worst, best);
    }
    rep.set("covering_cardinality", cov.cardinality);
    rep.set("covering_lattice_bound", cov.lattice_bound);
    rep.set("covering_worst_distance", worst);
    rep.set("covering_sound", worst <= r ? 1.0 : 0.0);
    rep.set("covering_within_bound", cov.cardinality <= cov.lattice_bound ? 1.0 : 0.0);
  }
  for (const auto& t : audits.value("transversality", json::array())) {
    Domain dom = parse_domain(t.at("domain"));
    std::string label = t.value("label", dom.describe());
    TransversalityReport r = transversality_check(
        dom, parse_point(t.value("centre", json::array({0, 0}))), t.at("r").get<double>());
    rep.transversality.emplace_back(label, r);
    rep.set("transversal_" + label, r.transversal ? 1.0 : 0.0);
    rep.set("alignment_" + label, r.max_alignment);
  }
}

}  // namespace detail

namespace detail {

inline void evaluate_expected(const json& cfg, RunReport& rep) {
  if (!cfg.contains("expected")) return;
  const json& e = cfg["expected"];
  for (const auto& v : e.value("values", json::array())) {
    std::string key = v.at("key").get<std::string>();
    auto got = rep.get(key);
    if (!got) {
      rep.check(key, false, "value '" + key + "' was not produced");
      continue;
    }
    bool pass = true;
    std::string detail = key + " = " + format_num(*got);
    if (v.contains("value")) {
      double want = v["value"].get<double>();
      double tol = v.contains("rel_tol") ? std::abs(want) * v["rel_tol"].get<double>()
                                         : v.value("abs_tol", 0.0);
      pass = std::abs(*got - want) <= tol;
      detail += ", wanted " + format_num(want) + " within " + format_num(tol);
    }
    if (v.contains("min")) {
      pass = pass && *got >= v["min"].get<double>();
      detail += ", min " + format_num(v["min"].get<double>());
    }
    if (v.contains("max")) {
      pass = pass && *got <= v["max"].get<double>();
      detail += ", max " + format_num(v["max"].get<double>());
    }
    rep.check(key, pass, detail);
  }
  if (e.contains("classification")) {
    std::string want = e["classification"].get<std::string>();
    rep.check("classification", rep.classification == want,
              "classified as '" + rep.classification + "', wanted '" + want + "'");
  }
  if (e.contains("certificates_valid") && e["certificates_valid"].get<bool>()) {
    auto total = rep.get("certificates_total");
    auto valid = rep.get("certificates_valid");
    bool pass = total && valid && *total > 0 && *valid == *total;
    rep.check("certificates_valid", pass,
              format_num(valid.value_or(0)) + " of " + format_num(total.value_or(0)) +
                  " certificates validated");
  }
  if (e.contains("relations_consistent") && e["relations_consistent"].get<bool>()) {
    bool pass = rep.relations && rep.relations->consistent;
    rep.check("relations_consistent", pass,
              rep.relations
                  ? format_num(double(rep.relations->violations.size())) + " violations"
                  : "no relations audit ran");
  }
  for (const auto& mc : e.value("member_conditions", json::array())) {
    std::string member = mc.at("member").get<std::string>();
    std::string key = mc.at("key").get<std::string>();
    const RunReport* found = nullptr;
    for (const RunReport& m : rep.members)
      if (m.scenario == member) found = &m;
    if (!found) {
      rep.check(member + ":" + key, false, "member report missing");
      continue;
    }
    auto got = found->get(key);
    bool pass = got.has_value();
    std::string detail = member + ":" + key + (got ? " = " + format_num(*got) : " missing");
    if (pass && mc.contains("min")) pass = *got >= mc["min"].get<double>();
    if (pass && mc.contains("max")) pass = *got <= mc["max"].get<double>();
    rep.check(member + ":" + key, pass, detail);
  }
  if (e.contains("members_ok") && e["members_ok"].get<bool>()) {
    bool pass = !rep.members.empty();
    std::string bad;
    for (const RunReport& m : rep.members)
      if (!m.ok) {
        pass = false;
        bad += (bad.empty() ? "" : ", ") + m.scenario;
      }
    rep.check("members_ok", pass, bad.empty() ? "all members passed" : "failed: " + bad);
  }
}

inline json report_to_json(const RunReport& rep) {
  json j;
  j["scenario"] = rep.scenario;
  j["task"] = rep.task;
  j["provenance"] = rep.provenance;
  j["anchor"] = rep.anchor;
  j["ok"] = rep.ok;
  j["classification"] = rep.classification;
  json values = json::object();
  for (const auto& kv : rep.values)
    values[kv.first] = std::isfinite(kv.second) ? json(kv.second) : json();
  j["values"] = values;
  json checks = json::array();
  for (const CheckResult& c : rep.checks)
    checks.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
  j["checks"] = checks;
  json bundle = json::array();
  for (const BoundEntry& b : rep.ledger.entries())
    bundle.push_back({{"quantity", quantity_name(b.quantity)},
                      {"side", b.is_lower ? "lower" : "upper"},
                      {"value", b.value},
                      {"source", b.source},
                      {"from_estimate", b.from_estimate}});
  j["bundle"] = bundle;
  j["flags"] = {{"selfadjoint", rep.selfadjoint}, {"relation_iv_applicable", rep.iv_applicable}};
  if (rep.relations) {
    json rel;
    rel["checked"] = rep.relations->checked;
    json viols = json::array();
    for (const RelationViolation& v : rep.relations->violations) viols.push_back(v.detail);
    rel["violations"] = viols;
    rel["consistent"] = rep.relations->consistent;
    j["relations"] = rel;
  }
  if (!rep.members.empty()) {
    json members = json::array();
    for (const RunReport& m : rep.members) members.push_back(report_to_json(m));
    j["members"] = members;
  }
  return j;
}

inline std::vector<int> window_nodes(const Trajectory& traj, const ProbeWindow& w) {
  std::vector<int> nodes;
  const TruncatedGrid& g = *traj.grid;
  for (int i = 0; i < g.size(); ++i)
    if (traj.sys_of_node[i] >= 0 && w.box.contains(g.node(i).pos, g.dim())) nodes.push_back(i);
  return nodes;
}

inline void write_artifacts(const RunOptions& opt, const json& cfg, RunReport& rep) {
  if (opt.out_dir.empty()) return;
  namespace fs = std::filesystem;
  fs::path dir = fs::path(opt.out_dir) / rep.scenario;
  fs::create_directories(dir);
  auto note = [&](const fs::path& p) { rep.artifacts.push_back(p.string()); };

  if (rep.sweep) {
    fs::path csv = dir / "sweep.csv";
    write_csv(csv.string(), sweep_table(*rep.sweep));
    note(csv);
    fs::path svg = dir / "lambda_vs_r.svg";
    plot_csv(csv.string(), svg.string(), "r", "lambda");
    note(svg);
  }
  if (rep.global_sweep) {
    fs::path csv = dir / "global_sweep.csv";
    write_csv(csv.string(), global_sweep_table(*rep.global_sweep));
    note(csv);
    fs::path svg = dir / "lambda_vs_r.svg";
    plot_csv(csv.string(), svg.string(), "r", "lambda", "center_x");
    note(svg);
  }
  if (rep.means) {
    fs::path csv = dir / "averages.csv";
    write_csv(csv.string(), averages_table(*rep.means, rep.least ? &*rep.least : nullptr));
    note(csv);
  }
  for (const auto& [label, audit] : rep.growth) {
    fs::path csv = dir / ("growth_" + label + ".csv");
    write_csv(csv.string(), growth_table(audit));
    note(csv);
  }
  if (rep.trajectory) {
    const Trajectory& traj = *rep.trajectory;
    fs::path oblp = dir / "run.oblp";
    write_oblp(oblp.string(), traj);
    note(oblp);
    Numerics num = parse_numerics(cfg, RunOptions{});
    if (!num.windows.empty()) {
      CsvTable t;
      t.header = {"t"};
      std::vector<std::vector<int>> nodes;
      for (const ProbeWindow& w : num.windows) {
        t.header.push_back(w.label);
        nodes.push_back(window_nodes(traj, w));
      }
      for (size_t k = 0; k < traj.times.size(); ++k) {
        std::vector<std::string> row{format_num(traj.times[k])};
        for (const auto& ns : nodes) {
          double mn = std::numeric_limits<double>::infinity();
          for (int i : ns) mn = std::min(mn, traj.value_at(k, i));
          row.push_back(format_num(ns.empty() ? 0.0 : mn));
        }
        t.rows.push_back(row);
      }
      fs::path csv = dir / "envelope.csv";
      write_csv(csv.string(), t);
      note(csv);
      fs::path svg = dir / "envelope_vs_t.svg";
      std::vector<PlotSeries> series;
      for (size_t wi = 0; wi < num.windows.size(); ++wi) {
        PlotSeries s;
        s.name = num.windows[wi].label;
        for (size_t k = 0; k < traj.times.size(); ++k) {
          s.x.push_back(traj.times[k]);
          double mn = std::numeric_limits<double>::infinity();
          for (int i : nodes[wi]) mn = std::min(mn, traj.value_at(k, i));
          s.y.push_back(nodes[wi].empty() ? 0.0 : mn);
        }
        series.push_back(std::move(s));
      }
      write_svg_plot(svg.string(), "window minima", "t", "min over window", series);
      note(svg);
    }
  }
  if (rep.front) {
    CsvTable t;
    t.header = {"t", "x"};
    for (size_t k = 0; k < rep.front->times.size(); ++k)
      t.rows.push_back({format_num(rep.front->times[k]), format_num(rep.front->positions[k])});
    fs::path csv = dir / "front.csv";
    write_csv(csv.string(), t);
    note(csv);
    fs::path svg = dir / "front_position.svg";
    plot_csv(csv.string(), svg.string(), "t", "x");
    note(svg);
  }
  fs::path repj = dir / "report.json";
  std::ofstream out(repj, std::ios::binary);
  out << report_to_json(rep).dump(2) << "\n";
  note(repj);
}

}  // namespace detail

/// Run one scenario. Configuration problems throw (ConfigError or
/// SchemaMismatch); a completed run returns a report whose `ok` reflects
/// the expectation checks. `registry` resolves member names of group and
/// relations-audit tasks; the built-in registry is used when absent.
inline RunReport run_scenario(const Scenario& sc, const RunOptions& opt,
                              const ScenarioRegistry* registry) {
  const json& cfg = sc.config();
  RunReport rep;
  rep.scenario = sc.name();
  rep.task = sc.task();
  rep.provenance = sc.provenance();
  rep.anchor = sc.anchor();

  const std::string& task = sc.task();
  if (task == "group" || task == "relations_audit") {
    const ScenarioRegistry& reg = registry ? *registry : ScenarioRegistry::builtin();
    if (!cfg.contains("members")) throw SchemaMismatch("group task needs 'members'");
    RunOptions member_opt = opt;
    member_opt.out_dir.clear();  // members of a group do not write their own artifacts
    int violations = 0;
    for (const auto& m : cfg["members"]) {
      RunReport mr = run_scenario(reg.get(m.get<std::string>()), member_opt, &reg);
      if (task == "relations_audit") {
        RelationsAudit audit = mr.ledger.audit(mr.selfadjoint, mr.iv_applicable);
        violations += static_cast<int>(audit.violations.size());
        mr.relations = audit;
      }
      rep.members.push_back(std::move(mr));
    }
    if (task == "relations_audit") {
      rep.set("total_violations", violations);
      RelationsAudit merged;
      merged.consistent = violations == 0;
      for (const RunReport& m : rep.members)
        if (m.relations)
          for (const RelationViolation& v : m.relations->violations)
            merged.violations.push_back(v);
      rep.relations = merged;
    }
    detail::evaluate_expected(cfg, rep);
    detail::write_artifacts(opt, cfg, rep);
    return rep;
  }

  detail::Numerics num = detail::parse_numerics(cfg, opt);
  Domain dom = cfg.contains("domain") ? detail::parse_domain(cfg["domain"])
                                      : Domain::whole_space(1);
  EllipticOperator L = cfg.contains("operator")
                           ? detail::parse_operator(cfg["operator"], dom.dim())
                           : EllipticOperator{};
  ObliqueBoundary B = detail::parse_boundary(cfg);
  // normal and conormal directions keep beta . nu uniformly positive, and an
  // empty boundary makes the obliqueness proviso vacuous, so the one-sided
  // comparison applies to every boundary this schema can express
  rep.iv_applicable = true;

  if (task == "eig") {
    detail::run_eig_task(num, dom, L, B, rep);
  } else if (task == "sweep") {
    detail::run_sweep_task(num, dom, L, B, rep);
    detail::run_certificates(cfg, dom, L, B, rep);
    detail::run_averages_block(cfg, dom, L.c, rep);
  } else if (task == "global_sweep") {
    detail::run_global_sweep_task(num, dom, L, B, rep);
    detail::run_certificates(cfg, dom, L, B, rep);
    detail::run_averages_block(cfg, dom, L.c, rep);
  } else if (task == "certify") {
    detail::run_certificates(cfg, dom, L, B, rep);
  } else if (task == "simulate" || task == "classify") {
    detail::run_simulate_task(cfg, num, dom, L, B, rep);
    detail::run_certificates(cfg, dom, L, B, rep);
  } else if (task == "averages") {
    if (!num.radii.empty()) detail::run_sweep_task(num, dom, L, B, rep);
    detail::run_averages_block(cfg, dom, L.c, rep);
  } else if (task == "geometry_audit") {
    detail::run_geometry_task(cfg, rep);
  } else {
    throw SchemaMismatch("unknown task '" + task + "'");
  }

  detail::evaluate_expected(cfg, rep);
  detail::write_artifacts(opt, cfg, rep);
  if (!opt.keep_trajectory) rep.trajectory.reset();
  return rep;
}

/// JSON form of a report, as written to report.json by artifact runs.
inline json report_json(const RunReport& rep) { return detail::report_to_json(rep); }

}  // namespace obleig

#include <obleig/scenarios_embedded.hpp>

namespace obleig {

inline const ScenarioRegistry& ScenarioRegistry::builtin() {
  static const ScenarioRegistry reg = [] {
    ScenarioRegistry r;
    for (const auto& [name, text] : embedded::scenario_files())
      r.add(Scenario::from_json_text(std::string(text)));
    return r;
  }();
  return reg;
}

}  // namespace obleig
