#pragma once

#include <algorithm>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "obleig/certificates.hpp"
#include "obleig/errors.hpp"

namespace obleig {

/// One piece of evidence about a quantity: a one-sided bound, exact (from
/// a validated certificate) or numerical (from a sweep estimate, already
/// widened by its tolerance).
struct BoundEntry {
  Quantity quantity;
  bool is_lower;
  double value;
  std::string source;
  bool from_estimate = false;
  double tol = 0;
};

struct RelationViolation {
  Quantity smaller, larger;
  double lower_on_smaller, upper_on_larger;
  std::string detail;
};

struct RelationsAudit {
  std::vector<std::string> checked;
  std::vector<RelationViolation> violations;
  bool consistent = false;
};

/// Collects bounds from certificates and sweeps and audits them against
/// the order structure the quantities must satisfy:
/// the joint value sits below both one-sided refinements, those sit below
/// the unrestricted eigenvalue, which sits below its uniform limit; the
/// bounded comparison value is squeezed between the joint and the
/// unrestricted one; and for self-adjoint problems the bounded comparison
/// value and the unrestricted eigenvalue must agree outright.
class RelationsLedger {
 public:
  void add(BoundEntry e) { entries_.push_back(std::move(e)); }

  void add_lower(Quantity q, double v, std::string source) {
    entries_.push_back({q, true, v, std::move(source), false, 0});
  }
  void add_upper(Quantity q, double v, std::string source) {
    entries_.push_back({q, false, v, std::move(source), false, 0});
  }
  /// A numerical estimate contributes both sides, widened by tol.
  void add_estimate(Quantity q, double v, double tol, std::string source) {
    entries_.push_back({q, true, v - tol, source, true, tol});
    entries_.push_back({q, false, v + tol, std::move(source), true, tol});
  }
  void add_implied(const std::vector<ImpliedBound>& implied, const std::string& source) {
    for (const ImpliedBound& b : implied)
      entries_.push_back({b.quantity, b.is_lower, b.value, source, false, 0});
  }

  const std::vector<BoundEntry>& entries() const { return entries_; }

  std::optional<double> best_lower(Quantity q) const {
    std::optional<double> best;
    for (const auto& e : entries_)
      if (e.quantity == q && e.is_lower && (!best || e.value > *best)) best = e.value;
    return best;
  }
  std::optional<double> best_upper(Quantity q) const {
    std::optional<double> best;
    for (const auto& e : entries_)
      if (e.quantity == q && !e.is_lower && (!best || e.value < *best)) best = e.value;
    return best;
  }

  RelationsAudit audit(bool selfadjoint, bool comparison_vs_onesided_applicable) const {
    RelationsAudit out;
    auto check_le = [&](Quantity a, Quantity b) {
      std::string label = std::string(quantity_name(a)) + " <= " + quantity_name(b);
      out.checked.push_back(label);
      auto lo = best_lower(a), hi = best_upper(b);
      if (!lo || !hi) return;  // nothing to contradict
      if (*lo > *hi + kSlack) {
        out.violations.push_back({a, b, *lo, *hi, label + " fails: " + format_num(*lo) +
                                                      " > " + format_num(*hi)});
      }
    };
    check_le(Quantity::lambdaB_pb, Quantity::lambdaB_p);
    check_le(Quantity::lambdaB_pb, Quantity::lambdaB_b);
    check_le(Quantity::lambdaB_p, Quantity::lambdaB);
    check_le(Quantity::lambdaB_b, Quantity::lambdaB);
    check_le(Quantity::lambdaB, Quantity::LambdaB);
    check_le(Quantity::lambdaB_pb, Quantity::muB_b);
    check_le(Quantity::muB_b, Quantity::lambdaB);
    if (comparison_vs_onesided_applicable) check_le(Quantity::lambdaB_p, Quantity::muB_b);
    if (selfadjoint) {
      // equality: the two intervals must overlap in both directions
      check_le(Quantity::muB_b, Quantity::lambdaB);
      check_le(Quantity::lambdaB, Quantity::muB_b);
      out.checked.push_back("mu_B_b == lambda_B (self-adjoint)");
    }
    out.consistent = out.violations.empty();
    return out;
  }

 private:
  static constexpr double kSlack = 1e-12;
  std::vector<BoundEntry> entries_;
};

}  // namespace obleig
