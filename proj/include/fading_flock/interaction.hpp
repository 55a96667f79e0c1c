#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "fading_flock/error.hpp"
#include "fading_flock/graph.hpp"
#include "fading_flock/numerics.hpp"

namespace fading_flock {

/// g(d) = -sigma1 / d^n1 + sigma2 / d^n2 with integer exponents n1 > n2 > 2.
struct LennardJones {
  double sigma1 = 1.0;
  double sigma2 = 1.0;
  int n1 = 4;
  int n2 = 3;
};

/**
 * A user-supplied interaction law. `grid` is the ascending set of sample
 * distances on which the law is checked; nothing outside the grid can be
 * verified. `alpha_plus` is the caller's certificate that g > 0 on
 * [alpha_plus, inf); without it the smallest grid-certified value is used.
 */
struct TabulatedFunction {
  std::function<double(double)> g;
  std::vector<double> grid;
  std::optional<double> alpha_plus;
};

struct AlphaBounds {
  double minus;  // g < 0 on (0, minus]
  double plus;   // g > 0 on [plus, inf)
};

/// Scalar attraction/repulsion law attached to one edge.
class InteractionFunction {
 public:
  static constexpr double kDefaultMargin = 1e-6;

  static InteractionFunction lennard_jones(double sigma1, double sigma2, int n1, int n2,
                                           double margin = kDefaultMargin) {
    if (!(sigma1 > 0.0) || !(sigma2 > 0.0)) throw Error("Lennard-Jones coefficients must be positive");
    if (!(n1 > n2 && n2 > 2)) throw Error("Lennard-Jones exponents must satisfy n1 > n2 > 2");
    check_margin(margin);
    return InteractionFunction(LennardJones{sigma1, sigma2, n1, n2}, margin);
  }

  static InteractionFunction tabulated(TabulatedFunction t) {
    if (!t.g) throw Error("tabulated interaction has no evaluator");
    if (t.grid.empty()) t.grid = default_grid();
    if (!std::is_sorted(t.grid.begin(), t.grid.end()) || t.grid.front() <= 0.0)
      throw Error("tabulated sample grid must be positive and ascending");
    return InteractionFunction(std::move(t), kDefaultMargin);
  }

  /// 20 points per decade over [1e-6, 1e6].
  static std::vector<double> default_grid() {
    std::vector<double> grid;
    for (int k = -120; k <= 120; ++k) grid.push_back(std::pow(10.0, k / 20.0));
    return grid;
  }

  const LennardJones* lennard_jones_params() const { return std::get_if<LennardJones>(&law_); }
  const TabulatedFunction* tabulated_params() const { return std::get_if<TabulatedFunction>(&law_); }
  double margin() const noexcept { return margin_; }

  double g(double d) const {
    if (!(d > 0.0)) throw Error("nonpositive distance");
    if (const auto* lj = lennard_jones_params()) return -lj->sigma1 / std::pow(d, lj->n1) + lj->sigma2 / std::pow(d, lj->n2);
    return std::get<TabulatedFunction>(law_).g(d);
  }

  double bar_g(double d) const { return d * g(d); }

  /// Integral of s g(s) from 1 to d.
  double potential(double d) const {
    if (!(d > 0.0)) throw Error("nonpositive distance");
    if (const auto* lj = lennard_jones_params()) {
      // integral of s^{1-n} from 1 to d is (d^{2-n} - 1) / (2 - n); expm1 keeps d ~ 1 accurate
      auto term = [d](int n) { return std::expm1((2.0 - n) * std::log(d)) / (2.0 - n); };
      return -lj->sigma1 * term(lj->n1) + lj->sigma2 * term(lj->n2);
    }
    const auto& g = std::get<TabulatedFunction>(law_).g;
    return numerics::integrate([&g](double s) { return s * g(s); }, 1.0, d);
  }

  /// Unique sign-change root (sigma1/sigma2)^{1/(n1-n2)} for Lennard-Jones laws.
  std::optional<double> root() const {
    if (const auto* lj = lennard_jones_params()) return std::pow(lj->sigma1 / lj->sigma2, 1.0 / (lj->n1 - lj->n2));
    return std::nullopt;
  }

 private:
  InteractionFunction(std::variant<LennardJones, TabulatedFunction> law, double margin)
      : law_(std::move(law)), margin_(margin) {}

  static void check_margin(double margin) {
    if (!(margin > 0.0 && margin < 1.0)) throw Error("alpha margin must lie in (0, 1)");
  }

  std::variant<LennardJones, TabulatedFunction> law_;
  double margin_;
};

inline double eval_g(const InteractionFunction& f, double d) { return f.g(d); }
inline double eval_bar_g(const InteractionFunction& f, double d) { return f.bar_g(d); }
inline double pair_potential(const InteractionFunction& f, double d) { return f.potential(d); }

/// Outcome of the attraction/repulsion checks. Failures are entries, never exceptions.
struct ValidationReport {
  struct Check {
    std::string name;
    bool passed;
    std::string detail;
  };
  std::vector<Check> checks;

  bool passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
  }
};

namespace detail {

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

inline AlphaBounds tabulated_alpha_bounds(const InteractionFunction& f) {
  const auto& t = *f.tabulated_params();
  const auto& grid = t.grid;
  std::vector<double> values(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) values[i] = f.g(grid[i]);

  if (values.front() >= 0.0 || values.back() <= 0.0) throw Error("not an attraction/repulsion function");

  std::size_t lo = 0;
  while (lo + 1 < grid.size() && values[lo + 1] < 0.0) ++lo;
  std::size_t hi = grid.size() - 1;
  while (hi > 0 && values[hi - 1] > 0.0) --hi;

  double plus = grid[hi];
  if (t.alpha_plus) {
    plus = *t.alpha_plus;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (grid[i] >= plus && values[i] <= 0.0)
        throw Error("alpha_plus certificate fails on the sample grid at d = " + fmt(grid[i]));
    }
  }
  const double minus = grid[lo];
  if (minus > plus) throw Error("not an attraction/repulsion function");
  return {minus, plus};
}

}  // namespace detail

/**
 * Distances bracketing the sign change: g < 0 on (0, minus] and g > 0 on
 * [plus, inf). For Lennard-Jones laws these are root * (1 -+ margin).
 * Throws "not an attraction/repulsion function" when no sign change exists.
 */
inline AlphaBounds alpha_bounds(const InteractionFunction& f) {
  if (auto d0 = f.root()) return {*d0 * (1.0 - f.margin()), *d0 * (1.0 + f.margin())};
  return detail::tabulated_alpha_bounds(f);
}

/// Strong-repulsion and fading-attraction checks.
inline ValidationReport validate(const InteractionFunction& f) {
  ValidationReport report;
  if (const auto* lj = f.lennard_jones_params()) {
    report.checks.push_back({"strong repulsion", lj->n1 > 2 && lj->n1 > lj->n2,
                             "n1 = " + std::to_string(lj->n1) + " > 2 makes the potential diverge at 0"});
    report.checks.push_back({"fading attraction", lj->n2 > 1,
                             "n2 = " + std::to_string(lj->n2) + " > 1 makes d g(d) vanish at infinity"});
    return report;
  }

  const auto& grid = f.tabulated_params()->grid;
  const double dmin = grid.front();
  const double dmax = grid.back();
  if (dmax / dmin < 1e4) {
    report.checks.push_back({"strong repulsion", false, "sample grid spans fewer than four decades"});
    report.checks.push_back({"fading attraction", false, "sample grid spans fewer than four decades"});
    return report;
  }

  // Strong repulsion: d g(d) negative and growing in magnitude toward 0, and the
  // per-decade contribution to the integral of s g(s) not shrinking.
  {
    const double b0 = f.bar_g(dmin), b1 = f.bar_g(10 * dmin), b2 = f.bar_g(100 * dmin);
    auto decade = [&f](double a) { return numerics::integrate([&f](double s) { return s * f.g(s); }, a, 10 * a); };
    const double j0 = decade(dmin), j1 = decade(10 * dmin);
    const bool divergent_force = b0 < 0.0 && b0 < b1 && b1 < b2;
    const bool divergent_potential = j0 < 0.0 && j1 < 0.0 && std::abs(j0) >= std::abs(j1) * (1.0 - 1e-9);
    std::string detail = "d g(d) at " + detail::fmt(dmin) + " is " + detail::fmt(b0);
    if (!divergent_force) detail += "; d g(d) does not tend to -infinity";
    if (!divergent_potential) detail += "; integral of s g(s) does not diverge";
    report.checks.push_back({"strong repulsion", divergent_force && divergent_potential, detail});
  }

  // Fading attraction: positive tail with a certified alpha_plus, and |d g(d)| decaying.
  {
    bool ok = true;
    std::string detail;
    try {
      const auto ab = alpha_bounds(f);
      detail = "alpha_plus = " + detail::fmt(ab.plus);
    } catch (const Error& e) {
      ok = false;
      detail = e.what();
    }
    const double t0 = std::abs(f.bar_g(dmax)), t1 = std::abs(f.bar_g(dmax / 10)), t2 = std::abs(f.bar_g(dmax / 100));
    if (!(f.g(dmax) > 0.0 && t0 < t1 && t1 < t2)) {
      ok = false;
      detail += "; d g(d) does not decay to 0";
    }
    report.checks.push_back({"fading attraction", ok, detail});
  }
  return report;
}

/**
 * Supremum of the level set {d : |d g(d)| = eta}. Only defined once eta
 * exceeds sup{|d g(d)| : d >= alpha_minus}; the level set then lies in the
 * repulsive region and the answer is the largest root of d g(d) = -eta.
 */
inline double bar_g_level_supremum(const InteractionFunction& f, double eta) {
  const auto ab = alpha_bounds(f);
  // sup of |bar g| beyond alpha_minus: dense log scan over nine decades, then refine.
  const int samples = 3600;
  double best_d = ab.minus, best = std::abs(f.bar_g(ab.minus));
  const double ratio = std::pow(10.0, 9.0 / samples);
  double d = ab.minus;
  for (int i = 0; i < samples; ++i, d *= ratio) {
    if (const double v = std::abs(f.bar_g(d)); v > best) {
      best = v;
      best_d = d;
    }
  }
  const auto refined = numerics::minimize_bounded([&f](double x) { return -std::abs(f.bar_g(x)); },
                                                  std::max(ab.minus, best_d / ratio), best_d * ratio);
  const double threshold = std::max(best, -refined.value);
  if (!(eta > threshold)) throw Error("level set not confined");

  double hi = ab.minus;
  double lo = hi;
  for (int i = 0;; ++i) {
    if (i > 20000) throw Error("level set not confined");
    lo = hi * 0.9;
    if (f.bar_g(lo) <= -eta) break;
    hi = lo;
  }
  return numerics::find_root([&f, eta](double x) { return f.bar_g(x) + eta; }, lo, hi);
}

/**
 * Assignment of an interaction law to every edge of a graph, indexed like
 * Graph::edges(). alpha_plus()/alpha_minus() are the single thresholds valid
 * for all edges.
 */
class InteractionMap {
 public:
  InteractionMap(const Graph& g, const InteractionFunction& uniform)
      : laws_(g.edge_count(), std::make_shared<const InteractionFunction>(uniform)) {
    init_bounds();
  }

  InteractionMap(const Graph& g, std::vector<InteractionFunction> per_edge) {
    if (per_edge.size() != g.edge_count()) throw Error("interaction map needs exactly one law per edge");
    laws_.reserve(per_edge.size());
    for (auto& f : per_edge) laws_.push_back(std::make_shared<const InteractionFunction>(std::move(f)));
    init_bounds();
  }

  /// Edges may share law objects; shared laws are analysed once.
  InteractionMap(const Graph& g, std::vector<std::shared_ptr<const InteractionFunction>> per_edge)
      : laws_(std::move(per_edge)) {
    if (laws_.size() != g.edge_count()) throw Error("interaction map needs exactly one law per edge");
    if (std::any_of(laws_.begin(), laws_.end(), [](const auto& p) { return !p; })) throw Error("missing interaction law");
    init_bounds();
  }

  std::size_t edge_count() const noexcept { return laws_.size(); }
  const InteractionFunction& at(std::size_t edge) const { return *laws_.at(edge); }
  double alpha_plus() const noexcept { return alpha_plus_; }
  double alpha_minus() const noexcept { return alpha_minus_; }

  /// Edges grouped by shared law object, so per-law work is done once.
  std::vector<const InteractionFunction*> distinct_laws() const {
    std::vector<const InteractionFunction*> out;
    for (const auto& p : laws_)
      if (std::find(out.begin(), out.end(), p.get()) == out.end()) out.push_back(p.get());
    return out;
  }

 private:
  void init_bounds() {
    alpha_plus_ = 0.0;
    alpha_minus_ = std::numeric_limits<double>::infinity();
    for (const auto* f : distinct_laws()) {
      const auto ab = alpha_bounds(*f);
      alpha_plus_ = std::max(alpha_plus_, ab.plus);
      alpha_minus_ = std::min(alpha_minus_, ab.minus);
    }
  }

  std::vector<std::shared_ptr<const InteractionFunction>> laws_;
  double alpha_plus_ = 0.0;
  double alpha_minus_ = 0.0;
};

/// Minimum of the pair potential of one law over [lo, hi].
inline double potential_minimum(const InteractionFunction& f, double lo, double hi) {
  return numerics::minimize_bounded([&f](double d) { return f.potential(d); }, lo, hi).value;
}

/// Worst per-edge minimum of the pair potential over [alpha_minus, alpha_plus]; Psi >= |E| psi_zero.
inline double psi_zero(const InteractionMap& m) {
  if (m.edge_count() == 0) return 0.0;
  double out = std::numeric_limits<double>::infinity();
  for (const auto* f : m.distinct_laws()) out = std::min(out, potential_minimum(*f, m.alpha_minus(), m.alpha_plus()));
  return out;
}

}  // namespace fading_flock
