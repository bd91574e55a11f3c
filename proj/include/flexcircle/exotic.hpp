#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "flexcircle/circle.hpp"
#include "flexcircle/dynamics.hpp"
#include "flexcircle/errors.hpp"
#include "flexcircle/parallel.hpp"
#include "flexcircle/words.hpp"

namespace flexcircle {

// ---- cyclic covers ---------------------------------------------------------------------

// An element of Homeo^(k): a homeomorphism of R/kZ commuting with x -> x+1,
// stored as its lift G to R. Sheets of one base map differ by integers mod k.
struct CoveredHomeo {
  int k = 1;
  long sheet = 0;
  CircleHomeo lift;

  double operator()(double x) const { return lift(x); }
  double inverse(double y) const { return lift.inverse_lift(y); }
  // R/kZ rescaled to R/Z
  CircleHomeo on_circle() const {
    CircleHomeo G = lift;
    double kk = k;
    return CircleHomeo::from_lift([G, kk](double y) { return G(kk * y) / kk; },
                                  [G, kk](double y) { return G.inverse_lift(kk * y) / kk; },
                                  "cover" + std::to_string(k) + "(" + G.describe() + ")");
  }
  // max |G(x+1) - G(x) - 1| over a grid of [0, k)
  double deck_defect(int grid = 1000) const {
    double m = 0;
    for (int i = 0; i < grid; ++i) {
      double x = k * (i + 0.5) / grid;
      m = std::max(m, std::abs(lift(x + 1) - lift(x) - 1));
    }
    return m;
  }
};

inline CoveredHomeo lift_to_cover(const CircleHomeo& f, int k, long sheet = 0) {
  if (k < 1) throw PreconditionFailed("cover degree must be positive");
  long s = ((sheet % k) + k) % k;
  return {k, s, s ? f.shifted(s) : f};
}

// q_k: the map of R/Z covered by g.
inline CircleHomeo project(const CoveredHomeo& g) { return g.lift; }

// p_k: R/kZ -> R/Z in rescaled coordinates y in [0, 1).
inline double cover_projection(double y, int k) { return frac01(k * y); }

// Lifts of every generator plus the deck rotation by 1/k, on rescaled R/kZ.
// The group generated is the full preimage of the base image.
inline CircleAction cover_action(const CircleAction& act, int k, std::vector<long> sheets = {}) {
  const Presentation& p = act.presentation();
  if (sheets.empty()) sheets.assign(p.rank(), 0);
  if (static_cast<int>(sheets.size()) != p.rank()) throw ValidationError("one sheet per generator");
  std::vector<std::string> names;
  std::vector<CircleHomeo> gens;
  for (int i = 0; i < p.rank(); ++i) {
    names.push_back(p.name(i));
    gens.push_back(lift_to_cover(act.generator(i), k, sheets[i]).on_circle());
  }
  names.push_back("deck");
  gens.push_back(CircleHomeo::rotation(rational(1, k)));
  return CircleAction(Presentation::free(p.rank() + 1, names), gens);
}

struct CoverLimitReport {
  int k = 1;
  LimitSetReport base, cover;  // cover points and gaps in rescaled coordinates
  long base_orbit = 0, cover_orbit = 0;
  long matched_gaps = 0;
  double max_mismatch = 0;
  std::string summary;
};

// Compares the limit set of the preimage group with p_k^-1 of the base limit set.
inline CoverLimitReport limit_set_of_cover(const CircleAction& act, int k, const LimitSetConfig& cfg = {},
                                           double tol = -1) {
  if (k < 1) throw PreconditionFailed("cover degree must be positive");
  if (tol < 0) tol = 2 * cfg.eps_gap;
  CoverLimitReport r;
  r.k = k;
  r.base = limit_set_approx(act, cfg);
  using V = LimitSetReport::Verdict;
  LimitSetConfig cc = cfg;
  cc.eps_gap = cfg.eps_gap / k;
  cc.max_finite = cfg.max_finite * k;
  if (r.base.verdict == V::Finite) {
    // orbit closure under the lifts and the deck rotation
    auto orb = find_finite_orbit(cover_action(act, k), cc.max_finite);
    if (!orb) throw InconclusiveAtScale("no finite orbit found in the cover");
    r.cover.verdict = V::Finite;
    r.cover.orbit = orb;
    for (double y : orb->points) r.cover.cloud.push_back(frac01(y));
    std::sort(r.cover.cloud.begin(), r.cover.cloud.end());
  } else {
    // the deck rotation is central, so the preimage group's orbit of a seed is
    // the lifts' orbit of its k deck translates
    std::vector<CircleHomeo> lifts;
    for (int i = 0; i < act.presentation().rank(); ++i) lifts.push_back(lift_to_cover(act.generator(i), k).on_circle());
    cc.seeds.clear();
    for (double s : cfg.seeds)
      for (int j = 0; j < k; ++j) cc.seeds.push_back((frac01(s) + j) / k);
    CircleAction up(act.presentation(), lifts);
    int R = detail::affordable_radius(up.presentation(), cfg.radius, cfg.max_words);
    auto clouds = detail::orbit_clouds(up, cc, R);
    bool whole = true;
    for (size_t s = 0; s < cfg.seeds.size(); ++s) {
      std::vector<double> merged;
      for (int j = 0; j < k; ++j) {
        auto& f = clouds.full[s * k + j];
        merged.insert(merged.end(), f.begin(), f.end());
      }
      double mg;
      detail::cloud_gaps(merged, cc.eps_gap, &mg);
      whole = whole && mg <= cc.eps_gap;
    }
    r.cover.radius = R;
    r.cover.cloud = clouds.deep;
    for (auto& p : r.cover.cloud) p = frac01(p);
    std::sort(r.cover.cloud.begin(), r.cover.cloud.end());
    r.cover.gaps = detail::cloud_gaps(r.cover.cloud, cc.eps_gap, &r.cover.max_gap);
    if (whole) {
      r.cover.verdict = V::Whole;
      r.cover.gaps.clear();
    } else {
      r.cover.verdict = r.cover.max_gap > cc.eps_gap ? V::CantorLike : V::Whole;
    }
  }
  if (r.base.verdict != r.cover.verdict)
    throw InconclusiveAtScale("base limit set is " + r.base.verdict_name() + " but the cover's is " +
                              r.cover.verdict_name());
  std::ostringstream os;
  if (r.base.verdict == V::Finite) {
    r.base_orbit = static_cast<long>(r.base.orbit->points.size());
    r.cover_orbit = static_cast<long>(r.cover.orbit->points.size());
    if (r.cover_orbit != k * r.base_orbit)
      throw InconclusiveAtScale("cover orbit has " + std::to_string(r.cover_orbit) + " points, expected " +
                                std::to_string(k * r.base_orbit));
    for (double y : r.cover.cloud) {
      double x = cover_projection(y, k), best = 1;
      for (double b : r.base.cloud) best = std::min(best, circle_distance(x, b));
      r.max_mismatch = std::max(r.max_mismatch, best);
    }
    if (r.max_mismatch > tol) throw InconclusiveAtScale("cover orbit does not project onto the base orbit");
    os << "finite: " << r.base_orbit << " points below, " << r.cover_orbit << " above";
  } else if (r.base.verdict == V::CantorLike) {
    // every base gap longer than tol has k preimage gaps, and every long cover gap projects onto a base gap
    auto match = [&](double l, double len, const std::vector<Arc>& gaps, double scale_tol) {
      double best = INFINITY;
      for (auto& g : gaps)
        best = std::min(best, std::max(circle_distance(g.l, l), std::abs(g.len - len)));
      return best <= scale_tol ? best : -1.0;
    };
    for (auto& g : r.base.gaps) {
      if (g.len <= 2 * tol) continue;
      for (int j = 0; j < k; ++j) {
        double m = match((g.l + j) / k, g.len / k, r.cover.gaps, tol / k);
        if (m < 0)
          throw InconclusiveAtScale("base gap at " + scalar_str(g.l) + " has no preimage gap on sheet " +
                                    std::to_string(j));
        r.max_mismatch = std::max(r.max_mismatch, m * k);
        ++r.matched_gaps;
      }
    }
    for (auto& g : r.cover.gaps) {
      if (g.len * k <= 2 * tol) continue;
      if (match(cover_projection(g.l, k), g.len * k, r.base.gaps, tol) < 0)
        throw InconclusiveAtScale("cover gap at " + scalar_str(g.l) + " projects onto no base gap");
    }
    os << "cantor-like: " << r.matched_gaps << " preimage gaps matched";
  } else {
    os << "whole: cover cloud max gap " << r.cover.max_gap * k << " in R/" << k << "Z units";
  }
  r.summary = os.str();
  return r;
}

// ---- smooth flows ------------------------------------------------------------------------

namespace detail {

// Dormand-Prince 5(4) for the displacement u' = X(x0 + u), u(0) = 0, up to time T.
inline double dopri_displacement(const std::function<double(double)>& X, double x0, double T, double rtol = 1e-12,
                                 double atol = 1e-15) {
  static constexpr double a21 = 1.0 / 5, a31 = 3.0 / 40, a32 = 9.0 / 40, a41 = 44.0 / 45, a42 = -56.0 / 15,
                          a43 = 32.0 / 9, a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                          a54 = -212.0 / 729, a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                          a64 = 49.0 / 176, a65 = -5103.0 / 18656, b1 = 35.0 / 384, b3 = 500.0 / 1113,
                          b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                          e6 = 22.0 / 525, e7 = -1.0 / 40;
  double u = 0, t = 0, dir = T < 0 ? -1 : 1, h = 0.05 * dir;
  auto f = [&](double v) { return X(x0 + v); };
  double k1 = f(u);
  for (int it = 0; it < 1000000 && dir * (T - t) > 0; ++it) {
    if (dir * (t + h - T) > 0) h = T - t;
    double k2 = f(u + h * a21 * k1);
    double k3 = f(u + h * (a31 * k1 + a32 * k2));
    double k4 = f(u + h * (a41 * k1 + a42 * k2 + a43 * k3));
    double k5 = f(u + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
    double k6 = f(u + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
    double un = u + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    double k7 = f(un);
    double err = std::abs(h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7));
    double sc = atol + rtol * std::max(std::abs(u), std::abs(un));
    double ratio = err / sc;
    if (ratio <= 1) {
      t += h;
      u = un;
      k1 = k7;
    }
    double fac = ratio == 0 ? 5 : std::clamp(0.9 * std::pow(ratio, -0.2), 0.2, 5.0);
    h *= fac;
  }
  return u;
}

// Safeguarded Newton for F(y) = x with F an increasing lift.
inline double invert_lift(const std::function<double(double)>& F, const std::function<double(double)>& dF, double x,
                          double guess) {
  double y = guess;
  for (int i = 0; i < 30; ++i) {
    double r = F(y) - x;
    if (std::abs(r) < 1e-15) return y;
    double d = dF(y);
    double step = r / d;
    if (!(std::abs(step) < 0.5) || d <= 0) return solve_lift(F, x);
    y -= step;
  }
  return std::abs(F(y) - x) < 1e-12 ? y : solve_lift(F, x);
}

}  // namespace detail

// Time-T map of a periodic vector field X on the circle, stored as
// f(x) = x + X(x) phi(x) with phi a Fourier fit of displacement / X. The fixed
// set and the displacement signs are those of X exactly.
class PiecewiseDiffeo {
 public:
  struct Zero {
    double at;
    int multiplicity;  // 1 simple, 2 double
  };

  PiecewiseDiffeo() = default;
  PiecewiseDiffeo(std::function<double(double)> X, std::function<double(double)> dX, std::vector<Zero> zeros,
                  double T = 1.0, int n = 384)
      : X_(std::move(X)), dX_(std::move(dX)), zeros_(std::move(zeros)), T_(T) {
    fit(n);
  }

  const std::vector<Zero>& zeros() const { return zeros_; }
  std::vector<double> breakpoints() const {
    std::vector<double> b;
    for (auto& z : zeros_) b.push_back(z.at);
    return b;
  }
  // one global analytic field: the pieces match to all orders at every breakpoint
  std::vector<bool> c1_matched() const { return std::vector<bool>(zeros_.size(), true); }
  double fit_error() const { return fit_err_; }
  double min_phi() const { return min_phi_; }

  double field(double x) const { return X_(x); }
  double phi(double x) const {
    double th = 2 * kPi * frac01(x), s = c_[0].real();
    std::complex<double> z(std::cos(th), std::sin(th)), p = 1;
    for (size_t k = 1; k < c_.size(); ++k) {
      p *= z;
      s += c_[k].real() * p.real() - c_[k].imag() * p.imag();
    }
    return s;
  }
  double dphi(double x) const {
    double th = 2 * kPi * frac01(x), s = 0;
    std::complex<double> z(std::cos(th), std::sin(th)), p = 1;
    for (size_t k = 1; k < c_.size(); ++k) {
      p *= z;
      // d/dx Re(c p) = Re(c * 2 pi i k p)
      s += -2 * kPi * static_cast<double>(k) * (c_[k].real() * p.imag() + c_[k].imag() * p.real());
    }
    return s;
  }
  double operator()(double x) const { return x + X_(x) * phi(x); }
  double derivative(double x) const { return 1 + dX_(x) * phi(x) + X_(x) * dphi(x); }
  double inverse(double y) const {
    auto F = [this](double x) { return (*this)(x); };
    auto dF = [this](double x) { return derivative(x); };
    return detail::invert_lift(F, dF, y, y - X_(y) * phi(y));
  }
  // direct integration, for checks
  double flow(double x) const { return x + detail::dopri_displacement(X_, x, T_); }

  CircleHomeo homeo(std::string name) const {
    auto self = std::make_shared<const PiecewiseDiffeo>(*this);
    return CircleHomeo::from_lift([self](double x) { return (*self)(x); }, [self](double y) { return self->inverse(y); },
                                  std::move(name));
  }

 private:
  std::function<double(double)> X_, dX_;
  std::vector<Zero> zeros_;
  double T_ = 1;
  std::vector<std::complex<double>> c_;  // phi = c0 + 2 Re sum c_k e^{2 pi i k x}, folded
  double fit_err_ = 0, min_phi_ = 0;

  double phi_sample(double x) const {
    for (auto& z : zeros_) {
      if (circle_distance(x, z.at) > 1e-12) continue;
      if (z.multiplicity >= 2) return T_;
      double lam = dX_(z.at);
      return std::abs(lam) < 1e-12 ? T_ : std::expm1(lam * T_) / lam;
    }
    return detail::dopri_displacement(X_, x, T_) / X_(x);
  }

  void fit(int n) {
    for (;;) {
      std::vector<double> s(n);
      parallel_for(static_cast<size_t>(n), [&](size_t i) {
        double x = static_cast<double>(i) / n;
        for (auto& z : zeros_)
          if (circle_distance(x, z.at) < 0.25 / n) x = z.at;
        s[i] = phi_sample(x);
      });
      int m = n / 2;
      c_.assign(m, {0, 0});
      std::vector<std::complex<double>> w(n);
      for (int i = 0; i < n; ++i) w[i] = std::polar(1.0, -2 * kPi * i / n);
      for (int k = 0; k < m; ++k) {
        std::complex<double> acc = 0;
        for (int i = 0; i < n; ++i) acc += s[i] * w[(static_cast<long>(k) * i) % n];
        acc /= static_cast<double>(n);
        c_[k] = k == 0 ? acc : 2.0 * acc;
      }
      c_[0] = c_[0].real();
      // midpoint check against direct integration
      std::vector<double> e(n), mp(n);
      parallel_for(static_cast<size_t>(n), [&](size_t i) {
        double x = (i + 0.5) / n;
        double direct = flow(x);
        e[i] = std::abs(direct - (*this)(x));
        mp[i] = phi(x);
      });
      fit_err_ = *std::max_element(e.begin(), e.end());
      min_phi_ = std::min(*std::min_element(mp.begin(), mp.end()), *std::min_element(s.begin(), s.end()));
      if (fit_err_ < 1e-11 || n >= 6144) break;
      n *= 2;
    }
    if (!(min_phi_ > 0)) throw CertificationFailedAtResolution("flow fit lost positivity");
  }
};

// ---- the smooth non-linear pair ------------------------------------------------------------

struct LiegpParams {
  double field_scale = 0.25;
  // nu(t) = t + delta + kappa sin(2 pi (t - phase)) / (2 pi)
  double delta = 1.0 / 6, kappa = 0.25, phase = 0.1;
};

struct LiegpPair {
  LiegpParams params;
  PiecewiseDiffeo a_map;
  CircleHomeo a, b, nu;
  std::vector<double> A{0.0, 1.0 / 3, 2.0 / 3}, nuA;
  double sandwich_margin = 0;  // min over A of min(nu(t) - t, t + 1/3 - nu(t))

  bool sandwich_ok(double margin = 1.0 / 30) const { return sandwich_margin >= margin - 1e-15; }
  CircleAction action() const { return CircleAction(Presentation::free(2, {"a", "b"}), {a, b}); }
};

namespace detail {
// Simple zeros at 0 and 1/3 (repelling, attracting), double zero at 2/3 with
// the field negative on both sides.
inline double liegp_field(double t, double s) { return -s * std::sin(3 * kPi * t) * std::sin(kPi * (t - 2.0 / 3)); }
inline double liegp_dfield(double t, double s) {
  return -s * (3 * kPi * std::cos(3 * kPi * t) * std::sin(kPi * (t - 2.0 / 3)) +
               kPi * std::sin(3 * kPi * t) * std::cos(kPi * (t - 2.0 / 3)));
}
inline double nu_margin(const LiegpParams& p) {
  double m = INFINITY;
  for (double t : {0.0, 1.0 / 3, 2.0 / 3}) {
    double d = p.delta + p.kappa * std::sin(2 * kPi * (t - p.phase)) / (2 * kPi);
    m = std::min({m, d, 1.0 / 3 - d});
  }
  return m;
}
}  // namespace detail

inline LiegpPair liegp_pair(const LiegpParams& p) {
  if (!(std::abs(p.kappa) < 1)) throw PreconditionFailed("|kappa| must be below 1 for nu to be a diffeomorphism");
  if (!(p.field_scale > 0)) throw PreconditionFailed("field scale must be positive");
  LiegpPair out;
  out.params = p;
  double s = p.field_scale;
  out.a_map = PiecewiseDiffeo([s](double t) { return detail::liegp_field(t, s); },
                              [s](double t) { return detail::liegp_dfield(t, s); },
                              {{0.0, 1}, {1.0 / 3, 1}, {2.0 / 3, 2}});
  out.a = out.a_map.homeo("a");
  auto nu = [p](double t) { return t + p.delta + p.kappa * std::sin(2 * kPi * (t - p.phase)) / (2 * kPi); };
  auto dnu = [p](double t) { return 1 + p.kappa * std::cos(2 * kPi * (t - p.phase)); };
  out.nu = CircleHomeo::from_lift(nu, [nu, dnu, p](double y) { return detail::invert_lift(nu, dnu, y, y - p.delta); },
                                  "nu");
  out.b = out.nu * out.a * out.nu.inverse();
  for (double t : out.A) out.nuA.push_back(frac01(nu(t)));
  out.sandwich_margin = detail::nu_margin(p);
  return out;
}

// Random nu satisfying t < nu(t) < t + 1/3 on A with margin 1/30.
inline LiegpPair build_liegp_pair(uint64_t seed = 0, double field_scale = 0.25) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> delta(0.06, 0.27), kappa(-0.5, 0.5), phase(0, 1);
  LiegpParams p;
  p.field_scale = field_scale;
  for (int i = 0; i < 10000; ++i) {
    p.delta = delta(rng);
    p.kappa = kappa(rng);
    p.phase = phase(rng);
    if (detail::nu_margin(p) >= 1.0 / 30) return liegp_pair(p);
  }
  throw SearchExhausted("no admissible nu drawn");
}

// ---- fixed-point profiles ---------------------------------------------------------------

struct FixedPoint {
  enum Type { Attracting, Repelling, ParabolicLeft, ParabolicRight } type;
  double at;
  double left_disp, right_disp;  // f(x -+ delta) - (x -+ delta)

  bool hyperbolic() const { return type == Attracting || type == Repelling; }
  bool parabolic() const { return !hyperbolic(); }
  const char* name() const {
    switch (type) {
      case Attracting: return "attracting";
      case Repelling: return "repelling";
      case ParabolicLeft: return "parabolic-left";
      case ParabolicRight: return "parabolic-right";
    }
    return "?";
  }
};

struct ProfileConfig {
  int refine = 8;           // grid step delta / refine
  double fix_tol = 1e-10;   // |f(x) - x| below this counts as fixed
  double candidate = 1e-5;  // local minima of |f(x) - x| below this are refined
};

namespace detail {
inline double centred_disp(const CircleHomeo& f, double x) {
  double d = f(x) - x;
  return d - std::round(d);
}
}  // namespace detail

// Fixed points of f with types read off the displacement signs at distance delta.
inline std::vector<FixedPoint> fixed_point_profile(const CircleHomeo& f, double delta = 1e-3,
                                                   const ProfileConfig& cfg = {}) {
  if (!(delta > 0 && delta < 0.25)) throw PreconditionFailed("delta must lie in (0, 1/4)");
  const long n = static_cast<long>(std::ceil(cfg.refine / delta));
  std::vector<double> d(n);
  parallel_for(static_cast<size_t>(n), [&](size_t i) { d[i] = detail::centred_disp(f, static_cast<double>(i) / n); });
  auto D = [&](double x) { return detail::centred_disp(f, x); };
  std::vector<double> roots;
  for (long i = 0; i < n; ++i) {
    long j = (i + 1) % n, h = (i + n - 1) % n;
    double x0 = static_cast<double>(i) / n, x1 = x0 + 1.0 / n;
    if (d[i] == 0) {
      roots.push_back(x0);
    } else if (d[i] * d[j] < 0 && std::abs(d[i]) < 0.25 && std::abs(d[j]) < 0.25) {
      double lo = x0, hi = x1, slo = d[i];
      for (int k = 0; k < 80; ++k) {
        double mid = 0.5 * (lo + hi), sm = D(mid);
        if (sm == 0) {
          lo = hi = mid;
          break;
        }
        if ((sm < 0) == (slo < 0)) lo = mid, slo = sm;
        else hi = mid;
      }
      roots.push_back(0.5 * (lo + hi));
    } else if (std::abs(d[i]) < cfg.candidate && std::abs(d[i]) <= std::abs(d[h]) &&
               std::abs(d[i]) <= std::abs(d[j]) && d[i] * d[h] > 0 && d[i] * d[j] > 0) {
      // tangency: golden-section on |D| over the neighbouring cells
      double lo = x0 - 1.0 / n, hi = x1;
      const double g = (std::sqrt(5.0) - 1) / 2;
      double p = hi - g * (hi - lo), q = lo + g * (hi - lo), fp = std::abs(D(p)), fq = std::abs(D(q));
      for (int k = 0; k < 120 && hi - lo > 1e-15; ++k) {
        if (fp < fq) {
          hi = q, q = p, fq = fp, p = hi - g * (hi - lo), fp = std::abs(D(p));
        } else {
          lo = p, p = q, fp = fq, q = lo + g * (hi - lo), fq = std::abs(D(q));
        }
      }
      double x = 0.5 * (lo + hi);
      if (std::abs(D(x)) <= cfg.fix_tol) roots.push_back(x);
    }
  }
  for (auto& r : roots) r = frac01(r);
  std::sort(roots.begin(), roots.end());
  std::vector<double> uniq;
  for (double r : roots)
    if (uniq.empty() || r - uniq.back() > 2.0 / n) uniq.push_back(r);
  if (uniq.size() > 1 && uniq.front() + 1 - uniq.back() <= 2.0 / n) uniq.pop_back();
  std::vector<FixedPoint> out;
  for (size_t i = 0; i < uniq.size(); ++i) {
    double x = uniq[i];
    if (uniq.size() > 1) {
      double next = i + 1 < uniq.size() ? uniq[i + 1] : uniq[0] + 1;
      if (next - x < delta) throw NonIsolatedAtScale("fixed points " + scalar_str(x) + " and " + scalar_str(frac01(next)) +
                                                     " closer than " + scalar_str(delta));
    }
    double l = D(x - delta), r = D(x + delta);
    if (std::abs(l) <= cfg.fix_tol || std::abs(r) <= cfg.fix_tol)
      throw NonIsolatedAtScale("displacement vanishes within " + scalar_str(delta) + " of " + scalar_str(x));
    FixedPoint fp{FixedPoint::Attracting, x, l, r};
    if (l > 0 && r < 0) fp.type = FixedPoint::Attracting;
    else if (l < 0 && r > 0) fp.type = FixedPoint::Repelling;
    else if (l > 0) fp.type = FixedPoint::ParabolicRight;
    else fp.type = FixedPoint::ParabolicLeft;
    out.push_back(fp);
  }
  // a map with no isolated zero but vanishing displacement everywhere
  if (out.empty() && std::all_of(d.begin(), d.end(), [&](double v) { return std::abs(v) <= cfg.fix_tol; }))
    throw NonIsolatedAtScale("displacement vanishes on the whole grid");
  return out;
}

// ---- nonlinearity witness -----------------------------------------------------------------

struct WitnessConfig {
  int a = 0, b = 1;  // generator indices of the candidate pair
  long N = 10000;    // iterations per letter
  int rounds = 2;    // letter-power rounds chained from the ball points
  double delta = 1e-3;
  std::vector<double> seeds{0.1234567, 0.5403023, 0.8414709};
};

struct NonlinearityReport {
  std::vector<FixedPoint> profile_a, profile_b;
  std::vector<double> C;             // Fix a union Fix b, sorted
  std::vector<double> closure_dist;  // per point of C, worst over seeds
  bool closure_ok = false, alternating = false, mixed = false;
  std::string obstruction;
  std::string scale_note;
  bool ok() const { return closure_ok && alternating && mixed; }
};

namespace detail {
inline bool mixed_profile(const std::vector<FixedPoint>& p) {
  bool h = false, q = false;
  for (auto& f : p) (f.hyperbolic() ? h : q) = true;
  return h && q;
}
}  // namespace detail

// Checks the three ingredients of the obstruction to semi-conjugacy into a
// cover of PSL2: C lies in every orbit closure, Fix a and Fix b alternate, and
// Fix a mixes hyperbolic and parabolic points.
inline NonlinearityReport nonlinearity_witness(const CircleAction& act, int R, double eps,
                                               const WitnessConfig& cfg = {}) {
  NonlinearityReport rep;
  rep.profile_a = fixed_point_profile(act.generator(cfg.a), cfg.delta);
  rep.profile_b = fixed_point_profile(act.generator(cfg.b), cfg.delta);
  struct Tagged {
    double x;
    int side;
  };
  std::vector<Tagged> all;
  for (auto& f : rep.profile_a) all.push_back({f.at, 0});
  for (auto& f : rep.profile_b) all.push_back({f.at, 1});
  std::sort(all.begin(), all.end(), [](const Tagged& x, const Tagged& y) { return x.x < y.x; });
  for (auto& t : all) rep.C.push_back(t.x);
  rep.alternating = !rep.profile_a.empty() && rep.profile_a.size() == rep.profile_b.size();
  for (size_t i = 0; i < all.size() && rep.alternating; ++i)
    if (all[i].side == all[(i + 1) % all.size()].side) rep.alternating = false;
  rep.mixed = detail::mixed_profile(rep.profile_a);

  // orbit clouds: ball points, then each letter iterated until it settles near C
  const Presentation& p = act.presentation();
  auto ball = enumerate_ball(p, R);
  rep.closure_dist.assign(rep.C.size(), 0);
  std::vector<std::vector<double>> per_seed(cfg.seeds.size(), std::vector<double>(rep.C.size(), INFINITY));
  for (size_t s = 0; s < cfg.seeds.size(); ++s) {
    std::vector<std::vector<double>> best(ball.size(), std::vector<double>(rep.C.size(), INFINITY));
    parallel_for(ball.size(), [&](size_t i) {
      double y0 = act.apply(ball[i], cfg.seeds[s]);
      // true once every point of C has been met within eps/4
      auto note = [&](double y) {
        bool all = true;
        for (size_t c = 0; c < rep.C.size(); ++c) {
          double d = circle_distance(y, rep.C[c]);
          best[i][c] = std::min(best[i][c], d);
          all = all && best[i][c] < eps / 4;
        }
        return all;
      };
      if (note(y0)) return;
      // each round runs every letter power from the end points of the last one
      std::vector<double> from{y0};
      for (int round = 0; round < cfg.rounds; ++round) {
        std::vector<double> ends;
        for (double start : from)
          for (int g = 0; g < p.rank(); ++g)
            for (int sgn : {1, -1}) {
              const CircleHomeo& G = act.generator(g);
              double y = start;
              for (long k = 0; k < cfg.N; ++k) {
                double z = sgn > 0 ? G(y) : G.inverse_lift(y);
                bool stalled = std::abs(z - y) < 1e-15;
                y = z;
                if (note(y)) return;
                if (stalled) break;
              }
              ends.push_back(y);
            }
        from = std::move(ends);
      }
    });
    for (auto& b : best)
      for (size_t c = 0; c < rep.C.size(); ++c) per_seed[s][c] = std::min(per_seed[s][c], b[c]);
  }
  for (auto& ps : per_seed)
    for (size_t c = 0; c < rep.C.size(); ++c) rep.closure_dist[c] = std::max(rep.closure_dist[c], ps[c]);
  rep.closure_ok = !rep.C.empty() && std::all_of(rep.closure_dist.begin(), rep.closure_dist.end(),
                                                 [&](double d) { return d <= eps; });

  std::ostringstream os;
  os << "Fix a has " << rep.profile_a.size() << " points (";
  for (size_t i = 0; i < rep.profile_a.size(); ++i) os << (i ? ", " : "") << rep.profile_a[i].name();
  os << "); every orbit closure meets Fix a and Fix b within " << eps
     << "; the two fixed sets alternate, so a monotone degree-one collapse is injective on them and would carry "
        "the mixed hyperbolic/parabolic profile of a into a cover of PSL2, where every element's fixed points are "
        "all hyperbolic or all parabolic";
  rep.obstruction = os.str();
  rep.scale_note = "verdict holds at resolution " + scalar_str(eps) + ", radius " + std::to_string(R) + ", " +
                   std::to_string(cfg.N) + " iterations; blow-ups below resolution are not excluded";
  if (!rep.ok()) {
    std::string why;
    if (!rep.closure_ok) why += " orbit closures miss C;";
    if (!rep.alternating) why += " fixed sets do not alternate;";
    if (!rep.mixed) why += " profile of a is pure;";
    throw WitnessNotFound(why.substr(1));
  }
  return rep;
}

// ---- free orbits ---------------------------------------------------------------------------

struct OrbitViolation {
  std::string word;
  double distance;  // circle distance from w(x) to x
  bool trivial;     // w acts as the identity on a sample grid
};

struct FreeOrbitVerdict {
  bool free_at_scale = false;
  double margin = INFINITY;  // smallest distance over nontrivial words
  size_t words = 0;
  std::vector<OrbitViolation> violations;
};

// Whether <G, psi H psi^-1> x is a free orbit among ball words of the free
// group on the given generators.
inline FreeOrbitVerdict free_orbit_search(const std::vector<CircleHomeo>& G, const std::vector<CircleHomeo>& H,
                                          const CircleHomeo& psi, double x, int R, double tol = 1e-9) {
  std::vector<std::string> names;
  std::vector<CircleHomeo> gens;
  CircleHomeo psi_inv = psi.inverse();
  for (size_t i = 0; i < G.size(); ++i) {
    names.push_back("g" + std::to_string(i + 1));
    gens.push_back(G[i]);
  }
  for (size_t i = 0; i < H.size(); ++i) {
    names.push_back("h" + std::to_string(i + 1));
    gens.push_back(psi * H[i] * psi_inv);
  }
  if (gens.empty()) throw PreconditionFailed("no generators");
  CircleAction act(Presentation::free(static_cast<int>(gens.size()), names), gens);
  auto ball = enumerate_ball(act.presentation(), R);
  FreeOrbitVerdict v;
  v.words = ball.size();
  std::vector<double> dist(ball.size(), INFINITY);
  std::vector<char> triv(ball.size(), 0);
  parallel_for(ball.size(), [&](size_t i) {
    if (ball[i].empty()) return;
    dist[i] = circle_distance(act.apply(ball[i], x), x);
    if (dist[i] > tol) return;
    bool t = true;
    for (int j = 0; j < 16 && t; ++j) {
      double z = (j + 0.37) / 16;
      t = circle_distance(act.apply(ball[i], z), z) <= tol;
    }
    triv[i] = t;
  });
  for (size_t i = 0; i < ball.size(); ++i) {
    if (ball[i].empty()) continue;
    if (dist[i] <= tol) v.violations.push_back({act.presentation().format(ball[i]), dist[i], triv[i] != 0});
    else v.margin = std::min(v.margin, dist[i]);
  }
  v.free_at_scale = v.violations.empty();
  return v;
}

}  // namespace flexcircle
