#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "flexcircle/circle.hpp"
#include "flexcircle/errors.hpp"
#include "flexcircle/pingpong.hpp"

namespace flexcircle {

// ---- piecewise linear lifts with rational knots ------------------------------------

namespace detail {
struct PiecewiseLinearImpl final : CircleHomeo::Impl {
  std::vector<Rational> xs, ys;  // one period, xs.back() = xs[0] + 1, ys.back() = ys[0] + 1
  std::vector<double> xd, yd;
  std::string name;

  static double eval(const std::vector<double>& X, const std::vector<double>& Y, double x) {
    double k = std::floor(x - X[0]);
    double t = x - k;
    if (t >= X.back()) { t -= 1; k += 1; }
    size_t j = std::upper_bound(X.begin(), X.end(), t) - X.begin();
    j = std::clamp<size_t>(j, 1, X.size() - 1);
    double s = (t - X[j - 1]) / (X[j] - X[j - 1]);
    return Y[j - 1] + s * (Y[j] - Y[j - 1]) + k;
  }
  double lift(double x) const override { return eval(xd, yd, x); }
  double inverse_lift(double y) const override { return eval(yd, xd, y); }
  std::optional<Rational> exact_lift(const Rational& x) const override {
    Rational k = rational_floor(x - xs[0]);
    Rational t = x - k;
    size_t j = std::upper_bound(xs.begin(), xs.end(), t) - xs.begin();
    j = std::clamp<size_t>(j, 1, xs.size() - 1);
    Rational r = ys[j - 1] + (t - xs[j - 1]) * (ys[j] - ys[j - 1]) / (xs[j] - xs[j - 1]) + k;
    return r;
  }
  CircleHomeo::Kind kind() const override { return CircleHomeo::Kind::Piecewise; }
  std::string describe() const override { return name; }
};
}  // namespace detail

// Knots (xs[i], ys[i]) over one period: both strictly increasing, the last knot
// one period after the first.
inline CircleHomeo piecewise_linear(std::vector<Rational> xs, std::vector<Rational> ys, std::string name = "pl") {
  if (xs.size() != ys.size() || xs.size() < 2) throw ValidationError("piecewise linear map needs matching knots");
  for (size_t i = 1; i < xs.size(); ++i)
    if (!(xs[i] > xs[i - 1]) || !(ys[i] > ys[i - 1])) throw ValidationError("knots must be strictly increasing");
  if (xs.back() != xs[0] + 1 || ys.back() != ys[0] + 1) throw ValidationError("knots must span one period");
  auto p = std::make_shared<detail::PiecewiseLinearImpl>();
  for (auto& x : xs) p->xd.push_back(x.get_d());
  for (auto& y : ys) p->yd.push_back(y.get_d());
  p->xs = std::move(xs);
  p->ys = std::move(ys);
  p->name = std::move(name);
  return CircleHomeo(p);
}

// ---- monotone degree-one maps ------------------------------------------------------

class MonotoneMap {
 public:
  struct Impl {
    virtual ~Impl() = default;
    virtual double value(double x) const = 0;
    virtual double left(double x) const { return value(x); }
    virtual double right(double x) const { return value(x); }
    virtual bool surjective() const { return true; }
    virtual std::vector<Arc> gaps() const { return {}; }
    virtual std::string describe() const = 0;
  };

  MonotoneMap() : MonotoneMap(identity()) {}
  explicit MonotoneMap(std::shared_ptr<const Impl> p) : p_(std::move(p)) {}

  static MonotoneMap identity();
  // Value values[i] + k on [points[i] + k, points[i+1] + k); right continuous.
  static MonotoneMap step(std::vector<double> points, std::vector<double> values, double snap = 1e-10);
  // Collapses each listed gap to a point, linear on the complement.
  static MonotoneMap from_gaps(std::vector<Arc> gaps);
  static MonotoneMap custom(std::function<double(double)> f, std::function<double(double)> left = {},
                            std::function<double(double)> right = {}, bool surjective = true,
                            std::string name = "custom");

  double operator()(double x) const { return p_->value(x); }
  double left(double x) const { return p_->left(x); }
  double right(double x) const { return p_->right(x); }
  bool surjective() const { return p_->surjective(); }
  std::vector<Arc> gaps() const { return p_->gaps(); }
  std::string describe() const { return p_->describe(); }

 private:
  std::shared_ptr<const Impl> p_;
};

namespace detail {
struct IdentityMonotone final : MonotoneMap::Impl {
  double value(double x) const override { return x; }
  std::string describe() const override { return "id"; }
};

struct StepMonotone final : MonotoneMap::Impl {
  std::vector<double> pts, vals;
  double snap = 0;
  // index of the step containing x, k periods up
  std::pair<long, double> locate(double x, bool from_left) const {
    double k = std::floor(x - pts[0]);
    double t = x - k;
    if (t >= pts[0] + 1 - snap) { t -= 1; k += 1; }
    long i = 0;
    for (size_t j = 0; j < pts.size(); ++j) {
      bool past = from_left ? (t > pts[j] + snap) : (t >= pts[j] - snap);
      if (past) i = static_cast<long>(j);
    }
    if (from_left && t <= pts[0] + snap) return {static_cast<long>(pts.size()) - 1, k - 1};
    return {i, k};
  }
  double value(double x) const override {
    auto [i, k] = locate(x, false);
    return vals[i] + k;
  }
  double right(double x) const override { return value(x); }
  double left(double x) const override {
    auto [i, k] = locate(x, true);
    return vals[i] + k;
  }
  bool surjective() const override { return false; }
  std::string describe() const override { return "step(" + std::to_string(pts.size()) + ")"; }
};

struct GapMonotone final : MonotoneMap::Impl {
  std::vector<double> a, b;  // collapsed intervals [a_i, b_i] inside [0, 1), sorted
  double total = 0;
  double collapsed_before(double t) const {
    double s = 0;
    for (size_t i = 0; i < a.size(); ++i) {
      if (t <= a[i]) break;
      s += std::min(t, b[i]) - a[i];
    }
    return s;
  }
  double value(double x) const override {
    double k = std::floor(x);
    double t = x - k;
    return k + (t - collapsed_before(t)) / (1 - total);
  }
  std::vector<Arc> gaps() const override {
    std::vector<Arc> g;
    for (size_t i = 0; i < a.size(); ++i) g.push_back({a[i], b[i] - a[i]});
    return g;
  }
  std::string describe() const override { return "staircase(" + std::to_string(a.size()) + " gaps)"; }
};

struct CustomMonotone final : MonotoneMap::Impl {
  std::function<double(double)> f, fl, fr;
  bool surj = true;
  std::string name;
  double value(double x) const override { return f(x); }
  double left(double x) const override { return fl ? fl(x) : f(x); }
  double right(double x) const override { return fr ? fr(x) : f(x); }
  bool surjective() const override { return surj; }
  std::string describe() const override { return name; }
};
}  // namespace detail

inline MonotoneMap MonotoneMap::identity() { return MonotoneMap(std::make_shared<detail::IdentityMonotone>()); }
inline MonotoneMap MonotoneMap::step(std::vector<double> points, std::vector<double> values, double snap) {
  if (points.empty() || points.size() != values.size()) throw ValidationError("step map needs matching points");
  for (size_t i = 1; i < points.size(); ++i)
    if (!(points[i] > points[i - 1]) || values[i] < values[i - 1])
      throw ValidationError("step map points must increase and values must not decrease");
  if (!(points.back() < points[0] + 1) || values.back() > values[0] + 1)
    throw ValidationError("step map must fit in one period");
  auto p = std::make_shared<detail::StepMonotone>();
  p->pts = std::move(points);
  p->vals = std::move(values);
  p->snap = snap;
  return MonotoneMap(p);
}
inline MonotoneMap MonotoneMap::from_gaps(std::vector<Arc> gaps) {
  auto p = std::make_shared<detail::GapMonotone>();
  std::vector<std::pair<double, double>> iv;
  for (auto& g : gaps) {
    double l = frac01(g.l), r = l + g.len;
    if (r <= 1) iv.push_back({l, r});
    else {
      iv.push_back({l, 1});
      iv.push_back({0, r - 1});
    }
  }
  std::sort(iv.begin(), iv.end());
  for (auto& [l, r] : iv) {
    if (!p->a.empty() && l < p->b.back()) throw ValidationError("gaps overlap");
    p->a.push_back(l);
    p->b.push_back(r);
    p->total += r - l;
  }
  if (!(p->total < 1)) throw ValidationError("gaps cover the circle");
  return MonotoneMap(p);
}
inline MonotoneMap MonotoneMap::custom(std::function<double(double)> f, std::function<double(double)> left,
                                       std::function<double(double)> right, bool surjective, std::string name) {
  auto p = std::make_shared<detail::CustomMonotone>();
  p->f = std::move(f);
  p->fl = std::move(left);
  p->fr = std::move(right);
  p->surj = surjective;
  p->name = std::move(name);
  return MonotoneMap(p);
}

// Largest violations of monotonicity and of h(x+1) = h(x)+1 on a grid.
struct MonotoneCheck {
  double periodicity = 0;
  bool monotone = true;
  bool one_sided = true;  // h(x-) <= h(x) <= h(x+)
};
inline MonotoneCheck check_monotone(const MonotoneMap& h, int grid = 10000, double tol = 1e-12) {
  MonotoneCheck c;
  double prev = h(0.0);
  for (int i = 0; i <= grid; ++i) {
    double x = static_cast<double>(i) / grid;
    double y = h(x);
    c.periodicity = std::max(c.periodicity, std::abs(h(x + 1) - y - 1));
    if (i > 0 && y < prev - tol) c.monotone = false;
    if (h.left(x) > y + tol || y > h.right(x) + tol) c.one_sided = false;
    prev = y;
  }
  return c;
}

// sup over grid and generators (and their inverses) of |h(rho(g)x) - rhobar(g)(h(x))|.
inline double semiconj_residual(const MonotoneMap& h, const CircleAction& rho, const CircleAction& rhobar,
                                int grid = 10000) {
  if (rho.presentation().rank() != rhobar.presentation().rank()) throw PreconditionFailed("actions of different groups");
  double r = 0;
  for (int g = 0; g < rho.presentation().rank(); ++g)
    for (int e : {1, -1}) {
      Word w{{g, e}};
      for (int i = 0; i < grid; ++i) {
        double x = static_cast<double>(i) / grid;
        r = std::max(r, std::abs(h(rho.apply(w, x)) - rhobar.apply(w, h(x))));
      }
    }
  return r;
}

// ---- finite orbits --------------------------------------------------------------------

struct FiniteOrbit {
  std::vector<double> points;                 // p_0 < ... < p_{N-1} < p_0 + 1, cyclic order from p_0
  std::optional<std::vector<Rational>> exact;  // same points when decided exactly
  int size() const { return static_cast<int>(points.size()); }

  // Index j with v = p_{j mod N} + floor(j/N), or nullopt if v is off the lifted orbit.
  std::optional<long> lifted_index(double v, double tol = 1e-9) const {
    const long N = size();
    double k = std::floor(v - points[0]);
    double t = v - k;
    for (long i = 0; i < N; ++i)
      if (std::abs(t - points[i]) <= tol) return i + static_cast<long>(k) * N;
    if (std::abs(t - (points[0] + 1)) <= tol) return static_cast<long>(k + 1) * N;
    return std::nullopt;
  }
  std::optional<long> lifted_index(const Rational& v) const {
    const auto& P = *exact;
    const long N = size();
    long k = detail::rational_floor(v - P[0]);
    Rational t = v - k;
    for (long i = 0; i < N; ++i)
      if (t == P[i]) return i + k * N;
    return std::nullopt;
  }
};

namespace detail {

inline std::optional<FiniteOrbit> orbit_closure(const CircleAction& act, double x0, int N_max, double tol) {
  std::vector<double> pts{frac01(x0)};
  for (size_t head = 0; head < pts.size(); ++head) {
    for (int g = 0; g < act.presentation().rank(); ++g)
      for (int e : {1, -1}) {
        double y = frac01(act.apply(Word{{g, e}}, pts[head]));
        bool seen = false;
        for (double p : pts) seen = seen || circle_distance(p, y) <= tol;
        if (seen) continue;
        pts.push_back(y);
        if (static_cast<int>(pts.size()) > N_max) return std::nullopt;
      }
  }
  double p0 = frac01(x0);
  for (auto& p : pts) p = p0 + frac01(p - p0);
  std::sort(pts.begin(), pts.end());
  for (size_t i = 1; i < pts.size(); ++i)
    if (pts[i] - pts[i - 1] <= tol) pts[i] = pts[i - 1];
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() > 1 && pts.back() >= p0 + 1 - tol) pts.pop_back();
  FiniteOrbit o;
  o.points = pts;
  return o;
}

inline std::optional<FiniteOrbit> exact_orbit_closure(const CircleAction& act, const Rational& x0, int N_max) {
  auto red = [](const Rational& q) { return Rational(q - rational_floor(q)); };
  std::vector<Rational> queue{red(x0)};
  std::set<Rational> seen{queue[0]};
  for (size_t head = 0; head < queue.size(); ++head)
    for (int g = 0; g < act.presentation().rank(); ++g)
      for (int e : {1, -1}) {
        auto v = act.apply_exact(Word{{g, e}}, queue[head]);
        if (!v) return std::nullopt;
        Rational y = red(*v);
        if (seen.insert(y).second) {
          queue.push_back(y);
          if (static_cast<int>(queue.size()) > N_max) return std::nullopt;
        }
      }
  Rational p0 = red(x0);
  std::vector<Rational> pts;
  for (auto& q : seen) pts.push_back(p0 + red(q - p0));
  std::sort(pts.begin(), pts.end());
  FiniteOrbit o;
  for (auto& q : pts) o.points.push_back(q.get_d());
  o.exact = pts;
  return o;
}

inline bool all_exact(const CircleAction& act) {
  for (auto& g : act.generators())
    if (!g.has_exact()) return false;
  return true;
}

}  // namespace detail

// Finite orbit of size <= N_max, if one is found. Candidates: the basepoint 0,
// then periodic points of one nontrivial generator from sign changes of
// G^q(x) - x - p on a grid, refined by bisection.
inline std::optional<FiniteOrbit> find_finite_orbit(const CircleAction& act, int N_max = 64, double tol = 1e-9,
                                                    int grid = 2048) {
  if (N_max < 1) throw ValidationError("N_max must be positive");
  const int rank = act.presentation().rank();
  if (detail::all_exact(act)) {
    if (auto o = detail::exact_orbit_closure(act, Rational(0), N_max)) return o;
  }
  if (auto o = detail::orbit_closure(act, 0.0, N_max, tol)) return o;
  // pick a generator that moves some grid point
  int gen = -1;
  for (int g = 0; g < rank && gen < 0; ++g)
    for (int i = 0; i < 64; ++i) {
      double x = i / 64.0;
      if (std::abs(act.generator(g)(x) - x) > tol) {
        gen = g;
        break;
      }
    }
  if (gen < 0) return detail::orbit_closure(act, 0.0, N_max, tol);
  const CircleHomeo& G = act.generator(gen);
  std::vector<double> xs(grid + 1), ys(grid + 1);
  for (int i = 0; i <= grid; ++i) xs[i] = ys[i] = static_cast<double>(i) / grid;
  std::vector<double> tried;
  int attempts = 0;
  auto try_candidate = [&](double c) -> std::optional<FiniteOrbit> {
    for (double t : tried)
      if (circle_distance(t, c) <= 1e-7) return std::nullopt;
    tried.push_back(c);
    ++attempts;
    return detail::orbit_closure(act, c, N_max, tol);
  };
  for (int q = 1; q <= N_max && attempts < 4 * N_max; ++q) {
    for (int i = 0; i <= grid; ++i) ys[i] = G(ys[i]);
    auto D = [&](int i) { return ys[i] - xs[i]; };
    double lo = D(0), hi = D(0);
    for (int i = 0; i <= grid; ++i) lo = std::min(lo, D(i)), hi = std::max(hi, D(i));
    for (long p = static_cast<long>(std::floor(lo)); p <= static_cast<long>(std::ceil(hi)); ++p) {
      for (int i = 0; i < grid && attempts < 4 * N_max; ++i) {
        double d0 = D(i) - p, d1 = D(i + 1) - p;
        double c;
        if (std::abs(d0) <= tol) c = xs[i];
        else if ((d0 < 0) != (d1 < 0)) {
          double a = xs[i], b = xs[i + 1];
          auto f = [&](double x) {
            double y = x;
            for (int k = 0; k < q; ++k) y = G(y);
            return y - x - static_cast<double>(p);
          };
          double fa = f(a);
          for (int it = 0; it < 80; ++it) {
            double m = 0.5 * (a + b);
            double fm = f(m);
            if ((fm < 0) == (fa < 0)) a = m, fa = fm;
            else b = m;
          }
          c = 0.5 * (a + b);
        } else
          continue;
        if (auto o = try_candidate(c)) return o;
      }
    }
  }
  return std::nullopt;
}

struct ExponentReport {
  FiniteOrbit orbit;
  int N = 0;
  bool exact = false;
  long pairs = 0;
  long failures = 0;
  std::vector<long> beta_generators;  // beta~ of each generator
  bool verified() const { return failures == 0 && pairs > 0; }
};

// On a radius-2 ball, N eu^{p_0}(a,b) = beta~(a) + beta~(b) - beta~(ab), where
// rho(g) p_0 = p_{beta~(g)}. Floating values are snapped to the lifted orbit.
inline std::optional<ExponentReport> finite_orbit_and_exponent(const CircleAction& act, int N_max = 64,
                                                               double tol = 1e-9) {
  auto orb = find_finite_orbit(act, N_max, tol);
  if (!orb) return std::nullopt;
  const auto& pres = act.presentation();
  ExponentReport rep;
  rep.orbit = *orb;
  rep.N = orb->size();
  rep.exact = orb->exact.has_value();
  const long N = rep.N;
  auto fdiv = [N](long j) { return j >= 0 ? j / N : -((-j + N - 1) / N); };
  auto idx = [&](const Word& w, std::optional<long> start) -> long {
    // lifted index of rho~(w) applied to the lifted orbit point with index start (default p_0)
    long s = start.value_or(0);
    std::optional<long> r;
    if (rep.exact) {
      const auto& P = *orb->exact;
      Rational x = P[s - fdiv(s) * N] + fdiv(s);
      auto v = act.apply_exact(w, x);
      if (v) r = orb->lifted_index(*v);
    } else {
      double x = orb->points[s - fdiv(s) * N] + static_cast<double>(fdiv(s));
      r = orb->lifted_index(act.apply(w, x), tol);
    }
    if (!r) throw InconclusiveAtScale("orbit point left the orbit under " + pres.format(w));
    return *r;
  };
  auto norm = [&](long j) { return ((j % N) + N) % N; };
  for (int g = 0; g < pres.rank(); ++g) rep.beta_generators.push_back(norm(idx(Word{{g, 1}}, std::nullopt)));
  auto ball = enumerate_ball(pres, 2);
  for (auto& u : ball)
    for (auto& v : ball) {
      long iu = idx(u, std::nullopt), iv = idx(v, std::nullopt);
      long iuv = idx(u, iv);  // rho~(u) rho~(v) p_0
      long eu = fdiv(iuv) - fdiv(iu) - fdiv(iv);
      long buv = norm(idx(canonical_form(pres.multiply(u, v), pres), std::nullopt));
      ++rep.pairs;
      if (N * eu != norm(iu) + norm(iv) - buv) ++rep.failures;
    }
  return rep;
}

// ---- limit sets ----------------------------------------------------------------------

struct LimitSetConfig {
  int radius = 8;
  long n_iter = 2000;
  double eps_gap = 1e-3;
  std::vector<double> seeds{0.1234567, 0.5403023, 0.8414709};
  int max_finite = 64;
  size_t max_words = 200000;
};

struct LimitSetReport {
  enum class Verdict { Whole, CantorLike, Finite };
  Verdict verdict = Verdict::Whole;
  std::vector<double> cloud;  // deep cloud, sorted in [0,1)
  std::vector<Arc> gaps;      // complementary arcs longer than eps_gap, sorted by l
  double max_gap = 0;
  int radius = 0;
  std::optional<FiniteOrbit> orbit;

  std::string verdict_name() const {
    switch (verdict) {
      case Verdict::Whole: return "whole";
      case Verdict::CantorLike: return "cantor-like";
      case Verdict::Finite: return "finite";
    }
    return "";
  }
  // "gap  l r" lines sorted by l, r = l + length (may exceed 1 for the wrapping gap).
  std::string gap_text() const {
    std::ostringstream os;
    os.precision(12);
    for (auto& g : gaps) os << "gap  " << g.l << " " << g.r() << "\n";
    return os.str();
  }
};

namespace detail {

inline std::vector<Arc> cloud_gaps(std::vector<double> pts, double eps, double* max_gap) {
  std::vector<Arc> out;
  *max_gap = 0;
  if (pts.empty()) {
    *max_gap = 1;
    return out;
  }
  for (auto& p : pts) p = frac01(p);
  std::sort(pts.begin(), pts.end());
  for (size_t i = 0; i < pts.size(); ++i) {
    double a = pts[i], b = i + 1 < pts.size() ? pts[i + 1] : pts[0] + 1;
    *max_gap = std::max(*max_gap, b - a);
    if (b - a > eps) out.push_back({a, b - a});
  }
  std::sort(out.begin(), out.end(), [](const Arc& x, const Arc& y) { return x.l < y.l; });
  return out;
}

// Points of a sorted cloud that are pairwise farther apart than tol.
inline long distinct_count(const std::vector<double>& sorted, double tol = 1e-9) {
  long n = 0;
  for (size_t i = 0; i < sorted.size(); ++i)
    if (i == 0 || sorted[i] - sorted[i - 1] > tol) ++n;
  if (n > 1 && sorted.back() - sorted.front() > 1 - tol) --n;
  return n;
}

struct Clouds {
  std::vector<std::vector<double>> full;  // per seed
  std::vector<double> deep;               // words of length >= R/2 and long powers, all seeds
};

inline Clouds orbit_clouds(const CircleAction& act, const LimitSetConfig& cfg, int R) {
  const auto& pres = act.presentation();
  auto ball = enumerate_ball(pres, R);
  Clouds c;
  const long half = (R + 1) / 2;
  for (double s : cfg.seeds) {
    std::vector<double> full;
    for (auto& w : ball) {
      double y = frac01(act.apply(w, s));
      full.push_back(y);
      if (pres.length(w) >= half) c.deep.push_back(y);
    }
    for (int g = 0; g < pres.rank(); ++g) {
      const CircleHomeo& G = act.generator(g);
      double up = s, down = s;
      for (long k = 1; k <= cfg.n_iter; ++k) {
        up = frac01(G(up));
        down = frac01(G.inverse_lift(down));
        full.push_back(up);
        full.push_back(down);
        if (2 * k >= cfg.n_iter) {
          c.deep.push_back(up);
          c.deep.push_back(down);
        }
      }
    }
    c.full.push_back(std::move(full));
  }
  return c;
}

inline int affordable_radius(const Presentation& p, int R, size_t max_words) {
  while (R > 1) {
    bool ok = true;
    if (p.kind() == Presentation::Kind::Free) ok = free_ball_size(p.rank(), R) <= static_cast<double>(max_words);
    if (ok) break;
    --R;
  }
  return R;
}

}  // namespace detail

// Orbit-cloud approximation of the limit set with a trichotomy verdict.
inline LimitSetReport limit_set_approx(const CircleAction& act, const LimitSetConfig& cfg = {}) {
  if (cfg.seeds.empty()) throw ValidationError("no seeds");
  LimitSetReport rep;
  if (auto orb = find_finite_orbit(act, cfg.max_finite)) {
    rep.verdict = LimitSetReport::Verdict::Finite;
    rep.cloud = orb->points;
    for (auto& p : rep.cloud) p = frac01(p);
    std::sort(rep.cloud.begin(), rep.cloud.end());
    rep.gaps = detail::cloud_gaps(rep.cloud, cfg.eps_gap, &rep.max_gap);
    rep.orbit = orb;
    return rep;
  }
  int R = detail::affordable_radius(act.presentation(), cfg.radius, cfg.max_words);
  rep.radius = R;
  auto clouds = detail::orbit_clouds(act, cfg, R);
  bool whole = true;
  for (auto& f : clouds.full) {
    double mg;
    detail::cloud_gaps(f, cfg.eps_gap, &mg);
    whole = whole && mg <= cfg.eps_gap;
  }
  rep.cloud = clouds.deep;
  for (auto& p : rep.cloud) p = frac01(p);
  std::sort(rep.cloud.begin(), rep.cloud.end());
  rep.gaps = detail::cloud_gaps(rep.cloud, cfg.eps_gap, &rep.max_gap);
  if (whole) {
    rep.verdict = LimitSetReport::Verdict::Whole;
    rep.gaps.clear();
    return rep;
  }
  // gaps of the deep cloud must persist from radius R-2 to R
  double mg_shallow = 1;
  if (R >= 3) {
    auto sh = detail::orbit_clouds(act, cfg, R - 2);
    detail::cloud_gaps(sh.deep, cfg.eps_gap, &mg_shallow);
  }
  long distinct = detail::distinct_count(rep.cloud);
  if (rep.max_gap > cfg.eps_gap && rep.max_gap >= 0.5 * mg_shallow && distinct > cfg.max_finite) {
    rep.verdict = LimitSetReport::Verdict::CantorLike;
    return rep;
  }
  throw InconclusiveAtScale("limit set undecided at radius " + std::to_string(R) + ": max gap " +
                            scalar_str(rep.max_gap) + ", " + std::to_string(distinct) + " distinct points");
}

// ---- symbolic staircase of a certified Schottky group --------------------------------

// h~(x) = k + mu[b, x] for x in [b+k, b+k+1), mu the symmetric measure on the
// limit set giving each reduced cylinder of length m mass 1/(2n (2n-1)^(m-1)).
// Points are located by descending through the arcs of the certificate.
class SchottkyStaircase {
 public:
  explicit SchottkyStaircase(SchottkyCertificate cert, double stop = 1e-13) : c_(std::move(cert)), stop_(stop) {
    n2_ = 2 * c_.rank();
    const auto& A = c_.arcs;
    // base point: middle of the largest level-1 gap
    auto comp = complement(A);
    const Arc* best = &comp[0];
    for (auto& g : comp)
      if (g.len > best->len) best = &g;
    b_ = frac01(best->mid());
    for (int z = 0; z < n2_; ++z) order1_.push_back(z);
    std::sort(order1_.begin(), order1_.end(), [&](int x, int y) { return frac01(A[x].l - b_) < frac01(A[y].l - b_); });
    inv_.resize(n2_);
    child_.resize(n2_);
    qstar_.resize(n2_);
    for (int z = 0; z < n2_; ++z) {
      inv_[z] = c_.letter_matrix(SchottkyCertificate::inv(z));
      int iz = SchottkyCertificate::inv(z);
      for (int w = 0; w < n2_; ++w)
        if (w != iz) child_[z].push_back(w);
      double r = A[iz].r();
      std::sort(child_[z].begin(), child_[z].end(),
                [&](int x, int y) { return frac01(A[x].l - r) < frac01(A[y].l - r); });
      qstar_[z] = frac01(boundary_lift(inv_[z], A[iz].mid()));
    }
  }

  const SchottkyCertificate& certificate() const { return c_; }
  double base() const { return b_; }
  int letters() const { return n2_; }

  double operator()(double x) const {
    double k = std::floor(x - b_);
    double t = x - k;
    return k + mass(t);
  }

  // Level-1 gap midpoints in cyclic order from b.
  std::vector<double> gap_points() const {
    std::vector<double> out;
    for (auto& g : complement(c_.arcs)) out.push_back(frac01(g.mid()));
    return out;
  }

 private:
  double mass(double x) const {
    const auto& A = c_.arcs;
    double d = x - b_;
    for (int i = 0; i < n2_; ++i) {
      int z = order1_[i];
      double s = frac01(A[z].l - b_), e = s + A[z].len;
      if (d < s) return static_cast<double>(i) / n2_;
      if (d <= e) return descend(z, x, static_cast<double>(i) / n2_, 1.0 / n2_);
    }
    return 1.0;
  }
  double descend(int z, double x, double acc, double scale) const {
    const auto& A = c_.arcs;
    const double branch = static_cast<double>(n2_ - 1);
    for (;;) {
      if (scale < stop_) return acc + 0.5 * scale;
      double y = frac01(boundary_lift(inv_[z], x));
      int iz = SchottkyCertificate::inv(z);
      double fy = frac01(y - A[iz].l);
      if (fy <= A[iz].len) return fy < frac01(qstar_[z] - A[iz].l) ? acc + scale : acc;
      double pos = frac01(y - A[iz].r());
      const auto& ch = child_[z];
      int next = -1;
      for (size_t j = 0; j < ch.size(); ++j) {
        double s = frac01(A[ch[j]].l - A[iz].r()), e = s + A[ch[j]].len;
        if (pos < s) return acc + static_cast<double>(j) * scale / branch;
        if (pos <= e) {
          acc += static_cast<double>(j) * scale / branch;
          next = ch[j];
          break;
        }
      }
      if (next < 0) return acc + scale;
      scale /= branch;
      z = next;
      x = y;
    }
  }

  SchottkyCertificate c_;
  double stop_;
  int n2_ = 0;
  double b_ = 0;
  std::vector<int> order1_;
  std::vector<Mat2<double>> inv_;
  std::vector<std::vector<int>> child_;
  std::vector<double> qstar_;
};

// Exact piecewise linear minimal model: rhobar(g) with h~ G = rhobar(g) h~.
// Knots sit at h-values of level-1 gaps and of their images under g^-1, all
// multiples of 1/(2n(2n-1)).
inline CircleAction schottky_minimal_model(const SchottkyStaircase& h, const CircleAction& act) {
  const int n = act.presentation().rank();
  const long den = static_cast<long>(2 * n) * (2 * n - 1);
  auto snap = [&](double v) {
    double m = v * static_cast<double>(den);
    double r = std::round(m);
    if (std::abs(m - r) > 1e-6) throw CertificationFailedAtResolution("staircase value " + scalar_str(v) + " off the lattice");
    return rational(static_cast<long>(r), den);
  };
  std::vector<CircleHomeo> out;
  for (int g = 0; g < n; ++g) {
    Mat2<double> ginv = h.certificate().letter_matrix(2 * g + 1);
    std::vector<double> pts;
    for (double m : h.gap_points()) {
      pts.push_back(m);
      pts.push_back(frac01(boundary_lift(ginv, m)));
    }
    std::map<Rational, Rational> knots;
    for (double p : pts) {
      double x = h.base() + frac01(p - h.base());
      Rational u = snap(h(x)), v = snap(h(act.generator(g)(x)));
      auto [it, fresh] = knots.emplace(u, v);
      if (!fresh && it->second != v) throw CertificationFailedAtResolution("inconsistent staircase knots");
    }
    std::vector<Rational> xs, ys;
    for (auto& [u, v] : knots) xs.push_back(u), ys.push_back(v);
    xs.push_back(xs[0] + 1);
    ys.push_back(ys[0] + 1);
    out.push_back(piecewise_linear(xs, ys, "rhobar(" + act.presentation().name(g) + ")"));
  }
  return CircleAction(act.presentation(), out);
}

// ---- minimalization ------------------------------------------------------------------

struct MinimalizeConfig {
  LimitSetConfig limit;
  int grid = 10000;
  double tol = 1e-6;
  int N_max = 64;
};

enum class MinimalCase { FiniteOrbit, Cantor, Minimal };

inline std::string case_name(MinimalCase c) {
  switch (c) {
    case MinimalCase::FiniteOrbit: return "finite-orbit";
    case MinimalCase::Cantor: return "cantor";
    case MinimalCase::Minimal: return "minimal";
  }
  return "";
}

struct Minimalization {
  MinimalCase tag = MinimalCase::Minimal;
  CircleAction reduced;
  MonotoneMap h;
  double residual = 0;
  bool certified = false;  // staircase from a Schottky certificate
  std::optional<SchottkyCertificate> certificate;
  std::optional<FiniteOrbit> orbit;
  LimitSetReport limit;
};

// Case (i): h steps through the orbit and rhobar(g) = T(h~ G(p_0)).
inline Minimalization minimalize_finite(const CircleAction& act, const FiniteOrbit& orb, const MinimalizeConfig& cfg) {
  Minimalization m;
  m.tag = MinimalCase::FiniteOrbit;
  m.orbit = orb;
  const int N = orb.size();
  std::vector<double> vals;
  for (int i = 0; i < N; ++i) vals.push_back(static_cast<double>(i) / N);
  m.h = MonotoneMap::step(orb.points, vals);
  std::vector<CircleHomeo> rots;
  for (int g = 0; g < act.presentation().rank(); ++g) {
    long j;
    if (orb.exact) {
      auto v = act.generator(g).exact_lift((*orb.exact)[0]);
      j = *orb.lifted_index(*v);
    } else {
      auto v = orb.lifted_index(act.generator(g)(orb.points[0]));
      if (!v) throw InconclusiveAtScale("orbit not invariant at scale");
      j = *v;
    }
    long k = j >= 0 ? j / N : -((-j + N - 1) / N);
    rots.push_back(CircleHomeo::rotation(rational(j - k * N, N) + k));
  }
  m.reduced = CircleAction(act.presentation(), rots);
  m.residual = semiconj_residual(m.h, act, m.reduced, cfg.grid);
  return m;
}

inline Minimalization minimalize(const CircleAction& act, const MinimalizeConfig& cfg = {}) {
  if (auto orb = find_finite_orbit(act, cfg.N_max)) return minimalize_finite(act, *orb, cfg);
  LimitSetReport ls = limit_set_approx(act, cfg.limit);
  Minimalization m;
  m.limit = ls;
  if (ls.verdict == LimitSetReport::Verdict::Whole) {
    m.tag = MinimalCase::Minimal;
    m.h = MonotoneMap::identity();
    m.reduced = act;
    return m;
  }
  m.tag = MinimalCase::Cantor;
  // certified route: a free Schottky action by Moebius lifts
  std::vector<MoebiusR> gens;
  bool moebius = act.presentation().kind() == Presentation::Kind::Free;
  for (auto& g : act.generators()) {
    auto mm = g.matrix();
    if (!mm) moebius = false;
    else gens.push_back(MoebiusR::normalized(*mm));
  }
  if (moebius) {
    try {
      auto cert = certify_schottky(gens);
      auto stair = std::make_shared<SchottkyStaircase>(cert);
      m.h = MonotoneMap::custom([stair](double x) { return (*stair)(x); }, {}, {}, true, "schottky-staircase");
      m.reduced = schottky_minimal_model(*stair, act);
      m.certified = true;
      m.certificate = cert;
    } catch (const CertificationFailedAtResolution&) {
      moebius = false;
    }
  }
  if (!moebius) {
    // uncertified fallback: collapse the observed gaps
    m.h = MonotoneMap::from_gaps(ls.gaps);
    std::vector<CircleHomeo> bar;
    auto h = m.h;
    for (int g = 0; g < act.presentation().rank(); ++g) {
      CircleHomeo G = act.generator(g);
      auto hinv = [h](double y) {
        double lo = y - 2, hi = y + 2;
        for (int i = 0; i < 200; ++i) {
          double mid = 0.5 * (lo + hi);
          if (h(mid) < y) lo = mid;
          else hi = mid;
        }
        return hi;
      };
      bar.push_back(CircleHomeo::from_lift([h, G, hinv](double y) { return h(G(hinv(y))); }, {}, "collapsed"));
    }
    m.reduced = CircleAction(act.presentation(), bar);
  }
  m.residual = semiconj_residual(m.h, act, m.reduced, cfg.grid);
  if (m.residual > cfg.tol)
    throw InconclusiveAtScale("semi-conjugacy residual " + scalar_str(m.residual) + " exceeds " + scalar_str(cfg.tol));
  return m;
}

// ---- common blow-up --------------------------------------------------------------------

struct Blowup {
  CircleAction rho;
  MonotoneMap h0, h1;
  double residual0 = 0, residual1 = 0;
};

// With f^-(y) = (y + h(y-))/2 and f^+(y) = (y + h(y+))/2, h0 inverts f,
// h1(x) = 2x - h0(x), and rho(a)(x) = (rho0(a) h0(x) + rho1(a) h1(x))/2.
inline Blowup common_blowup(const MonotoneMap& h, const CircleAction& rho0, const CircleAction& rho1,
                            double tol = 1e-6, int grid = 10000) {
  double pre = semiconj_residual(h, rho0, rho1, grid);
  if (pre > tol) throw NotSemiConjugateAtScale("h rho0 - rho1 h residual " + scalar_str(pre));
  auto h0f = [h](double x) {
    auto fplus = [&](double y) { return 0.5 * (y + h.right(y)); };
    double lo = x - 1, hi = x + 1;
    while (fplus(lo) >= x) lo -= 1;
    while (fplus(hi) < x) hi += 1;
    for (int i = 0; i < 200 && hi - lo > 0; ++i) {
      double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      if (fplus(mid) < x) lo = mid;
      else hi = mid;
    }
    return hi;
  };
  Blowup b;
  b.h0 = MonotoneMap::custom(h0f, {}, {}, true, "h0");
  b.h1 = MonotoneMap::custom([h0f](double x) { return 2 * x - h0f(x); }, {}, {}, true, "h1");
  std::vector<CircleHomeo> gens;
  for (int g = 0; g < rho0.presentation().rank(); ++g) {
    CircleHomeo A0 = rho0.generator(g), A1 = rho1.generator(g);
    CircleHomeo B0 = A0.inverse(), B1 = A1.inverse();
    gens.push_back(CircleHomeo::from_lift(
        [A0, A1, h0f](double x) {
          double y = h0f(x);
          return 0.5 * (A0(y) + A1(2 * x - y));
        },
        [B0, B1, h0f](double x) {
          double y = h0f(x);
          return 0.5 * (B0(y) + B1(2 * x - y));
        },
        "blowup(" + rho0.presentation().name(g) + ")"));
  }
  b.rho = CircleAction(rho0.presentation(), gens);
  b.residual0 = semiconj_residual(b.h0, b.rho, rho0, grid);
  b.residual1 = semiconj_residual(b.h1, b.rho, rho1, grid);
  return b;
}

}  // namespace flexcircle
