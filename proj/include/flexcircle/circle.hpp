#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "flexcircle/errors.hpp"
#include "flexcircle/moebius.hpp"
#include "flexcircle/representation.hpp"
#include "flexcircle/scalar.hpp"
#include "flexcircle/words.hpp"

namespace flexcircle {

// An element of Homeo_Z(R): a lift F of a circle homeomorphism with
// F(x+1) = F(x)+1. Different lifts of the same circle map are different values.
class CircleHomeo {
 public:
  enum class Kind { Rotation, Moebius, Piecewise, Custom, Composite, Inverse, Shift };

  struct Impl {
    virtual ~Impl() = default;
    virtual double lift(double x) const = 0;
    virtual double inverse_lift(double y) const = 0;
    virtual std::optional<Rational> exact_lift(const Rational&) const { return std::nullopt; }
    virtual std::optional<double> translation() const { return std::nullopt; }
    virtual Kind kind() const = 0;
    virtual std::string describe() const = 0;
  };

  CircleHomeo() : CircleHomeo(rotation(Rational(0))) {}
  explicit CircleHomeo(std::shared_ptr<const Impl> p) : p_(std::move(p)) {}

  static CircleHomeo rotation(double alpha);
  static CircleHomeo rotation(const Rational& alpha);
  static CircleHomeo moebius(const MoebiusR& g);
  template <class T>
  static CircleHomeo moebius(const Moebius<T>& g) { return moebius(g.to_real()); }
  // Lift through a matrix representative (either sign); used for chosen lifts.
  static CircleHomeo moebius_matrix(const Mat2<double>& m);
  // inverse may be empty: it is then solved by bisection.
  static CircleHomeo from_lift(std::function<double(double)> lift, std::function<double(double)> inverse = {},
                               std::string name = "custom", Kind kind = Kind::Custom);
  static CircleHomeo identity() { return rotation(Rational(0)); }

  double operator()(double x) const { return p_->lift(x); }
  double lift(double x) const { return p_->lift(x); }
  double inverse_lift(double y) const { return p_->inverse_lift(y); }
  double act(double theta) const { return frac01(p_->lift(theta)); }
  std::optional<Rational> exact_lift(const Rational& x) const { return p_->exact_lift(x); }
  bool has_exact() const { return p_->exact_lift(Rational(0)).has_value(); }
  std::optional<double> translation() const { return p_->translation(); }
  Kind kind() const { return p_->kind(); }
  std::string describe() const { return p_->describe(); }
  // Matrix rep when this lift is a plain Moebius boundary lift.
  std::optional<Mat2<double>> matrix() const;

  CircleHomeo inverse() const;
  CircleHomeo shifted(long n) const;  // the lift F + n
  CircleHomeo pow(long n) const;
  friend CircleHomeo operator*(const CircleHomeo& f, const CircleHomeo& g);  // f after g

 private:
  std::shared_ptr<const Impl> p_;
};

namespace detail {

// Solves F(x) = y for an increasing degree-one lift by bracketing and bisection.
inline double solve_lift(const std::function<double(double)>& F, double y) {
  double lo = y - 1, hi = y + 1;
  while (F(lo) > y) lo -= 1;
  while (F(hi) < y) hi += 1;
  for (int i = 0; i < 200 && hi - lo > 0; ++i) {
    double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (F(mid) < y) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

struct RotationImpl final : CircleHomeo::Impl {
  double alpha;
  std::optional<Rational> exact;
  double lift(double x) const override { return x + alpha; }
  double inverse_lift(double y) const override { return y - alpha; }
  std::optional<Rational> exact_lift(const Rational& x) const override {
    if (!exact) return std::nullopt;
    return Rational(x + *exact);
  }
  std::optional<double> translation() const override { return alpha; }
  CircleHomeo::Kind kind() const override { return CircleHomeo::Kind::Rotation; }
  std::string describe() const override {
    return "T(" + (exact ? exact->get_str() : scalar_str(alpha)) + ")";
  }
};

struct MoebiusImpl final : CircleHomeo::Impl {
  Mat2<double> m, minv;
  double lift(double x) const override { return boundary_lift(m, x); }
  double inverse_lift(double y) const override { return boundary_lift(minv, y); }
  CircleHomeo::Kind kind() const override { return CircleHomeo::Kind::Moebius; }
  std::string describe() const override {
    std::ostringstream os;
    os.precision(17);
    os << "moebius[[" << m.a << "," << m.b << "],[" << m.c << "," << m.d << "]]";
    return os.str();
  }
};

struct CustomImpl final : CircleHomeo::Impl {
  std::function<double(double)> f, finv;
  std::string name;
  CircleHomeo::Kind k;
  double lift(double x) const override { return f(x); }
  double inverse_lift(double y) const override { return finv ? finv(y) : solve_lift(f, y); }
  CircleHomeo::Kind kind() const override { return k; }
  std::string describe() const override { return name; }
};

struct CompositeImpl final : CircleHomeo::Impl {
  std::vector<CircleHomeo> factors;  // applied right to left
  double lift(double x) const override {
    for (auto it = factors.rbegin(); it != factors.rend(); ++it) x = it->lift(x);
    return x;
  }
  double inverse_lift(double y) const override {
    for (auto& f : factors) y = f.inverse_lift(y);
    return y;
  }
  std::optional<Rational> exact_lift(const Rational& x0) const override {
    Rational x = x0;
    for (auto it = factors.rbegin(); it != factors.rend(); ++it) {
      auto v = it->exact_lift(x);
      if (!v) return std::nullopt;
      x = *v;
    }
    return x;
  }
  std::optional<double> translation() const override {
    double s = 0;
    for (auto& f : factors) {
      auto t = f.translation();
      if (!t) return std::nullopt;
      s += *t;
    }
    return s;
  }
  CircleHomeo::Kind kind() const override { return CircleHomeo::Kind::Composite; }
  std::string describe() const override {
    std::string s;
    for (auto& f : factors) s += (s.empty() ? "" : " o ") + f.describe();
    return s.empty() ? "id" : s;
  }
};

struct InverseImpl final : CircleHomeo::Impl {
  CircleHomeo base;
  explicit InverseImpl(CircleHomeo b) : base(std::move(b)) {}
  double lift(double x) const override { return base.inverse_lift(x); }
  double inverse_lift(double y) const override { return base.lift(y); }
  std::optional<Rational> exact_lift(const Rational& x) const override {
    auto t = base.translation();
    auto e = base.exact_lift(Rational(0));
    if (!t || !e) return std::nullopt;  // exact inverses only for translations
    return Rational(x - *e);
  }
  std::optional<double> translation() const override {
    auto t = base.translation();
    if (!t) return std::nullopt;
    return -*t;
  }
  CircleHomeo::Kind kind() const override { return CircleHomeo::Kind::Inverse; }
  std::string describe() const override { return "(" + base.describe() + ")^-1"; }
};

struct ShiftImpl final : CircleHomeo::Impl {
  CircleHomeo base;
  long n;
  ShiftImpl(CircleHomeo b, long k) : base(std::move(b)), n(k) {}
  double lift(double x) const override { return base.lift(x) + static_cast<double>(n); }
  double inverse_lift(double y) const override { return base.inverse_lift(y - static_cast<double>(n)); }
  std::optional<Rational> exact_lift(const Rational& x) const override {
    auto v = base.exact_lift(x);
    if (!v) return std::nullopt;
    return Rational(*v + n);
  }
  std::optional<double> translation() const override {
    auto t = base.translation();
    if (!t) return std::nullopt;
    return *t + static_cast<double>(n);
  }
  CircleHomeo::Kind kind() const override { return CircleHomeo::Kind::Shift; }
  std::string describe() const override { return base.describe() + (n >= 0 ? "+" : "") + std::to_string(n); }
};

}  // namespace detail

inline CircleHomeo CircleHomeo::rotation(double alpha) {
  auto p = std::make_shared<detail::RotationImpl>();
  p->alpha = alpha;
  return CircleHomeo(p);
}
inline CircleHomeo CircleHomeo::rotation(const Rational& alpha) {
  auto p = std::make_shared<detail::RotationImpl>();
  p->alpha = alpha.get_d();
  p->exact = alpha;
  return CircleHomeo(p);
}
inline CircleHomeo CircleHomeo::moebius(const MoebiusR& g) { return moebius_matrix(lift_representative(g)); }
inline CircleHomeo CircleHomeo::moebius_matrix(const Mat2<double>& m) {
  auto p = std::make_shared<detail::MoebiusImpl>();
  p->m = m;
  p->minv = m.adjugate();
  return CircleHomeo(p);
}
inline CircleHomeo CircleHomeo::from_lift(std::function<double(double)> lift, std::function<double(double)> inverse,
                                          std::string name, Kind kind) {
  auto p = std::make_shared<detail::CustomImpl>();
  p->f = std::move(lift);
  p->finv = std::move(inverse);
  p->name = std::move(name);
  p->k = kind;
  return CircleHomeo(p);
}
inline std::optional<Mat2<double>> CircleHomeo::matrix() const {
  if (auto* m = dynamic_cast<const detail::MoebiusImpl*>(p_.get())) return m->m;
  return std::nullopt;
}
inline CircleHomeo CircleHomeo::inverse() const {
  if (auto* r = dynamic_cast<const detail::RotationImpl*>(p_.get())) {
    if (r->exact) return rotation(Rational(-*r->exact));
    return rotation(-r->alpha);
  }
  if (auto* m = dynamic_cast<const detail::MoebiusImpl*>(p_.get())) return moebius_matrix(m->minv);
  if (auto* i = dynamic_cast<const detail::InverseImpl*>(p_.get())) return i->base;
  if (auto* c = dynamic_cast<const detail::CompositeImpl*>(p_.get())) {
    auto q = std::make_shared<detail::CompositeImpl>();
    for (auto it = c->factors.rbegin(); it != c->factors.rend(); ++it) q->factors.push_back(it->inverse());
    return CircleHomeo(q);
  }
  return CircleHomeo(std::make_shared<detail::InverseImpl>(*this));
}
inline CircleHomeo CircleHomeo::shifted(long n) const {
  if (n == 0) return *this;
  if (auto* r = dynamic_cast<const detail::RotationImpl*>(p_.get())) {
    if (r->exact) return rotation(Rational(*r->exact + n));
    return rotation(r->alpha + static_cast<double>(n));
  }
  return CircleHomeo(std::make_shared<detail::ShiftImpl>(*this, n));
}
inline CircleHomeo operator*(const CircleHomeo& f, const CircleHomeo& g) {
  auto q = std::make_shared<detail::CompositeImpl>();
  for (const CircleHomeo* h : {&f, &g}) {
    if (auto* c = dynamic_cast<const detail::CompositeImpl*>(h->p_.get()))
      q->factors.insert(q->factors.end(), c->factors.begin(), c->factors.end());
    else
      q->factors.push_back(*h);
  }
  return CircleHomeo(q);
}
inline CircleHomeo CircleHomeo::pow(long n) const {
  if (n == 0) return identity();
  CircleHomeo base = n < 0 ? inverse() : *this;
  auto q = std::make_shared<detail::CompositeImpl>();
  for (long i = 0; i < std::labs(n); ++i) q->factors.push_back(base);
  return CircleHomeo(q);
}

// Largest deviations from F(x+1) = F(x)+1 and F(F^-1(x)) = x on a grid.
struct LiftCheck {
  double periodicity = 0, inverse = 0;
  bool monotone = true;
};
inline LiftCheck check_lift(const CircleHomeo& f, int grid = 1000) {
  LiftCheck c;
  double prev = f(0.0);
  for (int i = 0; i <= grid; ++i) {
    double x = static_cast<double>(i) / grid;
    double y = f(x);
    c.periodicity = std::max(c.periodicity, std::abs(f(x + 1) - y - 1));
    c.inverse = std::max(c.inverse, std::abs(f.inverse_lift(y) - x));
    if (i > 0 && y < prev) c.monotone = false;
    prev = y;
  }
  return c;
}

inline double circle_distance(double x, double y) {
  double d = std::abs(frac01(x) - frac01(y));
  return std::min(d, 1.0 - d);
}

// ---- translation and rotation numbers --------------------------------------------

struct Estimate {
  double value = 0;
  double err = 0;
};

// F^n(0)/n with |error| <= 1/n. The integer part is carried separately.
inline Estimate translation_number(const CircleHomeo& F, long n) {
  if (n < 1) throw ValidationError("iteration count must be positive");
  if (auto t = F.translation()) return {*t, 1.0 / static_cast<double>(n)};
  double r = 0;
  long k = 0;
  for (long i = 0; i < n; ++i) {
    double y = F(r);
    double fl = std::floor(y);
    k += static_cast<long>(fl);
    r = y - fl;
  }
  return {(static_cast<double>(k) + r) / static_cast<double>(n), 1.0 / static_cast<double>(n)};
}

inline Estimate rotation_number(const CircleHomeo& f, long n) {
  Estimate t = translation_number(f, n);
  return {frac01(t.value), t.err};
}

// ---- sections and the Euler cocycle ------------------------------------------------

inline constexpr double kDefaultLatticeBand = 1e-12;

namespace detail {
// floor(v) refusing values that sit within band of an integer without being one.
inline long safe_floor(double v, double band) {
  double r = std::round(v);
  if (v != r && std::abs(v - r) < band)
    throw BasepointDegenerate("lift value " + scalar_str(v) + " within " + scalar_str(band) + " of an integer");
  return static_cast<long>(std::floor(v));
}
inline long rational_floor(const Rational& q) {
  mpz_class f;
  mpz_fdiv_q(f.get_mpz_t(), q.get_num_mpz_t(), q.get_den_mpz_t());
  return f.get_si();
}
}  // namespace detail

// s^x(f): the lift of f with s^x(f)(x) in [x, x+1).
inline CircleHomeo section(const CircleHomeo& f, double x = 0.0, double band = kDefaultLatticeBand) {
  if (f.has_exact()) {
    Rational xr(x);
    return f.shifted(-detail::rational_floor(*f.exact_lift(xr) - xr));
  }
  return f.shifted(-detail::safe_floor(f(x) - x, band));
}

// eu^x(f,g) from s(f)s(g) = T(eu) s(fg); exact when both lifts are exact.
inline int euler_cocycle(const CircleHomeo& f, const CircleHomeo& g, double x = 0.0,
                         double band = kDefaultLatticeBand) {
  if (f.has_exact() && g.has_exact()) {
    Rational xr(x);
    Rational gx = *g.exact_lift(xr), fx = *f.exact_lift(xr), fgx = *f.exact_lift(gx);
    return static_cast<int>(detail::rational_floor(fgx - xr) - detail::rational_floor(fx - xr) -
                            detail::rational_floor(gx - xr));
  }
  double gx = g(x), fx = f(x), fgx = f(gx);
  return static_cast<int>(detail::safe_floor(fgx - x, band) - detail::safe_floor(fx - x, band) -
                          detail::safe_floor(gx - x, band));
}
inline int euler_cocycle_at(const CircleHomeo& f, const CircleHomeo& g, const Rational& x) {
  if (!(f.has_exact() && g.has_exact())) throw ExactModeRequired("rational basepoint needs exact lifts");
  Rational gx = *g.exact_lift(x), fx = *f.exact_lift(x), fgx = *f.exact_lift(gx);
  return static_cast<int>(detail::rational_floor(fgx - x) - detail::rational_floor(fx - x) -
                          detail::rational_floor(gx - x));
}

// (1/n) sum_{k=1..n} eu^0(g, g^k) mod 1. With r_k = frac(G^k(0)) the k-th term
// is floor(G(r_k)) - floor(G(0)), so the sum is computed along one orbit.
inline Estimate rot_via_euler(const CircleHomeo& g, long n, double band = kDefaultLatticeBand) {
  if (n < 1) throw ValidationError("iteration count must be positive");
  long sum = 0;
  if (g.has_exact()) {
    Rational r = 0;
    long g0 = detail::rational_floor(*g.exact_lift(Rational(0)));
    auto step = [&](const Rational& x) { return *g.exact_lift(x); };
    Rational y = step(r);
    r = y - detail::rational_floor(y);  // r_1
    for (long k = 1; k <= n; ++k) {
      Rational z = step(r);
      long fl = detail::rational_floor(z);
      sum += fl - g0;
      r = z - fl;
    }
  } else {
    long g0 = detail::safe_floor(g(0.0), band);
    double y = g(0.0);
    double r = y - std::floor(y);
    for (long k = 1; k <= n; ++k) {
      double z = g(r);
      long fl = detail::safe_floor(z, band);
      sum += fl - g0;
      r = z - static_cast<double>(fl);
    }
  }
  return {frac01(static_cast<double>(sum) / static_cast<double>(n)), 2.0 / static_cast<double>(n)};
}

// Matsumoto's canonical cocycle tau(f,g) = rot~(s(f)s(g)) - rot~(s(f)) - rot~(s(g)).
struct TauEstimate {
  double value = 0;
  double err = 0;
  double shifted_value = 0;  // recomputed with lifts s(f)+1 and s(g)-2
  bool lift_independent = false;
};
inline TauEstimate matsumoto_tau(const CircleHomeo& f, const CircleHomeo& g, long n) {
  CircleHomeo sf = section(f), sg = section(g);
  auto tau = [&](const CircleHomeo& F, const CircleHomeo& G) {
    return translation_number(F * G, n).value - translation_number(F, n).value - translation_number(G, n).value;
  };
  TauEstimate t;
  t.value = tau(sf, sg);
  t.err = 3.0 / static_cast<double>(n);
  t.shifted_value = tau(sf.shifted(1), sg.shifted(-2));
  t.lift_independent = std::abs(t.value - t.shifted_value) <= 2 * t.err + 1e-12;
  return t;
}

// ---- actions of presentations -------------------------------------------------------

class CircleAction {
 public:
  CircleAction() = default;
  CircleAction(Presentation p, std::vector<CircleHomeo> lifts) : pres_(std::move(p)), gens_(std::move(lifts)) {
    if (static_cast<int>(gens_.size()) != pres_.rank()) throw ValidationError("one lift per generator required");
  }
  template <class T>
  static CircleAction from_representation(const Representation<T>& rep) {
    std::vector<CircleHomeo> g;
    for (auto& m : rep.images()) g.push_back(CircleHomeo::moebius(m));
    return CircleAction(rep.presentation(), g);
  }

  const Presentation& presentation() const { return pres_; }
  const std::vector<CircleHomeo>& generators() const { return gens_; }
  const CircleHomeo& generator(int i) const { return gens_.at(i); }

  CircleHomeo evaluate(const Word& w) const {
    CircleHomeo acc = CircleHomeo::identity();
    bool first = true;
    for (const Letter& l : w) {
      CircleHomeo f = gens_.at(l.gen).pow(l.exp);
      acc = first ? f : acc * f;
      first = false;
    }
    return acc;
  }
  // rho~(w)(x), applying letters right to left without building composites.
  double apply(const Word& w, double x) const {
    for (auto it = w.rbegin(); it != w.rend(); ++it) {
      const CircleHomeo& g = gens_.at(it->gen);
      if (it->exp > 0)
        for (long i = 0; i < it->exp; ++i) x = g(x);
      else
        for (long i = 0; i < -it->exp; ++i) x = g.inverse_lift(x);
    }
    return x;
  }
  std::optional<Rational> apply_exact(const Word& w, const Rational& x) const {
    CircleHomeo f = evaluate(w);
    return f.exact_lift(x);
  }

  // Integer k with relator lift = T(k), per relator. Throws ValidationError if
  // a relator lift is not a translation on the sample grid.
  std::vector<long> relation_translations(int samples = 64, double tol = 1e-8) const {
    std::vector<long> out;
    for (auto& r : pres_.relators()) {
      double k0 = apply(r, 0.0);
      long k = std::lround(k0);
      for (int i = 0; i < samples; ++i) {
        double x = static_cast<double>(i) / samples;
        if (std::abs(apply(r, x) - x - static_cast<double>(k)) > tol)
          throw ValidationError("relator " + pres_.format(r) + " does not lift to a translation");
      }
      out.push_back(k);
    }
    return out;
  }
  bool liftable() const {
    for (long k : relation_translations())
      if (k != 0) return false;
    return true;
  }

 private:
  Presentation pres_;
  std::vector<CircleHomeo> gens_;
};

// alpha(w) = -floor(rho~(w)(0)), so that alpha(g) + alpha(h) - alpha(gh) = eu^0(g,h).
inline long quasimorphism_from_lift(const CircleAction& act, const Word& w) {
  if (!act.liftable()) throw NotLiftable("relations lift to nontrivial translations");
  Word c = canonical_form(w, act.presentation());
  double v = act.apply(c, 0.0);
  return -detail::safe_floor(v, kDefaultLatticeBand);
}
// Same without the liftability check, for callers that checked once.
inline long quasimorphism_unchecked(const CircleAction& act, const Word& w) {
  return -detail::safe_floor(act.apply(canonical_form(w, act.presentation()), 0.0), kDefaultLatticeBand);
}

// ---- semi-conjugacy invariant -------------------------------------------------------

struct SemiConjInvariant {
  int radius = 0;
  long iterations = 0;
  std::vector<std::string> words;
  std::vector<Estimate> rot;
  std::vector<std::pair<std::string, std::string>> tau_pairs;
  std::vector<TauEstimate> tau;
};

inline SemiConjInvariant semiconj_invariant(const CircleAction& act, int R, long n) {
  SemiConjInvariant inv;
  inv.radius = R;
  inv.iterations = n;
  const auto& p = act.presentation();
  auto ball = enumerate_ball(p, R);
  for (auto& w : ball) {
    if (w.empty()) continue;
    inv.words.push_back(p.format(w));
    inv.rot.push_back(rotation_number(act.evaluate(w), n));
  }
  auto half = enumerate_ball(p, std::max(1, R / 2));
  for (auto& u : half)
    for (auto& v : half) {
      if (u.empty() || v.empty()) continue;
      inv.tau_pairs.push_back({p.format(u), p.format(v)});
      inv.tau.push_back(matsumoto_tau(act.evaluate(u), act.evaluate(v), n));
    }
  return inv;
}

struct CompareVerdict {
  bool distinct = false;
  std::string witness;  // word, or "u , v" for a tau pair
  double gap = 0;
};

// Distinct only when a marked rotation number or tau value differs by more than
// the combined error bounds plus tol; never asserts semi-conjugacy.
inline CompareVerdict compare(const SemiConjInvariant& x, const SemiConjInvariant& y, double tol = 0.0) {
  if (x.words != y.words || x.tau_pairs != y.tau_pairs) throw PreconditionFailed("invariants over different balls");
  for (size_t i = 0; i < x.words.size(); ++i) {
    double d = circle_distance(x.rot[i].value, y.rot[i].value);
    if (d > x.rot[i].err + y.rot[i].err + tol) return {true, x.words[i], d};
  }
  for (size_t i = 0; i < x.tau.size(); ++i) {
    double d = std::abs(x.tau[i].value - y.tau[i].value);
    if (d > x.tau[i].err + y.tau[i].err + tol) return {true, x.tau_pairs[i].first + " , " + x.tau_pairs[i].second, d};
  }
  return {false, "", 0};
}

}  // namespace flexcircle
