#pragma once

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "flexcircle/errors.hpp"
#include "flexcircle/laurent.hpp"
#include "flexcircle/moebius.hpp"
#include "flexcircle/pingpong.hpp"

namespace flexcircle {

// phi(nu) = g_1 nu^{m_1} g_2 nu^{m_2} ... g_k nu^{m_k}.
struct WordTemplate {
  struct Slot {
    Mat2<Quad> g;
    long m = 1;
  };
  std::vector<Slot> slots;

  static WordTemplate power(long m) { return WordTemplate{{{Mat2<Quad>::identity(), m}}}; }
  int size() const { return static_cast<int>(slots.size()); }
  void validate() const {
    if (slots.empty()) throw ValidationError("word template needs k >= 1");
    for (auto& s : slots) {
      if (s.m == 0) throw ValidationError("template exponents must be nonzero");
      if (!(s.g.det() == Quad(1))) throw ValidationError("template matrix with determinant " + s.g.det().str());
    }
  }
};

// A word in constant matrices and powers of nu, folded into a template:
// adjacent constants multiply, adjacent powers add, and a trailing constant
// moves to the front (a conjugation, so the trace is unchanged).
class NuWord {
 public:
  static NuWord g(const Mat2<Quad>& m) { return NuWord({{true, m, 0}}); }
  static NuWord nu(long e = 1) { return NuWord({{false, Mat2<Quad>::identity(), e}}); }

  friend NuWord operator*(NuWord x, const NuWord& y) {
    x.ops_.insert(x.ops_.end(), y.ops_.begin(), y.ops_.end());
    return x;
  }
  NuWord inverse() const {
    std::vector<Op> r;
    for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) r.push_back({it->is_g, it->m.adjugate(), -it->e});
    return NuWord(std::move(r));
  }
  static NuWord commutator(const NuWord& x, const NuWord& y) { return x * y * x.inverse() * y.inverse(); }

  // Empty slots when nu cancels out entirely.
  WordTemplate fold() const {
    WordTemplate t;
    Mat2<Quad> pending = Mat2<Quad>::identity();
    long e = 0;
    bool in_power = false;
    for (auto& o : ops_) {
      if (o.is_g) {
        if (in_power && e != 0) {
          t.slots.push_back({pending, e});
          pending = Mat2<Quad>::identity();
        }
        in_power = false;
        e = 0;
        pending = pending * o.m;
      } else {
        in_power = true;
        e += o.e;
      }
    }
    if (in_power && e != 0) {
      t.slots.push_back({pending, e});
      pending = Mat2<Quad>::identity();
    }
    if (!t.slots.empty()) t.slots[0].g = pending * t.slots[0].g;
    return t;
  }

 private:
  struct Op {
    bool is_g;
    Mat2<Quad> m;
    long e;
  };
  explicit NuWord(std::vector<Op> ops) : ops_(std::move(ops)) {}
  std::vector<Op> ops_;
};

// tr phi(mu(z)) in the exact parameter z of mu: hyperbolic diag(z, 1/z),
// parabolic [[1,z],[0,1]], elliptic u = tan(t/4) with
// tr = p(u) / (1+u^2)^denom_power.
struct TracePolynomial {
  ParamKind kind = ParamKind::Hyperbolic;
  QLaurent p;
  long denom_power = 0;

  bool is_constant() const { return p.is_constant() && denom_power == 0; }
  template <class X>
  X operator()(const X& z) const {
    X v = p(z);
    if (denom_power == 0) return v;
    X den = X(1) + z * z, r = X(1);
    for (long i = 0; i < denom_power; ++i) r = r * den;
    return v / r;
  }
  std::string str() const {
    std::string s = p.str();
    if (denom_power) s += " / (1+u^2)^" + std::to_string(denom_power);
    return s;
  }
  // Parameter t of mu(t) at exact parameter z.
  double parameter(double z) const {
    switch (kind) {
      case ParamKind::Hyperbolic: return 2 * std::log(std::abs(z));
      case ParamKind::Parabolic: return z;
      case ParamKind::Elliptic: return 4 * std::atan(z);
    }
    return z;
  }
};

namespace detail {

using LMat = Mat2<QLaurent>;

inline LMat lconst(const Mat2<Quad>& m) {
  return {QLaurent::constant(m.a), QLaurent::constant(m.b), QLaurent::constant(m.c), QLaurent::constant(m.d)};
}
inline LMat lmul(const LMat& x, const LMat& y) {
  return {x.a * y.a + x.b * y.c, x.a * y.b + x.b * y.d, x.c * y.a + x.d * y.c, x.c * y.b + x.d * y.d};
}
inline LMat lpow(const LMat& x, long k) {
  LMat r{QLaurent::constant(Quad(1)), QLaurent(), QLaurent(), QLaurent::constant(Quad(1))}, b = x;
  for (; k; k >>= 1, b = lmul(b, b))
    if (k & 1) r = lmul(r, b);
  return r;
}
// model(z)^m with denominators cleared in the elliptic case.
inline LMat model_power(ParamKind kind, long m) {
  QLaurent one = QLaurent::constant(Quad(1)), zero;
  switch (kind) {
    case ParamKind::Hyperbolic: return {QLaurent::z(m), zero, zero, QLaurent::z(-m)};
    case ParamKind::Parabolic: return {one, QLaurent::monomial(Quad(m), 1), zero, one};
    case ParamKind::Elliptic: {
      QLaurent c = one - QLaurent::z(2), s = QLaurent::monomial(Quad(2), 1);
      LMat n = m > 0 ? LMat{c, s, -s, c} : LMat{c, -s, s, c};
      return lpow(n, std::labs(m));
    }
  }
  return {};
}

}  // namespace detail

inline TracePolynomial trace_polynomial(const WordTemplate& tmpl, const OneParamSubgroup<Quad>& mu) {
  tmpl.validate();
  const Mat2<Quad>& P = mu.conjugator;
  if (!(P.det() == Quad(1))) throw InexactInput("conjugator must have determinant 1 in exact mode");
  Mat2<Quad> Pinv = P.adjugate();
  detail::LMat acc = detail::lconst(Mat2<Quad>::identity());
  TracePolynomial tp;
  tp.kind = mu.kind;
  for (auto& s : tmpl.slots) {
    acc = detail::lmul(acc, detail::lconst(Pinv * s.g * P));
    acc = detail::lmul(acc, detail::model_power(mu.kind, s.m));
    if (mu.kind == ParamKind::Elliptic) tp.denom_power += std::labs(s.m);
  }
  tp.p = acc.a + acc.d;
  return tp;
}

// Same trace from floating matrices g_i P model(m_i t) P^-1, for cross-checks.
// Uses the raw SL2 model matrices, not their PSL canonical forms, so the sign
// of the trace is comparable.
template <class F = double>
F template_trace_numeric(const WordTemplate& tmpl, const OneParamSubgroup<double>& mu, F t) {
  using M4 = std::array<F, 4>;
  auto mul = [](const M4& x, const M4& y) -> M4 {
    return {x[0] * y[0] + x[1] * y[2], x[0] * y[1] + x[1] * y[3], x[2] * y[0] + x[3] * y[2], x[2] * y[1] + x[3] * y[3]};
  };
  auto raw = [&](F s) -> M4 {
    switch (mu.kind) {
      case ParamKind::Hyperbolic: return {std::exp(s / 2), 0, 0, std::exp(-s / 2)};
      case ParamKind::Parabolic: return {1, s, 0, 1};
      case ParamKind::Elliptic: return {std::cos(s / 2), std::sin(s / 2), -std::sin(s / 2), std::cos(s / 2)};
    }
    return {1, 0, 0, 1};
  };
  const Mat2<double>& C = mu.conjugator;
  F det = static_cast<F>(C.a) * C.d - static_cast<F>(C.b) * C.c;
  M4 P{C.a, C.b, C.c, C.d}, Pinv{C.d / det, -C.b / det, -C.c / det, C.a / det};
  M4 acc{1, 0, 0, 1};
  for (auto& s : tmpl.slots) {
    M4 g{static_cast<F>(s.g.a.to_double()), static_cast<F>(s.g.b.to_double()), static_cast<F>(s.g.c.to_double()),
         static_cast<F>(s.g.d.to_double())};
    acc = mul(mul(mul(mul(acc, g), P), raw(static_cast<F>(s.m) * t)), Pinv);
  }
  return acc[0] + acc[3];
}

inline OneParamSubgroup<double> to_double(const OneParamSubgroup<Quad>& mu) {
  const auto& P = mu.conjugator;
  return {mu.kind, {P.a.to_double(), P.b.to_double(), P.c.to_double(), P.d.to_double()}};
}

// Condition Fix mu and g_i Fix mu disjoint, decided exactly in the frame of mu.
inline bool fix_disjoint(const WordTemplate& tmpl, const OneParamSubgroup<Quad>& mu) {
  Mat2<Quad> P = mu.conjugator, Pinv = P.adjugate();
  for (auto& s : tmpl.slots) {
    Mat2<Quad> h = Pinv * s.g * P;
    switch (mu.kind) {
      case ParamKind::Hyperbolic:
        if (is_zero(h.a) || is_zero(h.b) || is_zero(h.c) || is_zero(h.d)) return false;
        break;
      case ParamKind::Parabolic:
        if (is_zero(h.c)) return false;
        break;
      case ParamKind::Elliptic:
        if (h.a == h.d && h.b == -h.c) return false;
        break;
    }
  }
  return true;
}

enum class RootDomain { PositiveReals, RealLine, UnitCircle };

inline RootDomain default_domain(ParamKind k) {
  switch (k) {
    case ParamKind::Hyperbolic: return RootDomain::PositiveReals;
    case ParamKind::Parabolic: return RootDomain::RealLine;
    case ParamKind::Elliptic: return RootDomain::UnitCircle;
  }
  return RootDomain::RealLine;
}

struct TraceRoot {
  RootInterval z;
  double t_lo = 0, t_hi = 0;  // parameter of mu
};

struct TraceRootReport {
  QPoly equation;  // cleared tr^2 - x
  RootDomain domain = RootDomain::RealLine;
  std::vector<TraceRoot> roots;
  long distinct() const { return static_cast<long>(roots.size()); }
  long with_multiplicity() const {
    long n = 0;
    for (auto& r : roots) n += r.z.multiplicity;
    return n;
  }
};

// Roots of tr^2 phi(mu(z)) = x. PositiveReals is the hyperbolic parameter
// z = e^{t/2}; UnitCircle covers the elliptic circle once via u in (-1, 1].
inline TraceRootReport solve_trace_equation(const TracePolynomial& tp, const Quad& x, std::optional<RootDomain> dom = {},
                                            const Rational& width = Rational(1, 1L << 40)) {
  if (tp.is_constant()) throw ConstantTrace("trace " + tp.str() + " does not depend on the parameter");
  QLaurent sq = tp.p * tp.p;
  QLaurent rhs = QLaurent::constant(x);
  if (tp.denom_power) {
    QLaurent den = QLaurent::constant(Quad(1)) + QLaurent::z(2), acc = QLaurent::constant(Quad(1));
    for (long i = 0; i < 2 * tp.denom_power; ++i) acc = acc * den;
    rhs = rhs * acc;
  }
  QLaurent eq = sq - rhs;
  if (eq.is_zero_poly()) throw ConstantTrace("tr^2 - " + x.str() + " vanishes identically");
  TraceRootReport rep;
  rep.domain = dom.value_or(default_domain(tp.kind));
  rep.equation = eq.cleared();
  if (rep.equation.degree() < 1) return rep;  // nonzero constant: no roots
  Rational B = cauchy_bound(rep.equation);
  std::vector<RootInterval> iv;
  switch (rep.domain) {
    case RootDomain::PositiveReals: iv = isolate_roots(rep.equation, Rational(0), B, width); break;
    case RootDomain::RealLine: iv = isolate_roots(rep.equation, -B, B, width); break;
    case RootDomain::UnitCircle: iv = isolate_roots(rep.equation, Rational(-1), Rational(1), width); break;
  }
  for (auto& r : iv) {
    double a = tp.parameter(r.lo.get_d()), b = tp.parameter(r.hi.get_d());
    rep.roots.push_back({r, std::min(a, b), std::max(a, b)});
  }
  return rep;
}

// |p(z)| > B whenever |z| > M (if the top exponent is positive) and whenever
// |z| < 1/M (if the bottom exponent is negative).
struct EscapeThreshold {
  double M = 1;
  bool large = false, small = false;
};

inline EscapeThreshold escape_threshold(const QLaurent& p, double B) {
  if (p.is_constant()) throw ConstantTrace("constant trace never escapes");
  EscapeThreshold r;
  constexpr double slack = 1 + 1e-12;
  auto absd = [](const Quad& q) { return std::abs(q.to_double()); };
  if (p.max_exp() > 0) {
    double S = 0;
    for (auto& [e, c] : p.terms())
      if (e < p.max_exp()) S += absd(c);
    r.large = true;
    r.M = std::max(r.M, (B + S) / absd(p.coeff(p.max_exp())) * slack);
  }
  if (p.min_exp() < 0) {
    double S = 0;
    for (auto& [e, c] : p.terms())
      if (e > p.min_exp()) S += absd(c);
    r.small = true;
    r.M = std::max(r.M, (B + S) / absd(p.coeff(p.min_exp())) * slack);
  }
  return r;
}

// Ping-pong data for psi(t) = g_1 mu(m_1 t) ... g_k mu(m_k t), C_i = Fix mu.
inline std::pair<std::vector<PingPongFamily>, std::vector<MoebiusR>> template_pingpong(
    const WordTemplate& tmpl, const OneParamSubgroup<double>& mu) {
  std::vector<PingPongFamily> fams;
  std::vector<MoebiusR> gs;
  for (auto& s : tmpl.slots) {
    fams.push_back(PingPongFamily::from_subgroup(mu, s.m));
    gs.push_back(MoebiusR::normalized({s.g.a.to_double(), s.g.b.to_double(), s.g.c.to_double(), s.g.d.to_double()}));
  }
  return {fams, gs};
}

inline PingPongCertificate certify_template(const WordTemplate& tmpl, const OneParamSubgroup<double>& mu,
                                            double resolution = 1e-6) {
  auto [f, g] = template_pingpong(tmpl, mu);
  return certify_pingpong(f, g, resolution);
}

}  // namespace flexcircle
