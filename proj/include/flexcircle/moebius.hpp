#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "flexcircle/errors.hpp"
#include "flexcircle/scalar.hpp"

namespace flexcircle {

inline constexpr double kPi = std::numbers::pi;

// Plain 2x2 matrix; no determinant constraint.
template <class T>
struct Mat2 {
  T a{}, b{}, c{}, d{};

  static Mat2 identity() { return {from_int<T>(1), from_int<T>(0), from_int<T>(0), from_int<T>(1)}; }
  T det() const { return a * d - b * c; }
  T trace() const { return a + d; }
  Mat2 adjugate() const { return {d, -b, -c, a}; }
  Mat2 inverse() const {
    T dt = det();
    if (is_zero(dt)) throw std::domain_error("singular matrix");
    Mat2 adj = adjugate();
    return {adj.a / dt, adj.b / dt, adj.c / dt, adj.d / dt};
  }
  friend Mat2 operator*(const Mat2& x, const Mat2& y) {
    return {x.a * y.a + x.b * y.c, x.a * y.b + x.b * y.d, x.c * y.a + x.d * y.c, x.c * y.b + x.d * y.d};
  }
  friend Mat2 operator-(const Mat2& x) { return {-x.a, -x.b, -x.c, -x.d}; }
  friend bool operator==(const Mat2& x, const Mat2& y) {
    return x.a == y.a && x.b == y.b && x.c == y.c && x.d == y.d;
  }
  bool is_diagonal() const { return is_zero(b) && is_zero(c); }
};

// Element of PSL2 over T stored as a determinant-one representative whose
// first nonzero entry has nonnegative real part.
template <class T>
class Moebius {
 public:
  Moebius() : m_(Mat2<T>::identity()) {}
  Moebius(T a, T b, T c, T d, double det_tol = 1e-9) : m_{std::move(a), std::move(b), std::move(c), std::move(d)} {
    check_det(det_tol);
    canonicalize();
  }
  explicit Moebius(const Mat2<T>& m, double det_tol = 1e-9) : m_(m) {
    check_det(det_tol);
    canonicalize();
  }
  static Moebius identity() { return Moebius(); }

  const T& a() const { return m_.a; }
  const T& b() const { return m_.b; }
  const T& c() const { return m_.c; }
  const T& d() const { return m_.d; }
  const Mat2<T>& matrix() const { return m_; }

  T det() const { return m_.det(); }
  T tr() const { return m_.trace(); }
  T tr2() const { return tr() * tr(); }

  Moebius inverse() const { return from_trusted(m_.adjugate()); }
  friend Moebius operator*(const Moebius& x, const Moebius& y) { return from_trusted(x.m_ * y.m_); }
  Moebius& operator*=(const Moebius& y) { return *this = *this * y; }
  Moebius pow(long n) const {
    Moebius base = n < 0 ? inverse() : *this, acc;
    unsigned long e = static_cast<unsigned long>(n < 0 ? -n : n);
    while (e) {
      if (e & 1UL) acc = acc * base;
      base = base * base;
      e >>= 1UL;
    }
    return acc;
  }
  Moebius conjugate_by(const Moebius& h) const { return h * *this * h.inverse(); }

  bool is_identity() const {
    return is_zero(m_.b) && is_zero(m_.c) && m_.a == from_int<T>(1) && m_.d == from_int<T>(1);
  }
  friend bool operator==(const Moebius& x, const Moebius& y) { return x.m_ == y.m_; }
  friend bool operator!=(const Moebius& x, const Moebius& y) { return !(x == y); }

  // Largest entrywise distance to another element, both canonical.
  double distance(const Moebius& o) const {
    auto e = [](const T& x, const T& y) { return std::abs(to_complex(x) - to_complex(y)); };
    return std::max({e(m_.a, o.m_.a), e(m_.b, o.m_.b), e(m_.c, o.m_.c), e(m_.d, o.m_.d)});
  }

  Moebius<double> to_real() const {
    if constexpr (is_complex_v<T>) {
      return Moebius<double>(m_.a.real(), m_.b.real(), m_.c.real(), m_.d.real(), 1e-6);
    } else {
      return Moebius<double>(to_double(m_.a), to_double(m_.b), to_double(m_.c), to_double(m_.d), 1e-6);
    }
  }

  // Builds from a matrix already known to have determinant one.
  static Moebius from_trusted(const Mat2<T>& m) {
    Moebius r;
    r.m_ = m;
    r.canonicalize();
    return r;
  }
  // Scales an invertible matrix to determinant one; only valid over double.
  static Moebius normalized(const Mat2<T>& m) {
    static_assert(!is_exact_v<T>, "normalization needs square roots");
    T dt = m.det();
    if constexpr (is_complex_v<T>) {
      T s = std::sqrt(dt);
      return from_trusted({m.a / s, m.b / s, m.c / s, m.d / s});
    } else {
      if (dt <= 0) throw ValidationError("matrix with nonpositive determinant");
      double s = std::sqrt(dt);
      return from_trusted({m.a / s, m.b / s, m.c / s, m.d / s});
    }
  }

 private:
  void check_det(double tol) const {
    T dt = m_.det();
    if constexpr (is_exact_v<T>) {
      if (!(dt == Quad(1))) throw ValidationError("determinant is " + dt.str() + ", expected 1");
    } else {
      if (std::abs(to_complex(dt) - Complex(1.0, 0.0)) > tol)
        throw ValidationError("determinant deviates from 1 by more than tolerance");
    }
  }
  void canonicalize() {
    for (const T* e : {&m_.a, &m_.b, &m_.c, &m_.d}) {
      int s = real_sign(*e);
      if (s == 0 && is_zero(*e)) continue;
      if (s < 0) m_ = -m_;
      return;
    }
  }

  Mat2<T> m_;
};

using MoebiusR = Moebius<double>;
using MoebiusC = Moebius<Complex>;
using MoebiusX = Moebius<Quad>;

// ---- one-parameter models -----------------------------------------------------

enum class ParamKind { Elliptic, Hyperbolic, Parabolic };

inline const char* kind_name(ParamKind k) {
  switch (k) {
    case ParamKind::Elliptic: return "elliptic";
    case ParamKind::Hyperbolic: return "hyperbolic";
    case ParamKind::Parabolic: return "parabolic";
  }
  return "?";
}

inline MoebiusR rot(double t) {
  double c = std::cos(t / 2), s = std::sin(t / 2);
  return MoebiusR::from_trusted({c, s, -s, c});
}
inline MoebiusR hyp(double t) { return MoebiusR::from_trusted({std::exp(t / 2), 0.0, 0.0, std::exp(-t / 2)}); }
inline MoebiusR par(double t) { return MoebiusR::from_trusted({1.0, t, 0.0, 1.0}); }

inline MoebiusR model(ParamKind k, double t) {
  switch (k) {
    case ParamKind::Elliptic: return rot(t);
    case ParamKind::Hyperbolic: return hyp(t);
    case ParamKind::Parabolic: return par(t);
  }
  return MoebiusR();
}

// mu(t) = P model(t) P^{-1} for a conjugator P of nonzero determinant.
template <class T>
struct OneParamSubgroup {
  ParamKind kind = ParamKind::Hyperbolic;
  Mat2<T> conjugator = Mat2<T>::identity();

  Mat2<T> conjugator_inverse() const { return conjugator.inverse(); }
};

inline MoebiusR one_param(ParamKind kind, double t, const Mat2<double>& conj = Mat2<double>::identity()) {
  MoebiusR m = model(kind, t);
  return MoebiusR::normalized(conj * m.matrix() * conj.inverse());
}
inline MoebiusR one_param(const OneParamSubgroup<double>& mu, double t) { return one_param(mu.kind, t, mu.conjugator); }

// Exact points: hyperbolic diag(z, 1/z), parabolic [[1,z],[0,1]]; elliptic uses
// the rational parametrization u = tan(t/4), i.e. cos(t/2) = (1-u^2)/(1+u^2).
template <class T>
Moebius<T> model_exact(ParamKind kind, const T& z) {
  T one = from_int<T>(1), zero = from_int<T>(0);
  switch (kind) {
    case ParamKind::Hyperbolic: return Moebius<T>::from_trusted({z, zero, zero, one / z});
    case ParamKind::Parabolic: return Moebius<T>::from_trusted({one, z, zero, one});
    case ParamKind::Elliptic: {
      T den = one + z * z;
      T c = (one - z * z) / den, s = (z + z) / den;
      return Moebius<T>::from_trusted({c, s, -s, c});
    }
  }
  return Moebius<T>();
}

template <class T>
Moebius<T> at_exact(const OneParamSubgroup<T>& mu, const T& z) {
  Mat2<T> m = model_exact(mu.kind, z).matrix();
  return Moebius<T>::from_trusted(mu.conjugator * m * mu.conjugator_inverse());
}

// ---- classification -------------------------------------------------------------

struct IsometryClass {
  enum Kind { Identity, Elliptic, Parabolic, Hyperbolic } kind = Identity;
  double length = 0.0;  // translation length for hyperbolic
  double angle = 0.0;   // rotation angle in (0, 2pi) for elliptic
  double tr2 = 4.0;

  double rotation_number() const { return kind == Elliptic ? angle / (2 * kPi) : 0.0; }
  const char* name() const {
    switch (kind) {
      case Identity: return "identity";
      case Elliptic: return "elliptic";
      case Parabolic: return "parabolic";
      case Hyperbolic: return "hyperbolic";
    }
    return "?";
  }
  friend bool operator==(const IsometryClass& x, const IsometryClass& y) { return x.kind == y.kind; }
};

inline constexpr double kDefaultParabolicBand = 1e-9;

namespace detail {
// Angle of an elliptic element from the representative with c < 0: such an
// element is conjugate to Rot(t) with t = 2 arccos(tr/2) in (0, 2pi).
inline double elliptic_angle(double a, double c, double d) {
  double tr = a + d;
  if (c > 0) tr = -tr;
  double half = std::clamp(tr / 2, -1.0, 1.0);
  return 2 * std::acos(half);
}
}  // namespace detail

template <class T>
IsometryClass classify(const Moebius<T>& g, double eps_par = kDefaultParabolicBand) {
  static_assert(!is_complex_v<T>, "classify expects a real element");
  IsometryClass out;
  if (g.is_identity()) return out;
  double tr2 = to_double(g.tr2());
  out.tr2 = tr2;
  int side;
  if constexpr (is_exact_v<T>) {
    side = (g.tr2() - Quad(4)).sign();
  } else {
    if (std::abs(tr2 - 4) <= eps_par) {
      // A floating element this close to the parabolic locus cannot be decided
      // unless it is visibly unipotent.
      double off = std::max(std::abs(g.a() - 1), std::abs(g.d() - 1));
      bool unipotent = off == 0.0 && (g.b() == 0.0 || g.c() == 0.0);
      if (!unipotent) throw AmbiguousClass("|tr^2 - 4| = " + scalar_str(std::abs(tr2 - 4)) + " inside band");
      side = 0;
    } else {
      side = tr2 > 4 ? 1 : -1;
    }
  }
  if (side > 0) {
    out.kind = IsometryClass::Hyperbolic;
    out.length = 2 * std::acosh(std::sqrt(tr2) / 2);
  } else if (side == 0) {
    out.kind = IsometryClass::Parabolic;
  } else {
    out.kind = IsometryClass::Elliptic;
    out.angle = detail::elliptic_angle(to_double(g.a()), to_double(g.c()), to_double(g.d()));
  }
  return out;
}

// ---- boundary action -------------------------------------------------------------
// The circle [0,1) is identified with R u {inf} by x = tan(pi (theta - 1/2)).
// Points are carried as angles alpha = pi*theta with the representative vector
// w(alpha) = (-cos alpha, sin alpha) ~ [x : 1].

namespace detail {
// Angle displacement (in units of pi) of the lift of the projective action of
// the given matrix rep; continuous and in (-1, 1).
inline double boundary_displacement(double a, double b, double c, double d, double theta) {
  double alpha = kPi * theta;
  double wx = -std::cos(alpha), wy = std::sin(alpha);
  double mx = a * wx + b * wy, my = c * wx + d * wy;
  double cross = wx * my - wy * mx, dot = wx * mx + wy * my;
  return -std::atan2(cross, dot) / kPi;
}
}  // namespace detail

// Canonical lift representative: trace >= 0 when |tr| >= 2, so no vector is
// sent to a negative multiple of itself.
inline Mat2<double> lift_representative(const MoebiusR& g) {
  Mat2<double> m = g.matrix();
  if (m.trace() < 0 && std::abs(m.trace()) >= 2) m = -m;
  return m;
}

inline double boundary_lift(const Mat2<double>& m, double x) {
  return x + detail::boundary_displacement(m.a, m.b, m.c, m.d, x);
}

inline double frac01(double x) {
  double f = x - std::floor(x);
  return f >= 1.0 ? 0.0 : f;
}

template <class T>
double boundary_action(const Moebius<T>& g, double theta) {
  MoebiusR r = g.to_real();
  return frac01(boundary_lift(lift_representative(r), theta));
}

inline double theta_of(double x) {  // real line -> circle parameter
  return frac01(std::atan(x) / kPi + 0.5);
}
inline constexpr double kThetaInfinity = 0.0;

// ---- fixed points ----------------------------------------------------------------

struct BoundaryFixedPoint {
  enum Type { Attracting, Repelling, Parabolic } type;
  double theta;
};

template <class T>
std::vector<BoundaryFixedPoint> fixed_points(const Moebius<T>& g_in) {
  if (g_in.is_identity()) throw IdentityInput("fixed_points of the identity");
  MoebiusR g = g_in.to_real();
  IsometryClass cls = classify(g_in);
  if (cls.kind == IsometryClass::Elliptic) return {};
  double a = g.a(), b = g.b(), c = g.c(), d = g.d();
  // Fixed points of x -> (ax+b)/(cx+d): c x^2 + (d-a) x - b = 0; use vectors
  // (x : 1) or (1 : 0) for infinity.
  std::vector<double> pts;
  if (std::abs(c) < 1e-300) {
    pts.push_back(kThetaInfinity);
    if (cls.kind == IsometryClass::Hyperbolic) pts.push_back(theta_of(b / (d - a)));
  } else {
    double disc = (d - a) * (d - a) + 4 * b * c;
    disc = cls.kind == IsometryClass::Parabolic ? 0.0 : std::max(disc, 0.0);
    double s = std::sqrt(disc);
    double q = -0.5 * ((d - a) + (d - a >= 0 ? s : -s));
    // Roots q/c and -b/q, numerically stable pair.
    double r1 = q / c;
    pts.push_back(theta_of(r1));
    if (cls.kind == IsometryClass::Hyperbolic) {
      double r2 = q != 0 ? -b / q : (a - d) / c - r1;
      pts.push_back(theta_of(r2));
    }
  }
  std::vector<BoundaryFixedPoint> out;
  if (cls.kind == IsometryClass::Parabolic) {
    out.push_back({BoundaryFixedPoint::Parabolic, pts[0]});
    return out;
  }
  // The derivative of the circle map at a fixed point decides the type; the
  // attracting point is the one whose eigenvalue has larger modulus.
  Mat2<double> m = lift_representative(g);
  auto eig_scale = [&](double th) {
    double alpha = kPi * th;
    double wx = -std::cos(alpha), wy = std::sin(alpha);
    double mx = m.a * wx + m.b * wy, my = m.c * wx + m.d * wy;
    return std::hypot(mx, my);
  };
  double s0 = eig_scale(pts[0]), s1 = eig_scale(pts[1]);
  bool first_attracting = s0 > s1;
  out.push_back({first_attracting ? BoundaryFixedPoint::Attracting : BoundaryFixedPoint::Repelling, pts[0]});
  out.push_back({first_attracting ? BoundaryFixedPoint::Repelling : BoundaryFixedPoint::Attracting, pts[1]});
  std::sort(out.begin(), out.end(), [](auto& x, auto& y) { return x.type < y.type; });
  return out;
}

// ---- commutator test ---------------------------------------------------------------

template <class T>
Moebius<T> commutator(const Moebius<T>& x, const Moebius<T>& y) {
  return x * y * x.inverse() * y.inverse();
}

template <class T>
bool parabolic_commutator_test(const Moebius<T>& c, const Moebius<T>& g, double eps = 1e-9) {
  if (c.is_identity()) throw IdentityInput("parabolic_commutator_test with c = 1");
  Moebius<T> k = commutator(c, g * c * g.inverse());
  if constexpr (is_exact_v<T>) {
    return k.tr2() == Quad(4);
  } else {
    return std::abs(to_complex(k.tr2()) - Complex(4.0, 0.0)) <= eps;
  }
}

}  // namespace flexcircle
