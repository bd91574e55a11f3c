#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "flexcircle/errors.hpp"
#include "flexcircle/scalar.hpp"

namespace flexcircle {

// Dense univariate polynomial, coefficients ascending, no trailing zeros.
template <class T>
class Polynomial {
 public:
  Polynomial() = default;
  explicit Polynomial(std::vector<T> c) : c_(std::move(c)) { trim(); }
  static Polynomial constant(const T& a) { return Polynomial(std::vector<T>{a}); }
  static Polynomial monomial(const T& a, size_t k) {
    std::vector<T> c(k + 1, from_int<T>(0));
    c[k] = a;
    return Polynomial(std::move(c));
  }
  static Polynomial x() { return monomial(from_int<T>(1), 1); }

  bool is_zero() const { return c_.empty(); }
  long degree() const { return static_cast<long>(c_.size()) - 1; }  // -1 for zero
  const std::vector<T>& coeffs() const { return c_; }
  T coeff(size_t k) const { return k < c_.size() ? c_[k] : from_int<T>(0); }
  const T& lead() const { return c_.back(); }

  friend Polynomial operator+(const Polynomial& p, const Polynomial& q) {
    std::vector<T> c(std::max(p.c_.size(), q.c_.size()), from_int<T>(0));
    for (size_t i = 0; i < p.c_.size(); ++i) c[i] = c[i] + p.c_[i];
    for (size_t i = 0; i < q.c_.size(); ++i) c[i] = c[i] + q.c_[i];
    return Polynomial(std::move(c));
  }
  friend Polynomial operator-(const Polynomial& p) {
    std::vector<T> c;
    for (auto& a : p.c_) c.push_back(-a);
    return Polynomial(std::move(c));
  }
  friend Polynomial operator-(const Polynomial& p, const Polynomial& q) { return p + (-q); }
  friend Polynomial operator*(const Polynomial& p, const Polynomial& q) {
    if (p.is_zero() || q.is_zero()) return {};
    std::vector<T> c(p.c_.size() + q.c_.size() - 1, from_int<T>(0));
    for (size_t i = 0; i < p.c_.size(); ++i)
      for (size_t j = 0; j < q.c_.size(); ++j) c[i + j] = c[i + j] + p.c_[i] * q.c_[j];
    return Polynomial(std::move(c));
  }
  friend Polynomial operator*(const T& a, const Polynomial& p) { return constant(a) * p; }
  friend bool operator==(const Polynomial& p, const Polynomial& q) { return p.c_ == q.c_; }

  Polynomial pow(unsigned k) const {
    Polynomial r = constant(from_int<T>(1)), b = *this;
    for (; k; k >>= 1, b = b * b)
      if (k & 1) r = r * b;
    return r;
  }
  Polynomial derivative() const {
    std::vector<T> c;
    for (size_t i = 1; i < c_.size(); ++i) c.push_back(from_int<T>(static_cast<long>(i)) * c_[i]);
    return Polynomial(std::move(c));
  }
  // Euclidean division over a field.
  std::pair<Polynomial, Polynomial> divmod(const Polynomial& d) const {
    if (d.is_zero()) throw std::domain_error("polynomial division by zero");
    std::vector<T> r = c_;
    long dd = d.degree();
    if (degree() < dd) return {Polynomial(), *this};
    std::vector<T> q(degree() - dd + 1, from_int<T>(0));
    T inv = from_int<T>(1) / d.lead();
    for (long k = degree() - dd; k >= 0; --k) {
      T f = r[k + dd] * inv;
      q[k] = f;
      if (is_zero(f)) continue;
      for (long j = 0; j <= dd; ++j) r[k + j] = r[k + j] - f * d.c_[j];
    }
    r.resize(dd);
    return {Polynomial(std::move(q)), Polynomial(std::move(r))};
  }
  Polynomial monic() const {
    if (is_zero()) return *this;
    T inv = from_int<T>(1) / lead();
    std::vector<T> c;
    for (auto& a : c_) c.push_back(a * inv);
    return Polynomial(std::move(c));
  }

  template <class X>
  X operator()(const X& x) const {
    X r = X(0);
    for (size_t i = c_.size(); i-- > 0;) r = r * x + convert<X>(c_[i]);
    return r;
  }

 private:
  template <class X>
  static X convert(const T& a) {
    if constexpr (std::is_same_v<X, T>) return a;
    else if constexpr (std::is_same_v<X, Complex>) return to_complex(a);
    else if constexpr (std::is_same_v<X, long double>) return static_cast<long double>(to_double(a));
    else if constexpr (std::is_same_v<X, Quad> && std::is_same_v<T, Quad>) return a;
    else return static_cast<X>(to_double(a));
  }
  void trim() {
    while (!c_.empty() && flexcircle::is_zero(c_.back())) c_.pop_back();
  }
  static bool is_zero(const T& a) { return flexcircle::is_zero(a); }
  std::vector<T> c_;
};

using QPoly = Polynomial<Quad>;

inline Quad eval_at(const QPoly& p, const Rational& x) { return p(Quad(x)); }

inline QPoly poly_gcd(QPoly a, QPoly b) {
  while (!b.is_zero()) {
    auto r = a.divmod(b).second;
    a = std::move(b);
    b = std::move(r);
  }
  return a.monic();
}

// Yun's square-free factorization: p = lead * prod_i f_i^i, f_i square-free, coprime.
inline std::vector<std::pair<QPoly, int>> squarefree_factors(const QPoly& p) {
  std::vector<std::pair<QPoly, int>> out;
  if (p.degree() < 1) return out;
  QPoly f = p.monic(), df = f.derivative();
  QPoly a = poly_gcd(f, df);
  QPoly b = f.divmod(a).first, c = df.divmod(a).first;
  QPoly d = c - b.derivative();
  for (int i = 1; b.degree() > 0; ++i) {
    QPoly g = poly_gcd(b, d);
    if (g.degree() > 0) out.push_back({g, i});
    b = b.divmod(g).first;
    c = d.divmod(g).first;
    d = c - b.derivative();
  }
  return out;
}

// Sturm chain of a square-free polynomial.
inline std::vector<QPoly> sturm_chain(const QPoly& p) {
  std::vector<QPoly> s{p, p.derivative()};
  while (!s.back().is_zero() && s.back().degree() > 0) {
    auto r = s[s.size() - 2].divmod(s.back()).second;
    if (r.is_zero()) break;
    s.push_back(-r);
  }
  return s;
}

inline int sign_variations(const std::vector<QPoly>& chain, const Rational& x) {
  int v = 0, last = 0;
  for (auto& q : chain) {
    int sg = eval_at(q, x).sign();
    if (sg == 0) continue;
    if (last != 0 && sg != last) ++v;
    last = sg;
  }
  return v;
}

// Isolated real root: lo == hi marks an exact rational root, otherwise the
// root is the unique one of its factor in (lo, hi].
struct RootInterval {
  Rational lo, hi;
  int multiplicity = 1;
  bool exact() const { return lo == hi; }
  double approx() const { return exact() ? lo.get_d() : 0.5 * (lo.get_d() + hi.get_d()); }
  double width() const { return Rational(hi - lo).get_d(); }
};

// Rational B with every real root of p in (-B, B).
inline Rational cauchy_bound(const QPoly& p) {
  if (p.degree() < 1) return Rational(1);
  double lead = std::abs(p.lead().to_double()), m = 0;
  for (long i = 0; i < p.degree(); ++i) m = std::max(m, std::abs(p.coeff(i).to_double()) / lead);
  double b = (1 + m) * (1 + 1e-9) + 1;
  return Rational(static_cast<long>(std::ceil(std::min(b, 9.0e15))));
}

// Rational with the smallest denominator in (a, b], a < b.
inline Rational simplest_rational(const Rational& a, const Rational& b) {
  for (long q = 1; q <= 64; ++q) {
    mpz_class num = b.get_num() * q / b.get_den();  // floor(b q) for positive parts
    Rational c(num, q);
    c.canonicalize();
    if (c > b) c -= Rational(1, q);
    if (c > a && c <= b) return c;
  }
  return b;
}

// All real roots of p in (lo, hi], with multiplicities, refined to width <= width.
inline std::vector<RootInterval> isolate_roots(const QPoly& p, const Rational& lo, const Rational& hi,
                                               const Rational& width = Rational(1, 1L << 40)) {
  if (p.is_zero()) throw ConstantTrace("zero polynomial has no isolated roots");
  std::vector<RootInterval> out;
  for (auto& [f, mult] : squarefree_factors(p)) {
    auto chain = sturm_chain(f);
    auto count = [&](const Rational& a, const Rational& b) { return sign_variations(chain, a) - sign_variations(chain, b); };
    std::vector<std::pair<Rational, Rational>> stack{{lo, hi}};
    while (!stack.empty()) {
      auto [a, b] = stack.back();
      stack.pop_back();
      int n = count(a, b);
      if (n == 0) continue;
      if (n == 1) {
        if (eval_at(f, b).sign() == 0) {
          out.push_back({b, b, mult});
          continue;
        }
        // one simple root in (a, b] and f(b) != 0: plain sign bisection
        int sb = eval_at(f, b).sign();
        while (eval_at(f, a).sign() == 0 || eval_at(f, a).sign() == sb) {
          Rational m = (a + b) / 2;  // a is a root of f outside the window: step off it
          if (count(m, b) == 1) a = m;
          else break;
        }
        while (b - a > width) {
          Rational m = (a + b) / 2;
          int sm = eval_at(f, m).sign();
          if (sm == 0) {
            a = b = m;
            break;
          }
          if (sm == sb) b = m;
          else a = m;
        }
        if (a != b) {
          Rational q = simplest_rational(a, b);
          if (eval_at(f, q).sign() == 0) a = b = q;
        }
        out.push_back({a, b, mult});
        continue;
      }
      Rational m = (a + b) / 2;
      stack.push_back({m, b});
      stack.push_back({a, m});
    }
  }
  std::sort(out.begin(), out.end(), [](const RootInterval& x, const RootInterval& y) { return x.lo < y.lo; });
  return out;
}

inline std::vector<RootInterval> isolate_real_roots(const QPoly& p, const Rational& width = Rational(1, 1L << 40)) {
  Rational b = cauchy_bound(p);
  return isolate_roots(p, -b, b, width);
}

// ---- Laurent polynomials --------------------------------------------------------------

template <class T>
class LaurentPoly {
 public:
  LaurentPoly() = default;
  static LaurentPoly constant(const T& a) { return monomial(a, 0); }
  static LaurentPoly monomial(const T& a, long e) {
    LaurentPoly p;
    if (!is_zero(a)) p.c_[e] = a;
    return p;
  }
  static LaurentPoly z(long e = 1) { return monomial(from_int<T>(1), e); }

  const std::map<long, T>& terms() const { return c_; }
  bool is_zero_poly() const { return c_.empty(); }
  bool is_constant() const { return c_.empty() || (c_.size() == 1 && c_.begin()->first == 0); }
  long min_exp() const { return c_.empty() ? 0 : c_.begin()->first; }
  long max_exp() const { return c_.empty() ? 0 : c_.rbegin()->first; }
  T coeff(long e) const {
    auto it = c_.find(e);
    return it == c_.end() ? from_int<T>(0) : it->second;
  }

  friend LaurentPoly operator+(LaurentPoly p, const LaurentPoly& q) {
    for (auto& [e, a] : q.c_) p.add(e, a);
    return p;
  }
  friend LaurentPoly operator-(const LaurentPoly& p) {
    LaurentPoly r;
    for (auto& [e, a] : p.c_) r.c_[e] = -a;
    return r;
  }
  friend LaurentPoly operator-(const LaurentPoly& p, const LaurentPoly& q) { return p + (-q); }
  friend LaurentPoly operator*(const LaurentPoly& p, const LaurentPoly& q) {
    LaurentPoly r;
    for (auto& [e, a] : p.c_)
      for (auto& [f, b] : q.c_) r.add(e + f, a * b);
    return r;
  }
  friend bool operator==(const LaurentPoly& p, const LaurentPoly& q) { return p.c_ == q.c_; }

  template <class X>
  X operator()(const X& x) const {
    X r = X(0);
    for (auto& [e, a] : c_) r = r + cvt<X>(a) * ipow(x, e);
    return r;
  }

  // z^(-min_exp) p as an ordinary polynomial.
  Polynomial<T> cleared() const {
    std::vector<T> c(c_.empty() ? 0 : max_exp() - min_exp() + 1, from_int<T>(0));
    for (auto& [e, a] : c_) c[e - min_exp()] = a;
    return Polynomial<T>(std::move(c));
  }

  // "coef exp; coef exp; ..." in increasing exponent; "0" for the zero polynomial.
  std::string str() const {
    if (c_.empty()) return "0";
    std::ostringstream os;
    bool first = true;
    for (auto& [e, a] : c_) {
      if (!first) os << "; ";
      os << scalar_str(a) << " " << e;
      first = false;
    }
    return os.str();
  }
  static LaurentPoly parse(const std::string& s) {
    LaurentPoly p;
    std::string t;
    for (char ch : s)
      if (!std::isspace(static_cast<unsigned char>(ch)) || !t.empty()) t += ch;
    if (t == "0" || t.empty()) return p;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ';')) {
      auto l = item.find_first_not_of(" \t\n"), r = item.find_last_not_of(" \t\n");
      if (l == std::string::npos) throw ParseError("empty term in '" + s + "'");
      item = item.substr(l, r - l + 1);
      auto sp = item.find_last_of(" \t");
      if (sp == std::string::npos) throw ParseError("term '" + item + "' needs 'coef exp'");
      long e;
      try {
        size_t used = 0;
        std::string es = item.substr(sp + 1);
        e = std::stol(es, &used);
        if (used != es.size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw ParseError("bad exponent in '" + item + "'");
      }
      p.add(e, parse_coef(item.substr(0, sp)));
    }
    return p;
  }

 private:
  static bool is_zero(const T& a) { return flexcircle::is_zero(a); }
  void add(long e, const T& a) {
    auto it = c_.find(e);
    if (it == c_.end()) {
      if (!is_zero(a)) c_[e] = a;
      return;
    }
    it->second = it->second + a;
    if (is_zero(it->second)) c_.erase(it);
  }
  template <class X>
  static X cvt(const T& a) {
    if constexpr (std::is_same_v<X, T>) return a;
    else if constexpr (std::is_same_v<X, Complex>) return to_complex(a);
    else return static_cast<X>(to_double(a));
  }
  template <class X>
  static X ipow(const X& x, long e) {
    X r = X(1), b = e < 0 ? X(1) / x : x;
    for (unsigned long k = static_cast<unsigned long>(std::labs(e)); k; k >>= 1, b = b * b)
      if (k & 1) r = r * b;
    return r;
  }
  static T parse_coef(const std::string& s) {
    if constexpr (std::is_same_v<T, Quad>) return parse_quad(s);
    else if constexpr (std::is_same_v<T, double>) {
      try {
        return std::stod(s);
      } catch (const std::exception&) {
        throw ParseError("bad coefficient '" + s + "'");
      }
    } else
      static_assert(sizeof(T) == 0, "no parser for this coefficient type");
  }

  std::map<long, T> c_;
};

using QLaurent = LaurentPoly<Quad>;

}  // namespace flexcircle
