#pragma once

#include <gmpxx.h>

#include <cmath>
#include <complex>
#include <optional>
#include <cstdint>
#include <sstream>
#include <string>
#include <type_traits>
#include <utility>

#include "flexcircle/errors.hpp"

namespace flexcircle {

using Rational = mpq_class;

// p/q in lowest terms; mpq_class(p, q) alone does not canonicalize.
inline Rational rational(long p, long q) {
  Rational r(p, q);
  r.canonicalize();
  return r;
}

// Elements a + b*sqrt(D) of Q(sqrt D). D == 0 marks a plain rational; D may be
// negative, in which case the field is imaginary and has no order.
class Quad {
 public:
  Quad() = default;
  Quad(long v) : a_(v) {}  // NOLINT(google-explicit-constructor)
  Quad(const Rational& a) : a_(a) {}  // NOLINT
  Quad(Rational a, Rational b, long d) : a_(std::move(a)), b_(std::move(b)), d_(d) {
    a_.canonicalize();
    b_.canonicalize();
    if (d_ == 0 && b_ != 0) throw FieldMismatch("radical part with D = 0");
    if (d_ != 0 && is_perfect_square(d_)) throw FieldMismatch("D must not be a square");
    if (b_ == 0) d_ = 0;
  }
  static Quad sqrt_of(long d) { return Quad(Rational(0), Rational(1), d); }

  const Rational& a() const { return a_; }
  const Rational& b() const { return b_; }
  long d() const { return b_ == 0 ? 0 : d_; }
  bool is_rational() const { return b_ == 0; }

  Quad operator-() const { return Quad(-a_, -b_, d_); }
  friend Quad operator+(const Quad& x, const Quad& y) {
    return Quad(x.a_ + y.a_, x.b_ + y.b_, join(x, y));
  }
  friend Quad operator-(const Quad& x, const Quad& y) {
    return Quad(x.a_ - y.a_, x.b_ - y.b_, join(x, y));
  }
  friend Quad operator*(const Quad& x, const Quad& y) {
    long d = join(x, y);
    return Quad(x.a_ * y.a_ + x.b_ * y.b_ * d, x.a_ * y.b_ + x.b_ * y.a_, d);
  }
  Quad inverse() const {
    Rational n = norm();
    if (n == 0) throw std::domain_error("Quad: division by zero");
    return Quad(a_ / n, -b_ / n, d_);
  }
  friend Quad operator/(const Quad& x, const Quad& y) { return x * y.inverse(); }
  Quad& operator+=(const Quad& y) { return *this = *this + y; }
  Quad& operator-=(const Quad& y) { return *this = *this - y; }
  Quad& operator*=(const Quad& y) { return *this = *this * y; }
  Quad& operator/=(const Quad& y) { return *this = *this / y; }

  friend bool operator==(const Quad& x, const Quad& y) {
    return x.a_ == y.a_ && x.b_ == y.b_ && (x.b_ == 0 || x.d_ == y.d_);
  }
  friend bool operator!=(const Quad& x, const Quad& y) { return !(x == y); }

  Quad conj() const { return Quad(a_, -b_, d_); }
  Rational norm() const { return a_ * a_ - b_ * b_ * d_; }

  // Exact sign; only defined for real fields (D >= 0).
  int sign() const {
    int sa = ::sgn(a_), sb = ::sgn(b_);
    if (sb == 0) return sa;
    if (d_ < 0) throw FieldMismatch("sign() in an imaginary quadratic field");
    if (sa == 0) return sb;
    if (sa == sb) return sa;
    int c = ::cmp(a_ * a_, b_ * b_ * d_);
    return c > 0 ? sa : (c < 0 ? sb : 0);
  }

  double to_double() const {
    if (b_ == 0) return a_.get_d();
    if (d_ < 0) throw FieldMismatch("to_double() of a non-real value");
    double r = std::sqrt(static_cast<double>(d_));
    double x = a_.get_d(), y = b_.get_d() * r;
    // Avoid cancellation when a and b*sqrt(D) nearly cancel.
    if ((x > 0) != (y > 0) && std::abs(x + y) < 0.5 * std::abs(x)) return norm().get_d() / (x - y);
    return x + y;
  }
  std::complex<double> to_complex() const {
    if (d_ >= 0 || b_ == 0) return {to_double(), 0.0};
    return {a_.get_d(), b_.get_d() * std::sqrt(static_cast<double>(-d_))};
  }
  Quad real_part() const { return d_ < 0 ? Quad(a_) : *this; }
  // For D < 0 the imaginary part is b*sqrt(|D|), returned as an element of Q(sqrt|D|).
  Quad imag_part() const {
    if (d_ >= 0 || b_ == 0) return Quad(0);
    return Quad(Rational(0), b_, -d_);
  }

  std::string str() const {
    std::ostringstream os;
    if (b_ == 0) {
      os << a_.get_str();
    } else {
      if (a_ != 0) os << a_.get_str() << (b_ > 0 ? "+" : "-");
      else if (b_ < 0) os << "-";
      Rational ab = abs(b_);
      if (ab != 1) os << ab.get_str() << "*";
      os << "sqrt(" << d_ << ")";
    }
    return os.str();
  }

 private:
  static bool is_perfect_square(long d) {
    if (d < 0) return d == -1 ? false : false;
    long r = static_cast<long>(std::llround(std::sqrt(static_cast<double>(d))));
    for (long s = r - 1; s <= r + 1; ++s)
      if (s >= 0 && s * s == d) return true;
    return false;
  }
  static long join(const Quad& x, const Quad& y) {
    if (x.b_ == 0) return y.d_;
    if (y.b_ == 0) return x.d_;
    if (x.d_ != y.d_) throw FieldMismatch("Q(sqrt " + std::to_string(x.d_) + ") vs Q(sqrt " +
                                          std::to_string(y.d_) + ")");
    return x.d_;
  }

  Rational a_{0};
  Rational b_{0};
  long d_ = 0;
};

// ---- uniform scalar interface -------------------------------------------------

using Complex = std::complex<double>;

template <class T>
inline constexpr bool is_exact_v = std::is_same_v<T, Quad>;
template <class T>
inline constexpr bool is_complex_v = std::is_same_v<T, Complex>;

inline double to_double(double x) { return x; }
inline double to_double(const Quad& x) { return x.to_double(); }
inline double to_double(const Rational& x) { return x.get_d(); }
inline double to_double(const Complex& x) { return x.real(); }

inline Complex to_complex(double x) { return {x, 0.0}; }
inline Complex to_complex(const Complex& x) { return x; }
inline Complex to_complex(const Quad& x) { return x.to_complex(); }

inline bool is_zero(double x) { return x == 0.0; }
inline bool is_zero(const Complex& x) { return x == Complex(0.0, 0.0); }
inline bool is_zero(const Quad& x) { return x.a() == 0 && x.b() == 0; }

inline int sign_of(double x) { return (x > 0) - (x < 0); }
inline int sign_of(const Quad& x) { return x.sign(); }
inline int sign_of(const Rational& x) { return ::sgn(x); }

// Sign of the real part, used for the PSL sign canonicalization.
inline int real_sign(double x) { return sign_of(x); }
inline int real_sign(const Complex& x) { return sign_of(x.real()) != 0 ? sign_of(x.real()) : sign_of(x.imag()); }
inline int real_sign(const Quad& x) {
  if (x.d() < 0) return x.a() != 0 ? ::sgn(x.a()) : ::sgn(x.b());
  return x.sign();
}

inline Quad quad_abs(const Quad& x) { return x.sign() < 0 ? -x : x; }

template <class T>
T from_int(long n) {
  if constexpr (std::is_same_v<T, Complex>) return Complex(static_cast<double>(n), 0.0);
  else if constexpr (std::is_same_v<T, Quad>) return Quad(n);
  else return static_cast<T>(n);
}

inline std::string scalar_str(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}
inline std::string scalar_str(const Complex& x) { return scalar_str(x.real()) + (x.imag() < 0 ? "" : "+") + scalar_str(x.imag()) + "i"; }
inline std::string scalar_str(const Quad& x) { return x.str(); }

// Parses "p/q", an integer, or a decimal literal exactly.
inline Rational parse_rational(const std::string& s) {
  std::string t;
  for (char ch : s)
    if (!std::isspace(static_cast<unsigned char>(ch))) t += ch;
  if (t.empty()) throw ParseError("empty rational literal");
  auto dot = t.find('.');
  auto e = t.find_first_of("eE");
  try {
    if (dot == std::string::npos && e == std::string::npos) {
      Rational r(t, 10);
      r.canonicalize();
      return r;
    }
    std::string mant = t.substr(0, e), expo = e == std::string::npos ? "0" : t.substr(e + 1);
    bool neg = !mant.empty() && mant[0] == '-';
    if (!mant.empty() && (mant[0] == '-' || mant[0] == '+')) mant = mant.substr(1);
    auto d = mant.find('.');
    std::string digits = mant, frac;
    if (d != std::string::npos) {
      digits = mant.substr(0, d);
      frac = mant.substr(d + 1);
    }
    mpz_class num((digits + frac).empty() ? "0" : digits + frac, 10);
    long ex = std::stol(expo) - static_cast<long>(frac.size());
    mpz_class ten = 10, p;
    mpz_pow_ui(p.get_mpz_t(), ten.get_mpz_t(), static_cast<unsigned long>(std::labs(ex)));
    Rational r = ex >= 0 ? Rational(num * p) : Rational(num, p);
    r.canonicalize();
    return neg ? Rational(-r) : r;
  } catch (const std::invalid_argument&) {
    throw ParseError("bad rational literal '" + s + "'");
  }
}

// Inverse of Quad::str: "a", "sqrt(D)", "b*sqrt(D)", "a+b*sqrt(D)", with signs.
inline Quad parse_quad(const std::string& s) {
  std::string t;
  for (char ch : s)
    if (!std::isspace(static_cast<unsigned char>(ch))) t += ch;
  auto sq = t.find("sqrt(");
  if (sq == std::string::npos) return Quad(parse_rational(t));
  auto close = t.find(')', sq);
  if (close == std::string::npos || close + 1 != t.size()) throw ParseError("bad quadratic literal '" + s + "'");
  long d;
  try {
    d = std::stol(t.substr(sq + 5, close - sq - 5));
  } catch (const std::exception&) {
    throw ParseError("bad radicand in '" + s + "'");
  }
  std::string head = t.substr(0, sq);
  if (!head.empty() && head.back() == '*') head.pop_back();
  // split head into rational part and coefficient at the last sign not at position 0
  size_t cut = std::string::npos;
  for (size_t i = head.size(); i-- > 1;)
    if ((head[i] == '+' || head[i] == '-') && head[i - 1] != 'e' && head[i - 1] != 'E') {
      cut = i;
      break;
    }
  std::string a = cut == std::string::npos ? "" : head.substr(0, cut);
  std::string b = cut == std::string::npos ? head : head.substr(cut);
  Rational bc;
  if (b.empty() || b == "+") bc = 1;
  else if (b == "-") bc = -1;
  else bc = parse_rational(b[0] == '+' ? b.substr(1) : b);
  return Quad(a.empty() ? Rational(0) : parse_rational(a), bc, d);
}

namespace detail {
// n = s^2 * f with f squarefree, by trial division; nullopt if a cofactor
// above the search bound stays undecided.
inline std::optional<std::pair<mpz_class, mpz_class>> square_split(mpz_class n) {
  mpz_class s = 1, f = 1;
  for (unsigned long p = 2; p < 100000 && mpz_class(p) * p <= n; p += (p == 2 ? 1 : 2)) {
    int k = 0;
    while (mpz_divisible_ui_p(n.get_mpz_t(), p)) {
      mpz_divexact_ui(n.get_mpz_t(), n.get_mpz_t(), p);
      ++k;
    }
    for (int i = 0; i < k / 2; ++i) s *= p;
    if (k % 2) f *= p;
  }
  if (n > 1) {
    if (mpz_perfect_square_p(n.get_mpz_t())) {
      mpz_class r;
      mpz_sqrt(r.get_mpz_t(), n.get_mpz_t());
      s *= r;
    } else if (n < mpz_class(100000) * 100000 || mpz_probab_prime_p(n.get_mpz_t(), 30)) {
      f *= n;
    } else {
      return std::nullopt;
    }
  }
  return std::make_pair(s, f);
}
inline std::optional<Rational> rational_sqrt(const Rational& x) {
  if (x < 0) return std::nullopt;
  mpz_class n = x.get_num(), d = x.get_den();
  if (!mpz_perfect_square_p(n.get_mpz_t()) || !mpz_perfect_square_p(d.get_mpz_t())) return std::nullopt;
  mpz_class rn, rd;
  mpz_sqrt(rn.get_mpz_t(), n.get_mpz_t());
  mpz_sqrt(rd.get_mpz_t(), d.get_mpz_t());
  Rational r(rn, rd);
  r.canonicalize();
  return r;
}
}  // namespace detail

// Square root inside a single quadratic field. A rational x yields s*sqrt(D);
// x = a + b sqrt(D) yields u + v sqrt(D) when that exists.
inline std::optional<Quad> exact_sqrt(const Quad& x) {
  if (x.is_rational()) {
    const Rational& r = x.a();
    if (r < 0) return std::nullopt;
    if (r == 0) return Quad(0);
    auto split = detail::square_split(r.get_num() * r.get_den());
    if (!split || !split->second.fits_slong_p()) return std::nullopt;
    Rational s(split->first, r.get_den());
    s.canonicalize();
    long f = split->second.get_si();
    if (f == 1) return Quad(s);
    return Quad(Rational(0), s, f);
  }
  auto n = detail::rational_sqrt(x.norm());
  if (!n) return std::nullopt;
  for (const Rational& u2 : {Rational((x.a() + *n) / 2), Rational((x.a() - *n) / 2)}) {
    auto u = detail::rational_sqrt(u2);
    if (!u || *u == 0) continue;
    Rational v = x.b() / (2 * *u);
    v.canonicalize();
    Quad r(*u, v, x.d());
    if (r.sign() < 0) r = -r;
    return r;
  }
  return std::nullopt;
}

}  // namespace flexcircle
