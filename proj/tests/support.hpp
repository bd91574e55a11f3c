#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "flexcircle/baumslag.hpp"
#include "flexcircle/pulling.hpp"

namespace testsupport {

using namespace flexcircle;

// Random element of SL2(Z) with all entries nonzero, as a product of elementary matrices.
inline Mat2<Quad> random_sl2z(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> k(-2, 2);
  for (;;) {
    Mat2<Quad> m = Mat2<Quad>::identity();
    for (int i = 0; i < 3; ++i) {
      m = m * Mat2<Quad>{Quad(1), Quad(k(rng)), Quad(0), Quad(1)};
      m = m * Mat2<Quad>{Quad(1), Quad(0), Quad(k(rng)), Quad(1)};
    }
    if (!is_zero(m.a) && !is_zero(m.b) && !is_zero(m.c) && !is_zero(m.d)) return m;
  }
}

// Random exact template with k <= 3 slots and exponents in {+-1, +-2}.
inline WordTemplate random_template(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> size(1, 3), e(1, 2), sg(0, 1);
  WordTemplate t;
  int k = size(rng);
  for (int i = 0; i < k; ++i) t.slots.push_back({random_sl2z(rng), (sg(rng) ? 1 : -1) * e(rng)});
  return t;
}

// tr of g_1 diag(z,1/z)^{m_1} ... g_k diag(z,1/z)^{m_k} by direct long double products.
struct FloatSlot {
  long double a, b, c, d;
  long m;
};
inline std::vector<FloatSlot> float_slots(const WordTemplate& t) {
  std::vector<FloatSlot> out;
  for (auto& s : t.slots) out.push_back({s.g.a.to_double(), s.g.b.to_double(), s.g.c.to_double(), s.g.d.to_double(), s.m});
  return out;
}
inline long double hyperbolic_trace(const std::vector<FloatSlot>& t, long double z) {
  long double a = 1, b = 0, c = 0, d = 1;
  for (auto& s : t) {
    long double ga = s.a, gb = s.b, gc = s.c, gd = s.d;
    long double p = 1;
    for (long i = 0; i < std::labs(s.m); ++i) p *= z;
    if (s.m < 0) p = 1 / p;
    long double q = 1 / p;
    long double na = (a * ga + b * gc) * p, nb = (a * gb + b * gd) * q;
    long double nc = (c * ga + d * gc) * p, nd = (c * gb + d * gd) * q;
    a = na, b = nb, c = nc, d = nd;
  }
  return a + d;
}

// Sign changes of tr^2 - x on a geometric grid of n points on each side of 0,
// |z| in [1/B, B]. Counts roots of odd multiplicity.
inline long sign_scan(const WordTemplate& tmpl, double x, double B, long n) {
  auto t = float_slots(tmpl);
  auto f = [&](long double z) {
    long double v = hyperbolic_trace(t, z);
    return v * v - static_cast<long double>(x);
  };
  long changes = 0;
  for (int side : {-1, 1}) {
    long double lb = -std::log(static_cast<long double>(B)), ub = -lb;
    long double z0 = side * std::exp(lb), ratio = std::exp((ub - lb) / (n - 1));
    long double prev = f(z0), z = z0;
    for (long i = 1; i < n; ++i) {
      z *= ratio;
      long double v = f(z);
      if ((v < 0) != (prev < 0) && v != 0) ++changes;
      if (v != 0) prev = v;
    }
  }
  return changes;
}

// floor(F(0)) for the lift F of an exact lifted word, settling lattice-band
// values by whether the exact matrix fixes the boundary point 0.
inline long exact_floor0(const LiftedRep<Quad>& l, const CircleHomeo& F, const Word& w) {
  double v = F(0.0), r = std::round(v);
  if (v != r && std::abs(v - r) < kDefaultLatticeBand && is_zero(l.projected.evaluate(w).matrix().c))
    return static_cast<long>(r);
  return detail::safe_floor(v, kDefaultLatticeBand);
}

// eu^0(f, g) from the sections s(h) = F_h - floor(F_h(0)): s(f) s(g) = T(eu) s(fg).
inline long euler0(const LiftedRep<Quad>& l, const CircleAction& act, const Word& u, const Word& v) {
  const Presentation& p = act.presentation();
  Word uv = p.multiply(u, v);
  CircleHomeo Fu = act.evaluate(u), Fv = act.evaluate(v), Fuv = act.evaluate(uv);
  long ku = exact_floor0(l, Fu, u), kv = exact_floor0(l, Fv, v), kuv = exact_floor0(l, Fuv, uv);
  return std::lround((Fu(Fv(0.0) - kv) - ku) - (Fuv(0.0) - kuv));
}

}  // namespace testsupport
