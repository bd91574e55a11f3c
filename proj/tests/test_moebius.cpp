#include <catch_amalgamated.hpp>

#include <random>

#include "flexcircle/moebius.hpp"

using namespace flexcircle;
using Catch::Approx;

namespace {

MoebiusR random_sl2(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (;;) {
    double a = u(rng), b = u(rng), c = u(rng), d = u(rng);
    double det = a * d - b * c;
    if (std::abs(det) < 0.2) continue;
    if (det < 0) { b = -b; d = -d; det = -det; }  // still a valid matrix after row scaling
    double s = std::sqrt(a * d - b * c);
    if (!(s > 0)) continue;
    return MoebiusR::normalized({a, b, c, d});
  }
}

// Naive projective action on R u {inf}; independent of the lift formula.
double naive_action(const MoebiusR& g, double theta) {
  if (theta == 0.0) {
    if (g.c() == 0.0) return 0.0;
    return theta_of(g.a() / g.c());
  }
  double x = std::tan(kPi * (theta - 0.5));
  double den = g.c() * x + g.d();
  if (den == 0.0) return 0.0;
  return theta_of((g.a() * x + g.b()) / den);
}

double circle_dist(double x, double y) {
  double d = std::abs(frac01(x) - frac01(y));
  return std::min(d, 1.0 - d);
}

}  // namespace

TEST_CASE("one_param models") {
  CHECK(one_param(ParamKind::Parabolic, 0).is_identity());
  auto e2 = one_param(ParamKind::Hyperbolic, 2);
  CHECK(e2.a() == Approx(std::exp(1.0)));
  CHECK(e2.d() == Approx(std::exp(-1.0)));
  CHECK(e2.b() == 0.0);
  auto r = one_param(ParamKind::Elliptic, kPi);
  CHECK(std::abs(r.a()) < 1e-15);
  CHECK(r.b() == Approx(1.0));
  CHECK(r.c() == Approx(-1.0));
}

TEST_CASE("canonical sign is idempotent and identifies g with -g") {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 100; ++i) {
    auto g = random_sl2(rng);
    auto m = g.matrix();
    MoebiusR neg(-m);
    CHECK(neg == g);
    CHECK(MoebiusR(g.matrix()) == g);
  }
  MoebiusX x(Quad(0), Quad(-1), Quad(1), Quad(0));
  CHECK(x.b() == Quad(1));
  CHECK(x.c() == Quad(-1));
}

TEST_CASE("determinant check") {
  CHECK_THROWS_AS(MoebiusR(1.0, 1.0, 0.0, 2.0), ValidationError);
  CHECK_THROWS_AS(MoebiusX(Quad(1), Quad(1), Quad(0), Quad(2)), ValidationError);
}

TEST_CASE("classify examples") {
  CHECK(classify(MoebiusR()).kind == IsometryClass::Identity);
  auto h = classify(one_param(ParamKind::Hyperbolic, 2));
  CHECK(h.kind == IsometryClass::Hyperbolic);
  CHECK(h.length == Approx(2.0).epsilon(1e-12));
  auto e = classify(rot(kPi));
  CHECK(e.kind == IsometryClass::Elliptic);
  CHECK(e.angle == Approx(kPi));
  CHECK(e.tr2 == Approx(0.0).margin(1e-15));
  CHECK(classify(par(1)).kind == IsometryClass::Parabolic);
  // conjugated parabolic in floating point sits in the band
  auto pc = par(1).conjugate_by(rot(0.7));
  CHECK_THROWS_AS(classify(pc), AmbiguousClass);
  // exact mode decides
  MoebiusX px(Quad(2), Quad(-1), Quad(1), Quad(0));
  CHECK(classify(px).kind == IsometryClass::Parabolic);
}

TEST_CASE("classify is conjugation and inversion invariant") {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 200; ++i) {
    auto g = random_sl2(rng), h = random_sl2(rng);
    double t2 = g.tr2();
    if (std::abs(t2 - 4) < 1e-3) continue;
    auto c = classify(g);
    CHECK(classify(g.inverse()) == c);
    CHECK(classify(g.conjugate_by(h)) == c);
    if (c.kind == IsometryClass::Hyperbolic) {
      CHECK(std::abs(2 * std::cosh(c.length / 2) - std::abs(g.tr())) < 1e-10);
    }
  }
}

TEST_CASE("boundary action examples") {
  CHECK(boundary_action(MoebiusR(), 0.3) == Approx(0.3));
  auto r = rot(2 * kPi / 5);
  for (double th : {0.0, 0.13, 0.5, 0.77}) {
    double x = th;
    for (int i = 0; i < 5; ++i) x = boundary_action(r, x);
    CHECK(circle_dist(x, th) < 1e-12);
  }
  // Rot(t) is the rigid rotation by t / 2pi
  CHECK(circle_dist(boundary_action(rot(1.0), 0.25), 0.25 + 1.0 / (2 * kPi)) < 1e-14);
  double th0 = theta_of(0.0);
  CHECK(th0 == Approx(0.5));
  CHECK(circle_dist(boundary_action(hyp(1), th0), th0) < 1e-15);
}

TEST_CASE("boundary action agrees with the naive projective formula and is an action") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    auto g = random_sl2(rng), h = random_sl2(rng);
    double th = u(rng);
    CHECK(circle_dist(boundary_action(g, th), naive_action(g, th)) < 1e-9);
    CHECK(circle_dist(boundary_action(g * h, th), boundary_action(g, boundary_action(h, th))) < 1e-10);
  }
}

TEST_CASE("boundary lift is a degree one increasing lift") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int i = 0; i < 200; ++i) {
    auto m = lift_representative(random_sl2(rng));
    double x = u(rng);
    CHECK(boundary_lift(m, x + 1) - boundary_lift(m, x) == Approx(1.0).epsilon(1e-12));
    CHECK(boundary_lift(m, x + 1e-4) > boundary_lift(m, x));
  }
}

TEST_CASE("elliptic angle matches the dynamical rotation number") {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 50; ++i) {
    auto h = random_sl2(rng);
    std::uniform_real_distribution<double> ut(0.1, 2 * kPi - 0.1);
    double t = ut(rng);
    auto g = rot(t).conjugate_by(h);
    auto cls = classify(g);
    REQUIRE(cls.kind == IsometryClass::Elliptic);
    // rotation number by averaging the lift
    const int n = 20000;
    auto m = lift_representative(g);
    double x = 0;
    for (int k = 0; k < n; ++k) x = boundary_lift(m, x);
    double rn = x / n;
    double d = std::abs(frac01(rn) - cls.rotation_number());
    CHECK(std::min(d, 1 - d) <= 2.0 / n);
    CHECK(cls.angle == Approx(t).epsilon(1e-8));
  }
}

TEST_CASE("fixed points") {
  auto fp = fixed_points(hyp(1));
  REQUIRE(fp.size() == 2);
  CHECK(fp[0].type == BoundaryFixedPoint::Attracting);
  CHECK(fp[0].theta == 0.0);  // infinity
  CHECK(fp[1].theta == Approx(0.5));
  auto pp = fixed_points(par(1));
  REQUIRE(pp.size() == 1);
  CHECK(pp[0].type == BoundaryFixedPoint::Parabolic);
  CHECK(pp[0].theta == 0.0);
  CHECK(fixed_points(rot(1)).empty());
  CHECK_THROWS_AS(fixed_points(MoebiusR()), IdentityInput);
  std::mt19937_64 rng(6);
  for (int i = 0; i < 100; ++i) {
    auto g = random_sl2(rng);
    if (g.tr2() < 4.01) continue;
    for (auto& p : fixed_points(g)) CHECK(circle_dist(boundary_action(g, p.theta), p.theta) < 1e-9);
    auto f = fixed_points(g);
    // forward orbit of a generic point approaches the attracting point
    double x = 0.123;
    for (int k = 0; k < 200; ++k) x = boundary_action(g, x);
    CHECK(circle_dist(x, f[0].theta) < 1e-6);
  }
}

TEST_CASE("parabolic commutator test") {
  auto c = hyp(1);
  CHECK(parabolic_commutator_test(c, hyp(0.3)));
  MoebiusX cx(Quad(Rational(2)), Quad(0), Quad(0), Quad(Rational(1, 2)));
  MoebiusX g(Quad(1), Quad(1), Quad(1), Quad(2));
  CHECK_FALSE(parabolic_commutator_test(cx, g));
  MoebiusX p(Quad(1), Quad(1), Quad(0), Quad(1));
  CHECK(parabolic_commutator_test(cx, p));
  CHECK_THROWS_AS(parabolic_commutator_test(MoebiusX(), p), IdentityInput);
}

TEST_CASE("exact one-parameter additivity") {
  // hyperbolic: diag(z,1/z) multiplicative in z
  OneParamSubgroup<Quad> mu{ParamKind::Hyperbolic, Mat2<Quad>{Quad(1), Quad(1), Quad(1), Quad(2)}};
  auto x = at_exact(mu, Quad(Rational(3, 2))), y = at_exact(mu, Quad(Rational(5, 7)));
  CHECK(x * y == at_exact(mu, Quad(Rational(15, 14))));
  OneParamSubgroup<Quad> pm{ParamKind::Parabolic, Mat2<Quad>::identity()};
  CHECK(at_exact(pm, Quad(2)) * at_exact(pm, Quad(Rational(1, 3))) == at_exact(pm, Quad(Rational(7, 3))));
  // elliptic: tangent addition in u = tan(t/4)
  Rational u(1, 3), v(1, 5), w = (u + v) / (1 - u * v);
  OneParamSubgroup<Quad> em{ParamKind::Elliptic, Mat2<Quad>::identity()};
  CHECK(at_exact(em, Quad(u)) * at_exact(em, Quad(v)) == at_exact(em, Quad(w)));
}

TEST_CASE("quadratic field arithmetic") {
  Quad s2 = Quad::sqrt_of(2);
  CHECK(s2 * s2 == Quad(2));
  CHECK((Quad(3) - Quad(2) * s2).sign() == 1);
  CHECK((Quad(1) - s2).sign() == -1);
  CHECK((Quad(3) - Quad(2) * s2).to_double() == Approx(3 - 2 * std::sqrt(2.0)).epsilon(1e-14));
  CHECK_THROWS_AS(s2 + Quad::sqrt_of(3), FieldMismatch);
  CHECK((Quad(1) + s2).inverse() == s2 - Quad(1));
  CHECK(parse_rational("0.25") == Rational(1, 4));
  CHECK(parse_rational("-3/6") == Rational(-1, 2));
  CHECK(parse_rational("1e-3") == Rational(1, 1000));
  CHECK_THROWS_AS(parse_rational("x"), ParseError);
}
