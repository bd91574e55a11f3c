#include <catch_amalgamated.hpp>

#include <random>

#include "flexcircle/circle.hpp"

using namespace flexcircle;
using Catch::Approx;

namespace {

MoebiusR random_sl2(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (;;) {
    double a = u(rng), b = u(rng), c = u(rng), d = u(rng);
    double det = a * d - b * c;
    if (std::abs(det) < 0.2) continue;
    if (det < 0) { b = -b; d = -d; }
    return MoebiusR::normalized({a, b, c, d});
  }
}

// A random element of Homeo_Z(R): Moebius, rotation, or a sine perturbation.
CircleHomeo random_homeo(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> kind(0, 2);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  switch (kind(rng)) {
    case 0: return CircleHomeo::moebius(random_sl2(rng));
    case 1: return CircleHomeo::rotation(u(rng));
    default: {
      double a = u(rng), e = 0.9 * std::uniform_real_distribution<double>(0, 1)(rng);
      return CircleHomeo::from_lift([a, e](double x) { return x + a + e * std::sin(2 * kPi * x) / (2 * kPi); });
    }
  }
}

// Independent long-run translation number: plain iteration, no carry trick.
double oracle_translation(const std::function<double(double)>& F, long n) {
  double x = 0;
  for (long i = 0; i < n; ++i) x = F(x);
  return x / static_cast<double>(n);
}

}  // namespace

TEST_CASE("lifts are degree one and invertible") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 30; ++i) {
    auto f = random_homeo(rng) * random_homeo(rng);
    auto c = check_lift(f, 200);
    CHECK(c.periodicity < 1e-9);
    CHECK(c.inverse < 1e-9);
    CHECK(c.monotone);
    auto g = f.inverse();
    for (double x : {-0.7, 0.1, 2.3}) CHECK(g(f(x)) == Approx(x).margin(1e-9));
  }
  auto s = CircleHomeo::rotation(Rational(1, 3)).shifted(2);
  CHECK(*s.exact_lift(Rational(0)) == Rational(7, 3));
}

TEST_CASE("translation number examples") {
  auto t = translation_number(CircleHomeo::rotation(0.37), 1000);
  CHECK(t.value == 0.37);
  CHECK(t.err == Approx(1e-3));
  auto h = translation_number(CircleHomeo::moebius(hyp(1)), 10000);
  CHECK(std::abs(h.value) <= h.err);
  auto F = [](double x) { return x + 0.3 + 0.1 * std::sin(2 * kPi * x); };
  auto f = CircleHomeo::from_lift(F);
  const long n = 10000;
  auto e = translation_number(f, n);
  CHECK(std::abs(e.value - oracle_translation(F, 100 * n)) <= e.err + 1.0 / (100 * n));
}

TEST_CASE("rotation number examples") {
  CHECK(rotation_number(CircleHomeo::rotation(Rational(2, 7)), 10).value == Approx(2.0 / 7));
  const long n = 100000;
  auto r = rotation_number(CircleHomeo::moebius(rot(2 * kPi / 5)), n);
  CHECK(circle_distance(r.value, 0.2) <= r.err);
  std::mt19937_64 rng(12);
  for (int i = 0; i < 20; ++i) {
    auto f = random_homeo(rng);
    auto r1 = rotation_number(f, n), r5 = rotation_number(f.pow(5), n);
    CHECK(circle_distance(r5.value, 5 * r1.value) <= 6.0 / n);
  }
}

TEST_CASE("homogeneity and conjugation invariance") {
  std::mt19937_64 rng(13);
  const long n = 20000;
  for (int i = 0; i < 20; ++i) {
    auto g = random_homeo(rng), h = random_homeo(rng);
    auto rg = rotation_number(g, n);
    CHECK(circle_distance(rotation_number(h * g * h.inverse(), n).value, rg.value) <= 2.0 / n);
    for (int k : {2, 3}) CHECK(circle_distance(rotation_number(g.pow(k), n).value, k * rg.value) <= (k + 1.0) / n);
  }
}

TEST_CASE("Euler cocycle examples") {
  auto t6 = CircleHomeo::rotation(0.6);
  CHECK(euler_cocycle(t6, t6) == 1);
  CHECK(euler_cocycle(CircleHomeo::identity(), CircleHomeo::identity()) == 0);
  CHECK(euler_cocycle(CircleHomeo::rotation(0.3), CircleHomeo::rotation(0.4)) == 0);
  // exact mode decides a lattice hit, floating mode refuses a near miss
  auto half = CircleHomeo::rotation(Rational(1, 2));
  CHECK(euler_cocycle(half, half) == 1);
  auto near = CircleHomeo::rotation(0.5 + 1e-14);
  CHECK_THROWS_AS(euler_cocycle(near, CircleHomeo::rotation(0.5)), BasepointDegenerate);
}

TEST_CASE("Euler cocycle identity and range") {
  std::mt19937_64 rng(14);
  std::uniform_real_distribution<double> ux(0, 1);
  for (int i = 0; i < 1000; ++i) {
    auto f = random_homeo(rng), g = random_homeo(rng), h = random_homeo(rng);
    double x = ux(rng);
    int a = euler_cocycle(f, g, x), b = euler_cocycle(f * g, h, x);
    int c = euler_cocycle(g, h, x), d = euler_cocycle(f, g * h, x);
    CHECK(a + b == c + d);
    CHECK((a == 0 || a == 1));
  }
}

TEST_CASE("sections land in [x, x+1)") {
  std::mt19937_64 rng(15);
  for (int i = 0; i < 100; ++i) {
    auto f = random_homeo(rng).shifted(7);
    double x = std::uniform_real_distribution<double>(-2, 2)(rng);
    double v = section(f, x)(x);
    CHECK(v >= x);
    CHECK(v < x + 1);
  }
}

TEST_CASE("rot via Euler cocycle") {
  for (int q = 1; q <= 12; ++q)
    for (int p = 0; p < q; ++p) {
      auto e = rot_via_euler(CircleHomeo::rotation(rational(p, q)), 7L * q);
      CHECK(e.value == Approx(static_cast<double>(p) / q).margin(1e-15));
    }
  CHECK(rot_via_euler(CircleHomeo::identity(), 100).value == 0.0);
  std::mt19937_64 rng(16);
  const long n = 20000;
  for (int i = 0; i < 20; ++i) {
    double t = std::uniform_real_distribution<double>(0.1, 6.2)(rng);
    auto g = CircleHomeo::moebius(rot(t).conjugate_by(random_sl2(rng)));
    CHECK(circle_distance(rot_via_euler(g, n).value, rotation_number(g, n).value) <= 2.0 / n + 1.0 / n);
  }
}

TEST_CASE("Matsumoto tau") {
  const long n = 20000;
  auto t = matsumoto_tau(CircleHomeo::rotation(0.3), CircleHomeo::rotation(0.9), n);
  CHECK(std::abs(t.value) <= t.err);
  CHECK(t.lift_independent);
  CHECK(std::abs(matsumoto_tau(CircleHomeo::identity(), CircleHomeo::identity(), n).value) <= 3.0 / n);
  // hyperbolics with crossed axes; oracle from plain iteration at 50x
  auto f = CircleHomeo::moebius(hyp(2)), g = CircleHomeo::moebius(hyp(2).conjugate_by(rot(kPi / 2)));
  auto tf = matsumoto_tau(f, g, n);
  CHECK(tf.lift_independent);
  auto sf = section(f), sg = section(g);
  const long big = 50 * n;
  double o = oracle_translation([&](double x) { return sf(sg(x)); }, big) -
             oracle_translation([&](double x) { return sf(x); }, big) -
             oracle_translation([&](double x) { return sg(x); }, big);
  CHECK(std::abs(tf.value - o) <= tf.err + 3.0 / big);
}

TEST_CASE("tau equals eu minus the coboundary of rot~ o s") {
  std::mt19937_64 rng(17);
  const long n = 20000;
  for (int i = 0; i < 60; ++i) {
    auto f = random_homeo(rng), g = random_homeo(rng);
    double tau = matsumoto_tau(f, g, n).value;
    int eu = euler_cocycle(f, g, 0.0);
    auto trs = [&](const CircleHomeo& h) { return translation_number(section(h), n).value; };
    double cob = trs(f) + trs(g) - trs(f * g);
    CHECK(std::abs(tau - eu + cob) <= 4.0 / n);
  }
}

TEST_CASE("quasimorphism from a lifted action") {
  auto z = Presentation::free(1);
  CircleAction rot23(z, {CircleHomeo::rotation(2.3)});
  CHECK(quasimorphism_from_lift(rot23, z.parse("a")) == -2);
  CHECK(quasimorphism_from_lift(rot23, Word{}) == 0);
  auto f2 = Presentation::free(2);
  // conjugated so that the basepoint 0 is not a fixed point
  auto ga = hyp(2).conjugate_by(rot(0.37)), gb = hyp(2).conjugate_by(rot(0.37 + kPi / 2));
  CircleAction act(f2, {CircleHomeo::moebius(ga), CircleHomeo::moebius(gb)});
  REQUIRE(act.liftable());
  auto ball = enumerate_ball(f2, 3);
  for (auto& u : ball)
    for (auto& v : ball) {
      long d = quasimorphism_unchecked(act, u) + quasimorphism_unchecked(act, v) -
               quasimorphism_unchecked(act, f2.multiply(u, v));
      // eu from s(f)s(g) = T(eu) s(fg), with fg evaluated on the reduced product
      auto sf = section(act.evaluate(u)), sg = section(act.evaluate(v));
      auto sfg = section(act.evaluate(f2.multiply(u, v)));
      long eu = std::lround(sf(sg(0.0)) - sfg(0.0));
      CHECK(d == eu);
      CHECK((d == 0 || d == 1));
    }
  // a relation lifting to a nontrivial translation is rejected
  auto c3 = Presentation::finite_cyclic(3);
  CircleAction tor(c3, {CircleHomeo::rotation(Rational(1, 3))});
  CHECK(tor.relation_translations() == std::vector<long>{1});
  CHECK_THROWS_AS(quasimorphism_from_lift(tor, c3.parse("a")), NotLiftable);
}

TEST_CASE("semi-conjugacy invariant comparison") {
  auto z = Presentation::free(1);
  CircleAction r3(z, {CircleHomeo::rotation(Rational(1, 3))}), r4(z, {CircleHomeo::rotation(Rational(1, 4))});
  auto i3 = semiconj_invariant(r3, 2, 1000), i4 = semiconj_invariant(r4, 2, 1000);
  CHECK_FALSE(compare(i3, i3).distinct);
  auto v = compare(i3, i4);
  CHECK(v.distinct);
  CHECK(v.witness == "a");
  CHECK_THROWS_AS(compare(i3, semiconj_invariant(r4, 3, 1000)), PreconditionFailed);
  // rot entries respect powers
  for (size_t i = 0; i < i3.words.size(); ++i) {
    auto w = z.parse(i3.words[i]);
    double expect = frac01(static_cast<double>(w[0].exp) / 3.0);
    CHECK(circle_distance(i3.rot[i].value, expect) <= i3.rot[i].err);
  }
}
