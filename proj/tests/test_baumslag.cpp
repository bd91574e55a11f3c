#include <catch_amalgamated.hpp>

#include <algorithm>
#include <random>

#include "flexcircle/baumslag.hpp"
#include "support.hpp"

using namespace flexcircle;
using Catch::Approx;

namespace {

OneParamSubgroup<Quad> hyperbolic() { return {ParamKind::Hyperbolic, Mat2<Quad>::identity()}; }
OneParamSubgroup<Quad> parabolic() { return {ParamKind::Parabolic, Mat2<Quad>::identity()}; }
OneParamSubgroup<Quad> elliptic() { return {ParamKind::Elliptic, Mat2<Quad>::identity()}; }

Mat2<Quad> M(long a, long b, long c, long d) { return {Quad(a), Quad(b), Quad(c), Quad(d)}; }

// exact parameter of mu(t)
double exact_param(ParamKind k, double t) {
  switch (k) {
    case ParamKind::Hyperbolic: return std::exp(t / 2);
    case ParamKind::Parabolic: return t;
    case ParamKind::Elliptic: return std::tan(t / 4);
  }
  return t;
}

}  // namespace

TEST_CASE("trace polynomial examples") {
  CHECK(trace_polynomial(WordTemplate::power(1), hyperbolic()).p.str() == "1 -1; 1 1");
  WordTemplate t{{{M(1, 1, 1, 2), 1}}};
  CHECK(trace_polynomial(t, hyperbolic()).p.str() == "2 -1; 1 1");
  WordTemplate sw{{{M(0, 1, -1, 0), 1}}};
  auto c = trace_polynomial(sw, hyperbolic());
  CHECK(c.is_constant());
  CHECK(c.p.is_zero_poly());
  CHECK_FALSE(fix_disjoint(sw, hyperbolic()));
  CHECK(fix_disjoint(t, hyperbolic()));
  CHECK(trace_polynomial(WordTemplate::power(2), parabolic()).p.str() == "2 0");
  // elliptic: tr Rot(t) = 2 cos(t/2) = 2 (1-u^2)/(1+u^2)
  auto e = trace_polynomial(WordTemplate::power(1), elliptic());
  CHECK(e.denom_power == 1);
  CHECK(e(std::tan(0.3)) == Approx(2 * std::cos(0.6)));
  WordTemplate bad{{{M(1, 1, 1, 2), 0}}};
  CHECK_THROWS_AS(trace_polynomial(bad, hyperbolic()), ValidationError);
}

TEST_CASE("trace polynomial agrees with matrix products") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> ut(-2.0, 2.0);
  for (auto kind : {ParamKind::Hyperbolic, ParamKind::Parabolic, ParamKind::Elliptic}) {
    for (int i = 0; i < 100; ++i) {
      auto tmpl = testsupport::random_template(rng);
      OneParamSubgroup<Quad> mu{kind, testsupport::random_sl2z(rng)};
      auto tp = trace_polynomial(tmpl, mu);
      for (int j = 0; j < 20; ++j) {
        double t = ut(rng);
        long double lt = t;
        double want = static_cast<double>(template_trace_numeric(tmpl, to_double(mu), lt));
        double got = static_cast<double>(tp(static_cast<long double>(exact_param(kind, t))));
        CHECK(std::abs(got - want) <= 1e-12 * std::max(1.0, std::abs(want)));
      }
    }
  }
}

TEST_CASE("solve trace equation examples") {
  WordTemplate t{{{M(1, 1, 1, 2), 1}}};
  auto tp = trace_polynomial(t, hyperbolic());
  auto r = solve_trace_equation(tp, Quad(9));
  REQUIRE(r.distinct() == 2);
  CHECK(r.roots[0].z.exact());
  CHECK(r.roots[0].z.lo == 1);
  CHECK(r.roots[1].z.lo == 2);
  CHECK(r.roots[1].t_lo == Approx(2 * std::log(2.0)));
  // on the whole line the sign flips z -> -z give the same elements again
  CHECK(solve_trace_equation(tp, Quad(9), RootDomain::RealLine).distinct() == 4);
  auto id = solve_trace_equation(trace_polynomial(WordTemplate::power(1), hyperbolic()), Quad(4));
  REQUIRE(id.distinct() == 1);
  CHECK(id.roots[0].z.lo == 1);
  CHECK(id.roots[0].z.multiplicity == 2);
  WordTemplate sw{{{M(0, 1, -1, 0), 1}}};
  CHECK_THROWS_AS(solve_trace_equation(trace_polynomial(sw, hyperbolic()), Quad(0)), ConstantTrace);
  // elliptic: tr^2 Rot(t) = 2 at t = +-pi/2 only, u in (-1, 1]
  auto e = solve_trace_equation(trace_polynomial(WordTemplate::power(1), elliptic()), Quad(2));
  REQUIRE(e.distinct() == 2);
  CHECK(e.roots[0].t_lo == Approx(-kPi / 2).margin(1e-9));
  CHECK(e.roots[1].t_lo == Approx(kPi / 2).margin(1e-9));
  // parabolic tr p(t) g = 2 + t c for g = [[1,0],[c,1]]
  WordTemplate pg{{{M(1, 0, 3, 1), 1}}};
  auto p = solve_trace_equation(trace_polynomial(pg, parabolic()), Quad(16));
  REQUIRE(p.distinct() == 2);
  CHECK(p.roots[0].z.lo == -2);
  CHECK(p.roots[1].z.lo == Rational(2, 3));
}

TEST_CASE("root counts match a sign scan") {
  std::mt19937_64 rng(32);
  std::uniform_int_distribution<int> ux(1, 400);
  for (int i = 0; i < 100; ++i) {
    auto tmpl = testsupport::random_template(rng);
    auto tp = trace_polynomial(tmpl, hyperbolic());
    Rational x = rational(ux(rng), 7);
    auto rep = solve_trace_equation(tp, Quad(x), RootDomain::RealLine);
    long odd = 0;
    for (auto& r : rep.roots) odd += r.z.multiplicity % 2;
    // roots lie in 1/B' < |z| < B for the bounds of q and of its reversal
    auto rc = rep.equation.coeffs();
    std::reverse(rc.begin(), rc.end());
    double B = std::max(cauchy_bound(rep.equation).get_d(), cauchy_bound(QPoly(rc)).get_d());
    CHECK(testsupport::sign_scan(tmpl, x.get_d(), B, 100000) == odd);
  }
}

TEST_CASE("escape thresholds") {
  auto p = QLaurent::z() + QLaurent::monomial(Quad(2), -1);
  auto e = escape_threshold(p, 10);
  CHECK(e.large);
  CHECK(e.small);
  CHECK(e.M == Approx(12));
  for (double z : {e.M * 1.0001, 40.0, 1e4, 1 / (e.M * 1.0001), 1e-4}) CHECK(std::abs(p(z)) > 10);
  auto q = escape_threshold(QLaurent::z(), 1);
  CHECK(q.large);
  CHECK_FALSE(q.small);
  CHECK(q.M == Approx(1));
  CHECK_THROWS_AS(escape_threshold(QLaurent::constant(Quad(3)), 1), ConstantTrace);
  // random templates: sampled escape
  std::mt19937_64 rng(33);
  for (int i = 0; i < 50; ++i) {
    auto tp = trace_polynomial(testsupport::random_template(rng), hyperbolic());
    if (tp.is_constant()) continue;
    auto t = escape_threshold(tp.p, 25);
    for (double s : {1.01, 2.0, 10.0}) {
      if (t.large) CHECK(std::abs(static_cast<double>(tp(static_cast<long double>(s * t.M)))) > 25);
      if (t.small) CHECK(std::abs(static_cast<double>(tp(static_cast<long double>(1 / (s * t.M))))) > 25);
    }
  }
}

TEST_CASE("ping-pong certificates") {
  // exp(t) with g = Rot(pi/2)
  OneParamSubgroup<double> h{ParamKind::Hyperbolic, Mat2<double>::identity()};
  auto fam = PingPongFamily::from_subgroup(h);
  auto cert = certify_pingpong({fam}, {rot(kPi / 2)});
  CHECK(cert.M > 0);
  CHECK(cert.M < 1e3);
  CHECK(!cert.evidence.empty());
  // parabolic p(t), g = [[1,0],[1,1]] fixing 0
  OneParamSubgroup<double> p{ParamKind::Parabolic, Mat2<double>::identity()};
  auto pc = certify_pingpong({PingPongFamily::from_subgroup(p)}, {MoebiusR(1, 0, 1, 1)});
  CHECK(pc.M > 0);
  // g swapping the fixed points violates the precondition
  CHECK_THROWS_AS(certify_pingpong({fam}, {MoebiusR(0, 1, -1, 0)}), PreconditionFailed);
  CHECK_THROWS_AS(certify_pingpong({fam}, {MoebiusR(2, 0, 0, 0.5)}), PreconditionFailed);
}

TEST_CASE("ping-pong soundness spot check") {
  std::mt19937_64 rng(34);
  OneParamSubgroup<double> h{ParamKind::Hyperbolic, Mat2<double>::identity()};
  for (int trial = 0; trial < 5; ++trial) {
    auto tmpl = testsupport::random_template(rng);
    auto [fams, gs] = template_pingpong(tmpl, h);
    auto cert = certify_pingpong(fams, gs);
    auto inside = [](const std::vector<Arc>& U, double x) {
      for (auto& u : U)
        if (u.contains(x)) return true;
      return false;
    };
    std::uniform_real_distribution<double> ux(0, 1), us(1, 3);
    int checked = 0;
    while (checked < 1000) {
      double x = ux(rng);
      if (inside(cert.attract_minus, x)) continue;
      ++checked;
      for (int j = 0; j < 10; ++j) {
        double t = cert.M * us(rng) * (j % 2 ? -1 : 1);
        double y = frac01(boundary_lift(lift_representative(pingpong_word(fams, gs, t)), x));
        CHECK(inside(cert.attract_plus, y));
      }
    }
  }
}

TEST_CASE("nested commutator of parabolics has constant trace") {
  auto nu = NuWord::nu();
  Mat2<Quad> g1 = M(1, 1, 0, 1), g2 = M(1, 2, 0, 1);
  auto conj = [&](const Mat2<Quad>& g) { return NuWord::g(g) * nu * NuWord::g(g.adjugate()); };
  auto f = NuWord::commutator(NuWord::commutator(nu, conj(g1)), NuWord::commutator(nu, conj(g2)));
  auto tmpl = f.fold();
  REQUIRE(tmpl.size() > 0);
  auto tp = trace_polynomial(tmpl, hyperbolic());
  CHECK(tp.is_constant());
  CHECK(tp.p.str() == "2 0");
  CHECK_THROWS_AS(solve_trace_equation(tp, Quad(4)), ConstantTrace);
  CHECK_THROWS_AS(escape_threshold(tp.p, 10), ConstantTrace);
  // the word is the identity element for every t
  OneParamSubgroup<double> h{ParamKind::Hyperbolic, Mat2<double>::identity()};
  for (double t : {0.3, 1.7, -2.2}) CHECK(std::abs(template_trace_numeric(tmpl, h, t)) == Approx(2.0));
  // each g_i moves only one point of Fix mu, so the weak condition holds
  CHECK_FALSE(fix_disjoint(tmpl, hyperbolic()));
}
