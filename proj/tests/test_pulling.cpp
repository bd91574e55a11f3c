#include <catch_amalgamated.hpp>

#include "flexcircle/pulling.hpp"
#include "support.hpp"

using namespace flexcircle;
using Catch::Approx;

namespace {

MoebiusX mx(long a, long b, long c, long d) { return MoebiusX(Quad(a), Quad(b), Quad(c), Quad(d)); }

RepX one_gen(const std::string& name, const MoebiusX& g, long order = 0) {
  Presentation p = order ? Presentation::finite_cyclic(order, name) : Presentation::free(1, {name});
  return RepX(p, {g});
}

// Oracle: plain matrix products in long double, independent of Moebius.
long double tr2_oracle(const RepX& rep, const Word& w) {
  long double m[4] = {1, 0, 0, 1};
  for (auto& l : w) {
    const auto& g = rep.image(l.gen).matrix();
    long double x[4] = {g.a.to_double(), g.b.to_double(), g.c.to_double(), g.d.to_double()};
    if (l.exp < 0) {
      std::swap(x[0], x[3]);
      x[1] = -x[1];
      x[2] = -x[2];
    }
    for (long i = 0; i < std::labs(l.exp); ++i) {
      long double r[4] = {m[0] * x[0] + m[1] * x[2], m[0] * x[1] + m[1] * x[3], m[2] * x[0] + m[3] * x[2],
                          m[2] * x[1] + m[3] * x[3]};
      std::copy(r, r + 4, m);
    }
  }
  long double t = m[0] + m[3];
  return t * t;
}

// s c s^-1 = d over A = F(c, d) with rho(d) = S rho(c) S^-1.
RepX hnn_noncentral() {
  Presentation A = Presentation::free(2, {"c", "d"});
  Presentation H = Presentation::hnn(A, Word{{0, 1}}, Word{{1, 1}});
  MoebiusX c(Quad(2), Quad(0), Quad(0), Quad(rational(1, 2))), S = mx(1, 1, 1, 2);
  return RepX(H, {c, c.conjugate_by(S), S});
}

}  // namespace

TEST_CASE("centralizer frames") {
  RepX g2 = genus_two_base();
  MoebiusX k = g2.evaluate(g2.presentation().edge_a());
  auto mu = centralizer_subgroup(k);
  CHECK(mu.kind == ParamKind::Hyperbolic);
  CHECK(mu.conjugator.det() == Quad(1));
  for (long n : {2, 3, 7}) {
    MoebiusX nu = at_exact(mu, Quad(rational(n, 3)));
    CHECK(nu * k == k * nu);
  }
  // k itself lies on the subgroup: P^-1 k P is diagonal
  Mat2<Quad> D = mu.conjugator.adjugate() * k.matrix() * mu.conjugator;
  CHECK(D.is_diagonal());

  auto pm = centralizer_subgroup(mx(1, 0, 3, 1));
  CHECK(pm.kind == ParamKind::Parabolic);
  CHECK(at_exact(pm, Quad(5)) * mx(1, 0, 3, 1) == mx(1, 0, 3, 1) * at_exact(pm, Quad(5)));
  MoebiusR e = rot(1.1).conjugate_by(hyp(0.4) * par(0.3));
  auto em = centralizer_subgroup(e);
  CHECK(em.kind == ParamKind::Elliptic);
  CHECK((one_param(em, 0.5) * e).distance(e * one_param(em, 0.5)) < 1e-12);
  CHECK_THROWS_AS(centralizer_subgroup(MoebiusX()), IdentityInput);
}

TEST_CASE("free pull-apart examples") {
  RepR A(Presentation::free(1, {"a"}), {hyp(1)}), B(Presentation::free(1, {"b"}), {hyp(1)});
  auto same = pull_apart_free(A, B, MoebiusR());
  CHECK(same.image(1).distance(hyp(1)) == 0.0);
  auto r = pull_apart_free(A, B, rot(1));
  CHECK(r.image(0).distance(hyp(1)) == 0.0);
  CHECK(r.image(1).distance(rot(1) * hyp(1) * rot(-1)) < 1e-15);
  CHECK(r.presentation().kind() == Presentation::Kind::FreeProduct);

  // Z/2 * Z/3 with exact elliptic images
  RepX t2 = one_gen("x", mx(0, 1, -1, 0), 2), t3 = one_gen("y", mx(0, -1, 1, 1), 3);
  REQUIRE(t2.orders_exact());
  REQUIRE(t3.orders_exact());
  auto t = pull_apart_free(t2, t3, mx(2, 1, 1, 1));
  CHECK(t.orders_exact());
  CHECK(t.satisfies_relations());
  CHECK(t.image(1) == t3.image(0).conjugate_by(mx(2, 1, 1, 1)));
}

TEST_CASE("free stable pull-apart examples") {
  RepR triv(Presentation::free(0), {});
  auto z = pull_apart_free_stable(triv, hyp(2));
  REQUIRE(z.presentation().rank() == 1);
  CHECK(z.image(0).distance(hyp(2)) == 0.0);
  RepR A(Presentation::free(1, {"a"}), {hyp(1)});
  auto f = pull_apart_free_stable(A, rot(1));
  CHECK(f.image(0).distance(hyp(1)) == 0.0);
  CHECK(f.image(1).distance(rot(1)) == 0.0);
  // rot(1) has rotation number 1/(2 pi): no small-denominator rational nearby
  auto w = indiscreteness_witness(rot(1));
  REQUIRE(w);
  CHECK(w->find("rot =") != std::string::npos);
  CHECK_FALSE(indiscreteness_witness(rot(2 * kPi / 5)));
  CHECK_FALSE(indiscreteness_witness(hyp(1)));
  // exact rotations with rational u have rational trace: provably infinite order
  OneParamSubgroup<Quad> rotations{ParamKind::Elliptic, Mat2<Quad>::identity()};
  auto we = indiscreteness_witness(at_exact(rotations, Quad(rational(1, 2))));
  REQUIRE(we);
  CHECK(we->find("rational trace") != std::string::npos);
  CHECK_FALSE(indiscreteness_witness(at_exact(rotations, Quad(1))));
}

TEST_CASE("amalgam pull-apart functoriality and well-definedness") {
  RepX base = genus_two_base();
  REQUIRE(base.satisfies_relations());
  auto fam = amalgam_family(base);
  const Presentation& L = fam.presentation();
  CHECK(fam.evidence.size() == 2);
  CHECK(fam.evidence[0].find(" 0 with") != std::string::npos);

  CHECK(pull_apart_amalgam(fam, MoebiusX()).images() == base.images());
  MoebiusX nu = at_exact(fam.mu, Quad(rational(5, 2)));
  RepX def = pull_apart_amalgam(fam, nu);
  CHECK(def.satisfies_relations());
  for (auto& w : enumerate_ball(L, 3)) {
    if (detail::all_in_factor(L, w, 0)) CHECK(def.evaluate(w) == base.evaluate(w));
    if (detail::all_in_factor(L, w, 1)) CHECK(def.evaluate(w) == base.evaluate(w).conjugate_by(nu));
  }
  // sampled Q-words move
  auto Q = sample_q_words(fam, 4, 10);
  long moved = 0;
  for (auto& q : Q) moved += def.evaluate(q).tr2() != base.evaluate(q).tr2();
  CHECK(moved == static_cast<long>(Q.size()));
  CHECK_THROWS_AS(pull_apart_amalgam(fam, mx(1, 1, 0, 1)), ParameterNotInCentralizer);
  CHECK_THROWS_AS(pull_apart_hnn(fam, nu), PreconditionFailed);
}

TEST_CASE("HNN pull-apart") {
  // s centralizes C
  Presentation A = Presentation::free(2, {"a", "c"});
  Presentation H = Presentation::hnn(A, Word{{1, 1}}, Word{{1, 1}});
  MoebiusX c(Quad(2), Quad(0), Quad(0), Quad(rational(1, 2))), s(Quad(3), Quad(0), Quad(0), Quad(rational(1, 3)));
  RepX base(H, {mx(2, 1, 1, 1), c, s});
  auto fam = hnn_family(base);
  CHECK(fam.stable_in_centralizer());
  CHECK(pull_apart_hnn(fam, MoebiusX()).images() == base.images());
  MoebiusX nu = at_exact(fam.mu, Quad(7));
  RepX def = pull_apart_hnn(fam, nu);
  CHECK(def.image(2) == s * nu);
  CHECK(def.satisfies_relations());

  // C and C^s not conjugate in A
  RepX b2 = hnn_noncentral();
  auto f2 = hnn_family(b2);
  CHECK_FALSE(f2.stable_in_centralizer());
  CHECK(f2.evidence[0].find("asserted") != std::string::npos);
  RepX d2 = pull_apart_hnn(f2, at_exact(f2.mu, Quad(rational(3, 2))));
  const Presentation& P = d2.presentation();
  CHECK(d2.evaluate(P.parse("s c s^-1")) == d2.evaluate(P.parse("d")));
  CHECK(d2.satisfies_relations());

  // elliptic edge group with an irrational rotation parameter
  OneParamSubgroup<Quad> rotations{ParamKind::Elliptic, Mat2<Quad>::identity()};
  MoebiusX ce = at_exact(rotations, Quad(rational(1, 3)));
  RepX b3(H, {mx(2, 1, 1, 1), ce, ce});
  auto f3 = hnn_family(b3);
  CHECK(f3.mu.kind == ParamKind::Elliptic);
  MoebiusX nue = at_exact(f3.mu, Quad(rational(2, 7)));
  CHECK(pull_apart_hnn(f3, nue).satisfies_relations());
  auto notes = deformation_notes(f3, nue);
  CHECK(std::any_of(notes.begin(), notes.end(), [](auto& n) { return n.find("indiscreteness") != std::string::npos; }));
  CHECK_THROWS_AS(pull_apart_hnn(fam, mx(1, 1, 0, 1)), ParameterNotInCentralizer);
}

TEST_CASE("find_avoiding_parameter examples") {
  RepX A = one_gen("a", mx(2, 1, 1, 1)), B = one_gen("b", mx(1, 1, 1, 2));
  RepX V = pull_apart_free(A, B, MoebiusX());
  auto mu = choose_free_subgroup(V, 3);
  auto fam = free_family(A, B, mu);
  const Presentation& p = fam.presentation();
  AvoidanceProblem prob;
  prob.Q = {p.parse("a b")};
  auto res = find_avoiding_parameter(fam, prob);
  REQUIRE(res.certificate.ok());
  double t2 = res.rep.to_real().evaluate(p.parse("a b")).tr2();
  CHECK(std::abs(t2 - 4) > prob.tol);
  CHECK(res.certificate.entries.size() == 1);
  CHECK(res.certificate.entries[0].w == "4");

  AvoidanceProblem bad;
  bad.Q = {p.parse("a b a^-1")};
  CHECK_THROWS_AS(find_avoiding_parameter(fam, bad), PreconditionFailed);
  CHECK_THROWS_AS(find_avoiding_parameter(fam, AvoidanceProblem{}), PreconditionFailed);

  // C^s = C with s inverting c, misasserted as a valid branch
  Presentation Ac = Presentation::free(2, {"a", "c"});
  Presentation H = Presentation::hnn(Ac, Word{{1, 1}}, Word{{1, -1}});
  MoebiusX c(Quad(2), Quad(0), Quad(0), Quad(rational(1, 2)));
  RepX inv(H, {mx(2, 1, 1, 1), c, mx(0, 1, -1, 0)});
  auto fi = hnn_family(inv, {}, true);
  CHECK(fi.evidence[0].find("contradicted") != std::string::npos);
  AvoidanceProblem sq;
  sq.Q = {H.parse("s^2")};
  CHECK_THROWS_AS(find_avoiding_parameter(fi, sq), ConstantTrace);

  DeformationFamily<double> flt;
  CHECK_THROWS_AS(find_avoiding_parameter(flt, prob), ExactModeRequired);
}

TEST_CASE("avoidance soundness on the genus-2 job") {
  auto fam = amalgam_family(genus_two_base());
  AvoidanceProblem prob;
  prob.Q = sample_q_words(fam, 4, 25);
  REQUIRE(prob.Q.size() == 25);
  Quad r3 = Quad::sqrt_of(3);
  for (long w : {0, 1, 2, 3, 5, 9, 16, 25, 36}) prob.W.push_back(Quad(w));
  prob.W.push_back(Quad(7) + Quad(4) * r3);
  auto res = find_avoiding_parameter(fam, prob);
  const auto& cert = res.certificate;
  REQUIRE(cert.ok());
  CHECK(cert.entries.size() == 25 * 11);
  CHECK(res.rep.satisfies_relations());
  std::vector<Quad> W = prob.W;
  W.push_back(Quad(4));
  for (auto& q : prob.Q) {
    long double v = tr2_oracle(res.rep, q);
    for (auto& w : W) CHECK(std::abs(static_cast<double>(v) - w.to_double()) > prob.tol);
    // the trace polynomial at the chosen parameter is the trace of rho_nu(q)
    auto tp = trace_polynomial(word_template(fam, q), fam.mu);
    Quad t = tp(cert.z);
    CHECK(t * t == res.rep.evaluate(q).tr2());
  }
  for (auto& e : cert.entries) {
    CHECK(e.gap >= cert.margin);
    for (auto& r : e.roots) CHECK((cert.z.a() < r.z.lo || cert.z.a() > r.z.hi));
  }
}

TEST_CASE("lifting deformations") {
  RepX base = genus_two_base();
  auto fam = amalgam_family(base, {}, 0);
  auto lb = lift_representation(base);
  auto same = lift_deformation(lb, fam, MoebiusX(), 0);
  CHECK(same.shifts == lb.shifts);
  CHECK(same.projected.images() == base.images());

  MoebiusX nu = at_exact(fam.mu, Quad(3));
  for (long off : {0, 1, -2}) {
    auto ld = lift_deformation(lb, fam, nu, off);
    CHECK(ld.relation_translations == std::vector<long>{0});
    RepX def = deform(fam, nu);
    CHECK(ld.projected.images() == def.images());
    // the lift projects to the boundary action of the deformed image
    for (int i = 0; i < 4; ++i)
      for (double x : {0.05, 0.4, 0.77})
        CHECK(circle_distance(frac01(ld.lift(i)(x)), boundary_action(def.image(i), x)) < 1e-12);
  }

  // free groups lift for every offset
  RepX A = one_gen("a", mx(2, 1, 1, 1));
  OneParamSubgroup<Quad> diag{ParamKind::Hyperbolic, Mat2<Quad>::identity()};
  auto fs = free_stable_family(A, diag);
  auto l0 = lift_representation(fs.base);
  for (long off : {-1, 0, 3}) {
    auto l = lift_deformation(l0, fs, at_exact(diag, Quad(2)), off);
    CHECK(l.shifts[1] == off);
    CHECK(l.relation_translations.empty());
  }
}

TEST_CASE("quasimorphism of a lifted representation at a fixed basepoint") {
  RepX base = genus_two_base();
  auto lb = lift_representation(base);
  auto act = lb.action();
  const Presentation& p = act.presentation();
  // b a fixes the boundary point 0, so the float lift value is only near an integer
  Word ba = p.parse("b a");
  CHECK(is_zero(base.evaluate(ba).matrix().c));
  CHECK_THROWS_AS(quasimorphism_unchecked(act, ba), BasepointDegenerate);
  CHECK(quasimorphism_from_lift(lb, ba) == 0);
  auto ball = enumerate_ball(p, 2);
  for (auto& u : ball)
    for (auto& v : ball) {
      Word uv = p.multiply(u, v);
      long d = quasimorphism_from_lift(lb, u) + quasimorphism_from_lift(lb, v) - quasimorphism_from_lift(lb, uv);
      CHECK(d == testsupport::euler0(lb, act, u, v));
      CHECK((d == 0 || d == 1));
    }
}

TEST_CASE("punctured torus representations") {
  auto cusp = punctured_torus_rep(Rational(-2));
  CHECK(cusp.tra == 3);
  CHECK(cusp.trb == 3);
  CHECK(cusp.trab == 3);
  REQUIRE(cusp.exact);
  const auto& E = *cusp.exact;
  // oracle: the trace identity with the exact traces
  Quad x = E.image(0).tr(), y = E.image(1).tr(), z = E.evaluate(E.presentation().parse("a b")).tr();
  CHECK(x * x + y * y + z * z - x * y * z - Quad(2) == Quad(-2));
  CHECK(detail::commutator_trace(E.image(0).matrix(), E.image(1).matrix()) == Quad(-2));
  CHECK_THROWS_AS(punctured_torus_rep(Rational(2)), PreconditionFailed);
  CHECK_THROWS_AS(punctured_torus_rep(2.0), PreconditionFailed);

  double target = -2 * std::cos(kPi / 7);
  auto t7 = punctured_torus_rep(target);
  CHECK(t7.commutator_trace == Approx(target).margin(1e-9));
  MoebiusR k = commutator(t7.rep.image(0), t7.rep.image(1));
  const long n = 100000;
  auto r = rotation_number(CircleHomeo::moebius(k), n);
  CHECK(circle_distance(r.value, 1.0 / 7) <= r.err + 2.0 / n);
}

TEST_CASE("continuity along the subgroup") {
  auto fam = amalgam_family(genus_two_base(), {}, 0);
  auto Q = sample_q_words(fam, 4, 6);
  double prev_step = INFINITY;
  for (long n : {4, 8, 16}) {
    double step = 0;
    std::vector<double> last;
    for (long k = 0; k <= n; ++k) {
      RepX def = deform(fam, at_exact(fam.mu, Quad(1 + rational(k, n))));
      CHECK(def.satisfies_relations());
      RepR rr = def.to_real();
      std::vector<double> cur;
      for (auto& q : Q) cur.push_back(rr.evaluate(q).tr2());
      for (size_t i = 0; i < last.size(); ++i) step = std::max(step, std::abs(cur[i] - last[i]));
      last = cur;
    }
    CHECK(step < prev_step);
    prev_step = step;
  }
}
