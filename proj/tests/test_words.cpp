#include <catch_amalgamated.hpp>

#include <random>
#include <set>

#include "flexcircle/representation.hpp"
#include "flexcircle/words.hpp"

using namespace flexcircle;

namespace {

Presentation z2_z3() {
  return Presentation::free_product(Presentation::finite_cyclic(2, "a"), Presentation::finite_cyclic(3, "b"));
}

MoebiusX ex(long p, long q, long r, long s) { return MoebiusX(Quad(p), Quad(q), Quad(r), Quad(s)); }

// Brute-force element set: evaluate words under a faithful-enough exact rep and
// collect distinct matrices.
template <class T>
std::set<std::string> image_keys(const Representation<T>& rep, const std::vector<Word>& ws) {
  std::set<std::string> keys;
  for (auto& w : ws) {
    auto g = rep.evaluate(w);
    keys.insert(scalar_str(g.a()) + "," + scalar_str(g.b()) + "," + scalar_str(g.c()) + "," + scalar_str(g.d()));
  }
  return keys;
}

Word random_word(std::mt19937_64& rng, int rank, int len) {
  std::uniform_int_distribution<int> g(0, rank - 1), e(-2, 2);
  Word w;
  for (int i = 0; i < len; ++i) {
    int x = e(rng);
    if (x == 0) x = 1;
    w.push_back({g(rng), x});
  }
  return w;
}

}  // namespace

TEST_CASE("free and cyclic reduction") {
  auto F2 = Presentation::free(2);
  CHECK(F2.format(freely_reduce(F2.parse("a b b^-1 a"))) == "a^2");
  CHECK(freely_reduce(Word{}).empty());
  auto cr = cyclically_reduce(F2.parse("b a b^-1"), F2);
  CHECK(F2.format(cr.core) == "a");
  CHECK(F2.format(cr.conjugator) == "b");
  auto cr2 = cyclically_reduce(F2.parse("a b a"), F2);
  CHECK(F2.format(cr2.core) == "b a^2");
  CHECK(F2.multiply(F2.multiply(cr2.conjugator, cr2.core), F2.inverse(cr2.conjugator)) == F2.parse("a b a"));
}

TEST_CASE("cyclic reduction conjugator identity on random words") {
  std::mt19937_64 rng(7);
  auto F2 = Presentation::free(2);
  auto P = z2_z3();
  for (int i = 0; i < 300; ++i) {
    for (auto* p : {&F2, &P}) {
      Word w = p->reduce(random_word(rng, 2, 8));
      auto cr = cyclically_reduce(w, *p);
      CHECK(p->multiply(p->multiply(cr.conjugator, cr.core), p->inverse(cr.conjugator)) == w);
      if (cr.core.size() >= 2) CHECK(cr.core.front().gen != cr.core.back().gen);
    }
  }
}

TEST_CASE("word parsing and formatting") {
  auto F2 = Presentation::free(2);
  CHECK(F2.format(F2.parse("a b^-2 a")) == "a b^-2 a");
  CHECK(F2.parse("1").empty());
  CHECK_THROWS_AS(F2.parse("a c"), UnknownGenerator);
  CHECK_THROWS_AS(F2.parse("a^x"), ParseError);
  auto P = z2_z3();
  CHECK(P.format(P.parse("a^3 b^-1")) == "a b^2");
}

TEST_CASE("ball examples") {
  auto F1 = Presentation::free(1);
  auto b = enumerate_ball(F1, 2);
  std::vector<std::string> s;
  for (auto& w : b) s.push_back(F1.format(w));
  CHECK(s == std::vector<std::string>{"1", "a", "a^-1", "a^2", "a^-2"});
  CHECK(enumerate_ball(Presentation::free(2), 1).size() == 5);
  auto P = z2_z3();
  std::vector<std::string> t;
  for (auto& w : enumerate_ball(P, 2)) t.push_back(P.format(w));
  CHECK(t == std::vector<std::string>{"1", "a", "b", "b^2", "a b", "a b^2", "b a", "b^2 a"});
}

TEST_CASE("free ball sizes match the closed form") {
  for (int n = 1; n <= 3; ++n)
    for (int R = 0; R <= 4; ++R) {
      auto ball = enumerate_ball(Presentation::free(n), R);
      CHECK(static_cast<double>(ball.size()) == free_ball_size(n, R));
    }
  CHECK_THROWS_AS(enumerate_ball(Presentation::free(3), 30), BallTooLarge);
}

TEST_CASE("Z/2 * Z/3 ball matches brute force through the modular group") {
  // a -> S, b -> ST generate PSL2(Z) faithfully
  auto P = z2_z3();
  RepX rep(P, {ex(0, -1, 1, 0), ex(0, -1, 1, 1)});
  REQUIRE(rep.orders_exact());
  for (int R = 1; R <= 6; ++R) {
    auto ball = enumerate_ball(P, R);
    CHECK(image_keys(rep, ball).size() == ball.size());
  }
}

TEST_CASE("evaluate") {
  auto Z = Presentation::free(1);
  MoebiusX e(Quad(2), Quad(0), Quad(0), Quad(Rational(1, 2)));
  RepX rep(Z, {e});
  CHECK(rep.evaluate(Z.parse("a^2")) == MoebiusX(Quad(4), Quad(0), Quad(0), Quad(Rational(1, 4))));
  CHECK(rep.evaluate({}).is_identity());
  RepR r3(Presentation::finite_cyclic(3), {rot(2 * kPi / 3)});
  CHECK(r3.evaluate({{0, 3}}).distance(MoebiusR()) < 1e-12);
  CHECK(r3.satisfies_relations());
  CHECK_THROWS_AS(rep.evaluate({{1, 1}}), UnknownGenerator);
}

TEST_CASE("evaluate is a homomorphism on a radius-3 ball") {
  auto F2 = Presentation::free(2);
  RepX rep(F2, {ex(2, 1, 1, 1), ex(1, 1, 1, 2)});
  auto ball = enumerate_ball(F2, 3);
  for (size_t i = 0; i < ball.size(); i += 3)
    for (size_t j = 0; j < ball.size(); j += 5)
      CHECK(rep.evaluate(F2.multiply(ball[i], ball[j])) == rep.evaluate(ball[i]) * rep.evaluate(ball[j]));
}

TEST_CASE("HNN normal form examples") {
  auto A = Presentation::free(2);
  // s a s^-1 = b
  auto H = Presentation::hnn(A, A.parse("a"), A.parse("b"), "s");
  CHECK(H.format(hnn_normal_form(H.parse("s a s^-1"), H)) == "b");
  CHECK(H.format(hnn_normal_form(H.parse("s a^2 s^-1"), H)) == "b^2");
  CHECK(H.format(hnn_normal_form(H.parse("s b s^-1"), H)) == "s b s^-1");
  CHECK(H.format(hnn_normal_form(H.parse("s^-1 b s"), H)) == "a");
  CHECK(H.format(hnn_normal_form(H.parse("b s^-1 b^-3 s a"), H)) == "b a^-2");
}

namespace {
// Exact rep of the HNN extension <a,b,s | s a s^-1 = b>: a, b conjugate hyperbolics.
RepX hnn_rep(const Presentation& H) {
  MoebiusX a = ex(2, 1, 1, 1), s = ex(1, 1, 1, 2);
  MoebiusX b = a.conjugate_by(s);
  return RepX(H, {a, b, s});
}
}  // namespace

TEST_CASE("HNN normal form is idempotent and preserves the image") {
  auto A = Presentation::free(2);
  auto H = Presentation::hnn(A, A.parse("a"), A.parse("b"), "s");
  auto rep = hnn_rep(H);
  REQUIRE(rep.satisfies_relations());
  std::mt19937_64 rng(8);
  for (int i = 0; i < 300; ++i) {
    Word w = H.reduce(random_word(rng, 3, 10));
    Word n = hnn_normal_form(w, H);
    CHECK(hnn_normal_form(n, H) == n);
    CHECK(rep.evaluate(n) == rep.evaluate(w));
    Word c = canonical_form(w, H);
    CHECK(rep.evaluate(c) == rep.evaluate(w));
    CHECK(canonical_form(c, H) == c);
  }
}

TEST_CASE("amalgam canonical form is a class function of the element") {
  // genus two: <a,b> *_{[a,b]=[c,d]} <c,d>
  auto A = Presentation::free(2, {"a", "b"}), B = Presentation::free(2, {"c", "d"});
  auto L = Presentation::amalgam(A, B, A.parse("a b a^-1 b^-1"), B.parse("c d c^-1 d^-1"));
  REQUIRE(L.format(L.edge_b()) == "c d c^-1 d^-1");
  std::mt19937_64 rng(9);
  for (int i = 0; i < 300; ++i) {
    Word w = L.reduce(random_word(rng, 4, 8));
    Word c = canonical_form(w, L);
    CHECK(canonical_form(c, L) == c);
    // multiplying by the relator does not change the canonical form
    Word rel = L.relators()[0];
    std::uniform_int_distribution<size_t> pos(0, w.size());
    size_t k = pos(rng);
    Word w2(w.begin(), w.begin() + static_cast<long>(k));
    w2.insert(w2.end(), rel.begin(), rel.end());
    w2.insert(w2.end(), w.begin() + static_cast<long>(k), w.end());
    CHECK(canonical_form(w2, L) == c);
  }
  CHECK(canonical_form(L.parse("c d c^-1 d^-1"), L) == L.parse("a b a^-1 b^-1"));
}

TEST_CASE("HNN canonical form absorbs inserted relators") {
  auto A = Presentation::free(2);
  auto H = Presentation::hnn(A, A.parse("a"), A.parse("b"), "s");
  std::mt19937_64 rng(10);
  Word rel = H.relators()[0];
  for (int i = 0; i < 300; ++i) {
    Word w = H.reduce(random_word(rng, 3, 8));
    Word c = canonical_form(w, H);
    std::uniform_int_distribution<size_t> pos(0, w.size());
    size_t k = pos(rng);
    Word w2(w.begin(), w.begin() + static_cast<long>(k));
    w2.insert(w2.end(), rel.begin(), rel.end());
    w2.insert(w2.end(), w.begin() + static_cast<long>(k), w.end());
    CHECK(canonical_form(w2, H) == c);
  }
}

TEST_CASE("amalgam ball has one word per element") {
  auto A = Presentation::free(2, {"a", "b"}), B = Presentation::free(2, {"c", "d"});
  auto L = Presentation::amalgam(A, B, A.parse("a b a^-1 b^-1"), B.parse("c d c^-1 d^-1"));
  auto ball = enumerate_ball(L, 4);
  auto free_ball = enumerate_ball(Presentation::free(4), 4);
  // u = v with |u|, |v| <= 4 forces u v^-1 to be a cyclic conjugate of the
  // relator or its inverse: 16 such words, 8 unordered pairs
  CHECK(ball.size() == free_ball.size() - 8);
}

TEST_CASE("elliptic conjugacy set membership") {
  auto A = Presentation::free(2, {"a", "b"}), B = Presentation::free(2, {"c", "d"});
  auto L = Presentation::amalgam(A, B, A.parse("a b a^-1 b^-1"), B.parse("c d c^-1 d^-1"));
  CHECK(in_elliptic_conjugacy_set(L.parse("c a c^-1"), L));
  CHECK(in_elliptic_conjugacy_set(L.parse("d c a b c^-1 d^-1"), L));
  CHECK_FALSE(in_elliptic_conjugacy_set(L.parse("a c"), L));
  // a b a^-1 b^-1 c = c' c with c' in B: lies in B
  CHECK(in_elliptic_conjugacy_set(L.parse("a b a^-1 b^-1 c"), L));
  auto P = z2_z3();
  CHECK_FALSE(in_elliptic_conjugacy_set(P.parse("a b"), P));
  CHECK(in_elliptic_conjugacy_set(P.parse("a b a"), P));
  auto H = Presentation::hnn(Presentation::free(2), Presentation::free(2).parse("a"),
                             Presentation::free(2).parse("b"), "s");
  CHECK_FALSE(in_elliptic_conjugacy_set(H.parse("s"), H));
  CHECK(in_elliptic_conjugacy_set(H.parse("s a s^-1"), H));
  CHECK(in_elliptic_conjugacy_set(H.parse("s^-1 a b s"), H));
  CHECK(in_elliptic_conjugacy_set(H.parse("a s^-1 b s"), H));
  CHECK_FALSE(in_elliptic_conjugacy_set(H.parse("a s b s^-1"), H));
  CHECK_THROWS_AS(in_elliptic_conjugacy_set(Word{}, Presentation::free(2)), PreconditionFailed);
}

TEST_CASE("presentation validation") {
  CHECK_THROWS_AS(Presentation::free_product(Presentation::free(1), Presentation::free(1)), ValidationError);
  auto A = Presentation::free(1);
  auto H = Presentation::hnn(A, A.parse("a"), A.parse("a^2"));
  CHECK_THROWS_AS(Presentation::hnn(H, A.parse("a"), A.parse("a")), UnsupportedVertexGroup);
  CHECK_THROWS_AS(Presentation::amalgam(A, Presentation::free(1, {"b"}), Word{}, Word{{0, 1}}), ValidationError);
}
