#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "flexcircle/baumslag.hpp"
#include "flexcircle/circle.hpp"
#include "flexcircle/errors.hpp"
#include "flexcircle/moebius.hpp"
#include "flexcircle/parallel.hpp"
#include "flexcircle/representation.hpp"
#include "flexcircle/words.hpp"

namespace flexcircle {

enum class Structure { FreeConjugate, FreeStable, Amalgam, HNN };

inline const char* structure_name(Structure s) {
  switch (s) {
    case Structure::FreeConjugate: return "free";
    case Structure::FreeStable: return "free-stable";
    case Structure::Amalgam: return "amalgam";
    case Structure::HNN: return "hnn";
  }
  return "?";
}

namespace detail {

template <class T>
std::optional<T> try_sqrt(const T& x) {
  if constexpr (is_exact_v<T>) {
    return exact_sqrt(x);
  } else {
    if (x < 0) return std::nullopt;
    return std::sqrt(x);
  }
}

inline long field_of(const Mat2<Quad>& m) {
  long d = 0;
  for (const Quad* e : {&m.a, &m.b, &m.c, &m.d})
    if (e->d() != 0) d = e->d();
  return d;
}
inline long field_of(const Mat2<double>&) { return 0; }

template <class T>
bool commutes(const Moebius<T>& x, const Moebius<T>& y, double eps) {
  if constexpr (is_exact_v<T>) return x * y == y * x;
  else return (x * y).distance(y * x) <= eps;
}

// Scales the first column so that det P = 1.
template <class T>
Mat2<T> unit_frame(Mat2<T> P) {
  T dt = P.det();
  if (is_zero(dt)) throw Error("degenerate frame");
  P.a = P.a / dt;
  P.c = P.c / dt;
  return P;
}

}  // namespace detail

// The one-parameter subgroup containing c, with an exact frame when the
// eigenvectors live in the coefficient field.
template <class T>
OneParamSubgroup<T> centralizer_subgroup(const Moebius<T>& c) {
  if (c.is_identity()) throw IdentityInput("centralizer of the identity is not one-parameter");
  IsometryClass cls = classify(c);
  const Mat2<T>& m = c.matrix();
  T one = from_int<T>(1), two = from_int<T>(2), zero = from_int<T>(0);
  T tr = m.trace();
  OneParamSubgroup<T> mu;
  switch (cls.kind) {
    case IsometryClass::Hyperbolic: {
      mu.kind = ParamKind::Hyperbolic;
      auto r = detail::try_sqrt(tr * tr - from_int<T>(4));
      if (!r) throw PreconditionFailed("eigenvalues of the edge image are not in a quadratic field");
      if constexpr (is_exact_v<T>) {
        long df = detail::field_of(m);
        if (r->d() != 0 && df != 0 && r->d() != df)
          throw PreconditionFailed("eigenvalues need sqrt(" + std::to_string(r->d()) + ") but entries lie in Q(sqrt(" +
                                   std::to_string(df) + "))");
      }
      if (is_zero(m.b) && is_zero(m.c)) break;
      T l1 = (tr + *r) / two, l2 = (tr - *r) / two;
      bool use_b;
      if constexpr (is_exact_v<T>) use_b = !is_zero(m.b);
      else use_b = std::abs(m.b) >= std::abs(m.c);
      Mat2<T> P = use_b ? Mat2<T>{m.b, m.b, l1 - m.a, l2 - m.a} : Mat2<T>{l1 - m.d, l2 - m.d, m.c, m.c};
      mu.conjugator = detail::unit_frame(P);
      break;
    }
    case IsometryClass::Parabolic: {
      mu.kind = ParamKind::Parabolic;
      T eps = tr / two;
      Mat2<T> N{m.a - eps, m.b, m.c, m.d - eps};
      bool row1;
      if constexpr (is_exact_v<T>) row1 = !is_zero(N.a) || !is_zero(N.b);
      else row1 = std::abs(N.a) + std::abs(N.b) >= std::abs(N.c) + std::abs(N.d);
      T vx = row1 ? N.b : N.d, vy = row1 ? -N.a : -N.c;
      bool nonzero_x;
      if constexpr (is_exact_v<T>) nonzero_x = !is_zero(vx);
      else nonzero_x = std::abs(vx) >= std::abs(vy);
      mu.conjugator = nonzero_x ? Mat2<T>{vx, zero, vy, one / vx} : Mat2<T>{vx, -one / vy, vy, zero};
      break;
    }
    case IsometryClass::Elliptic: {
      mu.kind = ParamKind::Elliptic;
      if (m.a == m.d && m.b == -m.c) break;
      if constexpr (is_exact_v<T>) {
        throw PreconditionFailed("an elliptic edge image off the standard rotations needs an explicit frame");
      } else {
        double x = (m.a - m.d) / (2 * m.c), y = std::sqrt(std::max(0.0, 4 - tr * tr)) / (2 * std::abs(m.c));
        double s = std::sqrt(y);
        mu.conjugator = {s, x / s, 0.0, 1 / s};
      }
      break;
    }
    case IsometryClass::Identity: break;
  }
  return mu;
}

template <class T>
struct DeformationFamily {
  Structure structure = Structure::FreeConjugate;
  Representation<T> base;  // over the target presentation, at nu = 1
  OneParamSubgroup<T> mu;
  int stable = -1;  // FreeStable and HNN
  std::optional<Moebius<T>> nu;
  bool branch_asserted = false;             // HNN only
  std::vector<std::string> evidence;        // sampled, heuristic
  double eps = 1e-9;                        // floating commutation tolerance

  const Presentation& presentation() const { return base.presentation(); }
  // Generator of rho(C); identity for free structures.
  Moebius<T> edge_image() const {
    if (structure == Structure::Amalgam || structure == Structure::HNN)
      return base.evaluate(presentation().edge_a());
    return Moebius<T>();
  }
  bool stable_in_centralizer() const {
    return structure == Structure::HNN && detail::commutes(base.image(stable), edge_image(), eps);
  }
};

// ---- constructors of deformed representations ---------------------------------------

template <class T>
Representation<T> pull_apart_free(const Representation<T>& A, const Representation<T>& B, const Moebius<T>& nu) {
  Presentation p = Presentation::free_product(A.presentation(), B.presentation());
  std::vector<Moebius<T>> img = A.images();
  for (auto& g : B.images()) img.push_back(g.conjugate_by(nu));
  return Representation<T>(std::move(p), std::move(img));
}

template <class T>
Representation<T> pull_apart_free_stable(const Representation<T>& A, const Moebius<T>& nu, const std::string& s = "s") {
  Presentation p = Presentation::free_product(A.presentation(), Presentation::free(1, {s}));
  std::vector<Moebius<T>> img = A.images();
  img.push_back(nu);
  return Representation<T>(std::move(p), std::move(img));
}

namespace detail {

template <class T>
void check_mu_commutes(const DeformationFamily<T>& fam) {
  Moebius<T> c = fam.edge_image();
  Moebius<T> probe;
  if constexpr (is_exact_v<T>) probe = at_exact(fam.mu, fam.mu.kind == ParamKind::Elliptic ? Quad(rational(1, 2)) : Quad(2));
  else probe = one_param(fam.mu, 0.7);
  if (!commutes(probe, c, 1e-7)) throw PreconditionFailed("mu does not centralize the edge image");
}

template <class T>
std::vector<Word> vertex_sample(const Presentation& p, int factor, int R) {
  std::vector<Word> out;
  for (auto& w : enumerate_ball(p, R, 200000))
    if (!w.empty() && all_in_factor(p, w, factor)) out.push_back(w);
  return out;
}

// Sampled evidence for the hypotheses on C: h in the vertex group off C gives
// a non-parabolic [c, h c h^-1].
template <class T>
void record_malnormal_evidence(DeformationFamily<T>& fam, int factor, int R) {
  const Presentation& p = fam.presentation();
  Moebius<T> c = fam.edge_image();
  long tested = 0, hits = 0;
  for (auto& w : vertex_sample<T>(p, factor, R)) {
    Moebius<T> h = fam.base.evaluate(w);
    if (h.is_identity() || commutes(h, c, fam.eps)) continue;
    ++tested;
    if (parabolic_commutator_test(c, h)) ++hits;
  }
  fam.evidence.push_back("factor " + std::to_string(factor) + ": " + std::to_string(tested) +
                         " sampled h off Z(C), " + std::to_string(hits) + " with tr^2[c, h c h^-1] = 4");
}

}  // namespace detail

template <class T>
DeformationFamily<T> free_family(const Representation<T>& A, const Representation<T>& B, const OneParamSubgroup<T>& mu) {
  DeformationFamily<T> f;
  f.structure = Structure::FreeConjugate;
  f.base = pull_apart_free(A, B, Moebius<T>());
  f.mu = mu;
  return f;
}

template <class T>
DeformationFamily<T> free_stable_family(const Representation<T>& A, const OneParamSubgroup<T>& mu,
                                        const std::string& s = "s") {
  DeformationFamily<T> f;
  f.structure = Structure::FreeStable;
  f.base = pull_apart_free_stable(A, Moebius<T>(), s);
  f.stable = A.presentation().rank();
  f.mu = mu;
  return f;
}

// rep is the base representation of A *_C B; mu defaults to the one-parameter
// group through rho(C).
template <class T>
DeformationFamily<T> amalgam_family(const Representation<T>& rep, std::optional<OneParamSubgroup<T>> mu = {},
                                    int evidence_radius = 3) {
  if (rep.presentation().kind() != Presentation::Kind::Amalgam)
    throw PreconditionFailed("amalgam_family needs an amalgam presentation");
  if (!rep.satisfies_relations()) throw ValidationError("base representation violates the edge relation");
  DeformationFamily<T> f;
  f.structure = Structure::Amalgam;
  f.base = rep;
  f.mu = mu ? *mu : centralizer_subgroup(f.edge_image());
  detail::check_mu_commutes(f);
  if (evidence_radius > 0) {
    detail::record_malnormal_evidence(f, 0, evidence_radius);
    detail::record_malnormal_evidence(f, 1, evidence_radius);
  }
  return f;
}

// rep is the base representation of the HNN extension with s c s^-1 = c_s.
// branch_asserted records the user's claim that s centralizes C or that C
// and C^s are not conjugate in A; only sampled evidence is checked.
template <class T>
DeformationFamily<T> hnn_family(const Representation<T>& rep, std::optional<OneParamSubgroup<T>> mu = {},
                                bool branch_asserted = true, int evidence_radius = 3) {
  const Presentation& p = rep.presentation();
  if (p.kind() != Presentation::Kind::HNN) throw PreconditionFailed("hnn_family needs an HNN presentation");
  if (!rep.satisfies_relations()) throw ValidationError("base representation violates the HNN relation");
  DeformationFamily<T> f;
  f.structure = Structure::HNN;
  f.base = rep;
  f.stable = p.stable();
  f.branch_asserted = branch_asserted;
  f.mu = mu ? *mu : centralizer_subgroup(f.edge_image());
  detail::check_mu_commutes(f);
  if (f.stable_in_centralizer()) {
    f.evidence.push_back("branch: s centralizes C (verified)");
  } else {
    // Sampled search for h in A with h C h^-1 = C^s.
    Moebius<T> c = f.edge_image(), cs = rep.evaluate(p.edge_b());
    long n = 0;
    std::optional<std::string> clash;
    for (auto& w : detail::vertex_sample<T>(p, 0, std::max(evidence_radius, 0))) {
      ++n;
      Moebius<T> k = c.conjugate_by(rep.evaluate(w));
      if (detail::commutes(k, cs, f.eps)) {
        clash = p.format(w);
        break;
      }
    }
    if (clash) f.evidence.push_back("branch: C and C^s conjugate in A via " + *clash + " (assertion contradicted)");
    else
      f.evidence.push_back("branch: C and C^s not conjugate in A (asserted; " + std::to_string(n) +
                           " sampled conjugators)");
  }
  if (evidence_radius > 0) detail::record_malnormal_evidence(f, 0, evidence_radius);
  return f;
}

template <class T>
Representation<T> deform(const DeformationFamily<T>& fam, const Moebius<T>& nu) {
  const Presentation& p = fam.presentation();
  if (fam.structure == Structure::Amalgam || fam.structure == Structure::HNN) {
    if (!detail::commutes(nu, fam.edge_image(), fam.eps))
      throw ParameterNotInCentralizer("nu does not commute with the edge image");
  }
  std::vector<Moebius<T>> img = fam.base.images();
  for (int i = 0; i < p.rank(); ++i) {
    switch (fam.structure) {
      case Structure::FreeConjugate:
      case Structure::Amalgam:
        if (p.factor(i) == 1) img[i] = img[i].conjugate_by(nu);
        break;
      case Structure::FreeStable:
        if (i == fam.stable) img[i] = nu;
        break;
      case Structure::HNN:
        if (i == fam.stable) img[i] = img[i] * nu;
        break;
    }
  }
  return Representation<T>(p, std::move(img));
}

template <class T>
Representation<T> pull_apart_amalgam(const DeformationFamily<T>& fam, const Moebius<T>& nu) {
  if (fam.structure != Structure::Amalgam) throw PreconditionFailed("family is not an amalgam");
  return deform(fam, nu);
}

template <class T>
Representation<T> pull_apart_hnn(const DeformationFamily<T>& fam, const Moebius<T>& nu) {
  if (fam.structure != Structure::HNN) throw PreconditionFailed("family is not an HNN extension");
  return deform(fam, nu);
}

// Exact proof of infinite order for an elliptic element with rational trace
// (a rational cosine at a rational angle is 0, +-1/2 or +-1), otherwise a
// continued-fraction heuristic on the rotation number.
template <class T>
std::optional<std::string> indiscreteness_witness(const Moebius<T>& g, long qmax = 1000, double tol = 1e-12) {
  if (g.is_identity()) return std::nullopt;
  IsometryClass cls;
  try {
    cls = classify(g);
  } catch (const InconclusiveAtScale&) {
    return std::nullopt;
  }
  if (cls.kind != IsometryClass::Elliptic) return std::nullopt;
  if constexpr (is_exact_v<T>) {
    Quad tr = g.tr();
    if (tr.is_rational()) {
      Rational t = abs(tr.a());
      if (t != 0 && t != 1)
        return "elliptic with rational trace " + tr.str() + ": infinite order, so <nu> is dense in its circle";
      return std::nullopt;
    }
  }
  double r = cls.rotation_number();
  for (long q = 1; q <= qmax; ++q) {
    double p = std::round(r * static_cast<double>(q));
    if (std::abs(r - p / static_cast<double>(q)) <= tol) return std::nullopt;
  }
  return "elliptic with rot = " + scalar_str(r) + ", no p/q with q <= " + std::to_string(qmax) + " within " +
         scalar_str(tol);
}

template <class T>
std::vector<std::string> deformation_notes(const DeformationFamily<T>& fam, const Moebius<T>& nu) {
  std::vector<std::string> notes;
  if (nu.is_identity()) notes.push_back("nu = 1: the base representation, not pulled apart");
  if (auto w = indiscreteness_witness(nu)) notes.push_back("indiscreteness witness: " + *w);
  for (auto& e : fam.evidence) notes.push_back(e);
  return notes;
}

// ---- words outside V^L --------------------------------------------------------------

template <class T>
bool in_vertex_conjugacy(const DeformationFamily<T>& fam, const Word& w) {
  const Presentation& p = fam.presentation();
  if (fam.structure == Structure::FreeStable) {
    Word core = cyclically_reduce(w, p).core;
    return detail::all_in_factor(p, core, 0);
  }
  return in_elliptic_conjugacy_set(w, p);
}

// The first `count` ball words outside V^L, one per cyclic core.
template <class T>
std::vector<Word> sample_q_words(const DeformationFamily<T>& fam, int R, size_t count) {
  const Presentation& p = fam.presentation();
  std::vector<Word> out;
  std::map<std::vector<long>, bool> seen;
  for (auto& w : enumerate_ball(p, R)) {
    if (w.empty() || in_vertex_conjugacy(fam, w)) continue;
    Word core = cyclically_reduce(w, p).core;
    std::vector<long> key;
    for (auto& l : core) {
      key.push_back(l.gen);
      key.push_back(l.exp);
    }
    if (!seen.emplace(key, true).second) continue;
    out.push_back(core);
    if (out.size() == count) break;
  }
  return out;
}

// rho_nu(q) with nu as a formal letter.
inline NuWord nu_word(const DeformationFamily<Quad>& fam, const Word& q) {
  const Presentation& p = fam.presentation();
  bool regroup = fam.stable_in_centralizer();
  NuWord w = NuWord::g(Mat2<Quad>::identity());
  for (const Letter& l : q) {
    NuWord g = NuWord::g(fam.base.image(l.gen).pow(l.exp).matrix());
    switch (fam.structure) {
      case Structure::FreeConjugate:
      case Structure::Amalgam:
        w = p.factor(l.gen) == 1 ? w * NuWord::nu(1) * g * NuWord::nu(-1) : w * g;
        break;
      case Structure::FreeStable:
        w = l.gen == fam.stable ? w * NuWord::nu(l.exp) : w * g;
        break;
      case Structure::HNN:
        if (l.gen != fam.stable) {
          w = w * g;
        } else if (regroup) {
          // s commutes with nu: (s nu)^m = s^m nu^m
          w = w * g * NuWord::nu(l.exp);
        } else {
          Mat2<Quad> S = fam.base.image(l.gen).matrix();
          NuWord step = l.exp > 0 ? NuWord::g(S) * NuWord::nu(1) : NuWord::nu(-1) * NuWord::g(S.adjugate());
          for (long i = 0; i < std::labs(l.exp); ++i) w = w * step;
        }
        break;
    }
  }
  return w;
}

inline WordTemplate word_template(const DeformationFamily<Quad>& fam, const Word& q) {
  WordTemplate t = nu_word(fam, q).fold();
  if (t.slots.empty())
    throw ConstantTrace(fam.presentation().format(q) + ": nu cancels, the trace does not depend on nu");
  return t;
}

// ---- avoidance --------------------------------------------------------------------------

struct AvoidanceProblem {
  std::vector<Word> Q;
  std::vector<Quad> W;  // 4 is added implicitly
  std::optional<std::pair<Rational, Rational>> window;  // exact parameter range
  double tol = 1e-6;
  long max_candidates = 20000;
};

struct AvoidanceEntry {
  std::string q, w;
  std::string polynomial;
  std::vector<TraceRoot> roots;
  std::string evidence;
  double value = 0;  // tr^2 rho_nu(q), floating re-evaluation
  double gap = 0;    // |value - w|
  bool exact_miss = false;
};

struct AvoidanceCertificate {
  Structure structure = Structure::FreeConjugate;
  ParamKind kind = ParamKind::Hyperbolic;
  Quad z;          // exact parameter of nu in mu
  double t = 0;    // nu = mu(t)
  double tol = 0;
  double margin = 0;  // smallest gap
  long candidates_tried = 0;
  bool relations_hold = false;
  std::vector<AvoidanceEntry> entries;
  std::vector<std::string> notes;

  bool ok() const { return relations_hold && margin > tol; }
};

struct AvoidanceResult {
  MoebiusX nu;
  RepX rep;
  AvoidanceCertificate certificate;
};

namespace detail {

// Deterministic candidates n/d ordered by height max(|n|, d), inside the
// domain of mu and the window, skipping the identity parameter. Elliptic
// u = +-1 is skipped too (a half turn).
inline std::vector<Rational> avoidance_candidates(ParamKind kind, const std::optional<std::pair<Rational, Rational>>& win,
                                                  long max, long max_height = 4000) {
  std::vector<Rational> out;
  auto admit = [&](long n, long d) {
    if (std::gcd(std::labs(n), d) != 1) return;
    Rational z = rational(n, d);
    switch (kind) {
      case ParamKind::Hyperbolic:
        if (z <= 0 || z == 1) return;
        break;
      case ParamKind::Parabolic:
        if (z == 0) return;
        break;
      case ParamKind::Elliptic:
        if (z == 0 || abs(z) >= 1) return;
        break;
    }
    if (win && (z < win->first || z > win->second)) return;
    out.push_back(z);
  };
  for (long H = 1; H <= max_height && static_cast<long>(out.size()) < max; ++H) {
    for (long sgn : {1L, -1L}) {
      for (long d = 1; d < H; ++d) admit(sgn * H, d);
      for (long n = H; n >= 1; --n) admit(sgn * n, H);
    }
  }
  if (static_cast<long>(out.size()) > max) out.resize(max);
  return out;
}

inline bool outside(const Rational& z, const std::vector<TraceRoot>& roots) {
  for (auto& r : roots)
    if (z >= r.z.lo && z <= r.z.hi) return false;
  return true;
}

inline double tr2_double(const RepR& rep, const Word& q) {
  MoebiusR g = rep.evaluate(q);
  return g.tr2();
}

}  // namespace detail

// Chooses nu in mu so that tr^2 rho_nu(q) avoids W u {4} for every q in Q,
// certified by exact root isolation plus exact and floating re-evaluation.
inline AvoidanceResult find_avoiding_parameter(const DeformationFamily<Quad>& fam, const AvoidanceProblem& prob) {
  const Presentation& p = fam.presentation();
  if (prob.Q.empty()) throw PreconditionFailed("Q is empty");
  std::vector<Quad> W = prob.W;
  if (std::find(W.begin(), W.end(), Quad(4)) == W.end()) W.push_back(Quad(4));
  std::vector<Word> Q;
  for (auto& q : prob.Q) {
    Word core = cyclically_reduce(q, p).core;
    if (core.empty() || in_vertex_conjugacy(fam, core))
      throw PreconditionFailed("'" + p.format(q) + "' lies in V^L");
    Q.push_back(core);
  }
  std::vector<TracePolynomial> tps(Q.size());
  parallel_for(Q.size(), [&](size_t i) { tps[i] = trace_polynomial(word_template(fam, Q[i]), fam.mu); });
  size_t nw = W.size();
  std::vector<TraceRootReport> reps(Q.size() * nw);
  parallel_for(reps.size(), [&](size_t j) { reps[j] = solve_trace_equation(tps[j / nw], W[j % nw]); });

  std::vector<TraceRoot> all;
  for (auto& r : reps) all.insert(all.end(), r.roots.begin(), r.roots.end());
  std::sort(all.begin(), all.end(), [](const TraceRoot& x, const TraceRoot& y) { return x.z.lo < y.z.lo; });

  AvoidanceCertificate cert;
  cert.structure = fam.structure;
  cert.kind = fam.mu.kind;
  cert.tol = prob.tol;
  for (const Rational& z : detail::avoidance_candidates(fam.mu.kind, prob.window, prob.max_candidates)) {
    ++cert.candidates_tried;
    if (!detail::outside(z, all)) continue;
    MoebiusX nu = at_exact(fam.mu, Quad(z));
    RepX rep = deform(fam, nu);
    RepR rr = rep.to_real();
    std::vector<AvoidanceEntry> entries;
    double margin = INFINITY;
    bool good = true;
    for (size_t i = 0; i < Q.size() && good; ++i) {
      Quad exact = rep.evaluate(Q[i]).tr2();
      double v = detail::tr2_double(rr, Q[i]);
      for (size_t k = 0; k < nw; ++k) {
        const TraceRootReport& r = reps[i * nw + k];
        AvoidanceEntry e;
        e.q = p.format(Q[i]);
        e.w = W[k].str();
        e.polynomial = tps[i].str();
        e.roots = r.roots;
        e.value = v;
        e.gap = std::abs(v - W[k].to_double());
        e.exact_miss = exact != W[k];
        e.evidence = r.roots.empty() ? "no root in the parameter domain"
                                     : std::to_string(r.roots.size()) + " isolated root(s), z outside each interval";
        if (!e.exact_miss || e.gap <= prob.tol) {
          good = false;
          break;
        }
        margin = std::min(margin, e.gap);
        entries.push_back(std::move(e));
      }
    }
    if (!good) continue;
    cert.z = Quad(z);
    cert.t = tps[0].parameter(z.get_d());
    cert.margin = margin;
    cert.entries = std::move(entries);
    cert.relations_hold = rep.satisfies_relations();
    cert.notes = deformation_notes(fam, nu);
    return {nu, rep, cert};
  }
  throw SearchExhausted("no parameter among " + std::to_string(cert.candidates_tried) + " candidates avoids W");
}

inline AvoidanceResult find_avoiding_parameter(const DeformationFamily<double>&, const AvoidanceProblem&) {
  throw ExactModeRequired("trace-avoidance certification needs exact matrices");
}

// A hyperbolic subgroup for free products whose axis endpoints avoid the
// fixed points of the ball elements: tr^2[c0, h c0 h^-1] != 4 for each h.
inline OneParamSubgroup<Quad> choose_free_subgroup(const RepX& V, int R = 3, long window = 4) {
  auto ball = enumerate_ball(V.presentation(), R);
  std::vector<MoebiusX> hs;
  for (auto& w : ball) {
    MoebiusX h = V.evaluate(w);
    if (!h.is_identity()) hs.push_back(h);
  }
  std::vector<long> vals{0};
  for (long k = 1; k <= window; ++k) {
    vals.push_back(k);
    vals.push_back(-k);
  }
  for (long i : vals)
    for (long j : vals) {
      Mat2<Quad> P{Quad(1 + i * j), Quad(i), Quad(j), Quad(1)};
      OneParamSubgroup<Quad> mu{ParamKind::Hyperbolic, P};
      MoebiusX c0 = at_exact(mu, Quad(2));
      bool ok = std::none_of(hs.begin(), hs.end(), [&](const MoebiusX& h) { return parabolic_commutator_test(c0, h); });
      if (ok) return mu;
    }
  throw SearchExhausted("no frame in the window separates Fix mu from the ball");
}

// ---- lifting --------------------------------------------------------------------------

// Lifts to Homeo_Z(R): the canonical boundary lift of each image shifted by
// an integer.
template <class T>
struct LiftedRep {
  Representation<T> projected;
  std::vector<long> shifts;
  std::vector<long> relation_translations;

  CircleHomeo lift(int gen) const { return CircleHomeo::moebius(projected.image(gen)).shifted(shifts.at(gen)); }
  CircleAction action() const {
    std::vector<CircleHomeo> g;
    for (int i = 0; i < projected.presentation().rank(); ++i) g.push_back(lift(i));
    return CircleAction(projected.presentation(), g);
  }
};

// alpha(w) = -floor(rho~(w)(0)) for a lifted representation. A lift value in
// the lattice band is settled exactly: the boundary point 0 is the direction
// (-1, 0), fixed by rho(w) iff its lower-left entry vanishes, and then the lift
// value is the nearest integer.
template <class T>
long quasimorphism_from_lift(const LiftedRep<T>& l, const Word& w) {
  const Presentation& p = l.projected.presentation();
  Word c = canonical_form(w, p);
  double v = l.action().apply(c, 0.0);
  double r = std::round(v);
  if (v == r || std::abs(v - r) >= kDefaultLatticeBand) return -static_cast<long>(std::floor(v));
  if (is_zero(l.projected.evaluate(c).matrix().c)) return -static_cast<long>(r);
  throw BasepointDegenerate("lift value " + scalar_str(v) + " near an integer but 0 is not fixed");
}

template <class T>
LiftedRep<T> lift_representation(const Representation<T>& rep, std::vector<long> shifts = {}) {
  if (shifts.empty()) shifts.assign(rep.presentation().rank(), 0);
  if (static_cast<int>(shifts.size()) != rep.presentation().rank()) throw ValidationError("one shift per generator");
  LiftedRep<T> l{rep, std::move(shifts), {}};
  l.relation_translations = l.action().relation_translations();
  for (long k : l.relation_translations)
    if (k != 0) throw NotLiftable("a relation lifts to the translation by " + std::to_string(k));
  return l;
}

namespace detail {
// Integer k with F = T^k o (canonical lift of g).
inline long integer_offset(const CircleHomeo& F, const MoebiusR& g) {
  CircleHomeo c = CircleHomeo::moebius(g);
  double x = 0.3141592653589793;
  return std::lround(F(x) - c(x));
}
}  // namespace detail

// Deformed lift with nu~ = T^offset o (canonical lift of nu); conjugation by
// nu~ ignores the offset, the HNN stable letter s~ nu~ does not.
template <class T>
LiftedRep<T> lift_deformation(const LiftedRep<T>& base, const DeformationFamily<T>& fam, const Moebius<T>& nu,
                              long offset = 0) {
  const Presentation& p = fam.presentation();
  if (base.projected.images() != fam.base.images())
    throw PreconditionFailed("lifted base does not project to the family base");
  Representation<T> def = deform(fam, nu);
  CircleHomeo nut = CircleHomeo::moebius(nu).shifted(offset);
  std::vector<long> shifts = base.shifts;
  for (int i = 0; i < p.rank(); ++i) {
    MoebiusR gi = def.image(i).to_real();
    switch (fam.structure) {
      case Structure::FreeConjugate:
      case Structure::Amalgam:
        if (p.factor(i) == 1) shifts[i] = detail::integer_offset(nut * base.lift(i) * nut.inverse(), gi);
        break;
      case Structure::FreeStable:
        if (i == fam.stable) shifts[i] = offset;
        break;
      case Structure::HNN:
        if (i == fam.stable) shifts[i] = detail::integer_offset(base.lift(i) * nut, gi);
        break;
    }
  }
  return lift_representation(def, shifts);
}

// ---- once-punctured torus ---------------------------------------------------------------

struct PuncturedTorus {
  double tra = 0, trb = 0, trab = 0;
  double commutator_trace = 0;
  RepR rep;
  std::optional<RepX> exact;
};

namespace detail {

template <class T>
T commutator_trace(const Mat2<T>& a, const Mat2<T>& b) {
  return (a * b * a.adjugate() * b.adjugate()).trace();
}

// a = [[x, -1], [1, 0]], b = [[0, q], [q - z, y]] with q^2 - z q + 1 = 0
// realize tr a = x, tr b = y, tr ab = z.
template <class T>
std::pair<Mat2<T>, Mat2<T>> torus_pair(const T& x, const T& y, const T& z, const T& sq) {
  T one = from_int<T>(1), zero = from_int<T>(0);
  T q = (z + sq) / from_int<T>(2);
  return {Mat2<T>{x, -one, one, zero}, Mat2<T>{zero, q, q - z, y}};
}

inline double commutator_rot(const Mat2<double>& a, const Mat2<double>& b) {
  Mat2<double> k = a * b * a.adjugate() * b.adjugate();
  IsometryClass c = classify(MoebiusR::from_trusted(k));
  return c.rotation_number();
}

}  // namespace detail

// tr[a,b] = x^2 + y^2 + z^2 - xyz - 2 with x = y on a grid and z the
// smaller root above 2; a and b are swapped when needed so that an elliptic
// commutator rotates by at most 1/2.
inline PuncturedTorus punctured_torus_rep(double target, double tol = 1e-9) {
  if (!(target < 2)) throw PreconditionFailed("tr[a,b] must be below 2 for a non-abelian real punctured torus");
  for (int i = 0; i <= 40; ++i) {
    double x = 3 + 0.5 * i;
    double disc = x * x * x * x - 8 * x * x + 8 + 4 * target;
    if (disc < 0) continue;
    double s = std::sqrt(disc);
    double z = (x * x - s) / 2;
    if (z <= 2) z = (x * x + s) / 2;
    if (z <= 2) continue;
    auto [a, b] = detail::torus_pair(x, x, z, std::sqrt(z * z - 4));
    double k = detail::commutator_trace(a, b);
    if (std::abs(k - target) > tol) continue;
    if (target > -2 && detail::commutator_rot(a, b) > 0.5) std::swap(a, b);
    PuncturedTorus out;
    out.tra = out.trb = x;
    out.trab = z;
    out.commutator_trace = detail::commutator_trace(a, b);
    out.rep = RepR(Presentation::free(2), {MoebiusR::from_trusted(a), MoebiusR::from_trusted(b)});
    return out;
  }
  throw NoSolutionInWindow("no trace triple on the grid realizes tr[a,b] = " + scalar_str(target));
}

// Exact version: x = y integral and z rational, matrices over Q(sqrt(z^2-4)).
inline PuncturedTorus punctured_torus_rep(const Rational& target) {
  if (!(target < 2)) throw PreconditionFailed("tr[a,b] must be below 2 for a non-abelian real punctured torus");
  for (long x = 3; x <= 24; ++x) {
    Rational X(x);
    Rational disc = X * X * X * X - 8 * X * X + 8 + 4 * target;
    auto s = detail::rational_sqrt(disc);
    if (!s) continue;
    Rational z = (X * X - *s) / 2;
    if (z <= 2) z = (X * X + *s) / 2;
    if (z <= 2) continue;
    z.canonicalize();
    auto sq = exact_sqrt(Quad(Rational(z * z - 4)));
    if (!sq) continue;
    auto [a, b] = detail::torus_pair(Quad(X), Quad(X), Quad(z), *sq);
    Quad k = detail::commutator_trace(a, b);
    if (k != Quad(target)) throw Error("commutator trace identity failed");
    Mat2<double> ad{a.a.to_double(), a.b.to_double(), a.c.to_double(), a.d.to_double()};
    Mat2<double> bd{b.a.to_double(), b.b.to_double(), b.c.to_double(), b.d.to_double()};
    if (target > -2 && detail::commutator_rot(ad, bd) > 0.5) {
      std::swap(a, b);
      std::swap(ad, bd);
    }
    PuncturedTorus out;
    out.tra = out.trb = static_cast<double>(x);
    out.trab = z.get_d();
    out.commutator_trace = target.get_d();
    out.exact = RepX(Presentation::free(2), {MoebiusX::from_trusted(a), MoebiusX::from_trusted(b)});
    out.rep = out.exact->to_real();
    return out;
  }
  throw NoSolutionInWindow("no rational trace triple realizes tr[a,b] = " + target.get_str());
}

// ---- genus two ---------------------------------------------------------------------------

// Base of <a,b> *_{[a,b]=[c,d]} <c,d> with c = a, d = b: the one-holed torus
// group with tr a = tr b = 3, tr ab = 4 (so tr[a,b] = -4), over Q(sqrt 3),
// where the eigenvectors of [a,b] also live.
inline RepX genus_two_base() {
  Presentation A = Presentation::free(2, {"a", "b"}), B = Presentation::free(2, {"c", "d"});
  Word k{{0, 1}, {1, 1}, {0, -1}, {1, -1}};
  Presentation L = Presentation::amalgam(A, B, k, k);
  Quad r3 = Quad::sqrt_of(3);
  MoebiusX a(Quad(2), Quad(1), Quad(1), Quad(1));
  MoebiusX b(Quad(-1) + Quad(2) * r3, Quad(4) - Quad(3) * r3, Quad(-2) + r3, Quad(4) - Quad(2) * r3);
  return RepX(L, {a, b, a, b});
}

}  // namespace flexcircle
