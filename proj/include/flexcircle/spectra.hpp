#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "flexcircle/errors.hpp"
#include "flexcircle/moebius.hpp"
#include "flexcircle/parallel.hpp"
#include "flexcircle/representation.hpp"
#include "flexcircle/words.hpp"

namespace flexcircle {

struct SpectrumRecord {
  Word word;
  std::string text;
  double tr2 = 4;
  std::optional<Quad> tr2_exact;
  std::string cls;    // identity | elliptic | parabolic | hyperbolic | ambiguous
  double rot = 0, err = 0;
  long order = 0;     // > 0 when flagged torsion
  bool torsion() const { return order > 0; }
};

struct SpectrumReport {
  int R = 0;
  std::vector<SpectrumRecord> records;
  std::map<std::string, long> class_counts;
  double min_dist4 = INFINITY;  // over non-torsion records
  std::vector<double> rot_values;

  std::vector<double> values(bool drop_torsion = true) const {
    std::vector<double> v;
    for (auto& r : records)
      if (!drop_torsion || !r.torsion()) v.push_back(r.tr2);
    return v;
  }
  std::string csv() const {
    std::ostringstream os;
    os.precision(17);
    os << "word,tr2,class,rot,err\n";
    for (auto& r : records) os << r.text << ',' << r.tr2 << ',' << r.cls << ',' << r.rot << ',' << r.err << '\n';
    return os.str();
  }
};

struct SpectrumConfig {
  long max_order = 1000;  // exact torsion search, and the p/q screen in floating mode
  double torsion_tol = 1e-9;
  size_t cap = kDefaultBallCap;
};

namespace detail {

// Exact order in PSL2 up to nmax, 0 if none.
inline long exact_order(const MoebiusX& g, long nmax) {
  if (g.is_identity()) return 1;
  MoebiusX acc = g;
  for (long n = 2; n <= nmax; ++n) {
    acc = acc * g;
    if (acc.is_identity()) return n;
  }
  return 0;
}

// Smallest q <= qmax with |r - p/q| <= tol.
inline long near_rational_denominator(double r, long qmax, double tol) {
  for (long q = 1; q <= qmax; ++q) {
    double p = std::round(r * static_cast<double>(q));
    if (std::abs(r - p / static_cast<double>(q)) <= tol) return q;
  }
  return 0;
}

template <class T>
SpectrumRecord spectrum_record(const Representation<T>& rep, const Word& w, const SpectrumConfig& cfg) {
  SpectrumRecord r;
  r.word = w;
  r.text = rep.presentation().format(w);
  Moebius<T> g = rep.evaluate(w);
  r.tr2 = to_double(g.tr2());
  if constexpr (is_exact_v<T>) r.tr2_exact = g.tr2();
  try {
    IsometryClass c = classify(g);
    r.cls = c.name();
    if (c.kind == IsometryClass::Elliptic) {
      r.rot = c.rotation_number();
      r.err = 1e-12;
    }
    if (c.kind == IsometryClass::Identity) {
      r.order = 1;
    } else if (c.kind == IsometryClass::Elliptic) {
      if constexpr (is_exact_v<T>) r.order = exact_order(g, cfg.max_order);
      else r.order = near_rational_denominator(r.rot, cfg.max_order, cfg.torsion_tol);
    }
  } catch (const AmbiguousClass&) {
    r.cls = "ambiguous";
  }
  return r;
}

}  // namespace detail

// tr^2 over the ball of radius R in normal forms; torsion flagged.
template <class T>
SpectrumReport trace_spectrum(const Representation<T>& rep, int R, const SpectrumConfig& cfg = {}) {
  SpectrumReport rep_out;
  rep_out.R = R;
  auto ball = enumerate_ball(rep.presentation(), R, cfg.cap);
  rep_out.records.resize(ball.size());
  parallel_for(ball.size(), [&](size_t i) { rep_out.records[i] = detail::spectrum_record(rep, ball[i], cfg); });
  for (auto& r : rep_out.records) {
    ++rep_out.class_counts[r.cls];
    if (r.torsion()) continue;
    rep_out.min_dist4 = std::min(rep_out.min_dist4, std::abs(r.tr2 - 4));
    rep_out.rot_values.push_back(r.rot);
  }
  std::sort(rep_out.rot_values.begin(), rep_out.rot_values.end());
  rep_out.rot_values.erase(std::unique(rep_out.rot_values.begin(), rep_out.rot_values.end()), rep_out.rot_values.end());
  return rep_out;
}

enum class DisjointnessMode { Set, Marked };

struct Collision {
  std::string word1, word2;
  double tr2_1 = 0, tr2_2 = 0;
};

struct DisjointnessReport {
  bool disjoint = false;
  double min_distance = INFINITY;
  std::vector<Collision> collisions;  // pairs within tol, capped
};

// Set mode follows the definition: tr^2 images of the non-torsion ball words
// must not meet. Marked mode compares word by word.
template <class T>
DisjointnessReport tracial_disjointness(const Representation<T>& r1, const Representation<T>& r2, int R,
                                        double tol = 1e-9, DisjointnessMode mode = DisjointnessMode::Set,
                                        size_t max_collisions = 64) {
  SpectrumReport s1 = trace_spectrum(r1, R), s2 = trace_spectrum(r2, R);
  DisjointnessReport out;
  auto note = [&](const SpectrumRecord& x, const SpectrumRecord& y) {
    double d = std::abs(x.tr2 - y.tr2);
    out.min_distance = std::min(out.min_distance, d);
    if (d <= tol && out.collisions.size() < max_collisions) out.collisions.push_back({x.text, y.text, x.tr2, y.tr2});
  };
  if (mode == DisjointnessMode::Marked) {
    std::map<std::string, const SpectrumRecord*> by;
    for (auto& r : s2.records) by[r.text] = &r;
    for (auto& x : s1.records) {
      auto it = by.find(x.text);
      if (it == by.end() || x.torsion() || it->second->torsion()) continue;
      note(x, *it->second);
    }
  } else {
    std::vector<const SpectrumRecord*> a, b;
    for (auto& r : s1.records)
      if (!r.torsion()) a.push_back(&r);
    for (auto& r : s2.records)
      if (!r.torsion()) b.push_back(&r);
    auto by_value = [](const SpectrumRecord* x, const SpectrumRecord* y) { return x->tr2 < y->tr2; };
    std::sort(a.begin(), a.end(), by_value);
    std::sort(b.begin(), b.end(), by_value);
    // nearest neighbours in b of each element of a
    size_t j = 0;
    for (auto* x : a) {
      while (j + 1 < b.size() && b[j + 1]->tr2 <= x->tr2) ++j;
      for (size_t k = j; k < b.size() && k <= j + 1; ++k) note(*x, *b[k]);
      // further partners within tol
      for (size_t k = j + 2; k < b.size() && b[k]->tr2 - x->tr2 <= tol; ++k) note(*x, *b[k]);
      for (size_t k = j; k-- > 0 && x->tr2 - b[k]->tr2 <= tol;) note(*x, *b[k]);
    }
  }
  out.disjoint = out.min_distance > tol;
  return out;
}

// ---- density diagnostics ---------------------------------------------------------------

struct DensityConfig {
  int cf_depth = 12;
  long max_order = 1000;
  double rational_tol = 1e-12;  // a partial remainder below this ends the expansion
  double displacement_floor = 1e-6;
  int samples = 64;
};

struct DensityVerdict {
  enum Kind { DenseEvidence, DiscreteEvidence, Inconclusive } kind = Inconclusive;
  std::string witness;            // DenseEvidence
  std::vector<long> partial_quotients;
  double rot = 0;
  double min_displacement = 0;    // DiscreteEvidence
  std::string reason;

  const char* name() const {
    switch (kind) {
      case DenseEvidence: return "dense-evidence";
      case DiscreteEvidence: return "discrete-evidence";
      case Inconclusive: return "inconclusive";
    }
    return "?";
  }
};

// Partial quotients of r until a remainder is within tol of an integer or
// depth is reached.
inline std::vector<long> continued_fraction(double r, int depth, double tol = 1e-12) {
  std::vector<long> a;
  double x = r;
  for (int i = 0; i <= depth; ++i) {
    double f = std::floor(x);
    a.push_back(static_cast<long>(f));
    double rem = x - f;
    if (1 - rem < tol) ++a.back();
    if (rem < tol || 1 - rem < tol) break;
    x = 1 / rem;
    if (x > 1e15) break;
  }
  return a;
}

template <class T>
DensityVerdict density_test(const Representation<T>& rep, int R, const DensityConfig& cfg = {}) {
  DensityVerdict v;
  const auto& imgs = rep.images();
  bool abelian = true;
  for (size_t i = 0; i < imgs.size() && abelian; ++i)
    for (size_t j = i + 1; j < imgs.size() && abelian; ++j)
      if (commutator(imgs[i], imgs[j]).distance(Moebius<T>()) > 1e-12) abelian = false;
  if (abelian) {
    v.reason = "generators commute: elementary image";
    return v;
  }
  SpectrumConfig sc;
  sc.max_order = cfg.max_order;
  SpectrumReport s = trace_spectrum(rep, R, sc);
  bool all_discrete_like = true;
  for (auto& r : s.records) {
    if (r.cls == "ambiguous") all_discrete_like = false;
    if (r.cls != "elliptic" || r.torsion()) continue;
    all_discrete_like = false;
    auto pq = continued_fraction(r.rot, cfg.cf_depth, cfg.rational_tol);
    if (static_cast<int>(pq.size()) <= cfg.cf_depth) continue;
    if constexpr (is_exact_v<T>) {
      if (detail::exact_order(rep.evaluate(r.word), cfg.max_order) != 0) continue;
    }
    v.kind = DensityVerdict::DenseEvidence;
    v.witness = r.text;
    v.partial_quotients = pq;
    v.rot = r.rot;
    v.reason = "elliptic of apparently infinite order";
    return v;
  }
  if (!all_discrete_like) {
    v.reason = "elliptic elements present but none passes the irrationality screen";
    return v;
  }
  // smallest sup-displacement over non-identity ball elements
  double md = INFINITY;
  for (auto& r : s.records) {
    Moebius<T> g = rep.evaluate(r.word);
    if (g.is_identity()) continue;
    double sup = 0;
    for (int i = 0; i < cfg.samples; ++i) {
      double x = (i + 0.5) / cfg.samples;
      double y = boundary_action(g, x);
      double d = std::abs(y - x);
      sup = std::max(sup, std::min(d, 1 - d));
    }
    md = std::min(md, sup);
  }
  v.min_displacement = md;
  if (md > cfg.displacement_floor) {
    v.kind = DensityVerdict::DiscreteEvidence;
    v.reason = "all ball elements are non-elliptic or of finite order, displacement bounded below";
  } else {
    v.reason = "displacement lower bound not established";
  }
  return v;
}

// ---- Z[sqrt 2] elliptic -------------------------------------------------------------------

namespace detail {
// x0 + x1 sqrt 2 ordered by height max(|x0|, |x1|), then x1 = 0, 1, -1, 2, ...
// then x0 = 0, 1, -1, ...
inline std::vector<Quad> zsqrt2_elements(long box) {
  std::vector<Quad> out;
  auto seq = [](long h) {
    std::vector<long> s{0};
    for (long k = 1; k <= h; ++k) {
      s.push_back(k);
      s.push_back(-k);
    }
    return s;
  };
  for (long h = 0; h <= box; ++h)
    for (long x1 : seq(h))
      for (long x0 : seq(h)) {
        if (std::max(std::labs(x0), std::labs(x1)) != h) continue;
        out.push_back(Quad(Rational(x0), Rational(x1), x1 ? 2 : 0));
      }
  return out;
}
}  // namespace detail

// [[a, 1], [ad - 1, d]] with a, d in Z[sqrt 2] and 0 < a + d < eps.
inline MoebiusX zsqrt2_elliptic(double eps, long box = 3) {
  if (!(eps > 0) || eps > 2) throw PreconditionFailed("eps must lie in (0, 2]");
  Rational e(eps);
  auto el = detail::zsqrt2_elements(box);
  for (const Quad& d : el)
    for (const Quad& a : el) {
      Quad t = a + d;
      if (t.sign() <= 0 || (t - Quad(e)).sign() >= 0) continue;
      return MoebiusX(a, Quad(1), a * d - Quad(1), d);
    }
  throw SearchExhausted("no trace in (0, " + scalar_str(eps) + ") with coefficients up to " + std::to_string(box));
}

}  // namespace flexcircle
