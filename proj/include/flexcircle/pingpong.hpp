#pragma once

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "flexcircle/errors.hpp"
#include "flexcircle/interval.hpp"
#include "flexcircle/moebius.hpp"

namespace flexcircle {

// Closed arc [l, l + len] of R/Z in lifted coordinates, 0 <= len < 1.
struct Arc {
  double l = 0, len = 0;

  double r() const { return l + len; }
  double mid() const { return l + 0.5 * len; }
  bool contains(double theta) const { return frac01(theta - l) <= len; }
  Arc inflated(double e) const { return {l - e, len + 2 * e}; }
  static Arc around(double c, double rad) { return {c - rad, 2 * rad}; }
};

// Slack absorbing the rounding of differences of lifted values of size < 16.
inline constexpr double kArcSlack = 1e-13;

// inner strictly inside outer, modulo Z.
inline bool arc_within(const Arc& inner, const Arc& outer) {
  double d = frac01(inner.l - outer.l);
  if (d > 1 - kArcSlack) return false;
  return d > kArcSlack && d + inner.len < outer.len - kArcSlack;
}
inline bool arcs_disjoint(const Arc& a, const Arc& b) {
  if (a.len + b.len >= 1) return false;
  double d = frac01(b.l - a.l);
  return d > a.len + kArcSlack && d + b.len < 1 - kArcSlack;
}
inline bool all_disjoint(const std::vector<Arc>& arcs) {
  for (size_t i = 0; i < arcs.size(); ++i)
    for (size_t j = i + 1; j < arcs.size(); ++j)
      if (!arcs_disjoint(arcs[i], arcs[j])) return false;
  return true;
}

// Complementary arcs of pairwise disjoint arcs, in cyclic order.
inline std::vector<Arc> complement(std::vector<Arc> arcs) {
  if (arcs.empty()) return {Arc{0, 1 - kArcSlack}};
  for (auto& a : arcs) a.l = frac01(a.l);
  std::sort(arcs.begin(), arcs.end(), [](const Arc& x, const Arc& y) { return x.l < y.l; });
  std::vector<Arc> out;
  for (size_t i = 0; i < arcs.size(); ++i) {
    const Arc& a = arcs[i];
    double next = i + 1 < arcs.size() ? arcs[i + 1].l : arcs[0].l + 1;
    out.push_back({a.r(), next - a.r()});
  }
  return out;
}

// ---- interval enclosures of boundary lifts ----------------------------------------

using IMat = Mat2<Interval>;

inline IMat to_imat(const Mat2<double>& m) { return {Interval(m.a), Interval(m.b), Interval(m.c), Interval(m.d)}; }

// Enclosure of x + displacement for the matrix rep m (see boundary_lift).
inline Interval interval_lift(const IMat& m, const Interval& x) {
  static const Interval pi = Interval::widen(kPi, kPi);
  Interval alpha = pi * x;
  Interval wx = -icos(alpha), wy = isin(alpha);
  Interval mx = m.a * wx + m.b * wy, my = m.c * wx + m.d * wy;
  Interval cross = wx * my - wy * mx, dot = wx * mx + wy * my;
  return x - iatan2(cross, dot) / pi;
}
inline Interval interval_lift(const Mat2<double>& m, double x) { return interval_lift(to_imat(m), Interval(x)); }

// Outward enclosure of the image arc; throws if it wraps the circle.
inline Arc image_arc(const IMat& m, const Arc& a, double inflate = 0.0) {
  Interval lo = interval_lift(m, Interval(a.l)), hi = interval_lift(m, Interval(a.r()));
  Arc out{lo.lo - inflate, hi.hi - lo.lo + 2 * inflate};
  if (!(out.len < 1)) throw CertificationFailedAtResolution("image arc enclosure wraps the circle");
  return out;
}
inline Arc image_arc(const Mat2<double>& m, const Arc& a, double inflate = 0.0) {
  return image_arc(to_imat(m), a, inflate);
}

// Interval matrix of mu(t) = P model(t) adj(P), scaled by sign det P, trace >= 0.
inline IMat interval_one_param(const OneParamSubgroup<double>& mu, double t) {
  IMat mod;
  switch (mu.kind) {
    case ParamKind::Hyperbolic: {
      Interval e = Interval::widen(std::exp(t / 2), std::exp(t / 2), 2), f = Interval::widen(std::exp(-t / 2), std::exp(-t / 2), 2);
      mod = {e, Interval(0), Interval(0), f};
      break;
    }
    case ParamKind::Parabolic: mod = {Interval(1), Interval(t), Interval(0), Interval(1)}; break;
    case ParamKind::Elliptic: {
      Interval c = icos(Interval(t / 2)), s = isin(Interval(t / 2));
      mod = {c, s, -s, c};
      break;
    }
  }
  const Mat2<double>& P = mu.conjugator;
  IMat ip = to_imat(P), adj = to_imat(P.adjugate());
  IMat r = ip * mod * adj;
  if (P.det() < 0) r = -r;
  return r;
}

// ---- Schottky certificates --------------------------------------------------------

// Arcs D_z for letters z (2i for g_i, 2i+1 for g_i^-1) with
// z(S^1 \ D_{z^-1}) inside D_z, all 2n arcs pairwise disjoint.
struct SchottkyCertificate {
  std::vector<MoebiusR> gens;
  std::vector<Arc> arcs;
  double radius = 0;
  double min_gap = 0;  // smallest distance between two arcs

  int rank() const { return static_cast<int>(gens.size()); }
  static int inv(int z) { return z ^ 1; }
  Mat2<double> letter_matrix(int z) const {
    Mat2<double> m = lift_representative(gens[z / 2]);
    return (z & 1) ? m.adjugate() : m;
  }
};

namespace detail {
inline double arc_gap(const Arc& a, const Arc& b) {
  double d1 = frac01(b.l - a.r()), d2 = frac01(a.l - b.r());
  return std::min(d1, d2);
}
}  // namespace detail

// Scans radii r for arcs D_{g^-1} of radius r about the repelling points and
// D_g = hull of g(S^1 \ D_{g^-1}) inflated by eta.
inline SchottkyCertificate certify_schottky(const std::vector<MoebiusR>& gens, double eta = 1e-9,
                                            double r_min = 1e-4) {
  if (gens.empty()) throw PreconditionFailed("no generators");
  struct Axis { double repel; Mat2<double> m; };
  std::vector<Axis> axes;
  for (auto& g : gens) {
    if (g.is_identity()) throw IdentityInput("Schottky generator is the identity");
    auto fp = fixed_points(g);
    if (fp.size() != 2) throw PreconditionFailed("Schottky generators must be hyperbolic");
    axes.push_back({fp[1].theta, lift_representative(g)});
  }
  for (double r = 0.2; r >= r_min; r *= 0.85) {
    std::vector<Arc> arcs(2 * gens.size());
    bool ok = true;
    for (size_t i = 0; i < gens.size() && ok; ++i) {
      Arc rep = Arc::around(axes[i].repel, r);
      Arc comp{rep.r(), 1 - rep.len};
      try {
        arcs[2 * i] = image_arc(axes[i].m, comp, eta);
      } catch (const CertificationFailedAtResolution&) {
        ok = false;
      }
      arcs[2 * i + 1] = rep;
    }
    if (!ok || !all_disjoint(arcs)) continue;
    SchottkyCertificate c{gens, arcs, r, 1.0};
    for (size_t i = 0; i < arcs.size(); ++i)
      for (size_t j = i + 1; j < arcs.size(); ++j) c.min_gap = std::min(c.min_gap, detail::arc_gap(arcs[i], arcs[j]));
    return c;
  }
  throw CertificationFailedAtResolution("no disjoint Schottky arcs found down to radius " + scalar_str(r_min));
}

// ---- ping-pong for parametrized words ---------------------------------------------

// phi(t) = mu(m t); C is a finite union of arcs (points allowed, len 0).
struct PingPongFamily {
  OneParamSubgroup<double> mu;
  long m = 1;
  std::vector<Arc> attracting;

  // Fix mu as zero-length arcs.
  static PingPongFamily from_subgroup(const OneParamSubgroup<double>& mu, long m = 1) {
    PingPongFamily f{mu, m, {}};
    for (auto& p : fixed_points(one_param(mu, 1.0))) f.attracting.push_back({p.theta, 0});
    return f;
  }
  IMat at(double t) const { return interval_one_param(mu, static_cast<double>(m) * t); }
};

struct PingPongCertificate {
  std::vector<std::vector<Arc>> U;  // U_i inflating C_i
  double inflation = 0;
  double M = 0;  // parameter threshold: |t| >= M
  std::vector<std::string> evidence;
  std::vector<Arc> attract_plus;   // g_1 U_1
  std::vector<Arc> attract_minus;  // U_k
};

namespace detail {
inline bool arc_sets_disjoint(const std::vector<Arc>& X, const std::vector<Arc>& Y) {
  for (auto& x : X)
    for (auto& y : Y)
      if (!arcs_disjoint(x, y)) return false;
  return true;
}
inline std::vector<Arc> image_arcs(const Mat2<double>& g, const std::vector<Arc>& X) {
  std::vector<Arc> out;
  for (auto& x : X) out.push_back(image_arc(g, x));
  return out;
}
inline bool arcs_cover(std::vector<Arc> arcs) {
  double total = 0;
  for (auto& a : arcs) total += a.len;
  if (total < 1) return false;
  // sweep from an arc start
  for (auto& a : arcs) a.l = frac01(a.l);
  std::sort(arcs.begin(), arcs.end(), [](const Arc& x, const Arc& y) { return x.l < y.l; });
  double start = arcs[0].l, reach = arcs[0].r();
  for (size_t i = 1; i < arcs.size(); ++i) {
    if (arcs[i].l > reach) return false;
    reach = std::max(reach, arcs[i].r());
  }
  return reach >= start + 1;
}
// phi(t)(K) inside some arc of U for every complementary arc K of U.
inline bool maps_into(const IMat& phi, const std::vector<Arc>& U) {
  for (auto& K : complement(U)) {
    Arc im;
    try {
      im = image_arc(phi, K);
    } catch (const CertificationFailedAtResolution&) {
      return false;
    }
    bool inside = false;
    for (auto& u : U) inside = inside || arc_within(im, u);
    if (!inside) return false;
  }
  return true;
}
}  // namespace detail

// psi(t) = g_1 phi_1(t) ... g_k phi_k(t). Finds U_i inflating C_i with
// U_i disjoint from g_{i+1} U_{i+1} and M with phi_i(t)^{+-1}(S^1 \ U_i) in U_i
// for |t| >= M. Checking t = +-M suffices: a flow trajectory from the
// complement enters the arc of U about the fixed point it tends to and never
// leaves it, so the set of good times is a ray.
inline PingPongCertificate certify_pingpong(const std::vector<PingPongFamily>& fams, const std::vector<MoebiusR>& gs,
                                            double resolution = 1e-6, double M_max = 1e6) {
  const size_t k = fams.size();
  if (k == 0 || gs.size() != k) throw PreconditionFailed("need one g_i per family");
  std::vector<Mat2<double>> G;
  for (auto& g : gs) G.push_back(lift_representative(g));
  for (size_t i = 0; i < k; ++i) {
    if (fams[i].attracting.empty()) throw PreconditionFailed("empty attracting set");
    if (fams[i].mu.kind == ParamKind::Elliptic) throw PreconditionFailed("elliptic families are not attracting");
    size_t j = (i + 1) % k;
    if (!detail::arc_sets_disjoint(fams[i].attracting, detail::image_arcs(G[j], fams[j].attracting)))
      throw PreconditionFailed("C_" + std::to_string(i + 1) + " meets g_" + std::to_string(j + 1) + " C_" +
                               std::to_string(j + 1));
  }
  {
    auto A = detail::image_arcs(G[0], fams[0].attracting);
    A.insert(A.end(), fams[k - 1].attracting.begin(), fams[k - 1].attracting.end());
    if (detail::arcs_cover(A)) throw PreconditionFailed("g_1 C_1 and C_k cover the circle");
  }
  for (double e = 0.1; e >= resolution; e *= 0.7) {
    std::vector<std::vector<Arc>> U(k);
    bool ok = true;
    for (size_t i = 0; i < k; ++i) {
      for (auto& c : fams[i].attracting) U[i].push_back(c.inflated(e));
      ok = ok && all_disjoint(U[i]);
    }
    if (!ok) continue;
    try {
      for (size_t i = 0; i < k && ok; ++i) {
        size_t j = (i + 1) % k;
        ok = detail::arc_sets_disjoint(U[i], detail::image_arcs(G[j], U[j]));
      }
    } catch (const CertificationFailedAtResolution&) {
      ok = false;
    }
    if (!ok) continue;
    auto good = [&](double M) {
      for (size_t i = 0; i < k; ++i)
        if (!detail::maps_into(fams[i].at(M), U[i]) || !detail::maps_into(fams[i].at(-M), U[i])) return false;
      return true;
    };
    double hi = 1;
    while (hi <= M_max && !good(hi)) hi *= 2;
    if (hi > M_max) continue;
    double lo = hi / 2;
    if (good(lo)) lo = 0;
    for (int it = 0; it < 40 && hi - lo > resolution * std::max(1.0, hi); ++it) {
      double mid = 0.5 * (lo + hi);
      if (good(mid)) hi = mid;
      else lo = mid;
    }
    PingPongCertificate cert;
    cert.U = U;
    cert.inflation = e;
    cert.M = hi;
    for (size_t i = 0; i < k; ++i) {
      size_t j = (i + 1) % k;
      std::ostringstream os;
      os.precision(12);
      os << "U_" << i + 1 << " disjoint from g_" << j + 1 << " U_" << j + 1 << "; phi_" << i + 1
         << "(+-M)(S^1 \\ U_" << i + 1 << ") inside U_" << i + 1 << " at M = " << hi;
      cert.evidence.push_back(os.str());
    }
    cert.attract_plus = detail::image_arcs(G[0], U[0]);
    cert.attract_minus = U[k - 1];
    cert.evidence.push_back("psi(t) doubly attracting to (g_1 U_1, U_k) for |t| >= M; <psi(t)> is infinite cyclic");
    return cert;
  }
  throw CertificationFailedAtResolution("no ping-pong neighbourhoods certified down to " + scalar_str(resolution));
}

// psi(t) as a Moebius element, for evaluation and spot checks.
inline MoebiusR pingpong_word(const std::vector<PingPongFamily>& fams, const std::vector<MoebiusR>& gs, double t) {
  MoebiusR acc;
  for (size_t i = 0; i < fams.size(); ++i)
    acc = acc * gs[i] * one_param(fams[i].mu, static_cast<double>(fams[i].m) * t);
  return acc;
}

}  // namespace flexcircle
