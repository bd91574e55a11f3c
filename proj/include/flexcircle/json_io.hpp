#pragma once

// JSON persistence for matrices, presentations, representations, circle
// actions, avoidance certificates and spectra.

#include <map>
#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "flexcircle/baumslag.hpp"
#include "flexcircle/circle.hpp"
#include "flexcircle/dynamics.hpp"
#include "flexcircle/pulling.hpp"
#include "flexcircle/representation.hpp"
#include "flexcircle/spectra.hpp"
#include "flexcircle/words.hpp"

namespace flexcircle::json_io {

using json = nlohmann::ordered_json;

// ---- scalars and matrices -------------------------------------------------------------

inline Rational rational_from(const json& j) {
  if (j.is_string()) return parse_rational(j.get<std::string>());
  if (j.is_number_integer()) return Rational(j.get<long>());
  if (j.is_number()) return parse_rational(j.dump());
  throw ParseError("expected a rational, got " + j.dump());
}

inline double real_from(const json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) return parse_rational(j.get<std::string>()).get_d();
  throw ParseError("expected a real number, got " + j.dump());
}

inline std::string rational_str(const Rational& r) { return r.get_str(); }

// Field tag of an exact matrix: "rational" or "quad:D".
inline std::string exact_field(const Mat2<Quad>& m) {
  long d = 0;
  for (const Quad* e : {&m.a, &m.b, &m.c, &m.d}) {
    if (e->d() == 0) continue;
    if (d != 0 && d != e->d()) throw FieldMismatch("entries from Q(sqrt " + std::to_string(d) + ") and Q(sqrt " +
                                                   std::to_string(e->d()) + ")");
    d = e->d();
  }
  return d == 0 ? "rational" : "quad:" + std::to_string(d);
}

template <class X>
json rows(const X& a, const X& b, const X& c, const X& d) {
  return json::array({json::array({a, b}), json::array({c, d})});
}

inline json to_json(const MoebiusX& g) {
  const auto& m = g.matrix();
  return {{"field", exact_field(m)},
          {"entries", rows(m.a.str(), m.b.str(), m.c.str(), m.d.str())}};
}
inline json to_json(const MoebiusR& g) {
  const auto& m = g.matrix();
  return {{"field", "real"}, {"entries", rows(m.a, m.b, m.c, m.d)}};
}
inline json to_json(const MoebiusC& g) {
  const auto& m = g.matrix();
  auto c = [](const Complex& z) { return json::array({z.real(), z.imag()}); };
  return {{"field", "complex"}, {"entries", rows(c(m.a), c(m.b), c(m.c), c(m.d))}};
}

// A parsed matrix in whichever field the file names.
struct MatrixValue {
  std::string field;
  std::optional<Mat2<Quad>> exact;
  std::optional<Mat2<double>> real;
  std::optional<Mat2<Complex>> complex;

  bool is_exact() const { return exact.has_value(); }
  Mat2<double> as_real() const {
    if (real) return *real;
    if (exact) return {exact->a.to_double(), exact->b.to_double(), exact->c.to_double(), exact->d.to_double()};
    for (const Complex* z : {&complex->a, &complex->b, &complex->c, &complex->d})
      if (z->imag() != 0) throw FieldMismatch("complex matrix has no real form");
    return {complex->a.real(), complex->b.real(), complex->c.real(), complex->d.real()};
  }
};

inline MatrixValue matrix_from(const json& j) {
  if (!j.is_object() || !j.contains("field") || !j.contains("entries"))
    throw ParseError("matrix needs 'field' and 'entries'");
  const json& e = j.at("entries");
  if (!e.is_array() || e.size() != 2 || !e[0].is_array() || e[0].size() != 2 || !e[1].is_array() || e[1].size() != 2)
    throw ParseError("entries must be [[a,b],[c,d]]");
  MatrixValue v;
  v.field = j.at("field").get<std::string>();
  auto at = [&](int i, int k) -> const json& { return e[i][k]; };
  if (v.field == "real") {
    v.real = Mat2<double>{real_from(at(0, 0)), real_from(at(0, 1)), real_from(at(1, 0)), real_from(at(1, 1))};
  } else if (v.field == "rational") {
    v.exact = Mat2<Quad>{Quad(rational_from(at(0, 0))), Quad(rational_from(at(0, 1))), Quad(rational_from(at(1, 0))),
                         Quad(rational_from(at(1, 1)))};
  } else if (v.field.rfind("quad:", 0) == 0) {
    long D;
    try {
      D = std::stol(v.field.substr(5));
    } catch (const std::exception&) {
      throw ParseError("bad field '" + v.field + "'");
    }
    auto q = [&](const json& x) {
      Quad r = x.is_string() ? parse_quad(x.get<std::string>()) : Quad(rational_from(x));
      if (r.d() != 0 && r.d() != D) throw FieldMismatch("entry " + r.str() + " is not in " + v.field);
      return r;
    };
    Quad::sqrt_of(D);  // rejects square D
    v.exact = Mat2<Quad>{q(at(0, 0)), q(at(0, 1)), q(at(1, 0)), q(at(1, 1))};
  } else if (v.field == "complex") {
    auto c = [](const json& x) {
      if (x.is_number()) return Complex(x.get<double>(), 0.0);
      if (!x.is_array() || x.size() != 2) throw ParseError("complex entry must be [re, im]");
      return Complex(real_from(x[0]), real_from(x[1]));
    };
    v.complex = Mat2<Complex>{c(at(0, 0)), c(at(0, 1)), c(at(1, 0)), c(at(1, 1))};
  } else {
    throw ParseError("unknown field '" + v.field + "'");
  }
  return v;
}

inline MoebiusX moebius_exact(const MatrixValue& v) {
  if (!v.exact) throw InexactInput("matrix over " + v.field + " where an exact field is needed");
  const auto& m = *v.exact;
  return MoebiusX(m.a, m.b, m.c, m.d);
}
inline MoebiusR moebius_real(const MatrixValue& v) {
  Mat2<double> m = v.as_real();
  return MoebiusR(m.a, m.b, m.c, m.d, 1e-9);
}

// ---- presentations ------------------------------------------------------------------

namespace detail {

inline json generator_json(const GeneratorInfo& g) {
  if (g.order == 0) return g.name;
  return {{"name", g.name}, {"order", g.order}};
}

inline json factor_json(const Presentation& p, int factor) {
  json a = json::array();
  for (auto& g : p.generators())
    if (g.factor == factor) a.push_back(generator_json(g));
  return a;
}

// A vertex group from its generator list: free, cyclic, or the free product of
// the pieces in order.
inline Presentation factor_from(const json& j) {
  if (!j.is_array() || j.empty()) throw ParseError("a factor is a nonempty generator list");
  std::vector<std::pair<std::string, long>> gens;
  for (auto& g : j) {
    if (g.is_string()) gens.push_back({g.get<std::string>(), 0});
    else if (g.is_object() && g.contains("name"))
      gens.push_back({g.at("name").get<std::string>(), g.value("order", 0L)});
    else throw ParseError("generator must be a name or {name, order}");
  }
  bool all_free = true;
  for (auto& [n, o] : gens) all_free = all_free && o == 0;
  if (all_free) {
    std::vector<std::string> names;
    for (auto& g : gens) names.push_back(g.first);
    return Presentation::free(static_cast<int>(names.size()), names);
  }
  auto piece = [](const std::pair<std::string, long>& g) {
    return g.second == 0 ? Presentation::free(1, {g.first}) : Presentation::finite_cyclic(g.second, g.first);
  };
  Presentation acc = piece(gens[0]);
  for (size_t i = 1; i < gens.size(); ++i) acc = Presentation::free_product(acc, piece(gens[i]));
  return acc;
}

inline std::pair<std::string, std::string> edge_words(const json& j) {
  if (!j.is_array() || j.size() != 2) throw ParseError("edge must be [word, word]");
  return {j[0].get<std::string>(), j[1].get<std::string>()};
}

}  // namespace detail

inline json to_json(const Presentation& p) {
  using K = Presentation::Kind;
  json j;
  switch (p.kind()) {
    case K::Free: {
      json names = json::array();
      for (auto& g : p.generators()) names.push_back(g.name);
      j = {{"kind", "free"}, {"generators", names}};
      break;
    }
    case K::FiniteCyclic:
      j = {{"kind", "cyclic"}, {"generator", p.name(0)}, {"order", p.order(0)}};
      break;
    case K::FreeProduct:
      j = {{"kind", "free_product"}, {"factors", json::array({detail::factor_json(p, 0), detail::factor_json(p, 1)})}};
      break;
    case K::Amalgam:
      j = {{"kind", "amalgam"},
           {"factors", json::array({detail::factor_json(p, 0), detail::factor_json(p, 1)})},
           {"edge", json::array({p.format(p.edge_a()), p.format(p.edge_b())})}};
      break;
    case K::HNN:
      j = {{"kind", "hnn"},
           {"base", detail::factor_json(p, 0)},
           {"stable", p.name(p.stable())},
           {"edge", json::array({p.format(p.edge_a()), p.format(p.edge_b())})}};
      break;
  }
  return j;
}

inline Presentation presentation_from(const json& j) {
  if (!j.is_object() || !j.contains("kind")) throw ParseError("presentation needs 'kind'");
  std::string kind = j.at("kind").get<std::string>();
  if (kind == "free") {
    auto names = j.at("generators").get<std::vector<std::string>>();
    return Presentation::free(static_cast<int>(names.size()), names);
  }
  if (kind == "cyclic") return Presentation::finite_cyclic(j.at("order").get<long>(), j.at("generator").get<std::string>());
  if (kind == "free_product" || kind == "amalgam") {
    const json& f = j.at("factors");
    if (!f.is_array() || f.size() != 2) throw ParseError("'factors' must list two generator lists");
    Presentation A = detail::factor_from(f[0]), B = detail::factor_from(f[1]);
    if (kind == "free_product") return Presentation::free_product(A, B);
    auto [ca, cb] = detail::edge_words(j.at("edge"));
    return Presentation::amalgam(A, B, A.parse(ca), B.parse(cb));
  }
  if (kind == "hnn") {
    Presentation A = detail::factor_from(j.at("base"));
    auto [c, cs] = detail::edge_words(j.at("edge"));
    return Presentation::hnn(A, A.parse(c), A.parse(cs), j.value("stable", std::string("s")));
  }
  throw ParseError("unknown presentation kind '" + kind + "'");
}

// ---- representations -----------------------------------------------------------------

template <class T>
json to_json(const Representation<T>& rep) {
  json images = json::object();
  const Presentation& p = rep.presentation();
  for (int i = 0; i < p.rank(); ++i) images[p.name(i)] = to_json(rep.image(i));
  return {{"presentation", to_json(p)}, {"images", images}};
}

// A representation file read as exact when every matrix is exact, else real.
struct LoadedRep {
  Presentation presentation;
  std::optional<RepX> exact;
  std::optional<RepR> real;
  std::vector<std::string> warnings;

  RepR as_real() const { return exact ? exact->to_real() : *real; }
};

inline LoadedRep rep_from(const json& j) {
  if (!j.is_object() || !j.contains("presentation") || !j.contains("images"))
    throw ParseError("representation needs 'presentation' and 'images'");
  LoadedRep out;
  out.presentation = presentation_from(j.at("presentation"));
  const json& im = j.at("images");
  if (!im.is_object()) throw ParseError("'images' must map generator names to matrices");
  std::map<std::string, MatrixValue> vals;
  bool exact = true;
  for (auto& [name, m] : im.items()) {
    out.presentation.index_of(name);  // UnknownGenerator for stray names
    vals.emplace(name, matrix_from(m));
    exact = exact && vals.at(name).is_exact();
  }
  if (exact) {
    std::map<std::string, MoebiusX> by;
    for (auto& [n, v] : vals) by.emplace(n, moebius_exact(v));
    out.exact = RepX::from_names(out.presentation, by);
  } else {
    std::map<std::string, MoebiusR> by;
    for (auto& [n, v] : vals) by.emplace(n, moebius_real(v));
    out.real = RepR::from_names(out.presentation, by);
  }
  return out;
}

// ---- circle homeomorphisms and actions --------------------------------------------------

inline CircleHomeo homeo_from(const json& j, const std::string& name = "custom") {
  if (!j.is_object() || !j.contains("type")) throw ParseError("homeomorphism needs 'type'");
  std::string type = j.at("type").get<std::string>();
  if (type == "rotation") {
    const json& a = j.at("alpha");
    if (a.is_string() || a.is_number_integer()) return CircleHomeo::rotation(rational_from(a));
    return CircleHomeo::rotation(a.get<double>());
  }
  if (type == "moebius") {
    CircleHomeo f = CircleHomeo::moebius(moebius_real(matrix_from(j.at("matrix"))));
    long n = j.value("lift", 0L);
    return n == 0 ? f : f.shifted(n);
  }
  if (type == "pl") {
    std::vector<Rational> xs, ys;
    for (auto& x : j.at("xs")) xs.push_back(rational_from(x));
    for (auto& y : j.at("ys")) ys.push_back(rational_from(y));
    return piecewise_linear(std::move(xs), std::move(ys), name);
  }
  throw ParseError("unknown homeomorphism type '" + type + "'");
}

// An action file ({presentation, generators}) or a representation file.
inline CircleAction action_from(const json& j) {
  if (j.contains("images")) return CircleAction::from_representation(rep_from(j).as_real());
  if (!j.contains("presentation") || !j.contains("generators"))
    throw ParseError("action needs 'presentation' and 'generators'");
  Presentation p = presentation_from(j.at("presentation"));
  const json& g = j.at("generators");
  std::vector<std::optional<CircleHomeo>> lifts(p.rank());
  for (auto& [name, spec] : g.items()) lifts[p.index_of(name)] = homeo_from(spec, name);
  std::vector<CircleHomeo> out;
  for (int i = 0; i < p.rank(); ++i) {
    if (!lifts[i]) throw UnknownGenerator("no homeomorphism for '" + p.name(i) + "'");
    out.push_back(*lifts[i]);
  }
  return CircleAction(p, out);
}

// ---- one-parameter subgroups, templates -------------------------------------------------

inline ParamKind param_kind_from(const std::string& s) {
  if (s == "hyperbolic") return ParamKind::Hyperbolic;
  if (s == "parabolic") return ParamKind::Parabolic;
  if (s == "elliptic") return ParamKind::Elliptic;
  throw ParseError("unknown subgroup kind '" + s + "'");
}

inline OneParamSubgroup<Quad> mu_from(const json& j) {
  OneParamSubgroup<Quad> mu;
  mu.kind = param_kind_from(j.at("kind").get<std::string>());
  if (j.contains("conjugator")) {
    MatrixValue v = matrix_from(j.at("conjugator"));
    if (!v.exact) throw InexactInput("conjugator must be exact");
    mu.conjugator = *v.exact;
  }
  return mu;
}

inline json to_json(const OneParamSubgroup<Quad>& mu) {
  const auto& P = mu.conjugator;
  return {{"kind", kind_name(mu.kind)},
          {"conjugator", {{"field", exact_field(P)}, {"entries", rows(P.a.str(), P.b.str(), P.c.str(), P.d.str())}}}};
}

inline WordTemplate template_from(const json& j) {
  if (!j.is_array()) throw ParseError("template must be a list of {g, m} slots");
  WordTemplate t;
  for (auto& s : j) {
    MatrixValue v = matrix_from(s.at("g"));
    if (!v.exact) throw InexactInput("template matrices must be exact");
    t.slots.push_back({*v.exact, s.value("m", 1L)});
  }
  return t;
}

// ---- reports --------------------------------------------------------------------------

inline json to_json(const RootInterval& r) {
  return {{"lo", rational_str(r.lo)}, {"hi", rational_str(r.hi)}, {"multiplicity", r.multiplicity},
          {"approx", r.approx()}};
}

inline json to_json(const TraceRoot& r) {
  json j = to_json(r.z);
  j["t_lo"] = r.t_lo;
  j["t_hi"] = r.t_hi;
  return j;
}

inline json to_json(const AvoidanceCertificate& c) {
  json entries = json::array();
  for (auto& e : c.entries) {
    json roots = json::array();
    for (auto& r : e.roots) roots.push_back(to_json(r));
    entries.push_back({{"q", e.q}, {"w", e.w}, {"polynomial", e.polynomial}, {"roots", roots},
                       {"evidence", e.evidence}, {"value", e.value}, {"gap", e.gap}, {"exact_miss", e.exact_miss}});
  }
  return {{"structure", structure_name(c.structure)},
          {"kind", kind_name(c.kind)},
          {"z", c.z.str()},
          {"t", c.t},
          {"tol", c.tol},
          {"margin", c.margin},
          {"candidates_tried", c.candidates_tried},
          {"relations_hold", c.relations_hold},
          {"ok", c.ok()},
          {"entries", entries},
          {"notes", c.notes}};
}

inline json to_json(const SpectrumReport& s) {
  json recs = json::array();
  for (auto& r : s.records) {
    json j = {{"word", r.text}, {"tr2", r.tr2}};
    if (r.tr2_exact) j["tr2_exact"] = r.tr2_exact->str();
    j["class"] = r.cls;
    j["rot"] = r.rot;
    j["err"] = r.err;
    if (r.order) j["order"] = r.order;
    recs.push_back(j);
  }
  json counts = json::object();
  for (auto& [k, v] : s.class_counts) counts[k] = v;
  json j = {{"radius", s.R}, {"records", recs}, {"class_counts", counts}};
  j["min_dist4"] = std::isinf(s.min_dist4) ? json(nullptr) : json(s.min_dist4);
  return j;
}

inline json to_json(const LimitSetReport& r) {
  json gaps = json::array();
  for (auto& g : r.gaps) gaps.push_back(json::array({g.l, g.r()}));
  json j = {{"verdict", r.verdict_name()}, {"radius", r.radius}, {"max_gap", r.max_gap}, {"gaps", gaps}};
  if (r.orbit) j["orbit"] = r.orbit->points;
  return j;
}

}  // namespace flexcircle::json_io
