// flexcircle: command-line front end for the library.
// Exit codes: 0 ok, 2 validation error, 3 inconclusive at scale.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <sstream>

#include "flexcircle/exotic.hpp"
#include "flexcircle/json_io.hpp"

using namespace flexcircle;
namespace jio = flexcircle::json_io;
using jio::json;

namespace {

// Budget caps.
constexpr int kMaxRadius = 12;
constexpr long kMaxIters = 100000000;
constexpr int kMaxGrid = 1000000;

struct Common {
  std::string mode = "exact";
  int radius = -1;
  long iters = -1;
  double tol = -1;
  unsigned long seed = 1;
  std::string out;
  std::vector<std::string> warnings;

  int radius_or(int d) const { return radius < 0 ? d : radius; }
  long iters_or(long d) const { return iters < 0 ? d : iters; }
  double tol_or(double d) const { return tol < 0 ? d : tol; }

  void validate() const {
    if (radius > kMaxRadius) throw BallTooLarge("radius " + std::to_string(radius) + " exceeds cap " + std::to_string(kMaxRadius));
    if (iters == 0 || iters > kMaxIters) throw ValidationError("iters must lie in [1, " + std::to_string(kMaxIters) + "]");
  }
  void warn(const std::string& w) {
    warnings.push_back(w);
    std::cerr << "warning: " << w << "\n";
  }
  json header(const std::string& cmd) const {
    return {{"command", cmd}, {"seed", seed}, {"mode", mode}};
  }
};

void add_common(CLI::App* c, Common& o) {
  c->add_option("--mode", o.mode, "exact or float")->check(CLI::IsMember({"exact", "float"}));
  c->add_option("--radius", o.radius, "word-length radius")->check(CLI::NonNegativeNumber);
  c->add_option("--iters", o.iters, "iteration count for rotation numbers")->check(CLI::PositiveNumber);
  c->add_option("--tol", o.tol, "tolerance")->check(CLI::NonNegativeNumber);
  c->add_option("--seed", o.seed, "random seed (recorded in the output)");
  c->add_option("--out", o.out, "write the report here instead of stdout");
}

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
}

void emit(const Common& o, const std::string& text) {
  if (o.out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(o.out);
  if (!f) throw ValidationError("cannot write '" + o.out + "'");
  f << text;
}

void emit_json(const Common& o, json j) {
  j["warnings"] = o.warnings;
  emit(o, j.dump(2) + "\n");
}

// Exact input under --mode float is rounded; real input under --mode exact
// degrades to float with a warning.
struct ModalRep {
  std::optional<RepX> exact;
  RepR real;
};
ModalRep modal_rep(const jio::LoadedRep& L, Common& o) {
  for (auto& w : L.warnings) o.warn(w);
  if (o.mode == "exact" && !L.exact) o.warn("input matrices are not exact; continuing in float mode");
  if (o.mode == "exact" && L.exact) return {L.exact, L.exact->to_real()};
  return {std::nullopt, L.as_real()};
}

std::string poly_text(const QPoly& p) {
  std::ostringstream os;
  bool first = true;
  for (size_t k = 0; k < p.coeffs().size(); ++k) {
    if (p.coeffs()[k] == Quad(0)) continue;
    if (!first) os << "; ";
    os << p.coeffs()[k].str() << " " << k;
    first = false;
  }
  return first ? "0" : os.str();
}

// ---- rot ----------------------------------------------------------------------------

json rot_moebius(const jio::MatrixValue& v, long n) {
  json r;
  IsometryClass cls;
  MoebiusR g = jio::moebius_real(v);
  if (v.exact) cls = classify(jio::moebius_exact(v));
  else cls = classify(g);
  Estimate num = rotation_number(CircleHomeo::moebius(g), n);
  r["class"] = cls.name();
  r["rot"] = cls.rotation_number();
  r["err"] = 0.0;
  r["numeric"] = {{"rot", num.value}, {"err", num.err}};
  r["agree"] = circle_distance(cls.rotation_number(), num.value) <= 2 * num.err;
  if (cls.kind == IsometryClass::Hyperbolic) r["length"] = cls.length;
  return r;
}

json rot_homeo(const CircleHomeo& f, long n) {
  Estimate t = translation_number(f, n);
  json r = {{"rot", frac01(t.value)}, {"err", t.err}, {"translation", t.value}};
  if (f.kind() == CircleHomeo::Kind::Rotation)
    if (auto x = f.exact_lift(Rational(0))) {
      Rational e = *x - detail::rational_floor(*x);
      r["exact"] = e.get_str();
    }
  return r;
}

int cmd_rot(const std::string& path, const std::string& word, Common& o) {
  long n = o.iters_or(100000);
  json in = read_json(path);
  json out = o.header("rot");
  out["iters"] = n;
  json results = json::array();
  if (in.contains("field")) {
    json r = rot_moebius(jio::matrix_from(in), n);
    r["element"] = "matrix";
    results.push_back(r);
  } else if (in.contains("type")) {
    json r = rot_homeo(jio::homeo_from(in), n);
    r["element"] = in.at("type");
    results.push_back(r);
  } else {
    CircleAction act = jio::action_from(in);
    const Presentation& p = act.presentation();
    std::vector<Word> words;
    if (!word.empty()) words.push_back(p.parse(word));
    else
      for (int i = 0; i < p.rank(); ++i) words.push_back({{i, 1}});
    for (auto& w : words) {
      json r = rot_homeo(act.evaluate(w), n);
      // words in exact rigid rotations are exact rotations
      std::optional<Rational> sum = Rational(0);
      for (auto& l : w) {
        const CircleHomeo& g = act.generator(l.gen);
        auto x = g.exact_lift(Rational(0));
        if (g.kind() != CircleHomeo::Kind::Rotation || !x) sum.reset();
        if (sum) *sum += *x * l.exp;
      }
      if (sum && !w.empty()) r["exact"] = Rational(*sum - detail::rational_floor(*sum)).get_str();
      r["element"] = p.format(w);
      results.push_back(r);
    }
  }
  out["results"] = results;
  emit_json(o, out);
  return 0;
}

// ---- spectrum ---------------------------------------------------------------------------

int cmd_spectrum(const std::string& path, bool as_json, Common& o) {
  int R = o.radius_or(3);
  ModalRep m = modal_rep(jio::rep_from(read_json(path)), o);
  SpectrumReport s = m.exact ? trace_spectrum(*m.exact, R) : trace_spectrum(m.real, R);
  if (as_json) {
    json out = o.header("spectrum");
    out["spectrum"] = jio::to_json(s);
    emit_json(o, out);
    return 0;
  }
  std::ostringstream os;
  os << "# seed " << o.seed << " mode " << (m.exact ? "exact" : "float") << " radius " << R << "\n";
  for (auto& w : o.warnings) os << "# warning: " << w << "\n";
  os << s.csv();
  emit(o, os.str());
  return 0;
}

// ---- pull-apart ---------------------------------------------------------------------------

Presentation factor_presentation(const Presentation& p, int f) { return jio::detail::factor_from(jio::detail::factor_json(p, f)); }

template <class T>
Representation<T> restrict_to(const Representation<T>& rep, int f) {
  Presentation sub = factor_presentation(rep.presentation(), f);
  std::vector<Moebius<T>> im;
  for (int i = 0; i < rep.presentation().rank(); ++i)
    if (rep.presentation().factor(i) == f) im.push_back(rep.image(i));
  return Representation<T>(sub, im);
}

template <class T>
DeformationFamily<T> family_from_job(const json& job, const Representation<T>& base, const std::string& structure) {
  std::optional<OneParamSubgroup<T>> mu;
  if constexpr (is_exact_v<T>) {
    if (job.contains("mu")) mu = jio::mu_from(job.at("mu"));
  } else {
    if (job.contains("mu")) throw ExactModeRequired("'mu' is only read in exact mode");
  }
  const Presentation& p = base.presentation();
  if (structure == "free") {
    if (p.kind() != Presentation::Kind::FreeProduct) throw PreconditionFailed("structure 'free' needs a free product base");
    if constexpr (is_exact_v<T>) {
      if (!mu) mu = choose_free_subgroup(base, 3);
      return free_family(restrict_to(base, 0), restrict_to(base, 1), *mu);
    } else {
      throw ExactModeRequired("the free structure picks mu in exact arithmetic");
    }
  }
  if (structure == "free_stable") {
    if constexpr (is_exact_v<T>) {
      if (!mu) mu = choose_free_subgroup(base, 3);
      return free_stable_family(base, *mu, job.value("stable", std::string("s")));
    } else {
      throw ExactModeRequired("the free_stable structure picks mu in exact arithmetic");
    }
  }
  if (structure == "amalgam") return amalgam_family(base, mu);
  if (structure == "hnn") return hnn_family(base, mu, job.value("branch_asserted", true));
  throw ValidationError("unknown structure '" + structure + "'");
}

std::vector<Quad> w_values(const json& j) {
  std::vector<Quad> W;
  if (!j.is_array()) throw ParseError("'W' must be a list");
  for (auto& x : j) W.push_back(x.is_string() ? parse_quad(x.get<std::string>()) : Quad(jio::rational_from(x)));
  return W;
}

template <class T>
json direct_check(const DeformationFamily<T>& fam, const Representation<T>& rep, const std::vector<Word>& Q,
                  const std::vector<Quad>& W, double tol) {
  RepR rr;
  if constexpr (is_exact_v<T>) rr = rep.to_real();
  else rr = rep;
  std::vector<double> targets{4.0};
  for (auto& w : W) targets.push_back(w.to_double());
  json rows = json::array();
  double margin = INFINITY;
  for (auto& q : Q) {
    double v = rr.evaluate(q).tr2(), gap = INFINITY;
    for (double t : targets) gap = std::min(gap, std::abs(v - t));
    margin = std::min(margin, gap);
    rows.push_back({{"q", fam.presentation().format(q)}, {"tr2", v}, {"gap", gap}});
  }
  return {{"entries", rows},
          {"margin", Q.empty() ? json(nullptr) : json(margin)},
          {"avoids", Q.empty() || margin > tol},
          {"relations_hold", rep.satisfies_relations()}};
}

template <class T>
int run_pull_apart(const json& job, const Representation<T>& base, Common& o) {
  std::string structure = job.at("structure").get<std::string>();
  DeformationFamily<T> fam = family_from_job(job, base, structure);
  const Presentation& p = fam.presentation();
  std::vector<Word> Q;
  if (job.contains("Q"))
    for (auto& s : job.at("Q")) Q.push_back(p.parse(s.get<std::string>()));
  if (job.contains("sample")) {
    const json& s = job.at("sample");
    int R = s.value("radius", 4);
    if (R > kMaxRadius) throw BallTooLarge("sample radius exceeds cap");
    for (auto& w : sample_q_words(fam, R, s.value("count", 25UL))) Q.push_back(w);
  }
  std::vector<Quad> W = job.contains("W") ? w_values(job.at("W")) : std::vector<Quad>{};
  double tol = job.value("tol", o.tol_or(1e-6));

  json out = o.header("pull-apart");
  out["structure"] = structure_name(fam.structure);
  out["mu"] = kind_name(fam.mu.kind);
  out["evidence"] = fam.evidence;
  json qs = json::array();
  for (auto& q : Q) qs.push_back(p.format(q));
  out["Q"] = qs;

  if (job.contains("nu")) {
    jio::MatrixValue v = jio::matrix_from(job.at("nu"));
    Moebius<T> nu;
    if constexpr (is_exact_v<T>) nu = jio::moebius_exact(v);
    else nu = jio::moebius_real(v);
    Representation<T> rep = nu.is_identity() ? base : deform(fam, nu);
    if (nu.is_identity()) o.warn("identity nu: the base representation is echoed");
    out["nu"] = jio::to_json(nu);
    out["rep"] = jio::to_json(rep);
    out["certificate"] = nullptr;
    out["check"] = direct_check(fam, rep, Q, W, tol);
    emit_json(o, out);
    return 0;
  }
  if constexpr (!is_exact_v<T>) {
    throw ExactModeRequired("certified avoidance needs an exact base representation");
  } else {
    AvoidanceProblem prob;
    prob.Q = Q;
    prob.W = W;
    prob.tol = tol;
    if (job.contains("window")) {
      const json& w = job.at("window");
      prob.window = std::make_pair(jio::rational_from(w.at(0)), jio::rational_from(w.at(1)));
    }
    if (job.contains("max_candidates")) prob.max_candidates = job.at("max_candidates").get<long>();
    AvoidanceResult r = find_avoiding_parameter(fam, prob);
    out["nu"] = jio::to_json(r.nu);
    out["rep"] = jio::to_json(r.rep);
    out["certificate"] = jio::to_json(r.certificate);
    out["check"] = direct_check(fam, r.rep, Q, W, tol);
    emit_json(o, out);
    return 0;
  }
}

int cmd_pull_apart(const std::string& path, Common& o) {
  json job = read_json(path);
  if (!job.is_object() || !job.contains("base") || !job.contains("structure"))
    throw ValidationError("job needs 'base' and 'structure'");
  if (job.contains("mode")) {
    std::string m = job.at("mode").get<std::string>();
    if (m != "exact" && m != "float") throw ValidationError("job mode must be exact or float");
    o.mode = m;
  }
  ModalRep m = modal_rep(jio::rep_from(job.at("base")), o);
  return m.exact ? run_pull_apart(job, *m.exact, o) : run_pull_apart(job, m.real, o);
}

// ---- baumslag -------------------------------------------------------------------------

int cmd_baumslag(const std::string& path, Common& o) {
  json job = read_json(path);
  WordTemplate t = jio::template_from(job.at("template"));
  OneParamSubgroup<Quad> mu = job.contains("mu") ? jio::mu_from(job.at("mu")) : OneParamSubgroup<Quad>{};
  TracePolynomial tp = trace_polynomial(t, mu);
  json out = o.header("baumslag");
  out["kind"] = kind_name(mu.kind);
  out["polynomial"] = tp.p.str();
  out["denom_power"] = tp.denom_power;
  out["trace"] = tp.str();
  out["fix_disjoint"] = fix_disjoint(t, mu);
  if (job.contains("x")) {
    const json& x = job.at("x");
    Quad xv = x.is_string() ? parse_quad(x.get<std::string>()) : Quad(jio::rational_from(x));
    TraceRootReport rep = solve_trace_equation(tp, xv);
    json roots = json::array();
    for (auto& r : rep.roots) roots.push_back(jio::to_json(r));
    out["x"] = xv.str();
    out["equation"] = poly_text(rep.equation);
    out["roots"] = roots;
    out["distinct"] = rep.distinct();
    out["with_multiplicity"] = rep.with_multiplicity();
  }
  emit_json(o, out);
  return 0;
}

// ---- compare ---------------------------------------------------------------------------

int cmd_compare(const std::string& f1, const std::string& f2, Common& o) {
  int R = o.radius_or(2);
  long n = o.iters_or(10000);
  CircleAction a = jio::action_from(read_json(f1)), b = jio::action_from(read_json(f2));
  auto ia = semiconj_invariant(a, R, n), ib = semiconj_invariant(b, R, n);
  CompareVerdict v = compare(ia, ib, o.tol_or(0.0));
  json out = o.header("compare");
  out["radius"] = R;
  out["iters"] = n;
  out["verdict"] = v.distinct ? "distinct" : "indistinguishable-at-scale";
  if (v.distinct) {
    out["witness"] = v.witness;
    out["gap"] = v.gap;
  }
  out["words"] = ia.words.size();
  out["tau_pairs"] = ia.tau_pairs.size();
  emit_json(o, out);
  return 0;
}

// ---- minimalize ------------------------------------------------------------------------

int cmd_minimalize(const std::string& path, bool gaps_only, int grid, Common& o) {
  if (grid < 10 || grid > kMaxGrid) throw ValidationError("grid must lie in [10, " + std::to_string(kMaxGrid) + "]");
  CircleAction act = jio::action_from(read_json(path));
  MinimalizeConfig cfg;
  cfg.limit.radius = o.radius_or(cfg.limit.radius);
  cfg.limit.n_iter = o.iters_or(cfg.limit.n_iter);
  cfg.grid = grid;
  cfg.tol = o.tol_or(cfg.tol);
  Minimalization m = minimalize(act, cfg);
  if (gaps_only) {
    emit(o, m.limit.gap_text());
    return 0;
  }
  json out = o.header("minimalize");
  out["case"] = case_name(m.tag);
  out["certified"] = m.certified;
  out["residual"] = m.residual;
  out["limit"] = jio::to_json(m.limit);
  if (m.orbit) out["orbit"] = m.orbit->points;
  json gens = json::array();
  for (auto& g : m.reduced.generators()) gens.push_back(g.describe());
  out["reduced"] = gens;
  emit_json(o, out);
  return 0;
}

// ---- exotic ----------------------------------------------------------------------------

json profile_json(const std::vector<FixedPoint>& p) {
  json a = json::array();
  for (auto& f : p)
    a.push_back({{"at", f.at}, {"type", f.name()}, {"left_disp", f.left_disp}, {"right_disp", f.right_disp}});
  return a;
}

int cmd_exotic_liegp(double eps, int free_radius, Common& o) {
  int R = o.radius_or(2);
  if (!(eps > 0 && eps <= 0.5)) throw ValidationError("eps must lie in (0, 1/2]");
  if (free_radius > kMaxRadius) throw BallTooLarge("free-orbit radius exceeds cap");
  LiegpPair P = build_liegp_pair(o.seed);
  WitnessConfig wc;
  wc.N = o.iters_or(wc.N);
  NonlinearityReport r = nonlinearity_witness(P.action(), R, eps, wc);
  json out = o.header("exotic liegp");
  out["radius"] = R;
  out["eps"] = eps;
  out["params"] = {{"field_scale", P.params.field_scale},
                   {"delta", P.params.delta},
                   {"kappa", P.params.kappa},
                   {"phase", P.params.phase}};
  out["sandwich_margin"] = P.sandwich_margin;
  out["fit_error"] = P.a_map.fit_error();
  out["profile_a"] = profile_json(r.profile_a);
  out["profile_b"] = profile_json(r.profile_b);
  out["C"] = r.C;
  out["closure_dist"] = r.closure_dist;
  out["closure_ok"] = r.closure_ok;
  out["alternating"] = r.alternating;
  out["mixed"] = r.mixed;
  out["obstruction"] = r.obstruction;
  out["scale_note"] = r.scale_note;
  out["ok"] = r.ok();
  if (free_radius > 0) {
    std::mt19937_64 rng(o.seed);
    double x = std::uniform_real_distribution<double>(0, 1)(rng);
    FreeOrbitVerdict f = free_orbit_search({P.a}, {P.a}, P.nu, x, free_radius);
    out["free_orbit"] = {{"x", x}, {"radius", free_radius}, {"free_at_scale", f.free_at_scale},
                         {"margin", f.margin}, {"words", f.words}, {"violations", f.violations.size()}};
  }
  emit_json(o, out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"flexcircle: circle actions, trace spectra and pulled-apart representations"};
  app.require_subcommand(1);
  Common o;
  std::string in1, in2, word;
  bool as_json = false, gaps_only = false;
  int grid = 10000, free_radius = 0;
  double eps = 1e-3;
  std::function<int()> run;

  auto* rot = app.add_subcommand("rot", "rotation and translation numbers");
  rot->add_option("input", in1, "matrix, homeomorphism, action or representation JSON")->required();
  rot->add_option("--word", word, "word to evaluate in an action file");
  add_common(rot, o);
  rot->callback([&] { run = [&] { return cmd_rot(in1, word, o); }; });

  auto* spec = app.add_subcommand("spectrum", "trace and rotation spectra over a ball");
  spec->add_option("rep", in1, "representation JSON")->required();
  spec->add_flag("--json", as_json, "JSON instead of CSV");
  add_common(spec, o);
  spec->callback([&] { run = [&] { return cmd_spectrum(in1, as_json, o); }; });

  auto* pull = app.add_subcommand("pull-apart", "deform a representation along a splitting");
  pull->add_option("job", in1, "job JSON")->required();
  add_common(pull, o);
  pull->callback([&] { run = [&] { return cmd_pull_apart(in1, o); }; });

  auto* baum = app.add_subcommand("baumslag", "trace polynomial of a word template");
  baum->add_option("job", in1, "template JSON")->required();
  add_common(baum, o);
  baum->callback([&] { run = [&] { return cmd_baumslag(in1, o); }; });

  auto* cmp = app.add_subcommand("compare", "semi-conjugacy invariants of two actions");
  cmp->add_option("first", in1, "action or representation JSON")->required();
  cmp->add_option("second", in2, "action or representation JSON")->required();
  add_common(cmp, o);
  cmp->callback([&] { run = [&] { return cmd_compare(in1, in2, o); }; });

  auto* mini = app.add_subcommand("minimalize", "minimal model of an action");
  mini->add_option("action", in1, "action or representation JSON")->required();
  mini->add_flag("--gaps", gaps_only, "print the gap list only");
  mini->add_option("--grid", grid, "semi-conjugacy residual grid");
  add_common(mini, o);
  mini->callback([&] { run = [&] { return cmd_minimalize(in1, gaps_only, grid, o); }; });

  auto* exo = app.add_subcommand("exotic", "exotic actions");
  exo->require_subcommand(1);
  auto* lie = exo->add_subcommand("liegp", "the nonlinear pair and its witness");
  lie->add_option("--eps", eps, "closure tolerance");
  lie->add_option("--free-radius", free_radius, "also run the free-orbit search at this radius");
  add_common(lie, o);
  lie->callback([&] { run = [&] { return cmd_exotic_liegp(eps, free_radius, o); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  try {
    o.validate();
    return run();
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const InconclusiveAtScale& e) {
    std::cerr << "inconclusive: " << e.what() << "\n";
    return 3;
  } catch (const json::exception& e) {
    std::cerr << "error: malformed input: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
