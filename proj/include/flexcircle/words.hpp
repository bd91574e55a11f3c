#pragma once

#include <algorithm>
#include <cstdlib>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "flexcircle/errors.hpp"

namespace flexcircle {

struct Letter {
  int gen = 0;
  long exp = 1;
  friend bool operator==(const Letter& x, const Letter& y) { return x.gen == y.gen && x.exp == y.exp; }
};
using Word = std::vector<Letter>;

struct GeneratorInfo {
  std::string name;
  long order = 0;  // 0 for infinite order
  int factor = 0;  // 0: first vertex group, 1: second vertex group, 2: stable letter
};

class Presentation {
 public:
  enum class Kind { Free, FiniteCyclic, FreeProduct, Amalgam, HNN };

  static Presentation free(int rank, std::vector<std::string> names = {}) {
    if (rank < 0) throw ValidationError("negative rank");
    Presentation p;
    p.kind_ = Kind::Free;
    for (int i = 0; i < rank; ++i) {
      std::string n = i < static_cast<int>(names.size()) ? names[i] : default_name(i);
      p.gens_.push_back({n, 0, 0});
    }
    p.check_names();
    return p;
  }
  static Presentation finite_cyclic(long order, std::string name = "a") {
    if (order < 1) throw ValidationError("cyclic order must be positive");
    Presentation p;
    p.kind_ = Kind::FiniteCyclic;
    p.gens_.push_back({std::move(name), order, 0});
    return p;
  }
  static Presentation free_product(const Presentation& x, const Presentation& y) {
    if (!x.is_basic() || !y.is_basic()) throw UnsupportedVertexGroup("free product factors must be free or cyclic");
    Presentation p;
    p.kind_ = Kind::FreeProduct;
    for (auto g : x.gens_) p.gens_.push_back({g.name, g.order, 0});
    for (auto g : y.gens_) p.gens_.push_back({g.name, g.order, 1});
    p.check_names();
    return p;
  }
  // c_a and c_b are words over the local generators of A and B.
  static Presentation amalgam(const Presentation& A, const Presentation& B, const Word& c_a, const Word& c_b) {
    if (!A.is_basic() || !B.is_basic()) throw UnsupportedVertexGroup("amalgam vertex groups must be free or cyclic");
    Presentation p;
    p.kind_ = Kind::Amalgam;
    for (auto g : A.gens_) p.gens_.push_back({g.name, g.order, 0});
    for (auto g : B.gens_) p.gens_.push_back({g.name, g.order, 1});
    p.check_names();
    int off = static_cast<int>(A.gens_.size());
    p.edge_a_ = A.reduce(c_a);
    p.edge_b_ = B.reduce(c_b);
    for (auto& l : p.edge_b_) l.gen += off;
    for (auto& w : {&c_a, &c_b})
      for (auto& l : *w)
        if (l.gen < 0 || l.gen >= static_cast<int>((w == &c_a ? A : B).gens_.size()))
          throw ValidationError("edge word uses a generator outside its vertex group");
    if (p.edge_a_.empty() || p.edge_b_.empty()) throw ValidationError("edge group generator is trivial");
    return p;
  }
  // Relation s c s^-1 = c_s with c, c_s words over A.
  static Presentation hnn(const Presentation& A, const Word& c, const Word& c_s, std::string stable = "s") {
    if (!A.is_basic()) throw UnsupportedVertexGroup("HNN vertex group must be free or cyclic");
    Presentation p;
    p.kind_ = Kind::HNN;
    for (auto g : A.gens_) p.gens_.push_back({g.name, g.order, 0});
    p.gens_.push_back({std::move(stable), 0, 2});
    p.check_names();
    for (auto* w : {&c, &c_s})
      for (auto& l : *w)
        if (l.gen < 0 || l.gen >= static_cast<int>(A.gens_.size()))
          throw ValidationError("edge word uses a generator outside the vertex group");
    p.edge_a_ = A.reduce(c);
    p.edge_b_ = A.reduce(c_s);
    p.stable_ = static_cast<int>(A.gens_.size());
    if (p.edge_a_.empty() || p.edge_b_.empty()) throw ValidationError("edge group generator is trivial");
    return p;
  }

  Kind kind() const { return kind_; }
  const std::vector<GeneratorInfo>& generators() const { return gens_; }
  int rank() const { return static_cast<int>(gens_.size()); }
  bool is_basic() const { return kind_ == Kind::Free || kind_ == Kind::FiniteCyclic || kind_ == Kind::FreeProduct; }
  long order(int gen) const { return gens_.at(gen).order; }
  int factor(int gen) const { return gens_.at(gen).factor; }
  const std::string& name(int gen) const { return gens_.at(gen).name; }
  int stable() const { return stable_; }
  // Amalgam: the two images of the edge generator. HNN: c and its conjugate c_s.
  const Word& edge_a() const { return edge_a_; }
  const Word& edge_b() const { return edge_b_; }

  int index_of(const std::string& n) const {
    for (int i = 0; i < rank(); ++i)
      if (gens_[i].name == n) return i;
    throw UnknownGenerator("'" + n + "'");
  }

  // Normal exponent: finite-order generators use 1..order-1.
  long normal_exp(int gen, long e) const {
    long n = order(gen);
    if (n == 0) return e;
    long r = e % n;
    return r < 0 ? r + n : r;
  }
  long letter_length(const Letter& l) const {
    long n = order(l.gen);
    long e = std::labs(l.exp);
    if (n == 0) return e;
    long r = normal_exp(l.gen, l.exp);
    return std::min(r, n - r);
  }
  long length(const Word& w) const {
    long s = 0;
    for (auto& l : w) s += letter_length(l);
    return s;
  }

  Word reduce(const Word& w) const {
    Word out;
    for (const Letter& l0 : w) {
      if (l0.gen < 0 || l0.gen >= rank()) throw UnknownGenerator("generator index " + std::to_string(l0.gen));
      Letter l{l0.gen, normal_exp(l0.gen, l0.exp)};
      if (l.exp == 0) continue;
      if (!out.empty() && out.back().gen == l.gen) {
        long e = normal_exp(l.gen, out.back().exp + l.exp);
        if (e == 0) out.pop_back();
        else out.back().exp = e;
      } else {
        out.push_back(l);
      }
    }
    return out;
  }
  Word inverse(const Word& w) const {
    Word out;
    for (auto it = w.rbegin(); it != w.rend(); ++it) out.push_back({it->gen, -it->exp});
    return reduce(out);
  }
  Word multiply(const Word& x, const Word& y) const {
    Word w = x;
    w.insert(w.end(), y.begin(), y.end());
    return reduce(w);
  }
  Word power(const Word& x, long k) const {
    Word base = k < 0 ? inverse(x) : reduce(x), out;
    for (long i = 0; i < std::labs(k); ++i) out = multiply(out, base);
    return out;
  }

  std::vector<Word> relators() const {
    std::vector<Word> rel;
    for (int i = 0; i < rank(); ++i)
      if (order(i) > 0) rel.push_back({{i, order(i)}});
    if (kind_ == Kind::Amalgam) {
      Word r = edge_a_;
      Word inv = inverse(edge_b_);
      r.insert(r.end(), inv.begin(), inv.end());
      rel.push_back(r);
    } else if (kind_ == Kind::HNN) {
      Word r{{stable_, 1}};
      r.insert(r.end(), edge_a_.begin(), edge_a_.end());
      r.push_back({stable_, -1});
      Word inv = inverse(edge_b_);
      r.insert(r.end(), inv.begin(), inv.end());
      rel.push_back(r);
    }
    return rel;
  }

  std::string format(const Word& w) const {
    if (w.empty()) return "1";
    std::ostringstream os;
    for (size_t i = 0; i < w.size(); ++i) {
      if (i) os << ' ';
      os << name(w[i].gen);
      if (w[i].exp != 1) os << '^' << w[i].exp;
    }
    return os.str();
  }
  Word parse(const std::string& s) const {
    std::istringstream is(s);
    std::string tok;
    Word w;
    while (is >> tok) {
      if (tok == "1") continue;
      auto caret = tok.find('^');
      std::string n = tok.substr(0, caret);
      long e = 1;
      if (caret != std::string::npos) {
        try {
          size_t used = 0;
          e = std::stol(tok.substr(caret + 1), &used);
          if (used != tok.size() - caret - 1) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
          throw ParseError("bad exponent in '" + tok + "'");
        }
      }
      w.push_back({index_of(n), e});
    }
    return reduce(w);
  }

 private:
  static std::string default_name(int i) {
    if (i < 26) return std::string(1, static_cast<char>('a' + i));
    return "x" + std::to_string(i);
  }
  void check_names() const {
    for (int i = 0; i < rank(); ++i)
      for (int j = i + 1; j < rank(); ++j)
        if (gens_[i].name == gens_[j].name) throw ValidationError("duplicate generator name '" + gens_[i].name + "'");
  }

  Kind kind_ = Kind::Free;
  std::vector<GeneratorInfo> gens_;
  Word edge_a_, edge_b_;
  int stable_ = -1;
};

// ---- reductions ----------------------------------------------------------------------

inline Word freely_reduce(const Word& w) {
  Word out;
  for (const Letter& l : w) {
    if (l.exp == 0) continue;
    if (!out.empty() && out.back().gen == l.gen) {
      out.back().exp += l.exp;
      if (out.back().exp == 0) out.pop_back();
    } else {
      out.push_back(l);
    }
  }
  return out;
}
inline Word freely_reduce(const Word& w, const Presentation& p) { return p.reduce(w); }

struct CyclicReduction {
  Word core;
  Word conjugator;  // w = conjugator * core * conjugator^-1
};

inline CyclicReduction cyclically_reduce(const Word& w0, const Presentation& p) {
  Word w = p.reduce(w0);
  Word u;
  while (w.size() >= 2 && w.front().gen == w.back().gen) {
    const Letter f = w.front(), b = w.back();
    long merged = p.normal_exp(f.gen, f.exp + b.exp);
    if (merged == 0) {
      // w = f x f^-1
      u.push_back(f);
      w = Word(w.begin() + 1, w.end() - 1);
    } else {
      // w = f' * (rest with merged last letter) * f'^-1 where f' is the first letter
      u.push_back(f);
      Word nw(w.begin() + 1, w.end() - 1);
      nw.push_back({f.gen, merged});
      w = p.reduce(nw);
      break;
    }
  }
  return {w, p.reduce(u)};
}
inline CyclicReduction cyclically_reduce(const Word& w) { return cyclically_reduce(w, Presentation::free(0)); }

namespace detail {

// Lexicographic key used for deterministic enumeration: finite-order letters by
// exponent; infinite-order letters by |exp| with the positive sign first.
inline bool letter_less(const Presentation& p, const Letter& x, const Letter& y) {
  if (x.gen != y.gen) return x.gen < y.gen;
  if (p.order(x.gen) > 0) return x.exp < y.exp;
  long ax = std::labs(x.exp), ay = std::labs(y.exp);
  if (ax != ay) return ax < ay;
  return x.exp > y.exp;
}
inline bool word_less(const Presentation& p, const Word& x, const Word& y) {
  long lx = p.length(x), ly = p.length(y);
  if (lx != ly) return lx < ly;
  return std::lexicographical_compare(x.begin(), x.end(), y.begin(), y.end(),
                                      [&](const Letter& a, const Letter& b) { return letter_less(p, a, b); });
}

inline bool all_in_factor(const Presentation& p, const Word& w, int f) {
  return std::all_of(w.begin(), w.end(), [&](const Letter& l) { return p.factor(l.gen) == f; });
}

// k with x = c^k in the vertex group, if any.
inline std::optional<long> power_in_cyclic(const Presentation& p, const Word& x0, const Word& c) {
  Word x = p.reduce(x0);
  if (x.empty()) return 0L;
  auto core = cyclically_reduce(c, p).core;
  long bound = p.length(x) + 2;
  if (core.size() == 1 && p.order(core[0].gen) > 0) bound += p.order(core[0].gen);
  Word pos = p.reduce(c), neg = p.inverse(c), cp, cn;
  for (long k = 1; k <= bound; ++k) {
    cp = p.multiply(cp, pos);
    if (cp == x) return k;
    cn = p.multiply(cn, neg);
    if (cn == x) return -k;
  }
  return std::nullopt;
}

// x = r c^k with r minimal in the coset x<c> (length, then lexicographic).
inline std::pair<Word, long> coset_decompose(const Presentation& p, const Word& x0, const Word& c) {
  Word x = p.reduce(x0);
  auto core = cyclically_reduce(c, p).core;
  long cl = std::max<long>(1, p.length(core));
  long bound = 2 * (p.length(x) + p.length(c)) / cl + 2;
  Word best = x;
  long best_k = 0;
  Word ci = p.inverse(c), cc = p.reduce(c);
  Word up = x, down = x;  // x c^{-k} and x c^{k}
  for (long k = 1; k <= bound; ++k) {
    up = p.multiply(up, ci);
    down = p.multiply(down, cc);
    if (word_less(p, up, best)) { best = up; best_k = k; }
    if (word_less(p, down, best)) { best = down; best_k = -k; }
  }
  return {best, best_k};
}

struct Syllable {
  int factor;
  Word w;
};

inline std::vector<Syllable> syllables(const Presentation& p, const Word& w) {
  std::vector<Syllable> out;
  for (const Letter& l : w) {
    int f = p.factor(l.gen);
    if (out.empty() || out.back().factor != f) out.push_back({f, {}});
    out.back().w.push_back(l);
  }
  return out;
}

inline const Word& edge_word(const Presentation& p, int factor) { return factor == 0 ? p.edge_a() : p.edge_b(); }

inline Word flatten(const std::vector<Syllable>& s) {
  Word w;
  for (auto& x : s) w.insert(w.end(), x.w.begin(), x.w.end());
  return w;
}

// Merges adjacent syllables of the same factor and absorbs edge-group syllables
// into a neighbour. With cyclic = true the first and last syllable are adjacent.
inline void amalgam_collapse(const Presentation& p, std::vector<Syllable>& s, bool cyclic) {
  bool changed = true;
  while (changed) {
    changed = false;
    std::vector<Syllable> m;
    for (auto& x : s) {
      Word r = p.reduce(x.w);
      if (r.empty()) { changed = changed || !x.w.empty(); continue; }
      if (!m.empty() && m.back().factor == x.factor) {
        m.back().w = p.multiply(m.back().w, r);
        changed = true;
        if (m.back().w.empty()) m.pop_back();
      } else {
        m.push_back({x.factor, r});
      }
    }
    if (cyclic && m.size() >= 2 && m.front().factor == m.back().factor) {
      m.front().w = p.multiply(m.back().w, m.front().w);
      m.pop_back();
      changed = true;
      if (m.front().w.empty()) m.erase(m.begin());
    }
    s = m;
    if (changed) continue;
    if (s.size() >= 2 || (cyclic && s.size() == 1 && false)) {
      for (auto& x : s) {
        auto k = power_in_cyclic(p, x.w, edge_word(p, x.factor));
        if (k) {
          int other = 1 - x.factor;
          x.factor = other;
          x.w = p.power(edge_word(p, other), *k);
          changed = true;
          break;
        }
      }
    }
  }
}

struct HnnTokens {
  std::vector<Word> g;      // n+1 vertex words
  std::vector<int> eps;     // n stable exponents (+1/-1)
};

inline HnnTokens hnn_tokens(const Presentation& p, const Word& w) {
  HnnTokens t;
  t.g.push_back({});
  for (const Letter& l : w) {
    if (l.gen == p.stable()) {
      int e = l.exp > 0 ? 1 : -1;
      for (long i = 0; i < std::labs(l.exp); ++i) {
        t.eps.push_back(e);
        t.g.push_back({});
      }
    } else {
      t.g.back().push_back(l);
    }
  }
  for (auto& x : t.g) x = p.reduce(x);
  return t;
}

inline Word hnn_flatten(const Presentation& p, const HnnTokens& t) {
  Word w = t.g[0];
  for (size_t i = 0; i < t.eps.size(); ++i) {
    w.push_back({p.stable(), t.eps[i]});
    w.insert(w.end(), t.g[i + 1].begin(), t.g[i + 1].end());
  }
  return p.reduce(w);
}

// Removes pinches s c s^-1 -> c_s and s^-1 c_s s -> c until none remain.
inline void britton(const Presentation& p, HnnTokens& t) {
  bool changed = true;
  while (changed) {
    changed = false;
    for (size_t i = 0; i + 1 < t.eps.size(); ++i) {
      int e1 = t.eps[i], e2 = t.eps[i + 1];
      if (e1 == e2) continue;
      const Word& mid = t.g[i + 1];
      const Word& sub = e1 == 1 ? p.edge_a() : p.edge_b();
      const Word& img = e1 == 1 ? p.edge_b() : p.edge_a();
      auto k = power_in_cyclic(p, mid, sub);
      if (!k) continue;
      Word merged = p.multiply(p.multiply(t.g[i], p.power(img, *k)), t.g[i + 2]);
      t.g.erase(t.g.begin() + static_cast<long>(i), t.g.begin() + static_cast<long>(i) + 3);
      t.g.insert(t.g.begin() + static_cast<long>(i), merged);
      t.eps.erase(t.eps.begin() + static_cast<long>(i), t.eps.begin() + static_cast<long>(i) + 2);
      changed = true;
      break;
    }
  }
}

}  // namespace detail

inline Word hnn_normal_form(const Word& w, const Presentation& p) {
  if (p.kind() != Presentation::Kind::HNN) throw PreconditionFailed("hnn_normal_form needs an HNN presentation");
  auto t = detail::hnn_tokens(p, p.reduce(w));
  detail::britton(p, t);
  return detail::hnn_flatten(p, t);
}

// Unique representative of the group element (used to deduplicate balls).
inline Word canonical_form(const Word& w0, const Presentation& p) {
  Word w = p.reduce(w0);
  using K = Presentation::Kind;
  if (p.kind() == K::Amalgam) {
    auto s = detail::syllables(p, w);
    detail::amalgam_collapse(p, s, false);
    if (s.size() == 1 && s[0].factor == 1) {
      auto k = detail::power_in_cyclic(p, s[0].w, p.edge_b());
      if (k) s[0] = {0, p.power(p.edge_a(), *k)};
    }
    for (size_t i = 0; i + 1 < s.size(); ++i) {
      auto [r, k] = detail::coset_decompose(p, s[i].w, detail::edge_word(p, s[i].factor));
      s[i].w = r;
      s[i + 1].w = p.multiply(p.power(detail::edge_word(p, s[i + 1].factor), k), s[i + 1].w);
    }
    return p.reduce(detail::flatten(s));
  }
  if (p.kind() == K::HNN) {
    auto t = detail::hnn_tokens(p, w);
    detail::britton(p, t);
    // c_s s = s c and c s^-1 = s^-1 c_s move edge powers to the right.
    for (size_t i = 0; i < t.eps.size(); ++i) {
      const Word& sub = t.eps[i] == 1 ? p.edge_b() : p.edge_a();
      const Word& img = t.eps[i] == 1 ? p.edge_a() : p.edge_b();
      auto [r, k] = detail::coset_decompose(p, t.g[i], sub);
      t.g[i] = r;
      t.g[i + 1] = p.multiply(p.power(img, k), t.g[i + 1]);
    }
    return detail::hnn_flatten(p, t);
  }
  return w;
}

inline bool in_elliptic_conjugacy_set(const Word& w0, const Presentation& p) {
  using K = Presentation::Kind;
  Word w = cyclically_reduce(w0, p).core;
  switch (p.kind()) {
    case K::FreeProduct: {
      if (w.empty()) return true;
      int f = p.factor(w[0].gen);
      return detail::all_in_factor(p, w, f);
    }
    case K::Amalgam: {
      auto s = detail::syllables(p, w);
      detail::amalgam_collapse(p, s, true);
      return s.size() <= 1;
    }
    case K::HNN: {
      auto t = detail::hnn_tokens(p, w);
      if (t.eps.empty()) return true;
      long sum = 0;
      for (int e : t.eps) sum += e;
      if (sum != 0) return false;
      // Cyclic Britton reduction: rotate so the word starts with a stable
      // letter, then look for pinches including the wrap-around position.
      Word g0 = p.multiply(t.g.back(), t.g.front());
      std::vector<int> eps = t.eps;
      std::vector<Word> mids(t.g.begin() + 1, t.g.end() - 1);
      mids.push_back(g0);  // mids[i] sits after eps[i]
      bool changed = true;
      while (changed && !eps.empty()) {
        changed = false;
        size_t n = eps.size();
        for (size_t i = 0; i < n; ++i) {
          size_t j = (i + 1) % n;
          if (n == 1 || eps[i] == eps[j]) continue;
          const Word& sub = eps[i] == 1 ? p.edge_a() : p.edge_b();
          const Word& img = eps[i] == 1 ? p.edge_b() : p.edge_a();
          auto k = detail::power_in_cyclic(p, mids[i], sub);
          if (!k) continue;
          // s^e mids[i] s^-e collapses; merge mids[i-1], image, mids[j].
          size_t prev = (i + n - 1) % n;
          Word merged = p.multiply(p.multiply(mids[prev], p.power(img, *k)), mids[j]);
          std::vector<int> ne;
          std::vector<Word> nm;
          for (size_t q = 0; q < n; ++q) {
            if (q == i || q == j) continue;
            ne.push_back(eps[q]);
            nm.push_back(q == prev ? merged : mids[q]);
          }
          if (n == 2) nm = {merged};
          eps = ne;
          mids = nm;
          changed = true;
          break;
        }
      }
      return eps.empty();
    }
    default:
      throw PreconditionFailed("in_elliptic_conjugacy_set needs a free product, amalgam or HNN presentation");
  }
}

// ---- balls ----------------------------------------------------------------------------

inline constexpr size_t kDefaultBallCap = 4'000'000;

inline double free_ball_size(int n, int R) {
  if (n == 0) return 1;
  if (n == 1) return 1 + 2.0 * R;
  double q = 2.0 * n - 1, s = 1;
  double t = 1;
  for (int i = 0; i < R; ++i) t *= q;
  s += 2.0 * n * (t - 1) / (2.0 * n - 2);
  return s;
}

namespace detail {
inline void enumerate_reduced(const Presentation& p, long R, size_t cap, Word& cur, long len,
                              std::vector<Word>& out) {
  if (out.size() > cap) throw BallTooLarge("more than " + std::to_string(cap) + " words");
  out.push_back(cur);
  for (int g = 0; g < p.rank(); ++g) {
    if (!cur.empty() && cur.back().gen == g) continue;
    long n = p.order(g);
    std::vector<long> exps;
    if (n > 0) {
      for (long e = 1; e < n; ++e) exps.push_back(e);
    } else {
      for (long e = 1; e <= R - len; ++e) { exps.push_back(e); exps.push_back(-e); }
    }
    for (long e : exps) {
      Letter l{g, e};
      long ll = p.letter_length(l);
      if (len + ll > R) continue;
      cur.push_back(l);
      enumerate_reduced(p, R, cap, cur, len + ll, out);
      cur.pop_back();
    }
  }
}
}  // namespace detail

inline std::vector<Word> enumerate_ball(const Presentation& p, int R, size_t cap = kDefaultBallCap) {
  if (R < 0) throw ValidationError("negative radius");
  if (p.kind() == Presentation::Kind::Free && free_ball_size(p.rank(), R) > static_cast<double>(cap))
    throw BallTooLarge("|B_R| = " + std::to_string(free_ball_size(p.rank(), R)));
  std::vector<Word> all;
  Word cur;
  detail::enumerate_reduced(p, R, cap, cur, 0, all);
  std::sort(all.begin(), all.end(), [&](const Word& x, const Word& y) { return detail::word_less(p, x, y); });
  if (p.is_basic()) return all;
  std::vector<Word> out;
  std::map<std::vector<long>, bool> seen;
  for (auto& w : all) {
    Word c = canonical_form(w, p);
    std::vector<long> key;
    for (auto& l : c) { key.push_back(l.gen); key.push_back(l.exp); }
    if (seen.emplace(std::move(key), true).second) out.push_back(w);
  }
  return out;
}

}  // namespace flexcircle
