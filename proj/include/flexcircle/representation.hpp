#pragma once

#include <map>
#include <string>
#include <vector>

#include "flexcircle/moebius.hpp"
#include "flexcircle/words.hpp"

namespace flexcircle {

// Generator images in PSL2 over T, in presentation order.
template <class T>
class Representation {
 public:
  Representation() = default;
  Representation(Presentation p, std::vector<Moebius<T>> images) : pres_(std::move(p)), images_(std::move(images)) {
    if (static_cast<int>(images_.size()) != pres_.rank())
      throw ValidationError("representation has " + std::to_string(images_.size()) + " images for " +
                            std::to_string(pres_.rank()) + " generators");
  }
  static Representation from_names(Presentation p, const std::map<std::string, Moebius<T>>& by_name) {
    std::vector<Moebius<T>> images(p.rank());
    std::vector<bool> seen(p.rank(), false);
    for (auto& [n, g] : by_name) {
      int i = p.index_of(n);
      images[i] = g;
      seen[i] = true;
    }
    for (int i = 0; i < p.rank(); ++i)
      if (!seen[i]) throw UnknownGenerator("no image for '" + p.name(i) + "'");
    return Representation(std::move(p), std::move(images));
  }

  const Presentation& presentation() const { return pres_; }
  const std::vector<Moebius<T>>& images() const { return images_; }
  const Moebius<T>& image(int gen) const { return images_.at(gen); }
  void set_image(int gen, const Moebius<T>& g) { images_.at(gen) = g; }

  Moebius<T> evaluate(const Word& w) const {
    Moebius<T> acc;
    for (const Letter& l : w) {
      if (l.gen < 0 || l.gen >= static_cast<int>(images_.size()))
        throw UnknownGenerator("generator index " + std::to_string(l.gen));
      acc = acc * images_[l.gen].pow(l.exp);
    }
    return acc;
  }

  // Relators that fail to evaluate to the identity (exact for Quad, else within tol).
  std::vector<Word> failed_relations(double tol = 1e-9) const {
    std::vector<Word> bad;
    for (auto& r : pres_.relators()) {
      Moebius<T> g = evaluate(r);
      bool ok;
      if constexpr (is_exact_v<T>) ok = g.is_identity();
      else ok = g.distance(Moebius<T>()) <= tol;
      if (!ok) bad.push_back(r);
    }
    return bad;
  }
  bool satisfies_relations(double tol = 1e-9) const { return failed_relations(tol).empty(); }

  // Finite-order generators must have exact order n (minimal), exact mode only.
  bool orders_exact() const {
    static_assert(is_exact_v<T>, "exact order checks need exact arithmetic");
    for (int i = 0; i < pres_.rank(); ++i) {
      long n = pres_.order(i);
      if (n == 0) continue;
      if (!images_[i].pow(n).is_identity()) return false;
      for (long k = 1; k < n; ++k)
        if (images_[i].pow(k).is_identity()) return false;
    }
    return true;
  }

  Representation<double> to_real() const {
    std::vector<MoebiusR> r;
    for (auto& g : images_) r.push_back(g.to_real());
    return Representation<double>(pres_, r);
  }

 private:
  Presentation pres_;
  std::vector<Moebius<T>> images_;
};

template <class T>
Moebius<T> evaluate(const Representation<T>& rep, const Word& w) {
  return rep.evaluate(w);
}

using RepR = Representation<double>;
using RepX = Representation<Quad>;

}  // namespace flexcircle
