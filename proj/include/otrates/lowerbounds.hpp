#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "otrates/costs.hpp"
#include "otrates/points.hpp"

namespace otrates {

struct PackingSet {
  PointCloud points;
  Vec center;
  double radius = 0.0;
  int lattice_k = 0;       // nodes per axis of the cell-centred lattice
  double separation = 0.0; // lattice pitch 2 radius / k, a lower bound on pairwise distances
  double grid_constant = 0.0;  // separation * m^(1/d)
};

// First m nodes, in lexicographic order, of the coarsest cell-centred lattice
// on the bounding cube that puts at least m nodes inside the ball.
PackingSet packing_set(const Vec& center, double radius, std::size_t m);

struct Divergences {
  double tv = 0.0;
  double chi2 = 0.0;
};
Divergences divergences(const std::vector<double>& q, std::size_t m);

// q families on [m]: "uniform", "split:<tv>", "spike:<mass>", "dirichlet:<alpha>".
struct QFamily {
  enum class Kind { kUniform, kSplit, kSpike, kDirichlet };
  Kind kind = Kind::kUniform;
  double param = 0.0;

  static QFamily parse(std::string_view text);
  std::string to_string() const;
  // Dirichlet draws use `seed`; the other families ignore it.
  std::vector<double> make(std::size_t m, std::uint64_t seed) const;
};

struct GadgetGeometry {
  Vec center;           // empty: origin
  double radius = 0.5;
};

struct GadgetResult {
  std::size_t m = 0;
  std::vector<double> q;
  double tv = 0.0;
  double chi2 = 0.0;
  double value = 0.0;          // T_c(F#q, (T0 o F)#u)
  double h_z0 = 0.0;
  double value_minus_h = 0.0;
  // value - h(z0 + mean shift); nonnegative by Jensen for every z0.
  double jensen_gap = 0.0;
  std::uint64_t seed = 0;
  double separation = 0.0;
};

// F is a seeded uniformly random bijection [m] -> packing set; the value is
// the exact transport cost between {(F(j), q_j)} and {(F(j) + z0, 1/m)}.
GadgetResult minimax_gadget(std::size_t m, const std::vector<double>& q, const Vec& z0, const CostSpec& cost,
                            std::uint64_t seed, const GadgetGeometry& geometry = {});

}  // namespace otrates
