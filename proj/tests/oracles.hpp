// Test-only oracles: central finite differences for arbitrary mixed partials,
// and small deterministic generators.  Everything here stays independent of
// the jet evaluation path it cross-checks.
#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

namespace oracle {

using ScalarField = std::function<double(const std::vector<double>&)>;

// central stencils per derivative order, offsets in units of h
struct Stencil {
  std::vector<int> offsets;
  std::vector<double> weights;  // divided by h^order afterwards
};

inline Stencil central_stencil(int order) {
  switch (order) {
    case 0: return {{0}, {1.0}};
    case 1: return {{-1, 1}, {-0.5, 0.5}};
    case 2: return {{-1, 0, 1}, {1.0, -2.0, 1.0}};
    case 3: return {{-2, -1, 1, 2}, {-0.5, 1.0, -1.0, 0.5}};
    case 4: return {{-2, -1, 0, 1, 2}, {1.0, -4.0, 6.0, -4.0, 1.0}};
    default: throw std::runtime_error("stencil order out of range");
  }
}

// mixed partial d^alpha f by tensor-product central differences
inline double fd_partial(const ScalarField& f, std::vector<double> point,
                         const std::vector<int>& alpha, double h) {
  int coord = -1;
  for (std::size_t c = 0; c < alpha.size(); ++c)
    if (alpha[c] > 0) {
      coord = static_cast<int>(c);
      break;
    }
  if (coord < 0) return f(point);
  Stencil st = central_stencil(alpha[static_cast<std::size_t>(coord)]);
  std::vector<int> rest = alpha;
  rest[static_cast<std::size_t>(coord)] = 0;
  double acc = 0.0;
  const double x0 = point[static_cast<std::size_t>(coord)];
  for (std::size_t s = 0; s < st.offsets.size(); ++s) {
    point[static_cast<std::size_t>(coord)] = x0 + st.offsets[s] * h;
    acc += st.weights[s] * fd_partial(f, point, rest, h);
  }
  double hp = 1.0;
  for (int k = 0; k < alpha[static_cast<std::size_t>(coord)]; ++k) hp *= h;
  return acc / hp;
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * ((rng() >> 11) * 0x1.0p-53);
}

}  // namespace oracle
