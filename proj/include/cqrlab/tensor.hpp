#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "cqrlab/errors.hpp"
#include "cqrlab/jet.hpp"

namespace cqr {

enum class Var : std::uint8_t { lo, up };

inline constexpr int kMaxRank = 6;

// Odometer over rank digits in [0, n); drives every dense tensor loop.
class IndexIter {
 public:
  IndexIter(int n, int rank) : n_(n), rank_(rank), idx_{} {}
  bool done() const { return done_; }
  void next() {
    for (int s = rank_ - 1; s >= 0; --s) {
      if (++idx_[s] < n_) return;
      idx_[s] = 0;
    }
    done_ = true;
  }
  const std::array<int, kMaxRank>& operator*() const { return idx_; }
  int operator[](int s) const { return idx_[s]; }

 private:
  int n_, rank_;
  std::array<int, kMaxRank> idx_;
  bool done_ = false;
};

// Dense pointwise tensor: n^rank reals in row-major slot order with a
// covariant/contravariant flag per slot.  Immutable in spirit; operations
// return fresh values.
class Tensor {
 public:
  Tensor() = default;
  Tensor(int n, std::vector<Var> variance)
      : n_(n), var_(std::move(variance)),
        c_(static_cast<std::size_t>(std::pow(n, var_.size())), 0.0) {
    if (static_cast<int>(var_.size()) > kMaxRank) throw DimensionError("tensor rank above 6");
  }

  int dim() const { return n_; }
  int rank() const { return static_cast<int>(var_.size()); }
  Var variance(int slot) const { return var_[static_cast<std::size_t>(slot)]; }
  const std::vector<Var>& variances() const { return var_; }
  const std::vector<double>& data() const { return c_; }
  std::vector<double>& data() { return c_; }

  template <typename... I>
  double& operator()(I... idx) {
    return c_[flat(idx...)];
  }
  template <typename... I>
  double operator()(I... idx) const {
    return c_[flat(idx...)];
  }

  double at(const std::array<int, kMaxRank>& idx) const { return c_[flat_arr(idx)]; }
  double& at(const std::array<int, kMaxRank>& idx) { return c_[flat_arr(idx)]; }

  double max_abs() const {
    double m = 0.0;
    for (double v : c_) m = std::max(m, std::abs(v));
    return m;
  }

  friend Tensor operator+(const Tensor& a, const Tensor& b) {
    Tensor out = a;
    for (std::size_t i = 0; i < out.c_.size(); ++i) out.c_[i] += b.c_[i];
    return out;
  }
  friend Tensor operator-(const Tensor& a, const Tensor& b) {
    Tensor out = a;
    for (std::size_t i = 0; i < out.c_.size(); ++i) out.c_[i] -= b.c_[i];
    return out;
  }
  friend Tensor operator*(const Tensor& a, double s) {
    Tensor out = a;
    for (auto& v : out.c_) v *= s;
    return out;
  }
  friend Tensor operator*(double s, const Tensor& a) { return a * s; }

 private:
  template <typename... I>
  std::size_t flat(I... idx) const {
    std::size_t f = 0;
    ((f = f * static_cast<std::size_t>(n_) + static_cast<std::size_t>(idx)), ...);
    return f;
  }
  std::size_t flat_arr(const std::array<int, kMaxRank>& idx) const {
    std::size_t f = 0;
    for (int s = 0; s < rank(); ++s) f = f * static_cast<std::size_t>(n_) + static_cast<std::size_t>(idx[s]);
    return f;
  }

  int n_ = 0;
  std::vector<Var> var_;
  std::vector<double> c_;
};

// Sum over a paired upper/lower slot; result drops both slots.
inline Tensor contract(const Tensor& t, int slot_a, int slot_b) {
  if (slot_a == slot_b) throw VarianceMismatch("contraction slots must be distinct");
  if (t.variance(slot_a) == t.variance(slot_b))
    throw VarianceMismatch("contraction requires one upper and one lower slot");
  if (slot_a > slot_b) std::swap(slot_a, slot_b);
  std::vector<Var> out_var;
  for (int s = 0; s < t.rank(); ++s)
    if (s != slot_a && s != slot_b) out_var.push_back(t.variance(s));
  Tensor out(t.dim(), out_var);
  for (IndexIter it(t.dim(), out.rank()); !it.done(); it.next()) {
    std::array<int, kMaxRank> src{};
    double sum = 0.0;
    for (int p = 0; p < t.dim(); ++p) {
      int o = 0;
      for (int s = 0; s < t.rank(); ++s)
        src[s] = (s == slot_a || s == slot_b) ? p : (*it)[o++];
      sum += t.at(src);
    }
    out.at(*it) = sum;
  }
  return out;
}

// Flip the variance of one slot using the metric (lowering) or its inverse
// (raising); `metric` must be the matching (0,2) or (2,0) tensor.
inline Tensor flip_slot(const Tensor& t, int slot, const Tensor& metric) {
  std::vector<Var> out_var = t.variances();
  out_var[static_cast<std::size_t>(slot)] =
      (t.variance(slot) == Var::lo) ? Var::up : Var::lo;
  Tensor out(t.dim(), out_var);
  for (IndexIter it(t.dim(), t.rank()); !it.done(); it.next()) {
    std::array<int, kMaxRank> src = *it;
    double sum = 0.0;
    for (int p = 0; p < t.dim(); ++p) {
      src[slot] = p;
      sum += metric((*it)[slot], p) * t.at(src);
    }
    out.at(*it) = sum;
  }
  return out;
}

enum class AltNorm { weighted, sum };

namespace detail {
// visit permutations of `slots` with parity; k <= 4 in practice
template <typename F>
void for_permutations(std::vector<int> slots, F&& f) {
  std::sort(slots.begin(), slots.end());
  std::vector<int> perm = slots;
  do {
    int sign = 1;
    for (std::size_t i = 0; i < perm.size(); ++i)
      for (std::size_t j = i + 1; j < perm.size(); ++j)
        if (perm[i] > perm[j]) sign = -sign;
    f(perm, sign);
  } while (std::next_permutation(perm.begin(), perm.end()));
}
}  // namespace detail

inline Tensor alternate(const Tensor& t, const std::vector<int>& slots, AltNorm norm,
                        bool symmetric) {
  for (int s : slots)
    if (s < 0 || s >= t.rank()) throw DimensionError("slot out of range");
  Tensor out(t.dim(), t.variances());
  double weight = 1.0;
  if (norm == AltNorm::weighted) {
    double f = 1.0;
    for (std::size_t k = 2; k <= slots.size(); ++k) f *= static_cast<double>(k);
    weight = 1.0 / f;
  }
  std::vector<int> sorted = slots;
  std::sort(sorted.begin(), sorted.end());
  detail::for_permutations(slots, [&](const std::vector<int>& perm, int sign) {
    double w = weight * (symmetric ? 1.0 : sign);
    for (IndexIter it(t.dim(), t.rank()); !it.done(); it.next()) {
      std::array<int, kMaxRank> src = *it;
      for (std::size_t k = 0; k < perm.size(); ++k) src[sorted[k]] = (*it)[perm[k]];
      out.at(*it) += w * t.at(src);
    }
  });
  return out;
}

// alternating sum over the given slots, divided by k! when weighted
inline Tensor antisymmetrize(const Tensor& t, const std::vector<int>& slots,
                             AltNorm norm = AltNorm::weighted) {
  return alternate(t, slots, norm, false);
}

inline Tensor symmetrize(const Tensor& t, const std::vector<int>& slots,
                         AltNorm norm = AltNorm::weighted) {
  return alternate(t, slots, norm, true);
}

inline Tensor outer(const Tensor& a, const Tensor& b) {
  std::vector<Var> var = a.variances();
  var.insert(var.end(), b.variances().begin(), b.variances().end());
  Tensor out(a.dim(), var);
  std::size_t nb = b.data().size();
  for (std::size_t i = 0; i < a.data().size(); ++i)
    for (std::size_t j = 0; j < nb; ++j)
      out.data()[i * nb + j] = a.data()[i] * b.data()[j];
  return out;
}

// Metric data at a point: components, inverse, determinant, signature, and
// the jet grid everything downstream differentiates through.
struct MetricAtPoint {
  Tensor g;       // (0,2)
  Tensor g_inv;   // (2,0)
  double det = 0.0;
  std::vector<int> signature;  // ordered eigenvalue signs
  std::vector<std::vector<Jet>> g_jets;  // n x n, order K
};

// Tensor of jets; the construction-time representation of curvature fields.
struct JetTensor {
  int n = 0;
  std::vector<Var> var;
  std::vector<Jet> comp;  // row-major

  JetTensor() = default;
  JetTensor(int dim, std::vector<Var> variance, const Jet& zero)
      : n(dim), var(std::move(variance)),
        comp(static_cast<std::size_t>(std::pow(dim, var.size())), zero) {}

  int rank() const { return static_cast<int>(var.size()); }

  std::size_t flat_arr(const std::array<int, kMaxRank>& idx) const {
    std::size_t f = 0;
    for (int s = 0; s < rank(); ++s) f = f * static_cast<std::size_t>(n) + static_cast<std::size_t>(idx[s]);
    return f;
  }
  template <typename... I>
  Jet& operator()(I... idx) {
    std::size_t f = 0;
    ((f = f * static_cast<std::size_t>(n) + static_cast<std::size_t>(idx)), ...);
    return comp[f];
  }
  template <typename... I>
  const Jet& operator()(I... idx) const {
    std::size_t f = 0;
    ((f = f * static_cast<std::size_t>(n) + static_cast<std::size_t>(idx)), ...);
    return comp[f];
  }
  const Jet& at(const std::array<int, kMaxRank>& idx) const { return comp[flat_arr(idx)]; }
  Jet& at(const std::array<int, kMaxRank>& idx) { return comp[flat_arr(idx)]; }

  Tensor values() const {
    Tensor out(n, var);
    for (std::size_t i = 0; i < comp.size(); ++i) out.data()[i] = comp[i].value();
    return out;
  }

  JetTensor truncated(int order) const {
    JetTensor out = *this;
    for (auto& j : out.comp) j = j.truncated(order);
    return out;
  }
};

// Gauss-Jordan inverse of a symmetric matrix of jets, pivoting on values.
// Also reports the determinant value from the pivot product.
inline std::vector<std::vector<Jet>> invert_jet_matrix(std::vector<std::vector<Jet>> a,
                                                       double& det_out) {
  const int n = static_cast<int>(a.size());
  const auto layout = a[0][0].layout_ptr();
  std::vector<std::vector<Jet>> inv(n, std::vector<Jet>(n, Jet::constant(layout, 0.0)));
  for (int i = 0; i < n; ++i) inv[i][i] = Jet::constant(layout, 1.0);
  double det = 1.0;
  for (int col = 0; col < n; ++col) {
    int pivot = col;
    for (int r = col + 1; r < n; ++r)
      if (std::abs(a[r][col].value()) > std::abs(a[pivot][col].value())) pivot = r;
    if (std::abs(a[pivot][col].value()) <= 1e-12) throw SingularMetric("metric is singular at the point");
    if (pivot != col) {
      std::swap(a[pivot], a[col]);
      std::swap(inv[pivot], inv[col]);
      det = -det;
    }
    det *= a[col][col].value();
    Jet inv_p = reciprocal(a[col][col]);
    for (int c = 0; c < n; ++c) {
      a[col][c] = a[col][c] * inv_p;
      inv[col][c] = inv[col][c] * inv_p;
    }
    for (int r = 0; r < n; ++r) {
      if (r == col) continue;
      Jet f = a[r][col];
      bool zero = true;
      for (int s = 0; s < f.layout().size(); ++s)
        if (f.coeff(s) != 0.0) { zero = false; break; }
      if (zero) continue;
      for (int c = 0; c < n; ++c) {
        a[r][c] = a[r][c] - f * a[col][c];
        inv[r][c] = inv[r][c] - f * inv[col][c];
      }
    }
  }
  det_out = det;
  return inv;
}

}  // namespace cqr
