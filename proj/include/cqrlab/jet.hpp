#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <unordered_map>
#include <vector>

#include "cqrlab/errors.hpp"

namespace cqr {

inline constexpr int kMaxJetOrder = 4;

// Coefficient bookkeeping for truncated multivariate Taylor series in
// dimension n at order K.  Multi-indices are listed by total degree, then
// lexicographically; one layout instance is shared by every jet of the same
// shape.  Coefficients are Taylor-normalized: slot alpha holds d^alpha f / alpha!.
class JetLayout {
 public:
  static std::shared_ptr<const JetLayout> get(int dim, int order) {
    if (dim < 1 || dim > 16) throw DimensionError("jet dimension out of range");
    if (order < 0 || order > kMaxJetOrder) throw OrderTooLow("jet order out of range");
    static std::mutex mu;
    static std::map<std::pair<int, int>, std::shared_ptr<const JetLayout>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto key = std::make_pair(dim, order);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    auto layout = std::shared_ptr<const JetLayout>(new JetLayout(dim, order));
    cache.emplace(key, layout);
    return layout;
  }

  int dim() const { return n_; }
  int order() const { return order_; }
  int size() const { return static_cast<int>(multi_.size()); }

  const std::vector<std::uint8_t>& exponents(int slot) const { return multi_[slot]; }
  int degree(int slot) const { return degree_[slot]; }
  double factorial(int slot) const { return factorial_[slot]; }

  int slot_of(const std::vector<std::uint8_t>& alpha) const {
    auto it = index_.find(pack(alpha));
    return it == index_.end() ? -1 : it->second;
  }

  // slot of the first-order coefficient along coordinate i
  int gradient_slot(int coord) const { return 1 + coord; }

  struct MulEntry {
    std::int32_t a, b, target;
  };
  const std::vector<MulEntry>& mul_table() const { return mul_; }

  // For each slot of the (order-1) layout, the slot here holding alpha + e_i
  // and the factor (alpha_i + 1) relating the Taylor-normalized coefficients.
  struct DerivEntry {
    std::int32_t source;  // slot in this layout (alpha + e_i)
    double scale;         // alpha_i + 1
  };
  const std::vector<DerivEntry>& derivative_map(int coord) const { return deriv_[coord]; }

 private:
  JetLayout(int dim, int order) : n_(dim), order_(order) {
    std::vector<std::uint8_t> alpha(n_, 0);
    enumerate(alpha, 0, order_);
    // sort by degree then lexicographic
    std::stable_sort(multi_.begin(), multi_.end(),
                     [](const auto& a, const auto& b) {
                       int da = 0, db = 0;
                       for (auto v : a) da += v;
                       for (auto v : b) db += v;
                       if (da != db) return da < db;
                       return a < b;
                     });
    for (int s = 0; s < size(); ++s) {
      int d = 0;
      double f = 1.0;
      for (int c = 0; c < n_; ++c) {
        d += multi_[s][c];
        for (int k = 2; k <= multi_[s][c]; ++k) f *= k;
      }
      degree_.push_back(d);
      factorial_.push_back(f);
      index_.emplace(pack(multi_[s]), s);
    }
    for (int a = 0; a < size(); ++a) {
      for (int b = 0; b < size(); ++b) {
        if (degree_[a] + degree_[b] > order_) continue;
        std::vector<std::uint8_t> sum(n_);
        for (int c = 0; c < n_; ++c) sum[c] = static_cast<std::uint8_t>(multi_[a][c] + multi_[b][c]);
        mul_.push_back({a, b, index_.at(pack(sum))});
      }
    }
    if (order_ >= 1) {
      auto lower = (order_ == 0) ? nullptr : JetLayout::get(n_, order_ - 1);
      deriv_.resize(n_);
      for (int c = 0; c < n_; ++c) {
        deriv_[c].resize(lower->size());
        for (int s = 0; s < lower->size(); ++s) {
          std::vector<std::uint8_t> alpha_up = lower->exponents(s);
          alpha_up[c] = static_cast<std::uint8_t>(alpha_up[c] + 1);
          deriv_[c][s] = {index_.at(pack(alpha_up)), static_cast<double>(alpha_up[c])};
        }
      }
    }
  }

  void enumerate(std::vector<std::uint8_t>& alpha, int coord, int budget) {
    if (coord == n_) {
      multi_.push_back(alpha);
      return;
    }
    for (int k = 0; k <= budget; ++k) {
      alpha[coord] = static_cast<std::uint8_t>(k);
      enumerate(alpha, coord + 1, budget - k);
    }
    alpha[coord] = 0;
  }

  static std::uint64_t pack(const std::vector<std::uint8_t>& alpha) {
    std::uint64_t key = 0;
    for (auto v : alpha) key = (key << 3) | v;
    return key;
  }

  int n_, order_;
  std::vector<std::vector<std::uint8_t>> multi_;
  std::vector<int> degree_;
  std::vector<double> factorial_;
  std::unordered_map<std::uint64_t, int> index_;
  std::vector<MulEntry> mul_;
  std::vector<std::vector<DerivEntry>> deriv_;
};

// Truncated multivariate Taylor expansion of a scalar at a point.  Immutable
// value type; all arithmetic is exact through the layout order.
class Jet {
 public:
  Jet() = default;
  Jet(std::shared_ptr<const JetLayout> layout, double value)
      : layout_(std::move(layout)), c_(layout_->size(), 0.0) {
    c_[0] = value;
  }

  static Jet constant(std::shared_ptr<const JetLayout> layout, double value) {
    return Jet(std::move(layout), value);
  }

  // seed for coordinate i: value plus unit first-order coefficient
  static Jet variable(std::shared_ptr<const JetLayout> layout, int coord, double value) {
    if (coord < 0 || coord >= layout->dim()) throw DimensionError("jet variable index out of range");
    Jet j(std::move(layout), value);
    if (j.order() >= 1) j.c_[j.layout_->gradient_slot(coord)] = 1.0;
    return j;
  }

  const JetLayout& layout() const { return *layout_; }
  std::shared_ptr<const JetLayout> layout_ptr() const { return layout_; }
  int dim() const { return layout_->dim(); }
  int order() const { return layout_->order(); }

  double value() const { return c_[0]; }
  double coeff(int slot) const { return c_[slot]; }
  double& coeff(int slot) { return c_[slot]; }

  // first partial derivative along coordinate i
  double deriv(int coord) const {
    return order() >= 1 ? c_[layout_->gradient_slot(coord)] : 0.0;
  }

  // exact partial derivative for a multi-index (coefficient times alpha!)
  double partial(const std::vector<std::uint8_t>& alpha) const {
    int s = layout_->slot_of(alpha);
    if (s < 0) throw OrderTooLow("requested partial exceeds jet order");
    return c_[s] * layout_->factorial(s);
  }

  Jet truncated(int new_order) const {
    if (new_order > order()) throw OrderTooLow("cannot raise jet order by truncation");
    if (new_order == order()) return *this;
    Jet out(JetLayout::get(dim(), new_order), 0.0);
    for (int s = 0; s < out.layout_->size(); ++s) out.c_[s] = c_[s];
    return out;
  }

  // d/dx_i as a jet of one order less
  Jet derivative(int coord) const {
    if (order() < 1) throw OrderTooLow("cannot differentiate an order-0 jet");
    Jet out(JetLayout::get(dim(), order() - 1), 0.0);
    const auto& map = layout_->derivative_map(coord);
    for (std::size_t s = 0; s < map.size(); ++s) out.c_[s] = c_[map[s].source] * map[s].scale;
    return out;
  }

  friend Jet operator-(const Jet& a) {
    Jet out = a;
    for (auto& v : out.c_) v = -v;
    return out;
  }

  friend Jet operator+(const Jet& a, const Jet& b) {
    Jet out = a;
    for (std::size_t s = 0; s < out.c_.size(); ++s) out.c_[s] += b.c_[s];
    return out;
  }
  friend Jet operator-(const Jet& a, const Jet& b) {
    Jet out = a;
    for (std::size_t s = 0; s < out.c_.size(); ++s) out.c_[s] -= b.c_[s];
    return out;
  }
  friend Jet operator*(const Jet& a, double s) {
    Jet out = a;
    for (auto& v : out.c_) v *= s;
    return out;
  }
  friend Jet operator*(double s, const Jet& a) { return a * s; }
  friend Jet operator+(const Jet& a, double s) {
    Jet out = a;
    out.c_[0] += s;
    return out;
  }
  friend Jet operator+(double s, const Jet& a) { return a + s; }
  friend Jet operator-(const Jet& a, double s) { return a + (-s); }
  friend Jet operator-(double s, const Jet& a) { return (-a) + s; }

  // plain coefficient convolution, exact by the Taylor normalization
  friend Jet operator*(const Jet& a, const Jet& b) {
    Jet out(a.layout_, 0.0);
    out.c_[0] = 0.0;
    for (const auto& e : a.layout_->mul_table())
      out.c_[e.target] += a.c_[e.a] * b.c_[e.b];
    return out;
  }

  friend Jet operator/(const Jet& a, const Jet& b) { return a * reciprocal(b); }
  friend Jet operator/(double s, const Jet& b) { return reciprocal(b) * s; }
  friend Jet operator/(const Jet& a, double s) { return a * (1.0 / s); }

  Jet& operator+=(const Jet& b) { return *this = *this + b; }
  Jet& operator-=(const Jet& b) { return *this = *this - b; }
  Jet& operator*=(const Jet& b) { return *this = *this * b; }

  // f applied through the truncated-series composition of the shifted input:
  // f(a) = sum_k c_k (a - a0)^k with c_k = f^(k)(a0)/k!, evaluated by Horner.
  static Jet compose(const Jet& a, const double* series) {
    const int k_max = a.order();
    Jet shifted = a;
    shifted.c_[0] = 0.0;
    Jet acc = Jet::constant(a.layout_, series[k_max]);
    for (int k = k_max - 1; k >= 0; --k) acc = acc * shifted + series[k];
    return acc;
  }

  friend Jet reciprocal(const Jet& a) {
    double v = a.value();
    if (v == 0.0) throw DomainError("division by zero in jet arithmetic");
    double series[kMaxJetOrder + 1];
    double p = 1.0 / v;
    for (int k = 0; k <= a.order(); ++k) {
      series[k] = p;
      p *= -1.0 / v;
    }
    return compose(a, series);
  }

  friend Jet exp(const Jet& a) {
    double series[kMaxJetOrder + 1];
    double e = std::exp(a.value());
    double f = 1.0;
    for (int k = 0; k <= a.order(); ++k) {
      series[k] = e / f;
      f *= (k + 1);
    }
    return compose(a, series);
  }

  friend Jet log(const Jet& a) {
    double v = a.value();
    if (v <= 0.0) throw DomainError("log of a non-positive value");
    double series[kMaxJetOrder + 1];
    series[0] = std::log(v);
    double p = 1.0 / v;  // (-1)^(k-1) / (k v^k)
    for (int k = 1; k <= a.order(); ++k) {
      series[k] = ((k % 2) ? p : -p) / k;
      p /= v;
    }
    return compose(a, series);
  }

  // x^p for a real literal exponent; exact for integer p, requires a
  // positive value otherwise.
  friend Jet pow(const Jet& a, double p) {
    double v = a.value();
    bool integral = (p == std::floor(p)) && std::abs(p) < 1e9;
    if (!integral && v <= 0.0)
      throw DomainError("non-integer power of a non-positive value");
    if (integral && p < 0.0 && v == 0.0) throw DomainError("negative power of zero");
    double series[kMaxJetOrder + 1];
    double binom = 1.0;  // p (p-1) ... (p-k+1) / k!
    for (int k = 0; k <= a.order(); ++k) {
      if (k > 0) binom *= (p - (k - 1)) / k;
      series[k] = (binom == 0.0) ? 0.0 : binom * std::pow(v, p - k);
    }
    return compose(a, series);
  }

  friend Jet sqrt(const Jet& a) {
    if (a.value() <= 0.0) throw DomainError("sqrt of a non-positive value");
    return pow(a, 0.5);
  }

  friend Jet sin(const Jet& a) {
    double s = std::sin(a.value()), c = std::cos(a.value());
    double cycle[4] = {s, c, -s, -c};
    double series[kMaxJetOrder + 1];
    double f = 1.0;
    for (int k = 0; k <= a.order(); ++k) {
      series[k] = cycle[k % 4] / f;
      f *= (k + 1);
    }
    return compose(a, series);
  }

  friend Jet cos(const Jet& a) {
    double s = std::sin(a.value()), c = std::cos(a.value());
    double cycle[4] = {c, -s, -c, s};
    double series[kMaxJetOrder + 1];
    double f = 1.0;
    for (int k = 0; k <= a.order(); ++k) {
      series[k] = cycle[k % 4] / f;
      f *= (k + 1);
    }
    return compose(a, series);
  }

  friend Jet sinh(const Jet& a) {
    double s = std::sinh(a.value()), c = std::cosh(a.value());
    double series[kMaxJetOrder + 1];
    double f = 1.0;
    for (int k = 0; k <= a.order(); ++k) {
      series[k] = ((k % 2) ? c : s) / f;
      f *= (k + 1);
    }
    return compose(a, series);
  }

  friend Jet cosh(const Jet& a) {
    double s = std::sinh(a.value()), c = std::cosh(a.value());
    double series[kMaxJetOrder + 1];
    double f = 1.0;
    for (int k = 0; k <= a.order(); ++k) {
      series[k] = ((k % 2) ? s : c) / f;
      f *= (k + 1);
    }
    return compose(a, series);
  }

 private:
  std::shared_ptr<const JetLayout> layout_;
  std::vector<double> c_;
};

}  // namespace cqr
