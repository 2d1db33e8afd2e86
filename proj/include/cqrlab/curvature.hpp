#pragma once

#include <Eigen/Dense>
#include <optional>

#include "cqrlab/metric_spec.hpp"
#include "cqrlab/tensor.hpp"

namespace cqr {

// All curvature data at a point, built from exact metric jets.
//
// Index conventions, fixed once for the whole library:
//   R^r_{smn} = d_m G^r_{ns} - d_n G^r_{ms} + G^r_{ml} G^l_{ns} - G^r_{nl} G^l_{ms}
//   riemann_0_4[j,k,l,m]  = g_{jr} R^r_{klm}   (pairs (j,k) and (l,m))
//   ricci[k,l] = sum_m R^m_{kml}, equivalently -R_{mkl}^m on riemann_0_4,
//   which makes the unit 3-sphere scalar +6.
//   weyl_0_4 = Riemann plus the weight-one g/Ricci brackets normalized so
//   that every trace vanishes (pinned by tests).
struct CurvaturePack {
  MetricSpec spec;
  std::vector<double> point;
  int order = 3;

  MetricAtPoint metric;
  Tensor christoffel;      // (1,2)  slot order (m,i,j) for G^m_{ij}
  Tensor riemann_0_4;      // (0,4)
  Tensor riemann_3_1;      // (0,0,0,1): R_{jkl}^m
  Tensor ricci;            // (0,2)
  double scalar = 0.0;
  Tensor weyl_0_4;         // (0,4)
  Tensor weyl_3_1;         // C_{jkl}^m
  Tensor nabla_weyl;       // (0,5) slots (i,j,k,l,m)
  Tensor weyl_divergence;  // (0,3)  D_{jkl} = nabla_m C_{jkl}^m
  std::optional<Tensor> nabla_div_weyl;  // (0,4) slots (i,j,k,l); order >= 4 only

  // construction-order jet fields kept for downstream derivatives
  JetTensor g_jets;        // order K
  JetTensor ginv_jets;     // order K
  JetTensor gamma_jets;    // order K-1
  JetTensor riemann04_jets;  // order K-2
  JetTensor ricci_jets;      // order K-2
  JetTensor weyl04_jets;     // order K-2
  Jet scalar_jet;

  int dim() const { return spec.dimension; }
  bool lorentzian() const {
    int plus = 0, minus = 0;
    for (int s : metric.signature) (s > 0 ? plus : minus)++;
    return (plus == 1 && minus == dim() - 1) || (minus == 1 && plus == dim() - 1);
  }
};

// Covariant derivative of a jet-tensor field; adds a new first lower slot and
// drops one jet order.
inline JetTensor covariant_derivative_jets(const JetTensor& field, const JetTensor& gamma) {
  const int n = field.n;
  const int out_order = field.comp[0].order() - 1;
  if (out_order < 0) throw OrderTooLow("field jets cannot supply the needed partials");
  JetTensor gam = gamma.truncated(out_order);
  std::vector<Var> var;
  var.push_back(Var::lo);
  var.insert(var.end(), field.var.begin(), field.var.end());
  JetTensor out(n, var, Jet::constant(JetLayout::get(n, out_order), 0.0));
  const int r = field.rank();
  for (IndexIter it(n, r); !it.done(); it.next()) {
    for (int i = 0; i < n; ++i) {
      Jet acc = field.at(*it).derivative(i);
      for (int t = 0; t < r; ++t) {
        std::array<int, kMaxRank> src = *it;
        const int a_t = (*it)[t];
        if (field.var[static_cast<std::size_t>(t)] == Var::lo) {
          for (int p = 0; p < n; ++p) {
            src[t] = p;
            acc -= gam(p, i, a_t) * field.at(src);
          }
        } else {
          for (int p = 0; p < n; ++p) {
            src[t] = p;
            acc += gam(a_t, i, p) * field.at(src);
          }
        }
      }
      std::array<int, kMaxRank> dst{};
      dst[0] = i;
      for (int s = 0; s < r; ++s) dst[s + 1] = (*it)[s];
      out.at(dst) = acc;
    }
  }
  return out;
}

inline Tensor covariant_derivative(const JetTensor& field, const CurvaturePack& pack) {
  return covariant_derivative_jets(field, pack.gamma_jets).values();
}

namespace detail {

inline JetTensor metric_jets_of(const MetricSpec& spec, const std::vector<double>& point,
                                int order) {
  const int n = spec.dimension;
  auto layout = JetLayout::get(n, order);
  std::vector<Jet> seeds;
  for (int i = 0; i < n; ++i) seeds.push_back(Jet::variable(layout, i, point[i]));
  JetTensor g(n, {Var::lo, Var::lo}, Jet::constant(layout, 0.0));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      g(i, j) = eval_jet_node(spec.components[static_cast<std::size_t>(i)]
                                             [static_cast<std::size_t>(j)].root(),
                              seeds, spec.parameters, layout);
  return g;
}

}  // namespace detail

inline CurvaturePack curvature_pack(const MetricSpec& spec, const std::vector<double>& point,
                                    int order = 3) {
  if (order < 3 || order > kMaxJetOrder)
    throw OrderTooLow("curvature pack requires jet order 3 or 4");
  if (static_cast<int>(point.size()) != spec.dimension)
    throw DimensionError("point dimension does not match the chart");
  const int n = spec.dimension;

  CurvaturePack pack;
  pack.spec = spec;
  pack.point = point;
  pack.order = order;

  pack.g_jets = detail::metric_jets_of(spec, point, order);

  // inverse metric and determinant
  std::vector<std::vector<Jet>> gmat(static_cast<std::size_t>(n),
                                     std::vector<Jet>(static_cast<std::size_t>(n)));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) gmat[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = pack.g_jets(i, j);
  double det = 0.0;
  auto ginv = invert_jet_matrix(gmat, det);
  pack.ginv_jets = JetTensor(n, {Var::up, Var::up}, Jet::constant(pack.g_jets.comp[0].layout_ptr(), 0.0));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) pack.ginv_jets(i, j) = ginv[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];

  pack.metric.g = pack.g_jets.values();
  pack.metric.g_inv = pack.ginv_jets.values();
  pack.metric.det = det;
  if (std::abs(det) <= 1e-12) throw SingularMetric("metric determinant vanishes at the point");
  pack.metric.g_jets.assign(static_cast<std::size_t>(n), std::vector<Jet>(static_cast<std::size_t>(n)));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) pack.metric.g_jets[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = pack.g_jets(i, j);
  {
    Eigen::MatrixXd m(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) m(i, j) = pack.metric.g(i, j);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    for (int i = 0; i < n; ++i) pack.metric.signature.push_back(es.eigenvalues()(i) >= 0 ? 1 : -1);
  }

  // Christoffel symbols, one jet order down
  const int kg = order - 1;
  auto layout_g = JetLayout::get(n, kg);
  JetTensor ginv_g = pack.ginv_jets.truncated(kg);
  std::vector<std::vector<std::vector<Jet>>> dg(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    dg[static_cast<std::size_t>(i)].assign(static_cast<std::size_t>(n), std::vector<Jet>(static_cast<std::size_t>(n)));
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        dg[static_cast<std::size_t>(i)][static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] =
            pack.g_jets(a, b).derivative(i);
  }
  pack.gamma_jets = JetTensor(n, {Var::up, Var::lo, Var::lo}, Jet::constant(layout_g, 0.0));
  for (int m = 0; m < n; ++m)
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        Jet acc = Jet::constant(layout_g, 0.0);
        for (int k = 0; k < n; ++k) {
          Jet sum = dg[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)][static_cast<std::size_t>(j)] +
                    dg[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)][static_cast<std::size_t>(i)] -
                    dg[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
          acc += ginv_g(m, k) * sum;
        }
        acc = acc * 0.5;
        pack.gamma_jets(m, i, j) = acc;
        pack.gamma_jets(m, j, i) = acc;
      }
  pack.christoffel = pack.gamma_jets.values();

  // Riemann, two jet orders down
  const int kr = order - 2;
  auto layout_r = JetLayout::get(n, kr);
  JetTensor gamma_r = pack.gamma_jets.truncated(kr);
  JetTensor riemann_std(n, {Var::up, Var::lo, Var::lo, Var::lo}, Jet::constant(layout_r, 0.0));
  for (int rho = 0; rho < n; ++rho)
    for (int sig = 0; sig < n; ++sig)
      for (int mu = 0; mu < n; ++mu)
        for (int nu = mu + 1; nu < n; ++nu) {
          Jet acc = pack.gamma_jets(rho, nu, sig).derivative(mu) -
                    pack.gamma_jets(rho, mu, sig).derivative(nu);
          for (int lam = 0; lam < n; ++lam)
            acc += gamma_r(rho, mu, lam) * gamma_r(lam, nu, sig) -
                   gamma_r(rho, nu, lam) * gamma_r(lam, mu, sig);
          riemann_std(rho, sig, mu, nu) = acc;
          riemann_std(rho, sig, nu, mu) = -acc;
        }

  JetTensor g_r = pack.g_jets.truncated(kr);
  JetTensor ginv_r = pack.ginv_jets.truncated(kr);
  pack.riemann04_jets = JetTensor(n, {Var::lo, Var::lo, Var::lo, Var::lo}, Jet::constant(layout_r, 0.0));
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k)
      for (int l = 0; l < n; ++l)
        for (int m = l + 1; m < n; ++m) {
          Jet acc = Jet::constant(layout_r, 0.0);
          for (int rho = 0; rho < n; ++rho) acc += g_r(j, rho) * riemann_std(rho, k, l, m);
          pack.riemann04_jets(j, k, l, m) = acc;
          pack.riemann04_jets(j, k, m, l) = -acc;
        }

  pack.ricci_jets = JetTensor(n, {Var::lo, Var::lo}, Jet::constant(layout_r, 0.0));
  for (int k = 0; k < n; ++k)
    for (int l = 0; l < n; ++l) {
      Jet acc = Jet::constant(layout_r, 0.0);
      for (int m = 0; m < n; ++m) acc += riemann_std(m, k, m, l);
      pack.ricci_jets(k, l) = acc;
    }
  pack.scalar_jet = Jet::constant(layout_r, 0.0);
  for (int k = 0; k < n; ++k)
    for (int l = 0; l < n; ++l) pack.scalar_jet += ginv_r(k, l) * pack.ricci_jets(k, l);

  // Weyl tensor; both brackets are weight-one alternations
  const double cw = 1.0 / (n - 2);
  const double cs = 1.0 / ((n - 1) * (n - 2));
  pack.weyl04_jets = JetTensor(n, {Var::lo, Var::lo, Var::lo, Var::lo}, Jet::constant(layout_r, 0.0));
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k)
      for (int l = 0; l < n; ++l)
        for (int m = 0; m < n; ++m) {
          Jet acc = pack.riemann04_jets(j, k, l, m);
          acc += cw * (g_r(m, j) * pack.ricci_jets(k, l) - g_r(m, k) * pack.ricci_jets(j, l) +
                       pack.ricci_jets(m, j) * g_r(k, l) - pack.ricci_jets(m, k) * g_r(j, l));
          acc -= cs * (pack.scalar_jet * (g_r(m, j) * g_r(k, l) - g_r(m, k) * g_r(j, l)));
          pack.weyl04_jets(j, k, l, m) = acc;
        }

  pack.riemann_0_4 = pack.riemann04_jets.values();
  pack.ricci = pack.ricci_jets.values();
  pack.scalar = pack.scalar_jet.value();
  pack.weyl_0_4 = pack.weyl04_jets.values();
  pack.riemann_3_1 = flip_slot(pack.riemann_0_4, 3, pack.metric.g_inv);
  pack.weyl_3_1 = flip_slot(pack.weyl_0_4, 3, pack.metric.g_inv);

  JetTensor nabla_weyl_jets = covariant_derivative_jets(pack.weyl04_jets, pack.gamma_jets);
  pack.nabla_weyl = nabla_weyl_jets.values();
  pack.weyl_divergence = Tensor(n, {Var::lo, Var::lo, Var::lo});
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k)
      for (int l = 0; l < n; ++l) {
        double acc = 0.0;
        for (int i = 0; i < n; ++i)
          for (int m = 0; m < n; ++m)
            acc += pack.metric.g_inv(i, m) * pack.nabla_weyl(i, j, k, l, m);
        pack.weyl_divergence(j, k, l) = acc;
      }

  if (order >= 4) {
    // divergence field as jets, then one more covariant derivative
    const int kd = order - 3;
    JetTensor ginv_d = pack.ginv_jets.truncated(kd);
    JetTensor div_jets(n, {Var::lo, Var::lo, Var::lo}, Jet::constant(JetLayout::get(n, kd), 0.0));
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) {
          Jet acc = Jet::constant(JetLayout::get(n, kd), 0.0);
          for (int i = 0; i < n; ++i)
            for (int m = 0; m < n; ++m)
              acc += ginv_d(i, m) * nabla_weyl_jets(i, j, k, l, m);
          div_jets(j, k, l) = acc;
        }
    pack.nabla_div_weyl = covariant_derivative_jets(div_jets, pack.gamma_jets).values();
  }

  return pack;
}

// Algebraic commutator of covariant derivatives (the Ricci identity): for a
// (0,r) tensor returns the rank r+2 tensor with leading slots (i,s),
//   act[i,s,a_1..a_r] = (nabla_i nabla_s - nabla_s nabla_i) T
//                     = sum_t R_{i s a_t}^p T[.. p ..].
// Needs no derivatives of T.
inline Tensor curvature_action_all(const Tensor& t, const CurvaturePack& pack) {
  const int n = t.dim();
  const int r = t.rank();
  std::vector<Var> var(static_cast<std::size_t>(r + 2), Var::lo);
  Tensor out(n, var);
  for (IndexIter it(n, r); !it.done(); it.next()) {
    for (int i = 0; i < n; ++i)
      for (int s = i + 1; s < n; ++s) {
        double acc = 0.0;
        std::array<int, kMaxRank> src = *it;
        for (int slot = 0; slot < r; ++slot) {
          const int a_t = (*it)[slot];
          for (int p = 0; p < n; ++p) {
            src[slot] = p;
            acc += pack.riemann_3_1(i, s, a_t, p) * t.at(src);
          }
          src[slot] = a_t;
        }
        std::array<int, kMaxRank> dst{};
        dst[0] = i;
        dst[1] = s;
        for (int q = 0; q < r; ++q) dst[q + 2] = (*it)[q];
        out.at(dst) = acc;
        dst[0] = s;
        dst[1] = i;
        out.at(dst) = -acc;
      }
  }
  return out;
}

inline Tensor curvature_action(const Tensor& t, const CurvaturePack& pack, int i, int s) {
  Tensor all = curvature_action_all(t, pack);
  Tensor out(t.dim(), t.variances());
  for (IndexIter it(t.dim(), t.rank()); !it.done(); it.next()) {
    std::array<int, kMaxRank> src{};
    src[0] = i;
    src[1] = s;
    for (int q = 0; q < t.rank(); ++q) src[q + 2] = (*it)[q];
    out.at(*it) = all.at(src);
  }
  return out;
}

inline MetricSpec conformal_rescale(const MetricSpec& spec, const Expression& sigma) {
  MetricSpec out = spec;
  out.name = spec.name + "_conformal";
  Expression factor = Expression::unary(
      UnaryFn::Exp, Expression::binary(BinaryOp::Mul, Expression::constant(2.0), sigma));
  for (auto& row : out.components)
    for (auto& comp : row) comp = Expression::binary(BinaryOp::Mul, factor, comp);
  out.sigma.reset();
  out.vector_A.reset();
  return out;
}

struct ConformalIdentityResult {
  double residual = 0.0;       // A^p raised with the base metric, g as printed
  double residual_alt = 0.0;   // A^p raised with the rescaled metric instead
  double weyl31_invariance = 0.0;
};

// Residual of the rescaling identity relating hatted and unhatted Weyl
// derivatives, with A_i the gradient of sigma.  Zero for every sigma.
inline ConformalIdentityResult conformal_identity_residual(const MetricSpec& spec,
                                                           const Expression& sigma,
                                                           const std::vector<double>& point,
                                                           int order = 3) {
  const int n = spec.dimension;
  CurvaturePack base = curvature_pack(spec, point, order);
  MetricSpec hat_spec = conformal_rescale(spec, sigma);
  CurvaturePack hat = curvature_pack(hat_spec, point, order);

  Jet sig = eval_jet(sigma, point, spec.parameters, 1);
  std::vector<double> a_lo(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) a_lo[static_cast<std::size_t>(i)] = sig.deriv(i);
  std::vector<double> a_up(static_cast<std::size_t>(n), 0.0), a_up_hat(static_cast<std::size_t>(n), 0.0);
  for (int p = 0; p < n; ++p)
    for (int q = 0; q < n; ++q) {
      a_up[static_cast<std::size_t>(p)] += base.metric.g_inv(p, q) * a_lo[static_cast<std::size_t>(q)];
      a_up_hat[static_cast<std::size_t>(p)] += hat.metric.g_inv(p, q) * a_lo[static_cast<std::size_t>(q)];
    }

  const double e2s = std::exp(2.0 * sig.value());
  double worst = 0.0, worst_alt = 0.0, scale = 1.0 + hat.nabla_weyl.max_abs();
  for (IndexIter it(n, 5); !it.done(); it.next()) {
    const int i = (*it)[0], j = (*it)[1], k = (*it)[2], l = (*it)[3], m = (*it)[4];
    double bracket = 0.0;
    for (int p = 0; p < n; ++p)
      bracket += base.metric.g(i, j) * hat.weyl_0_4(p, k, l, m) * a_up[static_cast<std::size_t>(p)] +
                 base.metric.g(i, k) * hat.weyl_0_4(j, p, l, m) * a_up[static_cast<std::size_t>(p)] +
                 base.metric.g(i, l) * hat.weyl_0_4(j, k, p, m) * a_up[static_cast<std::size_t>(p)] +
                 base.metric.g(i, m) * hat.weyl_0_4(j, k, l, p) * a_up[static_cast<std::size_t>(p)];
    double bracket_alt = 0.0;
    for (int p = 0; p < n; ++p)
      bracket_alt += base.metric.g(i, j) * hat.weyl_0_4(p, k, l, m) * a_up_hat[static_cast<std::size_t>(p)] +
                     base.metric.g(i, k) * hat.weyl_0_4(j, p, l, m) * a_up_hat[static_cast<std::size_t>(p)] +
                     base.metric.g(i, l) * hat.weyl_0_4(j, k, p, m) * a_up_hat[static_cast<std::size_t>(p)] +
                     base.metric.g(i, m) * hat.weyl_0_4(j, k, l, p) * a_up_hat[static_cast<std::size_t>(p)];
    double rhs = e2s * (base.nabla_weyl(i, j, k, l, m) -
                        2.0 * a_lo[static_cast<std::size_t>(i)] * base.weyl_0_4(j, k, l, m) -
                        a_lo[static_cast<std::size_t>(j)] * base.weyl_0_4(i, k, l, m) -
                        a_lo[static_cast<std::size_t>(k)] * base.weyl_0_4(j, i, l, m) -
                        a_lo[static_cast<std::size_t>(l)] * base.weyl_0_4(j, k, i, m) -
                        a_lo[static_cast<std::size_t>(m)] * base.weyl_0_4(j, k, l, i));
    double lhs = hat.nabla_weyl(i, j, k, l, m);
    worst = std::max(worst, std::abs(lhs - bracket - rhs));
    worst_alt = std::max(worst_alt, std::abs(lhs - bracket_alt - rhs));
  }

  ConformalIdentityResult res;
  res.residual = worst / scale;
  res.residual_alt = worst_alt / scale;
  Tensor diff = hat.weyl_3_1 - base.weyl_3_1;
  res.weyl31_invariance = diff.max_abs() / (1.0 + base.weyl_3_1.max_abs());
  return res;
}

}  // namespace cqr
