#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <string>

#include "cqrlab/curvature.hpp"

namespace cqr {

// -----------------------------------------------------------------------
// shared helpers
// -----------------------------------------------------------------------

// cyclic sum over the first three slots: T[i,j,k,...] + T[j,k,i,...] + T[k,i,j,...]
inline Tensor cyclic3(const Tensor& t) {
  Tensor out(t.dim(), t.variances());
  for (IndexIter it(t.dim(), t.rank()); !it.done(); it.next()) {
    std::array<int, kMaxRank> a = *it, b = *it, c = *it;
    b[0] = (*it)[1]; b[1] = (*it)[2]; b[2] = (*it)[0];
    c[0] = (*it)[2]; c[1] = (*it)[0]; c[2] = (*it)[1];
    out.at(*it) = t.at(a) + t.at(b) + t.at(c);
  }
  return out;
}

inline std::vector<double> raise_vector(const std::vector<double>& a_lo,
                                        const CurvaturePack& pack) {
  const int n = pack.dim();
  std::vector<double> up(static_cast<std::size_t>(n), 0.0);
  for (int p = 0; p < n; ++p)
    for (int q = 0; q < n; ++q)
      up[static_cast<std::size_t>(p)] += pack.metric.g_inv(p, q) * a_lo[static_cast<std::size_t>(q)];
  return up;
}

inline double vector_norm_sq(const std::vector<double>& a_lo, const CurvaturePack& pack) {
  const int n = pack.dim();
  double s = 0.0;
  for (int p = 0; p < n; ++p)
    for (int q = 0; q < n; ++q)
      s += pack.metric.g_inv(p, q) * a_lo[static_cast<std::size_t>(p)] * a_lo[static_cast<std::size_t>(q)];
  return s;
}

inline double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

// A and its exact covariant gradient from the chart's vector_A expressions
struct VectorField {
  std::vector<double> a_lo;  // A_j
  Tensor nabla_a;            // (0,2) slots (i,j) = nabla_i A_j
};

inline VectorField evaluate_vector_A(const CurvaturePack& pack) {
  if (!pack.spec.vector_A) throw MissingField("metric has no vector_A field");
  const int n = pack.dim();
  VectorField out;
  out.a_lo.resize(static_cast<std::size_t>(n));
  Tensor da(n, {Var::lo, Var::lo});
  for (int j = 0; j < n; ++j) {
    Jet aj = eval_jet((*pack.spec.vector_A)[static_cast<std::size_t>(j)], pack.point,
                      pack.spec.parameters, 1);
    out.a_lo[static_cast<std::size_t>(j)] = aj.value();
    for (int i = 0; i < n; ++i) da(i, j) = aj.deriv(i);
  }
  out.nabla_a = Tensor(n, {Var::lo, Var::lo});
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double acc = da(i, j);
      for (int p = 0; p < n; ++p) acc -= pack.christoffel(p, i, j) * out.a_lo[static_cast<std::size_t>(p)];
      out.nabla_a(i, j) = acc;
    }
  return out;
}

// -----------------------------------------------------------------------
// recurrence residuals
// -----------------------------------------------------------------------

// five-term recurrence defect of the Weyl derivative for a candidate vector
inline double cqr_residual(const CurvaturePack& pack, const std::vector<double>& a) {
  const int n = pack.dim();
  const Tensor& C = pack.weyl_0_4;
  const Tensor& dC = pack.nabla_weyl;
  double worst = 0.0;
  for (IndexIter it(n, 5); !it.done(); it.next()) {
    const int i = (*it)[0], j = (*it)[1], k = (*it)[2], l = (*it)[3], m = (*it)[4];
    double rhs = 2.0 * a[static_cast<std::size_t>(i)] * C(j, k, l, m) +
                 a[static_cast<std::size_t>(j)] * C(i, k, l, m) +
                 a[static_cast<std::size_t>(k)] * C(j, i, l, m) +
                 a[static_cast<std::size_t>(l)] * C(j, k, i, m) +
                 a[static_cast<std::size_t>(m)] * C(j, k, l, i);
    worst = std::max(worst, std::abs(dC(i, j, k, l, m) - rhs));
  }
  return worst / (1.0 + dC.max_abs());
}

inline double annihilation_residual(const CurvaturePack& pack, const std::vector<double>& a) {
  const int n = pack.dim();
  std::vector<double> a_up = raise_vector(a, pack);
  double worst = 0.0;
  for (IndexIter it(n, 3); !it.done(); it.next()) {
    double acc = 0.0;
    for (int m = 0; m < n; ++m)
      acc += pack.weyl_0_4((*it)[0], (*it)[1], (*it)[2], m) * a_up[static_cast<std::size_t>(m)];
    worst = std::max(worst, std::abs(acc));
  }
  return worst / (1.0 + pack.weyl_0_4.max_abs());
}

inline double weyl_divergence_residual(const CurvaturePack& pack) {
  return pack.weyl_divergence.max_abs() / (1.0 + pack.nabla_weyl.max_abs());
}

inline double conformally_recurrent_residual(const CurvaturePack& pack,
                                             const std::vector<double>& a) {
  const int n = pack.dim();
  double worst = 0.0;
  for (IndexIter it(n, 5); !it.done(); it.next()) {
    const int i = (*it)[0];
    double rhs = 4.0 * a[static_cast<std::size_t>(i)] *
                 pack.weyl_0_4((*it)[1], (*it)[2], (*it)[3], (*it)[4]);
    worst = std::max(worst, std::abs(pack.nabla_weyl.at(*it) - rhs));
  }
  return worst / (1.0 + pack.nabla_weyl.max_abs());
}

inline double antisym_condition_residual(const CurvaturePack& pack, const std::vector<double>& a) {
  const int n = pack.dim();
  Tensor v(n, {Var::lo, Var::lo, Var::lo, Var::lo, Var::lo});
  for (IndexIter it(n, 5); !it.done(); it.next())
    v.at(*it) = a[static_cast<std::size_t>((*it)[0])] *
                pack.weyl_0_4((*it)[1], (*it)[2], (*it)[3], (*it)[4]);
  Tensor cyc = cyclic3(v);
  return cyc.max_abs() / (1.0 + max_abs(a) * pack.weyl_0_4.max_abs());
}

// -----------------------------------------------------------------------
// fundamental vector extraction
// -----------------------------------------------------------------------

enum class FvStatus { cqr, conformally_symmetric, not_cqr, conformally_flat };

inline const char* to_string(FvStatus s) {
  switch (s) {
    case FvStatus::cqr: return "cqr";
    case FvStatus::conformally_symmetric: return "conformally_symmetric";
    case FvStatus::not_cqr: return "not_cqr";
    case FvStatus::conformally_flat: return "conformally_flat";
  }
  return "?";
}

struct FundamentalVectorReport {
  std::vector<double> A;  // lower index
  double recurrence_residual = 0.0;
  double annihilation_residual = 0.0;
  double nullity = 0.0;  // |A_m A^m|
  int kernel_dimension = 0;
  FvStatus status = FvStatus::conformally_flat;
  std::optional<double> gradient_formula_residual;  // exactness cross-check, C^2 != 0 only
};

// count of near-zero singular values of B -> B^m C_{jklm}
inline int annihilation_kernel_dimension(const CurvaturePack& pack) {
  const int n = pack.dim();
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(n, n);
  for (IndexIter it(n, 3); !it.done(); it.next())
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        gram(a, b) += pack.weyl_0_4((*it)[0], (*it)[1], (*it)[2], a) *
                      pack.weyl_0_4((*it)[0], (*it)[1], (*it)[2], b);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
  double smax = 0.0;
  std::vector<double> sv;
  for (int i = 0; i < n; ++i) {
    double s = std::sqrt(std::max(0.0, es.eigenvalues()(i)));
    sv.push_back(s);
    smax = std::max(smax, s);
  }
  int kernel = 0;
  for (double s : sv)
    if (s <= 1e-10 * smax) ++kernel;
  return kernel;
}

inline double weyl_square(const CurvaturePack& pack) {
  Tensor c_up = pack.weyl_0_4;
  for (int s = 0; s < 4; ++s) c_up = flip_slot(c_up, s, pack.metric.g_inv);
  double acc = 0.0;
  for (std::size_t i = 0; i < c_up.data().size(); ++i)
    acc += c_up.data()[i] * pack.weyl_0_4.data()[i];
  return acc;
}

// Least-squares fit of the recurrence over all n-vectors via normal equations
// with a relative singular-value cutoff of 1e-10.
inline FundamentalVectorReport solve_fundamental_vector(const CurvaturePack& pack,
                                                        double tol = 1e-9) {
  const int n = pack.dim();
  FundamentalVectorReport rep;
  rep.A.assign(static_cast<std::size_t>(n), 0.0);
  rep.kernel_dimension = annihilation_kernel_dimension(pack);
  if (pack.weyl_0_4.max_abs() <= tol) {
    rep.status = FvStatus::conformally_flat;
    return rep;
  }

  const Tensor& C = pack.weyl_0_4;
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  std::vector<double> row(static_cast<std::size_t>(n));
  for (IndexIter it(n, 5); !it.done(); it.next()) {
    const int i = (*it)[0], j = (*it)[1], k = (*it)[2], l = (*it)[3], m = (*it)[4];
    std::fill(row.begin(), row.end(), 0.0);
    row[static_cast<std::size_t>(i)] += 2.0 * C(j, k, l, m);
    row[static_cast<std::size_t>(j)] += C(i, k, l, m);
    row[static_cast<std::size_t>(k)] += C(j, i, l, m);
    row[static_cast<std::size_t>(l)] += C(j, k, i, m);
    row[static_cast<std::size_t>(m)] += C(j, k, l, i);
    const double b = pack.nabla_weyl.at(*it);
    for (int a = 0; a < n; ++a) {
      rhs(a) += row[static_cast<std::size_t>(a)] * b;
      for (int c = 0; c < n; ++c) gram(a, c) += row[static_cast<std::size_t>(a)] * row[static_cast<std::size_t>(c)];
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
  double sigma_max = 0.0;
  for (int a = 0; a < n; ++a) sigma_max = std::max(sigma_max, std::sqrt(std::max(0.0, es.eigenvalues()(a))));
  Eigen::VectorXd sol = Eigen::VectorXd::Zero(n);
  for (int a = 0; a < n; ++a) {
    double sigma = std::sqrt(std::max(0.0, es.eigenvalues()(a)));
    if (sigma_max > 0.0 && sigma > 1e-10 * sigma_max)
      sol += (es.eigenvectors().col(a).dot(rhs) / es.eigenvalues()(a)) * es.eigenvectors().col(a);
  }
  for (int a = 0; a < n; ++a) rep.A[static_cast<std::size_t>(a)] = sol(a);

  rep.recurrence_residual = cqr_residual(pack, rep.A);
  rep.annihilation_residual = annihilation_residual(pack, rep.A);
  rep.nullity = std::abs(vector_norm_sq(rep.A, pack));
  if (rep.recurrence_residual <= tol)
    rep.status = (max_abs(rep.A) > tol) ? FvStatus::cqr : FvStatus::conformally_symmetric;
  else
    rep.status = FvStatus::not_cqr;

  // gradient formula: 4 A_i C^2 = nabla_i C^2 whenever C^2 is non-degenerate
  const double c2 = weyl_square(pack);
  if (std::abs(c2) > tol * (1.0 + pack.weyl_0_4.max_abs())) {
    Tensor c_up = pack.weyl_0_4;
    for (int s = 0; s < 4; ++s) c_up = flip_slot(c_up, s, pack.metric.g_inv);
    double worst = 0.0;
    for (int i = 0; i < n; ++i) {
      double grad_c2 = 0.0;
      for (IndexIter it(n, 4); !it.done(); it.next()) {
        std::array<int, kMaxRank> src{};
        src[0] = i;
        for (int q = 0; q < 4; ++q) src[q + 1] = (*it)[q];
        grad_c2 += 2.0 * pack.nabla_weyl.at(src) * c_up.at(*it);
      }
      worst = std::max(worst, std::abs(grad_c2 / (4.0 * c2) - rep.A[static_cast<std::size_t>(i)]));
    }
    rep.gradient_formula_residual = worst / (1.0 + max_abs(rep.A));
  }
  return rep;
}

// -----------------------------------------------------------------------
// compatibility
// -----------------------------------------------------------------------

// cyclic defect S_i^m K_{jklm} + S_j^m K_{kilm} + S_k^m K_{ijlm}
inline double compatibility_residual(const Tensor& s, const Tensor& k04,
                                     const CurvaturePack& pack) {
  const int n = pack.dim();
  Tensor v(n, {Var::lo, Var::lo, Var::lo, Var::lo});
  for (IndexIter it(n, 4); !it.done(); it.next()) {
    const int i = (*it)[0], j = (*it)[1], kk = (*it)[2], l = (*it)[3];
    double acc = 0.0;
    for (int a = 0; a < n; ++a)
      for (int m = 0; m < n; ++m)
        acc += s(i, a) * pack.metric.g_inv(a, m) * k04(j, kk, l, m);
    v(i, j, kk, l) = acc;
  }
  Tensor cyc = cyclic3(v);
  return cyc.max_abs() / (1.0 + v.max_abs());
}

// -----------------------------------------------------------------------
// gradient-of-A identities
// -----------------------------------------------------------------------

struct GradientAChecks {
  double residual_9 = 0.0;    // (nabla_i A^m) C_{jklm} + (A^m A_m) C_{jkli}
  double residual_10 = 0.0;   // |nabla C|^2 - 8 (A A) C^2
  double residual_11 = 0.0;   // Weyl compatibility of nabla A
  bool residual_10_vacuous = false;
  VectorField field;
};

inline GradientAChecks gradient_A_checks(const CurvaturePack& pack, double tol = 1e-9) {
  const int n = pack.dim();
  GradientAChecks out;
  out.field = evaluate_vector_A(pack);
  const auto& a = out.field.a_lo;
  const Tensor& da = out.field.nabla_a;
  const double a2 = vector_norm_sq(a, pack);

  Tensor da_up(n, {Var::lo, Var::up});
  for (int i = 0; i < n; ++i)
    for (int m = 0; m < n; ++m) {
      double acc = 0.0;
      for (int q = 0; q < n; ++q) acc += da(i, q) * pack.metric.g_inv(q, m);
      da_up(i, m) = acc;
    }
  double worst = 0.0, scale = 0.0;
  for (IndexIter it(n, 4); !it.done(); it.next()) {
    const int i = (*it)[0], j = (*it)[1], k = (*it)[2], l = (*it)[3];
    double t1 = 0.0;
    for (int m = 0; m < n; ++m) t1 += da_up(i, m) * pack.weyl_0_4(j, k, l, m);
    scale = std::max(scale, std::abs(t1));
    worst = std::max(worst, std::abs(t1 + a2 * pack.weyl_0_4(j, k, l, i)));
  }
  out.residual_9 = worst / (1.0 + scale + std::abs(a2) * pack.weyl_0_4.max_abs());

  // full metric contraction of the Weyl derivative with itself
  Tensor dc_up = pack.nabla_weyl;
  for (int s = 0; s < 5; ++s) dc_up = flip_slot(dc_up, s, pack.metric.g_inv);
  double dc2 = 0.0;
  for (std::size_t q = 0; q < dc_up.data().size(); ++q)
    dc2 += dc_up.data()[q] * pack.nabla_weyl.data()[q];
  const double c2 = weyl_square(pack);
  out.residual_10 = std::abs(dc2 - 8.0 * a2 * c2) / (1.0 + std::abs(dc2));
  out.residual_10_vacuous = std::abs(dc2) <= tol && std::abs(a2 * c2) <= tol;

  out.residual_11 = compatibility_residual(da, pack.weyl_0_4, pack);
  return out;
}

// -----------------------------------------------------------------------
// Theta/Gamma contraction suite
// -----------------------------------------------------------------------

struct ThetaGammaReport {
  Tensor theta;  // (0,4)
  Tensor gamma;  // (0,2)
  double c2 = 0.0;
  double theta_recurrence = 0.0;
  double theta_divergence = 0.0;   // nabla_s Theta_{pqr}^s = A_q Gamma_{pr} - A_p Gamma_{qr}
  double gamma_recurrence = 0.0;
  double coda = 0.0;               // nabla_j Gamma_{kl} - nabla_k Gamma_{jl} = 3A_j Gamma_{kl} - 3A_k Gamma_{jl}
  std::optional<double> codazzi;   // rescaled Gamma is Codazzi; needs C^2 != 0
  std::optional<double> love;      // cyclic second divergence of Theta; order 4 or fd
  double gamma_annihilation = 0.0;
  bool vacuous = false;
};

namespace detail {

// Theta_{pqrs} = C_{pqlm} C_{rs}^{lm} and its exact covariant derivative by
// the product rule (metric compatibility keeps this algebraic in C, dC).
struct ThetaGammaData {
  Tensor theta, nabla_theta;   // (0,4), (0,5) deriv slot first
  Tensor gamma, nabla_gamma;   // (0,2), (0,3) deriv slot first
  double c2 = 0.0;
  std::vector<double> nabla_c2;
};

inline ThetaGammaData theta_gamma_data(const CurvaturePack& pack) {
  const int n = pack.dim();
  ThetaGammaData d;

  Tensor c_up2 = flip_slot(flip_slot(pack.weyl_0_4, 2, pack.metric.g_inv), 3, pack.metric.g_inv);
  Tensor c_up3 = flip_slot(c_up2, 1, pack.metric.g_inv);
  Tensor c_up4 = flip_slot(c_up3, 0, pack.metric.g_inv);

  d.theta = Tensor(n, {Var::lo, Var::lo, Var::lo, Var::lo});
  for (IndexIter it(n, 4); !it.done(); it.next()) {
    const int p = (*it)[0], q = (*it)[1], r = (*it)[2], s = (*it)[3];
    double acc = 0.0;
    for (int l = 0; l < n; ++l)
      for (int m = 0; m < n; ++m) acc += pack.weyl_0_4(p, q, l, m) * c_up2(r, s, l, m);
    d.theta.at(*it) = acc;
  }
  d.gamma = Tensor(n, {Var::lo, Var::lo});
  for (int p = 0; p < n; ++p)
    for (int r = 0; r < n; ++r) {
      double acc = 0.0;
      for (IndexIter it(n, 3); !it.done(); it.next())
        acc += pack.weyl_0_4(p, (*it)[0], (*it)[1], (*it)[2]) * c_up3(r, (*it)[0], (*it)[1], (*it)[2]);
      d.gamma(p, r) = acc;
    }
  d.c2 = 0.0;
  for (std::size_t q = 0; q < c_up4.data().size(); ++q)
    d.c2 += pack.weyl_0_4.data()[q] * c_up4.data()[q];

  // nabla C with raised pairs
  Tensor dc = pack.nabla_weyl;
  Tensor dc_up2 = flip_slot(flip_slot(dc, 3, pack.metric.g_inv), 4, pack.metric.g_inv);
  Tensor dc_up3 = flip_slot(dc_up2, 2, pack.metric.g_inv);
  Tensor dc_up4 = flip_slot(dc_up3, 1, pack.metric.g_inv);

  d.nabla_theta = Tensor(n, {Var::lo, Var::lo, Var::lo, Var::lo, Var::lo});
  for (IndexIter it(n, 5); !it.done(); it.next()) {
    const int i = (*it)[0], p = (*it)[1], q = (*it)[2], r = (*it)[3], s = (*it)[4];
    double acc = 0.0;
    for (int l = 0; l < n; ++l)
      for (int m = 0; m < n; ++m)
        acc += dc(i, p, q, l, m) * c_up2(r, s, l, m) + pack.weyl_0_4(p, q, l, m) * dc_up2(i, r, s, l, m);
    d.nabla_theta.at(*it) = acc;
  }
  d.nabla_gamma = Tensor(n, {Var::lo, Var::lo, Var::lo});
  for (int i = 0; i < n; ++i)
    for (int p = 0; p < n; ++p)
      for (int r = 0; r < n; ++r) {
        double acc = 0.0;
        for (IndexIter it(n, 3); !it.done(); it.next())
          acc += dc(i, p, (*it)[0], (*it)[1], (*it)[2]) * c_up3(r, (*it)[0], (*it)[1], (*it)[2]) +
                 pack.weyl_0_4(p, (*it)[0], (*it)[1], (*it)[2]) * dc_up3(i, r, (*it)[0], (*it)[1], (*it)[2]);
        d.nabla_gamma(i, p, r) = acc;
      }
  d.nabla_c2.assign(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) {
    double acc = 0.0;
    for (IndexIter it(n, 4); !it.done(); it.next()) {
      std::array<int, kMaxRank> src{};
      src[0] = i;
      for (int q = 0; q < 4; ++q) src[q + 1] = (*it)[q];
      acc += 2.0 * dc.at(src) * c_up4.at(*it);
    }
    d.nabla_c2[static_cast<std::size_t>(i)] = acc;
  }
  return d;
}

}  // namespace detail

// Second covariant divergence of Theta, cyclically summed over the first
// three indices; needs order-4 jets (or the finite-difference fallback in
// the driver).
inline Tensor nabla_div_theta(const CurvaturePack& pack) {
  if (pack.order < 4) throw OrderTooLow("second Theta divergence needs jet order 4");
  const int n = pack.dim();
  const int kt = pack.order - 2;
  // Theta as a jet field from the Weyl jets
  JetTensor cjets = pack.weyl04_jets;
  JetTensor ginv_t = pack.ginv_jets.truncated(kt);
  auto layout = JetLayout::get(n, kt);
  JetTensor theta(n, {Var::lo, Var::lo, Var::lo, Var::lo}, Jet::constant(layout, 0.0));
  for (IndexIter it(n, 4); !it.done(); it.next()) {
    const int p = (*it)[0], q = (*it)[1], r = (*it)[2], s = (*it)[3];
    Jet acc = Jet::constant(layout, 0.0);
    for (int l = 0; l < n; ++l)
      for (int m = 0; m < n; ++m) {
        Jet up = Jet::constant(layout, 0.0);
        for (int a = 0; a < n; ++a)
          for (int b = 0; b < n; ++b) up += ginv_t(l, a) * ginv_t(m, b) * cjets(r, s, a, b);
        acc += cjets(p, q, l, m) * up;
      }
    theta.at(*it) = acc;
  }
  JetTensor dtheta = covariant_derivative_jets(theta, pack.gamma_jets);  // order kt-1
  const int kd = kt - 1;
  JetTensor ginv_d = pack.ginv_jets.truncated(kd);
  JetTensor div(n, {Var::lo, Var::lo, Var::lo}, Jet::constant(JetLayout::get(n, kd), 0.0));
  for (int p = 0; p < n; ++p)
    for (int q = 0; q < n; ++q)
      for (int r = 0; r < n; ++r) {
        Jet acc = Jet::constant(JetLayout::get(n, kd), 0.0);
        for (int s = 0; s < n; ++s)
          for (int a = 0; a < n; ++a) acc += ginv_d(s, a) * dtheta(s, p, q, r, a);
        div(p, q, r) = acc;
      }
  return covariant_derivative_jets(div, pack.gamma_jets).values();  // (0,4) slots (i,p,q,r)
}

inline ThetaGammaReport theta_gamma_suite(const CurvaturePack& pack, const std::vector<double>& a,
                                          double tol = 1e-9) {
  const int n = pack.dim();
  detail::ThetaGammaData d = detail::theta_gamma_data(pack);
  ThetaGammaReport rep;
  rep.theta = d.theta;
  rep.gamma = d.gamma;
  rep.c2 = d.c2;

  const double cscale = pack.weyl_0_4.max_abs();
  rep.vacuous = d.theta.max_abs() <= tol * (1.0 + cscale * cscale) &&
                d.gamma.max_abs() <= tol * (1.0 + cscale * cscale);

  {
    double worst = 0.0;
    for (IndexIter it(n, 5); !it.done(); it.next()) {
      const int i = (*it)[0], p = (*it)[1], q = (*it)[2], r = (*it)[3], s = (*it)[4];
      double rhs = 4.0 * a[static_cast<std::size_t>(i)] * d.theta(p, q, r, s) +
                   a[static_cast<std::size_t>(p)] * d.theta(i, q, r, s) +
                   a[static_cast<std::size_t>(q)] * d.theta(p, i, r, s) +
                   a[static_cast<std::size_t>(r)] * d.theta(p, q, i, s) +
                   a[static_cast<std::size_t>(s)] * d.theta(p, q, r, i);
      worst = std::max(worst, std::abs(d.nabla_theta.at(*it) - rhs));
    }
    rep.theta_recurrence = worst / (1.0 + d.nabla_theta.max_abs());
  }
  {
    double worst = 0.0;
    for (int p = 0; p < n; ++p)
      for (int q = 0; q < n; ++q)
        for (int r = 0; r < n; ++r) {
          double div = 0.0;
          for (int s = 0; s < n; ++s)
            for (int b = 0; b < n; ++b)
              div += pack.metric.g_inv(s, b) * d.nabla_theta(s, p, q, r, b);
          double rhs = a[static_cast<std::size_t>(q)] * d.gamma(p, r) -
                       a[static_cast<std::size_t>(p)] * d.gamma(q, r);
          worst = std::max(worst, std::abs(div - rhs));
        }
    rep.theta_divergence = worst / (1.0 + d.nabla_theta.max_abs());
  }
  {
    double worst = 0.0;
    for (int i = 0; i < n; ++i)
      for (int p = 0; p < n; ++p)
        for (int r = 0; r < n; ++r) {
          double rhs = 4.0 * a[static_cast<std::size_t>(i)] * d.gamma(p, r) +
                       a[static_cast<std::size_t>(p)] * d.gamma(i, r) +
                       a[static_cast<std::size_t>(r)] * d.gamma(i, p);
          worst = std::max(worst, std::abs(d.nabla_gamma(i, p, r) - rhs));
        }
    rep.gamma_recurrence = worst / (1.0 + d.nabla_gamma.max_abs());
  }
  {
    double worst = 0.0;
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) {
          double lhs = d.nabla_gamma(j, k, l) - d.nabla_gamma(k, j, l);
          double rhs = 3.0 * a[static_cast<std::size_t>(j)] * d.gamma(k, l) -
                       3.0 * a[static_cast<std::size_t>(k)] * d.gamma(j, l);
          worst = std::max(worst, std::abs(lhs - rhs));
        }
    rep.coda = worst / (1.0 + d.nabla_gamma.max_abs());
  }
  if (std::abs(d.c2) > tol * (1.0 + d.gamma.max_abs())) {
    // nabla of |C^2|^{-3/4} Gamma, assembled from the product rule
    const double w = std::pow(std::abs(d.c2), -0.75);
    Tensor dt(n, {Var::lo, Var::lo, Var::lo});
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int q = 0; q < n; ++q)
          dt(i, j, q) = w * (d.nabla_gamma(i, j, q) -
                             0.75 * (d.nabla_c2[static_cast<std::size_t>(i)] / d.c2) * d.gamma(j, q));
    double worst = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int q = 0; q < n; ++q) worst = std::max(worst, std::abs(dt(i, j, q) - dt(j, i, q)));
    rep.codazzi = worst / (1.0 + dt.max_abs());
  }
  if (pack.order >= 4) {
    Tensor ndt = nabla_div_theta(pack);
    Tensor cyc = cyclic3(ndt);
    rep.love = cyc.max_abs() / (1.0 + ndt.max_abs());
  }
  {
    std::vector<double> a_up = raise_vector(a, pack);
    double worst = 0.0;
    for (int r = 0; r < n; ++r) {
      double acc = 0.0;
      for (int p = 0; p < n; ++p) acc += a_up[static_cast<std::size_t>(p)] * d.gamma(p, r);
      worst = std::max(worst, std::abs(acc));
    }
    rep.gamma_annihilation = worst / (1.0 + max_abs(a) * d.gamma.max_abs());
  }
  return rep;
}

// -----------------------------------------------------------------------
// concircular vectors and quasi-Einstein structure
// -----------------------------------------------------------------------

struct ConcircularReport {
  double gamma = 0.0;
  double fit_residual = 0.0;
  double gamma_spread = 0.0;  // spread of gamma over sample-box points
  double null_consistency = 0.0;
};

inline double concircular_gamma_at(const MetricSpec& spec, const std::vector<double>& point,
                                   int order) {
  CurvaturePack pack = curvature_pack(spec, point, order);
  VectorField f = evaluate_vector_A(pack);
  const int n = pack.dim();
  double gamma = 0.0;
  for (int s = 0; s < n; ++s)
    for (int i = 0; i < n; ++i)
      gamma += pack.metric.g_inv(s, i) *
               (f.nabla_a(s, i) - f.a_lo[static_cast<std::size_t>(s)] * f.a_lo[static_cast<std::size_t>(i)]);
  return gamma / n;
}

// deterministic interior points of the sample box (a Kronecker sequence)
inline std::vector<std::vector<double>> sample_box_points(const MetricSpec& spec, int count,
                                                          int offset = 0) {
  const int n = spec.dimension;
  double phi = 2.0;
  for (int iter = 0; iter < 40; ++iter) phi = std::pow(1.0 + phi, 1.0 / (n + 1));
  std::vector<double> alpha(static_cast<std::size_t>(n));
  double p = 1.0 / phi;
  for (int c = 0; c < n; ++c) {
    alpha[static_cast<std::size_t>(c)] = p;
    p /= phi;
  }
  std::vector<std::vector<double>> points;
  for (int k = 0; k < count; ++k) {
    std::vector<double> x(static_cast<std::size_t>(n));
    for (int c = 0; c < n; ++c) {
      double frac = std::fmod(0.5 + (k + offset + 1) * alpha[static_cast<std::size_t>(c)], 1.0);
      const auto& box = spec.sample_box[static_cast<std::size_t>(c)];
      // keep away from the box edges
      x[static_cast<std::size_t>(c)] = box[0] + (box[1] - box[0]) * (0.05 + 0.9 * frac);
    }
    points.push_back(std::move(x));
  }
  return points;
}

inline ConcircularReport concircular_fit(const CurvaturePack& pack, double /*tol*/ = 1e-9) {
  const int n = pack.dim();
  VectorField f = evaluate_vector_A(pack);
  ConcircularReport rep;
  double gamma = 0.0;
  for (int s = 0; s < n; ++s)
    for (int i = 0; i < n; ++i)
      gamma += pack.metric.g_inv(s, i) *
               (f.nabla_a(s, i) - f.a_lo[static_cast<std::size_t>(s)] * f.a_lo[static_cast<std::size_t>(i)]);
  gamma /= n;
  rep.gamma = gamma;
  double worst = 0.0;
  for (int s = 0; s < n; ++s)
    for (int i = 0; i < n; ++i)
      worst = std::max(worst, std::abs(f.nabla_a(s, i) -
                                       f.a_lo[static_cast<std::size_t>(s)] * f.a_lo[static_cast<std::size_t>(i)] -
                                       gamma * pack.metric.g(s, i)));
  rep.fit_residual = worst / (1.0 + f.nabla_a.max_abs() + std::abs(gamma));
  rep.null_consistency = std::abs(vector_norm_sq(f.a_lo, pack) + gamma);

  double lo = gamma, hi = gamma;
  for (const auto& x : sample_box_points(pack.spec, 5)) {
    double gx = concircular_gamma_at(pack.spec, x, 3);
    lo = std::min(lo, gx);
    hi = std::max(hi, gx);
  }
  rep.gamma_spread = hi - lo;
  return rep;
}

struct QuasiEinsteinReport {
  double beta = 0.0;
  double alpha = 0.0;
  std::vector<double> u;
  double residual = 0.0;
  std::vector<int> eigen_multiplicities;  // partition of n, descending
  bool qualifies = false;                 // one eigenvalue of multiplicity >= n-1
  std::vector<double> ricci_singular_values;
  double codazzi_residual = 0.0;          // nabla_m R_ij - nabla_i R_mj
  double max_imag = 0.0;
};

inline QuasiEinsteinReport quasi_einstein_decompose(const CurvaturePack& pack) {
  const int n = pack.dim();
  QuasiEinsteinReport rep;

  Eigen::MatrixXd endo(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double acc = 0.0;
      for (int a = 0; a < n; ++a) acc += pack.metric.g_inv(i, a) * pack.ricci(a, j);
      endo(i, j) = acc;
    }
  Eigen::EigenSolver<Eigen::MatrixXd> es(endo);
  std::vector<double> lam;
  for (int i = 0; i < n; ++i) {
    lam.push_back(es.eigenvalues()(i).real());
    rep.max_imag = std::max(rep.max_imag, std::abs(es.eigenvalues()(i).imag()));
  }
  std::sort(lam.begin(), lam.end());
  double lmax = 0.0;
  for (double l : lam) lmax = std::max(lmax, std::abs(l));
  // relative-gap clustering of roundoff-split multiplicities
  std::vector<std::pair<double, int>> clusters;
  for (double l : lam) {
    if (!clusters.empty() && std::abs(l - clusters.back().first) <= 1e-6 * (1.0 + lmax)) {
      auto& [v, c] = clusters.back();
      v = (v * c + l) / (c + 1);
      ++c;
    } else {
      clusters.emplace_back(l, 1);
    }
  }
  for (const auto& [v, c] : clusters) rep.eigen_multiplicities.push_back(c);
  std::sort(rep.eigen_multiplicities.begin(), rep.eigen_multiplicities.end(), std::greater<int>());
  int big = 0;
  double beta = 0.0;
  for (const auto& [v, c] : clusters)
    if (c > big || (c == big && std::abs(v) < std::abs(beta))) {
      big = c;
      beta = v;
    }
  rep.qualifies = clusters.size() <= 2 && big >= n - 1;
  rep.beta = beta;

  Eigen::MatrixXd t(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) t(i, j) = pack.ricci(i, j) - beta * pack.metric.g(i, j);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> tes(t);
  int pick = 0;
  for (int i = 1; i < n; ++i)
    if (std::abs(tes.eigenvalues()(i)) > std::abs(tes.eigenvalues()(pick))) pick = i;
  rep.alpha = tes.eigenvalues()(pick);
  rep.u.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) rep.u[static_cast<std::size_t>(i)] = tes.eigenvectors()(i, pick);
  double worst = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      worst = std::max(worst, std::abs(t(i, j) - rep.alpha * rep.u[static_cast<std::size_t>(i)] *
                                                     rep.u[static_cast<std::size_t>(j)]));
  rep.residual = worst / (1.0 + pack.ricci.max_abs() + std::abs(beta));

  Eigen::MatrixXd ric(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) ric(i, j) = pack.ricci(i, j);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(ric);
  for (int i = 0; i < n; ++i) rep.ricci_singular_values.push_back(svd.singularValues()(i));

  Tensor dricci = covariant_derivative(pack.ricci_jets, pack);
  double cworst = 0.0;
  for (int m = 0; m < n; ++m)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        cworst = std::max(cworst, std::abs(dricci(m, i, j) - dricci(i, m, j)));
  rep.codazzi_residual = cworst / (1.0 + dricci.max_abs());
  return rep;
}

// -----------------------------------------------------------------------
// Deszcz pseudo-symmetry
// -----------------------------------------------------------------------

struct DeszczResiduals {
  double weyl = 0.0;
  double ricci = 0.0;
  double gamma = 0.0;
};

// Left sides are the algebraic curvature commutators; right sides carry the
// given constant gamma.
inline DeszczResiduals deszcz_residuals(const CurvaturePack& pack, double gamma) {
  const int n = pack.dim();
  DeszczResiduals out;
  const double rscale = pack.riemann_3_1.max_abs();
  {
    Tensor act = curvature_action_all(pack.weyl_0_4, pack);
    const Tensor& c = pack.weyl_0_4;
    const Tensor& g = pack.metric.g;
    double worst = 0.0;
    for (IndexIter it(n, 6); !it.done(); it.next()) {
      const int i = (*it)[0], s = (*it)[1], j = (*it)[2], k = (*it)[3], l = (*it)[4], m = (*it)[5];
      double rhs = gamma * (g(s, j) * c(i, k, l, m) - g(i, j) * c(s, k, l, m) +
                            g(s, k) * c(j, i, l, m) - g(i, k) * c(j, s, l, m) +
                            g(l, s) * c(j, k, i, m) - g(l, i) * c(j, k, s, m) +
                            g(m, s) * c(j, k, l, i) - g(m, i) * c(j, k, l, s));
      worst = std::max(worst, std::abs(act.at(*it) - rhs));
    }
    out.weyl = worst / (1.0 + rscale * c.max_abs() + std::abs(gamma) * c.max_abs());
  }
  {
    Tensor act = curvature_action_all(pack.ricci, pack);
    const Tensor& r = pack.ricci;
    const Tensor& g = pack.metric.g;
    double worst = 0.0;
    for (IndexIter it(n, 4); !it.done(); it.next()) {
      const int i = (*it)[0], s = (*it)[1], k = (*it)[2], l = (*it)[3];
      double rhs = gamma * (g(s, k) * r(i, l) - g(i, k) * r(s, l) +
                            g(l, s) * r(k, i) - g(l, i) * r(s, k));
      worst = std::max(worst, std::abs(act(i, s, k, l) - rhs));
    }
    out.ricci = worst / (1.0 + rscale * r.max_abs() + std::abs(gamma) * r.max_abs());
  }
  {
    detail::ThetaGammaData d = detail::theta_gamma_data(pack);
    Tensor act = curvature_action_all(d.gamma, pack);
    const Tensor& g = pack.metric.g;
    double worst = 0.0;
    for (IndexIter it(n, 4); !it.done(); it.next()) {
      const int s = (*it)[0], i = (*it)[1], p = (*it)[2], r = (*it)[3];
      double lhs = act(s, i, p, r);  // (nabla_s nabla_i - nabla_i nabla_s) Gamma_{pr}
      double rhs = gamma * (g(i, s) * d.gamma(p, r) + g(s, p) * d.gamma(r, i) +
                            g(s, r) * d.gamma(i, p) - g(i, p) * d.gamma(r, s) -
                            g(i, r) * d.gamma(s, p));
      worst = std::max(worst, std::abs(lhs - rhs));
    }
    out.gamma = worst / (1.0 + rscale * d.gamma.max_abs() + std::abs(gamma) * d.gamma.max_abs());
  }
  return out;
}

// -----------------------------------------------------------------------
// electric decomposition
// -----------------------------------------------------------------------

struct ElectricDecomposition {
  std::vector<double> B;  // upper index, A_i B^i = 1
  Tensor E;               // (0,2)
  double representation_residual = 0.0;
  double compatibility_residual = 0.0;
  double trace_residual = 0.0;  // worst of E^k_k, A^k E_kl, B^k E_kl
};

inline ElectricDecomposition electric_decompose(const CurvaturePack& pack,
                                                const std::vector<double>& a, double tol = 1e-9) {
  const int n = pack.dim();
  ElectricDecomposition out;
  out.B.assign(static_cast<std::size_t>(n), 0.0);
  out.E = Tensor(n, {Var::lo, Var::lo});
  if (pack.weyl_0_4.max_abs() <= tol) return out;  // trivial decomposition of a flat Weyl

  if (antisym_condition_residual(pack, a) > tol)
    throw ConditionViolated("alignment condition fails for the supplied vector");
  if (std::abs(vector_norm_sq(a, pack)) > tol * (1.0 + max_abs(a) * max_abs(a)))
    throw ConditionViolated("supplied vector is not null");

  int c_star = 0;
  for (int c = 1; c < n; ++c)
    if (std::abs(a[static_cast<std::size_t>(c)]) > std::abs(a[static_cast<std::size_t>(c_star)])) c_star = c;
  if (a[static_cast<std::size_t>(c_star)] == 0.0)
    throw ConditionViolated("cannot build a transversal for a zero vector");
  out.B[static_cast<std::size_t>(c_star)] = 1.0 / a[static_cast<std::size_t>(c_star)];
  // shift along A to make B null; preserves A.B = 1
  double bb = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) bb += pack.metric.g(i, j) * out.B[static_cast<std::size_t>(i)] * out.B[static_cast<std::size_t>(j)];
  std::vector<double> a_up = raise_vector(a, pack);
  for (int i = 0; i < n; ++i) out.B[static_cast<std::size_t>(i)] -= 0.5 * bb * a_up[static_cast<std::size_t>(i)];

  for (int k = 0; k < n; ++k)
    for (int l = 0; l < n; ++l) {
      double acc = 0.0;
      for (int i = 0; i < n; ++i)
        for (int m = 0; m < n; ++m)
          acc += out.B[static_cast<std::size_t>(i)] * out.B[static_cast<std::size_t>(m)] * pack.weyl_0_4(i, k, l, m);
      out.E(k, l) = acc;
    }

  double worst = 0.0;
  for (IndexIter it(n, 4); !it.done(); it.next()) {
    const int j = (*it)[0], k = (*it)[1], l = (*it)[2], m = (*it)[3];
    double rhs = a[static_cast<std::size_t>(j)] * a[static_cast<std::size_t>(m)] * out.E(k, l) -
                 a[static_cast<std::size_t>(j)] * a[static_cast<std::size_t>(l)] * out.E(m, k) -
                 a[static_cast<std::size_t>(k)] * a[static_cast<std::size_t>(m)] * out.E(j, l) +
                 a[static_cast<std::size_t>(k)] * a[static_cast<std::size_t>(l)] * out.E(j, m);
    worst = std::max(worst, std::abs(pack.weyl_0_4.at(*it) - rhs));
  }
  out.representation_residual = worst / (1.0 + pack.weyl_0_4.max_abs());
  out.compatibility_residual = cqr::compatibility_residual(out.E, pack.weyl_0_4, pack);

  double tr = 0.0;
  for (int k = 0; k < n; ++k)
    for (int l = 0; l < n; ++l) tr += pack.metric.g_inv(k, l) * out.E(k, l);
  double worst_tr = std::abs(tr);
  for (int l = 0; l < n; ++l) {
    double au = 0.0, bu = 0.0;
    for (int k = 0; k < n; ++k) {
      au += a_up[static_cast<std::size_t>(k)] * out.E(k, l);
      bu += out.B[static_cast<std::size_t>(k)] * out.E(k, l);
    }
    worst_tr = std::max(worst_tr, std::max(std::abs(au), std::abs(bu)));
  }
  out.trace_residual = worst_tr / (1.0 + out.E.max_abs());
  return out;
}

}  // namespace cqr
