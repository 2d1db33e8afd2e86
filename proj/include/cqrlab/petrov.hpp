#pragma once

#include <complex>

#include "cqrlab/analysis.hpp"

namespace cqr {

// -----------------------------------------------------------------------
// the dimension-4 delta/Weyl identity
// -----------------------------------------------------------------------

// nine-term delta x C sum; vanishes identically exactly in dimension 4
inline double lovelock4_check(const CurvaturePack& pack) {
  const int n = pack.dim();
  Tensor cud = flip_slot(flip_slot(pack.weyl_0_4, 0, pack.metric.g_inv), 1, pack.metric.g_inv);
  auto d = [](int a, int b) { return a == b ? 1.0 : 0.0; };
  double worst = 0.0;
  for (IndexIter it(n, 6); !it.done(); it.next()) {
    const int i = (*it)[0], j = (*it)[1], k = (*it)[2], r = (*it)[3], s = (*it)[4], t = (*it)[5];
    double acc = d(i, r) * cud(j, k, s, t) + d(i, t) * cud(j, k, r, s) + d(i, s) * cud(j, k, t, r) +
                 d(k, r) * cud(i, j, s, t) + d(k, t) * cud(i, j, r, s) + d(k, s) * cud(i, j, t, r) +
                 d(j, r) * cud(k, i, s, t) + d(j, t) * cud(k, i, r, s) + d(j, s) * cud(k, i, t, r);
    worst = std::max(worst, std::abs(acc));
  }
  return worst / (1.0 + cud.max_abs());
}

// -----------------------------------------------------------------------
// Petrov classification against a null vector
// -----------------------------------------------------------------------

enum class PetrovClass { O, N, III, II_or_D, not_aligned };

inline const char* to_string(PetrovClass c) {
  switch (c) {
    case PetrovClass::O: return "O";
    case PetrovClass::N: return "N";
    case PetrovClass::III: return "III";
    case PetrovClass::II_or_D: return "II_or_D";
    case PetrovClass::not_aligned: return "not_aligned";
  }
  return "?";
}

struct PetrovReport {
  PetrovClass petrov_class = PetrovClass::O;
  double residual_N = 0.0;
  double residual_III = 0.0;
  double residual_IID = 0.0;
  std::complex<double> invariant_I{0.0, 0.0};
  std::complex<double> invariant_J{0.0, 0.0};
  double special_gap = 0.0;
  Tensor omega1;          // antisymmetrized Weyl pair-contraction form
  std::vector<double> k;  // the null test vector, upper index
};

inline void require_lorentzian4(const CurvaturePack& pack) {
  if (pack.dim() != 4) throw DimensionError("this operation needs dimension 4");
  if (!pack.lorentzian()) throw SignatureError("this operation needs a Lorentzian metric");
}

struct WeylInvariants {
  std::complex<double> I{0.0, 0.0};
  std::complex<double> J{0.0, 0.0};
  double special_gap = 0.0;
};

// Quadratic and cubic invariants of the self-dual Weyl tensor, normalized so
// that algebraically special metrics satisfy I^3 = 27 J^2 exactly and type N
// annuls both.
inline WeylInvariants weyl_invariants(const CurvaturePack& pack) {
  require_lorentzian4(pack);
  const int n = 4;
  using cd = std::complex<double>;

  // Levi-Civita with eps_{0123} = +sqrt|det g| in chart coordinate order
  Tensor eps(n, {Var::lo, Var::lo, Var::lo, Var::lo});
  {
    const double w = std::sqrt(std::abs(pack.metric.det));
    int idx[4];
    for (idx[0] = 0; idx[0] < 4; ++idx[0])
      for (idx[1] = 0; idx[1] < 4; ++idx[1])
        for (idx[2] = 0; idx[2] < 4; ++idx[2])
          for (idx[3] = 0; idx[3] < 4; ++idx[3]) {
            int sign = 1;
            bool repeat = false;
            for (int a = 0; a < 4 && !repeat; ++a)
              for (int b = a + 1; b < 4; ++b) {
                if (idx[a] == idx[b]) { repeat = true; break; }
                if (idx[a] > idx[b]) sign = -sign;
              }
            eps(idx[0], idx[1], idx[2], idx[3]) = repeat ? 0.0 : sign * w;
          }
  }

  // left dual on the first pair through raised indices
  Tensor c_up01 = flip_slot(flip_slot(pack.weyl_0_4, 0, pack.metric.g_inv), 1, pack.metric.g_inv);
  Tensor dual(n, {Var::lo, Var::lo, Var::lo, Var::lo});
  for (IndexIter it(n, 4); !it.done(); it.next()) {
    const int a = (*it)[0], b = (*it)[1], c = (*it)[2], d0 = (*it)[3];
    double acc = 0.0;
    for (int p = 0; p < n; ++p)
      for (int q = 0; q < n; ++q) acc += 0.5 * eps(a, b, p, q) * c_up01(p, q, c, d0);
    dual.at(*it) = acc;
  }

  std::vector<cd> cplus(256), cplus_up2(256), cplus_up4(256);
  auto at4 = [](int a, int b, int c, int d0) { return ((a * 4 + b) * 4 + c) * 4 + d0; };
  for (IndexIter it(n, 4); !it.done(); it.next())
    cplus[static_cast<std::size_t>(at4((*it)[0], (*it)[1], (*it)[2], (*it)[3]))] =
        0.5 * cd(pack.weyl_0_4.at(*it), -dual.at(*it));
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b)
      for (int c = 0; c < 4; ++c)
        for (int d0 = 0; d0 < 4; ++d0) {
          cd acc{0.0, 0.0};
          for (int e = 0; e < 4; ++e)
            for (int f = 0; f < 4; ++f)
              acc += pack.metric.g_inv(c, e) * pack.metric.g_inv(d0, f) *
                     cplus[static_cast<std::size_t>(at4(a, b, e, f))];
          cplus_up2[static_cast<std::size_t>(at4(a, b, c, d0))] = acc;
        }
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b)
      for (int c = 0; c < 4; ++c)
        for (int d0 = 0; d0 < 4; ++d0) {
          cd acc{0.0, 0.0};
          for (int e = 0; e < 4; ++e)
            for (int f = 0; f < 4; ++f)
              acc += pack.metric.g_inv(a, e) * pack.metric.g_inv(b, f) *
                     cplus_up2[static_cast<std::size_t>(at4(e, f, c, d0))];
          cplus_up4[static_cast<std::size_t>(at4(a, b, c, d0))] = acc;
        }

  cd p2{0.0, 0.0}, p3{0.0, 0.0};
  for (int a = 0; a < 256; ++a) p2 += cplus[static_cast<std::size_t>(a)] * cplus_up4[static_cast<std::size_t>(a)];
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b)
      for (int c = 0; c < 4; ++c)
        for (int d0 = 0; d0 < 4; ++d0)
          for (int e = 0; e < 4; ++e)
            for (int f = 0; f < 4; ++f)
              p3 += cplus_up2[static_cast<std::size_t>(at4(a, b, c, d0))] *
                    cplus_up2[static_cast<std::size_t>(at4(c, d0, e, f))] *
                    cplus_up2[static_cast<std::size_t>(at4(e, f, a, b))];

  WeylInvariants inv;
  inv.I = p2 / 16.0;
  inv.J = p3 / 96.0;
  cd gap = inv.I * inv.I * inv.I - 27.0 * inv.J * inv.J;
  inv.special_gap = std::abs(gap) / (1.0 + std::norm(inv.I) * std::abs(inv.I));
  return inv;
}

// Bel-Debever alignment chain for a null vector, deepest passing level first.
inline PetrovReport bel_debever_classify(const CurvaturePack& pack, const std::vector<double>& k_up,
                                         double tol = 1e-9) {
  require_lorentzian4(pack);
  const int n = 4;
  double kk = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      kk += pack.metric.g(i, j) * k_up[static_cast<std::size_t>(i)] * k_up[static_cast<std::size_t>(j)];
  const double kmax = std::max(1.0, max_abs(k_up));
  if (std::abs(kk) > tol * kmax * kmax) throw NotNullError("test vector is not null");

  std::vector<double> k_lo(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      k_lo[static_cast<std::size_t>(i)] += pack.metric.g(i, j) * k_up[static_cast<std::size_t>(j)];

  PetrovReport rep;
  rep.k = k_up;
  const Tensor& c = pack.weyl_0_4;
  const double cmax = c.max_abs();

  {
    double worst = 0.0;
    for (IndexIter it(n, 3); !it.done(); it.next()) {
      double acc = 0.0;
      for (int m = 0; m < n; ++m) acc += c((*it)[0], (*it)[1], (*it)[2], m) * k_up[static_cast<std::size_t>(m)];
      worst = std::max(worst, std::abs(acc));
    }
    rep.residual_N = worst / (1.0 + cmax * kmax);
  }
  {
    double worst = 0.0;
    for (IndexIter it(n, 4); !it.done(); it.next()) {
      const int j = (*it)[0], k2 = (*it)[1], m = (*it)[2], p = (*it)[3];
      double acc = 0.0;
      for (int l = 0; l < n; ++l)
        acc += k_up[static_cast<std::size_t>(l)] *
               (c(j, k2, l, m) * k_lo[static_cast<std::size_t>(p)] - c(j, k2, l, p) * k_lo[static_cast<std::size_t>(m)]);
      worst = std::max(worst, std::abs(acc));
    }
    rep.residual_III = worst / (1.0 + cmax * kmax * kmax);
  }
  {
    double worst = 0.0;
    for (IndexIter it(n, 4); !it.done(); it.next()) {
      const int e = (*it)[0], a = (*it)[1], d0 = (*it)[2], f = (*it)[3];
      double acc = 0.0;
      for (int b = 0; b < n; ++b)
        for (int c2 = 0; c2 < n; ++c2)
          acc += k_up[static_cast<std::size_t>(b)] * k_up[static_cast<std::size_t>(c2)] *
                 (k_lo[static_cast<std::size_t>(e)] * c(a, b, c2, d0) * k_lo[static_cast<std::size_t>(f)] -
                  k_lo[static_cast<std::size_t>(e)] * c(a, b, c2, f) * k_lo[static_cast<std::size_t>(d0)] -
                  k_lo[static_cast<std::size_t>(a)] * c(e, b, c2, d0) * k_lo[static_cast<std::size_t>(f)] +
                  k_lo[static_cast<std::size_t>(a)] * c(e, b, c2, f) * k_lo[static_cast<std::size_t>(d0)]);
      worst = std::max(worst, std::abs(acc));
    }
    rep.residual_IID = worst / (1.0 + cmax * kmax * kmax * kmax * kmax);
  }

  if (cmax <= tol)
    rep.petrov_class = PetrovClass::O;
  else if (rep.residual_N <= tol)
    rep.petrov_class = PetrovClass::N;
  else if (rep.residual_III <= tol)
    rep.petrov_class = PetrovClass::III;
  else if (rep.residual_IID <= tol)
    rep.petrov_class = PetrovClass::II_or_D;
  else
    rep.petrov_class = PetrovClass::not_aligned;

  WeylInvariants inv = weyl_invariants(pack);
  rep.invariant_I = inv.I;
  rep.invariant_J = inv.J;
  rep.special_gap = inv.special_gap;

  const Tensor w = [&] {
    Tensor t31 = pack.weyl_3_1;
    Tensor out(n, {Var::lo, Var::lo, Var::lo, Var::lo});
    for (IndexIter it(n, 4); !it.done(); it.next()) {
      double acc = 0.0;
      for (int a2 = 0; a2 < n; ++a2)
        for (int b = 0; b < n; ++b)
          acc += t31((*it)[0], (*it)[1], a2, b) * t31((*it)[2], (*it)[3], b, a2);
      out.at(*it) = acc;
    }
    return out;
  }();
  rep.omega1 = antisymmetrize(w, {0, 1, 2, 3}, AltNorm::weighted);
  return rep;
}

// -----------------------------------------------------------------------
// Pontryagin integrands
// -----------------------------------------------------------------------

// pair contraction T_{ij a}^b T_{kl b}^a for a curvature-like (0,4) tensor
inline Tensor curvature_pair_contraction(const Tensor& t04, const CurvaturePack& pack) {
  const int n = pack.dim();
  Tensor t31 = flip_slot(t04, 3, pack.metric.g_inv);
  Tensor out(n, {Var::lo, Var::lo, Var::lo, Var::lo});
  for (IndexIter it(n, 4); !it.done(); it.next()) {
    double acc = 0.0;
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        acc += t31((*it)[0], (*it)[1], a, b) * t31((*it)[2], (*it)[3], b, a);
    out.at(*it) = acc;
  }
  return out;
}

// first Pontryagin integrand against a frame, with Weyl in place of Riemann
inline double pontryagin_omega1(const CurvaturePack& pack,
                                const std::vector<std::vector<double>>& frame) {
  if (pack.dim() != 4) throw DimensionError("the 4-form evaluation needs dimension 4");
  if (frame.size() != 4) throw DegenerateFrame("frame must contain 4 vectors");
  {
    Eigen::Matrix4d m;
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) m(i, j) = frame[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    if (std::abs(m.determinant()) <= 1e-12) throw DegenerateFrame("frame vectors are linearly dependent");
  }
  Tensor w = curvature_pair_contraction(pack.weyl_0_4, pack);
  auto omega1 = [&](const std::vector<double>& y1, const std::vector<double>& y2,
                    const std::vector<double>& y3, const std::vector<double>& y4) {
    double acc = 0.0;
    for (IndexIter it(4, 4); !it.done(); it.next()) {
      const int i = (*it)[0], j = (*it)[1], k = (*it)[2], l = (*it)[3];
      acc += w.at(*it) *
             (y1[static_cast<std::size_t>(i)] * y2[static_cast<std::size_t>(j)] -
              y1[static_cast<std::size_t>(j)] * y2[static_cast<std::size_t>(i)]) *
             (y3[static_cast<std::size_t>(k)] * y4[static_cast<std::size_t>(l)] -
              y3[static_cast<std::size_t>(l)] * y4[static_cast<std::size_t>(k)]);
    }
    return acc;
  };
  int perm[4] = {0, 1, 2, 3};
  double p1 = 0.0;
  do {
    int sign = 1;
    for (int a = 0; a < 4; ++a)
      for (int b = a + 1; b < 4; ++b)
        if (perm[a] > perm[b]) sign = -sign;
    p1 += sign * omega1(frame[static_cast<std::size_t>(perm[0])], frame[static_cast<std::size_t>(perm[1])],
                        frame[static_cast<std::size_t>(perm[2])], frame[static_cast<std::size_t>(perm[3])]);
  } while (std::next_permutation(perm, perm + 4));
  double kscale = 1.0;
  for (const auto& f : frame) kscale *= std::max(1.0, max_abs(f));
  return std::abs(p1) / (1.0 + w.max_abs() * kscale);
}

// largest component of the quadruple pair-contraction, formed without ever
// materializing the rank-8 object
inline double pontryagin_omega2_contraction(const CurvaturePack& pack) {
  const int n = pack.dim();
  Tensor c31 = pack.weyl_3_1;
  const int pairs = n * n;
  std::vector<Eigen::MatrixXd> m(static_cast<std::size_t>(pairs), Eigen::MatrixXd(n, n));
  for (int l = 0; l < n; ++l)
    for (int mm = 0; mm < n; ++mm)
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) m[static_cast<std::size_t>(l * n + mm)](a, b) = c31(l, mm, a, b);
  std::vector<Eigen::MatrixXd> prod(static_cast<std::size_t>(pairs * pairs));
  for (int x = 0; x < pairs; ++x)
    for (int y = 0; y < pairs; ++y)
      prod[static_cast<std::size_t>(x * pairs + y)] = m[static_cast<std::size_t>(x)] * m[static_cast<std::size_t>(y)];
  double worst = 0.0;
  for (int x = 0; x < pairs * pairs; ++x)
    for (int y = 0; y < pairs * pairs; ++y)
      worst = std::max(worst, std::abs((prod[static_cast<std::size_t>(x)] * prod[static_cast<std::size_t>(y)]).trace()));
  const double cmax = c31.max_abs();
  return worst / (1.0 + cmax * cmax * cmax * cmax);
}

// the 4-form integrand is insensitive to replacing Riemann by Weyl
inline double avez_residual(const CurvaturePack& pack) {
  if (pack.dim() != 4) throw DimensionError("the 4-form comparison needs dimension 4");
  Tensor wr = antisymmetrize(curvature_pair_contraction(pack.riemann_0_4, pack), {0, 1, 2, 3});
  Tensor wc = antisymmetrize(curvature_pair_contraction(pack.weyl_0_4, pack), {0, 1, 2, 3});
  return (wr - wc).max_abs() / (1.0 + wr.max_abs());
}

// -----------------------------------------------------------------------
// the dimension-4 fundamental-vector suite
// -----------------------------------------------------------------------

struct Lorentzian4Report {
  double nullity = 0.0;
  int kernel_dimension = 0;
  double ricci_eigen_residual = 0.0;
  double lambda = 0.0;
  double geodesic_residual = 0.0;
  double mu = 0.0;
  double closedness = 0.0;
  double divergence = 0.0;
  double special_riemann_residual = 0.0;
};

inline Lorentzian4Report lorentzian4_suite(const CurvaturePack& pack) {
  require_lorentzian4(pack);
  const int n = 4;
  VectorField f = evaluate_vector_A(pack);
  const auto& a = f.a_lo;
  std::vector<double> a_up = raise_vector(a, pack);

  Lorentzian4Report rep;
  rep.nullity = std::abs(vector_norm_sq(a, pack));
  rep.kernel_dimension = annihilation_kernel_dimension(pack);

  auto least_squares_ratio = [&](const std::vector<double>& b, double& coef) {
    double num = 0.0, den = 0.0;
    for (int i = 0; i < n; ++i) {
      num += b[static_cast<std::size_t>(i)] * a[static_cast<std::size_t>(i)];
      den += a[static_cast<std::size_t>(i)] * a[static_cast<std::size_t>(i)];
    }
    coef = den > 0.0 ? num / den : 0.0;
    double worst = 0.0;
    for (int i = 0; i < n; ++i)
      worst = std::max(worst, std::abs(b[static_cast<std::size_t>(i)] - coef * a[static_cast<std::size_t>(i)]));
    return worst / (1.0 + max_abs(b) + std::abs(coef) * max_abs(a));
  };

  std::vector<double> ric_a(static_cast<std::size_t>(n), 0.0);
  for (int m = 0; m < n; ++m)
    for (int i = 0; i < n; ++i) ric_a[static_cast<std::size_t>(m)] += a_up[static_cast<std::size_t>(i)] * pack.ricci(i, m);
  rep.ricci_eigen_residual = least_squares_ratio(ric_a, rep.lambda);

  std::vector<double> geo(static_cast<std::size_t>(n), 0.0);
  for (int m = 0; m < n; ++m)
    for (int i = 0; i < n; ++i) geo[static_cast<std::size_t>(m)] += a_up[static_cast<std::size_t>(i)] * f.nabla_a(i, m);
  rep.geodesic_residual = least_squares_ratio(geo, rep.mu);

  double closed = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) closed = std::max(closed, std::abs(f.nabla_a(i, j) - f.nabla_a(j, i)));
  rep.closedness = closed / (1.0 + f.nabla_a.max_abs());
  double div = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) div += pack.metric.g_inv(i, j) * f.nabla_a(i, j);
  rep.divergence = std::abs(div) / (1.0 + f.nabla_a.max_abs());

  double worst = 0.0, scale = 0.0;
  for (int p = 0; p < n; ++p)
    for (int k = 0; k < n; ++k)
      for (int l = 0; l < n; ++l) {
        double t1 = 0.0, t2 = 0.0;
        for (int j = 0; j < n; ++j)
          for (int m = 0; m < n; ++m) {
            t1 += a[static_cast<std::size_t>(p)] * pack.riemann_0_4(k, j, l, m) *
                  a_up[static_cast<std::size_t>(j)] * a_up[static_cast<std::size_t>(m)];
            t2 += a[static_cast<std::size_t>(k)] * pack.riemann_0_4(p, j, l, m) *
                  a_up[static_cast<std::size_t>(j)] * a_up[static_cast<std::size_t>(m)];
          }
        scale = std::max(scale, std::abs(t1));
        worst = std::max(worst, std::abs(t1 - t2));
      }
  rep.special_riemann_residual = worst / (1.0 + scale);
  return rep;
}

}  // namespace cqr
