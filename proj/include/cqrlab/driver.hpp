#pragma once

#include <iomanip>
#include <sstream>

#include "cqrlab/catalog.hpp"
#include "cqrlab/metric_io.hpp"
#include "cqrlab/petrov.hpp"

namespace cqr {

struct AnalysisConfig {
  double tol = 1e-9;
  int order = 3;
  int grid = 5;
  std::vector<std::vector<double>> points;  // explicit points beat the grid
  std::vector<std::string> checks;          // group selector, empty = all
  std::string format = "text";
  std::uint64_t seed = 1;
  bool fd = false;  // finite-difference fallback for order-4-only checks
};

struct CheckResult {
  double raw = 0.0;
  double normalized = 0.0;
  bool pass = true;
  bool required = false;  // participates in the exit-code gate
};

struct PointReport {
  std::vector<double> point;
  std::vector<std::pair<std::string, CheckResult>> checks;
  std::vector<std::pair<std::string, std::string>> classifications;
  std::vector<std::pair<std::string, double>> scalars;

  void add_check(const std::string& key, double raw, double normalized, double tol, bool required) {
    checks.emplace_back(key, CheckResult{raw, normalized, normalized <= tol, required});
  }
  void add_scalar(const std::string& key, double v) { scalars.emplace_back(key, v); }
  void add_class(const std::string& key, const std::string& v) {
    classifications.emplace_back(key, v);
  }
  const CheckResult* find(const std::string& key) const {
    for (const auto& [k, v] : checks)
      if (k == key) return &v;
    return nullptr;
  }
  const double* find_scalar(const std::string& key) const {
    for (const auto& [k, v] : scalars)
      if (k == key) return &v;
    return nullptr;
  }
  const std::string* find_class(const std::string& key) const {
    for (const auto& [k, v] : classifications)
      if (k == key) return &v;
    return nullptr;
  }
};

struct AnalysisReport {
  std::string metric;
  std::vector<PointReport> points;
  std::vector<std::pair<std::string, CheckResult>> worst;
  bool all_pass = true;
};

namespace detail {

inline bool group_on(const AnalysisConfig& cfg, const std::string& group) {
  if (cfg.checks.empty()) return true;
  for (const auto& g : cfg.checks)
    if (g == group) return true;
  return false;
}

inline std::string join_ints(const std::vector<int>& v, bool ascending) {
  std::vector<int> s = v;
  std::sort(s.begin(), s.end());
  if (!ascending) std::reverse(s.begin(), s.end());
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out;
}

inline double riemann_symmetry_residual(const Tensor& r, int which) {
  const int n = r.dim();
  double worst = 0.0;
  for (IndexIter it(n, 4); !it.done(); it.next()) {
    const int j = (*it)[0], k = (*it)[1], l = (*it)[2], m = (*it)[3];
    double v = 0.0;
    switch (which) {
      case 0: v = r(j, k, l, m) + r(k, j, l, m); break;           // first pair
      case 1: v = r(j, k, l, m) + r(j, k, m, l); break;           // second pair
      case 2: v = r(j, k, l, m) - r(l, m, j, k); break;           // pair exchange
      case 3: v = r(j, k, l, m) + r(j, l, m, k) + r(j, m, k, l); break;  // first Bianchi
    }
    worst = std::max(worst, std::abs(v));
  }
  return worst / (1.0 + r.max_abs());
}

inline double weyl_trace_residual(const CurvaturePack& pack) {
  const int n = pack.dim();
  double worst = 0.0;
  for (int sa = 0; sa < 4; ++sa)
    for (int sb = sa + 1; sb < 4; ++sb) {
      for (IndexIter it(n, 2); !it.done(); it.next()) {
        double acc = 0.0;
        for (int p = 0; p < n; ++p)
          for (int q = 0; q < n; ++q) {
            std::array<int, kMaxRank> idx{};
            int free = 0;
            for (int s = 0; s < 4; ++s) {
              if (s == sa)
                idx[s] = p;
              else if (s == sb)
                idx[s] = q;
              else
                idx[s] = (*it)[free++];
            }
            acc += pack.metric.g_inv(p, q) * pack.weyl_0_4.at(idx);
          }
        worst = std::max(worst, std::abs(acc));
      }
    }
  return worst / (1.0 + pack.weyl_0_4.max_abs());
}

inline double second_bianchi_residual(const CurvaturePack& pack) {
  Tensor dr = covariant_derivative(pack.riemann04_jets, pack);
  Tensor cyc = cyclic3(dr);
  return cyc.max_abs() / (1.0 + dr.max_abs());
}

inline double kretschmann_scalar(const CurvaturePack& pack) {
  Tensor r_up = pack.riemann_0_4;
  for (int s = 0; s < 4; ++s) r_up = flip_slot(r_up, s, pack.metric.g_inv);
  double acc = 0.0;
  for (std::size_t i = 0; i < r_up.data().size(); ++i)
    acc += r_up.data()[i] * pack.riemann_0_4.data()[i];
  return acc;
}

// nabla_i of the Weyl divergence by central differences of the exactly
// computed divergence field (step 1e-4)
inline Tensor nabla_div_weyl_fd(const CurvaturePack& pack) {
  const int n = pack.dim();
  const double h = 1e-4;
  Tensor out(n, {Var::lo, Var::lo, Var::lo, Var::lo});
  std::vector<Tensor> dplus(static_cast<std::size_t>(n)), dminus(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    std::vector<double> xp = pack.point, xm = pack.point;
    xp[static_cast<std::size_t>(i)] += h;
    xm[static_cast<std::size_t>(i)] -= h;
    dplus[static_cast<std::size_t>(i)] = curvature_pack(pack.spec, xp, 3).weyl_divergence;
    dminus[static_cast<std::size_t>(i)] = curvature_pack(pack.spec, xm, 3).weyl_divergence;
  }
  const Tensor& d0 = pack.weyl_divergence;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) {
          double pd = (dplus[static_cast<std::size_t>(i)](j, k, l) -
                       dminus[static_cast<std::size_t>(i)](j, k, l)) / (2.0 * h);
          for (int p = 0; p < n; ++p)
            pd -= pack.christoffel(p, i, j) * d0(p, k, l) +
                  pack.christoffel(p, i, k) * d0(j, p, l) +
                  pack.christoffel(p, i, l) * d0(j, k, p);
          out(i, j, k, l) = pd;
        }
  return out;
}

inline double eq6_residual(const CurvaturePack& pack, bool fd) {
  const int n = pack.dim();
  Tensor ndw = pack.nabla_div_weyl ? *pack.nabla_div_weyl
                                   : (fd ? nabla_div_weyl_fd(pack)
                                         : throw OrderTooLow("identity needs order 4 or --fd"));
  Tensor lhs = cyclic3(ndw);
  Tensor u(n, {Var::lo, Var::lo, Var::lo, Var::lo});
  for (IndexIter it(n, 4); !it.done(); it.next()) {
    const int i = (*it)[0], j = (*it)[1], k = (*it)[2], l = (*it)[3];
    double acc = 0.0;
    for (int m = 0; m < n; ++m) acc += pack.ricci(i, m) * pack.riemann_3_1(j, k, l, m);
    u(i, j, k, l) = acc;
  }
  Tensor rhs = cyclic3(u) * (-(n - 3.0) / (n - 2.0));
  return (lhs - rhs).max_abs() / (1.0 + ndw.max_abs() + u.max_abs());
}

}  // namespace detail

// Run every applicable check at one point.  Conditional theorem checks are
// marked required only when their hypotheses hold at this point.
inline PointReport analyze_point(const CatalogEntry& entry, const std::vector<double>& point,
                                 const AnalysisConfig& cfg) {
  const MetricSpec& spec = entry.spec;
  const double tol = cfg.tol;
  PointReport rep;
  rep.point = point;

  CurvaturePack pack = curvature_pack(spec, point, cfg.order);
  const int n = pack.dim();
  const bool n4l = (n == 4) && pack.lorentzian();

  {
    std::string sig;
    for (int s : pack.metric.signature) sig += (s > 0 ? '+' : '-');
    rep.add_class("signature", sig);
  }
  rep.add_scalar("det_g", pack.metric.det);
  rep.add_scalar("scalar_R", pack.scalar);
  rep.add_scalar("kretschmann", detail::kretschmann_scalar(pack));
  rep.add_scalar("weyl_sq", weyl_square(pack));
  rep.add_scalar("riemann_max", pack.riemann_0_4.max_abs());
  rep.add_scalar("ricci_max", pack.ricci.max_abs());
  rep.add_scalar("weyl_max", pack.weyl_0_4.max_abs());
  rep.add_scalar("nabla_weyl_max", pack.nabla_weyl.max_abs());

  if (detail::group_on(cfg, "curvature")) {
    {
      double worst = 0.0;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          double acc = (i == j) ? -1.0 : 0.0;
          for (int p = 0; p < n; ++p) acc += pack.metric.g(i, p) * pack.metric.g_inv(p, j);
          worst = std::max(worst, std::abs(acc));
        }
      rep.add_check("metric_inverse", worst, worst, tol, true);
    }
    for (int which = 0; which < 4; ++which) {
      static const char* keys[4] = {"riemann_antisym_first", "riemann_antisym_second",
                                    "riemann_pair_exchange", "riemann_first_bianchi"};
      double v = detail::riemann_symmetry_residual(pack.riemann_0_4, which);
      rep.add_check(keys[which], v, v, tol, true);
    }
    {
      double worst = 0.0;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          worst = std::max(worst, std::abs(pack.ricci(i, j) - pack.ricci(j, i)));
      double v = worst / (1.0 + pack.ricci.max_abs());
      rep.add_check("ricci_symmetry", v, v, tol, true);
    }
    {
      Tensor dg = covariant_derivative(pack.g_jets, pack);
      double v = dg.max_abs() / (1.0 + pack.metric.g.max_abs());
      rep.add_check("nabla_g", v, v, tol, true);
    }
    {
      double v = detail::weyl_trace_residual(pack);
      rep.add_check("weyl_trace", v, v, tol, true);
      double b = detail::riemann_symmetry_residual(pack.weyl_0_4, 3);
      rep.add_check("weyl_first_bianchi", b, b, tol, true);
    }
    {
      double v = detail::second_bianchi_residual(pack);
      rep.add_check("second_bianchi", v, v, tol, true);
    }
    {
      double v = compatibility_residual(pack.metric.g, pack.weyl_0_4, pack);
      rep.add_check("compat_metric_weyl", v, v, tol, true);
    }
  }

  // fundamental vector and the recurrence battery
  FundamentalVectorReport fv = solve_fundamental_vector(pack, tol);
  const bool have_fv = true;
  if (detail::group_on(cfg, "cqr")) {
    rep.add_class("fv_status", to_string(fv.status));
    rep.add_class("kernel_dimension", std::to_string(fv.kernel_dimension));
    for (int i = 0; i < n; ++i) rep.add_scalar("fv_A_" + std::to_string(i), fv.A[static_cast<std::size_t>(i)]);
    const bool is_cqr = fv.status == FvStatus::cqr;
    rep.add_check("cqr_recurrence", fv.recurrence_residual, fv.recurrence_residual, tol, is_cqr);
    if (fv.status != FvStatus::conformally_flat) {
      rep.add_check("weyl_annihilation", fv.annihilation_residual, fv.annihilation_residual,
                    10.0 * tol, is_cqr);
      double dv = weyl_divergence_residual(pack);
      rep.add_check("weyl_divergence", dv, dv, 10.0 * tol, is_cqr);
      double c7 = compatibility_residual(pack.ricci, pack.riemann_0_4, pack);
      rep.add_check("compat_ricci_riemann", c7, c7, 10.0 * tol, is_cqr);
      double c8 = compatibility_residual(pack.ricci, pack.weyl_0_4, pack);
      rep.add_check("compat_ricci_weyl", c8, c8, 10.0 * tol, is_cqr);
    }
    if (fv.gradient_formula_residual)
      rep.add_check("fv_gradient_formula", *fv.gradient_formula_residual,
                    *fv.gradient_formula_residual, 10.0 * tol, is_cqr);
    if (is_cqr && n4l) {
      rep.add_check("fv_nullity", fv.nullity, fv.nullity, tol, true);
      double a16 = antisym_condition_residual(pack, fv.A);
      rep.add_check("antisym_condition", a16, a16, 10.0 * tol, true);
      double a18 = conformally_recurrent_residual(pack, fv.A);
      rep.add_check("conformally_recurrent", a18, a18, tol, true);
      try {
        ElectricDecomposition e = electric_decompose(pack, fv.A, 10.0 * tol);
        rep.add_check("electric_representation", e.representation_residual,
                      e.representation_residual, tol, true);
        rep.add_check("electric_compat", e.compatibility_residual, e.compatibility_residual,
                      tol, true);
        rep.add_check("electric_traces", e.trace_residual, e.trace_residual, 10.0 * tol, true);
      } catch (const ConditionViolated&) {
        // hypotheses numerically violated; the antisym/nullity checks report it
      }
    }
  }

  if (detail::group_on(cfg, "gradA") && spec.vector_A) {
    GradientAChecks ga = gradient_A_checks(pack, tol);
    const bool is_cqr = fv.status == FvStatus::cqr;
    rep.add_check("grad_A_eq9", ga.residual_9, ga.residual_9, tol, is_cqr);
    rep.add_check("grad_A_eq10", ga.residual_10, ga.residual_10, tol,
                  is_cqr && !ga.residual_10_vacuous);
    rep.add_class("grad_A_eq10_vacuous", ga.residual_10_vacuous ? "true" : "false");
    rep.add_check("grad_A_eq11", ga.residual_11, ga.residual_11, tol, is_cqr);
  }

  if (detail::group_on(cfg, "thetagamma") && have_fv && fv.status != FvStatus::conformally_flat) {
    std::vector<double> a_for_suite = fv.A;
    ThetaGammaReport tg = theta_gamma_suite(pack, a_for_suite, tol);
    const bool is_cqr = fv.status == FvStatus::cqr || fv.status == FvStatus::conformally_symmetric;
    rep.add_class("thetagamma_vacuous", tg.vacuous ? "true" : "false");
    rep.add_scalar("theta_max", tg.theta.max_abs());
    rep.add_scalar("gamma_tensor_max", tg.gamma.max_abs());
    rep.add_check("theta_recurrence", tg.theta_recurrence, tg.theta_recurrence, tol, is_cqr);
    rep.add_check("theta_divergence_tgg", tg.theta_divergence, tg.theta_divergence, tol, is_cqr);
    rep.add_check("gamma_recurrence", tg.gamma_recurrence, tg.gamma_recurrence, tol, is_cqr);
    rep.add_check("gamma_coda", tg.coda, tg.coda, tol, is_cqr);
    rep.add_check("gamma_annihilation", tg.gamma_annihilation, tg.gamma_annihilation, tol, is_cqr);
    if (tg.codazzi) rep.add_check("gamma_codazzi", *tg.codazzi, *tg.codazzi, tol, is_cqr);
    if (tg.love) rep.add_check("theta_love", *tg.love, *tg.love, 10.0 * tol, is_cqr);
  }

  bool concircular_holds = false;
  double gamma_value = 0.0;
  if (spec.vector_A) {
    // the plain fit is needed by the pseudo-symmetry block even when the
    // concircular group is filtered out
    VectorField f = evaluate_vector_A(pack);
    double gamma = 0.0;
    for (int s = 0; s < n; ++s)
      for (int i = 0; i < n; ++i)
        gamma += pack.metric.g_inv(s, i) *
                 (f.nabla_a(s, i) - f.a_lo[static_cast<std::size_t>(s)] * f.a_lo[static_cast<std::size_t>(i)]);
    gamma /= n;
    double fit = 0.0;
    for (int s = 0; s < n; ++s)
      for (int i = 0; i < n; ++i)
        fit = std::max(fit, std::abs(f.nabla_a(s, i) -
                                     f.a_lo[static_cast<std::size_t>(s)] * f.a_lo[static_cast<std::size_t>(i)] -
                                     gamma * pack.metric.g(s, i)));
    fit /= 1.0 + f.nabla_a.max_abs() + std::abs(gamma);
    gamma_value = gamma;
    concircular_holds = fit <= tol;

    if (detail::group_on(cfg, "concircular")) {
      ConcircularReport cc = concircular_fit(pack, tol);
      const bool is_cqr = have_fv && fv.status == FvStatus::cqr;
      rep.add_scalar("gamma", cc.gamma);
      rep.add_check("concircular_fit", cc.fit_residual, cc.fit_residual, tol, false);
      rep.add_check("gamma_spread", cc.gamma_spread, cc.gamma_spread, tol,
                    is_cqr && concircular_holds);
      rep.add_check("null_consistency", cc.null_consistency, cc.null_consistency, 10.0 * tol,
                    is_cqr && concircular_holds);
      // zero-gamma consequences: vanishing scalar, Codazzi Ricci, rank <= 1
      if (is_cqr && concircular_holds && std::abs(cc.gamma) <= 10.0 * tol) {
        double rabs = std::abs(pack.scalar) / (1.0 + pack.ricci.max_abs());
        rep.add_check("scalar_R_abs", std::abs(pack.scalar), rabs, tol, true);
      }
    }
  }

  if (detail::group_on(cfg, "quasieinstein")) {
    QuasiEinsteinReport qe = quasi_einstein_decompose(pack);
    rep.add_class("qe_multiplicities", detail::join_ints(qe.eigen_multiplicities, true));
    rep.add_scalar("qe_beta", qe.beta);
    rep.add_scalar("qe_alpha", qe.alpha);
    rep.add_check("qe_residual", qe.residual, qe.residual, tol, qe.qualifies);
    rep.add_check("ricci_codazzi", qe.codazzi_residual, qe.codazzi_residual, tol,
                  have_fv && fv.status == FvStatus::cqr && concircular_holds &&
                      std::abs(gamma_value) <= 10.0 * tol);
    double gap = qe.ricci_singular_values[0] > 0.0
                     ? qe.ricci_singular_values[1] / qe.ricci_singular_values[0]
                     : 0.0;
    rep.add_check("ricci_rank_gap", gap, gap, 1e-9,
                  have_fv && fv.status == FvStatus::cqr && concircular_holds &&
                      std::abs(gamma_value) <= 10.0 * tol &&
                      qe.ricci_singular_values[0] > 10.0 * tol);
  }

  if (detail::group_on(cfg, "deszcz") && spec.vector_A) {
    DeszczResiduals dz = deszcz_residuals(pack, concircular_holds ? gamma_value : 0.0);
    const bool required = have_fv && fv.status == FvStatus::cqr && concircular_holds;
    rep.add_check("deszcz_weyl", dz.weyl, dz.weyl, tol, required);
    rep.add_check("deszcz_ricci", dz.ricci, dz.ricci, tol, required);
    rep.add_check("deszcz_gamma", dz.gamma, dz.gamma, tol, required);
  }

  if (n == 4 && detail::group_on(cfg, "petrov")) {
    double lv = lovelock4_check(pack);
    rep.add_check("lovelock4", lv, lv, tol, true);
    double av = avez_residual(pack);
    rep.add_check("avez", av, av, tol, true);
  }
  if (n4l && detail::group_on(cfg, "petrov")) {
    WeylInvariants inv = weyl_invariants(pack);
    rep.add_scalar("invariant_I_re", inv.I.real());
    rep.add_scalar("invariant_I_im", inv.I.imag());
    rep.add_scalar("invariant_J_re", inv.J.real());
    rep.add_scalar("invariant_J_im", inv.J.imag());
    rep.add_check("special_gap", inv.special_gap, inv.special_gap, tol, false);

    // classify against the solved vector when it is null, else the chart's k
    std::vector<double> k_up;
    if (have_fv && fv.status == FvStatus::cqr && fv.nullity <= 10.0 * tol)
      k_up = raise_vector(fv.A, pack);
    else if (entry.petrov_k) {
      k_up.resize(4);
      for (int i = 0; i < 4; ++i)
        k_up[static_cast<std::size_t>(i)] =
            eval_value(parse_expression((*entry.petrov_k)[static_cast<std::size_t>(i)],
                                        spec.coordinates, spec.parameter_names()),
                       point, spec.parameters);
    }
    if (!k_up.empty()) {
      PetrovReport pr = bel_debever_classify(pack, k_up, tol);
      rep.add_class("petrov_class", to_string(pr.petrov_class));
      rep.add_scalar("bel_debever_N", pr.residual_N);
      rep.add_scalar("bel_debever_III", pr.residual_III);
      rep.add_scalar("bel_debever_IID", pr.residual_IID);
      if (pr.petrov_class == PetrovClass::N) {
        double im = std::abs(pr.invariant_I), jm = std::abs(pr.invariant_J);
        rep.add_check("typeN_invariant_I", im, im / (1.0 + im), 100.0 * tol, true);
        rep.add_check("typeN_invariant_J", jm, jm / (1.0 + jm), 100.0 * tol, true);
      }
    }
  }

  if (n4l && detail::group_on(cfg, "pontryagin")) {
    std::vector<std::vector<double>> frame(4, std::vector<double>(4, 0.0));
    for (int i = 0; i < 4; ++i) frame[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)] = 1.0;
    double p1 = pontryagin_omega1(pack, frame);
    double w2 = pontryagin_omega2_contraction(pack);
    const bool aligned = have_fv && fv.status == FvStatus::cqr && n4l;
    rep.add_check("pontryagin_p1", p1, p1, 10.0 * tol, aligned);
    rep.add_check("omega2_contraction", w2, w2, 10.0 * tol, aligned);
  }

  if (n4l && detail::group_on(cfg, "lorentzian4") && spec.vector_A) {
    Lorentzian4Report l4 = lorentzian4_suite(pack);
    const bool is_cqr = have_fv && fv.status == FvStatus::cqr;
    rep.add_scalar("ricci_eigenvalue", l4.lambda);
    rep.add_scalar("geodesic_mu", l4.mu);
    rep.add_check("ricci_eigen", l4.ricci_eigen_residual, l4.ricci_eigen_residual, tol, is_cqr);
    rep.add_check("geodesic", l4.geodesic_residual, l4.geodesic_residual, tol, is_cqr);
    rep.add_check("closedness", l4.closedness, l4.closedness, tol, false);
    rep.add_check("divergence_free", l4.divergence, l4.divergence, tol,
                  is_cqr && l4.closedness <= tol);
    rep.add_check("special_riemann", l4.special_riemann_residual, l4.special_riemann_residual,
                  tol, is_cqr);
  }

  return rep;
}

inline AnalysisReport run_analysis(const CatalogEntry& entry, const AnalysisConfig& cfg) {
  AnalysisReport out;
  out.metric = entry.spec.name;
  std::vector<std::vector<double>> points =
      cfg.points.empty() ? sample_box_points(entry.spec, cfg.grid) : cfg.points;
  for (const auto& p : points) out.points.push_back(analyze_point(entry, p, cfg));
  for (const auto& pr : out.points)
    for (const auto& [key, res] : pr.checks) {
      auto it = std::find_if(out.worst.begin(), out.worst.end(),
                             [&](const auto& kv) { return kv.first == key; });
      if (it == out.worst.end()) {
        out.worst.emplace_back(key, res);
      } else {
        if (res.normalized > it->second.normalized) {
          it->second.raw = res.raw;
          it->second.normalized = res.normalized;
        }
        it->second.pass = it->second.pass && res.pass;
        it->second.required = it->second.required || res.required;
      }
    }
  for (const auto& [key, res] : out.worst)
    if (res.required && !res.pass) out.all_pass = false;
  return out;
}

// ------------------------------------------------------------------
// single named identities
// ------------------------------------------------------------------

struct IdentityReport {
  std::string name;
  std::vector<std::pair<std::vector<double>, double>> residuals;  // point, normalized
  double worst = 0.0;
  bool pass = true;
};

inline IdentityReport run_identity(const std::string& name, const CatalogEntry& entry,
                                   const AnalysisConfig& cfg) {
  IdentityReport rep;
  rep.name = name;
  std::vector<std::vector<double>> points =
      cfg.points.empty() ? sample_box_points(entry.spec, cfg.grid) : cfg.points;
  double pass_tol = cfg.tol;
  for (const auto& point : points) {
    double r = 0.0;
    if (name == "lovelock4") {
      CurvaturePack pack = curvature_pack(entry.spec, point, cfg.order);
      r = lovelock4_check(pack);
    } else if (name == "eq5") {
      if (!entry.spec.sigma) throw MissingField("metric has no sigma field for the rescaling identity");
      ConformalIdentityResult c =
          conformal_identity_residual(entry.spec, *entry.spec.sigma, point, cfg.order);
      r = std::max(c.residual, c.weyl31_invariance);
    } else if (name == "eq6") {
      if (cfg.order < 4 && !cfg.fd)
        throw OrderTooLow("identity eq6 needs --order 4 or --fd");
      CurvaturePack pack = curvature_pack(entry.spec, point, cfg.order);
      r = detail::eq6_residual(pack, cfg.fd);
      if (cfg.order < 4) pass_tol = std::max(cfg.tol, 1e-5);  // fd truncation floor
    } else if (name == "bianchi") {
      CurvaturePack pack = curvature_pack(entry.spec, point, cfg.order);
      r = detail::second_bianchi_residual(pack);
    } else if (name == "weyl_traces") {
      CurvaturePack pack = curvature_pack(entry.spec, point, cfg.order);
      r = detail::weyl_trace_residual(pack);
    } else if (name == "avez") {
      CurvaturePack pack = curvature_pack(entry.spec, point, cfg.order);
      r = avez_residual(pack);
    } else {
      throw UnknownName("unknown identity '" + name + "'");
    }
    rep.residuals.emplace_back(point, r);
    rep.worst = std::max(rep.worst, r);
  }
  rep.pass = rep.worst <= pass_tol;
  return rep;
}

// ------------------------------------------------------------------
// serialization
// ------------------------------------------------------------------

inline ordered_json report_to_json(const AnalysisReport& rep, const AnalysisConfig& cfg,
                                   const std::vector<std::string>& coordinates) {
  ordered_json j;
  j["metric"] = rep.metric;
  ordered_json pts = ordered_json::array();
  for (const auto& pr : rep.points) {
    ordered_json p;
    ordered_json coords = ordered_json::object();
    for (std::size_t c = 0; c < pr.point.size(); ++c) coords[coordinates[c]] = pr.point[c];
    p["point"] = coords;
    ordered_json checks = ordered_json::object();
    for (const auto& [k, v] : pr.checks) {
      ordered_json c;
      c["raw"] = v.raw;
      c["normalized"] = v.normalized;
      c["pass"] = v.pass;
      checks[k] = c;
    }
    p["checks"] = checks;
    ordered_json cls = ordered_json::object();
    for (const auto& [k, v] : pr.classifications) cls[k] = v;
    p["classifications"] = cls;
    ordered_json sc = ordered_json::object();
    for (const auto& [k, v] : pr.scalars) sc[k] = v;
    p["scalars"] = sc;
    pts.push_back(p);
  }
  j["points"] = pts;
  ordered_json worst = ordered_json::object();
  for (const auto& [k, v] : rep.worst) {
    ordered_json c;
    c["raw"] = v.raw;
    c["normalized"] = v.normalized;
    c["pass"] = v.pass;
    worst[k] = c;
  }
  j["worst"] = worst;
  ordered_json conf;
  conf["tol"] = cfg.tol;
  conf["order"] = cfg.order;
  conf["grid"] = cfg.grid;
  conf["seed"] = cfg.seed;
  conf["fd"] = cfg.fd;
  ordered_json groups = ordered_json::array();
  for (const auto& g : cfg.checks) groups.push_back(g);
  conf["checks"] = groups;
  j["config"] = conf;
  return j;
}

inline std::string report_to_text(const AnalysisReport& rep, const AnalysisConfig& cfg,
                                  const std::vector<std::string>& coordinates) {
  std::ostringstream os;
  os << "metric: " << rep.metric << "\n";
  for (const auto& pr : rep.points) {
    os << "point:";
    for (std::size_t c = 0; c < pr.point.size(); ++c)
      os << " " << coordinates[c] << "=" << detail::fmt_coef(pr.point[c]);
    os << "\n";
    for (const auto& [k, v] : pr.classifications) os << "  " << k << " = " << v << "\n";
    for (const auto& [k, v] : pr.checks)
      os << "  " << std::left << std::setw(26) << k << " " << std::scientific
         << std::setprecision(3) << v.normalized << (v.pass ? "  pass" : "  FAIL")
         << (v.required ? "" : "  (informational)") << "\n";
  }
  os << "worst:\n";
  bool all = true;
  for (const auto& [k, v] : rep.worst) {
    os << "  " << std::left << std::setw(26) << k << " " << std::scientific
       << std::setprecision(3) << v.normalized << (v.pass ? "  pass" : "  FAIL") << "\n";
    if (v.required && !v.pass) all = false;
  }
  os << "result: " << (all ? "PASS" : "FAIL") << " (tol " << cfg.tol << ", order " << cfg.order
     << ")\n";
  return os.str();
}

}  // namespace cqr
