#pragma once

#include <cstdint>
#include <functional>
#include <random>

#include "cqrlab/metric_spec.hpp"

namespace cqr {

// Expected-results block of a built-in metric: bounds on named driver
// checks/scalars, closed-form point values, and classifications, each with a
// short provenance note on the entry.
struct ExpectedResidual {
  std::string key;
  double bound;
};

struct ExpectedValue {
  std::string key;
  std::function<double(const std::vector<double>&)> expected;  // of the point
  double rel_tol;
};

struct ExpectedClassification {
  std::string key;
  std::string value;
};

struct CatalogEntry {
  MetricSpec spec;
  std::string note;  // where the expected numbers come from
  std::vector<ExpectedResidual> residual_bounds;
  std::vector<ExpectedValue> value_checks;
  std::vector<ExpectedClassification> classifications;
  std::optional<std::vector<std::string>> petrov_k;  // null test vector, upper index
  // solved fundamental vector as a function of the point
  std::optional<std::function<std::vector<double>(const std::vector<double>&)>> expected_A;
  double expected_A_tol = 0.0;
};

namespace detail {

inline std::string fmt_coef(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

// uniform in [-1,1) from the fully specified mt19937_64 stream
inline double unit_draw(std::mt19937_64& rng) {
  return 2.0 * ((rng() >> 11) * 0x1.0p-53) - 1.0;
}

// diag(+-1) plus degree-<=3 polynomial perturbations with coefficients below
// 0.05; diagonally dominant on the sample box, so never degenerate
inline MetricSpec random_polynomial_metric(int n, std::uint64_t seed) {
  std::vector<std::string> coords;
  for (int c = 0; c < n; ++c) coords.push_back("x" + std::to_string(c));
  // monomials of total degree 1..3, enumerated by degree then lexicographically
  std::vector<std::vector<int>> monos;
  std::vector<int> alpha(static_cast<std::size_t>(n), 0);
  std::function<void(int, int)> rec = [&](int coord, int budget) {
    if (coord == n) {
      int deg = 0;
      for (int v : alpha) deg += v;
      if (deg >= 1) monos.push_back(alpha);
      return;
    }
    for (int k = 0; k <= budget; ++k) {
      alpha[static_cast<std::size_t>(coord)] = k;
      rec(coord + 1, budget - k);
    }
    alpha[static_cast<std::size_t>(coord)] = 0;
  };
  rec(0, 3);
  std::stable_sort(monos.begin(), monos.end(), [](const auto& a, const auto& b) {
    int da = 0, db = 0;
    for (int v : a) da += v;
    for (int v : b) db += v;
    return da < db;
  });

  std::mt19937_64 rng(seed * 0x9e3779b97f4a7c15ULL + 12345);
  std::vector<std::vector<std::string>> grid(static_cast<std::size_t>(n),
                                             std::vector<std::string>(static_cast<std::size_t>(n)));
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      std::string text = (i != j) ? "0" : (i == 0 ? "-1" : "1");
      for (const auto& mono : monos) {
        double c = 0.05 * unit_draw(rng);
        std::string m;
        for (int v = 0; v < n; ++v) {
          if (mono[static_cast<std::size_t>(v)] == 0) continue;
          if (!m.empty()) m += "*";
          m += coords[static_cast<std::size_t>(v)];
          if (mono[static_cast<std::size_t>(v)] > 1) m += "^" + std::to_string(mono[static_cast<std::size_t>(v)]);
        }
        text += (c >= 0 ? " + " : " - ") + fmt_coef(std::abs(c)) + "*" + m;
      }
      grid[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = text;
      grid[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] = text;
    }
  std::vector<std::array<double, 2>> box(static_cast<std::size_t>(n), {-0.2, 0.2});
  return make_metric_spec("random_poly" + std::to_string(n) + "_s" + std::to_string(seed),
                          coords, grid, {}, box);
}

// small deterministic conformal factors for rescaling checks
inline std::string random_sigma_text(const std::vector<std::string>& coords, std::uint64_t seed) {
  std::mt19937_64 rng(seed * 0x2545f4914f6cdd1dULL + 99);
  auto pick = [&](std::size_t mod) { return static_cast<std::size_t>(rng() % mod); };
  double c1 = 0.1 * unit_draw(rng), c2 = 0.1 * unit_draw(rng), c3 = 0.1 * unit_draw(rng);
  const auto& a = coords[pick(coords.size())];
  const auto& b = coords[pick(coords.size())];
  const auto& c = coords[pick(coords.size())];
  const auto& d = coords[pick(coords.size())];
  std::string s = fmt_coef(c1) + "*sin(" + a + ")";
  s += (c2 >= 0 ? " + " : " - ") + fmt_coef(std::abs(c2)) + "*" + b + "*" + c;
  s += (c3 >= 0 ? " + " : " - ") + fmt_coef(std::abs(c3)) + "*" + d;
  return s;
}

inline std::string ppwave_h_text(const std::string& a, const std::string& b, const std::string& c) {
  std::string h;
  if (a != "0") h += "(" + a + ")*(x^2 - y^2)";
  if (b != "0") {
    if (!h.empty()) h += " + ";
    h += "2*(" + b + ")*x*y";
  }
  if (c != "0") {
    if (!h.empty()) h += " + ";
    h += "(" + c + ")*(x^2 + y^2)";
  }
  return h.empty() ? "0" : h;
}

inline MetricSpec ppwave_spec(const std::string& name, const std::string& a, const std::string& b,
                              const std::string& c, std::array<double, 2> u_box,
                              std::optional<std::vector<std::string>> vector_a = std::nullopt) {
  std::string h = ppwave_h_text(a, b, c);
  std::vector<std::vector<std::string>> grid = {
      {h, "1", "0", "0"},
      {"1", "0", "0", "0"},
      {"0", "0", "-1", "0"},
      {"0", "0", "0", "-1"}};
  return make_metric_spec(name, {"u", "v", "x", "y"}, grid, {},
                          {u_box, {-1.0, 1.0}, {-1.0, 1.0}, {-1.0, 1.0}},
                          std::nullopt, std::move(vector_a));
}

}  // namespace detail

inline std::vector<std::string> catalog_names() {
  return {"minkowski4", "schwarzschild", "s3_sphere",  "frw_flat",
          "desitter",   "godel",         "ppwave",     "ppwave_cqr",
          "ppwave_concircular",           "random_poly4", "random_poly5"};
}

inline CatalogEntry builtin(const std::string& name, std::uint64_t seed = 1) {
  CatalogEntry e;
  if (name == "minkowski4") {
    e.spec = make_metric_spec(
        "minkowski4", {"t", "x", "y", "z"},
        {{"-1", "0", "0", "0"}, {"0", "1", "0", "0"}, {"0", "0", "1", "0"}, {"0", "0", "0", "1"}},
        {}, {{-1, 1}, {-1, 1}, {-1, 1}, {-1, 1}}, std::string("x"));
    e.note = "Flat chart; every curvature component is identically zero.";
    e.residual_bounds = {{"riemann_max", 1e-13}, {"ricci_max", 1e-13},
                         {"weyl_max", 1e-13},    {"nabla_weyl_max", 1e-13}};
    e.classifications = {{"fv_status", "conformally_flat"}};
    return e;
  }
  if (name == "schwarzschild") {
    e.spec = make_metric_spec(
        "schwarzschild", {"t", "r", "theta", "phi"},
        {{"-(1 - 2*M/r)", "0", "0", "0"},
         {"0", "1/(1 - 2*M/r)", "0", "0"},
         {"0", "0", "r^2", "0"},
         {"0", "0", "0", "r^2*sin(theta)^2"}},
        {{"M", 1.0}}, {{0, 1}, {2.5, 10}, {0.4, 2.7}, {0, 6.2}}, std::string("0.1*r"));
    e.note =
        "Static vacuum chart; the quadratic Riemann scalar has the closed form "
        "48 M^2 / r^6, the Ricci tensor vanishes, and the radial null directions are "
        "doubly aligned.";
    e.value_checks = {{"kretschmann",
                       [](const std::vector<double>& p) { return 48.0 / std::pow(p[1], 6); },
                       1e-9}};
    e.residual_bounds = {{"ricci_max", 1e-10}, {"special_gap", 1e-9}};
    e.classifications = {{"fv_status", "not_cqr"}, {"petrov_class", "II_or_D"}};
    e.petrov_k = {{"1/(1 - 2*M/r)", "1", "0", "0"}};
    return e;
  }
  if (name == "s3_sphere") {
    e.spec = make_metric_spec(
        "s3_sphere", {"chi", "theta", "phi"},
        {{"a^2", "0", "0"},
         {"0", "a^2*sin(chi)^2", "0"},
         {"0", "0", "a^2*sin(chi)^2*sin(theta)^2"}},
        {{"a", 1.0}}, {{0.4, 2.7}, {0.4, 2.7}, {0, 6.2}});
    e.note = "Round 3-sphere of radius a: constant curvature, scalar 6/a^2; the "
             "conformal tensor vanishes identically in dimension 3.";
    e.value_checks = {{"scalar_R",
                       [](const std::vector<double>&) { return 6.0; }, 1e-10}};
    e.residual_bounds = {{"weyl_max", 1e-11}};
    return e;
  }
  if (name == "frw_flat") {
    e.spec = make_metric_spec(
        "frw_flat", {"t", "x", "y", "z"},
        {{"-1", "0", "0", "0"}, {"0", "t^2", "0", "0"}, {"0", "0", "t^2", "0"}, {"0", "0", "0", "t^2"}},
        {}, {{0.5, 2}, {-1, 1}, {-1, 1}, {-1, 1}});
    e.note = "Spatially flat expanding chart with scale factor t: conformally flat, "
             "perfect-fluid Ricci with eigenvalue multiplicities (1,3).";
    e.residual_bounds = {{"weyl_max", 1e-10}, {"qe_residual", 1e-9}};
    e.classifications = {{"qe_multiplicities", "1,3"}};
    return e;
  }
  if (name == "desitter") {
    e.spec = make_metric_spec(
        "desitter", {"t", "x", "y", "z"},
        {{"-1", "0", "0", "0"},
         {"0", "exp(2*t)", "0", "0"},
         {"0", "0", "exp(2*t)", "0"},
         {"0", "0", "0", "exp(2*t)"}},
        {}, {{0, 1}, {-1, 1}, {-1, 1}, {-1, 1}});
    e.note = "Exponential scale factor: an Einstein space, conformally flat.";
    e.residual_bounds = {{"weyl_max", 1e-10}, {"qe_residual", 1e-9}};
    e.classifications = {{"qe_multiplicities", "4"}};
    return e;
  }
  if (name == "godel") {
    e.spec = make_metric_spec(
        "godel", {"t", "x", "y", "z"},
        {{"-a^2", "0", "0", "-a^2*exp(x)"},
         {"0", "a^2", "0", "0"},
         {"0", "0", "a^2", "0"},
         {"-a^2*exp(x)", "0", "0", "-a^2*exp(2*x)/2"}},
        {{"a", 1.0}}, {{-1, 1}, {-1, 1}, {-1, 1}, {-1, 1}});
    e.note = "Homogeneous rotating chart; its Ricci tensor is a rank-one square of "
             "the rotation direction and passes the conformal-compatibility check.";
    e.residual_bounds = {{"compat_ricci_weyl", 1e-9}};
    return e;
  }
  if (name == "ppwave") {
    e.spec = detail::ppwave_spec("ppwave", "1", "0", "0", {-1.0, 1.0});
    e.note = "Plane-fronted wave with constant profile: the Weyl derivative "
             "vanishes, so the recurrence holds only with a zero vector.";
    e.classifications = {{"fv_status", "conformally_symmetric"}};
    return e;
  }
  if (name == "ppwave_cqr") {
    e.spec = detail::ppwave_spec("ppwave_cqr", "exp(4*u)", "0", "0", {0.0, 1.0},
                                 std::vector<std::string>{"1", "0", "0", "0"});
    e.note =
        "Profile H = exp(4u)(x^2-y^2): every Weyl component is proportional to "
        "exp(4u) and Gamma^u vanishes identically on these charts, so the Weyl "
        "derivative equals 4 du (x) C and the five-term recurrence holds with "
        "A = du (A_u = a'/(4a) = 1).  A is null, doubly aligned, and the wave is "
        "type N.";
    e.expected_A = [](const std::vector<double>&) {
      return std::vector<double>{1.0, 0.0, 0.0, 0.0};
    };
    e.expected_A_tol = 1e-9;
    e.residual_bounds = {{"cqr_recurrence", 1e-9},    {"weyl_annihilation", 1e-10},
                         {"weyl_divergence", 1e-10},  {"antisym_condition", 1e-10},
                         {"conformally_recurrent", 1e-9}, {"fv_nullity", 1e-12},
                         {"compat_ricci_riemann", 1e-9},  {"compat_ricci_weyl", 1e-9},
                         {"grad_A_eq9", 1e-9},        {"grad_A_eq11", 1e-9},
                         {"electric_representation", 1e-9}, {"electric_compat", 1e-9},
                         {"pontryagin_p1", 1e-11},    {"ricci_eigen", 1e-10},
                         {"geodesic", 1e-10},         {"closedness", 1e-10},
                         {"divergence_free", 1e-10},  {"special_riemann", 1e-10}};
    e.classifications = {{"fv_status", "cqr"},
                         {"petrov_class", "N"},
                         {"kernel_dimension", "1"}};
    return e;
  }
  if (name == "ppwave_concircular") {
    e.spec = detail::ppwave_spec("ppwave_concircular", "u^(-4)", "0", "u^2", {1.0, 3.0},
                                 std::vector<std::string>{"-1/u", "0", "0", "0"});
    e.note =
        "Profile a(u) = u^-4 keeps the recurrence with A_u = a'/(4a) = -1/u, and "
        "since Gamma^u = 0 the gradient is nabla A = A (x) A exactly: a concircular "
        "vector with gamma = 0.  The c(u) = u^2 term makes the Ricci tensor the "
        "rank-one 2u^2 du (x) du with zero scalar, so the zero-gamma consequences "
        "(scalar 0, Codazzi Ricci, rank one) are exercised non-vacuously.";
    e.expected_A = [](const std::vector<double>& p) {
      return std::vector<double>{-1.0 / p[0], 0.0, 0.0, 0.0};
    };
    e.expected_A_tol = 1e-9;
    e.residual_bounds = {{"cqr_recurrence", 1e-9},   {"concircular_fit", 1e-10},
                         {"gamma_spread", 1e-10},    {"null_consistency", 1e-11},
                         {"ricci_codazzi", 1e-10},   {"ricci_rank_gap", 1e-9},
                         {"deszcz_weyl", 1e-10},     {"deszcz_ricci", 1e-10},
                         {"deszcz_gamma", 1e-10},    {"scalar_R_abs", 1e-10}};
    e.classifications = {{"fv_status", "cqr"}};
    return e;
  }
  if (name == "random_poly4") {
    e.spec = detail::random_polynomial_metric(4, seed);
    e.note = "Seeded near-flat Lorentzian polynomial metric; exercises the "
             "unconditional identities only.";
    return e;
  }
  if (name == "random_poly5") {
    e.spec = detail::random_polynomial_metric(5, seed);
    e.note = "Seeded 5-dimensional control; the dimension-4 delta/Weyl identity "
             "must fail here.";
    return e;
  }
  throw UnknownName("unknown catalog metric '" + name + "'");
}

}  // namespace cqr
