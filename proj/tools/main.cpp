// Command-line front end: load metrics, run the identity battery at points or
// over sample-box grids, emit text or json reports.
//
// Exit codes: 0 all checks pass, 1 a required check failed, 2 input error,
// 3 numerical failure (singular metric, domain error).

#include <CLI11.hpp>
#include <iostream>

#include "cqrlab/driver.hpp"

namespace {

struct CommonOpts {
  std::string builtin_name;
  std::string metric_file;
  std::vector<std::string> point_text;
  cqr::AnalysisConfig config;
  std::string checks_csv;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--builtin", opts.builtin_name, "catalog metric name (see `list`)");
  cmd->add_option("--metric", opts.metric_file, "metric json file");
  cmd->add_option("--point", opts.point_text,
                  "evaluation point as name=value pairs, e.g. \"u=0.3,v=0,x=0.5,y=-0.2\"");
  cmd->add_option("--grid", opts.config.grid, "number of sample-box points when no --point given")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--order", opts.config.order, "jet order (3 or 4)")->check(CLI::Range(3, 4));
  cmd->add_option("--tol", opts.config.tol, "normalized residual threshold")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--checks", opts.checks_csv,
                  "comma list of check groups (curvature,cqr,gradA,thetagamma,concircular,"
                  "quasieinstein,deszcz,electric,petrov,pontryagin,lorentzian4)");
  cmd->add_option("--format", opts.config.format, "text or json")
      ->check(CLI::IsMember({"text", "json"}));
  cmd->add_option("--seed", opts.config.seed, "seed for the random_poly metrics");
  cmd->add_flag("--fd", opts.config.fd, "finite-difference fallback for order-4-only checks");
}

cqr::CatalogEntry resolve_metric(const CommonOpts& opts) {
  if (!opts.builtin_name.empty() && !opts.metric_file.empty())
    throw cqr::InputError("give either --builtin or --metric, not both");
  if (!opts.builtin_name.empty()) return cqr::builtin(opts.builtin_name, opts.config.seed);
  if (!opts.metric_file.empty()) {
    cqr::CatalogEntry e;
    e.spec = cqr::load_metric(opts.metric_file);
    return e;
  }
  throw cqr::InputError("a metric is required: --builtin NAME or --metric FILE");
}

std::vector<double> parse_point(const std::string& text, const cqr::MetricSpec& spec) {
  std::vector<double> point(static_cast<std::size_t>(spec.dimension));
  std::vector<bool> seen(static_cast<std::size_t>(spec.dimension), false);
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    auto eq = item.find('=');
    if (eq == std::string::npos) throw cqr::InputError("bad --point entry '" + item + "'");
    std::string name = item.substr(0, eq);
    name.erase(0, name.find_first_not_of(" \t"));
    name.erase(name.find_last_not_of(" \t") + 1);
    int idx = -1;
    for (int c = 0; c < spec.dimension; ++c)
      if (spec.coordinates[static_cast<std::size_t>(c)] == name) idx = c;
    if (idx < 0) throw cqr::InputError("unknown coordinate '" + name + "' in --point");
    try {
      point[static_cast<std::size_t>(idx)] = std::stod(item.substr(eq + 1));
    } catch (const std::exception&) {
      throw cqr::InputError("bad value in --point entry '" + item + "'");
    }
    seen[static_cast<std::size_t>(idx)] = true;
  }
  for (int c = 0; c < spec.dimension; ++c)
    if (!seen[static_cast<std::size_t>(c)])
      throw cqr::InputError("missing coordinate '" + spec.coordinates[static_cast<std::size_t>(c)] +
                            "' in --point");
  return point;
}

void finish_config(CommonOpts& opts, const cqr::MetricSpec& spec) {
  if (!opts.checks_csv.empty()) {
    std::stringstream ss(opts.checks_csv);
    std::string g;
    while (std::getline(ss, g, ',')) opts.config.checks.push_back(g);
  }
  for (const auto& text : opts.point_text) opts.config.points.push_back(parse_point(text, spec));
}

int cmd_analyze(CommonOpts& opts) {
  cqr::CatalogEntry entry = resolve_metric(opts);
  finish_config(opts, entry.spec);
  cqr::AnalysisReport rep = cqr::run_analysis(entry, opts.config);
  if (opts.config.format == "json")
    std::cout << cqr::report_to_json(rep, opts.config, entry.spec.coordinates).dump(2) << "\n";
  else
    std::cout << cqr::report_to_text(rep, opts.config, entry.spec.coordinates);
  return rep.all_pass ? 0 : 1;
}

int cmd_identity(const std::string& name, CommonOpts& opts) {
  cqr::CatalogEntry entry = resolve_metric(opts);
  finish_config(opts, entry.spec);
  cqr::IdentityReport rep = cqr::run_identity(name, entry, opts.config);
  if (opts.config.format == "json") {
    cqr::ordered_json j;
    j["identity"] = rep.name;
    j["metric"] = entry.spec.name;
    cqr::ordered_json pts = cqr::ordered_json::array();
    for (const auto& [point, r] : rep.residuals) {
      cqr::ordered_json p;
      cqr::ordered_json coords = cqr::ordered_json::object();
      for (std::size_t c = 0; c < point.size(); ++c)
        coords[entry.spec.coordinates[c]] = point[c];
      p["point"] = coords;
      p["normalized"] = r;
      pts.push_back(p);
    }
    j["points"] = pts;
    j["worst"] = rep.worst;
    j["pass"] = rep.pass;
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << "identity " << rep.name << " on " << entry.spec.name << "\n";
    for (const auto& [point, r] : rep.residuals) {
      std::cout << "  point";
      for (std::size_t c = 0; c < point.size(); ++c)
        std::cout << " " << entry.spec.coordinates[c] << "=" << point[c];
      std::cout << "  residual " << r << "\n";
    }
    std::cout << "worst " << rep.worst << " -> " << (rep.pass ? "pass" : "FAIL") << "\n";
  }
  return rep.pass ? 0 : 1;
}

int cmd_list() {
  for (const auto& name : cqr::catalog_names()) {
    cqr::CatalogEntry e = cqr::builtin(name);
    std::cout << name << "  (n=" << e.spec.dimension << ")\n";
  }
  return 0;
}

int cmd_export(const std::string& name, const std::string& path, std::uint64_t seed) {
  cqr::CatalogEntry e = cqr::builtin(name, seed);
  cqr::save_metric(e.spec, path);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pointwise curvature and Weyl-recurrence identity laboratory"};
  app.require_subcommand(1);

  CommonOpts analyze_opts, identity_opts;
  std::string identity_name, export_name, export_path;
  std::uint64_t export_seed = 1;

  CLI::App* analyze = app.add_subcommand("analyze", "run the full check battery");
  add_common(analyze, analyze_opts);

  CLI::App* identity = app.add_subcommand("identity", "run one named identity");
  identity->add_option("name", identity_name,
                       "one of lovelock4, eq5, eq6, bianchi, weyl_traces, avez")
      ->required();
  add_common(identity, identity_opts);

  app.add_subcommand("list", "list catalog metrics");

  CLI::App* exp = app.add_subcommand("export", "write a catalog metric to a json file");
  exp->add_option("name", export_name, "catalog metric name")->required();
  exp->add_option("path", export_path, "output file")->required();
  exp->add_option("--seed", export_seed, "seed for the random_poly metrics");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (app.got_subcommand("analyze")) return cmd_analyze(analyze_opts);
    if (app.got_subcommand("identity")) return cmd_identity(identity_name, identity_opts);
    if (app.got_subcommand("list")) return cmd_list();
    if (app.got_subcommand("export")) return cmd_export(export_name, export_path, export_seed);
  } catch (const cqr::NumericError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const cqr::InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
