#pragma once

#include <fstream>
#include <json.hpp>

#include "cqrlab/metric_spec.hpp"

namespace cqr {

using ordered_json = nlohmann::ordered_json;

// Single-document metric file: UTF-8 json with fields in a fixed order so
// exports are byte-stable for identical inputs.
inline ordered_json metric_to_json(const MetricSpec& spec) {
  ordered_json j;
  j["name"] = spec.name;
  j["dimension"] = spec.dimension;
  j["coordinates"] = spec.coordinates;
  ordered_json params = ordered_json::object();
  for (const auto& [k, v] : spec.parameters) params[k] = v;
  j["parameters"] = params;
  ordered_json grid = ordered_json::array();
  for (const auto& row : spec.components) {
    ordered_json r = ordered_json::array();
    for (const auto& comp : row) r.push_back(to_string(comp, spec.coordinates));
    grid.push_back(r);
  }
  j["metric"] = grid;
  ordered_json box = ordered_json::array();
  for (const auto& [lo, hi] : spec.sample_box) box.push_back(ordered_json::array({lo, hi}));
  j["sample_box"] = box;
  if (spec.sigma) j["sigma"] = to_string(*spec.sigma, spec.coordinates);
  if (spec.vector_A) {
    ordered_json a = ordered_json::array();
    for (const auto& comp : *spec.vector_A) a.push_back(to_string(comp, spec.coordinates));
    j["vector_A"] = a;
  }
  return j;
}

inline MetricSpec metric_from_json(const ordered_json& j) {
  MetricSpec spec;
  try {
    spec.name = j.at("name").get<std::string>();
    spec.dimension = j.at("dimension").get<int>();
    spec.coordinates = j.at("coordinates").get<std::vector<std::string>>();
    if (j.contains("parameters"))
      for (const auto& [k, v] : j.at("parameters").items()) spec.parameters[k] = v.get<double>();
  } catch (const nlohmann::json::exception& ex) {
    throw InputError(std::string("malformed metric file: ") + ex.what());
  }
  try {
    auto params = spec.parameter_names();
    for (const auto& row : j.at("metric")) {
      spec.components.emplace_back();
      for (const auto& cell : row)
        spec.components.back().push_back(
            parse_expression(cell.get<std::string>(), spec.coordinates, params));
    }
    for (const auto& iv : j.at("sample_box"))
      spec.sample_box.push_back({iv.at(0).get<double>(), iv.at(1).get<double>()});
    if (j.contains("sigma"))
      spec.sigma = parse_expression(j.at("sigma").get<std::string>(), spec.coordinates, params);
    if (j.contains("vector_A")) {
      spec.vector_A.emplace();
      for (const auto& cell : j.at("vector_A"))
        spec.vector_A->push_back(
            parse_expression(cell.get<std::string>(), spec.coordinates, params));
    }
  } catch (const nlohmann::json::exception& ex) {
    throw InputError(std::string("malformed metric file: ") + ex.what());
  }
  spec.validate();
  return spec;
}

inline void save_metric(const MetricSpec& spec, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot open '" + path + "' for writing");
  out << metric_to_json(spec).dump(2) << "\n";
  if (!out) throw InputError("failed writing '" + path + "'");
}

inline MetricSpec load_metric(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  ordered_json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& ex) {
    throw InputError(std::string("malformed metric file: ") + ex.what());
  }
  return metric_from_json(j);
}

}  // namespace cqr
