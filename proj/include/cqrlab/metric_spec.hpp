#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cqrlab/expr.hpp"

namespace cqr {

// A chart: dimension, coordinate names, metric components as expressions,
// optional conformal scalar and candidate fundamental vector (lower index).
struct MetricSpec {
  std::string name;
  int dimension = 0;
  std::vector<std::string> coordinates;
  std::vector<std::vector<Expression>> components;  // n x n, symmetric
  std::map<std::string, double> parameters;
  std::vector<std::array<double, 2>> sample_box;
  std::optional<Expression> sigma;
  std::optional<std::vector<Expression>> vector_A;

  std::vector<std::string> parameter_names() const {
    std::vector<std::string> names;
    names.reserve(parameters.size());
    for (const auto& [k, v] : parameters) names.push_back(k);
    return names;
  }

  void validate() const {
    if (dimension < 3) throw InputError("metric dimension must be at least 3");
    if (static_cast<int>(coordinates.size()) != dimension)
      throw InputError("coordinate count does not match dimension");
    if (static_cast<int>(components.size()) != dimension)
      throw InputError("metric grid has wrong number of rows");
    for (const auto& row : components)
      if (static_cast<int>(row.size()) != dimension)
        throw InputError("metric grid has wrong number of columns");
    for (int i = 0; i < dimension; ++i)
      for (int j = i + 1; j < dimension; ++j)
        if (!equivalent(components[i][j], components[j][i], coordinates))
          throw InputError("metric not symmetric at (" + std::to_string(i) + "," +
                           std::to_string(j) + ")");
    if (static_cast<int>(sample_box.size()) != dimension)
      throw InputError("sample box must list one interval per coordinate");
    for (const auto& [lo, hi] : sample_box)
      if (!(lo <= hi)) throw InputError("sample box interval has lo > hi");
    if (vector_A && static_cast<int>(vector_A->size()) != dimension)
      throw InputError("vector_A must have one component per coordinate");
  }
};

// Build a spec from expression strings; the usual construction path for the
// catalog and the file loader.
inline MetricSpec make_metric_spec(std::string name, std::vector<std::string> coordinates,
                                   const std::vector<std::vector<std::string>>& component_text,
                                   std::map<std::string, double> parameters,
                                   std::vector<std::array<double, 2>> sample_box,
                                   std::optional<std::string> sigma_text = std::nullopt,
                                   std::optional<std::vector<std::string>> vector_a_text = std::nullopt) {
  MetricSpec spec;
  spec.name = std::move(name);
  spec.dimension = static_cast<int>(coordinates.size());
  spec.coordinates = std::move(coordinates);
  spec.parameters = std::move(parameters);
  spec.sample_box = std::move(sample_box);
  auto params = spec.parameter_names();
  spec.components.resize(spec.coordinates.size());
  for (std::size_t i = 0; i < component_text.size(); ++i)
    for (const auto& text : component_text[i])
      spec.components[i].push_back(parse_expression(text, spec.coordinates, params));
  if (sigma_text) spec.sigma = parse_expression(*sigma_text, spec.coordinates, params);
  if (vector_a_text) {
    spec.vector_A.emplace();
    for (const auto& text : *vector_a_text)
      spec.vector_A->push_back(parse_expression(text, spec.coordinates, params));
  }
  spec.validate();
  return spec;
}

}  // namespace cqr
