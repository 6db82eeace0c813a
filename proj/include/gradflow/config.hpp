#pragma once

// Experiment configuration: a single JSON document naming the field (catalog
// id + params, or an inline expression), integrator settings, and the
// command-specific blocks. Validation errors name the offending key.

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "gradflow/catalog.hpp"
#include "gradflow/expr.hpp"
#include "gradflow/field.hpp"
#include "gradflow/flow.hpp"
#include "gradflow/rng.hpp"

namespace gradflow {

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {

inline Eigen::VectorXd to_vector(const nlohmann::json& j, const std::string& key) {
  if (!j.is_array()) throw ConfigError("'" + key + "' must be an array of numbers");
  Eigen::VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ConfigError("'" + key + "' must be numeric");
    v[i] = j[i].get<double>();
  }
  return v;
}

}  // namespace detail

// Parses the mandatory "field" block; exactly one source (catalog or
// expression) must be given. Returns the field plus the catalog entry when
// catalog-backed (for manifold models and reference facts).
struct FieldConfig {
  ScalarField field;
  std::optional<CatalogEntry> catalog_entry;
};

inline FieldConfig field_from_config(const nlohmann::json& root) {
  if (!root.contains("field")) throw ConfigError("missing 'field' block");
  const auto& j = root["field"];
  const bool has_catalog = j.contains("catalog");
  const bool has_expr = j.contains("expression");
  if (has_catalog == has_expr)
    throw ConfigError("'field' needs exactly one of 'catalog' or 'expression'");

  FieldConfig out;
  if (has_catalog) {
    std::string id = j["catalog"].get<std::string>();
    std::map<std::string, double> params;
    if (j.contains("params"))
      for (auto it = j["params"].begin(); it != j["params"].end(); ++it)
        params[it.key()] = it.value().get<double>();
    try {
      out.catalog_entry = make_catalog_field(id, params);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    out.field = out.catalog_entry->field;
    return out;
  }

  if (!j.contains("variables"))
    throw ConfigError("'field.expression' needs 'field.variables'");
  std::vector<std::string> vars =
      j["variables"].get<std::vector<std::string>>();
  Expr expr;
  try {
    expr = parse_expression(j["expression"].get<std::string>(), vars);
  } catch (const ParseError& e) {
    throw ConfigError(std::string("field.expression: ") + e.what());
  }
  DomainKind domain = DomainKind::kEuclidean;
  Eigen::VectorXd periods;
  if (j.contains("domain")) {
    std::string d = j["domain"].get<std::string>();
    if (d == "euclidean") domain = DomainKind::kEuclidean;
    else if (d == "flat_torus") domain = DomainKind::kFlatTorus;
    else throw ConfigError("field.domain must be 'euclidean' or 'flat_torus'");
  }
  if (domain == DomainKind::kFlatTorus) {
    if (!j.contains("periods"))
      throw ConfigError("flat_torus field needs 'field.periods'");
    periods = detail::to_vector(j["periods"], "field.periods");
  }
  out.field = ScalarField::from_expression(
      j.value("name", std::string("expression")), expr, domain, periods);
  return out;
}

inline IntegratorConfig integrator_from_config(const nlohmann::json& root) {
  IntegratorConfig cfg;
  if (!root.contains("integrator")) return cfg;
  const auto& j = root["integrator"];
  cfg.rel_tol = j.value("rel_tol", cfg.rel_tol);
  cfg.abs_tol = j.value("abs_tol", cfg.abs_tol);
  cfg.max_step = j.value("max_step", cfg.max_step);
  cfg.t_max = j.value("t_max", cfg.t_max);
  cfg.stop_grad_norm = j.value("stop_grad_norm", cfg.stop_grad_norm);
  cfg.stop_value_delta = j.value("stop_value_delta", cfg.stop_value_delta);
  if (j.contains("record_times"))
    cfg.record_times = j["record_times"].get<std::vector<double>>();
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("integrator: ") + e.what());
  }
  return cfg;
}

// Start points: an explicit list, a seeded random box, or both.
inline std::vector<Eigen::VectorXd> starts_from_config(
    const nlohmann::json& block, const nlohmann::json& root, int dim) {
  std::vector<Eigen::VectorXd> starts;
  if (block.contains("starts"))
    for (const auto& s : block["starts"]) {
      Eigen::VectorXd x = detail::to_vector(s, "starts");
      if (x.size() != dim)
        throw ConfigError("start point dimension mismatch");
      starts.push_back(x);
    }
  if (block.contains("random_starts")) {
    const auto& r = block["random_starts"];
    if (!root.contains("seed"))
      throw ConfigError("random starts require a top-level 'seed'");
    int count = r.value("count", 0);
    if (count <= 0) throw ConfigError("random_starts.count must be positive");
    Eigen::VectorXd lo = detail::to_vector(r.at("lo"), "random_starts.lo");
    Eigen::VectorXd hi = detail::to_vector(r.at("hi"), "random_starts.hi");
    if (lo.size() != dim || hi.size() != dim)
      throw ConfigError("random_starts box dimension mismatch");
    Rng rng(root["seed"].get<std::uint64_t>());
    for (int i = 0; i < count; ++i)
      starts.push_back(rng.uniform_vector(lo, hi));
  }
  if (starts.empty()) throw ConfigError("no start points configured");
  return starts;
}

inline nlohmann::json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file: " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
}

}  // namespace gradflow
