#pragma once

#include <filesystem>
#include <fstream>
#include <set>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "eivreg/noise_models.hpp"
#include "eivreg/selector.hpp"
#include "eivreg/simlab.hpp"

namespace eivreg::cli {

using nlohmann::json;

namespace detail {

inline void
check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where)
{
  if (!j.is_object())
    throw std::invalid_argument(where + ": expected a JSON object");
  for (const auto& item : j.items())
    if (!allowed.count(item.key()))
      throw std::invalid_argument(where + ": unknown key '" + item.key() + "'");
}

template<class T>
T
required(const json& j, const char* key, const std::string& where)
{
  if (!j.contains(key))
    throw std::invalid_argument(where + ": missing key '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw std::invalid_argument(where + ": key '" + std::string(key) + "' has the wrong type");
  }
}

} // namespace detail

inline json
noise_to_json(const NoiseModel& noise)
{
  if (noise.custom)
    throw std::invalid_argument("custom noise laws cannot be serialized");
  return { { "kind", to_string(noise.kind) }, { "sigma", noise.sigma } };
}

inline NoiseModel
noise_from_json(const json& j)
{
  detail::check_keys(j, { "kind", "sigma" }, "noise");
  const auto kind = parse_noise_kind(detail::required<std::string>(j, "kind", "noise"));
  const double sigma = kind == NoiseKind::none && !j.contains("sigma")
                         ? 0.0
                         : detail::required<double>(j, "sigma", "noise");
  auto noise = make_noise(kind, sigma);
  validate(noise);
  return noise;
}

inline json
smoothness_to_json(const ScenarioSmoothness& s)
{
  return { { "a_ell", s.a_ell }, { "r_ell", s.r_ell }, { "B_ell", s.B_ell },
           { "a_g", s.a_g },     { "r_g", s.r_g },     { "B_g", s.B_g } };
}

inline ScenarioSmoothness
smoothness_from_json(const json& j)
{
  const std::string where = "smoothness";
  detail::check_keys(j, { "a_ell", "r_ell", "B_ell", "a_g", "r_g", "B_g" }, where);
  ScenarioSmoothness s;
  s.a_ell = detail::required<double>(j, "a_ell", where);
  s.r_ell = detail::required<double>(j, "r_ell", where);
  s.B_ell = detail::required<double>(j, "B_ell", where);
  s.a_g = detail::required<double>(j, "a_g", where);
  s.r_g = detail::required<double>(j, "r_g", where);
  s.B_g = detail::required<double>(j, "B_g", where);
  return s;
}

inline json
scenario_to_json(const Scenario& s, const std::string& name)
{
  json j = { { "name", name },
             { "f", to_string(s.f) },
             { "f_constant", s.f_constant },
             { "g", to_string(s.g) },
             { "xi_sd", s.xi_sd },
             { "xi_law", to_string(s.xi_law) },
             { "xi_df", s.xi_df },
             { "noise", noise_to_json(s.noise) },
             { "n", s.n } };
  if (s.smoothness)
    j["smoothness"] = smoothness_to_json(*s.smoothness);
  return j;
}

//! Scenario from JSON; `name` receives the optional "name" key.
inline Scenario
scenario_from_json(const json& j, std::string* name = nullptr)
{
  const std::string where = "scenario";
  detail::check_keys(j,
                     { "name", "f", "f_constant", "g", "xi_sd", "xi_law", "xi_df", "noise", "n", "smoothness" },
                     where);
  Scenario s;
  s.f = parse_regression_fn(detail::required<std::string>(j, "f", where));
  s.g = parse_design(detail::required<std::string>(j, "g", where));
  s.xi_sd = detail::required<double>(j, "xi_sd", where);
  if (!j.contains("noise"))
    throw std::invalid_argument("scenario: missing key 'noise'");
  s.noise = noise_from_json(j.at("noise"));
  const auto n = detail::required<std::int64_t>(j, "n", where);
  if (n < 2)
    throw std::invalid_argument("scenario: n must be >= 2");
  s.n = static_cast<std::size_t>(n);
  if (j.contains("f_constant"))
    s.f_constant = detail::required<double>(j, "f_constant", where);
  if (j.contains("xi_law"))
    s.xi_law = parse_xi_law(detail::required<std::string>(j, "xi_law", where));
  if (j.contains("xi_df"))
    s.xi_df = detail::required<double>(j, "xi_df", where);
  if (j.contains("smoothness"))
    s.smoothness = smoothness_from_json(j.at("smoothness"));
  if (name && j.contains("name"))
    *name = detail::required<std::string>(j, "name", where);
  validate(s);
  return s;
}

inline json
read_json_file(const std::filesystem::path& path)
{
  std::ifstream in(path);
  if (!in)
    throw std::invalid_argument("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(path.string() + ": " + e.what());
  }
}

inline json
config_to_json(const EstimatorConfig& cfg)
{
  json j = { { "kappa", cfg.params.kappa },
             { "kappa_prime", cfg.params.kappa_prime },
             { "kn", nullptr },
             { "practical_kn", cfg.practical_kn },
             { "trim_exponent", cfg.trim_exponent },
             { "dim_step", cfg.dim_step },
             { "max_dim", cfg.max_dim },
             { "grid",
               { { "lo", cfg.eval_region.lo }, { "hi", cfg.eval_region.hi }, { "points", cfg.eval_region.points } } },
             { "quad", { { "rule", to_string(cfg.quad.rule) }, { "nodes", cfg.quad.nodes } } } };
  if (cfg.k_n)
    j["kn"] = *cfg.k_n;
  return j;
}

inline EstimatorConfig
config_from_json(const json& j)
{
  const std::string where = "config";
  detail::check_keys(
    j, { "kappa", "kappa_prime", "kn", "practical_kn", "trim_exponent", "dim_step", "max_dim", "grid", "quad" }, where);
  EstimatorConfig cfg;
  cfg.params.kappa = detail::required<double>(j, "kappa", where);
  cfg.params.kappa_prime = detail::required<double>(j, "kappa_prime", where);
  if (j.contains("kn") && !j.at("kn").is_null())
    cfg.k_n = detail::required<std::int64_t>(j, "kn", where);
  cfg.practical_kn = detail::required<bool>(j, "practical_kn", where);
  cfg.trim_exponent = detail::required<double>(j, "trim_exponent", where);
  cfg.dim_step = detail::required<double>(j, "dim_step", where);
  cfg.max_dim = detail::required<double>(j, "max_dim", where);
  const auto& g = j.at("grid");
  cfg.eval_region.lo = detail::required<double>(g, "lo", "grid");
  cfg.eval_region.hi = detail::required<double>(g, "hi", "grid");
  cfg.eval_region.points = detail::required<std::size_t>(g, "points", "grid");
  const auto& q = j.at("quad");
  cfg.quad.rule = parse_quad_rule(detail::required<std::string>(q, "rule", "quad"));
  cfg.quad.nodes = detail::required<std::size_t>(q, "nodes", "quad");
  return cfg;
}

} // namespace eivreg::cli
