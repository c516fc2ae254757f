#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace woodgeom {

/// Result document written by every CLI subcommand. `config` always holds
/// the full effective configuration (thresholds, weights, seeds, paths);
/// `timing` is the only part allowed to differ between identical runs.
struct EvalReport {
  std::string tool = "woodgeom";
  std::string version;
  std::string command;
  nlohmann::json config = nlohmann::json::object();
  nlohmann::json results = nlohmann::json::object();
  nlohmann::json timing = nlohmann::json::object();
  std::vector<std::string> warnings;

  bool operator==(const EvalReport&) const = default;
};

inline void to_json(nlohmann::json& j, const EvalReport& r) {
  j = {{"tool", r.tool},       {"version", r.version}, {"command", r.command}, {"config", r.config},
       {"results", r.results}, {"timing", r.timing},   {"warnings", r.warnings}};
}

inline void from_json(const nlohmann::json& j, EvalReport& r) {
  j.at("tool").get_to(r.tool);
  j.at("version").get_to(r.version);
  j.at("command").get_to(r.command);
  r.config = j.at("config");
  r.results = j.at("results");
  r.timing = j.at("timing");
  j.at("warnings").get_to(r.warnings);
}

}  // namespace woodgeom
