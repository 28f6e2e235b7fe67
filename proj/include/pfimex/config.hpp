#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "pfimex/errors.hpp"
#include "pfimex/experiments.hpp"

namespace pfimex {

/// Every problem found while parsing a config, each prefixed by its key path.
class ConfigParseError : public ConfigError {
 public:
  explicit ConfigParseError(std::vector<std::string> errors);
  const std::vector<std::string>& errors() const { return errors_; }

 private:
  std::vector<std::string> errors_;
};

ExperimentSpec parse_config(const nlohmann::json& j);
ExperimentSpec parse_config_text(const std::string& text);
ExperimentSpec parse_config_file(const std::string& path);

/// Canonical form with every default filled in; parse_config(config_to_json(s)) == s.
nlohmann::ordered_json config_to_json(const ExperimentSpec& spec);

nlohmann::ordered_json scheme_to_json(const SchemeConfig& s);

}  // namespace pfimex
