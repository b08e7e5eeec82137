#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "otrates/rates.hpp"

namespace otrates {

struct ConfigKey {
  const char* name;
  const char* default_value;  // nullptr: required (or part of a required choice)
  const char* help;
};

// Every key accepted in the [experiment] section.
const std::vector<ConfigKey>& config_registry();

struct ResolvedConfig {
  // Canonical text for every registry key, defaults materialised. `nu` and
  // `pair` are mutually exclusive; the unused one is the empty string.
  std::map<std::string, std::string> values;

  ExperimentConfig experiment;
  int bootstrap = 1000;
  std::size_t diag_n = 256;
  int diag_seeds = 20;
  std::int64_t triples = 10000;
  double superdiff_radius = 8.0;
  double superdiff_bound = 0.0;  // 0: certified bound, see potential_bound_on_ball

  std::string to_ini() const;
  bool operator==(const ResolvedConfig& o) const { return values == o.values; }
};

ResolvedConfig parse_config_text(std::string_view text, const std::string& origin = "<config>");
ResolvedConfig parse_config(const std::filesystem::path& path);

// Closest registry key by edit distance.
std::string nearest_key(std::string_view key);

}  // namespace otrates
