#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "gpobs/plant.hpp"

namespace gpobs {

struct RunOptions {
  std::size_t horizon = 100;
  std::uint64_t seed = 0;
  bool horizon_defaulted = true;
  bool seed_defaulted = true;
};

/// Gain matrix plus perturbation factor, as stored in `gain` blocks and
/// design files.
struct GainBlock {
  Matrix gain;
  double alpha = 1.0;
};

struct Scenario {
  std::string name;
  PlantModel plant;
  std::optional<PrivacyBudget> budget;
  RunOptions run;
  std::optional<GainBlock> fixture;
  std::optional<Matrix> mask;
  std::optional<double> dp_scale;
};

/// Parses the line-oriented scenario format (see docs/scenario-format.md).
/// Errors carry "<source>:<line>: ..." or the offending field path.
Scenario parse_scenario(std::string_view text, std::string_view source = "<memory>");
Scenario load_scenario(const std::filesystem::path& path);

/// Writes the scenario in the global `plant` form; reloading is bit-exact.
std::string serialize_scenario(const Scenario& scenario);

GainBlock parse_design(std::string_view text, std::string_view source = "<memory>");
GainBlock load_design(const std::filesystem::path& path);
std::string serialize_design(const GainBlock& design);

std::string read_text_file(const std::filesystem::path& path);

}  // namespace gpobs
