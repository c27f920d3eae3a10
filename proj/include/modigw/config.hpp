#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "modigw/bandit.hpp"
#include "modigw/env.hpp"
#include "modigw/models.hpp"

namespace modigw {

using json = nlohmann::json;

enum class AlgorithmKind { mod_igw, fixed_class_igw, uniform_random };

struct AlgorithmSpec {
  AlgorithmKind kind = AlgorithmKind::mod_igw;
  std::size_t class_index = 0;  // fixed-class-igw only, 1-based
};

std::string to_string(AlgorithmKind kind);

// A fully resolved experiment: environment, classes, algorithm, run settings.
struct Scenario {
  std::string name;
  Environment env;
  std::vector<ModelClass> classes;
  AlgorithmSpec algorithm;
  RunConfig run;
  std::vector<std::uint64_t> seeds;
  // The scenario document after overrides and with the environment inlined.
  json document;
};

Environment parse_environment(const json& doc);

// `features` may be null when the sequence has no linear classes.
std::vector<ModelClass> parse_classes(const json& classes, const json& features,
                                      std::size_t contexts, std::size_t arms);

// `base_dir` resolves an environment given as a relative file path.
Scenario parse_scenario(json doc, const std::filesystem::path& base_dir = {});

// Applies `key=value` with a dotted key path. The value is parsed as JSON
// when possible and kept as a string otherwise.
void apply_override(json& doc, std::string_view assignment);

json read_json_file(const std::filesystem::path& path);

Scenario load_scenario(const std::filesystem::path& path,
                       std::span<const std::string> overrides = {});

}  // namespace modigw
