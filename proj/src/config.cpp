#include "modigw/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace modigw {

std::string to_string(AlgorithmKind kind) {
  switch (kind) {
    case AlgorithmKind::mod_igw: return "mod-igw";
    case AlgorithmKind::fixed_class_igw: return "fixed-class-igw";
    case AlgorithmKind::uniform_random: return "uniform-random";
  }
  return "unknown";
}

namespace {

template <typename T>
T field(const json& doc, const char* key, const std::string& where) {
  if (!doc.contains(key)) throw InvalidArgument(where + ": missing field '" + key + "'");
  try {
    return doc.at(key).get<T>();
  } catch (const json::exception& e) {
    throw InvalidArgument(where + ": field '" + key + "' has the wrong type (" + e.what() + ")");
  }
}

template <typename T>
T field_or(const json& doc, const char* key, T fallback, const std::string& where) {
  if (!doc.contains(key)) return fallback;
  return field<T>(doc, key, where);
}

}  // namespace

Environment parse_environment(const json& doc) {
  const std::string where = "environment";
  if (!doc.is_object()) throw InvalidArgument(where + ": expected an object");
  const auto table = field<std::vector<std::vector<double>>>(doc, "true_model", where);
  if (table.empty()) throw InvalidArgument(where + ": true_model is empty");
  const std::size_t arms = field_or<std::size_t>(doc, "num_arms", table.front().size(), where);

  std::vector<double> weights;
  if (doc.contains("weights")) {
    weights = field<std::vector<double>>(doc, "weights", where);
  } else {
    weights.assign(table.size(), 1.0 / static_cast<double>(table.size()));
  }

  ArmTable model(table.size(), arms);
  for (std::size_t x = 0; x < table.size(); ++x) {
    if (table[x].size() != arms) {
      throw InvalidArgument(where + ": true_model row " + std::to_string(x) + " has " +
                            std::to_string(table[x].size()) + " entries, expected " +
                            std::to_string(arms));
    }
    for (std::size_t a = 0; a < arms; ++a) model(x, a) = table[x][a];
  }

  NoiseSpec noise;
  if (doc.contains("noise")) {
    const auto& n = doc.at("noise");
    const auto kind = field<std::string>(n, "kind", where + ".noise");
    if (kind == "bernoulli") {
      noise.kind = NoiseKind::bernoulli;
    } else if (kind == "gaussian") {
      noise.kind = NoiseKind::gaussian;
      noise.sigma = field<double>(n, "sigma", where + ".noise");
    } else {
      throw InvalidArgument(where + ".noise: unknown kind '" + kind + "'");
    }
  }
  const auto seed = field_or<std::uint64_t>(doc, "seed", 0, where);
  return Environment(std::move(weights), std::move(model), noise, seed);
}

std::vector<ModelClass> parse_classes(const json& classes, const json& features,
                                      std::size_t contexts, std::size_t arms) {
  if (!classes.is_array() || classes.empty()) {
    throw InvalidArgument("classes: expected a nonempty array");
  }
  std::shared_ptr<const FeatureTable> feature_table;
  auto need_features = [&]() {
    if (feature_table) return;
    if (features.is_null()) throw InvalidArgument("classes: linear class without 'features'");
    std::vector<double> values;
    std::size_t dim = 0;
    const auto rows = features.get<std::vector<std::vector<std::vector<double>>>>();
    if (rows.size() != contexts) throw InvalidArgument("features: wrong number of contexts");
    for (const auto& row : rows) {
      if (row.size() != arms) throw InvalidArgument("features: wrong number of arms");
      for (const auto& phi : row) {
        if (dim == 0) dim = phi.size();
        if (phi.size() != dim || dim == 0) {
          throw InvalidArgument("features: every vector must have the same positive length");
        }
        values.insert(values.end(), phi.begin(), phi.end());
      }
    }
    feature_table = std::make_shared<const FeatureTable>(contexts, arms, dim, std::move(values));
  };

  std::vector<ModelClass> out;
  for (std::size_t i = 0; i < classes.size(); ++i) {
    const auto& c = classes[i];
    const std::string where = "classes[" + std::to_string(i) + "]";
    const auto kind = field<std::string>(c, "kind", where);
    if (kind == "tabular") {
      if (c.contains("partition")) {
        const auto p = field<std::string>(c, "partition", where);
        if (p == "constant") {
          out.push_back(ModelClass::tabular_constant(contexts, arms));
        } else if (p == "arm") {
          out.push_back(ModelClass::tabular_per_arm(contexts, arms));
        } else if (p == "context") {
          std::vector<std::size_t> cells(contexts * arms);
          for (std::size_t x = 0; x < contexts; ++x)
            for (std::size_t a = 0; a < arms; ++a) cells[x * arms + a] = x;
          out.push_back(ModelClass::tabular(contexts, arms, std::move(cells)));
        } else if (p == "full") {
          out.push_back(ModelClass::tabular_full(contexts, arms));
        } else {
          throw InvalidArgument(where + ": unknown partition '" + p + "'");
        }
      } else if (c.contains("context_groups")) {
        const auto g = field<std::vector<std::size_t>>(c, "context_groups", where);
        if (g.size() != contexts) throw InvalidArgument(where + ": context_groups size mismatch");
        out.push_back(ModelClass::tabular_context_groups(arms, g));
      } else if (c.contains("cells")) {
        const auto rows = field<std::vector<std::vector<std::size_t>>>(c, "cells", where);
        if (rows.size() != contexts) throw InvalidArgument(where + ": cells size mismatch");
        std::vector<std::size_t> cells;
        for (const auto& r : rows) {
          if (r.size() != arms) throw InvalidArgument(where + ": cells row size mismatch");
          cells.insert(cells.end(), r.begin(), r.end());
        }
        out.push_back(ModelClass::tabular(contexts, arms, std::move(cells)));
      } else {
        throw InvalidArgument(where + ": tabular class needs partition, context_groups or cells");
      }
    } else if (kind == "linear") {
      need_features();
      out.push_back(ModelClass::linear(feature_table, field<std::size_t>(c, "d", where)));
    } else {
      throw InvalidArgument(where + ": unknown kind '" + kind + "'");
    }
    if (c.contains("d") && field<std::size_t>(c, "d", where) != out.back().dim()) {
      throw InvalidArgument(where + ": declared d=" + c.at("d").dump() + " but the class has " +
                            std::to_string(out.back().dim()) + " free parameters");
    }
  }
  validate_class_sequence(out);
  return out;
}

Scenario parse_scenario(json doc, const std::filesystem::path& base_dir) {
  if (!doc.is_object()) throw InvalidArgument("scenario: expected an object");
  if (!doc.contains("environment")) throw InvalidArgument("scenario: missing 'environment'");
  if (doc.at("environment").is_string()) {
    std::filesystem::path p = doc.at("environment").get<std::string>();
    if (p.is_relative()) p = base_dir / p;
    doc["environment"] = read_json_file(p);
  }
  Environment env = parse_environment(doc.at("environment"));
  std::vector<ModelClass> classes =
      parse_classes(doc.value("classes", json::array()), doc.value("features", json()),
                    env.num_contexts(), env.num_arms());

  AlgorithmSpec algorithm;
  if (doc.contains("algorithm")) {
    const auto& a = doc.at("algorithm");
    const auto kind = field<std::string>(a, "kind", "algorithm");
    if (kind == "mod-igw") {
      algorithm.kind = AlgorithmKind::mod_igw;
    } else if (kind == "fixed-class-igw") {
      algorithm.kind = AlgorithmKind::fixed_class_igw;
      algorithm.class_index = field<std::size_t>(a, "class_index", "algorithm");
      if (algorithm.class_index == 0 || algorithm.class_index > classes.size()) {
        throw InvalidArgument("algorithm: class_index outside [1, M]");
      }
    } else if (kind == "uniform-random") {
      algorithm.kind = AlgorithmKind::uniform_random;
    } else {
      throw InvalidArgument("algorithm: unknown kind '" + kind + "'");
    }
  }

  const json run = doc.value("run", json::object());
  RunConfig cfg;
  cfg.horizon = field<std::size_t>(run, "T", "run");
  cfg.tau1 = field_or<std::size_t>(run, "tau1", cfg.tau1, "run");
  cfg.delta = field_or<double>(run, "delta", cfg.delta, "run");
  cfg.c0 = field_or<double>(run, "C0", cfg.c0, "run");
  cfg.c1 = field_or<double>(run, "C1", cfg.c1, "run");
  cfg.test.holdout_fraction = field_or<double>(run, "alpha_ho", cfg.test.holdout_fraction, "run");
  cfg.test.split_ratio = field_or<double>(run, "split_ratio", cfg.test.split_ratio, "run");
  cfg.test.ridge = field_or<double>(run, "ridge", cfg.test.ridge, "run");
  cfg.cumulative_data = field_or<bool>(run, "cumulative_data", false, "run");
  cfg.validate();

  std::vector<std::uint64_t> seeds =
      field_or<std::vector<std::uint64_t>>(run, "seeds", {env.seed()}, "run");
  if (seeds.empty()) throw InvalidArgument("run: seeds list is empty");
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size()) {
    throw InvalidArgument("run: seeds must be distinct");
  }
  doc["run"]["seeds"] = seeds;

  std::string name = doc.value("name", std::string("scenario"));
  return Scenario{std::move(name), std::move(env),   std::move(classes), algorithm,
                  cfg,             std::move(seeds), std::move(doc)};
}

void apply_override(json& doc, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw InvalidArgument("override '" + std::string(assignment) + "' is not key=value");
  }
  const std::string key(assignment.substr(0, eq));
  const std::string raw(assignment.substr(eq + 1));
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::parse_error&) {
    value = raw;
  }
  json* node = &doc;
  std::stringstream path(key);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(path, part, '.')) parts.push_back(part);
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    if (!node->is_object()) throw InvalidArgument("override path '" + key + "' is not an object");
    node = &(*node)[parts[i]];
  }
  if (!node->is_object() && !node->is_null()) {
    throw InvalidArgument("override path '" + key + "' is not an object");
  }
  (*node)[parts.back()] = value;
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw InvalidArgument("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

Scenario load_scenario(const std::filesystem::path& path, std::span<const std::string> overrides) {
  json doc = read_json_file(path);
  for (const auto& o : overrides) apply_override(doc, o);
  return parse_scenario(std::move(doc), path.parent_path());
}

}  // namespace modigw
