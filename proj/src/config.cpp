#include "discover/config.hpp"

#include <fstream>
#include <sstream>

#include "discover/error.hpp"

namespace discover {

namespace fs = std::filesystem;

std::size_t locate_key(std::string_view text, std::string_view key) {
  std::size_t pos = 0;
  std::size_t found = std::string_view::npos;
  while (!key.empty()) {
    const auto dot = key.find('.');
    const std::string needle = "\"" + std::string(key.substr(0, dot)) + "\"";
    std::size_t at = pos;
    for (;;) {
      at = text.find(needle, at);
      if (at == std::string_view::npos) break;
      std::size_t after = at + needle.size();
      while (after < text.size() && std::isspace(static_cast<unsigned char>(text[after]))) ++after;
      if (after < text.size() && text[after] == ':') break;
      at += needle.size();
    }
    if (at == std::string_view::npos) break;
    found = at;
    pos = at + needle.size();
    key = dot == std::string_view::npos ? std::string_view{} : key.substr(dot + 1);
  }
  if (found == std::string_view::npos) return 0;
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(found), '\n'));
}

namespace {

struct Located {
  std::string key;
  std::string message;
};

[[noreturn]] void bad(const std::string& key, const std::string& message) { throw Located{key, message}; }

const nlohmann::json& section(const nlohmann::json& doc, const std::string& name) {
  if (!doc.contains(name)) bad(name, "missing required section '" + name + "'");
  const auto& s = doc.at(name);
  if (!s.is_object()) bad(name, "section '" + name + "' must be an object");
  return s;
}

std::string string_at(const nlohmann::json& obj, const std::string& key, const std::string& path) {
  if (!obj.contains(key)) bad(path, "missing required key '" + path + "'");
  if (!obj.at(key).is_string() || obj.at(key).get<std::string>().empty()) {
    bad(path, "'" + path + "' must be a non-empty string");
  }
  return obj.at(key).get<std::string>();
}

void only_keys(const nlohmann::json& obj, std::initializer_list<const char*> allowed, const std::string& prefix) {
  for (const auto& [k, v] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || k == a;
    const std::string path = prefix.empty() ? k : prefix + "." + k;
    if (!ok) bad(path, "unknown key '" + path + "'");
  }
}

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

nlohmann::json read_json_file(const fs::path& path, const std::string& key) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    bad(key, path.string() + " is not valid JSON: " + e.what());
  }
}

nlohmann::json resolve_predictor(const nlohmann::json& p, const fs::path& base) {
  if (p.contains("path")) {
    only_keys(p, {"path"}, "predictor");
    return read_json_file(resolve(base, string_at(p, "path", "predictor.path")), "predictor.path");
  }
  if (p.contains("external")) {
    only_keys(p, {"external", "timeout_s", "pool"}, "predictor");
    const auto& cmd = p.at("external");
    if (!cmd.is_array() || cmd.empty()) bad("predictor.external", "'predictor.external' must be a non-empty array");
    for (const auto& a : cmd) {
      if (!a.is_string()) bad("predictor.external", "'predictor.external' entries must be strings");
    }
    if (p.contains("timeout_s") && !(p.at("timeout_s").is_number() && p.at("timeout_s").get<double>() > 0.0)) {
      bad("predictor.timeout_s", "'predictor.timeout_s' must be a positive number");
    }
    if (p.contains("pool") && !(p.at("pool").is_number_integer() && p.at("pool").get<long long>() >= 1)) {
      bad("predictor.pool", "'predictor.pool' must be a positive integer");
    }
    return p;
  }
  if (p.contains("kind")) return p;
  bad("predictor", "predictor needs one of 'path', 'kind' or 'external'");
}

RunConfig build(const nlohmann::json& doc, const fs::path& base) {
  if (!doc.is_object()) bad("", "top level must be a JSON object");
  only_keys(doc, {"data", "predictor", "target", "solver", "output"}, "");
  RunConfig c;

  const auto& data = section(doc, "data");
  only_keys(data, {"factual", "schema"}, "data");
  c.factual = resolve(base, string_at(data, "factual", "data.factual"));
  if (!data.contains("schema")) bad("data.schema", "missing required key 'data.schema'");
  if (data.at("schema").is_string()) {
    c.schema_path = resolve(base, string_at(data, "schema", "data.schema"));
  } else if (data.at("schema").is_object() || data.at("schema").is_array()) {
    c.schema_inline = data.at("schema");
  } else {
    bad("data.schema", "'data.schema' must be a path or an inline schema");
  }

  c.predictor = resolve_predictor(section(doc, "predictor"), base);

  const auto& target = section(doc, "target");
  only_keys(target, {"values", "transform", "amount"}, "target");
  if (target.contains("values")) c.target.values = resolve(base, string_at(target, "values", "target.values"));
  if (target.contains("transform")) {
    const std::string t = string_at(target, "transform", "target.transform");
    if (t == "shift") c.target.transform = TargetTransform::kShift;
    else if (t == "scale_to_mean") c.target.transform = TargetTransform::kScaleToMean;
    else bad("target.transform", "unknown target transform '" + t + "' (expected shift or scale_to_mean)");
    if (!target.contains("amount") || !target.at("amount").is_number()) {
      bad("target.amount", "'target.amount' must be a number when a transform is given");
    }
    c.target.amount = target.at("amount").get<double>();
  }
  if (!c.target.values && c.target.transform == TargetTransform::kNone) {
    bad("target", "target needs 'values' or a 'transform'");
  }

  const auto& solver = section(doc, "solver");
  try {
    c.solver = SolverConfig::from_json(solver);
    validate(c.solver, 0);
  } catch (const ConfigError& e) {
    bad(e.key().empty() ? "solver" : "solver." + e.key(), e.what());
  }

  const auto& output = section(doc, "output");
  only_keys(output, {"directory"}, "output");
  c.output_dir = resolve(base, string_at(output, "directory", "output.directory"));
  return c;
}

}  // namespace

RunConfig parse_run_config(std::string_view text, const fs::path& base_dir, const std::string& label) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    const std::size_t byte = std::min(e.byte, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(byte), '\n');
    throw ConfigError(label + ":" + std::to_string(line) + ": invalid JSON: " + e.what());
  }
  try {
    RunConfig c = build(doc, base_dir);
    c.source_text = std::string(text);
    c.source_label = label;
    return c;
  } catch (const Located& l) {
    throw anchored(text, label, l.key, l.message);
  }
}

ConfigError anchored(std::string_view text, const std::string& label, const std::string& key,
                     const std::string& message) {
  const std::size_t line = key.empty() ? 0 : locate_key(text, key);
  std::string where = label + ":";
  if (line > 0) where += std::to_string(line) + ":";
  return ConfigError(where + " " + message, key);
}

RunConfig load_run_config(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str(), path.parent_path(), path.string());
}

nlohmann::json RunConfig::to_json() const {
  nlohmann::json data = {{"factual", factual.string()}};
  data["schema"] = schema_inline ? *schema_inline : nlohmann::json(schema_path.string());
  nlohmann::json target = nlohmann::json::object();
  if (this->target.values) target["values"] = this->target.values->string();
  if (this->target.transform != TargetTransform::kNone) {
    target["transform"] = this->target.transform == TargetTransform::kShift ? "shift" : "scale_to_mean";
    target["amount"] = this->target.amount;
  }
  return {{"data", data},
          {"predictor", predictor},
          {"target", target},
          {"solver", solver.to_json()},
          {"output", {{"directory", output_dir.string()}}}};
}

std::vector<double> resolve_target(const TargetSpec& spec, std::span<const double> factual_outputs) {
  if (spec.values) {
    auto v = load_column(*spec.values);
    if (v.size() != factual_outputs.size()) {
      throw ArgumentError("target file " + spec.values->string() + " has " + std::to_string(v.size()) +
                          " values but the cohort has " + std::to_string(factual_outputs.size()) + " rows");
    }
    return v;
  }
  std::vector<double> out(factual_outputs.begin(), factual_outputs.end());
  if (spec.transform == TargetTransform::kShift) {
    for (double& y : out) y += spec.amount;
  } else if (spec.transform == TargetTransform::kScaleToMean) {
    double mean = 0.0;
    for (double y : out) mean += y;
    mean /= static_cast<double>(out.size());
    if (mean == 0.0) throw ArgumentError("scale_to_mean: factual outputs have zero mean");
    const double factor = spec.amount / mean;
    for (double& y : out) y *= factor;
  }
  return out;
}

}  // namespace discover
