#include "discover/tabular.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "discover/error.hpp"

namespace discover {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      break;
    }
    out.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
  return out;
}

std::optional<double> parse_real(std::string_view s) {
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

const char* kind_name(FeatureKind k) {
  return k == FeatureKind::kNumerical ? "numerical" : "categorical";
}

}  // namespace

bool FeatureSchema::admissible(std::size_t level) const {
  return std::find(admissible_levels.begin(), admissible_levels.end(), level) !=
         admissible_levels.end();
}

std::size_t default_embed_dim(std::size_t cardinality) {
  const auto bits = static_cast<std::size_t>(std::ceil(std::log2(static_cast<double>(cardinality))));
  return std::min<std::size_t>(8, std::max<std::size_t>(2, bits + 1));
}

FeatureSchema numerical_feature(std::string name, double lo, double hi, bool immutable) {
  FeatureSchema f;
  f.name = std::move(name);
  f.kind = FeatureKind::kNumerical;
  f.range_min = lo;
  f.range_max = hi;
  f.immutable = immutable;
  return f;
}

FeatureSchema categorical_feature(std::string name, std::vector<std::string> levels, bool immutable,
                                  std::optional<std::vector<std::size_t>> admissible) {
  FeatureSchema f;
  f.name = std::move(name);
  f.kind = FeatureKind::kCategorical;
  f.levels = std::move(levels);
  f.immutable = immutable;
  if (admissible) {
    f.admissible_levels = std::move(*admissible);
  } else {
    f.admissible_levels.resize(f.levels.size());
    for (std::size_t v = 0; v < f.levels.size(); ++v) f.admissible_levels[v] = v;
  }
  f.embed_dim = f.levels.size() >= 2 ? default_embed_dim(f.levels.size()) : 1;
  return f;
}

Schema::Schema(std::vector<FeatureSchema> features) : features_(std::move(features)) {
  std::set<std::string> names;
  for (auto& f : features_) {
    if (f.name.empty()) throw SchemaError("feature with empty name");
    if (!names.insert(f.name).second) throw SchemaError("duplicate feature name '" + f.name + "'");
    if (f.numerical()) {
      if (!(std::isfinite(f.range_min) && std::isfinite(f.range_max) && f.range_min < f.range_max)) {
        throw SchemaError("feature '" + f.name + "': numerical range requires R_min < R_max");
      }
      if (!f.levels.empty()) throw SchemaError("feature '" + f.name + "': numerical feature has levels");
    } else {
      if (f.levels.size() < 2) {
        throw SchemaError("feature '" + f.name + "': categorical feature needs at least 2 levels");
      }
      std::set<std::string> uniq(f.levels.begin(), f.levels.end());
      if (uniq.size() != f.levels.size()) {
        throw SchemaError("feature '" + f.name + "': duplicate level labels");
      }
      for (std::size_t v : f.admissible_levels) {
        if (v >= f.levels.size()) {
          throw SchemaError("feature '" + f.name + "': admissible level outside level list");
        }
      }
      std::sort(f.admissible_levels.begin(), f.admissible_levels.end());
      f.admissible_levels.erase(std::unique(f.admissible_levels.begin(), f.admissible_levels.end()),
                                f.admissible_levels.end());
      if (f.embed_dim == 0) f.embed_dim = default_embed_dim(f.levels.size());
    }
  }
}

std::optional<std::size_t> Schema::find(const std::string& name) const {
  for (std::size_t p = 0; p < features_.size(); ++p) {
    if (features_[p].name == name) return p;
  }
  return std::nullopt;
}

std::size_t Schema::categorical_count() const {
  return static_cast<std::size_t>(
      std::count_if(features_.begin(), features_.end(), [](const auto& f) { return f.categorical(); }));
}

std::vector<std::size_t> Schema::actionable() const {
  std::vector<std::size_t> out;
  for (std::size_t p = 0; p < features_.size(); ++p) {
    if (!features_[p].immutable) out.push_back(p);
  }
  return out;
}

Schema Schema::from_json(const nlohmann::json& doc) {
  const nlohmann::json* list = &doc;
  if (doc.is_object() && doc.contains("features")) list = &doc.at("features");
  if (!list->is_array()) throw SchemaError("schema must be a JSON array of feature objects");

  static const std::set<std::string> kKnown = {"name",      "kind",      "range",
                                               "levels",    "immutable", "admissible_levels",
                                               "embed_dim"};
  std::vector<FeatureSchema> features;
  for (const auto& item : *list) {
    if (!item.is_object()) throw SchemaError("schema entries must be objects");
    for (const auto& [key, _] : item.items()) {
      if (!kKnown.count(key)) throw SchemaError("unknown schema key '" + key + "'");
    }
    if (!item.contains("name") || !item.at("name").is_string()) {
      throw SchemaError("schema entry without string 'name'");
    }
    FeatureSchema f;
    f.name = item.at("name").get<std::string>();
    const std::string kind = item.value("kind", std::string{});
    if (kind == "numerical") {
      f.kind = FeatureKind::kNumerical;
      const auto& range = item.contains("range") ? item.at("range") : nlohmann::json();
      if (!range.is_array() || range.size() != 2 || !range[0].is_number() || !range[1].is_number()) {
        throw SchemaError("feature '" + f.name + "': numerical feature needs range [min, max]");
      }
      f.range_min = range[0].get<double>();
      f.range_max = range[1].get<double>();
      if (item.contains("levels")) throw SchemaError("feature '" + f.name + "': numerical feature has levels");
    } else if (kind == "categorical") {
      f.kind = FeatureKind::kCategorical;
      if (!item.contains("levels") || !item.at("levels").is_array()) {
        throw SchemaError("feature '" + f.name + "': categorical feature needs 'levels'");
      }
      for (const auto& lv : item.at("levels")) {
        if (!lv.is_string()) throw SchemaError("feature '" + f.name + "': levels must be strings");
        f.levels.push_back(lv.get<std::string>());
      }
      if (item.contains("admissible_levels")) {
        for (const auto& lv : item.at("admissible_levels")) {
          if (!lv.is_string()) throw SchemaError("feature '" + f.name + "': admissible_levels must be strings");
          const auto label = lv.get<std::string>();
          const auto it = std::find(f.levels.begin(), f.levels.end(), label);
          if (it == f.levels.end()) {
            throw SchemaError("feature '" + f.name + "': admissible level '" + label + "' not in levels");
          }
          f.admissible_levels.push_back(static_cast<std::size_t>(it - f.levels.begin()));
        }
      } else {
        for (std::size_t v = 0; v < f.levels.size(); ++v) f.admissible_levels.push_back(v);
      }
      if (item.contains("embed_dim")) {
        const auto& r = item.at("embed_dim");
        if (!r.is_number_integer() || r.get<long long>() < 1) {
          throw SchemaError("feature '" + f.name + "': embed_dim must be a positive integer");
        }
        f.embed_dim = r.get<std::size_t>();
      }
    } else {
      throw SchemaError("feature '" + f.name + "': kind must be 'numerical' or 'categorical'");
    }
    if (item.contains("immutable")) {
      if (!item.at("immutable").is_boolean()) throw SchemaError("feature '" + f.name + "': immutable must be boolean");
      f.immutable = item.at("immutable").get<bool>();
    }
    features.push_back(std::move(f));
  }
  return Schema(std::move(features));
}

nlohmann::json Schema::to_json() const {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& f : features_) {
    nlohmann::json item;
    item["name"] = f.name;
    item["kind"] = kind_name(f.kind);
    item["immutable"] = f.immutable;
    if (f.numerical()) {
      item["range"] = {f.range_min, f.range_max};
    } else {
      item["levels"] = f.levels;
      nlohmann::json adm = nlohmann::json::array();
      for (std::size_t v : f.admissible_levels) adm.push_back(f.levels[v]);
      item["admissible_levels"] = adm;
      item["embed_dim"] = f.embed_dim;
    }
    out.push_back(item);
  }
  return out;
}

Schema Schema::load(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
  return from_json(doc);
}

void Schema::save(const std::filesystem::path& path) const {
  write_file(path, to_json().dump(2) + "\n");
}

void validate_row(const Schema& schema, std::span<const double> row, std::size_t row_number) {
  if (row.size() != schema.size()) {
    throw ValidationError("row " + std::to_string(row_number) + " has " + std::to_string(row.size()) +
                              " cells, schema has " + std::to_string(schema.size()),
                          row_number, "");
  }
  for (std::size_t p = 0; p < schema.size(); ++p) {
    const auto& f = schema[p];
    const double v = row[p];
    if (!std::isfinite(v)) {
      throw ValidationError("row " + std::to_string(row_number) + ", column \"" + f.name + "\": non-finite value",
                            row_number, f.name);
    }
    if (f.numerical()) {
      if (v < f.range_min || v > f.range_max) {
        throw ValidationError("row " + std::to_string(row_number) + ", column \"" + f.name + "\": value " +
                                  format_double(v) + " outside [" + format_double(f.range_min) + ", " +
                                  format_double(f.range_max) + "]",
                              row_number, f.name);
      }
    } else if (v != std::floor(v) || v < 0 || v >= static_cast<double>(f.cardinality())) {
      throw ValidationError("row " + std::to_string(row_number) + ", column \"" + f.name +
                                "\": invalid level index " + format_double(v),
                            row_number, f.name);
    }
  }
}

CohortMatrix::CohortMatrix(SchemaPtr schema, Matrix values)
    : schema_(std::move(schema)), values_(std::move(values)) {
  if (!schema_) throw ArgumentError("cohort requires a schema");
  if (values_.cols != schema_->size()) {
    throw ArgumentError("cohort has " + std::to_string(values_.cols) + " columns, schema has " +
                        std::to_string(schema_->size()));
  }
  if (values_.data.size() != values_.rows * values_.cols) throw ArgumentError("cohort storage size mismatch");
  for (std::size_t i = 0; i < values_.rows; ++i) validate_row(*schema_, values_.row(i), i + 1);
}

CohortMatrix parse_csv(std::string_view text, SchemaPtr schema) {
  const Schema& s = *schema;
  std::vector<std::string_view> lines;
  {
    std::size_t start = 0;
    while (start <= text.size()) {
      std::size_t nl = text.find('\n', start);
      if (nl == std::string_view::npos) nl = text.size();
      lines.push_back(text.substr(start, nl - start));
      start = nl + 1;
    }
  }
  while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
  if (lines.empty()) throw SchemaError("CSV has no header line");

  std::string_view header_line = lines.front();
  if (header_line.size() >= 3 && header_line.substr(0, 3) == "\xEF\xBB\xBF") header_line.remove_prefix(3);
  const auto header = split_fields(header_line);

  std::vector<std::size_t> column_to_feature(header.size());
  std::vector<bool> seen(s.size(), false);
  for (std::size_t c = 0; c < header.size(); ++c) {
    const std::string name(header[c]);
    if (name.find('"') != std::string::npos) throw ParseError("quoted header fields are not supported", 0, name);
    const auto p = s.find(name);
    if (!p) throw SchemaError("CSV column \"" + name + "\" is not in the schema");
    if (seen[*p]) throw SchemaError("CSV column \"" + name + "\" appears twice");
    seen[*p] = true;
    column_to_feature[c] = *p;
  }
  for (std::size_t p = 0; p < s.size(); ++p) {
    if (!seen[p]) throw SchemaError("CSV is missing column \"" + s[p].name + "\"");
  }

  std::vector<std::unordered_map<std::string_view, std::size_t>> level_index(s.size());
  for (std::size_t p = 0; p < s.size(); ++p) {
    for (std::size_t v = 0; v < s[p].levels.size(); ++v) level_index[p].emplace(s[p].levels[v], v);
  }

  Matrix values(0, s.size());
  std::size_t row_number = 0;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    if (trim(lines[li]).empty()) continue;
    ++row_number;
    const auto fields = split_fields(lines[li]);
    if (fields.size() != header.size()) {
      throw ParseError("row " + std::to_string(row_number) + ": expected " + std::to_string(header.size()) +
                           " fields, found " + std::to_string(fields.size()) +
                           " (quoted commas are not supported)",
                       row_number, "");
    }
    std::vector<double> row(s.size());
    for (std::size_t c = 0; c < fields.size(); ++c) {
      const std::size_t p = column_to_feature[c];
      const auto& f = s[p];
      const std::string_view cell = fields[c];
      if (cell.find('"') != std::string_view::npos) {
        throw ParseError("row " + std::to_string(row_number) + ", column \"" + f.name +
                             "\": quoted fields are not supported",
                         row_number, f.name);
      }
      if (cell.empty()) {
        throw ValidationError("row " + std::to_string(row_number) + ", column \"" + f.name + "\": missing value",
                              row_number, f.name);
      }
      if (f.numerical()) {
        const auto v = parse_real(cell);
        if (!v) {
          throw ParseError("row " + std::to_string(row_number) + ", column \"" + f.name + "\": cannot parse \"" +
                               std::string(cell) + "\" as a number",
                           row_number, f.name);
        }
        row[p] = *v;
      } else {
        const auto it = level_index[p].find(cell);
        if (it == level_index[p].end()) {
          throw ValidationError("row " + std::to_string(row_number) + ", column \"" + f.name +
                                    "\": unknown level \"" + std::string(cell) + "\"",
                                row_number, f.name);
        }
        row[p] = static_cast<double>(it->second);
      }
    }
    validate_row(s, row, row_number);
    values.data.insert(values.data.end(), row.begin(), row.end());
    ++values.rows;
  }
  return CohortMatrix(std::move(schema), std::move(values));
}

CohortMatrix load_csv(const std::filesystem::path& path, SchemaPtr schema) {
  return parse_csv(read_file(path), std::move(schema));
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string to_csv(const CohortMatrix& cohort) {
  const Schema& s = cohort.schema();
  std::string out;
  for (std::size_t p = 0; p < s.size(); ++p) {
    if (p) out += ',';
    out += s[p].name;
  }
  out += '\n';
  for (std::size_t i = 0; i < cohort.row_count(); ++i) {
    const auto row = cohort.row(i);
    for (std::size_t p = 0; p < s.size(); ++p) {
      if (p) out += ',';
      if (s[p].numerical()) {
        out += format_double(row[p]);
      } else {
        out += s[p].levels[static_cast<std::size_t>(row[p])];
      }
    }
    out += '\n';
  }
  return out;
}

void decode_csv(const CohortMatrix& cohort, const std::filesystem::path& path) {
  write_file(path, to_csv(cohort));
}

std::vector<double> project_to_domain(std::span<const double> row, const Schema& schema) {
  std::vector<double> out(row.begin(), row.end());
  for (std::size_t p = 0; p < schema.size() && p < out.size(); ++p) {
    const auto& f = schema[p];
    double v = out[p];
    if (f.numerical()) {
      if (std::isnan(v)) v = f.range_min;
      out[p] = std::clamp(v, f.range_min, f.range_max);
    } else {
      const double hi = static_cast<double>(f.cardinality() - 1);
      if (std::isnan(v)) v = 0.0;
      out[p] = std::clamp(std::round(v), 0.0, hi);
    }
  }
  return out;
}

std::vector<double> load_column(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  std::vector<double> out;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    const auto cell = trim(line);
    if (cell.empty()) continue;
    if (cell.find(',') != std::string_view::npos) {
      throw ParseError(path.string() + ": line " + std::to_string(line_no) + " has more than one column", line_no, "");
    }
    const auto v = parse_real(cell);
    if (!v) {
      if (first) {
        first = false;
        continue;  // header
      }
      throw ParseError(path.string() + ": line " + std::to_string(line_no) + ": cannot parse \"" +
                           std::string(cell) + "\"",
                       line_no, "");
    }
    first = false;
    out.push_back(*v);
  }
  return out;
}

void save_column(const std::vector<double>& values, const std::string& header,
                 const std::filesystem::path& path) {
  std::string out = header + "\n";
  for (double v : values) out += format_double(v) + "\n";
  write_file(path, out);
}

}  // namespace discover
