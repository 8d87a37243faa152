#include "hmdap/catalog.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "hmdap/csv.hpp"
#include "hmdap/error.hpp"

namespace hmdap {

namespace fs = std::filesystem;

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

namespace {

// Bitmask of types a raw field is compatible with.
constexpr unsigned kBool = 1, kInt = 2, kFloat = 4, kUtf8 = 8;

unsigned compatible_types(std::string_view text) {
  unsigned mask = kUtf8;
  if (parse_bool(text)) mask |= kBool;
  if (parse_int64(text)) mask |= kInt | kFloat;
  if (parse_float64(text)) mask |= kFloat;
  return mask;
}

ColumnType narrowest(unsigned mask, bool saw_value) {
  if (!saw_value) return ColumnType::Utf8;
  if (mask & kBool) return ColumnType::Bool;
  if (mask & kInt) return ColumnType::Int64;
  if (mask & kFloat) return ColumnType::Float64;
  return ColumnType::Utf8;
}

}  // namespace

Schema infer_schema(const fs::path& path, char delimiter, bool has_header, std::size_t sample_rows) {
  if (sample_rows == 0) throw Error(ErrorCode::InvalidArgument, "sample_rows must be at least 1");
  const std::string text = read_text_file(path);
  const auto records = csv::parse(text, delimiter, sample_rows + (has_header ? 1 : 0));
  if (records.empty()) {
    throw Error(ErrorCode::SchemaInference, "cannot infer a schema from empty file '" + path.string() + "'");
  }
  const std::size_t width = records.front().fields.size();
  std::vector<unsigned> masks(width, kBool | kInt | kFloat | kUtf8);
  std::vector<bool> seen(width, false);
  for (std::size_t r = has_header ? 1 : 0; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.fields.size() != width) {
      throw Error(ErrorCode::SchemaInference,
                  "ragged row on line " + std::to_string(rec.line) + " of '" + path.string() + "': expected " +
                      std::to_string(width) + " fields, found " + std::to_string(rec.fields.size()));
    }
    for (std::size_t c = 0; c < width; ++c) {
      const auto& f = rec.fields[c];
      if (f.text.empty()) continue;
      masks[c] &= compatible_types(f.text);
      seen[c] = true;
    }
  }
  std::vector<Column> columns;
  for (std::size_t c = 0; c < width; ++c) {
    std::string name = has_header ? records.front().fields[c].text : "col" + std::to_string(c);
    if (name.empty()) name = "col" + std::to_string(c);
    columns.push_back({std::move(name), narrowest(masks[c], seen[c])});
  }
  try {
    return Schema(std::move(columns));
  } catch (const Error& e) {
    throw Error(ErrorCode::SchemaInference, std::string(e.what()) + " (header of '" + path.string() + "')");
  }
}

Relation scan_file(const CatalogEntry& entry, const fs::path& resolved_path) {
  const std::string text = read_text_file(resolved_path);
  auto records = csv::parse(text, entry.delimiter);
  const auto& schema = entry.schema;
  std::vector<Row> rows;
  rows.reserve(records.size());
  for (std::size_t r = entry.has_header ? 1 : 0; r < records.size(); ++r) {
    auto& rec = records[r];
    if (rec.fields.size() != schema.size()) {
      throw Error(ErrorCode::Scan, "table '" + entry.table_name + "' line " + std::to_string(rec.line) +
                                       ": expected " + std::to_string(schema.size()) + " fields, found " +
                                       std::to_string(rec.fields.size()));
    }
    Row row;
    row.reserve(schema.size());
    for (std::size_t c = 0; c < schema.size(); ++c) {
      auto& f = rec.fields[c];
      const ColumnType type = schema[c].type;
      if (f.text.empty() && !(f.quoted && type == ColumnType::Utf8)) {
        row.emplace_back();
        continue;
      }
      auto fail = [&] {
        return Error(ErrorCode::Scan, "table '" + entry.table_name + "' line " + std::to_string(rec.line) +
                                          ", column '" + schema[c].name + "': cannot parse '" + f.text + "' as " +
                                          std::string(to_string(type)));
      };
      switch (type) {
        case ColumnType::Bool:
          if (auto v = parse_bool(f.text)) row.emplace_back(*v); else throw fail();
          break;
        case ColumnType::Int64:
          if (auto v = parse_int64(f.text)) row.emplace_back(*v); else throw fail();
          break;
        case ColumnType::Float64:
          if (auto v = parse_float64(f.text)) row.emplace_back(*v); else throw fail();
          break;
        case ColumnType::Utf8: row.emplace_back(std::move(f.text)); break;
      }
    }
    rows.push_back(std::move(row));
  }
  return Relation(schema, std::move(rows));
}

std::string manifest_to_json(const std::vector<CatalogEntry>& entries) {
  auto doc = nlohmann::json::array();
  for (const auto& e : entries) {
    auto columns = nlohmann::json::array();
    for (const auto& c : e.schema.columns()) {
      columns.push_back({{"name", c.name}, {"type", std::string(to_string(c.type))}});
    }
    doc.push_back({{"table_name", e.table_name},
                   {"source_path", e.source_path.generic_string()},
                   {"format", "DelimitedText"},
                   {"delimiter", std::string(1, e.delimiter)},
                   {"has_header", e.has_header},
                   {"columns", columns}});
  }
  return doc.dump(2) + "\n";
}

std::vector<CatalogEntry> manifest_from_json(std::string_view text) {
  std::vector<CatalogEntry> out;
  try {
    const auto doc = nlohmann::json::parse(text);
    if (!doc.is_array()) throw Error(ErrorCode::Config, "catalog manifest must be a JSON array of entries");
    for (const auto& j : doc) {
      CatalogEntry e;
      e.table_name = j.at("table_name").get<std::string>();
      e.source_path = j.at("source_path").get<std::string>();
      if (j.at("format").get<std::string>() != "DelimitedText") {
        throw Error(ErrorCode::Config, "table '" + e.table_name + "': unsupported format '" +
                                           j.at("format").get<std::string>() + "'");
      }
      const auto delim = j.at("delimiter").get<std::string>();
      if (delim.size() != 1) {
        throw Error(ErrorCode::Config, "table '" + e.table_name + "': delimiter must be a single character");
      }
      e.delimiter = delim[0];
      e.has_header = j.at("has_header").get<bool>();
      std::vector<Column> columns;
      for (const auto& c : j.at("columns")) {
        auto type = parse_column_type(c.at("type").get<std::string>());
        if (!type) {
          throw Error(ErrorCode::Config, "table '" + e.table_name + "': unknown column type '" +
                                             c.at("type").get<std::string>() + "'");
        }
        columns.push_back({c.at("name").get<std::string>(), *type});
      }
      e.schema = Schema(std::move(columns));
      out.push_back(std::move(e));
    }
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorCode::Config, std::string("malformed catalog manifest: ") + ex.what());
  }
  return out;
}

Catalog::Catalog(fs::path base_dir) : base_dir_(std::move(base_dir)) {
  const auto manifest = base_dir_ / kManifestName;
  if (fs::exists(manifest)) {
    for (auto& e : manifest_from_json(read_text_file(manifest))) register_table(std::move(e));
  }
}

void Catalog::register_table(CatalogEntry entry) {
  if (entry.table_name.empty()) throw Error(ErrorCode::InvalidArgument, "table name must not be empty");
  if (entry.schema.empty()) {
    throw Error(ErrorCode::InvalidArgument, "table '" + entry.table_name + "' has an empty schema");
  }
  std::unique_lock lock(mutex_);
  if (entries_.contains(entry.table_name)) {
    throw Error(ErrorCode::Conflict, "table '" + entry.table_name + "' is already registered");
  }
  auto name = entry.table_name;
  entries_.emplace(std::move(name), std::move(entry));
}

CatalogEntry Catalog::load_file(const std::string& name, const fs::path& path, char delimiter, bool has_header) {
  CatalogEntry e;
  e.table_name = name;
  e.source_path = path;
  e.delimiter = delimiter;
  e.has_header = has_header;
  e.schema = infer_schema(resolve(path), delimiter, has_header);
  register_table(e);
  return e;
}

std::vector<CatalogEntry> Catalog::list_tables() const {
  std::shared_lock lock(mutex_);
  std::vector<CatalogEntry> out;
  for (const auto& [_, e] : entries_) out.push_back(e);
  return out;
}

CatalogEntry Catalog::entry(std::string_view name) const {
  std::shared_lock lock(mutex_);
  auto it = entries_.find(name);
  if (it == entries_.end()) throw Error(ErrorCode::NotFound, "unknown table '" + std::string(name) + "'");
  return it->second;
}

fs::path Catalog::resolve(const fs::path& source_path) const {
  return source_path.is_absolute() ? source_path : base_dir_ / source_path;
}

Relation Catalog::scan(std::string_view name) const {
  const auto e = entry(name);
  return scan_file(e, resolve(e.source_path));
}

void Catalog::save() const {
  fs::create_directories(base_dir_);
  const auto path = base_dir_ / kManifestName;
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write '" + path.string() + "'");
  out << manifest_to_json(list_tables());
}

bool Catalog::has_table(std::string_view name) const {
  std::shared_lock lock(mutex_);
  return entries_.find(name) != entries_.end();
}

Schema Catalog::table_schema(std::string_view name) const { return entry(name).schema; }

std::shared_ptr<const Relation> Catalog::table_data(std::string_view name) const {
  {
    std::shared_lock lock(mutex_);
    if (auto it = cache_.find(name); it != cache_.end()) return it->second;
  }
  auto rel = std::make_shared<const Relation>(scan(name));
  std::unique_lock lock(mutex_);
  auto [it, _] = cache_.emplace(std::string(name), std::move(rel));
  return it->second;
}

std::vector<std::string> Catalog::table_names() const {
  std::shared_lock lock(mutex_);
  std::vector<std::string> out;
  for (const auto& [name, _] : entries_) out.push_back(name);
  return out;
}

void MemoryTables::add(std::string name, Relation relation) {
  relation.validate();
  if (tables_.contains(name)) throw Error(ErrorCode::Conflict, "table '" + name + "' is already registered");
  tables_.emplace(std::move(name), std::make_shared<const Relation>(std::move(relation)));
}

bool MemoryTables::has_table(std::string_view name) const { return tables_.find(name) != tables_.end(); }

Schema MemoryTables::table_schema(std::string_view name) const { return table_data(name)->schema(); }

std::shared_ptr<const Relation> MemoryTables::table_data(std::string_view name) const {
  auto it = tables_.find(name);
  if (it == tables_.end()) throw Error(ErrorCode::NotFound, "unknown table '" + std::string(name) + "'");
  return it->second;
}

std::vector<std::string> MemoryTables::table_names() const {
  std::vector<std::string> out;
  for (const auto& [name, _] : tables_) out.push_back(name);
  return out;
}

}  // namespace hmdap
