#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "hmdap/relation.hpp"

namespace hmdap {

enum class StorageFormat { DelimitedText };

struct CatalogEntry {
  std::string table_name;
  std::filesystem::path source_path;
  StorageFormat format = StorageFormat::DelimitedText;
  char delimiter = ',';
  bool has_header = true;
  Schema schema;

  friend bool operator==(const CatalogEntry&, const CatalogEntry&) = default;
};

/// Anything that can resolve table names to schemas and data. The planner,
/// executor and reference interpreter depend only on this.
class TableProvider {
 public:
  virtual ~TableProvider() = default;
  virtual bool has_table(std::string_view name) const = 0;
  /// Throws NotFound for unknown tables.
  virtual Schema table_schema(std::string_view name) const = 0;
  virtual std::shared_ptr<const Relation> table_data(std::string_view name) const = 0;
  virtual std::vector<std::string> table_names() const = 0;
};

inline constexpr std::size_t kDefaultInferenceRows = 1000;

/// Narrowest type per field over the first sample_rows records:
/// Bool < Int64 < Float64 < Utf8. Columns with no non-empty sampled value are
/// Utf8.
Schema infer_schema(const std::filesystem::path& path, char delimiter, bool has_header,
                    std::size_t sample_rows = kDefaultInferenceRows);

/// Parses a delimited file per the entry's schema into one partition.
Relation scan_file(const CatalogEntry& entry, const std::filesystem::path& resolved_path);

/// Named tables over delimited-text files, optionally persisted as
/// `catalog.json` in its base directory. Relative source paths resolve
/// against the base directory. Many readers, one writer.
class Catalog : public TableProvider {
 public:
  static constexpr std::string_view kManifestName = "catalog.json";

  /// In-memory catalog; relative paths resolve against the working directory.
  Catalog() = default;
  /// Loads `<base_dir>/catalog.json` when present.
  explicit Catalog(std::filesystem::path base_dir);

  Catalog(const Catalog&) = delete;
  Catalog& operator=(const Catalog&) = delete;

  const std::filesystem::path& base_dir() const noexcept { return base_dir_; }

  /// Throws Conflict when the name is taken, InvalidArgument for an empty
  /// schema.
  void register_table(CatalogEntry entry);
  /// Infers the schema and registers the file under `name`.
  CatalogEntry load_file(const std::string& name, const std::filesystem::path& path, char delimiter = ',',
                         bool has_header = true);

  /// Sorted by table name.
  std::vector<CatalogEntry> list_tables() const;
  CatalogEntry entry(std::string_view name) const;
  std::filesystem::path resolve(const std::filesystem::path& source_path) const;

  /// Fresh parse of the table's file.
  Relation scan(std::string_view name) const;

  /// Writes the manifest to `<base_dir>/catalog.json`.
  void save() const;

  bool has_table(std::string_view name) const override;
  Schema table_schema(std::string_view name) const override;
  /// Cached scan result; shared and immutable.
  std::shared_ptr<const Relation> table_data(std::string_view name) const override;
  std::vector<std::string> table_names() const override;

 private:
  std::filesystem::path base_dir_ = ".";
  mutable std::shared_mutex mutex_;
  std::map<std::string, CatalogEntry, std::less<>> entries_;
  mutable std::map<std::string, std::shared_ptr<const Relation>, std::less<>> cache_;
};

/// Manifest encoding shared by Catalog::save and the loader.
std::string manifest_to_json(const std::vector<CatalogEntry>& entries);
std::vector<CatalogEntry> manifest_from_json(std::string_view text);

/// In-memory tables, used by tests and by pipeline stages that hand
/// relations around without files.
class MemoryTables : public TableProvider {
 public:
  void add(std::string name, Relation relation);

  bool has_table(std::string_view name) const override;
  Schema table_schema(std::string_view name) const override;
  std::shared_ptr<const Relation> table_data(std::string_view name) const override;
  std::vector<std::string> table_names() const override;

 private:
  std::map<std::string, std::shared_ptr<const Relation>, std::less<>> tables_;
};

std::string read_text_file(const std::filesystem::path& path);

}  // namespace hmdap
