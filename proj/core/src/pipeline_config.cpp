#include <algorithm>
#include <sstream>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include "hmdap/error.hpp"
#include "hmdap/orchestrator.hpp"

namespace hmdap::pipeline {

namespace pt = boost::property_tree;

std::string_view to_string(Mode mode) { return mode == Mode::Fallback ? "Fallback" : "Fuse"; }

namespace {

pt::ptree read_document(std::string_view xml) {
  std::istringstream in{std::string(xml)};
  pt::ptree doc;
  try {
    pt::read_xml(in, doc, pt::xml_parser::trim_whitespace | pt::xml_parser::no_comments);
  } catch (const pt::xml_parser_error& e) {
    throw Error(ErrorCode::Config, "malformed XML at line " + std::to_string(e.line()) + ": " + e.message(),
                SourcePosition{static_cast<std::int64_t>(e.line()), 0});
  }
  return doc;
}

/// Walks one element's children, enforcing the allowed set.
class ElementReader {
 public:
  ElementReader(const pt::ptree& node, std::string path, const ParseOptions& options)
      : node_(node), path_(std::move(path)), options_(options) {}

  /// Validates children against `allowed`; `repeatable` names may occur more
  /// than once.
  void check(std::initializer_list<std::string_view> allowed, std::initializer_list<std::string_view> repeatable = {}) {
    std::set<std::string, std::less<>> seen;
    for (const auto& [name, child] : node_) {
      const bool known = std::find(allowed.begin(), allowed.end(), name) != allowed.end();
      if (!known) {
        unknown(name == "<xmlattr>" ? path_ + " attributes" : "<" + name + "> in " + path_);
        continue;
      }
      const bool repeat = std::find(repeatable.begin(), repeatable.end(), name) != repeatable.end();
      if (!repeat && !seen.insert(name).second) {
        throw Error(ErrorCode::Config, "element <" + name + "> appears more than once in " + path_);
      }
    }
    if (!node_.data().empty() && !node_.empty()) unknown("text content in " + path_);
  }

  std::optional<std::string> text(std::string_view name) const {
    auto child = node_.get_child_optional(pt::ptree::path_type(std::string(name), '\0'));
    if (!child) return std::nullopt;
    if (!child->empty()) throw Error(ErrorCode::Config, "element <" + std::string(name) + "> in " + path_ + " must hold text");
    return child->data();
  }

  std::string required_text(std::string_view name) const {
    auto v = text(name);
    if (!v || v->empty()) throw Error(ErrorCode::Config, "missing required element <" + std::string(name) + "> in " + path_);
    return *v;
  }

  const pt::ptree* child(std::string_view name) const {
    auto c = node_.get_child_optional(pt::ptree::path_type(std::string(name), '\0'));
    return c ? &*c : nullptr;
  }

  std::vector<std::string> list(std::string_view container, std::string_view item) const {
    std::vector<std::string> out;
    const pt::ptree* c = child(container);
    if (!c) return out;
    ElementReader sub(*c, path_ + "/" + std::string(container), options_);
    sub.check({item}, {item});
    for (const auto& [name, v] : *c) {
      if (name != item) continue;
      if (!v.empty()) throw Error(ErrorCode::Config, "element <" + name + "> must hold text");
      out.push_back(v.data());
    }
    return out;
  }

 private:
  void unknown(const std::string& what) const {
    if (options_.strict) throw Error(ErrorCode::Config, "unknown " + what);
    if (options_.warnings) options_.warnings->push_back("ignored unknown " + what);
  }

  const pt::ptree& node_;
  std::string path_;
  const ParseOptions& options_;
};

const pt::ptree& root_element(const pt::ptree& doc, std::string_view name) {
  if (doc.size() != 1 || doc.front().first != name) {
    std::string found = doc.empty() ? "nothing" : "<" + doc.front().first + ">";
    if (doc.size() > 1) found = std::to_string(doc.size()) + " top-level elements";
    throw Error(ErrorCode::Config, "expected a single <" + std::string(name) + "> root element, found " + found);
  }
  return doc.front().second;
}

void validate_url(const std::string& url) {
  const auto colon = url.find(':');
  if (colon == std::string::npos || colon == 0) {
    throw Error(ErrorCode::Config, "database url '" + url + "' has no scheme; expected local:<catalog-dir>");
  }
  const auto scheme = url.substr(0, colon);
  if (scheme != "local") {
    throw Error(ErrorCode::Unsupported, "no connector for scheme '" + scheme +
                                            "'; only local: is implemented behind the Connector interface");
  }
}

void put_text(pt::ptree& node, const std::string& name, const std::string& value) {
  node.add_child(pt::ptree::path_type(name, '\0'), pt::ptree(value));
}

std::string write_document(const pt::ptree& doc) {
  std::ostringstream out;
  pt::write_xml(out, doc, pt::xml_writer_make_settings<std::string>(' ', 2));
  return out.str();
}

}  // namespace

PipelineConfig parse_ml_config(std::string_view xml, const ParseOptions& options) {
  const pt::ptree doc = read_document(xml);
  const pt::ptree& root = root_element(doc, "configuration");
  ElementReader top(root, "<configuration>", options);
  top.check({"input", "parameter", "algorithm", "primary_sql", "mode", "features", "label", "join"});

  PipelineConfig cfg;
  const pt::ptree* input = top.child("input");
  if (!input) throw Error(ErrorCode::Config, "missing required element <input> in <configuration>");
  ElementReader in(*input, "<input>", options);
  in.check({"database"});
  const pt::ptree* database = in.child("database");
  if (!database) throw Error(ErrorCode::Config, "missing required element <database> in <input>");
  ElementReader db(*database, "<input>/<database>", options);
  db.check({"url", "user", "password", "sql"});
  cfg.url = db.text("url");
  cfg.user = db.text("user");
  cfg.password = db.text("password");
  if (cfg.url && !cfg.url->empty()) validate_url(*cfg.url);
  cfg.input_sql = db.required_text("sql");

  cfg.parameters = top.list("parameter", "value");
  cfg.algorithm = top.required_text("algorithm");
  cfg.primary_sql = top.text("primary_sql");
  if (cfg.primary_sql && cfg.primary_sql->empty()) cfg.primary_sql.reset();
  if (auto mode = top.text("mode")) {
    std::string m = *mode;
    std::transform(m.begin(), m.end(), m.begin(), [](unsigned char c) { return std::tolower(c); });
    if (m == "fallback") cfg.mode = Mode::Fallback;
    else if (m == "fuse") cfg.mode = Mode::Fuse;
    else throw Error(ErrorCode::Config, "unknown mode '" + *mode + "'; expected Fallback or Fuse");
  }
  cfg.feature_cols = top.list("features", "col");
  cfg.label_col = top.text("label");
  if (cfg.label_col && cfg.label_col->empty()) cfg.label_col.reset();
  cfg.join_keys = top.list("join", "key");

  if (options.registry && options.registry->contains(cfg.algorithm)) {
    cfg.parameters = options.registry->complete_params(cfg.algorithm, cfg.parameters);
  }
  return cfg;
}

std::string serialize(const PipelineConfig& cfg) {
  pt::ptree root;
  pt::ptree database;
  if (cfg.url) put_text(database, "url", *cfg.url);
  if (cfg.user) put_text(database, "user", *cfg.user);
  if (cfg.password) put_text(database, "password", *cfg.password);
  put_text(database, "sql", cfg.input_sql);
  pt::ptree input;
  input.add_child("database", database);
  root.add_child("input", input);
  pt::ptree params;
  for (const auto& p : cfg.parameters) put_text(params, "value", p);
  root.add_child("parameter", params);
  put_text(root, "algorithm", cfg.algorithm);
  if (cfg.primary_sql) put_text(root, "primary_sql", *cfg.primary_sql);
  put_text(root, "mode", std::string(to_string(cfg.mode)));
  if (!cfg.feature_cols.empty()) {
    pt::ptree features;
    for (const auto& c : cfg.feature_cols) put_text(features, "col", c);
    root.add_child("features", features);
  }
  if (cfg.label_col) put_text(root, "label", *cfg.label_col);
  if (!cfg.join_keys.empty()) {
    pt::ptree join;
    for (const auto& k : cfg.join_keys) put_text(join, "key", k);
    root.add_child("join", join);
  }
  pt::ptree doc;
  doc.add_child("configuration", root);
  return write_document(doc);
}

DbConfig parse_db_config(std::string_view xml, const ParseOptions& options) {
  const pt::ptree doc = read_document(xml);
  const pt::ptree& root = root_element(doc, "database");
  ElementReader db(root, "<database>", options);
  db.check({"url", "user", "password"});
  DbConfig cfg;
  cfg.url = db.required_text("url");
  validate_url(cfg.url);
  cfg.user = db.text("user").value_or("");
  cfg.password = db.text("password").value_or("");
  return cfg;
}

std::string serialize(const DbConfig& cfg) {
  pt::ptree root;
  put_text(root, "url", cfg.url);
  put_text(root, "user", cfg.user);
  put_text(root, "password", cfg.password);
  pt::ptree doc;
  doc.add_child("database", root);
  return write_document(doc);
}

DbConfig effective_db(const PipelineConfig& config, const DbConfig& supplied) {
  DbConfig out = supplied;
  if (config.url && !config.url->empty()) out.url = *config.url;
  if (config.user && !config.user->empty()) out.user = *config.user;
  if (config.password && !config.password->empty()) out.password = *config.password;
  if (out.url.empty()) throw Error(ErrorCode::Config, "no database url in either configuration");
  validate_url(out.url);
  return out;
}

}  // namespace hmdap::pipeline
