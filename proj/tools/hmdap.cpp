// hmdap: catalog management, ad-hoc queries, pipeline runs and the HTTP
// service from the command line.

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "hmdap/catalog.hpp"
#include "hmdap/csv.hpp"
#include "hmdap/error.hpp"
#include "hmdap/executor.hpp"
#include "hmdap/optimizer.hpp"
#include "hmdap/orchestrator.hpp"
#include "hmdap/service.hpp"
#include "hmdap/sql.hpp"

namespace fs = std::filesystem;
using namespace hmdap;

namespace {

constexpr int kExitUser = 1;
constexpr int kExitInternal = 2;

struct Globals {
  std::string data_dir;
  std::size_t workers = 1;
};

/// Paths inside the data dir are stored relative so the catalog can move.
fs::path catalog_path(const fs::path& file, const fs::path& data_dir) {
  const fs::path abs = fs::absolute(file).lexically_normal();
  const fs::path rel = abs.lexically_relative(fs::absolute(data_dir).lexically_normal());
  if (rel.empty() || *rel.begin() == "..") return abs;
  return rel;
}

char parse_delimiter(const std::string& text) {
  if (text == "\\t" || text == "tab") return '\t';
  if (text.size() != 1) throw Error(ErrorCode::InvalidArgument, "delimiter must be a single character");
  return text[0];
}

void print_relation(const Relation& r, bool as_csv, std::size_t max_rows) {
  if (as_csv) {
    std::cout << csv::write(r);
  } else {
    std::cout << format_table(r, max_rows);
  }
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw Error(ErrorCode::Io, "cannot write '" + path.string() + "'");
}

int cmd_load(const Globals& g, const std::string& name, const std::string& path, const std::string& delimiter,
             bool no_header) {
  fs::create_directories(g.data_dir);
  Catalog catalog(g.data_dir);
  const auto entry = catalog.load_file(name, catalog_path(path, g.data_dir), parse_delimiter(delimiter), !no_header);
  catalog.save();
  std::cout << "registered " << entry.table_name << " " << entry.schema.to_string() << "\n";
  return 0;
}

int cmd_tables(const Globals& g) {
  Catalog catalog(g.data_dir);
  for (const auto& e : catalog.list_tables()) {
    std::cout << e.table_name << " " << e.schema.to_string() << " <- " << e.source_path.string() << "\n";
  }
  return 0;
}

int cmd_analyze(const Globals& g, std::vector<std::string> tables) {
  Catalog catalog(g.data_dir);
  const fs::path stats_path = fs::path(g.data_dir) / opt::kStatsFileName;
  opt::StatsMap stats = opt::load_stats(stats_path);
  if (tables.empty()) tables = catalog.table_names();
  for (const auto& t : tables) {
    const auto data = catalog.table_data(t);
    stats[t] = opt::collect_stats(*data);
    std::cout << t << ": " << stats[t].row_count << " rows\n";
  }
  opt::save_stats(stats_path, stats);
  return 0;
}

int cmd_query(const Globals& g, const std::string& sql, bool as_csv, std::size_t max_rows, bool explain) {
  Catalog catalog(g.data_dir);
  const auto stats = opt::load_stats(fs::path(g.data_dir) / opt::kStatsFileName);
  if (explain) {
    const PlanPtr plan = opt::optimize(sql::plan_sql(sql, catalog), stats);
    std::cout << exec::explain(*exec::compile_physical(plan, stats, catalog));
    return 0;
  }
  exec::QueryOptions options;
  options.workers = g.workers;
  print_relation(exec::run_query(sql, catalog, stats, options), as_csv, max_rows);
  return 0;
}

int cmd_run(const Globals& g, const std::string& ml_path, const std::string& db_path, const std::string& output,
            bool as_csv, bool lenient, std::size_t max_rows) {
  std::vector<std::string> warnings;
  pipeline::Engine engine;
  pipeline::ParseOptions parse{!lenient, &warnings, &engine.registry};
  const auto ml_cfg = pipeline::parse_ml_config(read_text_file(ml_path), parse);
  const auto db_cfg = pipeline::parse_db_config(read_text_file(db_path), parse);
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";

  // Relative local: urls resolve against the file that supplied them.
  const bool inline_url = ml_cfg.url && !ml_cfg.url->empty();
  engine.connect = pipeline::local_connector_factory(fs::absolute(inline_url ? ml_path : db_path).parent_path());
  engine.workers = g.workers;
  const auto result = pipeline::execute_pipeline(ml_cfg, db_cfg, engine);

  std::string branches;
  for (auto b : result.branches_run) branches += (branches.empty() ? "" : "+") + std::string(pipeline::to_string(b));
  std::cerr << "mode " << pipeline::to_string(ml_cfg.mode) << ", branches " << branches << ", "
            << result.result.row_count() << " rows\n";
  if (!output.empty()) write_file(output, csv::write(result.result));
  if (output.empty() || as_csv) print_relation(result.result, as_csv, max_rows);
  return 0;
}

service::Server* g_server = nullptr;

extern "C" void handle_signal(int) {
  if (g_server) g_server->stop();
}

int cmd_serve(const Globals& g, const std::string& host, int port, std::size_t jobs, std::size_t page_size) {
  service::ServiceOptions options;
  options.data_dir = g.data_dir;
  options.workers = g.workers;
  options.max_running_jobs = jobs;
  options.page_size = page_size;
  service::Server server(options);
  g_server = &server;
  std::signal(SIGINT, handle_signal);
  std::signal(SIGTERM, handle_signal);
  std::cerr << "serving " << fs::absolute(g.data_dir).string() << " on http://" << host << ":" << port << "\n";
  server.listen(host, port);
  g_server = nullptr;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hMDAP hybrid analytics engine"};
  app.require_subcommand(1);
  Globals g;
  const char* env_dir = std::getenv("HMDAP_DATA_DIR");
  g.data_dir = env_dir && *env_dir ? env_dir : ".";
  app.add_option("--data-dir", g.data_dir, "Catalog directory (default $HMDAP_DATA_DIR or .)");
  app.add_option("--workers", g.workers, "Worker threads per query")->check(CLI::PositiveNumber);

  std::function<int()> action;

  auto* load = app.add_subcommand("load", "Register a delimited file as a table and infer its schema");
  std::string load_name, load_path, delimiter = ",";
  bool no_header = false;
  load->add_option("name", load_name, "Table name")->required();
  load->add_option("path", load_path, "Delimited text file")->required();
  load->add_option("--delimiter", delimiter, "Field delimiter");
  load->add_flag("--no-header", no_header, "First line is data");
  load->callback([&] { action = [&] { return cmd_load(g, load_name, load_path, delimiter, no_header); }; });

  auto* tables = app.add_subcommand("tables", "List registered tables");
  tables->callback([&] { action = [&] { return cmd_tables(g); }; });

  auto* analyze = app.add_subcommand("analyze", "Refresh optimizer statistics");
  std::vector<std::string> analyze_tables;
  analyze->add_option("tables", analyze_tables, "Tables to analyze (default all)");
  analyze->callback([&] { action = [&] { return cmd_analyze(g, analyze_tables); }; });

  std::size_t max_rows = 50;
  bool as_csv = false;
  auto* query = app.add_subcommand("query", "Run a SQL query");
  std::string sql;
  bool explain = false;
  query->add_option("sql", sql, "Query text")->required();
  query->add_flag("--csv", as_csv, "Print CSV instead of a table");
  query->add_flag("--explain", explain, "Print the physical plan only");
  query->add_option("--max-rows", max_rows, "Rows shown in table output");
  query->callback([&] { action = [&] { return cmd_query(g, sql, as_csv, max_rows, explain); }; });

  auto* run = app.add_subcommand("run", "Execute a pipeline from its two configuration files");
  std::string ml_path, db_path, output;
  bool lenient = false;
  run->add_option("--ml-config", ml_path, "Machine learning configuration")->required()->check(CLI::ExistingFile);
  run->add_option("--db-config", db_path, "Database configuration")->required()->check(CLI::ExistingFile);
  run->add_option("-o,--output", output, "Write the result as CSV");
  run->add_flag("--csv", as_csv, "Print CSV instead of a table");
  run->add_flag("--lenient", lenient, "Warn about unknown elements instead of failing");
  run->add_option("--max-rows", max_rows, "Rows shown in table output");
  run->callback([&] { action = [&] { return cmd_run(g, ml_path, db_path, output, as_csv, lenient, max_rows); }; });

  auto* serve = app.add_subcommand("serve", "Start the HTTP service");
  std::string host = "127.0.0.1";
  int port = 8080;
  std::size_t jobs = 1, page_size = 1000;
  serve->add_option("--host", host, "Bind address");
  serve->add_option("--port", port, "Port")->check(CLI::Range(0, 65535));
  serve->add_option("--jobs", jobs, "Pipelines running at once")->check(CLI::PositiveNumber);
  serve->add_option("--page-size", page_size, "Default result page size")->check(CLI::PositiveNumber);
  serve->callback([&] { action = [&] { return cmd_serve(g, host, port, jobs, page_size); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUser;
  }

  try {
    return action();
  } catch (const Error& e) {
    std::cerr << "error [" << to_string(e.code()) << "]";
    if (const auto& pos = e.position()) {
      std::cerr << " at line " << pos->line;
      if (pos->column > 0) std::cerr << ", column " << pos->column;
    }
    std::cerr << ": " << e.what() << "\n";
    return e.is_user_error() ? kExitUser : kExitInternal;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
}
