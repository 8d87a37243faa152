#include "hmdap/service.hpp"

#include <algorithm>
#include <ctime>

#include <httplib.h>

#include "hmdap/catalog.hpp"
#include "hmdap/executor.hpp"
#include "hmdap/graph.hpp"
#include "hmdap/optimizer.hpp"
#include "hmdap/orchestrator.hpp"

namespace hmdap::service {

using nlohmann::json;

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotFound: return 404;
    case ErrorCode::Conflict:
    case ErrorCode::Cancelled: return 409;
    case ErrorCode::Runtime:
    case ErrorCode::Io: return 422;
    case ErrorCode::Unsupported: return 501;
    case ErrorCode::Internal: return 500;
    case ErrorCode::InvalidArgument:
    case ErrorCode::Syntax:
    case ErrorCode::Plan:
    case ErrorCode::Type:
    case ErrorCode::SchemaInference:
    case ErrorCode::Scan:
    case ErrorCode::Config: return 400;
  }
  return 500;
}

json error_json(const Error& error) {
  json body{{"code", std::string(to_string(error.code()))}, {"message", error.what()}};
  if (const auto& pos = error.position()) {
    body["line"] = pos->line;
    if (pos->column > 0) body["column"] = pos->column;
  }
  return json{{"error", body}};
}

json value_to_json(const Value& v) {
  if (v.is_null()) return nullptr;
  if (v.is_bool()) return v.as_bool();
  if (v.is_int()) return v.as_int();
  if (v.is_float()) return v.as_float();
  return v.as_string();
}

json relation_to_json(const Relation& r, std::size_t offset, std::size_t limit) {
  json columns = json::array();
  for (const auto& c : r.schema().columns()) {
    columns.push_back({{"name", c.name}, {"type", std::string(to_string(c.type))}});
  }
  json rows = json::array();
  std::size_t index = 0;
  for (const auto& part : r.partitions()) {
    for (const auto& row : part) {
      if (index >= offset && rows.size() < limit) {
        json out = json::array();
        for (const auto& v : row) out.push_back(value_to_json(v));
        rows.push_back(std::move(out));
      }
      ++index;
    }
  }
  return json{{"columns", columns}, {"rows", rows}, {"total_rows", r.row_count()}, {"offset", offset}};
}

namespace {

std::string iso_time(Clock::time_point t) {
  const std::time_t secs = Clock::to_time_t(t);
  std::tm tm{};
  gmtime_r(&secs, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json parse_body(const httplib::Request& req) {
  json body = json::parse(req.body, nullptr, false);
  if (body.is_discarded() || !body.is_object()) {
    throw Error(ErrorCode::InvalidArgument, "request body must be a JSON object");
  }
  return body;
}

std::string required_string(const json& body, const std::string& key) {
  auto it = body.find(key);
  if (it == body.end() || !it->is_string() || it->get<std::string>().empty()) {
    throw Error(ErrorCode::InvalidArgument, "field '" + key + "' must be a non-empty string");
  }
  return it->get<std::string>();
}

std::optional<std::string> optional_string(const json& body, const std::string& key) {
  auto it = body.find(key);
  if (it == body.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw Error(ErrorCode::InvalidArgument, "field '" + key + "' must be a string");
  return it->get<std::string>();
}

std::size_t query_size(const httplib::Request& req, const std::string& key, std::size_t fallback) {
  if (!req.has_param(key)) return fallback;
  const std::string text = req.get_param_value(key);
  std::size_t pos = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(text, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != text.size() || text.front() == '-') {
    throw Error(ErrorCode::InvalidArgument, "query parameter '" + key + "' must be a non-negative integer");
  }
  return static_cast<std::size_t>(v);
}

void send_json(httplib::Response& res, const json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, const Error& e) { send_json(res, error_json(e), http_status(e.code())); }

using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

/// Converts thrown errors into error JSON. Non-engine exceptions become a
/// generic Internal error so nothing leaks.
Handler guarded(Handler h) {
  return [h = std::move(h)](const httplib::Request& req, httplib::Response& res) {
    try {
      h(req, res);
    } catch (const Error& e) {
      send_error(res, e);
    } catch (const json::exception& e) {
      send_error(res, Error(ErrorCode::InvalidArgument, std::string("bad JSON field: ") + e.what()));
    } catch (const std::exception&) {
      send_error(res, Error(ErrorCode::Internal, "internal server error"));
    }
  };
}

}  // namespace

struct Server::Impl {
  explicit Impl(ServiceOptions opts)
      : options(std::move(opts)),
        catalog(options.data_dir),
        stats(opt::load_stats(options.data_dir / opt::kStatsFileName)),
        jobs(make_engine(), std::max<std::size_t>(options.max_running_jobs, 1)) {
    if (options.page_size == 0) throw Error(ErrorCode::InvalidArgument, "page size must be positive");
    routes();
  }

  pipeline::Engine make_engine() const {
    pipeline::Engine engine;
    engine.connect = pipeline::local_connector_factory(options.data_dir);
    engine.workers = std::max<std::size_t>(options.workers, 1);
    return engine;
  }

  json job_json(const JobSnapshot& s, std::optional<std::pair<std::size_t, std::size_t>> page) const {
    json out{{"id", s.id}, {"status", std::string(to_string(s.status))}, {"submitted_at", iso_time(s.submitted_at)}};
    out["finished_at"] = s.finished_at ? json(iso_time(*s.finished_at)) : json(nullptr);
    if (!s.stage.empty()) out["stage"] = s.stage;
    if (s.error) {
      out["error"] = {{"code", std::string(to_string(s.error_code.value_or(ErrorCode::Internal)))},
                      {"message", *s.error}};
    }
    if (s.result && page) {
      out["result"] = relation_to_json(s.result->result, page->first, page->second);
      out["result"]["limit"] = page->second;
      json branches = json::array();
      for (auto b : s.result->branches_run) branches.push_back(std::string(pipeline::to_string(b)));
      out["branches_run"] = branches;
      json timings = json::array();
      for (const auto& t : s.result->timings) timings.push_back({{"stage", t.stage}, {"ms", t.ms}});
      out["timings"] = timings;
      if (s.result->model_summary) out["model"] = *s.result->model_summary;
    }
    return out;
  }

  graph::Graph load_graph(const json& body) const {
    const auto table = required_string(body, "table");
    const auto data = catalog.table_data(table);
    WorkerPool pool(std::max<std::size_t>(options.workers, 1));
    return graph::relation_to_graph(repartition(*data, pool.size()), required_string(body, "src_col"),
                                    required_string(body, "dst_col"), optional_string(body, "weight_col"), &pool);
  }

  void routes() {
    http.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                              {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                              {"Access-Control-Allow-Headers", "Content-Type"}});
    http.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
    http.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr) {
      send_error(res, Error(ErrorCode::Internal, "internal server error"));
    });
    http.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
      if (!res.body.empty()) return;
      if (res.status == 404) {
        send_error(res, Error(ErrorCode::NotFound, "no route for " + req.method + " " + req.path));
      } else if (res.status >= 400) {
        send_json(res, json{{"error", {{"code", "http_" + std::to_string(res.status)}, {"message", "request rejected"}}}},
                  res.status);
      }
    });

    http.Get("/health", guarded([](const httplib::Request&, httplib::Response& res) {
               send_json(res, {{"status", "ok"}});
             }));

    http.Get("/tables", guarded([this](const httplib::Request&, httplib::Response& res) {
               json tables = json::array();
               for (const auto& e : catalog.list_tables()) {
                 json columns = json::array();
                 for (const auto& c : e.schema.columns()) {
                   columns.push_back({{"name", c.name}, {"type", std::string(to_string(c.type))}});
                 }
                 json t{{"name", e.table_name}, {"source_path", e.source_path.string()}, {"columns", columns}};
                 if (auto it = stats.find(e.table_name); it != stats.end()) t["row_count"] = it->second.row_count;
                 tables.push_back(std::move(t));
               }
               send_json(res, {{"tables", tables}});
             }));

    http.Post("/query", guarded([this](const httplib::Request& req, httplib::Response& res) {
                const json body = parse_body(req);
                exec::QueryOptions q;
                q.workers = std::max<std::size_t>(options.workers, 1);
                const Relation r = exec::run_query(required_string(body, "sql"), catalog, stats, q);
                send_json(res, relation_to_json(r));
              }));

    http.Post("/graph/shortest-paths", guarded([this](const httplib::Request& req, httplib::Response& res) {
                const json body = parse_body(req);
                const graph::Graph g = load_graph(body);
                auto it = body.find("source");
                if (it == body.end() || !(it->is_string() || it->is_number_integer())) {
                  throw Error(ErrorCode::InvalidArgument, "field 'source' must be a node id");
                }
                const Value source = it->is_string() ? graph::node_from_text(g, it->get<std::string>())
                                                     : Value(it->get<std::int64_t>());
                send_json(res, relation_to_json(graph::shortest_paths(g, source)));
              }));

    http.Post("/graph/components", guarded([this](const httplib::Request& req, httplib::Response& res) {
                const json body = parse_body(req);
                send_json(res, relation_to_json(graph::connected_components(load_graph(body))));
              }));

    http.Post("/pipelines", guarded([this](const httplib::Request& req, httplib::Response& res) {
                std::string ml_text, db_text;
                bool strict = true;
                if (req.is_multipart_form_data()) {
                  if (!req.has_file("ml_config") || !req.has_file("db_config")) {
                    throw Error(ErrorCode::InvalidArgument, "multipart upload needs ml_config and db_config parts");
                  }
                  ml_text = req.get_file_value("ml_config").content;
                  db_text = req.get_file_value("db_config").content;
                  if (req.has_file("strict")) strict = req.get_file_value("strict").content != "false";
                } else {
                  const json body = parse_body(req);
                  ml_text = required_string(body, "ml_config");
                  db_text = required_string(body, "db_config");
                  if (auto it = body.find("strict"); it != body.end()) strict = it->get<bool>();
                }
                std::vector<std::string> warnings;
                const auto registry = ml::EstimatorRegistry::with_builtins();
                pipeline::ParseOptions parse{strict, &warnings, &registry};
                auto ml_cfg = pipeline::parse_ml_config(ml_text, parse);
                auto db_cfg = pipeline::parse_db_config(db_text, parse);
                if (!registry.contains(ml_cfg.algorithm)) {
                  std::string known;
                  for (const auto& n : registry.names()) known += (known.empty() ? "" : ", ") + n;
                  throw Error(ErrorCode::Config, "unknown algorithm '" + ml_cfg.algorithm + "'; known: " + known);
                }
                const auto id = jobs.submit(std::move(ml_cfg), std::move(db_cfg));
                send_json(res, {{"id", id}, {"status", "Queued"}, {"warnings", warnings}}, 202);
              }));

    http.Get("/pipelines", guarded([this](const httplib::Request&, httplib::Response& res) {
               json list = json::array();
               for (const auto& s : jobs.list()) list.push_back(job_json(s, std::nullopt));
               send_json(res, {{"pipelines", list}});
             }));

    http.Get(R"(/pipelines/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
               const auto offset = query_size(req, "offset", 0);
               const auto limit = query_size(req, "limit", options.page_size);
               send_json(res, job_json(jobs.get(req.matches[1]), std::make_pair(offset, limit)));
             }));

    http.Post(R"(/pipelines/([^/]+)/cancel)", guarded([this](const httplib::Request& req, httplib::Response& res) {
                send_json(res, job_json(jobs.cancel(req.matches[1]), std::nullopt));
              }));

    http.Get(R"(/pipelines/([^/]+)/result\.csv)", guarded([this](const httplib::Request& req, httplib::Response& res) {
               const std::string id = req.matches[1];
               res.set_content(jobs.export_result(id), "text/csv");
               res.set_header("Content-Disposition", "attachment; filename=\"" + id + ".csv\"");
             }));
  }

  ServiceOptions options;
  Catalog catalog;
  opt::StatsMap stats;
  JobManager jobs;
  httplib::Server http;
};

Server::Server(ServiceOptions options) : impl_(std::make_unique<Impl>(std::move(options))) {}
Server::~Server() { stop(); }

void Server::listen(const std::string& host, int port) {
  if (!impl_->http.bind_to_port(host, port)) {
    throw Error(ErrorCode::Io, "cannot bind " + host + ":" + std::to_string(port));
  }
  serve();
}

int Server::bind_any_port(const std::string& host) {
  const int port = impl_->http.bind_to_any_port(host);
  if (port < 0) throw Error(ErrorCode::Io, "cannot bind an ephemeral port on " + host);
  return port;
}

void Server::serve() {
  impl_->http.listen_after_bind();
}

void Server::stop() { impl_->http.stop(); }
bool Server::running() const { return impl_->http.is_running(); }
JobManager& Server::jobs() { return impl_->jobs; }

}  // namespace hmdap::service
