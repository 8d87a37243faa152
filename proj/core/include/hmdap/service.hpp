#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include "hmdap/error.hpp"
#include "hmdap/jobs.hpp"
#include "hmdap/relation.hpp"

namespace hmdap::service {

struct ServiceOptions {
  /// Catalog directory; also the base for relative `local:` urls.
  std::filesystem::path data_dir = ".";
  /// Partitions per query and per pipeline stage.
  std::size_t workers = 1;
  /// Pipelines executing at once; the rest wait in FIFO order.
  std::size_t max_running_jobs = 1;
  /// Result rows returned by GET /pipelines/{id} when no limit is given.
  std::size_t page_size = 1000;
};

int http_status(ErrorCode code);
/// {"error": {"code", "message", "line"?, "column"?}}
nlohmann::json error_json(const Error& error);

nlohmann::json value_to_json(const Value& v);
/// {"columns": [{name, type}], "rows": [[...]], "total_rows", "offset"}
/// with at most `limit` rows starting at `offset`.
nlohmann::json relation_to_json(const Relation& r, std::size_t offset = 0, std::size_t limit = SIZE_MAX);

/// HTTP front end over a catalog directory. The catalog and statistics are
/// read once at construction.
class Server {
 public:
  explicit Server(ServiceOptions options);
  ~Server();

  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  /// Binds and serves until stop(). Throws Io when the port cannot be bound.
  void listen(const std::string& host, int port);
  /// Binds an ephemeral port and returns it; follow with serve().
  int bind_any_port(const std::string& host);
  void serve();
  void stop();
  bool running() const;

  JobManager& jobs();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace hmdap::service
