#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "hmdap/error.hpp"
#include "hmdap/orchestrator.hpp"

namespace hmdap::service {

enum class JobStatus { Queued, Running, Succeeded, Failed, Cancelled };
std::string_view to_string(JobStatus status);
bool is_terminal(JobStatus status);
/// Queued -> Running -> {Succeeded, Failed, Cancelled}, plus Queued -> Cancelled.
bool is_legal_transition(JobStatus from, JobStatus to);

using Clock = std::chrono::system_clock;

struct JobSnapshot {
  std::string id;
  JobStatus status = JobStatus::Queued;
  Clock::time_point submitted_at;
  std::optional<Clock::time_point> finished_at;
  /// Present iff status is Succeeded.
  std::shared_ptr<const pipeline::PipelineResult> result;
  std::optional<std::string> error;
  std::optional<ErrorCode> error_code;
  /// Stage the job is executing while Running.
  std::string stage;
};

/// FIFO pipeline queue executed by at most `max_running` worker threads.
class JobManager {
 public:
  using TransitionObserver = std::function<void(const std::string& id, JobStatus from, JobStatus to)>;

  /// `engine.cancel` is overridden per job.
  JobManager(pipeline::Engine engine, std::size_t max_running, TransitionObserver observer = {});
  ~JobManager();

  JobManager(const JobManager&) = delete;
  JobManager& operator=(const JobManager&) = delete;

  std::string submit(pipeline::PipelineConfig config, pipeline::DbConfig db);
  /// Throws NotFound for unknown ids.
  JobSnapshot get(const std::string& id) const;
  /// Queued jobs cancel immediately, running ones at their next stage
  /// boundary; terminal jobs are left unchanged.
  JobSnapshot cancel(const std::string& id);
  std::vector<JobSnapshot> list() const;
  /// Blocks until the job is terminal or the timeout passes.
  JobSnapshot wait(const std::string& id, std::chrono::milliseconds timeout = std::chrono::minutes(5)) const;

  /// RFC-4180 CSV of a Succeeded job's result. Throws Conflict otherwise.
  std::string export_result(const std::string& id) const;

 private:
  struct Job;
  void worker_loop();
  void run(Job& job);
  void transition(Job& job, JobStatus to);
  std::shared_ptr<Job> find(const std::string& id) const;
  static JobSnapshot snapshot(const Job& job);

  pipeline::Engine engine_;
  TransitionObserver observer_;
  mutable std::mutex mutex_;
  mutable std::condition_variable changed_;
  std::condition_variable work_;
  std::map<std::string, std::shared_ptr<Job>> jobs_;
  std::deque<std::shared_ptr<Job>> queue_;
  bool stopping_ = false;
  std::uint64_t next_id_ = 1;
  std::string id_prefix_;
  std::vector<std::thread> threads_;
};

}  // namespace hmdap::service
