#include "hmdap/jobs.hpp"

#include <cstdio>
#include <random>

#include "hmdap/csv.hpp"

namespace hmdap::service {

std::string_view to_string(JobStatus status) {
  switch (status) {
    case JobStatus::Queued: return "Queued";
    case JobStatus::Running: return "Running";
    case JobStatus::Succeeded: return "Succeeded";
    case JobStatus::Failed: return "Failed";
    case JobStatus::Cancelled: return "Cancelled";
  }
  return "?";
}

bool is_terminal(JobStatus status) {
  return status == JobStatus::Succeeded || status == JobStatus::Failed || status == JobStatus::Cancelled;
}

bool is_legal_transition(JobStatus from, JobStatus to) {
  if (from == JobStatus::Queued) return to == JobStatus::Running || to == JobStatus::Cancelled;
  if (from == JobStatus::Running) return is_terminal(to);
  return false;
}

struct JobManager::Job {
  std::string id;
  pipeline::PipelineConfig config;
  pipeline::DbConfig db;
  JobStatus status = JobStatus::Queued;
  Clock::time_point submitted_at;
  std::optional<Clock::time_point> finished_at;
  std::shared_ptr<const pipeline::PipelineResult> result;
  std::optional<std::string> error;
  std::optional<ErrorCode> error_code;
  std::string stage;
  std::atomic<bool> cancel{false};
};

JobManager::JobManager(pipeline::Engine engine, std::size_t max_running, TransitionObserver observer)
    : engine_(std::move(engine)), observer_(std::move(observer)) {
  if (max_running == 0) throw Error(ErrorCode::InvalidArgument, "at least one pipeline worker is required");
  std::random_device rd;
  char buf[17];
  std::snprintf(buf, sizeof buf, "%08x%08x", rd(), rd());
  id_prefix_ = buf;
  for (std::size_t i = 0; i < max_running; ++i) threads_.emplace_back([this] { worker_loop(); });
}

JobManager::~JobManager() {
  {
    std::lock_guard lock(mutex_);
    stopping_ = true;
    for (auto& [_, job] : jobs_) job->cancel = true;
  }
  work_.notify_all();
  for (auto& t : threads_) t.join();
}

std::string JobManager::submit(pipeline::PipelineConfig config, pipeline::DbConfig db) {
  auto job = std::make_shared<Job>();
  job->config = std::move(config);
  job->db = std::move(db);
  job->submitted_at = Clock::now();
  {
    std::lock_guard lock(mutex_);
    job->id = id_prefix_ + "-" + std::to_string(next_id_++);
    jobs_.emplace(job->id, job);
    queue_.push_back(job);
  }
  work_.notify_one();
  return job->id;
}

std::shared_ptr<JobManager::Job> JobManager::find(const std::string& id) const {
  auto it = jobs_.find(id);
  if (it == jobs_.end()) throw Error(ErrorCode::NotFound, "unknown pipeline id '" + id + "'");
  return it->second;
}

JobSnapshot JobManager::snapshot(const Job& job) {
  return {job.id, job.status, job.submitted_at, job.finished_at, job.result, job.error, job.error_code, job.stage};
}

JobSnapshot JobManager::get(const std::string& id) const {
  std::lock_guard lock(mutex_);
  return snapshot(*find(id));
}

std::vector<JobSnapshot> JobManager::list() const {
  std::lock_guard lock(mutex_);
  std::vector<JobSnapshot> out;
  for (const auto& [_, job] : jobs_) out.push_back(snapshot(*job));
  return out;
}

void JobManager::transition(Job& job, JobStatus to) {
  const JobStatus from = job.status;
  if (!is_legal_transition(from, to)) {
    throw Error(ErrorCode::Internal, "illegal job transition " + std::string(to_string(from)) + " -> " +
                                         std::string(to_string(to)));
  }
  job.status = to;
  if (is_terminal(to)) job.finished_at = Clock::now();
  if (observer_) observer_(job.id, from, to);
  changed_.notify_all();
}

JobSnapshot JobManager::cancel(const std::string& id) {
  std::lock_guard lock(mutex_);
  auto job = find(id);
  if (job->status == JobStatus::Queued) {
    job->cancel = true;
    transition(*job, JobStatus::Cancelled);
  } else if (job->status == JobStatus::Running) {
    job->cancel = true;
  }
  return snapshot(*job);
}

JobSnapshot JobManager::wait(const std::string& id, std::chrono::milliseconds timeout) const {
  std::unique_lock lock(mutex_);
  auto job = find(id);
  changed_.wait_for(lock, timeout, [&] { return is_terminal(job->status); });
  return snapshot(*job);
}

std::string JobManager::export_result(const std::string& id) const {
  std::shared_ptr<const pipeline::PipelineResult> result;
  {
    std::lock_guard lock(mutex_);
    auto job = find(id);
    if (job->status != JobStatus::Succeeded) {
      throw Error(ErrorCode::Conflict, "pipeline '" + id + "' is " + std::string(to_string(job->status)) +
                                           "; only Succeeded results can be exported");
    }
    result = job->result;
  }
  return csv::write(result->result);
}

void JobManager::worker_loop() {
  for (;;) {
    std::shared_ptr<Job> job;
    {
      std::unique_lock lock(mutex_);
      work_.wait(lock, [this] { return stopping_ || !queue_.empty(); });
      if (stopping_) return;
      job = std::move(queue_.front());
      queue_.pop_front();
      if (job->status != JobStatus::Queued) continue;
      transition(*job, JobStatus::Running);
    }
    run(*job);
  }
}

void JobManager::run(Job& job) {
  pipeline::Engine engine = engine_;
  engine.cancel = &job.cancel;
  engine.on_stage = [this, &job](std::string_view stage) {
    std::lock_guard lock(mutex_);
    job.stage = std::string(stage);
  };
  std::shared_ptr<const pipeline::PipelineResult> result;
  std::optional<Error> failure;
  try {
    result = std::make_shared<const pipeline::PipelineResult>(pipeline::execute_pipeline(job.config, job.db, engine));
  } catch (const Error& e) {
    failure = e;
  } catch (const std::exception& e) {
    failure = Error(ErrorCode::Internal, std::string("internal error: ") + e.what());
  }
  std::lock_guard lock(mutex_);
  job.stage.clear();
  // Completion is itself a stage boundary for a pending cancel.
  if (job.cancel || (failure && failure->code() == ErrorCode::Cancelled)) {
    transition(job, JobStatus::Cancelled);
  } else if (failure) {
    job.error = failure->what();
    job.error_code = failure->code();
    transition(job, JobStatus::Failed);
  } else {
    job.result = std::move(result);
    transition(job, JobStatus::Succeeded);
  }
}

}  // namespace hmdap::service
