#pragma once

#include <condition_variable>
#include <cstddef>
#include <deque>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace hmdap {

/// Fixed-size pool of worker threads. parallel_for blocks until every task of
/// the batch has finished; the calling thread executes queued tasks while it
/// waits, so nested batches cannot starve the pool. A pool of one worker runs
/// everything inline on the caller.
class WorkerPool {
 public:
  explicit WorkerPool(std::size_t workers);
  ~WorkerPool();

  WorkerPool(const WorkerPool&) = delete;
  WorkerPool& operator=(const WorkerPool&) = delete;

  std::size_t size() const noexcept { return workers_; }

  /// Runs task(i) for every i in [0, n). The first exception thrown by any
  /// task is rethrown after the whole batch completes.
  void parallel_for(std::size_t n, const std::function<void(std::size_t)>& task);

  static std::size_t default_workers();

 private:
  bool run_one();
  void worker_loop();

  std::size_t workers_;
  std::vector<std::thread> threads_;
  std::mutex mutex_;
  std::condition_variable cv_;
  std::deque<std::function<void()>> queue_;
  bool stopping_ = false;
};

}  // namespace hmdap
