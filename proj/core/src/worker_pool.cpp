#include "hmdap/worker_pool.hpp"

#include <exception>

#include "hmdap/error.hpp"

namespace hmdap {

WorkerPool::WorkerPool(std::size_t workers) : workers_(workers) {
  if (workers == 0) throw Error(ErrorCode::InvalidArgument, "worker count must be at least 1");
  // The caller participates in every batch, so one thread fewer suffices.
  for (std::size_t i = 1; i < workers; ++i) threads_.emplace_back([this] { worker_loop(); });
}

WorkerPool::~WorkerPool() {
  {
    std::lock_guard lock(mutex_);
    stopping_ = true;
  }
  cv_.notify_all();
  for (auto& t : threads_) t.join();
}

std::size_t WorkerPool::default_workers() {
  const auto n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : n;
}

bool WorkerPool::run_one() {
  std::function<void()> task;
  {
    std::lock_guard lock(mutex_);
    if (queue_.empty()) return false;
    task = std::move(queue_.front());
    queue_.pop_front();
  }
  task();
  return true;
}

void WorkerPool::worker_loop() {
  for (;;) {
    std::function<void()> task;
    {
      std::unique_lock lock(mutex_);
      cv_.wait(lock, [this] { return stopping_ || !queue_.empty(); });
      if (queue_.empty()) return;
      task = std::move(queue_.front());
      queue_.pop_front();
    }
    task();
  }
}

void WorkerPool::parallel_for(std::size_t n, const std::function<void(std::size_t)>& task) {
  if (n == 0) return;
  if (threads_.empty() || n == 1) {
    for (std::size_t i = 0; i < n; ++i) task(i);
    return;
  }
  struct Batch {
    std::size_t remaining;
    std::mutex mutex;
    std::condition_variable done;
    std::exception_ptr error;
  } batch;
  batch.remaining = n;
  {
    std::lock_guard lock(mutex_);
    for (std::size_t i = 0; i < n; ++i) {
      queue_.emplace_back([&batch, &task, i] {
        std::exception_ptr error;
        try {
          task(i);
        } catch (...) {
          error = std::current_exception();
        }
        std::lock_guard l(batch.mutex);
        if (error && !batch.error) batch.error = error;
        if (--batch.remaining == 0) batch.done.notify_all();
      });
    }
  }
  cv_.notify_all();
  auto finished = [&] {
    std::lock_guard l(batch.mutex);
    return batch.remaining == 0;
  };
  while (!finished() && run_one()) {
  }
  {
    std::unique_lock l(batch.mutex);
    batch.done.wait(l, [&] { return batch.remaining == 0; });
  }
  if (batch.error) std::rethrow_exception(batch.error);
}

}  // namespace hmdap
