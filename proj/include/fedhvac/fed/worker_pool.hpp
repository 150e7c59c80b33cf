#pragma once

#include <condition_variable>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace fedhvac::fed {

/// Raised at the round barrier when a task threw; names the failing task.
class TaskError : public std::runtime_error {
 public:
  TaskError(std::size_t task, const std::string& what)
      : std::runtime_error("task " + std::to_string(task) + ": " + what), task_(task) {}
  std::size_t task() const { return task_; }

 private:
  std::size_t task_;
};

/// Fixed set of worker threads. run() blocks until every task has finished;
/// with one thread tasks run inline on the caller.
class WorkerPool {
 public:
  explicit WorkerPool(std::size_t threads);
  ~WorkerPool();
  WorkerPool(const WorkerPool&) = delete;
  WorkerPool& operator=(const WorkerPool&) = delete;

  std::size_t threads() const { return threads_; }

  /// Calls fn(i) for i in [0, n). If any call throws, the lowest failing index is
  /// rethrown as TaskError after all tasks have completed.
  void run(std::size_t n, const std::function<void(std::size_t)>& fn);

 private:
  void worker_loop();

  std::size_t threads_;
  std::vector<std::thread> workers_;
  std::mutex mu_;
  std::condition_variable work_cv_;
  std::condition_variable done_cv_;
  const std::function<void(std::size_t)>* fn_ = nullptr;
  std::size_t n_ = 0;
  std::size_t next_ = 0;
  std::size_t finished_ = 0;
  std::size_t generation_ = 0;
  bool stop_ = false;
  std::vector<std::exception_ptr> errors_;
};

}  // namespace fedhvac::fed
