#include "fedhvac/fed/worker_pool.hpp"

namespace fedhvac::fed {
namespace {

std::string describe(const std::exception_ptr& e) {
  try {
    std::rethrow_exception(e);
  } catch (const std::exception& ex) {
    return ex.what();
  } catch (...) {
    return "unknown exception";
  }
}

}  // namespace

WorkerPool::WorkerPool(std::size_t threads) : threads_(threads == 0 ? 1 : threads) {
  if (threads_ > 1) {
    for (std::size_t i = 0; i < threads_; ++i) workers_.emplace_back([this] { worker_loop(); });
  }
}

WorkerPool::~WorkerPool() {
  {
    std::lock_guard lock(mu_);
    stop_ = true;
  }
  work_cv_.notify_all();
  for (auto& t : workers_) t.join();
}

void WorkerPool::run(std::size_t n, const std::function<void(std::size_t)>& fn) {
  std::vector<std::exception_ptr> errors(n);
  if (workers_.empty()) {
    for (std::size_t i = 0; i < n; ++i) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::unique_lock lock(mu_);
    fn_ = &fn;
    n_ = n;
    next_ = 0;
    finished_ = 0;
    errors_ = std::move(errors);
    ++generation_;
    work_cv_.notify_all();
    done_cv_.wait(lock, [&] { return finished_ == n_; });
    fn_ = nullptr;
    errors = std::move(errors_);
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (errors[i]) throw TaskError(i, describe(errors[i]));
  }
}

void WorkerPool::worker_loop() {
  std::size_t seen = 0;
  std::unique_lock lock(mu_);
  while (true) {
    work_cv_.wait(lock, [&] { return stop_ || (generation_ != seen && next_ < n_); });
    if (stop_) return;
    while (next_ < n_) {
      const std::size_t i = next_++;
      const auto* fn = fn_;
      lock.unlock();
      std::exception_ptr err;
      try {
        (*fn)(i);
      } catch (...) {
        err = std::current_exception();
      }
      lock.lock();
      errors_[i] = err;
      if (++finished_ == n_) done_cv_.notify_all();
    }
    seen = generation_;
  }
}

}  // namespace fedhvac::fed
