#include "deepnag/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <string>

#include "deepnag/common.hpp"

namespace deepnag {

int default_worker_count() {
  if (const char* env = std::getenv("NAG_WORKERS")) {
    try {
      int n = std::stoi(env);
      if (n >= 1) return n;
    } catch (const std::exception&) {
      // fall through to the hardware default on unparsable values
    }
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

ThreadPool::ThreadPool(int workers) {
  if (workers <= 0) workers = default_worker_count();
  // The caller participates in every batch, so spawn workers-1 threads.
  for (int i = 1; i < workers; ++i) {
    threads_.emplace_back([this] { worker_loop(); });
  }
}

ThreadPool::~ThreadPool() {
  {
    std::lock_guard<std::mutex> lock(mutex_);
    stop_ = true;
  }
  wake_.notify_all();
  for (auto& t : threads_) t.join();
}

void ThreadPool::worker_loop() {
  std::size_t seen = 0;
  for (;;) {
    {
      std::unique_lock<std::mutex> lock(mutex_);
      wake_.wait(lock, [&] { return stop_ || generation_ != seen; });
      if (stop_) return;
      seen = generation_;
    }
    run_chunks();
  }
}

void ThreadPool::run_chunks() {
  for (;;) {
    std::size_t begin, end;
    {
      std::lock_guard<std::mutex> lock(mutex_);
      if (next_ >= total_ || error_) {
        // Nothing left to claim; account for abandoned work on error.
        if (error_ && next_ < total_) {
          finished_ += total_ - next_;
          next_ = total_;
          done_.notify_all();
        }
        return;
      }
      begin = next_;
      end = std::min(total_, begin + chunk_);
      next_ = end;
    }
    try {
      for (std::size_t i = begin; i < end; ++i) (*body_)(i);
    } catch (...) {
      std::lock_guard<std::mutex> lock(mutex_);
      if (!error_) error_ = std::current_exception();
    }
    {
      std::lock_guard<std::mutex> lock(mutex_);
      finished_ += end - begin;
      if (finished_ >= total_) done_.notify_all();
    }
  }
}

void ThreadPool::parallel_for(std::size_t n,
                              const std::function<void(std::size_t)>& body) {
  if (n == 0) return;
  if (threads_.empty()) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  {
    std::lock_guard<std::mutex> lock(mutex_);
    body_ = &body;
    total_ = n;
    next_ = 0;
    finished_ = 0;
    error_ = nullptr;
    chunk_ = std::max<std::size_t>(1, n / (4 * static_cast<std::size_t>(size())));
    ++generation_;
  }
  wake_.notify_all();
  run_chunks();
  std::exception_ptr err;
  {
    std::unique_lock<std::mutex> lock(mutex_);
    done_.wait(lock, [&] { return finished_ >= total_; });
    err = error_;
    body_ = nullptr;
    total_ = next_ = finished_ = 0;
  }
  if (err) std::rethrow_exception(err);
}

}  // namespace deepnag
