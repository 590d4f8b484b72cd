#pragma once

#include <condition_variable>
#include <cstddef>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace deepnag {

// Worker count used when a caller does not pin one explicitly:
// NAG_WORKERS environment variable if set (>= 1), otherwise the
// hardware concurrency, otherwise 1.
int default_worker_count();

// Small fork-join pool. parallel_for blocks until every index was
// processed; the calling thread participates, so a pool of size 1 runs
// the body inline with zero threading overhead. Results must be written
// to per-index slots by the body; the pool itself imposes no ordering.
class ThreadPool {
 public:
  explicit ThreadPool(int workers = 0);  // 0 -> default_worker_count()
  ~ThreadPool();

  ThreadPool(const ThreadPool&) = delete;
  ThreadPool& operator=(const ThreadPool&) = delete;

  int size() const { return static_cast<int>(threads_.size()) + 1; }

  // Runs body(i) for i in [0, n). The first exception thrown by any
  // body is rethrown on the calling thread after all workers stopped
  // touching the batch.
  void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

 private:
  void worker_loop();
  void run_chunks();

  std::vector<std::thread> threads_;
  std::mutex mutex_;
  std::condition_variable wake_;
  std::condition_variable done_;

  const std::function<void(std::size_t)>* body_ = nullptr;
  std::size_t total_ = 0;
  std::size_t next_ = 0;
  std::size_t finished_ = 0;
  std::size_t generation_ = 0;
  std::size_t chunk_ = 1;
  std::exception_ptr error_;
  bool stop_ = false;
};

}  // namespace deepnag
