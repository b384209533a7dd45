#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <functional>
#include <optional>
#include <thread>
#include <vector>

namespace pass {

template <class R>
struct PoolOutcome {
  std::vector<R> results;      // results of the jobs before the first failure
  std::exception_ptr error;    // first failure in job order, if any
};

template <class R>
PoolOutcome<R> run_pool(const std::vector<std::function<R()>>& jobs, int workers) {
  const std::size_t n = jobs.size();
  std::vector<std::optional<R>> slots(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        slots[i].emplace(jobs[i]());
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (workers <= 0) workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  const std::size_t threads = std::min<std::size_t>(static_cast<std::size_t>(workers), n);
  if (threads <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(work);
  }
  PoolOutcome<R> out;
  out.results.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (errors[i]) {
      out.error = errors[i];
      break;
    }
    out.results.push_back(std::move(*slots[i]));
  }
  return out;
}

}  // namespace pass
