#pragma once

#include <functional>
#include <future>
#include <thread>
#include <vector>

namespace rkreco {

// Runs fn(i) for i in [0, n). Each index writes only its own output, so the
// parallel result is bitwise identical to the serial one; `deterministic`
// forces the serial path anyway.
inline void parallel_for(int n, const std::function<void(int)>& fn, bool deterministic = false) {
  const unsigned hw = std::thread::hardware_concurrency();
  if (deterministic || n < 64 || hw < 2) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  const int workers = static_cast<int>(std::min<unsigned>(hw, 8));
  std::vector<std::future<void>> futures;
  futures.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    futures.push_back(std::async(std::launch::async, [&, w] {
      for (int i = w; i < n; i += workers) fn(i);
    }));
  }
  for (auto& f : futures) f.get();
}

}  // namespace rkreco
