// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 the pointprop authors

#ifndef POINTPROP_PARALLEL_HPP
#define POINTPROP_PARALLEL_HPP

#include <cstddef>
#include <thread>
#include <vector>

namespace pointprop {

/// Run fn(i) for i in [0, n) on `threads` workers. Each index is processed by
/// exactly one worker and writes only its own output slot, so results do not
/// depend on the thread count. threads <= 1 runs inline.
template <typename Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn) {
  if (n == 0) return;
  if (threads <= 1 || n == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const std::size_t workers =
      std::min<std::size_t>(static_cast<std::size_t>(threads), n);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += workers) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace pointprop

#endif  // POINTPROP_PARALLEL_HPP
