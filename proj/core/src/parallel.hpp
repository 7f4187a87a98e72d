// Copyright The schwarzeig Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef SCHWARZEIG_SRC_PARALLEL_HPP
#define SCHWARZEIG_SRC_PARALLEL_HPP

#include <algorithm>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include "schwarzeig/types.hpp"

namespace schwarzeig::detail
{

// Runs body(i) for i in [0, count) on up to `threads` workers with a static contiguous
// partition. The first exception thrown by any worker is rethrown on the caller.
template <typename Body>
void parallel_for(Index count, int threads, Body &&body)
{
  const Index workers = std::clamp<Index>(threads, 1, std::max<Index>(count, 1));
  if (workers == 1)
  {
    for (Index i = 0; i < count; ++i)
    {
      body(i);
    }
    return;
  }

  std::exception_ptr failure;
  std::mutex failure_mutex;
  {
    std::vector<std::jthread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (Index w = 0; w < workers; ++w)
    {
      const Index begin = count * w / workers;
      const Index end = count * (w + 1) / workers;
      pool.emplace_back(
        [&, begin, end]
        {
          try
          {
            for (Index i = begin; i < end; ++i)
            {
              body(i);
            }
          }
          catch (...)
          {
            std::lock_guard lock(failure_mutex);
            if (!failure)
            {
              failure = std::current_exception();
            }
          }
        });
    }
  }
  if (failure)
  {
    std::rethrow_exception(failure);
  }
}

}  // namespace schwarzeig::detail

#endif  // SCHWARZEIG_SRC_PARALLEL_HPP
