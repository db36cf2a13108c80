// Copyright 2026 The pacsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef PACSIM_PARALLEL_HPP_
#define PACSIM_PARALLEL_HPP_

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace pacsim {

/// Splits [0, count) into `workers` contiguous blocks and runs
/// fn(block_index, begin, end) for each, one thread per block. Block
/// boundaries depend only on count and workers. The first exception thrown
/// by any block is rethrown after all threads have joined.
template <typename Fn>
void parallel_blocks(std::size_t count, int workers, Fn &&fn) {
    const std::size_t blocks = std::max<std::size_t>(1, std::min<std::size_t>(static_cast<std::size_t>(std::max(workers, 1)), count));
    if (blocks == 1) {
        fn(std::size_t{0}, std::size_t{0}, count);
        return;
    }
    std::vector<std::exception_ptr> errors(blocks);
    std::vector<std::thread> threads;
    threads.reserve(blocks);
    for (std::size_t b = 0; b < blocks; ++b) {
        const std::size_t begin = count * b / blocks;
        const std::size_t end = count * (b + 1) / blocks;
        threads.emplace_back([&, b, begin, end] {
            try {
                fn(b, begin, end);
            } catch (...) {
                errors[b] = std::current_exception();
            }
        });
    }
    for (auto &t : threads) t.join();
    for (auto &e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

}  // namespace pacsim

#endif  // PACSIM_PARALLEL_HPP_
