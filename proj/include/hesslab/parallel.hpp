/*
 *  Copyright 2026 The hesslab Authors
 *
 *  Licensed under the Apache License, Version 2.0 (the "License");
 *  you may not use this file except in compliance with the License.
 *  You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 *  Unless required by applicable law or agreed to in writing, software
 *  distributed under the License is distributed on an "AS IS" BASIS,
 *  WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 *  See the License for the specific language governing permissions and
 *  limitations under the License.
 */

#pragma once

// Seed splitting and a small deterministic worker pool.
//
// Every parallel loop in the library hands task i a seed derived from
// (master seed, i) and writes its result to slot i, so output never depends
// on how many workers ran.

#include <cstddef>
#include <cstdint>
#include <functional>

namespace hesslab {

std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Seed for stream `index` of a family rooted at `seed`.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) noexcept;

/// Worker cap: HESSLAB_THREADS if set and positive, else hardware concurrency.
unsigned worker_count();

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace hesslab
