// Copyright 2026 the plaf authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <functional>

namespace plaf {

// Worker count: PLAF_THREADS when set (minimum 1), otherwise the hardware
// concurrency.
std::size_t threadCount();

// Runs body(begin, end) over contiguous chunks of [0, n). Chunks never
// overlap, so bodies that write only to their own range are race-free and
// the result does not depend on the thread count.
void parallelFor(std::size_t n,
                 const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace plaf
