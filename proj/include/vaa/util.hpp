// Copyright 2026 The VAA Robustness Authors
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

#ifndef VAA__UTIL_HPP_
#define VAA__UTIL_HPP_

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace vaa
{

/// Shortest round-trip decimal form ('.' separator, no locale).
std::string format_double(double x);
std::string format_optional(const std::optional<double> & x);

/// Quotes a CSV cell when it contains a separator, quote or newline.
std::string csv_escape(std::string_view cell);

/// Runs fn(begin, end) over fixed-size chunks of [0, n). Chunk boundaries do
/// not depend on `threads`, so per-chunk results are reproducible.
void parallel_chunks(std::size_t n, unsigned threads, std::size_t chunk,
                     const std::function<void(std::size_t, std::size_t)> & fn);

/// Neumaier-compensated sum.
double stable_sum(std::span<const double> xs);
double stable_mean(std::span<const double> xs);

/// Pearson correlation; nullopt when either input is constant or n < 2.
std::optional<double> pearson(std::span<const double> x, std::span<const double> y);

/// Population standard deviation.
double population_stddev(std::span<const double> xs);

}  // namespace vaa

#endif  // VAA__UTIL_HPP_
