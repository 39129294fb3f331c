// Copyright 2026 The qabo Authors
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

// Portable random helpers. std::mt19937_64 output is fixed by the standard;
// the distributions in <random> are not, so the conversions live here to
// keep traces identical across standard libraries.

#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace qabo {

using Rng = std::mt19937_64;

// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

// SplitMix64 finalizer; derives independent stream seeds from (seed, index).
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Inverse-CDF sampler over a fixed discrete distribution.
class DiscreteSampler {
 public:
  explicit DiscreteSampler(std::span<const double> weights) : cdf_(weights.size()) {
    double acc = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      acc += std::max(weights[i], 0.0);
      cdf_[i] = acc;
    }
    total_ = acc;
  }

  std::size_t operator()(Rng& rng) const {
    const double u = uniform01(rng) * total_;
    auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    if (it == cdf_.end()) --it;
    return static_cast<std::size_t>(it - cdf_.begin());
  }

  bool empty() const { return cdf_.empty() || total_ <= 0.0; }

 private:
  std::vector<double> cdf_;
  double total_ = 0.0;
};

}  // namespace qabo
