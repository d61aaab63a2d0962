// Copyright 2026 The qjump Authors.
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

#include <array>
#include <cstdint>
#include <limits>

#include <boost/random/normal_distribution.hpp>

namespace qjump {

// Counter-based Philox2x64 with 10 rounds (Salmon et al., SC'11). The key is
// the global seed and the high counter word is the trajectory index, so every
// trajectory owns an independent stream that does not depend on scheduling.
class Philox2x64 {
 public:
  using result_type = std::uint64_t;
  using Block = std::array<std::uint64_t, 2>;

  Philox2x64(std::uint64_t key, std::uint64_t stream) noexcept
      : key_(key), stream_(stream) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  static Block bijection(Block counter, std::uint64_t key) noexcept {
    std::uint64_t lo = counter[0];
    std::uint64_t hi = counter[1];
    for (int round = 0; round < 10; ++round) {
      if (round > 0) key += kWeyl;
      const unsigned __int128 prod = static_cast<unsigned __int128>(kMultiplier) * lo;
      const auto prod_hi = static_cast<std::uint64_t>(prod >> 64);
      const auto prod_lo = static_cast<std::uint64_t>(prod);
      lo = prod_hi ^ key ^ hi;
      hi = prod_lo;
    }
    return {lo, hi};
  }

  result_type operator()() noexcept {
    if (have_ == 0) {
      buffer_ = bijection({counter_++, stream_}, key_);
      have_ = 2;
    }
    return buffer_[--have_];
  }

  std::uint64_t key() const noexcept { return key_; }
  std::uint64_t stream() const noexcept { return stream_; }

 private:
  static constexpr std::uint64_t kMultiplier = 0xD2B74407B1CE6E93ULL;
  static constexpr std::uint64_t kWeyl = 0x9E3779B97F4A7C15ULL;

  std::uint64_t key_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
  Block buffer_{};
  int have_ = 0;
};

struct SeedInfo {
  std::uint64_t seed = 0;
  std::uint64_t index = 0;

  bool operator==(const SeedInfo&) const = default;
};

class RandomStream {
 public:
  explicit RandomStream(SeedInfo info) noexcept
      : info_(info), engine_(info.seed, info.index) {}
  RandomStream(std::uint64_t seed, std::uint64_t index) noexcept
      : RandomStream(SeedInfo{seed, index}) {}

  double normal() { return normal_(engine_); }

  // Uniform on the open interval (0, 1).
  double uniform() noexcept {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  Philox2x64& engine() noexcept { return engine_; }
  const SeedInfo& seed_info() const noexcept { return info_; }

 private:
  SeedInfo info_;
  Philox2x64 engine_;
  boost::random::normal_distribution<double> normal_;
};

}  // namespace qjump
