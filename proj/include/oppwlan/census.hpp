/*
 * Copyright 2026 The oppwlan Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <vector>

#include "oppwlan/error.hpp"

namespace oppwlan {

/// Occupancy of one (AP downlink queue, STA uplink queue) pair.
enum class PairState : int {
  s0 = 0,  // both empty
  s1 = 1,  // AP queue nonempty only
  s2 = 2,  // STA queue nonempty only
  s3 = 3,  // both nonempty
};

inline constexpr std::array<PairState, 4> all_pair_states{PairState::s0, PairState::s1, PairState::s2, PairState::s3};

inline constexpr int index(PairState s) noexcept { return static_cast<int>(s); }
inline constexpr bool ap_nonempty(PairState s) noexcept { return s == PairState::s1 || s == PairState::s3; }
inline constexpr bool sta_nonempty(PairState s) noexcept { return s == PairState::s2 || s == PairState::s3; }
inline constexpr PairState make_pair_state(bool ap, bool sta) noexcept {
  return static_cast<PairState>((ap ? 1 : 0) + (sta ? 2 : 0));
}

/// Counts of pairs in s1, s2, s3 among `n` pairs.
struct SystemCensus {
  int k1 = 0;
  int k2 = 0;
  int k3 = 0;
  int n = 0;

  SystemCensus() = default;
  SystemCensus(int k1_, int k2_, int k3_, int n_) : k1(k1_), k2(k2_), k3(k3_), n(n_) {
    if (k1 < 0 || k2 < 0 || k3 < 0 || k1 + k2 + k3 > n)
      throw invalid_parameter("census counts must be nonnegative and sum to at most N");
  }

  int n0() const noexcept { return n - k1 - k2 - k3; }

  /// Number of pairs in state s.
  int count(PairState s) const noexcept {
    switch (s) {
      case PairState::s0: return n0();
      case PairState::s1: return k1;
      case PairState::s2: return k2;
      case PairState::s3: return k3;
    }
    return 0;
  }

  std::array<int, 4> counts() const noexcept { return {n0(), k1, k2, k3}; }
  bool empty() const noexcept { return k1 + k2 + k3 == 0; }

  friend bool operator==(const SystemCensus&, const SystemCensus&) = default;
};

/// A tagged pair plus the census of the other n-1 pairs.
struct TaggedCensus {
  PairState tagged = PairState::s0;
  int l1 = 0;
  int l2 = 0;
  int l3 = 0;
  int n = 0;

  TaggedCensus() = default;
  TaggedCensus(PairState t, int l1_, int l2_, int l3_, int n_) : tagged(t), l1(l1_), l2(l2_), l3(l3_), n(n_) {
    if (n < 1 || l1 < 0 || l2 < 0 || l3 < 0 || l1 + l2 + l3 > n - 1)
      throw invalid_parameter("tagged census counts must be nonnegative and sum to at most N-1");
  }

  int others_n0() const noexcept { return n - 1 - l1 - l2 - l3; }

  SystemCensus others() const { return SystemCensus(l1, l2, l3, n - 1); }

  /// The full census including the tagged pair.
  SystemCensus full() const {
    return SystemCensus(l1 + (tagged == PairState::s1), l2 + (tagged == PairState::s2), l3 + (tagged == PairState::s3), n);
  }

  friend bool operator==(const TaggedCensus&, const TaggedCensus&) = default;
};

/// Dense enumeration of all censuses over n pairs, in lexicographic (k1,k2,k3) order.
class CensusSpace {
public:
  explicit CensusSpace(int n) : n_(n) {
    if (n < 0 || n > 63) throw invalid_parameter("census space supports 0 <= n <= 63");
    for (int a = 0; a <= n; ++a)
      for (int b = 0; a + b <= n; ++b)
        for (int c = 0; a + b + c <= n; ++c) {
          lookup_[key(a, b, c)] = states_.size();
          states_.emplace_back(a, b, c, n);
        }
  }

  int n() const noexcept { return n_; }
  std::size_t size() const noexcept { return states_.size(); }
  const SystemCensus& operator[](std::size_t i) const { return states_[i]; }
  const std::vector<SystemCensus>& states() const noexcept { return states_; }

  std::size_t index_of(const SystemCensus& c) const { return lookup_.at(key(c.k1, c.k2, c.k3)); }

private:
  static int key(int a, int b, int c) { return (a * 64 + b) * 64 + c; }

  int n_;
  std::vector<SystemCensus> states_;
  std::map<int, std::size_t> lookup_;
};

/// Dense enumeration of tagged censuses: 4 tagged states times the census of n-1 others.
class TaggedSpace {
public:
  explicit TaggedSpace(int n) : n_(n), others_(n - 1) {
    if (n < 1) throw invalid_parameter("tagged space needs n >= 1");
  }

  int n() const noexcept { return n_; }
  std::size_t size() const noexcept { return 4 * others_.size(); }
  const CensusSpace& others() const noexcept { return others_; }

  TaggedCensus operator[](std::size_t i) const {
    const auto& o = others_[i % others_.size()];
    return TaggedCensus(static_cast<PairState>(i / others_.size()), o.k1, o.k2, o.k3, n_);
  }

  std::size_t index_of(const TaggedCensus& t) const {
    return static_cast<std::size_t>(index(t.tagged)) * others_.size() + others_.index_of(t.others());
  }

private:
  int n_;
  CensusSpace others_;
};

}  // namespace oppwlan
