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

#include <cmath>
#include <cstddef>
#include <vector>

#include "oppwlan/channel.hpp"
#include "oppwlan/error.hpp"

namespace oppwlan {

namespace ofdm {

inline constexpr double preamble_us = 20.0;
inline constexpr double symbol_us = 4.0;
inline constexpr int service_bits = 16;
inline constexpr int tail_bits = 6;
inline constexpr int ack_bytes = 14;
inline constexpr double ack_rate_mbps = 24.0;

/// 802.11a PPDU duration for a PSDU of `psdu_bytes` at `rate_mbps`.
inline double ppdu_us(int psdu_bytes, double rate_mbps) {
  const double bits_per_symbol = rate_mbps * symbol_us;
  const double bits = service_bits + 8.0 * psdu_bytes + tail_bits;
  return preamble_us + std::ceil(bits / bits_per_symbol) * symbol_us;
}

}  // namespace ofdm

/// MAC/PHY timing shared by the analysis and both simulators.
struct MacTiming {
  double slot_us = 9.0;
  double difs_us = 34.0;
  double sifs_us = 16.0;
  double ack_us = 28.0;
  double phy_overhead_us = ofdm::preamble_us;
  int payload_bytes = 1500;
  int mac_header_bytes = 28;
  /// T_suc(i): data + SIFS + ACK + DIFS for each channel state.
  std::vector<double> per_state_tx_us;
  /// T_col: lowest-rate data airtime + DIFS.
  double collision_us = 0.0;

  /// 802.11a constants over the rates of `space`.
  static MacTiming ieee80211a(const ChannelSpace& space, int payload_bytes = 1500) {
    MacTiming t;
    t.payload_bytes = payload_bytes;
    t.ack_us = ofdm::ppdu_us(ofdm::ack_bytes, ofdm::ack_rate_mbps);
    t.recompute(space);
    return t;
  }

  double data_airtime_us(double rate_mbps) const { return ofdm::ppdu_us(payload_bytes + mac_header_bytes, rate_mbps); }

  /// Re-derives per_state_tx_us and collision_us from the scalar fields.
  void recompute(const ChannelSpace& space) {
    per_state_tx_us.clear();
    for (double r : space.rates_mbps()) per_state_tx_us.push_back(data_airtime_us(r) + sifs_us + ack_us + difs_us);
    collision_us = data_airtime_us(space.rates_mbps().front()) + difs_us;
    validate();
  }

  void validate() const {
    if (per_state_tx_us.empty()) throw invalid_parameter("timing has no per-state durations");
    for (std::size_t i = 1; i < per_state_tx_us.size(); ++i)
      if (!(per_state_tx_us[i] < per_state_tx_us[i - 1]))
        throw invalid_parameter("per-state transmission time must decrease with state index");
    if (!(collision_us > 0.0)) throw invalid_parameter("collision duration must be positive");
    if (!(slot_us > 0.0)) throw invalid_parameter("slot time must be positive");
  }

  int num_states() const noexcept { return static_cast<int>(per_state_tx_us.size()); }
};

inline double t_suc(const MacTiming& timing, int state) {
  if (state < 0 || state >= timing.num_states()) throw invalid_parameter("channel state index out of range");
  return timing.per_state_tx_us[static_cast<std::size_t>(state)];
}

inline double t_col(const MacTiming& timing) { return timing.collision_us; }

}  // namespace oppwlan
