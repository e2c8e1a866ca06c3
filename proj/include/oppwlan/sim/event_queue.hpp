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

#include <cstdint>
#include <queue>
#include <vector>

namespace oppwlan::sim {

/// Event kinds in tie-break order: at equal timestamps arrivals are seen
/// before a slot boundary, and a slot boundary before an end-of-busy event.
enum class EventKind : int { arrival = 0, slot_tick = 1, transmission_end = 2, collision_end = 3 };

struct Event {
  double time_us = 0.0;
  EventKind kind = EventKind::arrival;
  int queue = -1;
  /// Generation stamp; stale slot ticks are skipped by the engine.
  std::uint64_t generation = 0;
  std::uint64_t seq = 0;
};

struct EventLater {
  bool operator()(const Event& a, const Event& b) const noexcept {
    if (a.time_us != b.time_us) return a.time_us > b.time_us;
    if (a.kind != b.kind) return static_cast<int>(a.kind) > static_cast<int>(b.kind);
    if (a.queue != b.queue) return a.queue > b.queue;
    return a.seq > b.seq;
  }
};

/// Min-heap of events with a deterministic total order.
class EventQueue {
public:
  void push(Event e) {
    e.seq = next_seq_++;
    heap_.push(e);
  }
  Event pop() {
    Event e = heap_.top();
    heap_.pop();
    return e;
  }
  const Event& top() const { return heap_.top(); }
  bool empty() const noexcept { return heap_.empty(); }
  std::size_t size() const noexcept { return heap_.size(); }

private:
  std::priority_queue<Event, std::vector<Event>, EventLater> heap_;
  std::uint64_t next_seq_ = 0;
};

}  // namespace oppwlan::sim
