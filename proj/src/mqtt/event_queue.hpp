#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <queue>
#include <vector>

#include "common/sim_time.hpp"

namespace fieldcam::mqtt {

// Totally ordered virtual-time event queue. Events at the same instant run in
// scheduling order, so a run is a pure function of its inputs.
class EventQueue {
 public:
  using Action = std::function<void(SimTime)>;

  SimTime now() const { return now_; }

  // Events scheduled in the past run at `now()`.
  void schedule(SimTime at, Action action);
  void schedule_in(Duration delay, Action action) { schedule(now_ + delay, std::move(action)); }

  // Runs every event with time <= t, then sets now() = t.
  void run_until(SimTime t);
  bool run_next();
  bool empty() const { return events_.empty(); }
  std::optional<SimTime> next_time() const;

 private:
  struct Event {
    SimTime at;
    std::uint64_t seq;
    Action action;
  };
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      return a.at != b.at ? a.at > b.at : a.seq > b.seq;
    }
  };

  std::priority_queue<Event, std::vector<Event>, Later> events_;
  std::uint64_t next_seq_ = 0;
  SimTime now_{0};
};

}  // namespace fieldcam::mqtt
