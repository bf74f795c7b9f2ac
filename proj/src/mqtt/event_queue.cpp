#include "mqtt/event_queue.hpp"

namespace fieldcam::mqtt {

void EventQueue::schedule(SimTime at, Action action) {
  events_.push(Event{at < now_ ? now_ : at, next_seq_++, std::move(action)});
}

bool EventQueue::run_next() {
  if (events_.empty()) return false;
  // at/seq survive the move, so the heap stays ordered for pop().
  Event e = std::move(const_cast<Event&>(events_.top()));
  events_.pop();
  now_ = e.at;
  e.action(now_);
  return true;
}

void EventQueue::run_until(SimTime t) {
  while (!events_.empty() && events_.top().at <= t) run_next();
  if (t > now_) now_ = t;
}

std::optional<SimTime> EventQueue::next_time() const {
  if (events_.empty()) return std::nullopt;
  return events_.top().at;
}

}  // namespace fieldcam::mqtt
