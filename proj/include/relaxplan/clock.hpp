#pragma once

#include <chrono>

namespace relaxplan {

using TimePoint = std::chrono::steady_clock::time_point;

/// Monotonic time source. Injectable so budget arithmetic can be driven by a
/// scripted clock in tests.
class Clock {
 public:
  virtual ~Clock() = default;
  virtual TimePoint now() const = 0;
};

class SystemClock final : public Clock {
 public:
  TimePoint now() const override { return std::chrono::steady_clock::now(); }
};

inline const Clock& system_clock() {
  static const SystemClock clock;
  return clock;
}

class FakeClock final : public Clock {
 public:
  TimePoint now() const override { return t_; }
  void advance(double seconds) {
    t_ += std::chrono::duration_cast<std::chrono::steady_clock::duration>(
        std::chrono::duration<double>(seconds));
  }

 private:
  TimePoint t_{};
};

inline double seconds_between(TimePoint from, TimePoint to) {
  return std::chrono::duration<double>(to - from).count();
}

/// Absolute wall-clock instant a computation must finish by.
class Deadline {
 public:
  static Deadline after(double seconds, const Clock& clock = system_clock()) {
    Deadline d(clock);
    d.at_ = clock.now() + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                              std::chrono::duration<double>(seconds));
    return d;
  }

  static Deadline unbounded(const Clock& clock = system_clock()) {
    Deadline d(clock);
    d.unbounded_ = true;
    return d;
  }

  double remaining_seconds() const {
    if (unbounded_) return 1e18;
    return seconds_between(clock_->now(), at_);
  }

  bool expired() const { return !unbounded_ && clock_->now() >= at_; }

  const Clock& clock() const { return *clock_; }

 private:
  explicit Deadline(const Clock& clock) : clock_(&clock) {}

  TimePoint at_{};
  const Clock* clock_;
  bool unbounded_ = false;
};

}  // namespace relaxplan
