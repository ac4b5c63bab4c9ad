#pragma once

#include <atomic>

#include "gr/common/time.hpp"

namespace gr {

class Clock {
 public:
  virtual ~Clock() = default;
  virtual Timestamp now() const = 0;
};

class SystemClock final : public Clock {
 public:
  Timestamp now() const override;
};

// Manually driven clock for desk runs and tests.
class SimulatedClock final : public Clock {
 public:
  explicit SimulatedClock(Timestamp start) : now_(to_unix(start)) {}
  Timestamp now() const override { return from_unix(now_.load()); }
  void set(Timestamp t) { now_ = to_unix(t); }
  void advance(Seconds d) { now_ += d.count(); }

 private:
  std::atomic<std::int64_t> now_;
};

}  // namespace gr
