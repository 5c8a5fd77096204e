#pragma once

#include <atomic>
#include <chrono>
#include <thread>

namespace sector {

/// Time source used by the replication cycle and the in-memory transport.
/// Tests swap in ManualClock so that "daily" cycles and link delays run
/// without waiting in real time.
class Clock {
 public:
  using duration = std::chrono::nanoseconds;
  using time_point = std::chrono::time_point<std::chrono::steady_clock, duration>;

  virtual ~Clock() = default;
  virtual time_point now() const = 0;
  virtual void sleep_for(duration d) = 0;
};

class SteadyClock final : public Clock {
 public:
  time_point now() const override {
    return std::chrono::time_point_cast<duration>(std::chrono::steady_clock::now());
  }
  void sleep_for(duration d) override {
    if (d > duration::zero()) std::this_thread::sleep_for(d);
  }
};

/// Virtual time. sleep_for advances the clock instead of blocking, so a
/// single-threaded harness observes delays exactly.
class ManualClock final : public Clock {
 public:
  time_point now() const override { return time_point(duration(ticks_.load())); }
  void sleep_for(duration d) override { advance(d); }
  void advance(duration d) {
    if (d > duration::zero()) ticks_.fetch_add(d.count());
  }

 private:
  std::atomic<duration::rep> ticks_{0};
};

/// Real time sped up by `factor`: with factor 3600 a daily replication
/// cycle comes due every 24 real seconds.
class AcceleratedClock final : public Clock {
 public:
  explicit AcceleratedClock(double factor) : factor_(factor), origin_(std::chrono::steady_clock::now()) {}
  time_point now() const override {
    auto real = std::chrono::steady_clock::now() - origin_;
    auto scaled = std::chrono::duration_cast<duration>(real * factor_);
    return time_point(std::chrono::time_point_cast<duration>(origin_).time_since_epoch() + scaled);
  }
  void sleep_for(duration d) override {
    if (d > duration::zero()) std::this_thread::sleep_for(std::chrono::duration_cast<duration>(d / factor_));
  }
  double factor() const noexcept { return factor_; }

 private:
  double factor_;
  std::chrono::steady_clock::time_point origin_;
};

}  // namespace sector
