#pragma once

#include <cstddef>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "sector/transport/network.hpp"

namespace sector::sphere {

struct SchedSegment {
  std::string file;
  std::vector<transport::Address> locations;  // nodes holding a replica
};

/// Assigns segments to SPEs. For each idle SPE, in order of preference:
/// a segment held on its node whose file is not being processed, a remote
/// segment whose file is not being processed, then (only because the SPE
/// would otherwise idle) a local and finally a remote segment of a file
/// already being processed. Idle SPEs are served local-first: every idle
/// SPE gets a chance at a local segment before any takes a remote one.
class Scheduler {
 public:
  Scheduler(std::vector<SchedSegment> segments, std::vector<transport::Address> spe_nodes);

  /// Assigns pending segments to the given idle SPEs. Returns (spe, segment)
  /// pairs in assignment order.
  std::vector<std::pair<std::size_t, std::size_t>> assign(const std::vector<std::size_t>& idle_spes);

  /// The SPE finished (or failed) its segment and is idle again.
  void release(std::size_t spe);
  /// Puts a failed segment back. It will not run on `avoid` again while an
  /// SPE on another node exists.
  void requeue(std::size_t segment, const transport::Address& avoid);

  bool is_local(std::size_t segment, std::size_t spe) const;
  std::size_t pending() const noexcept { return pending_.size(); }
  std::size_t running() const noexcept { return running_count_; }
  std::size_t spes() const noexcept { return nodes_.size(); }
  const transport::Address& spe_node(std::size_t spe) const { return nodes_.at(spe); }

 private:
  bool allowed(std::size_t segment, std::size_t spe) const;
  std::optional<std::size_t> pick(std::size_t spe, bool local, bool file_running) const;
  void start(std::size_t spe, std::size_t segment);

  std::vector<SchedSegment> segments_;
  std::vector<transport::Address> nodes_;
  std::set<std::size_t> pending_;
  std::vector<std::optional<std::size_t>> current_;  // per SPE
  std::vector<std::size_t> file_of_;
  std::vector<std::size_t> file_running_;           // per file id
  std::vector<std::set<transport::Address>> avoid_;  // per segment
  std::size_t running_count_ = 0;
};

struct ScheduleInstance {
  std::vector<SchedSegment> segments;
  std::vector<transport::Address> spe_nodes;
  std::vector<double> durations;  // per segment
};

struct ScheduleEvent {
  enum class Kind { assign, finish };
  double time = 0;
  Kind kind = Kind::assign;
  std::size_t spe = 0;
  std::size_t segment = 0;
};

/// Runs the scheduler in virtual time: each segment occupies its SPE for
/// its duration. Returns the event log; finishes at a time precede the
/// assignments made at that time.
std::vector<ScheduleEvent> simulate_schedule(const ScheduleInstance& instance);

/// Random instance: a few nodes and files, replicas on random nodes,
/// several segments per file, random durations.
ScheduleInstance random_schedule_instance(std::mt19937_64& rng);

/// Independent check of a schedule log against the assignment rules:
/// (a) a remote assignment only when the SPE had no permitted local
/// segment and no SPE local to the segment stays idle at that instant;
/// (b) a segment of an already-running file only when no segment of an
/// idle file was pending; (c) after each instant, no SPE idles while
/// segments are pending; plus every segment run exactly once.
/// Returns the violations found (empty when valid).
std::vector<std::string> validate_schedule(const ScheduleInstance& instance, const std::vector<ScheduleEvent>& log);

}  // namespace sector::sphere
