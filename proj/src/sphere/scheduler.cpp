#include "sector/sphere/scheduler.hpp"

#include <algorithm>
#include <map>
#include <queue>

#include "sector/error.hpp"

namespace sector::sphere {

namespace {

bool holds(const SchedSegment& s, const transport::Address& node) {
  return std::find(s.locations.begin(), s.locations.end(), node) != s.locations.end();
}

}  // namespace

Scheduler::Scheduler(std::vector<SchedSegment> segments, std::vector<transport::Address> spe_nodes)
    : segments_(std::move(segments)), nodes_(std::move(spe_nodes)), current_(nodes_.size()), avoid_(segments_.size()) {
  if (nodes_.empty()) fail(ErrorCode::invalid_argument, "scheduler needs at least one SPE");
  std::map<std::string, std::size_t> ids;
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    auto [it, fresh] = ids.emplace(segments_[i].file, ids.size());
    file_of_.push_back(it->second);
    pending_.insert(i);
  }
  file_running_.assign(ids.size(), 0);
}

bool Scheduler::is_local(std::size_t segment, std::size_t spe) const { return holds(segments_[segment], nodes_[spe]); }

bool Scheduler::allowed(std::size_t segment, std::size_t spe) const {
  const auto& avoid = avoid_[segment];
  if (avoid.empty() || !avoid.count(nodes_[spe])) return true;
  return std::all_of(nodes_.begin(), nodes_.end(), [&](const auto& n) { return avoid.count(n) > 0; });
}

std::optional<std::size_t> Scheduler::pick(std::size_t spe, bool local, bool file_running) const {
  for (auto seg : pending_) {
    if (is_local(seg, spe) != local) continue;
    if ((file_running_[file_of_[seg]] > 0) != file_running) continue;
    if (!allowed(seg, spe)) continue;
    return seg;
  }
  return std::nullopt;
}

void Scheduler::start(std::size_t spe, std::size_t segment) {
  pending_.erase(segment);
  current_[spe] = segment;
  ++file_running_[file_of_[segment]];
  ++running_count_;
}

std::vector<std::pair<std::size_t, std::size_t>> Scheduler::assign(const std::vector<std::size_t>& idle_spes) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  std::vector<bool> served(idle_spes.size(), false);
  const std::pair<bool, bool> tiers[] = {{true, false}, {false, false}, {true, true}, {false, true}};
  for (auto [local, running] : tiers) {
    for (std::size_t k = 0; k < idle_spes.size(); ++k) {
      auto spe = idle_spes[k];
      if (served[k] || current_.at(spe)) continue;
      if (auto seg = pick(spe, local, running)) {
        start(spe, *seg);
        served[k] = true;
        out.emplace_back(spe, *seg);
      }
    }
  }
  return out;
}

void Scheduler::release(std::size_t spe) {
  auto& cur = current_.at(spe);
  if (!cur) return;
  --file_running_[file_of_[*cur]];
  --running_count_;
  cur.reset();
}

void Scheduler::requeue(std::size_t segment, const transport::Address& avoid) {
  avoid_.at(segment).insert(avoid);
  pending_.insert(segment);
}

std::vector<ScheduleEvent> simulate_schedule(const ScheduleInstance& inst) {
  Scheduler sched(inst.segments, inst.spe_nodes);
  std::vector<ScheduleEvent> log;
  using Finish = std::pair<double, std::size_t>;  // time, spe
  std::priority_queue<Finish, std::vector<Finish>, std::greater<>> finishing;
  std::vector<std::size_t> running_seg(inst.spe_nodes.size());
  std::vector<bool> busy(inst.spe_nodes.size(), false);
  std::vector<std::size_t> idle(inst.spe_nodes.size());
  for (std::size_t i = 0; i < idle.size(); ++i) idle[i] = i;
  double now = 0;
  for (;;) {
    for (auto [spe, seg] : sched.assign(idle)) {
      log.push_back({now, ScheduleEvent::Kind::assign, spe, seg});
      running_seg[spe] = seg;
      busy[spe] = true;
      finishing.emplace(now + inst.durations.at(seg), spe);
    }
    if (finishing.empty()) break;
    now = finishing.top().first;
    std::vector<std::size_t> freed;
    while (!finishing.empty() && finishing.top().first == now) {
      freed.push_back(finishing.top().second);
      finishing.pop();
    }
    std::sort(freed.begin(), freed.end());
    for (auto spe : freed) {
      log.push_back({now, ScheduleEvent::Kind::finish, spe, running_seg[spe]});
      sched.release(spe);
      busy[spe] = false;
    }
    idle.clear();
    for (std::size_t i = 0; i < busy.size(); ++i)
      if (!busy[i]) idle.push_back(i);
  }
  return log;
}

ScheduleInstance random_schedule_instance(std::mt19937_64& rng) {
  auto uni = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  ScheduleInstance inst;
  int n_nodes = uni(1, 6);
  for (int n = 0; n < n_nodes; ++n) {
    int spes = uni(1, 2);
    for (int s = 0; s < spes; ++s) inst.spe_nodes.push_back("n" + std::to_string(n));
  }
  // Some files may live on nodes without an SPE.
  int n_files = uni(1, 8);
  for (int f = 0; f < n_files; ++f) {
    std::vector<transport::Address> locs;
    int replicas = uni(1, 3);
    for (int r = 0; r < replicas; ++r) {
      auto node = "n" + std::to_string(uni(0, n_nodes));
      if (std::find(locs.begin(), locs.end(), node) == locs.end()) locs.push_back(node);
    }
    int segs = uni(1, 6);
    for (int s = 0; s < segs; ++s) {
      inst.segments.push_back({"file" + std::to_string(f), locs});
      // coarse durations make simultaneous finishes common
      inst.durations.push_back(static_cast<double>(uni(1, 4)));
    }
  }
  return inst;
}

std::vector<std::string> validate_schedule(const ScheduleInstance& inst, const std::vector<ScheduleEvent>& log) {
  std::vector<std::string> bad;
  const auto n_seg = inst.segments.size();
  const auto n_spe = inst.spe_nodes.size();
  std::vector<int> state(n_seg, 0);  // 0 pending, 1 running, 2 done
  std::vector<std::optional<std::size_t>> busy(n_spe);
  std::map<std::string, int> running_files;

  auto local = [&](std::size_t seg, std::size_t spe) {
    const auto& l = inst.segments[seg].locations;
    return std::find(l.begin(), l.end(), inst.spe_nodes[spe]) != l.end();
  };
  auto file_busy = [&](std::size_t seg) { return running_files[inst.segments[seg].file] > 0; };
  auto where = [](const ScheduleEvent& e) {
    return "t=" + std::to_string(e.time) + " spe " + std::to_string(e.spe) + " segment " + std::to_string(e.segment);
  };
  std::vector<std::size_t> remote_now;  // segments sent to a remote SPE at this instant
  auto check_instant = [&](double t) {
    for (auto seg : remote_now)
      for (std::size_t p = 0; p < n_spe; ++p)
        if (!busy[p] && local(seg, p))
          bad.push_back("t=" + std::to_string(t) + ": segment " + std::to_string(seg) + " ran remotely while local SPE " +
                        std::to_string(p) + " stayed idle");
    remote_now.clear();
    bool any_pending = std::find(state.begin(), state.end(), 0) != state.end();
    bool any_idle = std::any_of(busy.begin(), busy.end(), [](const auto& b) { return !b.has_value(); });
    if (any_pending && any_idle) bad.push_back("t=" + std::to_string(t) + ": SPE idle while segments pending");
  };

  double last_time = 0;
  for (std::size_t i = 0; i < log.size(); ++i) {
    const auto& e = log[i];
    if (e.spe >= n_spe || e.segment >= n_seg) {
      bad.push_back("event out of range: " + where(e));
      continue;
    }
    if (e.time < last_time) bad.push_back("time goes backwards: " + where(e));
    if (i > 0 && e.time != last_time) check_instant(last_time);
    last_time = e.time;
    if (e.kind == ScheduleEvent::Kind::finish) {
      if (busy[e.spe] != e.segment || state[e.segment] != 1) bad.push_back("finish without run: " + where(e));
      busy[e.spe].reset();
      state[e.segment] = 2;
      --running_files[inst.segments[e.segment].file];
      continue;
    }
    if (state[e.segment] != 0) bad.push_back("segment assigned twice: " + where(e));
    if (busy[e.spe]) bad.push_back("SPE already busy: " + where(e));
    const bool running = file_busy(e.segment);
    if (running) {
      for (std::size_t s = 0; s < n_seg; ++s)
        if (state[s] == 0 && !file_busy(s)) {
          bad.push_back("same-file segment started while segment " + std::to_string(s) + " of an idle file pending: " +
                        where(e));
          break;
        }
    }
    if (!local(e.segment, e.spe)) {
      remote_now.push_back(e.segment);
      for (std::size_t s = 0; s < n_seg; ++s)
        if (state[s] == 0 && local(s, e.spe) && (running || !file_busy(s))) {
          bad.push_back("remote segment chosen over local segment " + std::to_string(s) + ": " + where(e));
          break;
        }
    }
    state[e.segment] = 1;
    busy[e.spe] = e.segment;
    ++running_files[inst.segments[e.segment].file];
  }
  if (!log.empty()) check_instant(last_time);
  for (std::size_t s = 0; s < n_seg; ++s)
    if (state[s] != 2) bad.push_back("segment " + std::to_string(s) + " never completed");
  return bad;
}

}  // namespace sector::sphere
