#pragma once

#include <filesystem>
#include <string>

#include "sector/sphere/job.hpp"

namespace sector::cluster {

/// Job descriptor, one `key = value` per line:
///
///   id = sort-1                  ; optional
///   inputs = a.dat, b.dat
///   operator = identity
///   params = 68656c6c6f          ; hex, optional
///   output = shuffle             ; origin, local or shuffle
///   destinations = node1, node2  ; shuffle buckets, in order
///   nodes = node1, node2         ; SPE hosts, optional
///   whole_file = false
///   segment_min = 1048576
///   segment_max = 67108864
///   sample_size = 10000          ; terasort only
sphere::JobSpec parse_job(const std::string& text);
sphere::JobSpec load_job(const std::filesystem::path& path);
/// `sample_size` of a terasort descriptor, 10000 if absent.
std::uint64_t job_sample_size(const std::string& text);

std::string hex_decode(const std::string& hex);

}  // namespace sector::cluster
