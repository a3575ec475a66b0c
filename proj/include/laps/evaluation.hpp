#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "laps/stream_io.hpp"

namespace laps {

struct F1Result {
  double tolerance_s = 0.0;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct BoundaryOptions {
  // Keep a boundary at t = 0 and the end of a truncated (end-of-stream) segment.
  bool include_endpoints = false;
};

// Sorted start/end times of all primitives, merged when closer than 1e-6 s.
std::vector<double> extract_boundaries(std::span<const Primitive> primitives, const BoundaryOptions& opts = {});

// One-to-one matching of predicted to ground-truth boundaries within `tol`
// seconds. Greedy two-pointer matching on sorted lists, which is a maximum
// matching for this interval structure. Throws DataError on unsorted input.
F1Result boundary_f1(std::span<const double> pred, std::span<const double> gt, double tol);

}  // namespace laps
