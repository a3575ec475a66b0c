#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "laps/matrix.hpp"

namespace laps {

// v = normalize(sum_f ||u_f|| * u_f / ||u_f||) = normalize(sum_f u_f).
// Raw (pre-normalization) frame norms are the pooling weights.
std::vector<double> norm_weighted_pool(const MatrixF& frames);

double cosine(const std::vector<double>& a, const std::vector<double>& b);

// Uniform sample without replacement of unordered pairs (i < j) over
// `members` items; every pair when budget >= n(n-1)/2. Sorted output.
// Throws ClusterTooSmallError when members < 2.
std::vector<std::pair<std::size_t, std::size_t>> sample_pairs(std::size_t members, std::size_t budget,
                                                              std::uint64_t seed);

struct SimilarityStat {
  double mean = 0.0;
  double std = 0.0;
  std::size_t n_pairs = 0;
};

struct AuditPair {
  std::string a;
  std::string b;
  int cluster = -1;  // -1 marks a baseline pair
  double cosine = 0.0;
};

struct IcssReport {
  std::map<std::uint32_t, SimilarityStat> per_cluster;
  std::vector<std::uint32_t> too_small;  // clusters with < 2 members
  SimilarityStat overall;
  SimilarityStat baseline;
  std::size_t pair_budget = 0;
  std::uint64_t seed = 0;
  std::vector<AuditPair> audit;
};

// Per-cluster ICSS over sampled pairs, pooled overall figure, and a
// baseline of budget * k pairs drawn from the whole set irrespective of
// clusters. descriptors maps id -> unit descriptor.
IcssReport icss(const std::map<std::string, std::vector<double>>& descriptors, const std::vector<std::string>& ids,
                const std::vector<std::uint32_t>& assignments, std::uint32_t k, std::size_t budget, std::uint64_t seed);

}  // namespace laps
