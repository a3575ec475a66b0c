#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "laps/matrix.hpp"

namespace laps {

struct Standardized {
  MatrixD data;
  std::vector<double> means;
  std::vector<double> stds;  // zero-variance columns are reported as 1
};

// Per-column zero mean / unit (population) variance. Needs >= 2 rows.
Standardized standardize(const MatrixD& x);

// Scales each row to unit L2 norm. A zero row raises
// DegenerateEmbeddingError naming ids[row] when ids are given.
MatrixD l2_normalize_rows(const MatrixD& x, std::span<const std::string> ids = {});

struct KMeansConfig {
  std::uint32_t k = 3;
  std::uint64_t seed = 0;
  std::uint32_t n_init = 10;
  std::uint32_t max_iter = 300;

  void validate() const;
};

struct KMeansResult {
  std::vector<std::uint32_t> assignments;
  MatrixD centroids;
  double inertia = 0.0;
  std::vector<double> inertia_trace;  // objective after each Lloyd iteration of the kept run
  std::uint32_t best_restart = 0;
};

// Lloyd's algorithm with k-means++ seeding. Restart r draws from a seed
// derived from (seed, r) alone, so smaller n_init runs are prefixes of larger
// ones. The lowest inertia wins, earliest restart on ties. Empty clusters
// take the point farthest from its current centroid.
KMeansResult kmeans(const MatrixD& x, const KMeansConfig& cfg);

// Sum of squared distances of rows to their assigned centroids.
double inertia(const MatrixD& x, std::span<const std::uint32_t> assignments, const MatrixD& centroids);

// Mean silhouette with Euclidean distance; singleton members score 0 and
// a = b = 0 scores 0. Needs at least two non-empty clusters.
double silhouette(const MatrixD& x, std::span<const std::uint32_t> assignments, std::uint32_t k);

// [B / (k - 1)] / [W / (n - k)]; +infinity when W = 0. Needs 2 <= k < n.
double calinski_harabasz(const MatrixD& x, std::span<const std::uint32_t> assignments, std::uint32_t k);

// Fraction of items whose cluster's majority label matches their own.
// Items with label < 0 count as their own (never-majority) class.
double cluster_purity(std::span<const std::uint32_t> assignments, std::span<const int> labels, std::uint32_t k);

struct ClusterReport {
  std::uint32_t k = 0;
  std::vector<std::string> ids;
  std::vector<std::uint32_t> assignments;
  MatrixD centroids;  // in normalized space
  double silhouette = 0.0;
  double calinski_harabasz = 0.0;
  double inertia = 0.0;
  std::uint64_t seed = 0;
};

// standardize -> l2_normalize_rows -> kmeans -> internal metrics.
ClusterReport cluster_embeddings(const MatrixD& raw, std::vector<std::string> ids, const KMeansConfig& cfg);

}  // namespace laps
