#include "laps/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "laps/errors.hpp"
#include "laps/rng.hpp"

namespace laps {

namespace {

double sq_dist(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

// Nearest centroid; lowest index wins ties.
std::pair<std::uint32_t, double> nearest(std::span<const double> row, const MatrixD& centroids) {
  std::uint32_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::uint32_t c = 0; c < centroids.rows(); ++c) {
    const double d = sq_dist(row, centroids.row(c));
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return {best, best_d};
}

MatrixD plus_plus_seeds(const MatrixD& x, std::uint32_t k, Rng& rng) {
  const std::size_t n = x.rows();
  MatrixD centroids(k, x.cols());
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  std::size_t pick = rng.below(n);
  for (std::uint32_t c = 0; c < k; ++c) {
    std::copy(x.row(pick).begin(), x.row(pick).end(), centroids.row(c).begin());
    if (c + 1 == k) break;
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], sq_dist(x.row(i), centroids.row(c)));
      total += d2[i];
    }
    if (total <= 0.0) {
      pick = rng.below(n);
      continue;
    }
    double target = rng.uniform() * total;
    pick = n - 1;
    for (std::size_t i = 0; i < n; ++i) {
      target -= d2[i];
      if (target < 0.0 && d2[i] > 0.0) {
        pick = i;
        break;
      }
    }
  }
  return centroids;
}

void recompute_centroids(const MatrixD& x, const std::vector<std::uint32_t>& assign, MatrixD& centroids,
                         std::vector<std::size_t>& sizes) {
  std::fill(centroids.data().begin(), centroids.data().end(), 0.0);
  std::fill(sizes.begin(), sizes.end(), 0);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto c = centroids.row(assign[i]);
    const auto r = x.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) c[j] += r[j];
    ++sizes[assign[i]];
  }
  for (std::size_t c = 0; c < centroids.rows(); ++c) {
    if (sizes[c] == 0) continue;
    for (auto& v : centroids.row(c)) v /= static_cast<double>(sizes[c]);
  }
}

// Moves the point farthest from its centroid (in a cluster of size > 1) into
// each empty cluster. Returns true if anything moved.
bool repair_empty(const MatrixD& x, std::vector<std::uint32_t>& assign, MatrixD& centroids,
                  std::vector<std::size_t>& sizes) {
  bool moved = false;
  for (std::uint32_t c = 0; c < centroids.rows(); ++c) {
    if (sizes[c] != 0) continue;
    std::size_t far = x.rows();
    double far_d = -1.0;
    for (std::size_t i = 0; i < x.rows(); ++i) {
      if (sizes[assign[i]] < 2) continue;
      const double d = sq_dist(x.row(i), centroids.row(assign[i]));
      if (d > far_d) {
        far_d = d;
        far = i;
      }
    }
    if (far == x.rows()) break;
    --sizes[assign[far]];
    assign[far] = c;
    sizes[c] = 1;
    moved = true;
  }
  if (moved) recompute_centroids(x, assign, centroids, sizes);
  return moved;
}

KMeansResult lloyd(const MatrixD& x, std::uint32_t k, std::uint32_t max_iter, Rng& rng) {
  KMeansResult r;
  r.centroids = plus_plus_seeds(x, k, rng);
  r.assignments.assign(x.rows(), 0);
  std::vector<std::size_t> sizes(k, 0);
  bool first = true;
  for (std::uint32_t it = 0; it < max_iter; ++it) {
    bool changed = first;
    first = false;
    for (std::size_t i = 0; i < x.rows(); ++i) {
      const auto c = nearest(x.row(i), r.centroids).first;
      if (c != r.assignments[i]) {
        r.assignments[i] = c;
        changed = true;
      }
    }
    if (!changed) break;
    recompute_centroids(x, r.assignments, r.centroids, sizes);
    repair_empty(x, r.assignments, r.centroids, sizes);
    r.inertia_trace.push_back(inertia(x, r.assignments, r.centroids));
  }
  r.inertia = inertia(x, r.assignments, r.centroids);
  return r;
}

}  // namespace

Standardized standardize(const MatrixD& x) {
  if (x.rows() < 2) throw DataError("standardize: need at least 2 rows");
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  Standardized s{MatrixD(n, d), std::vector<double>(d, 0.0), std::vector<double>(d, 1.0)};
  for (std::size_t j = 0; j < d; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += x(i, j);
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) var += (x(i, j) - mean) * (x(i, j) - mean);
    var /= static_cast<double>(n);
    const double sd = var > 0.0 ? std::sqrt(var) : 1.0;
    s.means[j] = mean;
    s.stds[j] = sd;
    for (std::size_t i = 0; i < n; ++i) s.data(i, j) = var > 0.0 ? (x(i, j) - mean) / sd : x(i, j);
  }
  return s;
}

MatrixD l2_normalize_rows(const MatrixD& x, std::span<const std::string> ids) {
  MatrixD out = x;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double norm = 0.0;
    for (double v : x.row(i)) norm += v * v;
    norm = std::sqrt(norm);
    if (!(norm > 0.0)) {
      const std::string who = i < ids.size() ? ids[i] : "row " + std::to_string(i);
      throw DegenerateEmbeddingError("degenerate embedding: zero vector for " + who);
    }
    for (auto& v : out.row(i)) v /= norm;
  }
  return out;
}

void KMeansConfig::validate() const {
  if (k < 1) throw ConfigError("kmeans: k must be >= 1");
  if (n_init < 1) throw ConfigError("kmeans: n_init must be >= 1");
  if (max_iter < 1) throw ConfigError("kmeans: max_iter must be >= 1");
}

double inertia(const MatrixD& x, std::span<const std::uint32_t> assignments, const MatrixD& centroids) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) s += sq_dist(x.row(i), centroids.row(assignments[i]));
  return s;
}

KMeansResult kmeans(const MatrixD& x, const KMeansConfig& cfg) {
  cfg.validate();
  if (cfg.k > x.rows()) throw DataError("kmeans: k exceeds number of points");
  KMeansResult best;
  for (std::uint32_t r = 0; r < cfg.n_init; ++r) {
    Rng rng(derive_seed(cfg.seed, r));
    auto run = lloyd(x, cfg.k, cfg.max_iter, rng);
    if (r == 0 || run.inertia < best.inertia) {
      best = std::move(run);
      best.best_restart = r;
    }
  }
  return best;
}

double silhouette(const MatrixD& x, std::span<const std::uint32_t> assignments, std::uint32_t k) {
  if (k < 2) throw DataError("silhouette: need k >= 2");
  if (assignments.size() != x.rows()) throw DataError("silhouette: assignment count mismatch");
  std::vector<std::size_t> sizes(k, 0);
  for (auto a : assignments) {
    if (a >= k) throw DataError("silhouette: assignment out of range");
    ++sizes[a];
  }
  if (std::count_if(sizes.begin(), sizes.end(), [](std::size_t s) { return s > 0; }) < 2) {
    throw DataError("silhouette: need at least two non-empty clusters");
  }
  const std::size_t n = x.rows();
  double total = 0.0;
  std::vector<double> sums(k);
  for (std::size_t i = 0; i < n; ++i) {
    std::fill(sums.begin(), sums.end(), 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) sums[assignments[j]] += std::sqrt(sq_dist(x.row(i), x.row(j)));
    }
    const auto own = assignments[i];
    if (sizes[own] < 2) continue;
    const double a = sums[own] / static_cast<double>(sizes[own] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (std::uint32_t c = 0; c < k; ++c) {
      if (c != own && sizes[c] > 0) b = std::min(b, sums[c] / static_cast<double>(sizes[c]));
    }
    const double m = std::max(a, b);
    if (m > 0.0) total += (b - a) / m;
  }
  return total / static_cast<double>(n);
}

double calinski_harabasz(const MatrixD& x, std::span<const std::uint32_t> assignments, std::uint32_t k) {
  const std::size_t n = x.rows();
  if (k < 2 || k >= n) throw DataError("calinski_harabasz: need 2 <= k < n");
  if (assignments.size() != n) throw DataError("calinski_harabasz: assignment count mismatch");
  for (auto a : assignments) {
    if (a >= k) throw DataError("calinski_harabasz: assignment out of range");
  }
  MatrixD centroids(k, x.cols());
  std::vector<std::size_t> sizes(k, 0);
  recompute_centroids(x, {assignments.begin(), assignments.end()}, centroids, sizes);
  std::vector<double> overall(x.cols(), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < x.cols(); ++j) overall[j] += x(i, j);
  }
  for (auto& v : overall) v /= static_cast<double>(n);
  double between = 0.0;
  for (std::uint32_t c = 0; c < k; ++c) between += sizes[c] * sq_dist(centroids.row(c), overall);
  const double within = inertia(x, assignments, centroids);
  if (within == 0.0) return std::numeric_limits<double>::infinity();
  return (between / (k - 1)) / (within / static_cast<double>(n - k));
}

double cluster_purity(std::span<const std::uint32_t> assignments, std::span<const int> labels, std::uint32_t k) {
  if (assignments.size() != labels.size()) throw DataError("purity: length mismatch");
  if (assignments.empty()) return 0.0;
  std::vector<std::map<int, std::size_t>> counts(k);
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    if (assignments[i] >= k) throw DataError("purity: assignment out of range");
    if (labels[i] >= 0) ++counts[assignments[i]][labels[i]];
  }
  std::size_t hit = 0;
  for (const auto& m : counts) {
    std::size_t top = 0;
    for (const auto& [label, c] : m) top = std::max(top, c);
    hit += top;
  }
  return static_cast<double>(hit) / static_cast<double>(assignments.size());
}

ClusterReport cluster_embeddings(const MatrixD& raw, std::vector<std::string> ids, const KMeansConfig& cfg) {
  if (ids.size() != raw.rows()) throw DataError("cluster: id count does not match rows");
  const auto normalized = l2_normalize_rows(standardize(raw).data, ids);
  auto km = kmeans(normalized, cfg);
  ClusterReport r;
  r.k = cfg.k;
  r.ids = std::move(ids);
  r.seed = cfg.seed;
  r.inertia = km.inertia;
  r.silhouette = cfg.k >= 2 ? silhouette(normalized, km.assignments, cfg.k) : 0.0;
  r.calinski_harabasz =
      (cfg.k >= 2 && cfg.k < normalized.rows()) ? calinski_harabasz(normalized, km.assignments, cfg.k) : 0.0;
  r.assignments = std::move(km.assignments);
  r.centroids = std::move(km.centroids);
  return r;
}

}  // namespace laps
