#include "laps/icss.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "laps/errors.hpp"
#include "laps/rng.hpp"

namespace laps {

namespace {

std::pair<std::size_t, std::size_t> decode_pair(std::size_t index, std::size_t n) {
  std::size_t i = 0;
  while (index >= n - 1 - i) {
    index -= n - 1 - i;
    ++i;
  }
  return {i, i + 1 + index};
}

SimilarityStat summarize(const std::vector<double>& values) {
  SimilarityStat s;
  s.n_pairs = values.size();
  if (values.empty()) return s;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - s.mean) * (v - s.mean);
  s.std = std::sqrt(var / static_cast<double>(values.size()));
  return s;
}

constexpr std::uint64_t kBaselineTag = 0xba5e11e5ULL;

}  // namespace

std::vector<double> norm_weighted_pool(const MatrixF& frames) {
  if (frames.rows() == 0) throw DataError("pool: empty frame set");
  std::vector<double> sum(frames.cols(), 0.0);
  for (std::size_t f = 0; f < frames.rows(); ++f) {
    double norm = 0.0;
    for (float v : frames.row(f)) norm += static_cast<double>(v) * v;
    norm = std::sqrt(norm);
    if (!(norm > 0.0)) throw DataError("pool: zero frame vector at row " + std::to_string(f));
    const auto row = frames.row(f);
    for (std::size_t j = 0; j < row.size(); ++j) sum[j] += norm * (row[j] / norm);
  }
  double norm = 0.0;
  for (double v : sum) norm += v * v;
  norm = std::sqrt(norm);
  if (!(norm > 0.0)) throw DataError("pool: frame features cancel to zero");
  for (auto& v : sum) v /= norm;
  return sum;
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw DataError("cosine: dimension mismatch");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (!(na > 0.0 && nb > 0.0)) throw DataError("cosine: zero vector");
  return std::clamp(dot / std::sqrt(na * nb), -1.0, 1.0);
}

std::vector<std::pair<std::size_t, std::size_t>> sample_pairs(std::size_t members, std::size_t budget,
                                                              std::uint64_t seed) {
  if (members < 2) throw ClusterTooSmallError("cluster too small for ICSS");
  const std::size_t total = members * (members - 1) / 2;
  std::vector<std::size_t> picked;
  if (budget >= total) {
    picked.resize(total);
    for (std::size_t i = 0; i < total; ++i) picked[i] = i;
  } else {
    // Floyd's algorithm: `budget` distinct indices from [0, total).
    Rng rng(seed);
    std::set<std::size_t> chosen;
    for (std::size_t j = total - budget; j < total; ++j) {
      const std::size_t t = rng.below(j + 1);
      if (!chosen.insert(t).second) chosen.insert(j);
    }
    picked.assign(chosen.begin(), chosen.end());
  }
  std::vector<std::pair<std::size_t, std::size_t>> out;
  out.reserve(picked.size());
  for (auto idx : picked) out.push_back(decode_pair(idx, members));
  return out;
}

IcssReport icss(const std::map<std::string, std::vector<double>>& descriptors, const std::vector<std::string>& ids,
                const std::vector<std::uint32_t>& assignments, std::uint32_t k, std::size_t budget,
                std::uint64_t seed) {
  if (ids.size() != assignments.size()) throw DataError("icss: ids and assignments differ in length");
  std::vector<const std::vector<double>*> desc(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    auto it = descriptors.find(ids[i]);
    if (it == descriptors.end()) throw DataError("icss: no descriptor for " + ids[i]);
    desc[i] = &it->second;
  }
  IcssReport r;
  r.pair_budget = budget;
  r.seed = seed;
  std::vector<std::vector<std::size_t>> members(k);
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    if (assignments[i] >= k) throw DataError("icss: assignment out of range");
    members[assignments[i]].push_back(i);
  }

  std::vector<double> pooled;
  for (std::uint32_t c = 0; c < k; ++c) {
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    try {
      pairs = sample_pairs(members[c].size(), budget, derive_seed(seed, c));
    } catch (const ClusterTooSmallError&) {
      r.per_cluster[c] = SimilarityStat{};
      r.too_small.push_back(c);
      continue;
    }
    std::vector<double> values;
    values.reserve(pairs.size());
    for (auto [a, b] : pairs) {
      const auto ia = members[c][a];
      const auto ib = members[c][b];
      const double cs = cosine(*desc[ia], *desc[ib]);
      values.push_back(cs);
      r.audit.push_back({ids[ia], ids[ib], static_cast<int>(c), cs});
    }
    pooled.insert(pooled.end(), values.begin(), values.end());
    r.per_cluster[c] = summarize(values);
  }
  r.overall = summarize(pooled);

  if (ids.size() >= 2) {
    const auto pairs = sample_pairs(ids.size(), budget * k, derive_seed(seed, kBaselineTag));
    std::vector<double> values;
    values.reserve(pairs.size());
    for (auto [a, b] : pairs) {
      const double cs = cosine(*desc[a], *desc[b]);
      values.push_back(cs);
      r.audit.push_back({ids[a], ids[b], -1, cs});
    }
    r.baseline = summarize(values);
  }
  return r;
}

}  // namespace laps
