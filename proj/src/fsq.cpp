#include "laps/fsq.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "laps/errors.hpp"

namespace laps {

namespace {

constexpr double kBoundEps = 1e-3;

// Offset from level index to grid coordinate.
int half_width(int levels) { return levels / 2; }

}  // namespace

void FsqConfig::validate() const {
  if (levels.empty()) throw ConfigError("fsq: levels must be non-empty");
  std::uint64_t product = 1;
  for (int l : levels) {
    if (l < 2) throw ConfigError("fsq: every level count must be >= 2");
    product *= static_cast<std::uint64_t>(l);
    if (product > (1ULL << 31)) throw ConfigError("fsq: codebook too large");
  }
  if (latent_dim < levels.size()) throw ConfigError("fsq: latent_dim must be >= number of levels");
}

std::uint32_t FsqConfig::codebook_size() const {
  std::uint32_t c = 1;
  for (int l : levels) c *= static_cast<std::uint32_t>(l);
  return c;
}

Fsq::Fsq(std::vector<int> levels) : levels_(std::move(levels)) {
  FsqConfig{levels_, static_cast<std::uint32_t>(levels_.size())}.validate();
  radix_.assign(levels_.size(), 1);
  for (std::size_t i = levels_.size(); i-- > 0;) {
    radix_[i] = codebook_size_;
    codebook_size_ *= static_cast<std::uint32_t>(levels_[i]);
  }
}

std::vector<double> Fsq::bound(std::span<const double> x) const {
  if (x.size() != dims()) throw DataError("fsq: input has " + std::to_string(x.size()) + " dims, expected " + std::to_string(dims()));
  std::vector<double> out(dims());
  for (std::size_t i = 0; i < dims(); ++i) {
    const int l = levels_[i];
    const double half_l = (l - 1) * (1.0 + kBoundEps) / 2.0;
    const double offset = (l % 2 == 0) ? 0.5 : 0.0;
    const double shift = std::atanh(offset / half_l);
    out[i] = std::tanh(x[i] + shift) * half_l - offset;
  }
  return out;
}

Fsq::Quantized Fsq::snap(std::span<const double> bounded) const {
  if (bounded.size() != dims()) throw DataError("fsq: bounded vector has wrong dimension");
  Quantized q;
  q.grid.resize(dims());
  std::vector<int> idx(dims());
  for (std::size_t i = 0; i < dims(); ++i) {
    const int hw = half_width(levels_[i]);
    const int level = std::clamp(static_cast<int>(std::lround(bounded[i])) + hw, 0, levels_[i] - 1);
    idx[i] = level;
    q.grid[i] = static_cast<double>(level - hw);
  }
  q.code = code_of(idx);
  return q;
}

std::uint32_t Fsq::code_of(std::span<const int> level_indices) const {
  if (level_indices.size() != dims()) throw DataError("fsq: level index vector has wrong dimension");
  std::uint32_t code = 0;
  for (std::size_t i = 0; i < dims(); ++i) {
    if (level_indices[i] < 0 || level_indices[i] >= levels_[i]) throw DataError("fsq: level index out of range");
    code += static_cast<std::uint32_t>(level_indices[i]) * radix_[i];
  }
  return code;
}

std::vector<int> Fsq::level_indices(std::uint32_t code) const {
  if (code >= codebook_size_) throw DataError("fsq: code outside codebook");
  std::vector<int> idx(dims());
  for (std::size_t i = 0; i < dims(); ++i) {
    idx[i] = static_cast<int>(code / radix_[i]);
    code %= radix_[i];
  }
  return idx;
}

std::vector<double> Fsq::grid_point(std::uint32_t code) const {
  auto idx = level_indices(code);
  std::vector<double> g(dims());
  for (std::size_t i = 0; i < dims(); ++i) g[i] = static_cast<double>(idx[i] - half_width(levels_[i]));
  return g;
}

}  // namespace laps
