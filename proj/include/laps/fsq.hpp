#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace laps {

struct FsqConfig {
  std::vector<int> levels{8, 8, 8, 4};
  std::uint32_t latent_dim = 768;

  void validate() const;
  std::uint32_t codebook_size() const;
};

// Finite scalar quantizer over a fixed per-dimension level grid.
//
// quantize(x) = snap(bound(x)). bound() squashes each coordinate with tanh
// onto the open interval the grid spans (even level counts get the usual
// half-step offset so that 0 maps to 0). snap() rounds onto the grid and is
// idempotent. Codes are mixed-radix with dimension 0 most significant.
class Fsq {
 public:
  struct Quantized {
    std::vector<double> grid;  // rounded bounded values, one per dimension
    std::uint32_t code = 0;
  };

  explicit Fsq(std::vector<int> levels);

  std::size_t dims() const { return levels_.size(); }
  std::uint32_t codebook_size() const { return codebook_size_; }
  const std::vector<int>& levels() const { return levels_; }

  std::vector<double> bound(std::span<const double> x) const;
  Quantized snap(std::span<const double> bounded) const;
  Quantized quantize(std::span<const double> x) const { return snap(bound(x)); }

  std::uint32_t code_of(std::span<const int> level_indices) const;
  std::vector<int> level_indices(std::uint32_t code) const;
  // Grid coordinates of a code in bounded space.
  std::vector<double> grid_point(std::uint32_t code) const;

 private:
  std::vector<int> levels_;
  std::vector<std::uint32_t> radix_;  // place value per dimension
  std::uint32_t codebook_size_ = 1;
};

}  // namespace laps
