#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "laps/fsq.hpp"
#include "laps/stream_io.hpp"

namespace laps {

struct EncoderConfig {
  std::uint32_t window = 16;
  std::uint32_t hop = 16;
  std::uint64_t seed = 0;
  std::uint32_t n_points = 16;
  // Velocity magnitude (px/frame) that maps to unit pre-quantization latent.
  double velocity_scale = 8.0;
  FsqConfig fsq;

  void validate() const;
};

// Frame-to-frame displacement: (T-1) x N x 2, same layout as the tracks.
std::vector<float> velocities(const KeypointClip& clip);

struct EncodedStep {
  std::uint32_t code = 0;
  std::vector<float> z_q;
};

// Frozen surrogate motion tokenizer: seeded linear projection of each
// step's flattened velocities, FSQ, then a seeded orthonormal lift of the
// grid point into latent_dim. Stateless after construction.
class MotionEncoder {
 public:
  explicit MotionEncoder(EncoderConfig cfg);

  const EncoderConfig& config() const { return cfg_; }
  const Fsq& fsq() const { return fsq_; }

  // Pre-quantization latent for one step's N x 2 velocities.
  std::vector<double> project(std::span<const float> step_velocity) const;

  std::span<const float> prototype(std::uint32_t code) const;

  // Encodes every velocity step of one window ((W-1) x N x 2 floats).
  // Stream assembly drops steps already emitted by an overlapping window.
  std::vector<EncodedStep> encode_window(std::span<const float> vel_window) const;

  LatentStream encode_stream(const KeypointClip& clip) const;

 private:
  std::uint32_t encode_step(std::span<const float> step_velocity) const;

  EncoderConfig cfg_;
  Fsq fsq_;
  std::vector<double> projection_;  // dims x (2N), row-major
  std::vector<float> prototypes_;   // C x latent_dim
};

}  // namespace laps
