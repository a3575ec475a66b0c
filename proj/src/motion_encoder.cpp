#include "laps/motion_encoder.hpp"

#include <cmath>
#include <string>

#include "laps/errors.hpp"
#include "laps/rng.hpp"

namespace laps {

void EncoderConfig::validate() const {
  if (window < 2) throw ConfigError("encoder: window must be >= 2 frames");
  if (hop < 1 || hop > window) throw ConfigError("encoder: hop must lie in [1, window]");
  if (n_points < 1) throw ConfigError("encoder: n_points must be >= 1");
  if (!(velocity_scale > 0.0)) throw ConfigError("encoder: velocity_scale must be positive");
  fsq.validate();
}

std::vector<float> velocities(const KeypointClip& clip) {
  clip.validate();
  const std::size_t stride = static_cast<std::size_t>(clip.points) * 2;
  std::vector<float> out((clip.frames - 1) * stride);
  for (std::size_t t = 0; t + 1 < clip.frames; ++t) {
    for (std::size_t j = 0; j < stride; ++j) {
      out[t * stride + j] = clip.tracks[(t + 1) * stride + j] - clip.tracks[t * stride + j];
    }
  }
  return out;
}

MotionEncoder::MotionEncoder(EncoderConfig cfg) : cfg_(std::move(cfg)), fsq_(cfg_.fsq.levels) {
  cfg_.validate();
  const std::size_t dims = fsq_.dims();
  const std::size_t n = cfg_.n_points;

  // Row k mixes the two axes with a random direction and pools points with
  // positive weights summing to one.
  Rng rng(derive_seed(cfg_.seed, fnv1a("encoder/projection")));
  projection_.assign(dims * 2 * n, 0.0);
  for (std::size_t k = 0; k < dims; ++k) {
    const double ax = rng.normal();
    const double ay = rng.normal();
    const double norm = std::hypot(ax, ay);
    std::vector<double> pool(n);
    double total = 0.0;
    for (auto& w : pool) {
      w = rng.uniform(0.5, 1.5);
      total += w;
    }
    for (std::size_t p = 0; p < n; ++p) {
      const double w = pool[p] / total / cfg_.velocity_scale;
      projection_[k * 2 * n + 2 * p] = w * ax / norm;
      projection_[k * 2 * n + 2 * p + 1] = w * ay / norm;
    }
  }

  // Orthonormal lift columns via Gram-Schmidt on seeded Gaussian vectors.
  const std::size_t d_m = cfg_.fsq.latent_dim;
  Rng lift_rng(derive_seed(cfg_.seed, fnv1a("encoder/lift")));
  std::vector<std::vector<double>> cols(dims, std::vector<double>(d_m));
  for (std::size_t k = 0; k < dims; ++k) {
    for (auto& v : cols[k]) v = lift_rng.normal();
    for (std::size_t j = 0; j < k; ++j) {
      double dot = 0.0;
      for (std::size_t i = 0; i < d_m; ++i) dot += cols[k][i] * cols[j][i];
      for (std::size_t i = 0; i < d_m; ++i) cols[k][i] -= dot * cols[j][i];
    }
    double norm = 0.0;
    for (double v : cols[k]) norm += v * v;
    norm = std::sqrt(norm);
    for (auto& v : cols[k]) v /= norm;
  }

  const std::uint32_t c = fsq_.codebook_size();
  prototypes_.assign(static_cast<std::size_t>(c) * d_m, 0.0F);
  for (std::uint32_t code = 0; code < c; ++code) {
    const auto g = fsq_.grid_point(code);
    for (std::size_t i = 0; i < d_m; ++i) {
      double v = 0.0;
      for (std::size_t k = 0; k < dims; ++k) v += cols[k][i] * g[k];
      prototypes_[code * d_m + i] = static_cast<float>(v);
    }
  }
}

std::vector<double> MotionEncoder::project(std::span<const float> step_velocity) const {
  const std::size_t width = 2 * static_cast<std::size_t>(cfg_.n_points);
  if (step_velocity.size() != width) throw DataError("encoder: step velocity has wrong point count");
  std::vector<double> z(fsq_.dims(), 0.0);
  for (std::size_t k = 0; k < z.size(); ++k) {
    for (std::size_t j = 0; j < width; ++j) z[k] += projection_[k * width + j] * step_velocity[j];
  }
  return z;
}

std::span<const float> MotionEncoder::prototype(std::uint32_t code) const {
  if (code >= fsq_.codebook_size()) throw DataError("encoder: code outside codebook");
  const std::size_t d_m = cfg_.fsq.latent_dim;
  return {prototypes_.data() + code * d_m, d_m};
}

std::uint32_t MotionEncoder::encode_step(std::span<const float> step_velocity) const {
  const auto z = project(step_velocity);
  return fsq_.quantize(z).code;
}

std::vector<EncodedStep> MotionEncoder::encode_window(std::span<const float> vel_window) const {
  const std::size_t width = 2 * static_cast<std::size_t>(cfg_.n_points);
  const std::size_t steps = cfg_.window - 1;
  if (vel_window.size() != steps * width) {
    throw DataError("encoder: window holds " + std::to_string(vel_window.size()) + " values, expected " +
                    std::to_string(steps * width));
  }
  std::vector<EncodedStep> out;
  out.reserve(steps);
  for (std::size_t s = 0; s < steps; ++s) {
    const auto code = encode_step(vel_window.subspan(s * width, width));
    const auto proto = prototype(code);
    out.push_back({code, {proto.begin(), proto.end()}});
  }
  return out;
}

LatentStream MotionEncoder::encode_stream(const KeypointClip& clip) const {
  clip.validate();
  if (clip.points != cfg_.n_points) {
    throw DataError("encoder: clip has " + std::to_string(clip.points) + " points, config expects " +
                    std::to_string(cfg_.n_points));
  }
  if (clip.frames < cfg_.window) throw DataError("encoder: clip shorter than one window");

  const auto vel = velocities(clip);
  const std::size_t width = 2 * static_cast<std::size_t>(cfg_.n_points);
  const std::size_t d_m = cfg_.fsq.latent_dim;

  LatentStream out;
  out.dim = static_cast<std::uint32_t>(d_m);
  out.codebook_size = fsq_.codebook_size();
  bool any = false;
  std::uint32_t last_frame = 0;
  for (std::size_t start = 0; start + cfg_.window <= clip.frames; start += cfg_.hop) {
    for (std::size_t s = 0; s + 1 < cfg_.window; ++s) {
      const auto frame = static_cast<std::uint32_t>(start + s);
      if (any && frame <= last_frame) continue;
      const auto code = encode_step(std::span<const float>(vel).subspan(frame * width, width));
      const auto proto = prototype(code);
      out.codes.push_back(code);
      out.frame_of_step.push_back(frame);
      out.vectors.insert(out.vectors.end(), proto.begin(), proto.end());
      last_frame = frame;
      any = true;
    }
  }
  return out;
}

}  // namespace laps
