#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "laps/stream_io.hpp"

namespace laps {

struct EmbedderConfig {
  std::uint32_t model_dim = 256;
  std::uint32_t layers = 4;
  std::uint32_t heads = 4;
  std::uint32_t ff_dim = 512;
  std::uint32_t input_dim = 768;
  std::uint64_t seed = 0;

  void validate() const;
};

// Parameter count the default configuration is expected to land near.
inline constexpr double kReferenceParameterCount = 2.3e6;

struct SegmentEmbedding {
  std::string primitive_id;
  std::vector<float> raw;
  std::vector<float> normalized;
};

// Interleaved sinusoidal encoding: PE[2i] = sin(t / 10000^(2i/d)),
// PE[2i+1] = cos(t / 10000^(2i/d)).
std::vector<float> sinusoidal_pe(std::size_t t, std::size_t d);

// Randomly initialized, never-trained transformer encoder used for
// inference only: input projection + positional encoding, `layers` pre-norm
// blocks (multi-head self-attention, GELU feed-forward), final LayerNorm,
// mean pooling over time.
//
// Weights are drawn from a counter-based generator keyed by (seed, layer,
// tensor name), uniform with variance 1/fan_in; biases start at zero and
// LayerNorm at unit gain. Instances are immutable and safe to share across
// threads. Each sequence is evaluated on its own, so results never depend
// on batching.
class FrozenEmbedder {
 public:
  explicit FrozenEmbedder(EmbedderConfig cfg);
  ~FrozenEmbedder();
  FrozenEmbedder(FrozenEmbedder&&) noexcept;
  FrozenEmbedder& operator=(FrozenEmbedder&&) noexcept;

  const EmbedderConfig& config() const { return cfg_; }
  std::size_t parameter_count() const;

  // Throws ConfigError if the parameter count is more than `tolerance`
  // (relative) away from kReferenceParameterCount.
  void check_parameter_budget(double tolerance = 0.2) const;

  // seq is steps x input_dim, row-major.
  SegmentEmbedding embed(std::span<const float> seq, std::size_t steps, std::string id = {}) const;
  SegmentEmbedding embed(const Primitive& p, std::string id = {}) const;

  // Order-preserving; ids are primitive_id(source_id, index within source).
  std::vector<SegmentEmbedding> embed_all(std::span<const Primitive> primitives, unsigned jobs = 1) const;

 private:
  struct Weights;

  EmbedderConfig cfg_;
  std::unique_ptr<Weights> w_;
};

}  // namespace laps
