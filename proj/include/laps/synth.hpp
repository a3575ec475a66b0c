#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "laps/matrix.hpp"
#include "laps/stream_io.hpp"

namespace laps {

struct Phase {
  bool action = false;
  double duration_s = 0.0;
  int template_id = -1;  // action phases only
};

struct DurationRange {
  double min_s = 0.0;
  double max_s = 0.0;
};

struct SynthSpec {
  std::uint32_t n_points = 16;
  double fps = 30.0;
  std::uint32_t n_actions = 3;
  double total_s = 120.0;
  DurationRange idle{2.0, 4.0};
  DurationRange action{2.0, 5.0};
  double idle_jitter_sigma = 1.0;  // px
  double action_amplitude = 40.0;  // px
  std::uint64_t seed = 0;
  // Template shapes and feature directions come from this seed so that every
  // stream of a corpus shares the same action vocabulary.
  std::uint64_t template_seed = 7;
  std::uint32_t feature_dim = 64;
  double feature_noise = 0.25;
  // Explicit phase list; when empty a random idle/action schedule filling
  // total_s is drawn (always idle-bracketed).
  std::vector<Phase> schedule;

  void validate() const;
};

struct SynthStream {
  KeypointClip clip;
  GroundTruth truth;           // boundaries + labeled action segments
  std::vector<Phase> phases;   // realized schedule
  MatrixF frame_features;      // frames x feature_dim raw per-frame features
};

// Idle phases hold the points still up to Gaussian jitter; action phases play
// one sinusoidal template (template-specific direction, frequency, harmonic
// and per-point gain) on top of the jitter. Positions stay continuous across
// phase changes. Deterministic in spec.seed.
SynthStream generate(const SynthSpec& spec);

struct CorpusEntry {
  std::string id;
  std::string clip;
  std::string gt;
  std::string frames;
  std::uint64_t seed = 0;
};

struct CorpusManifest {
  std::vector<CorpusEntry> streams;
};

// Writes n streams (seeds derived from spec.seed) plus manifest.json to dir.
CorpusManifest generate_corpus(const SynthSpec& spec, std::size_t n_streams, const std::filesystem::path& dir);

CorpusManifest read_corpus_manifest(const std::filesystem::path& dir);

}  // namespace laps
