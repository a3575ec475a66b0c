#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "laps/calibration.hpp"
#include "laps/clustering.hpp"
#include "laps/energy_detector.hpp"
#include "laps/frozen_embedder.hpp"
#include "laps/motion_encoder.hpp"
#include "laps/synth.hpp"

namespace laps {

struct IcssConfig {
  std::size_t budget = 2000;
  std::uint32_t frames_per_segment = 8;
};

struct EvalConfig {
  std::vector<double> tolerances_s{2.0, 5.0};
  bool include_endpoints = false;
};

// Every stage's settings in one declarative file. A missing theta_on means
// "calibrate first".
struct PipelineConfig {
  std::uint64_t seed = 0;
  EncoderConfig encoder;
  DetectorConfig detector;
  bool theta_on_set = false;
  CalibrationConfig calibration;
  EmbedderConfig embedder;
  bool enforce_parameter_budget = true;
  KMeansConfig clustering;
  IcssConfig icss;
  EvalConfig eval;

  // Overrides the global seed and every stage seed (the CLI --seed flag).
  void apply_seed(std::uint64_t s);
  // Cross-module consistency (encoder latent_dim == embedder input_dim, ...).
  void validate() const;
};

// Unknown keys are rejected so typos fail loudly.
PipelineConfig parse_pipeline_config(const std::string& json_text);
PipelineConfig load_pipeline_config(const std::filesystem::path& path);
std::string pipeline_config_to_json(const PipelineConfig& cfg);

SynthSpec parse_synth_spec(const std::string& json_text);
SynthSpec load_synth_spec(const std::filesystem::path& path);

}  // namespace laps
