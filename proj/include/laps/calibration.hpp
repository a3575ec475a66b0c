#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "laps/stream_io.hpp"

namespace laps {

struct CalibrationConfig {
  std::uint32_t otsu_bins = 256;
  std::uint32_t n_candidates = 200;

  void validate() const;
};

struct SweepEntry {
  double theta = 0.0;
  double f1 = 0.0;
};

struct CalibrationResult {
  double theta_on = 0.0;
  double theta_off = 0.0;
  double f1_at_best = 0.0;
  double otsu_threshold = 0.0;
  std::vector<SweepEntry> sweep_table;
};

// Mean keypoint speed per frame step: (1/N) sum_n ||p[t+1][n] - p[t][n]||.
std::vector<double> velocity_proxy_energy(const KeypointClip& clip);

// Histogram Otsu: `bins` equal-width bins over [min, max]; returns the bin
// edge that maximizes between-class variance (bin centers as class values,
// first edge wins ties). A constant signal returns that constant.
double otsu_threshold(std::span<const double> signal, std::uint32_t bins = 256);

// label[t] = 1 iff proxy[t] > tau.
std::vector<std::uint8_t> pseudo_labels(std::span<const double> proxy, double tau);

// Framewise binary F1 with label 1 as positive; 0 when there is no true positive.
double binary_f1(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> truth);

// n linearly interpolated quantiles of `values` at i/(n-1), i = 0..n-1.
std::vector<double> quantile_candidates(std::span<const double> values, std::uint32_t n);

// Picks the candidate maximizing F1(E > theta, y_pseudo); ties go to the
// smallest theta. Throws DegenerateLabelsError when y_pseudo has no positive.
CalibrationResult sweep_theta_on(std::span<const double> energy_smoothed, std::span<const std::uint8_t> y_pseudo,
                                 std::span<const double> candidates, double ratio);

// Smoothed latent energy and velocity proxy on the same time base: energy
// step t is paired with the proxy at frame_of_step[t].
struct AlignedSignals {
  std::vector<double> energy_smoothed;
  std::vector<double> proxy;
};

AlignedSignals align_signals(const KeypointClip& clip, const LatentStream& stream, double alpha);

// Dataset-level calibration: Otsu over the pooled proxy, quantile grid over
// the pooled smoothed energy, F1 sweep over everything at once. Result does
// not depend on clip order.
CalibrationResult calibrate(std::span<const AlignedSignals> clips, const CalibrationConfig& cfg, double ratio);

}  // namespace laps
