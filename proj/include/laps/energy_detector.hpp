#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "laps/stream_io.hpp"

namespace laps {

struct DetectorConfig {
  double alpha = 0.2;             // EMA factor in (0, 1]
  double theta_on = 1.0;          // activation threshold
  double hysteresis_ratio = 0.5;  // theta_off = ratio * theta_on
  std::uint32_t up_count = 3;     // consecutive steps above theta_on to activate
  std::uint32_t down_count = 10;  // consecutive steps below theta_off to deactivate
  std::uint32_t min_len = 2;      // shortest emitted segment, in steps

  double theta_off() const { return hysteresis_ratio * theta_on; }
  void validate() const;
};

enum class DetectorMode { Off, On };

// Controller state between steps. pending_start is set while counting toward
// activation or while active; pending_end while counting toward deactivation.
struct DetectorState {
  DetectorMode mode = DetectorMode::Off;
  double y_prev = 0.0;
  std::uint32_t run_above = 0;
  std::uint32_t run_below = 0;
  std::optional<std::size_t> pending_start;
  std::optional<std::size_t> pending_end;

  bool operator==(const DetectorState&) const = default;
};

// Half-open step interval [begin, end) over the energy signal.
struct StepSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
  bool truncated = false;

  std::size_t length() const { return end - begin; }
  bool operator==(const StepSpan&) const = default;
};

struct StepResult {
  DetectorState state;
  std::optional<StepSpan> segment;
};

// E[t] = ||z_{t+1} - z_t||_2 over consecutive latent vectors.
std::vector<double> latent_action_energy(const LatentStream& stream);

// y_t = alpha * E[t] + (1 - alpha) * y_{t-1}, starting from y_{-1} = y0.
std::vector<double> ema_smooth(std::span<const double> energy, double alpha, double y0);

// One transition of the hysteresis controller on smoothed value y at step t.
// Strict comparisons: activation needs y > theta_on, deactivation y < theta_off.
StepResult step(const DetectorState& state, double y, std::size_t t, const DetectorConfig& cfg);

// Closes a segment still open after `n_steps` samples (end of stream).
std::optional<StepSpan> finish(const DetectorState& state, std::size_t n_steps, const DetectorConfig& cfg);

// Smooths (y0 = first sample) and runs the controller over a whole signal.
std::vector<StepSpan> detect_spans(std::span<const double> energy, const DetectorConfig& cfg);

// Cuts a primitive for span s out of the stream. Steps [begin, end) become
// the primitive; frame bounds come from frame_of_step.
Primitive make_primitive(const LatentStream& stream, const StepSpan& s, double fps, const std::string& source_id);

// Energy -> smoothing -> controller over the whole stream.
std::vector<Primitive> detect(const LatentStream& stream, const DetectorConfig& cfg, double fps,
                              const std::string& source_id);

// Single-pass online detector: consumes one energy sample at a time with
// O(1) state. Produces exactly the spans detect_spans produces.
class StreamingDetector {
 public:
  explicit StreamingDetector(DetectorConfig cfg);

  std::optional<StepSpan> push(double energy);
  std::optional<StepSpan> finish() const;

  const DetectorState& state() const { return state_; }
  std::size_t consumed() const { return t_; }

 private:
  DetectorConfig cfg_;
  DetectorState state_;
  std::size_t t_ = 0;
};

}  // namespace laps
