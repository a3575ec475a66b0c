#include "laps/energy_detector.hpp"

#include <cmath>

#include "laps/errors.hpp"

namespace laps {

void DetectorConfig::validate() const {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("detector: alpha must lie in (0, 1]");
  if (!std::isfinite(theta_on) || theta_on < 0.0) throw ConfigError("detector: theta_on must be finite and >= 0");
  if (!(hysteresis_ratio > 0.0 && hysteresis_ratio <= 1.0)) throw ConfigError("detector: ratio must lie in (0, 1]");
  if (up_count < 1 || down_count < 1) throw ConfigError("detector: up/down counts must be >= 1");
  if (min_len < 1) throw ConfigError("detector: min_len must be >= 1");
}

std::vector<double> latent_action_energy(const LatentStream& stream) {
  if (stream.steps() < 2) throw DataError("energy: stream needs at least 2 latent steps");
  std::vector<double> e(stream.steps() - 1);
  for (std::size_t t = 0; t + 1 < stream.steps(); ++t) {
    const auto a = stream.vector(t);
    const auto b = stream.vector(t + 1);
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double d = static_cast<double>(b[i]) - static_cast<double>(a[i]);
      sum += d * d;
    }
    e[t] = std::sqrt(sum);
  }
  return e;
}

namespace {

double ema_update(double alpha, double e, double y_prev) { return alpha * e + (1.0 - alpha) * y_prev; }

}  // namespace

std::vector<double> ema_smooth(std::span<const double> energy, double alpha, double y0) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("ema: alpha must lie in (0, 1]");
  std::vector<double> y(energy.size());
  double prev = y0;
  for (std::size_t t = 0; t < energy.size(); ++t) {
    prev = ema_update(alpha, energy[t], prev);
    y[t] = prev;
  }
  return y;
}

StepResult step(const DetectorState& state, double y, std::size_t t, const DetectorConfig& cfg) {
  StepResult r{state, std::nullopt};
  DetectorState& s = r.state;
  s.y_prev = y;
  if (s.mode == DetectorMode::Off) {
    if (y > cfg.theta_on) {
      if (s.run_above == 0) s.pending_start = t;
      ++s.run_above;
      if (s.run_above >= cfg.up_count) {
        s.mode = DetectorMode::On;
        s.run_above = 0;
        s.run_below = 0;
        s.pending_end.reset();
      }
    } else {
      s.run_above = 0;
      s.pending_start.reset();
    }
    return r;
  }

  if (y < cfg.theta_off()) {
    if (s.run_below == 0) s.pending_end = t;
    ++s.run_below;
    if (s.run_below >= cfg.down_count) {
      const StepSpan span{*s.pending_start, *s.pending_end, false};
      if (span.length() >= cfg.min_len) r.segment = span;
      const double last = s.y_prev;
      s = DetectorState{};
      s.y_prev = last;
    }
  } else {
    s.run_below = 0;
    s.pending_end.reset();
  }
  return r;
}

std::optional<StepSpan> finish(const DetectorState& state, std::size_t n_steps, const DetectorConfig& cfg) {
  if (state.mode != DetectorMode::On) return std::nullopt;
  const StepSpan span{*state.pending_start, n_steps, true};
  if (span.length() < cfg.min_len) return std::nullopt;
  return span;
}

std::vector<StepSpan> detect_spans(std::span<const double> energy, const DetectorConfig& cfg) {
  cfg.validate();
  std::vector<StepSpan> out;
  if (energy.empty()) return out;
  const auto y = ema_smooth(energy, cfg.alpha, energy.front());
  DetectorState state;
  for (std::size_t t = 0; t < y.size(); ++t) {
    auto r = step(state, y[t], t, cfg);
    state = r.state;
    if (r.segment) out.push_back(*r.segment);
  }
  if (auto last = finish(state, y.size(), cfg)) out.push_back(*last);
  return out;
}

Primitive make_primitive(const LatentStream& stream, const StepSpan& s, double fps, const std::string& source_id) {
  if (s.begin >= s.end || s.end >= stream.steps()) throw InvariantError("detector: span outside stream");
  Primitive p;
  p.source_id = source_id;
  p.dim = stream.dim;
  p.truncated = s.truncated;
  p.start_frame = stream.frame_of_step[s.begin];
  p.end_frame = stream.frame_of_step[s.end];
  p.start_s = frame_to_seconds(p.start_frame, fps);
  p.end_s = frame_to_seconds(p.end_frame, fps);
  const auto b = static_cast<std::ptrdiff_t>(s.begin);
  const auto e = static_cast<std::ptrdiff_t>(s.end);
  p.codes.assign(stream.codes.begin() + b, stream.codes.begin() + e);
  p.step_frames.assign(stream.frame_of_step.begin() + b, stream.frame_of_step.begin() + e);
  p.vectors.assign(stream.vectors.begin() + b * stream.dim, stream.vectors.begin() + e * stream.dim);
  return p;
}

std::vector<Primitive> detect(const LatentStream& stream, const DetectorConfig& cfg, double fps,
                              const std::string& source_id) {
  stream.validate();
  const auto energy = latent_action_energy(stream);
  std::vector<Primitive> out;
  for (const auto& s : detect_spans(energy, cfg)) out.push_back(make_primitive(stream, s, fps, source_id));
  return out;
}

StreamingDetector::StreamingDetector(DetectorConfig cfg) : cfg_(cfg) { cfg_.validate(); }

std::optional<StepSpan> StreamingDetector::push(double energy) {
  const double prev = (t_ == 0) ? energy : state_.y_prev;
  const double y = ema_update(cfg_.alpha, energy, prev);
  auto r = step(state_, y, t_, cfg_);
  state_ = r.state;
  ++t_;
  return r.segment;
}

std::optional<StepSpan> StreamingDetector::finish() const { return laps::finish(state_, t_, cfg_); }

}  // namespace laps
