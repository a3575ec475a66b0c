#include "laps/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "laps/energy_detector.hpp"
#include "laps/errors.hpp"

namespace laps {

void CalibrationConfig::validate() const {
  if (otsu_bins < 2) throw ConfigError("calibration: otsu_bins must be >= 2");
  if (n_candidates < 1) throw ConfigError("calibration: n_candidates must be >= 1");
}

std::vector<double> velocity_proxy_energy(const KeypointClip& clip) {
  clip.validate();
  std::vector<double> proxy(clip.frames - 1, 0.0);
  for (std::size_t t = 0; t + 1 < clip.frames; ++t) {
    double sum = 0.0;
    for (std::size_t n = 0; n < clip.points; ++n) {
      const double dx = static_cast<double>(clip.x(t + 1, n)) - clip.x(t, n);
      const double dy = static_cast<double>(clip.y(t + 1, n)) - clip.y(t, n);
      sum += std::hypot(dx, dy);
    }
    proxy[t] = sum / clip.points;
  }
  return proxy;
}

double otsu_threshold(std::span<const double> signal, std::uint32_t bins) {
  if (signal.empty()) throw DataError("otsu: empty signal");
  if (bins < 2) throw ConfigError("otsu: bins must be >= 2");
  const auto [lo_it, hi_it] = std::minmax_element(signal.begin(), signal.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  if (!std::isfinite(lo) || !std::isfinite(hi)) throw DataError("otsu: non-finite signal");
  if (lo == hi) return lo;

  const double width = (hi - lo) / bins;
  std::vector<double> counts(bins, 0.0);
  for (double v : signal) {
    auto b = static_cast<std::size_t>((v - lo) / width);
    counts[std::min<std::size_t>(b, bins - 1)] += 1.0;
  }

  const double n = static_cast<double>(signal.size());
  double total_moment = 0.0;
  for (std::size_t i = 0; i < bins; ++i) total_moment += counts[i] * (lo + (i + 0.5) * width);

  double best = -1.0;
  std::size_t best_edge = 1;
  double w0 = 0.0;
  double m0 = 0.0;
  for (std::size_t k = 1; k < bins; ++k) {
    w0 += counts[k - 1];
    m0 += counts[k - 1] * (lo + (k - 0.5) * width);
    const double w1 = n - w0;
    if (w0 == 0.0 || w1 == 0.0) continue;
    const double mu0 = m0 / w0;
    const double mu1 = (total_moment - m0) / w1;
    const double between = (w0 / n) * (w1 / n) * (mu0 - mu1) * (mu0 - mu1);
    if (between > best) {
      best = between;
      best_edge = k;
    }
  }
  return std::clamp(lo + best_edge * width, lo, hi);
}

std::vector<std::uint8_t> pseudo_labels(std::span<const double> proxy, double tau) {
  std::vector<std::uint8_t> labels(proxy.size());
  std::transform(proxy.begin(), proxy.end(), labels.begin(), [tau](double v) { return v > tau ? 1 : 0; });
  return labels;
}

double binary_f1(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> truth) {
  if (pred.size() != truth.size()) throw DataError("f1: length mismatch");
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] && truth[i]) ++tp;
    else if (pred[i]) ++fp;
    else if (truth[i]) ++fn;
  }
  if (tp == 0) return 0.0;
  return 2.0 * tp / (2.0 * tp + fp + fn);
}

std::vector<double> quantile_candidates(std::span<const double> values, std::uint32_t n) {
  if (values.empty()) throw DataError("quantiles: empty input");
  if (n < 1) throw ConfigError("quantiles: need at least one candidate");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> out(n);
  if (n == 1) {
    out[0] = sorted.front();
    return out;
  }
  const double last = static_cast<double>(sorted.size() - 1);
  for (std::uint32_t i = 0; i < n; ++i) {
    const double pos = last * i / (n - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - lo;
    out[i] = sorted[lo] + frac * (sorted[hi] - sorted[lo]);
  }
  return out;
}

CalibrationResult sweep_theta_on(std::span<const double> energy_smoothed, std::span<const std::uint8_t> y_pseudo,
                                 std::span<const double> candidates, double ratio) {
  if (energy_smoothed.size() != y_pseudo.size()) throw DataError("sweep: energy and labels differ in length");
  if (candidates.empty()) throw DataError("sweep: empty candidate grid");
  if (std::none_of(y_pseudo.begin(), y_pseudo.end(), [](std::uint8_t v) { return v != 0; })) {
    throw DegenerateLabelsError("sweep: degenerate labels (no positive pseudo-label, F1 undefined)");
  }
  if (!(ratio > 0.0 && ratio <= 1.0)) throw ConfigError("sweep: ratio must lie in (0, 1]");

  CalibrationResult r;
  r.sweep_table.reserve(candidates.size());
  std::vector<std::uint8_t> pred(energy_smoothed.size());
  bool have = false;
  for (double theta : candidates) {
    std::transform(energy_smoothed.begin(), energy_smoothed.end(), pred.begin(),
                   [theta](double e) { return e > theta ? 1 : 0; });
    const double f1 = binary_f1(pred, y_pseudo);
    r.sweep_table.push_back({theta, f1});
    if (!have || f1 > r.f1_at_best || (f1 == r.f1_at_best && theta < r.theta_on)) {
      r.f1_at_best = f1;
      r.theta_on = theta;
      have = true;
    }
  }
  r.theta_off = ratio * r.theta_on;
  return r;
}

AlignedSignals align_signals(const KeypointClip& clip, const LatentStream& stream, double alpha) {
  const auto proxy = velocity_proxy_energy(clip);
  const auto energy = latent_action_energy(stream);
  AlignedSignals out;
  out.energy_smoothed = ema_smooth(energy, alpha, energy.front());
  out.proxy.resize(energy.size());
  for (std::size_t t = 0; t < energy.size(); ++t) {
    const auto frame = stream.frame_of_step[t];
    if (frame >= proxy.size()) throw DataError("calibration: latent step maps past the clip");
    out.proxy[t] = proxy[frame];
  }
  return out;
}

CalibrationResult calibrate(std::span<const AlignedSignals> clips, const CalibrationConfig& cfg, double ratio) {
  cfg.validate();
  std::vector<double> energy;
  std::vector<double> proxy;
  for (const auto& c : clips) {
    if (c.energy_smoothed.size() != c.proxy.size()) throw DataError("calibration: misaligned signals");
    energy.insert(energy.end(), c.energy_smoothed.begin(), c.energy_smoothed.end());
    proxy.insert(proxy.end(), c.proxy.begin(), c.proxy.end());
  }
  if (energy.empty()) throw DataError("calibration: no samples");
  const double tau = otsu_threshold(proxy, cfg.otsu_bins);
  const auto labels = pseudo_labels(proxy, tau);
  const auto candidates = quantile_candidates(energy, cfg.n_candidates);
  auto r = sweep_theta_on(energy, labels, candidates, ratio);
  r.otsu_threshold = tau;
  return r;
}

}  // namespace laps
