// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails. Usage: laps_acceptance [--jobs N] [--keep DIR]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <string>
#include <thread>
#include <vector>

#include "laps/calibration.hpp"
#include "laps/clustering.hpp"
#include "laps/energy_detector.hpp"
#include "laps/frozen_embedder.hpp"
#include "laps/fsq.hpp"
#include "laps/motion_encoder.hpp"
#include "laps/pipeline.hpp"
#include "laps/synth.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace laps;
using nlohmann::json;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, const std::function<Outcome()>& check) {
  Outcome o;
  try {
    o = check();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  if (!o.pass) ++failures;
  std::printf("%s  %2d  %s  (%s)\n", o.pass ? "PASS" : "FAIL", id, name.c_str(), o.detail.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::vector<double> bursty_trace(Rng& rng, std::size_t n) {
  std::vector<double> e;
  while (e.size() < n) {
    const double level = rng.uniform() < 0.5 ? rng.uniform(0.0, 0.6) : rng.uniform(0.8, 3.0);
    const auto len = 1 + rng.below(15);
    for (std::size_t i = 0; i < len && e.size() < n; ++i) e.push_back(std::max(0.0, level + rng.normal(0.0, 0.3)));
  }
  return e;
}

std::vector<StepSpan> run_steps(const std::vector<double>& y, const DetectorConfig& cfg) {
  std::vector<StepSpan> out;
  DetectorState s;
  for (std::size_t t = 0; t < y.size(); ++t) {
    auto r = step(s, y[t], t, cfg);
    s = r.state;
    if (r.segment) out.push_back(*r.segment);
  }
  if (auto last = finish(s, y.size(), cfg)) out.push_back(*last);
  return out;
}

LatentStream prefix(const LatentStream& s, std::size_t m) {
  LatentStream p = s;
  p.codes.resize(m);
  p.frame_of_step.resize(m);
  p.vectors.resize(m * s.dim);
  return p;
}

// Shared corpus state for the end-to-end criteria.
struct Corpus {
  fs::path dir;
  json report;
  double seconds = 0.0;
  std::vector<SynthStream> streams;
};

}  // namespace

int main(int argc, char** argv) {
  unsigned jobs = std::max(1U, std::thread::hardware_concurrency());
  std::string keep;
  for (int i = 1; i < argc; ++i) {
    if (!std::strcmp(argv[i], "--jobs") && i + 1 < argc) jobs = static_cast<unsigned>(std::stoul(argv[++i]));
    if (!std::strcmp(argv[i], "--keep") && i + 1 < argc) keep = argv[++i];
  }

  test::TempDir tmp;
  const fs::path root = keep.empty() ? tmp.path() : fs::path(keep);
  Corpus c;
  c.dir = root / "corpus";
  SynthSpec spec;  // 30 fps, 120 s, 3 templates, amplitude/jitter = 40
  spec.seed = 0;
  const auto manifest = generate_corpus(spec, 20, c.dir);
  for (const auto& e : manifest.streams) {
    SynthSpec s = spec;
    s.seed = e.seed;
    c.streams.push_back(generate(s));
  }
  {
    const auto t0 = std::chrono::steady_clock::now();
    c.report = run_pipeline(PipelineConfig{}, c.dir, root / "out", {jobs});
    c.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
  std::printf("corpus: %zu streams, pipeline %.2f s with %u jobs\n", manifest.streams.size(), c.seconds, jobs);

  report(1, "end-to-end boundary F1 on the synthetic corpus", [&] {
    const auto& f = c.report.at("f1");
    const double f2 = f.at(0).at("f1"), f5 = f.at(1).at("f1");
    const bool ok = c.report.at("n_streams") == 20 && c.report.at("failures").empty() && f2 >= 0.90 &&
                    f5 >= 0.95 && c.seconds <= 60.0;
    return Outcome{ok, fmt("F1@2s=%.4f F1@5s=%.4f runtime=%.2fs", f2, f5, c.seconds)};
  });

  report(2, "per-stream F1@5s >= F1@2s", [&] {
    std::size_t bad = 0, n = 0;
    for (const auto& s : c.report.at("streams")) {
      const double a = s.at("f1").at(0).at("f1"), b = s.at("f1").at(1).at("f1");
      bad += b < a;
      ++n;
    }
    return Outcome{n == 20 && bad == 0, fmt("%zu streams, %zu violations", n, bad)};
  });

  report(3, "cluster recovery: purity and silhouette", [&] {
    const auto& k = c.report.at("clusters");
    const double purity = k.at("purity"), sil = k.at("silhouette");
    return Outcome{k.at("k") == 3 && purity >= 0.9 && sil >= 0.3, fmt("purity=%.4f silhouette=%.4f", purity, sil)};
  });

  report(4, "per-cluster ICSS exceeds the random-pair baseline by 0.05", [&] {
    const auto& r = c.report.at("icss");
    const double base = r.at("baseline").at("mean");
    bool ok = r.at("per_cluster").size() == 3 && r.at("too_small").empty();
    std::string d = fmt("baseline=%.4f", base);
    for (const auto& [key, s] : r.at("per_cluster").items()) {
      const double m = s.at("mean");
      ok = ok && m >= base + 0.05;
      d += fmt(" c%s=%.4f", key.c_str(), m);
    }
    return Outcome{ok, d};
  });

  report(5, "squared distance equals 2(1 - cos) on 10^4 normalized pairs", [] {
    Rng rng(5);
    MatrixD x(20000, 64);
    for (auto& v : x.data()) v = rng.normal(0.0, rng.uniform(0.1, 10.0));
    const auto n = l2_normalize_rows(x);
    double worst = 0.0;
    for (std::size_t p = 0; p < 10000; ++p) {
      const std::size_t i = 2 * p, j = 2 * p + 1;
      double d2 = 0.0, dot = 0.0;
      for (std::size_t c = 0; c < 64; ++c) {
        d2 += (n(i, c) - n(j, c)) * (n(i, c) - n(j, c));
        dot += n(i, c) * n(j, c);
      }
      worst = std::max(worst, std::abs(d2 - 2.0 * (1.0 - dot)));
    }
    return Outcome{worst <= 1e-9, fmt("max deviation %.3g", worst)};
  });

  report(6, "streaming detector equals batch; hand hysteresis cases", [] {
    DetectorConfig h;
    h.theta_on = 1.0;
    h.hysteresis_ratio = 0.5;
    h.up_count = 2;
    h.down_count = 2;
    h.min_len = 1;
    h.alpha = 1.0;
    auto h3 = h;
    h3.up_count = 3;
    bool hand = run_steps({0, 2, 2, 2, 0.3, 0.3, 0}, h) == std::vector<StepSpan>{{1, 4, false}};
    hand = hand && run_steps({0, 2, 2, 0, 2, 0, 0, 0}, h3).empty();                           // debounce
    hand = hand && run_steps({1.0, 1.0, 1.0, 0.0}, h).empty();                                // strict on
    hand = hand && run_steps({2, 2, 0.5, 0.5, 0.5, 0.1, 0.1}, h) == std::vector<StepSpan>{{0, 5, false}};
    hand = hand && run_steps({2, 2, 0.1, 0.7, 0.1, 0.1}, h) == std::vector<StepSpan>{{0, 4, false}};  // band
    hand = hand && run_steps({0, 2, 2, 2, 2}, h) == std::vector<StepSpan>{{1, 5, true}};              // EOS
    hand = hand && run_steps({2, 2, 0.1}, h) == std::vector<StepSpan>{{0, 3, true}};

    Rng rng(1234);
    std::size_t mismatches = 0;
    for (int trial = 0; trial < 1000; ++trial) {
      DetectorConfig cfg;
      cfg.alpha = rng.uniform(0.05, 1.0);
      cfg.theta_on = rng.uniform(0.5, 1.5);
      cfg.hysteresis_ratio = rng.uniform(0.2, 1.0);
      cfg.up_count = 1 + static_cast<std::uint32_t>(rng.below(4));
      cfg.down_count = 1 + static_cast<std::uint32_t>(rng.below(8));
      cfg.min_len = 1 + static_cast<std::uint32_t>(rng.below(4));
      const auto e = bursty_trace(rng, 1 + rng.below(400));
      StreamingDetector sd(cfg);
      std::vector<StepSpan> online;
      for (double v : e) {
        if (auto s = sd.push(v)) online.push_back(*s);
      }
      if (auto s = sd.finish()) online.push_back(*s);
      std::vector<oracle::Span> as;
      for (const auto& s : online) as.push_back({s.begin, s.end, s.truncated});
      const bool same = online == detect_spans(e, cfg) &&
                        as == oracle::hysteresis(oracle::ema(e, cfg.alpha), cfg.theta_on, cfg.theta_off(),
                                                 cfg.up_count, cfg.down_count, cfg.min_len);
      mismatches += !same;
    }
    return Outcome{hand && mismatches == 0, fmt("hand cases %s, %zu/1000 trace mismatches", hand ? "ok" : "FAILED",
                                                mismatches)};
  });

  report(7, "FSQ equals brute-force nearest prototype; extremes 0 and 2047", [] {
    const Fsq fsq({8, 8, 8, 4});
    Rng rng(17);
    std::size_t bad = 0;
    for (int i = 0; i < 1000; ++i) {
      std::vector<double> x(4);
      const double scale = rng.uniform(0.1, 5.0);
      for (auto& v : x) v = rng.normal(0.0, scale);
      bad += fsq.quantize(x).code != oracle::nearest_code(fsq.bound(x), fsq.levels());
    }
    const auto lo = fsq.quantize(std::vector<double>(4, -1e6)).code;
    const auto hi = fsq.quantize(std::vector<double>(4, 1e6)).code;
    return Outcome{bad == 0 && lo == 0 && hi == 2047, fmt("%zu/1000 mismatches, extremes %u and %u", bad, lo, hi)};
  });

  report(8, "Otsu equals exhaustive between-class variance search", [] {
    Rng rng(19);
    std::size_t bad = 0;
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<double> v;
      const double a = rng.uniform(0.0, 2.0), b = rng.uniform(4.0, 10.0);
      const double sa = rng.uniform(0.1, 0.8), sb = rng.uniform(0.1, 1.5), mix = rng.uniform(0.2, 0.8);
      const std::size_t n = 100 + rng.below(2000);
      for (std::size_t i = 0; i < n; ++i) v.push_back(std::abs(rng.uniform() < mix ? rng.normal(a, sa) : rng.normal(b, sb)));
      const double t = otsu_threshold(v, 256), o = oracle::otsu(v, 256);
      bad += std::abs(t - o) > 1e-12 * std::max(1.0, std::abs(o));
    }
    return Outcome{bad == 0, fmt("%zu/100 mismatches", bad)};
  });

  report(9, "calibrated theta_on between idle and action medians; order-invariant", [&] {
    const MotionEncoder enc(EncoderConfig{});
    const DetectorConfig det;
    std::vector<AlignedSignals> sig;
    std::vector<double> idle, action;
    for (const auto& s : c.streams) {
      const auto lat = enc.encode_stream(s.clip);
      sig.push_back(align_signals(s.clip, lat, det.alpha));
      for (std::size_t t = 0; t < sig.back().energy_smoothed.size(); ++t) {
        const double sec = frame_to_seconds(lat.frame_of_step[t], s.clip.fps);
        bool in_action = false;
        for (const auto& seg : s.truth.segments) in_action = in_action || (sec >= seg.start_s && sec < seg.end_s);
        (in_action ? action : idle).push_back(sig.back().energy_smoothed[t]);
      }
    }
    const double theta = calibrate(sig, CalibrationConfig{}, det.hysteresis_ratio).theta_on;
    const double mi = median(idle), ma = median(action);
    bool same = theta == c.report.at("theta_on").get<double>();
    Rng rng(9);
    for (int r = 0; r < 5; ++r) {
      auto perm = sig;
      for (std::size_t k = perm.size(); k > 1; --k) std::swap(perm[k - 1], perm[rng.below(k)]);
      same = same && calibrate(perm, CalibrationConfig{}, det.hysteresis_ratio).theta_on == theta;
    }
    return Outcome{mi < theta && theta < ma && same,
                   fmt("idle median=%.4g theta_on=%.4g action median=%.4g, permutations %s", mi, theta, ma,
                       same ? "identical" : "DIFFER")};
  });

  report(10, "k-means reaches the exhaustive optimum on small instances", [] {
    int hits = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      Rng rng(derive_seed(10, seed));
      const std::size_t n = 4 + rng.below(9);
      MatrixD x(n, 2);
      std::vector<std::vector<double>> rows(n, std::vector<double>(2));
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < 2; ++j) rows[i][j] = x(i, j) = rng.normal(0.0, 3.0);
      }
      KMeansConfig cfg;
      cfg.k = 2;
      cfg.n_init = 50;
      cfg.seed = seed;
      hits += std::abs(kmeans(x, cfg).inertia - oracle::best_two_partition_inertia(rows)) <= 1e-9;
    }
    return Outcome{hits >= 95, fmt("%d/100 seeds optimal", hits)};
  });

  report(11, "frozen embedder determinism, shapes, unit norm, parameter count", [] {
    const FrozenEmbedder a(EmbedderConfig{}), b(EmbedderConfig{});
    Rng rng(11);
    bool ok = true;
    double worst = 0.0;
    for (std::size_t t : {1, 5, 50}) {
      std::vector<float> seq(t * 768);
      for (auto& v : seq) v = static_cast<float>(rng.normal());
      const auto x = a.embed(seq, t), y = b.embed(seq, t), z = a.embed(seq, t);
      ok = ok && x.raw == y.raw && x.raw == z.raw && x.normalized == y.normalized;
      ok = ok && x.raw.size() == 256 && x.normalized.size() == 256;
      double n = 0.0;
      for (float v : x.normalized) n += double(v) * v;
      worst = std::max(worst, std::abs(std::sqrt(n) - 1.0));
    }
    const double params = static_cast<double>(a.parameter_count());
    const bool budget = std::abs(params - 2.3e6) <= 0.2 * 2.3e6;
    return Outcome{ok && worst <= 1e-6 && budget,
                   fmt("deterministic %s, norm deviation %.2g, %.0f parameters", ok ? "yes" : "NO", worst, params)};
  });

  report(12, "truncation never alters segments completed in the kept prefix", [&] {
    const MotionEncoder enc(EncoderConfig{});
    DetectorConfig det;
    det.theta_on = c.report.at("theta_on").get<double>();
    std::size_t checked = 0, altered = 0;
    for (std::size_t i = 0; i < c.streams.size(); ++i) {
      const auto lat = enc.encode_stream(c.streams[i].clip);
      const auto full = detect(lat, det, c.streams[i].clip.fps, "s");
      for (std::size_t m = 40; m < lat.steps(); m += 97) {
        const auto part = detect(prefix(lat, m), det, c.streams[i].clip.fps, "s");
        for (const auto& p : full) {
          // Energy index of the primitive's end step; final once d more samples exist.
          const auto end_step = static_cast<std::size_t>(
              std::lower_bound(lat.frame_of_step.begin(), lat.frame_of_step.end(), p.end_frame) -
              lat.frame_of_step.begin());
          if (p.truncated || end_step + det.down_count > m - 1) continue;
          ++checked;
          altered += std::find(part.begin(), part.end(), p) == part.end();
        }
      }
    }
    Rng rng(12);
    for (int trial = 0; trial < 200; ++trial) {
      DetectorConfig cfg;
      cfg.alpha = rng.uniform(0.05, 1.0);
      cfg.theta_on = rng.uniform(0.5, 1.5);
      cfg.down_count = 1 + static_cast<std::uint32_t>(rng.below(8));
      const auto e = bursty_trace(rng, 300);
      const auto full = detect_spans(e, cfg);
      for (std::size_t n = 1; n <= e.size(); n += 13) {
        const auto part = detect_spans(std::span<const double>(e).first(n), cfg);
        for (const auto& s : full) {
          if (s.truncated || s.end + cfg.down_count > n) continue;
          ++checked;
          altered += std::find(part.begin(), part.end(), s) == part.end();
        }
      }
    }
    return Outcome{checked > 0 && altered == 0, fmt("%zu contained segments checked, %zu altered", checked, altered)};
  });

  std::printf("%s: %d criteria failed\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
