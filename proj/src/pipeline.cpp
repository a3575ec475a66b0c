#include "laps/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <exception>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <thread>

#include "binary_io.hpp"
#include "laps/energy_detector.hpp"
#include "laps/errors.hpp"
#include "laps/frozen_embedder.hpp"
#include "laps/motion_encoder.hpp"
#include "laps/synth.hpp"

namespace laps {

namespace fs = std::filesystem;
using json = nlohmann::json;

void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& fn) {
  const unsigned workers = std::max(1U, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::exception_ptr first;
  std::mutex mu;
  std::size_t next = 0;
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      while (true) {
        std::size_t i;
        {
          std::lock_guard lock(mu);
          if (next >= n || first) return;
          i = next++;
        }
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(mu);
          if (!first) first = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first) std::rethrow_exception(first);
}

json to_json(const CalibrationResult& r) {
  json table = json::array();
  for (const auto& e : r.sweep_table) table.push_back({{"theta", e.theta}, {"f1", e.f1}});
  return {{"theta_on", r.theta_on},
          {"theta_off", r.theta_off},
          {"f1_at_best", r.f1_at_best},
          {"otsu_threshold", r.otsu_threshold},
          {"sweep_table", std::move(table)}};
}

CalibrationResult calibration_from_json(const json& j) {
  try {
    CalibrationResult r;
    r.theta_on = j.at("theta_on").get<double>();
    r.theta_off = j.at("theta_off").get<double>();
    r.f1_at_best = j.value("f1_at_best", 0.0);
    r.otsu_threshold = j.value("otsu_threshold", 0.0);
    if (j.contains("sweep_table")) {
      for (const auto& e : j.at("sweep_table")) r.sweep_table.push_back({e.at("theta"), e.at("f1")});
    }
    return r;
  } catch (const json::exception& e) {
    throw DataError(std::string("calibration file: ") + e.what());
  }
}

namespace {

json number_or_inf(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

std::string timestamp_utc() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

json to_json(const ClusterReport& r) {
  json assignments = json::object();
  for (std::size_t i = 0; i < r.ids.size(); ++i) assignments[r.ids[i]] = r.assignments[i];
  json centroids = json::array();
  for (std::size_t c = 0; c < r.centroids.rows(); ++c) {
    centroids.push_back(std::vector<double>(r.centroids.row(c).begin(), r.centroids.row(c).end()));
  }
  return {{"k", r.k},
          {"seed", r.seed},
          {"ids", r.ids},
          {"assignments", std::move(assignments)},
          {"centroids", std::move(centroids)},
          {"silhouette", r.silhouette},
          {"calinski_harabasz", number_or_inf(r.calinski_harabasz)},
          {"inertia", r.inertia}};
}

ClusterReport cluster_report_from_json(const json& j) {
  try {
    ClusterReport r;
    r.k = j.at("k").get<std::uint32_t>();
    r.ids = j.at("ids").get<std::vector<std::string>>();
    const auto& a = j.at("assignments");
    for (const auto& id : r.ids) r.assignments.push_back(a.at(id).get<std::uint32_t>());
    r.silhouette = j.value("silhouette", 0.0);
    r.inertia = j.value("inertia", 0.0);
    r.seed = j.value("seed", std::uint64_t{0});
    const auto& ch = j.at("calinski_harabasz");
    r.calinski_harabasz = ch.is_string() ? std::numeric_limits<double>::infinity() : ch.get<double>();
    return r;
  } catch (const json::exception& e) {
    throw DataError(std::string("cluster report: ") + e.what());
  }
}

json to_json(const IcssReport& r) {
  auto stat = [](const SimilarityStat& s) { return json{{"mean", s.mean}, {"std", s.std}, {"n_pairs", s.n_pairs}}; };
  json per = json::object();
  for (const auto& [c, s] : r.per_cluster) per[std::to_string(c)] = stat(s);
  return {{"per_cluster", std::move(per)},
          {"too_small", r.too_small},
          {"overall", stat(r.overall)},
          {"baseline", stat(r.baseline)},
          {"pair_budget", r.pair_budget},
          {"seed", r.seed}};
}

json to_json(const F1Result& r) {
  return {{"tolerance_s", r.tolerance_s}, {"tp", r.tp},         {"fp", r.fp}, {"fn", r.fn},
          {"precision", r.precision},     {"recall", r.recall}, {"f1", r.f1}};
}

int primitive_label(const Primitive& p, const GroundTruth& gt) {
  int best = -1;
  double best_overlap = 0.0;
  for (const auto& s : gt.segments) {
    const double overlap = std::min(p.end_s, s.end_s) - std::max(p.start_s, s.start_s);
    if (overlap > best_overlap) {
      best_overlap = overlap;
      best = s.label;
    }
  }
  return best;
}

MatrixF sample_segment_frames(const Primitive& p, const MatrixF& frame_features, std::uint32_t per_segment) {
  if (p.end_frame > frame_features.rows()) throw DataError("frame features shorter than segment " + p.source_id);
  const std::uint32_t span = p.end_frame - p.start_frame;
  const std::uint32_t m = std::min(span, per_segment);
  MatrixF out(m, frame_features.cols());
  for (std::uint32_t i = 0; i < m; ++i) {
    // Centers of m equal sub-intervals.
    const auto f = p.start_frame + static_cast<std::uint32_t>((2ULL * i + 1) * span / (2ULL * m));
    std::copy(frame_features.row(f).begin(), frame_features.row(f).end(), out.row(i).begin());
  }
  return out;
}

std::vector<F1Result> evaluate_manifest(const SegmentManifest& m, const GroundTruth& gt, const EvalConfig& cfg) {
  const auto pred = extract_boundaries(m.segments, {cfg.include_endpoints});
  std::vector<F1Result> out;
  for (double tol : cfg.tolerances_s) out.push_back(boundary_f1(pred, gt.boundaries_s, tol));
  return out;
}

namespace {

struct StreamWork {
  CorpusEntry entry;
  std::optional<KeypointClip> clip;
  std::optional<LatentStream> latent;
  std::optional<AlignedSignals> signals;
  std::optional<GroundTruth> truth;
  SegmentManifest manifest;
  std::vector<F1Result> f1;
  std::string error;
};

}  // namespace

json run_pipeline(PipelineConfig cfg, const fs::path& corpus_dir, const fs::path& out_dir,
                  const PipelineOptions& opts) {
  cfg.validate();
  std::optional<FrozenEmbedder> embedder;
  embedder.emplace(cfg.embedder);
  if (cfg.enforce_parameter_budget) embedder->check_parameter_budget();

  const auto corpus = read_corpus_manifest(corpus_dir);
  std::error_code ec;
  fs::create_directories(out_dir / "streams", ec);
  if (ec) throw DataError("cannot create output directory " + out_dir.string() + ": " + ec.message());

  const MotionEncoder encoder(cfg.encoder);
  std::vector<StreamWork> work(corpus.streams.size());
  for (std::size_t i = 0; i < work.size(); ++i) work[i].entry = corpus.streams[i];

  // Stage 1: encode every stream; per-stream failures are recorded, not fatal.
  parallel_for(work.size(), opts.jobs, [&](std::size_t i) {
    auto& w = work[i];
    try {
      w.clip = read_keypoint_clip(corpus_dir / w.entry.clip);
      w.latent = encoder.encode_stream(*w.clip);
      write_latent_stream(*w.latent, out_dir / "streams" / (w.entry.id + ".lats"));
      w.signals = align_signals(*w.clip, *w.latent, cfg.detector.alpha);
      if (!w.entry.gt.empty()) w.truth = read_ground_truth(corpus_dir / w.entry.gt);
    } catch (const Error& e) {
      w.error = e.what();
    }
  });

  std::vector<std::size_t> ok;
  for (std::size_t i = 0; i < work.size(); ++i) {
    if (work[i].error.empty()) ok.push_back(i);
  }

  json report;
  report["config"] = json::parse(pipeline_config_to_json(cfg));

  // Stage 2: dataset-level threshold.
  if (!cfg.theta_on_set && !ok.empty()) {
    std::vector<AlignedSignals> signals;
    for (auto i : ok) signals.push_back(*work[i].signals);
    const auto calib = calibrate(signals, cfg.calibration, cfg.detector.hysteresis_ratio);
    cfg.detector.theta_on = calib.theta_on;
    cfg.theta_on_set = true;
    detail::write_text(out_dir / "calibration.json", to_json(calib).dump(2) + "\n");
    report["calibration"] = {{"theta_on", calib.theta_on},
                             {"theta_off", calib.theta_off},
                             {"f1_at_best", calib.f1_at_best},
                             {"otsu_threshold", calib.otsu_threshold}};
  }
  report["theta_on"] = cfg.detector.theta_on;

  // Stage 3: segmentation and per-stream boundary F1.
  parallel_for(ok.size(), opts.jobs, [&](std::size_t j) {
    auto& w = work[ok[j]];
    try {
      w.manifest.source_id = w.entry.id;
      w.manifest.fps = w.clip->fps;
      w.manifest.dim = w.latent->dim;
      w.manifest.codebook_size = w.latent->codebook_size;
      w.manifest.segments = detect(*w.latent, cfg.detector, w.clip->fps, w.entry.id);
      write_segment_manifest(w.manifest, out_dir / "streams" / (w.entry.id + ".segments.json"));
      if (w.truth) w.f1 = evaluate_manifest(w.manifest, *w.truth, cfg.eval);
    } catch (const Error& e) {
      w.error = e.what();
    }
  });
  std::erase_if(ok, [&](std::size_t i) { return !work[i].error.empty(); });

  // Stage 4: embed every primitive in (stream id, segment index) order.
  std::vector<const Primitive*> prims;
  std::vector<std::string> ids;
  std::vector<int> labels;
  bool all_labeled = !ok.empty();
  for (auto i : ok) {
    const auto& w = work[i];
    if (!w.truth || w.truth->segments.empty()) all_labeled = false;
    for (std::size_t s = 0; s < w.manifest.segments.size(); ++s) {
      prims.push_back(&w.manifest.segments[s]);
      ids.push_back(primitive_id(w.entry.id, s));
      labels.push_back(w.truth ? primitive_label(w.manifest.segments[s], *w.truth) : -1);
    }
  }
  std::vector<SegmentEmbedding> embeddings(prims.size());
  parallel_for(prims.size(), opts.jobs, [&](std::size_t i) { embeddings[i] = embedder->embed(*prims[i], ids[i]); });
  EmbeddingTable table;
  table.ids = ids;
  table.embeddings = MatrixF(prims.size(), cfg.embedder.model_dim);
  for (std::size_t i = 0; i < prims.size(); ++i) {
    std::copy(embeddings[i].raw.begin(), embeddings[i].raw.end(), table.embeddings.row(i).begin());
  }
  write_embedding_table(table, out_dir / "embeddings.bin");
  report["n_primitives"] = prims.size();

  // Stage 5: clustering, purity and ICSS.
  if (prims.size() > cfg.clustering.k && cfg.clustering.k >= 1) {
    MatrixD raw(prims.size(), cfg.embedder.model_dim);
    for (std::size_t i = 0; i < raw.data().size(); ++i) raw.data()[i] = table.embeddings.data()[i];
    const auto clusters = cluster_embeddings(raw, ids, cfg.clustering);
    detail::write_text(out_dir / "clusters.json", to_json(clusters).dump(2) + "\n");
    json summary = {{"k", clusters.k},
                    {"silhouette", clusters.silhouette},
                    {"calinski_harabasz", number_or_inf(clusters.calinski_harabasz)},
                    {"inertia", clusters.inertia}};
    std::vector<std::size_t> sizes(clusters.k, 0);
    for (auto a : clusters.assignments) ++sizes[a];
    summary["sizes"] = sizes;
    if (all_labeled) summary["purity"] = cluster_purity(clusters.assignments, labels, clusters.k);
    report["clusters"] = std::move(summary);

    bool have_frames = !ok.empty();
    for (auto i : ok) have_frames = have_frames && !work[i].entry.frames.empty();
    if (have_frames) {
      FrameEmbeddingSet frames;
      std::size_t at = 0;
      for (auto i : ok) {
        const auto& w = work[i];
        const auto features = read_matrix(corpus_dir / w.entry.frames);
        for (const auto& p : w.manifest.segments) {
          frames.frames.emplace(ids[at++], sample_segment_frames(p, features, cfg.icss.frames_per_segment));
        }
      }
      write_frame_embeddings(frames, out_dir / "frame_embeddings.json");
      std::map<std::string, std::vector<double>> desc;
      for (const auto& [id, m] : frames.frames) desc.emplace(id, norm_weighted_pool(m));
      const auto icss_report = icss(desc, ids, clusters.assignments, clusters.k, cfg.icss.budget, cfg.seed);
      detail::write_text(out_dir / "icss.json", to_json(icss_report).dump(2) + "\n");
      report["icss"] = to_json(icss_report);
    }
  }

  // Stage 6: per-stream and corpus-level boundary F1.
  json streams = json::array();
  json failures = json::array();
  std::vector<F1Result> totals(cfg.eval.tolerances_s.size());
  std::vector<double> mean_f1(cfg.eval.tolerances_s.size(), 0.0);
  std::size_t evaluated = 0;
  for (const auto& w : work) {
    if (!w.error.empty()) {
      failures.push_back({{"id", w.entry.id}, {"reason", w.error}});
      continue;
    }
    json s = {{"id", w.entry.id}, {"n_segments", w.manifest.segments.size()}};
    if (!w.f1.empty()) {
      json f = json::array();
      for (std::size_t t = 0; t < w.f1.size(); ++t) {
        f.push_back(to_json(w.f1[t]));
        totals[t].tp += w.f1[t].tp;
        totals[t].fp += w.f1[t].fp;
        totals[t].fn += w.f1[t].fn;
        mean_f1[t] += w.f1[t].f1;
      }
      s["f1"] = std::move(f);
      ++evaluated;
    }
    streams.push_back(std::move(s));
  }
  if (evaluated > 0) {
    json agg = json::array();
    for (std::size_t t = 0; t < totals.size(); ++t) {
      auto& r = totals[t];
      r.tolerance_s = cfg.eval.tolerances_s[t];
      const double denom = 2.0 * r.tp + r.fp + r.fn;
      r.f1 = denom > 0.0 ? 2.0 * r.tp / denom : 0.0;
      r.precision = (r.tp + r.fp) > 0 ? static_cast<double>(r.tp) / (r.tp + r.fp) : 0.0;
      r.recall = (r.tp + r.fn) > 0 ? static_cast<double>(r.tp) / (r.tp + r.fn) : 0.0;
      auto j = to_json(r);
      j["mean_stream_f1"] = mean_f1[t] / static_cast<double>(evaluated);
      agg.push_back(std::move(j));
    }
    report["f1"] = std::move(agg);
  }
  report["n_streams"] = ok.size();
  report["streams"] = std::move(streams);
  report["failures"] = std::move(failures);
  report["generated_at"] = timestamp_utc();
  detail::write_text(out_dir / "report.json", report.dump(2) + "\n");
  return report;
}

}  // namespace laps
