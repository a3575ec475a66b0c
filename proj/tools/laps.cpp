// laps: command-line front end for the segmentation / clustering pipeline.
//
// Exit codes: 0 success, 1 usage or configuration error, 2 data error,
// 3 internal invariant violation.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "laps/calibration.hpp"
#include "laps/clustering.hpp"
#include "laps/config.hpp"
#include "laps/energy_detector.hpp"
#include "laps/errors.hpp"
#include "laps/evaluation.hpp"
#include "laps/frozen_embedder.hpp"
#include "laps/icss.hpp"
#include "laps/motion_encoder.hpp"
#include "laps/pipeline.hpp"
#include "laps/stream_io.hpp"
#include "laps/synth.hpp"

namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

constexpr const char* kVersion = "laps 0.1.0";

enum ExitCode { kOk = 0, kUsage = 1, kData = 2, kInternal = 3 };

void write_json(const fs::path& path, const json& doc) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw laps::DataError("cannot write " + path.string());
  out << doc.dump(2) << "\n";
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw laps::DataError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw laps::DataError(path.string() + ": invalid JSON: " + e.what());
  }
}

laps::PipelineConfig load_config(const std::string& path, std::optional<std::uint64_t> seed) {
  laps::PipelineConfig cfg = path.empty() ? laps::PipelineConfig{} : laps::load_pipeline_config(path);
  if (seed) cfg.apply_seed(*seed);
  cfg.validate();
  return cfg;
}

std::vector<double> parse_tolerances(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw laps::ConfigError("invalid tolerance '" + item + "'");
    }
  }
  if (out.empty()) throw laps::ConfigError("no tolerances given");
  return out;
}

std::vector<double> read_signal_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw laps::DataError("cannot open " + path.string());
  std::vector<double> v;
  std::string tok;
  while (in >> tok) {
    try {
      v.push_back(std::stod(tok));
    } catch (const std::exception&) {
      throw laps::DataError(path.string() + ": not a number: " + tok);
    }
  }
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Latent action energy segmentation and primitive clustering"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  app.fallthrough();

  std::optional<std::uint64_t> seed;
  unsigned jobs = 1;
  app.add_option("--seed", seed, "Override every seed in the configuration");
  app.add_option("--jobs", jobs, "Worker bound for parallel stages")->check(CLI::PositiveNumber);

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus with planted primitives");
  std::string synth_spec, synth_out;
  std::size_t synth_n = 20;
  synth->add_option("--spec", synth_spec, "Synthetic spec (JSON)");
  synth->add_option("--n", synth_n, "Number of streams");
  synth->add_option("--out", synth_out, "Output directory")->required();

  // encode
  auto* encode = app.add_subcommand("encode", "Keypoint clip -> latent stream");
  std::string enc_in, enc_cfg, enc_out;
  encode->add_option("--input", enc_in)->required();
  encode->add_option("--config", enc_cfg);
  encode->add_option("--output", enc_out)->required();

  // calibrate
  auto* calib = app.add_subcommand("calibrate", "Unsupervised theta_on calibration over a clip directory");
  std::string cal_dir, cal_cfg, cal_out;
  calib->add_option("--clips", cal_dir)->required();
  calib->add_option("--config", cal_cfg);
  calib->add_option("--output", cal_out)->required();

  // segment
  auto* segment = app.add_subcommand("segment", "Latent stream -> segment manifest");
  std::string seg_in, seg_out, seg_cfg, seg_calib, seg_source, seg_signal;
  std::optional<double> theta_on, ratio, alpha, fps;
  std::optional<std::uint32_t> up, down, min_len;
  segment->add_option("--input", seg_in);
  segment->add_option("--signal-file", seg_signal, "Whitespace-separated scalar signal (bypasses latent energy)");
  segment->add_option("--config", seg_cfg);
  segment->add_option("--calibration", seg_calib, "calib.json from `laps calibrate`");
  segment->add_option("--theta-on", theta_on);
  segment->add_option("--ratio", ratio);
  segment->add_option("--alpha", alpha);
  segment->add_option("--up", up);
  segment->add_option("--down", down);
  segment->add_option("--min-len", min_len);
  segment->add_option("--fps", fps, "Frame rate for seconds fields (default 30)");
  segment->add_option("--source-id", seg_source);
  segment->add_option("--output", seg_out)->required();

  // embed
  auto* embed = app.add_subcommand("embed", "Segment manifests -> frozen-transformer embeddings");
  std::vector<std::string> emb_segments;
  std::string emb_vectors, emb_cfg, emb_out;
  embed->add_option("--segments", emb_segments)->required();
  embed->add_option("--vectors", emb_vectors, "Override the manifest's vectors file (single manifest only)");
  embed->add_option("--config", emb_cfg);
  embed->add_option("--output", emb_out)->required();

  // cluster
  auto* cluster = app.add_subcommand("cluster", "Cosine k-means over embeddings");
  std::string clu_in, clu_cfg, clu_out;
  std::optional<std::uint32_t> clu_k, clu_ninit;
  cluster->add_option("--embeddings", clu_in)->required();
  cluster->add_option("--k", clu_k);
  cluster->add_option("--n-init", clu_ninit);
  cluster->add_option("--config", clu_cfg);
  cluster->add_option("--output", clu_out)->required();

  // icss
  auto* icss_cmd = app.add_subcommand("icss", "Intra-cluster semantic similarity");
  std::string icss_clusters, icss_frames, icss_out, icss_audit;
  std::size_t icss_budget = 2000;
  icss_cmd->add_option("--clusters", icss_clusters)->required();
  icss_cmd->add_option("--frame-embeddings", icss_frames)->required();
  icss_cmd->add_option("--budget", icss_budget);
  icss_cmd->add_option("--output", icss_out)->required();
  icss_cmd->add_option("--audit", icss_audit, "CSV of every sampled pair and its cosine");

  // eval
  auto* eval = app.add_subcommand("eval", "Boundary F1 against ground truth");
  std::string ev_pred, ev_gt, ev_out, ev_tol = "2,5";
  bool ev_endpoints = false;
  eval->add_option("--pred", ev_pred)->required();
  eval->add_option("--gt", ev_gt)->required();
  eval->add_option("--tolerances", ev_tol);
  eval->add_flag("--include-endpoints", ev_endpoints);
  eval->add_option("--output", ev_out)->required();

  // pipeline
  auto* pipeline = app.add_subcommand("pipeline", "encode -> calibrate -> segment -> embed -> cluster on a corpus");
  std::string pipe_corpus, pipe_cfg, pipe_out;
  pipeline->add_option("--corpus", pipe_corpus)->required();
  pipeline->add_option("--config", pipe_cfg);
  pipeline->add_option("--out", pipe_out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (synth->parsed()) {
      laps::SynthSpec spec = synth_spec.empty() ? laps::SynthSpec{} : laps::load_synth_spec(synth_spec);
      if (seed) spec.seed = *seed;
      const auto m = laps::generate_corpus(spec, synth_n, synth_out);
      std::printf("wrote %zu streams to %s\n", m.streams.size(), synth_out.c_str());
    } else if (encode->parsed()) {
      const auto cfg = load_config(enc_cfg, seed);
      const laps::MotionEncoder encoder(cfg.encoder);
      laps::write_latent_stream(encoder.encode_stream(laps::read_keypoint_clip(enc_in)), enc_out);
    } else if (calib->parsed()) {
      const auto cfg = load_config(cal_cfg, seed);
      const laps::MotionEncoder encoder(cfg.encoder);
      std::vector<fs::path> clips;
      for (const auto& e : fs::directory_iterator(cal_dir)) {
        if (e.path().extension() == ".kpc") clips.push_back(e.path());
      }
      std::sort(clips.begin(), clips.end());
      if (clips.empty()) throw laps::DataError("no .kpc clips in " + cal_dir);
      std::vector<laps::AlignedSignals> signals(clips.size());
      laps::parallel_for(clips.size(), jobs, [&](std::size_t i) {
        const auto clip = laps::read_keypoint_clip(clips[i]);
        signals[i] = laps::align_signals(clip, encoder.encode_stream(clip), cfg.detector.alpha);
      });
      const auto r = laps::calibrate(signals, cfg.calibration, cfg.detector.hysteresis_ratio);
      write_json(cal_out, laps::to_json(r));
      std::printf("theta_on=%.9g theta_off=%.9g f1=%.6f\n", r.theta_on, r.theta_off, r.f1_at_best);
    } else if (segment->parsed()) {
      auto cfg = load_config(seg_cfg, seed);
      auto& d = cfg.detector;
      if (!seg_calib.empty()) {
        d.theta_on = laps::calibration_from_json(read_json(seg_calib)).theta_on;
        cfg.theta_on_set = true;
      }
      if (theta_on) {
        d.theta_on = *theta_on;
        cfg.theta_on_set = true;
      }
      if (ratio) d.hysteresis_ratio = *ratio;
      if (alpha) d.alpha = *alpha;
      if (up) d.up_count = *up;
      if (down) d.down_count = *down;
      if (min_len) d.min_len = *min_len;
      d.validate();
      if (!cfg.theta_on_set) throw laps::ConfigError("segment: theta_on not given (use --theta-on or --calibration)");
      if (seg_in.empty() == seg_signal.empty()) {
        throw laps::ConfigError("segment: give exactly one of --input or --signal-file");
      }
      if (!seg_signal.empty()) {
        json spans = json::array();
        for (const auto& s : laps::detect_spans(read_signal_file(seg_signal), d)) {
          spans.push_back({{"begin", s.begin}, {"end", s.end}, {"truncated", s.truncated}});
        }
        write_json(seg_out, {{"spans", spans}});
      } else {
        const auto stream = laps::read_latent_stream(seg_in);
        laps::SegmentManifest m;
        m.source_id = seg_source.empty() ? fs::path(seg_in).stem().string() : seg_source;
        m.fps = fps.value_or(30.0);
        m.dim = stream.dim;
        m.codebook_size = stream.codebook_size;
        m.segments = laps::detect(stream, d, m.fps, m.source_id);
        laps::write_segment_manifest(m, seg_out);
        std::printf("%zu segments\n", m.segments.size());
      }
    } else if (embed->parsed()) {
      const auto cfg = load_config(emb_cfg, seed);
      if (!emb_vectors.empty() && emb_segments.size() != 1) {
        throw laps::ConfigError("embed: --vectors needs exactly one --segments manifest");
      }
      const laps::FrozenEmbedder embedder(cfg.embedder);
      if (cfg.enforce_parameter_budget) embedder.check_parameter_budget();
      std::vector<laps::Primitive> prims;
      for (const auto& s : emb_segments) {
        auto m = laps::read_segment_manifest(s, emb_vectors);
        for (auto& p : m.segments) prims.push_back(std::move(p));
      }
      const auto emb = embedder.embed_all(prims, jobs);
      laps::EmbeddingTable table;
      table.embeddings = laps::MatrixF(emb.size(), cfg.embedder.model_dim);
      for (std::size_t i = 0; i < emb.size(); ++i) {
        table.ids.push_back(emb[i].primitive_id);
        std::copy(emb[i].raw.begin(), emb[i].raw.end(), table.embeddings.row(i).begin());
      }
      laps::write_embedding_table(table, emb_out);
    } else if (cluster->parsed()) {
      auto cfg = load_config(clu_cfg, seed);
      if (clu_k) cfg.clustering.k = *clu_k;
      if (clu_ninit) cfg.clustering.n_init = *clu_ninit;
      const auto table = laps::read_embedding_table(clu_in);
      laps::MatrixD raw(table.embeddings.rows(), table.embeddings.cols());
      for (std::size_t i = 0; i < raw.data().size(); ++i) raw.data()[i] = table.embeddings.data()[i];
      const auto r = laps::cluster_embeddings(raw, table.ids, cfg.clustering);
      write_json(clu_out, laps::to_json(r));
      std::printf("silhouette=%.6f inertia=%.6f\n", r.silhouette, r.inertia);
    } else if (icss_cmd->parsed()) {
      const auto clusters = laps::cluster_report_from_json(read_json(icss_clusters));
      const auto frames = laps::read_frame_embeddings(icss_frames);
      std::map<std::string, std::vector<double>> desc;
      for (const auto& [id, m] : frames.frames) desc.emplace(id, laps::norm_weighted_pool(m));
      const auto r = laps::icss(desc, clusters.ids, clusters.assignments, clusters.k, icss_budget, seed.value_or(0));
      write_json(icss_out, laps::to_json(r));
      if (!icss_audit.empty()) {
        std::ofstream csv(icss_audit, std::ios::trunc);
        if (!csv) throw laps::DataError("cannot write " + icss_audit);
        csv << "cluster,a,b,cosine\n";
        csv.precision(17);
        for (const auto& p : r.audit) csv << p.cluster << ',' << p.a << ',' << p.b << ',' << p.cosine << '\n';
      }
    } else if (eval->parsed()) {
      laps::EvalConfig ec;
      ec.tolerances_s = parse_tolerances(ev_tol);
      ec.include_endpoints = ev_endpoints;
      for (double t : ec.tolerances_s) {
        if (!(t > 0.0)) throw laps::ConfigError("tolerances must be positive");
      }
      const auto m = laps::read_segment_manifest(ev_pred);
      const auto gt = laps::read_ground_truth(ev_gt);
      json results = json::array();
      for (const auto& r : laps::evaluate_manifest(m, gt, ec)) results.push_back(laps::to_json(r));
      write_json(ev_out, {{"source_id", m.source_id}, {"results", results}});
    } else if (pipeline->parsed()) {
      const auto cfg = load_config(pipe_cfg, seed);
      const auto report = laps::run_pipeline(cfg, pipe_corpus, pipe_out, {jobs});
      std::printf("processed %zu streams, %zu failures\n", report.at("n_streams").get<std::size_t>(),
                  report.at("failures").size());
    }
  } catch (const laps::ConfigError& e) {
    std::fprintf(stderr, "laps: %s\n", e.what());
    return kUsage;
  } catch (const laps::InvariantError& e) {
    std::fprintf(stderr, "laps: internal error: %s\n", e.what());
    return kInternal;
  } catch (const laps::DataError& e) {
    std::fprintf(stderr, "laps: %s\n", e.what());
    return kData;
  } catch (const fs::filesystem_error& e) {
    std::fprintf(stderr, "laps: %s\n", e.what());
    return kData;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "laps: internal error: %s\n", e.what());
    return kInternal;
  }
  return kOk;
}
