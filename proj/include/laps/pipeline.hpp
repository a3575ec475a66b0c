#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "laps/calibration.hpp"
#include "laps/clustering.hpp"
#include "laps/config.hpp"
#include "laps/evaluation.hpp"
#include "laps/icss.hpp"
#include "laps/stream_io.hpp"

namespace laps {

// Runs fn(i) for i in [0, n) on at most `jobs` threads. The first exception
// is rethrown after all workers finish.
void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& fn);

nlohmann::json to_json(const CalibrationResult& r);
CalibrationResult calibration_from_json(const nlohmann::json& j);

nlohmann::json to_json(const ClusterReport& r);
// Reads ids, assignments and k back from a cluster report.
ClusterReport cluster_report_from_json(const nlohmann::json& j);

nlohmann::json to_json(const IcssReport& r);
nlohmann::json to_json(const F1Result& r);

// Majority-overlap ground-truth label of a primitive; -1 when it overlaps
// no labeled segment.
int primitive_label(const Primitive& p, const GroundTruth& gt);

// Up to `per_segment` evenly spaced frames of [start_frame, end_frame) taken
// from a per-frame feature matrix of the source clip.
MatrixF sample_segment_frames(const Primitive& p, const MatrixF& frame_features, std::uint32_t per_segment);

// Boundary F1 of one manifest against ground truth at every tolerance.
std::vector<F1Result> evaluate_manifest(const SegmentManifest& m, const GroundTruth& gt, const EvalConfig& cfg);

struct PipelineOptions {
  unsigned jobs = 1;
};

// encode -> (calibrate) -> segment -> embed -> cluster -> ICSS / F1 over a
// corpus directory. Writes every intermediate artifact under out_dir and
// returns the combined report (also written to out_dir/report.json). Only
// the "generated_at" field varies between identical runs.
nlohmann::json run_pipeline(PipelineConfig cfg, const std::filesystem::path& corpus_dir,
                            const std::filesystem::path& out_dir, const PipelineOptions& opts = {});

}  // namespace laps
