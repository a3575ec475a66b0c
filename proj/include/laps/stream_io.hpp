#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "laps/matrix.hpp"

namespace laps {

namespace fs = std::filesystem;

// Keypoint tracks for one clip: frames x points x (x, y), frame-major.
struct KeypointClip {
  std::uint32_t frames = 0;
  std::uint32_t points = 0;
  float fps = 0.0F;
  std::vector<float> tracks;

  float x(std::size_t t, std::size_t n) const { return tracks[(t * points + n) * 2]; }
  float y(std::size_t t, std::size_t n) const { return tracks[(t * points + n) * 2 + 1]; }
  std::span<const float> frame(std::size_t t) const {
    return {tracks.data() + t * points * 2, static_cast<std::size_t>(points) * 2};
  }

  // Throws DataError if any invariant is violated.
  void validate() const;

  bool operator==(const KeypointClip&) const = default;
};

// Paired continuous quantized vectors and discrete codes, one per latent step.
struct LatentStream {
  std::uint32_t dim = 0;
  std::uint32_t codebook_size = 0;
  std::vector<std::uint32_t> codes;
  std::vector<std::uint32_t> frame_of_step;
  std::vector<float> vectors;  // steps x dim, row-major

  std::size_t steps() const { return codes.size(); }
  std::span<const float> vector(std::size_t t) const { return {vectors.data() + t * dim, dim}; }

  void validate() const;

  bool operator==(const LatentStream&) const = default;
};

// One segmented action over frames [start_frame, end_frame).
struct Primitive {
  std::uint32_t start_frame = 0;
  std::uint32_t end_frame = 0;
  double start_s = 0.0;
  double end_s = 0.0;
  std::vector<std::uint32_t> codes;
  std::vector<std::uint32_t> step_frames;  // source frame of each step
  std::vector<float> vectors;              // length() x dim
  std::uint32_t dim = 0;
  std::string source_id;
  bool truncated = false;

  std::size_t length() const { return codes.size(); }
  std::span<const float> vector(std::size_t t) const { return {vectors.data() + t * dim, dim}; }

  void validate(double fps) const;

  bool operator==(const Primitive&) const = default;
};

// Converts a frame index to seconds. All seconds fields go through here.
inline double frame_to_seconds(std::uint32_t frame, double fps) {
  return static_cast<double>(frame) / fps;
}

// Stable identifier of a primitive inside a corpus: "<source_id>:<index>".
std::string primitive_id(const std::string& source_id, std::size_t index);

struct SegmentManifest {
  std::string source_id;
  double fps = 0.0;
  std::uint32_t dim = 0;
  std::uint32_t codebook_size = 0;
  std::vector<Primitive> segments;

  bool operator==(const SegmentManifest&) const = default;
};

struct LabeledSegment {
  double start_s = 0.0;
  double end_s = 0.0;
  int label = -1;

  bool operator==(const LabeledSegment&) const = default;
};

struct GroundTruth {
  std::vector<double> boundaries_s;
  std::vector<LabeledSegment> segments;  // optional, may be empty

  void validate() const;

  bool operator==(const GroundTruth&) const = default;
};

// Raw frame features per primitive id (rows = sampled frames).
struct FrameEmbeddingSet {
  std::map<std::string, MatrixF> frames;

  // Feature dimension shared by every entry; 0 when empty.
  std::size_t dim() const;
  void validate() const;
};

// Segment embeddings matrix (rows = primitives) plus the id of each row.
struct EmbeddingTable {
  std::vector<std::string> ids;
  MatrixF embeddings;

  bool operator==(const EmbeddingTable&) const = default;
};

KeypointClip read_keypoint_clip(const fs::path& path);
void write_keypoint_clip(const KeypointClip& clip, const fs::path& path);

LatentStream read_latent_stream(const fs::path& path);
void write_latent_stream(const LatentStream& stream, const fs::path& path);

// Writes <path> (JSON) and a sibling "<stem>.vectors.lats" holding the
// concatenated segment vectors.
void write_segment_manifest(const SegmentManifest& manifest, const fs::path& path);
// vectors_override replaces the vectors path recorded in the manifest.
SegmentManifest read_segment_manifest(const fs::path& path, const fs::path& vectors_override = {});

// Sibling vectors file used by write_segment_manifest for a given manifest path.
fs::path manifest_vectors_path(const fs::path& manifest_path);

GroundTruth read_ground_truth(const fs::path& path);
void write_ground_truth(const GroundTruth& gt, const fs::path& path);

// Binary f32 matrix file: "LAPSF32M", u32 rows, u32 cols, rows*cols f32.
MatrixF read_matrix(const fs::path& path);
void write_matrix(const MatrixF& m, const fs::path& path);

// JSON index {"dim": d, "entries": {id: relative matrix path}}. The writer
// puts the matrices in "<index stem>_frames/" next to the index.
FrameEmbeddingSet read_frame_embeddings(const fs::path& index_path);
void write_frame_embeddings(const FrameEmbeddingSet& set, const fs::path& index_path);

// Matrix file at `path` plus "<path>.json" index {"ids": [...], "dim": d}.
EmbeddingTable read_embedding_table(const fs::path& path);
void write_embedding_table(const EmbeddingTable& table, const fs::path& path);

}  // namespace laps
