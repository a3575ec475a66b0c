#include "laps/stream_io.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

#include "binary_io.hpp"
#include "laps/errors.hpp"

namespace laps {

using detail::ByteReader;
using detail::ByteWriter;
using json = nlohmann::json;

namespace {

constexpr std::string_view kClipMagic = "LAPSKPC1";
constexpr std::string_view kLatentMagic = "LAPSLAT1";
constexpr std::string_view kMatrixMagic = "LAPSF32M";

bool all_finite(const std::vector<float>& v) {
  return std::all_of(v.begin(), v.end(), [](float x) { return std::isfinite(x); });
}

json parse_json(const fs::path& path) {
  try {
    return json::parse(detail::read_text(path));
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": invalid JSON: " + e.what());
  }
}

// Runs `fn` and rewraps nlohmann type/key errors as DataError.
template <typename Fn>
auto with_schema(const fs::path& path, Fn&& fn) {
  try {
    return fn();
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": schema error: " + e.what());
  }
}

std::uint32_t checked_u32(std::size_t n, const char* what) {
  if (n > std::numeric_limits<std::uint32_t>::max()) {
    throw DataError(std::string(what) + " exceeds u32 range");
  }
  return static_cast<std::uint32_t>(n);
}

}  // namespace

void KeypointClip::validate() const {
  if (frames < 2) throw DataError("keypoint clip: need at least 2 frames");
  if (points < 1) throw DataError("keypoint clip: need at least 1 point");
  if (!(fps > 0.0F) || !std::isfinite(fps)) throw DataError("keypoint clip: fps must be positive");
  if (tracks.size() != static_cast<std::size_t>(frames) * points * 2) {
    throw DataError("keypoint clip: track array does not match frames x points x 2");
  }
  if (!all_finite(tracks)) throw DataError("keypoint clip: non-finite coordinate");
}

void LatentStream::validate() const {
  if (frame_of_step.size() != codes.size()) {
    throw DataError("latent stream: codes and frame map differ in length");
  }
  if (vectors.size() != codes.size() * dim) {
    throw DataError("latent stream: vectors and codes differ in length");
  }
  for (auto c : codes) {
    if (c >= codebook_size) throw DataError("latent stream: code outside codebook");
  }
  for (std::size_t t = 1; t < frame_of_step.size(); ++t) {
    if (frame_of_step[t] <= frame_of_step[t - 1]) {
      throw DataError("latent stream: frame_of_step not strictly increasing");
    }
  }
  if (!all_finite(vectors)) throw DataError("latent stream: non-finite vector");
}

void Primitive::validate(double fps) const {
  if (start_frame >= end_frame) throw DataError("primitive: start_frame must precede end_frame");
  if (codes.empty()) throw DataError("primitive: empty code sequence");
  if (vectors.size() != codes.size() * dim) throw DataError("primitive: codes and vectors differ in length");
  if (step_frames.size() != codes.size()) throw DataError("primitive: step frame map differs in length");
  if (start_s != frame_to_seconds(start_frame, fps) || end_s != frame_to_seconds(end_frame, fps)) {
    throw DataError("primitive: seconds fields disagree with frames / fps");
  }
  if (!all_finite(vectors)) throw DataError("primitive: non-finite vector");
}

std::string primitive_id(const std::string& source_id, std::size_t index) {
  return source_id + ":" + std::to_string(index);
}

void GroundTruth::validate() const {
  for (std::size_t i = 0; i < boundaries_s.size(); ++i) {
    if (!std::isfinite(boundaries_s[i]) || boundaries_s[i] < 0.0) {
      throw DataError("ground truth: boundary must be finite and non-negative");
    }
    if (i > 0 && boundaries_s[i] <= boundaries_s[i - 1]) {
      throw DataError("ground truth: boundaries must be strictly increasing");
    }
  }
  for (const auto& s : segments) {
    if (!(s.start_s < s.end_s)) throw DataError("ground truth: segment with empty interval");
  }
}

std::size_t FrameEmbeddingSet::dim() const { return frames.empty() ? 0 : frames.begin()->second.cols(); }

void FrameEmbeddingSet::validate() const {
  const std::size_t d = dim();
  for (const auto& [id, m] : frames) {
    if (m.rows() < 1) throw DataError("frame embeddings: no frames for " + id);
    if (m.cols() != d) throw DataError("frame embeddings: inconsistent feature dimension at " + id);
    if (!all_finite(m.data())) throw DataError("frame embeddings: non-finite value at " + id);
  }
}

KeypointClip read_keypoint_clip(const fs::path& path) {
  ByteReader r(detail::read_file(path), path.string());
  r.expect_magic(kClipMagic);
  KeypointClip clip;
  clip.frames = r.u32();
  clip.points = r.u32();
  clip.fps = r.f32();
  clip.tracks = r.f32s(static_cast<std::size_t>(clip.frames) * clip.points * 2);
  r.expect_end();
  clip.validate();
  return clip;
}

void write_keypoint_clip(const KeypointClip& clip, const fs::path& path) {
  clip.validate();
  ByteWriter w;
  w.magic(kClipMagic);
  w.u32(clip.frames);
  w.u32(clip.points);
  w.f32(clip.fps);
  w.f32s(clip.tracks);
  detail::write_file(path, w.bytes());
}

LatentStream read_latent_stream(const fs::path& path) {
  ByteReader r(detail::read_file(path), path.string());
  r.expect_magic(kLatentMagic);
  LatentStream s;
  const std::uint32_t steps = r.u32();
  s.dim = r.u32();
  s.codebook_size = r.u32();
  s.codes = r.u32s(steps);
  s.frame_of_step = r.u32s(steps);
  s.vectors = r.f32s(static_cast<std::size_t>(steps) * s.dim);
  r.expect_end();
  s.validate();
  return s;
}

void write_latent_stream(const LatentStream& stream, const fs::path& path) {
  stream.validate();
  ByteWriter w;
  w.magic(kLatentMagic);
  w.u32(checked_u32(stream.steps(), "latent steps"));
  w.u32(stream.dim);
  w.u32(stream.codebook_size);
  w.u32s(stream.codes);
  w.u32s(stream.frame_of_step);
  w.f32s(stream.vectors);
  detail::write_file(path, w.bytes());
}

fs::path manifest_vectors_path(const fs::path& manifest_path) {
  auto p = manifest_path;
  p.replace_filename(manifest_path.stem().string() + ".vectors.lats");
  return p;
}

void write_segment_manifest(const SegmentManifest& manifest, const fs::path& path) {
  LatentStream packed;
  packed.dim = manifest.dim;
  packed.codebook_size = manifest.codebook_size;
  json segs = json::array();
  const Primitive* prev = nullptr;
  for (const auto& p : manifest.segments) {
    p.validate(manifest.fps);
    if (p.dim != manifest.dim) throw DataError("segment manifest: primitive dimension mismatch");
    // The packed vectors file needs strictly increasing frames across segments.
    if (prev && p.start_frame < prev->end_frame) {
      throw DataError("segment manifest: segments must be ordered and non-overlapping");
    }
    prev = &p;
    packed.codes.insert(packed.codes.end(), p.codes.begin(), p.codes.end());
    packed.frame_of_step.insert(packed.frame_of_step.end(), p.step_frames.begin(), p.step_frames.end());
    packed.vectors.insert(packed.vectors.end(), p.vectors.begin(), p.vectors.end());
    segs.push_back({{"start_frame", p.start_frame},
                    {"end_frame", p.end_frame},
                    {"start_s", p.start_s},
                    {"end_s", p.end_s},
                    {"codes", p.codes},
                    {"truncated", p.truncated}});
  }
  const auto vectors_path = manifest_vectors_path(path);
  json doc = {{"source_id", manifest.source_id},
              {"fps", manifest.fps},
              {"dim", manifest.dim},
              {"codebook_size", manifest.codebook_size},
              {"vectors", vectors_path.filename().string()},
              {"segments", std::move(segs)}};
  write_latent_stream(packed, vectors_path);
  detail::write_text(path, doc.dump(2) + "\n");
}

SegmentManifest read_segment_manifest(const fs::path& path, const fs::path& vectors_override) {
  const json doc = parse_json(path);
  return with_schema(path, [&] {
    SegmentManifest m;
    m.source_id = doc.at("source_id").get<std::string>();
    m.fps = doc.at("fps").get<double>();
    if (!(m.fps > 0.0)) throw DataError(path.string() + ": fps must be positive");
    m.dim = doc.at("dim").get<std::uint32_t>();
    m.codebook_size = doc.at("codebook_size").get<std::uint32_t>();
    const auto& segs = doc.at("segments");
    LatentStream packed;
    if (!segs.empty()) {
      auto vpath = vectors_override.empty() ? path.parent_path() / doc.at("vectors").get<std::string>()
                                            : vectors_override;
      packed = read_latent_stream(vpath);
      if (packed.dim != m.dim || packed.codebook_size != m.codebook_size) {
        throw DataError(path.string() + ": vectors file header disagrees with manifest");
      }
    }
    std::size_t offset = 0;
    for (const auto& s : segs) {
      Primitive p;
      p.source_id = m.source_id;
      p.dim = m.dim;
      p.start_frame = s.at("start_frame").get<std::uint32_t>();
      p.end_frame = s.at("end_frame").get<std::uint32_t>();
      p.start_s = s.at("start_s").get<double>();
      p.end_s = s.at("end_s").get<double>();
      p.codes = s.at("codes").get<std::vector<std::uint32_t>>();
      p.truncated = s.value("truncated", false);
      const std::size_t n = p.codes.size();
      if (offset + n > packed.steps()) throw DataError(path.string() + ": vectors file shorter than manifest");
      if (!std::equal(p.codes.begin(), p.codes.end(), packed.codes.begin() + static_cast<std::ptrdiff_t>(offset))) {
        throw DataError(path.string() + ": codes disagree with vectors file");
      }
      p.step_frames.assign(packed.frame_of_step.begin() + static_cast<std::ptrdiff_t>(offset),
                           packed.frame_of_step.begin() + static_cast<std::ptrdiff_t>(offset + n));
      p.vectors.assign(packed.vectors.begin() + static_cast<std::ptrdiff_t>(offset * m.dim),
                       packed.vectors.begin() + static_cast<std::ptrdiff_t>((offset + n) * m.dim));
      offset += n;
      p.validate(m.fps);
      m.segments.push_back(std::move(p));
    }
    if (offset != packed.steps()) throw DataError(path.string() + ": vectors file longer than manifest");
    return m;
  });
}

GroundTruth read_ground_truth(const fs::path& path) {
  const json doc = parse_json(path);
  GroundTruth gt = with_schema(path, [&] {
    GroundTruth g;
    g.boundaries_s = doc.at("boundaries_s").get<std::vector<double>>();
    if (doc.contains("segments")) {
      for (const auto& s : doc.at("segments")) {
        g.segments.push_back({s.at("start_s").get<double>(), s.at("end_s").get<double>(), s.value("label", -1)});
      }
    }
    return g;
  });
  gt.validate();
  return gt;
}

void write_ground_truth(const GroundTruth& gt, const fs::path& path) {
  gt.validate();
  json doc = {{"boundaries_s", gt.boundaries_s}};
  if (!gt.segments.empty()) {
    json segs = json::array();
    for (const auto& s : gt.segments) segs.push_back({{"start_s", s.start_s}, {"end_s", s.end_s}, {"label", s.label}});
    doc["segments"] = std::move(segs);
  }
  detail::write_text(path, doc.dump(2) + "\n");
}

MatrixF read_matrix(const fs::path& path) {
  ByteReader r(detail::read_file(path), path.string());
  r.expect_magic(kMatrixMagic);
  const std::uint32_t rows = r.u32();
  const std::uint32_t cols = r.u32();
  auto data = r.f32s(static_cast<std::size_t>(rows) * cols);
  r.expect_end();
  if (!all_finite(data)) throw DataError(path.string() + ": non-finite value");
  return MatrixF(rows, cols, std::move(data));
}

void write_matrix(const MatrixF& m, const fs::path& path) {
  ByteWriter w;
  w.magic(kMatrixMagic);
  w.u32(checked_u32(m.rows(), "matrix rows"));
  w.u32(checked_u32(m.cols(), "matrix cols"));
  w.f32s(m.data());
  detail::write_file(path, w.bytes());
}

FrameEmbeddingSet read_frame_embeddings(const fs::path& index_path) {
  const json doc = parse_json(index_path);
  FrameEmbeddingSet set = with_schema(index_path, [&] {
    FrameEmbeddingSet s;
    for (const auto& [id, rel] : doc.at("entries").items()) {
      s.frames.emplace(id, read_matrix(index_path.parent_path() / rel.get<std::string>()));
    }
    return s;
  });
  set.validate();
  return set;
}

void write_frame_embeddings(const FrameEmbeddingSet& set, const fs::path& index_path) {
  set.validate();
  const std::string dir_name = index_path.stem().string() + "_frames";
  const auto dir = index_path.parent_path() / dir_name;
  fs::create_directories(dir);
  json entries = json::object();
  std::size_t i = 0;
  for (const auto& [id, m] : set.frames) {
    const std::string file = "f" + std::to_string(i++) + ".f32m";
    write_matrix(m, dir / file);
    entries[id] = dir_name + "/" + file;
  }
  json doc = {{"dim", set.dim()}, {"entries", std::move(entries)}};
  detail::write_text(index_path, doc.dump(2) + "\n");
}

EmbeddingTable read_embedding_table(const fs::path& path) {
  EmbeddingTable t;
  t.embeddings = read_matrix(path);
  const auto index = fs::path(path.string() + ".json");
  const json doc = parse_json(index);
  t.ids = with_schema(index, [&] { return doc.at("ids").get<std::vector<std::string>>(); });
  if (t.ids.size() != t.embeddings.rows()) throw DataError(index.string() + ": id count does not match matrix rows");
  return t;
}

void write_embedding_table(const EmbeddingTable& table, const fs::path& path) {
  if (table.ids.size() != table.embeddings.rows()) throw DataError("embedding table: id count does not match rows");
  write_matrix(table.embeddings, path);
  json doc = {{"ids", table.ids}, {"dim", table.embeddings.cols()}};
  detail::write_text(fs::path(path.string() + ".json"), doc.dump(2) + "\n");
}

}  // namespace laps
