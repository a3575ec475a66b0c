#include <doctest.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "laps/errors.hpp"
#include "laps/stream_io.hpp"
#include "support.hpp"

using namespace laps;
using laps::test::TempDir;

namespace {

void put_u32(std::string& s, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f32(std::string& s, float f) {
  std::uint32_t v;
  std::memcpy(&v, &f, 4);
  put_u32(s, v);
}

void write_bytes(const fs::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary);
  out << bytes;
}

std::string clip_bytes(std::uint32_t t, std::uint32_t n, float fps, std::size_t payload_floats) {
  std::string s = "LAPSKPC1";
  put_u32(s, t);
  put_u32(s, n);
  put_f32(s, fps);
  for (std::size_t i = 0; i < payload_floats; ++i) put_f32(s, static_cast<float>(i));
  return s;
}

std::string error_of(const auto& fn) {
  try {
    fn();
  } catch (const DataError& e) {
    return e.what();
  }
  return {};
}

Primitive random_primitive(Rng& rng, std::uint32_t dim, double fps, const std::string& source,
                           std::uint32_t not_before = 0) {
  Primitive p;
  p.start_frame = not_before + static_cast<std::uint32_t>(rng.below(1000));
  const auto len = 1 + static_cast<std::uint32_t>(rng.below(20));
  p.end_frame = p.start_frame + len + static_cast<std::uint32_t>(rng.below(3));
  p.start_s = frame_to_seconds(p.start_frame, fps);
  p.end_s = frame_to_seconds(p.end_frame, fps);
  p.dim = dim;
  p.source_id = source;
  p.truncated = rng.below(2) == 1;
  for (std::uint32_t i = 0; i < len; ++i) {
    p.codes.push_back(static_cast<std::uint32_t>(rng.below(2048)));
    p.step_frames.push_back(p.start_frame + i);
  }
  p.vectors.resize(static_cast<std::size_t>(len) * dim);
  for (auto& v : p.vectors) v = static_cast<float>(rng.normal());
  return p;
}

}  // namespace

TEST_CASE("smallest legal clip reads as 2x1x2") {
  TempDir dir;
  write_bytes(dir / "a.kpc", clip_bytes(2, 1, 30.0F, 4));
  const auto clip = read_keypoint_clip(dir / "a.kpc");
  CHECK(clip.frames == 2);
  CHECK(clip.points == 1);
  CHECK(clip.fps == 30.0F);
  REQUIRE(clip.tracks.size() == 4);
  CHECK(clip.x(1, 0) == 2.0F);
  CHECK(clip.y(1, 0) == 3.0F);
}

TEST_CASE("short payload is rejected as truncated") {
  TempDir dir;
  write_bytes(dir / "a.kpc", clip_bytes(3, 1, 30.0F, 4));
  CHECK(error_of([&] { read_keypoint_clip(dir / "a.kpc"); }).find("payload truncated") != std::string::npos);
}

TEST_CASE("clip reader rejects bad magic, trailing bytes, bad header and non-finite values") {
  TempDir dir;
  auto bad = clip_bytes(2, 1, 30.0F, 4);
  bad[0] = 'X';
  write_bytes(dir / "magic.kpc", bad);
  CHECK(error_of([&] { read_keypoint_clip(dir / "magic.kpc"); }).find("magic") != std::string::npos);

  write_bytes(dir / "long.kpc", clip_bytes(2, 1, 30.0F, 5));
  CHECK_THROWS_AS(read_keypoint_clip(dir / "long.kpc"), DataError);

  write_bytes(dir / "onefr.kpc", clip_bytes(1, 1, 30.0F, 2));
  CHECK_THROWS_AS(read_keypoint_clip(dir / "onefr.kpc"), DataError);

  write_bytes(dir / "fps.kpc", clip_bytes(2, 1, 0.0F, 4));
  CHECK_THROWS_AS(read_keypoint_clip(dir / "fps.kpc"), DataError);

  std::string nan = "LAPSKPC1";
  put_u32(nan, 2);
  put_u32(nan, 1);
  put_f32(nan, 30.0F);
  for (int i = 0; i < 3; ++i) put_f32(nan, 1.0F);
  put_f32(nan, std::numeric_limits<float>::quiet_NaN());
  write_bytes(dir / "nan.kpc", nan);
  CHECK_THROWS_AS(read_keypoint_clip(dir / "nan.kpc"), DataError);

  CHECK_THROWS_AS(read_keypoint_clip(dir / "missing.kpc"), DataError);
}

TEST_CASE("clip write/read round trip is bit-identical") {
  TempDir dir;
  Rng rng(11);
  for (int i = 0; i < 10; ++i) {
    const auto clip = test::random_clip(rng, 2 + static_cast<std::uint32_t>(rng.below(50)),
                                        1 + static_cast<std::uint32_t>(rng.below(20)), 25.0F);
    write_keypoint_clip(clip, dir / "c.kpc");
    CHECK(read_keypoint_clip(dir / "c.kpc") == clip);
  }
}

TEST_CASE("writer refuses an invalid clip") {
  TempDir dir;
  KeypointClip c;
  c.frames = 2;
  c.points = 1;
  c.fps = 30.0F;
  c.tracks = {0, 0, 1};
  CHECK_THROWS_AS(write_keypoint_clip(c, dir / "c.kpc"), DataError);
}

TEST_CASE("latent stream round trip and invariant checks") {
  TempDir dir;
  Rng rng(5);
  const auto s = test::random_stream(rng, 37, 12);
  write_latent_stream(s, dir / "s.lats");
  CHECK(read_latent_stream(dir / "s.lats") == s);

  auto bad = s;
  bad.codes[3] = 2048;
  CHECK_THROWS_AS(bad.validate(), DataError);
  bad = s;
  bad.frame_of_step[4] = bad.frame_of_step[3];
  CHECK_THROWS_AS(bad.validate(), DataError);
  bad = s;
  bad.vectors[0] = std::numeric_limits<float>::infinity();
  CHECK_THROWS_AS(bad.validate(), DataError);
  bad = s;
  bad.vectors.pop_back();
  CHECK_THROWS_AS(bad.validate(), DataError);
}

TEST_CASE("empty manifest serializes an empty segment list") {
  TempDir dir;
  SegmentManifest m{"s0", 30.0, 8, 2048, {}};
  write_segment_manifest(m, dir / "m.json");
  std::ifstream in(dir / "m.json");
  const auto doc = nlohmann::json::parse(in);
  REQUIRE(doc.contains("segments"));
  CHECK(doc.at("segments").is_array());
  CHECK(doc.at("segments").empty());
  CHECK(read_segment_manifest(dir / "m.json") == m);
}

TEST_CASE("frames [30, 60) at 30 fps give 1.0 s and 2.0 s") {
  TempDir dir;
  Rng rng(1);
  auto p = random_primitive(rng, 4, 30.0, "s0");
  p.start_frame = 30;
  p.end_frame = 60;
  p.start_s = frame_to_seconds(30, 30.0);
  p.end_s = frame_to_seconds(60, 30.0);
  SegmentManifest m{"s0", 30.0, 4, 2048, {p}};
  write_segment_manifest(m, dir / "m.json");
  std::ifstream in(dir / "m.json");
  const auto doc = nlohmann::json::parse(in);
  CHECK(doc["segments"][0]["start_s"].get<double>() == 1.0);
  CHECK(doc["segments"][0]["end_s"].get<double>() == 2.0);
  CHECK(doc["segments"][0]["start_frame"].get<int>() == 30);
}

TEST_CASE("manifest round trip on 100 random primitives") {
  TempDir dir;
  Rng rng(99);
  SegmentManifest m{"clip-7", 29.97, 6, 2048, {}};
  for (int i = 0; i < 100; ++i) {
    const std::uint32_t after = m.segments.empty() ? 0 : m.segments.back().end_frame;
    m.segments.push_back(random_primitive(rng, 6, m.fps, m.source_id, after));
  }
  write_segment_manifest(m, dir / "m.json");
  CHECK(fs::exists(manifest_vectors_path(dir / "m.json")));
  CHECK(read_segment_manifest(dir / "m.json") == m);

  // An explicit vectors path overrides the recorded one.
  fs::rename(manifest_vectors_path(dir / "m.json"), dir / "moved.lats");
  CHECK_THROWS_AS(read_segment_manifest(dir / "m.json"), DataError);
  CHECK(read_segment_manifest(dir / "m.json", dir / "moved.lats") == m);
}

TEST_CASE("unordered or overlapping segments are rejected at write time") {
  TempDir dir;
  Rng rng(5);
  const auto a = random_primitive(rng, 4, 30.0, "s");
  const auto b = random_primitive(rng, 4, 30.0, "s", a.end_frame);
  CHECK_NOTHROW(write_segment_manifest(SegmentManifest{"s", 30.0, 4, 2048, {a, b}}, dir / "ok.json"));
  CHECK_THROWS_AS(write_segment_manifest(SegmentManifest{"s", 30.0, 4, 2048, {b, a}}, dir / "m.json"), DataError);
  CHECK_THROWS_AS(write_segment_manifest(SegmentManifest{"s", 30.0, 4, 2048, {a, a}}, dir / "m.json"), DataError);
}

TEST_CASE("manifest reader rejects seconds that disagree with frames") {
  TempDir dir;
  Rng rng(3);
  SegmentManifest m{"s", 30.0, 2, 2048, {random_primitive(rng, 2, 30.0, "s")}};
  write_segment_manifest(m, dir / "m.json");
  std::ifstream in(dir / "m.json");
  auto doc = nlohmann::json::parse(in);
  in.close();
  doc["segments"][0]["start_s"] = doc["segments"][0]["start_s"].get<double>() + 0.5;
  std::ofstream(dir / "m.json") << doc.dump();
  CHECK_THROWS_AS(read_segment_manifest(dir / "m.json"), DataError);
}

TEST_CASE("ground truth round trip and ordering") {
  TempDir dir;
  GroundTruth gt{{1.5, 3.25, 10.0}, {{1.5, 3.25, 2}}};
  write_ground_truth(gt, dir / "g.json");
  CHECK(read_ground_truth(dir / "g.json") == gt);

  std::ofstream(dir / "bad.json") << R"({"boundaries_s": [2.0, 1.0]})";
  CHECK_THROWS_AS(read_ground_truth(dir / "bad.json"), DataError);
  std::ofstream(dir / "neg.json") << R"({"boundaries_s": [-1.0]})";
  CHECK_THROWS_AS(read_ground_truth(dir / "neg.json"), DataError);
  std::ofstream(dir / "plain.json") << R"({"boundaries_s": [0.5, 4.0]})";
  const auto plain = read_ground_truth(dir / "plain.json");
  CHECK(plain.boundaries_s == std::vector<double>{0.5, 4.0});
  CHECK(plain.segments.empty());
}

TEST_CASE("matrix, frame embedding and embedding table round trips") {
  TempDir dir;
  Rng rng(8);
  MatrixF m(5, 3);
  for (auto& v : m.data()) v = static_cast<float>(rng.normal());
  write_matrix(m, dir / "m.f32m");
  CHECK(read_matrix(dir / "m.f32m") == m);

  FrameEmbeddingSet set;
  set.frames["s:0"] = m;
  set.frames["s:1"] = MatrixF(2, 3, 0.5F);
  write_frame_embeddings(set, dir / "fe.json");
  const auto back = read_frame_embeddings(dir / "fe.json");
  CHECK(back.frames == set.frames);
  CHECK(back.dim() == 3);

  FrameEmbeddingSet ragged = set;
  ragged.frames["s:2"] = MatrixF(1, 4, 1.0F);
  CHECK_THROWS_AS(ragged.validate(), DataError);
  FrameEmbeddingSet empty_rows = set;
  empty_rows.frames["s:3"] = MatrixF(0, 3);
  CHECK_THROWS_AS(empty_rows.validate(), DataError);

  EmbeddingTable table{{"a:0", "a:1", "b:0", "b:1", "b:2"}, m};
  write_embedding_table(table, dir / "e.bin");
  CHECK(read_embedding_table(dir / "e.bin") == table);
}

TEST_CASE("primitive ids") { CHECK(primitive_id("stream_003", 12) == "stream_003:12"); }
