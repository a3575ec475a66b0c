#pragma once

#include <atomic>
#include <unistd.h>

#include <filesystem>
#include <string>
#include <vector>

#include "laps/rng.hpp"
#include "laps/stream_io.hpp"

namespace laps::test {

namespace fs = std::filesystem;

// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    const auto tag = std::to_string(::getpid()) + "_" + std::to_string(counter++);
    path_ = fs::temp_directory_path() / ("laps_test_" + tag);
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

inline KeypointClip random_clip(Rng& rng, std::uint32_t frames, std::uint32_t points, float fps = 30.0F) {
  KeypointClip c;
  c.frames = frames;
  c.points = points;
  c.fps = fps;
  c.tracks.resize(static_cast<std::size_t>(frames) * points * 2);
  for (auto& v : c.tracks) v = static_cast<float>(rng.uniform(-500.0, 500.0));
  return c;
}

inline LatentStream random_stream(Rng& rng, std::size_t steps, std::uint32_t dim, std::uint32_t codebook = 2048) {
  LatentStream s;
  s.dim = dim;
  s.codebook_size = codebook;
  std::uint32_t frame = static_cast<std::uint32_t>(rng.below(5));
  for (std::size_t t = 0; t < steps; ++t) {
    s.codes.push_back(static_cast<std::uint32_t>(rng.below(codebook)));
    s.frame_of_step.push_back(frame);
    frame += 1 + static_cast<std::uint32_t>(rng.below(3));
  }
  s.vectors.resize(steps * dim);
  for (auto& v : s.vectors) v = static_cast<float>(rng.normal());
  return s;
}

}  // namespace laps::test
