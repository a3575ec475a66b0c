#include "laps/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include <json.hpp>

#include "binary_io.hpp"
#include "laps/errors.hpp"
#include "laps/rng.hpp"

namespace laps {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct Template {
  double dir_x = 1.0, dir_y = 0.0;
  double freq_hz = 1.0;
  double harmonic = 0.3;  // perpendicular second-harmonic amplitude ratio
  double phase = 0.0;
  std::vector<double> gains;  // per point
  std::vector<double> feature_dir;
};

std::vector<double> unit_random(Rng& rng, std::size_t d) {
  std::vector<double> v(d);
  double n = 0.0;
  for (auto& x : v) {
    x = rng.normal();
    n += x * x;
  }
  n = std::sqrt(n);
  for (auto& x : v) x /= n;
  return v;
}

std::vector<Template> make_templates(const SynthSpec& spec, std::vector<double>& idle_dir) {
  Rng rng(derive_seed(spec.template_seed, fnv1a("synth/templates")));
  const auto common = unit_random(rng, spec.feature_dim);
  idle_dir = unit_random(rng, spec.feature_dim);
  std::vector<Template> out(spec.n_actions);
  for (std::uint32_t j = 0; j < spec.n_actions; ++j) {
    auto& t = out[j];
    const double angle = std::numbers::pi * (j + 0.5) / spec.n_actions;
    t.dir_x = std::cos(angle);
    t.dir_y = std::sin(angle);
    t.freq_hz = 0.5 + 0.5 * j;
    t.harmonic = rng.uniform(0.0, 0.2);
    t.phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    t.gains.resize(spec.n_points);
    for (auto& g : t.gains) g = rng.uniform(0.7, 1.3);
    const auto own = unit_random(rng, spec.feature_dim);
    t.feature_dir.resize(spec.feature_dim);
    for (std::size_t i = 0; i < spec.feature_dim; ++i) t.feature_dir[i] = 0.6 * common[i] + 0.8 * own[i];
  }
  for (std::size_t i = 0; i < spec.feature_dim; ++i) idle_dir[i] = 0.6 * common[i] + 0.8 * idle_dir[i];
  return out;
}

std::vector<Phase> draw_schedule(const SynthSpec& spec, Rng& rng) {
  std::vector<Phase> phases;
  double t = 0.0;
  auto draw = [&rng](const DurationRange& r) { return rng.uniform(r.min_s, r.max_s); };
  if (spec.n_actions == 0) {
    phases.push_back({false, spec.total_s, -1});
    return phases;
  }
  phases.push_back({false, draw(spec.idle), -1});
  t += phases.back().duration_s;
  while (true) {
    const double act = draw(spec.action);
    const double idle = draw(spec.idle);
    if (t + act + idle > spec.total_s) break;
    phases.push_back({true, act, static_cast<int>(rng.below(spec.n_actions))});
    phases.push_back({false, idle, -1});
    t += act + idle;
  }
  if (t < spec.total_s) phases.back().duration_s += spec.total_s - t;
  return phases;
}

}  // namespace

void SynthSpec::validate() const {
  if (n_points < 4) throw ConfigError("synth: n_points must be >= 4");
  if (!(fps > 0.0)) throw ConfigError("synth: fps must be positive");
  if (!(idle.min_s > 0.0 && idle.max_s >= idle.min_s)) throw ConfigError("synth: invalid idle duration range");
  if (!(action.min_s > 0.0 && action.max_s >= action.min_s)) throw ConfigError("synth: invalid action duration range");
  if (!(total_s > 0.0)) throw ConfigError("synth: total_s must be positive");
  if (idle_jitter_sigma < 0.0) throw ConfigError("synth: jitter must be >= 0");
  if (!(action_amplitude > 5.0 * idle_jitter_sigma)) {
    throw ConfigError("synth: action_amplitude must exceed 5 x idle_jitter_sigma");
  }
  if (feature_dim < 2) throw ConfigError("synth: feature_dim must be >= 2");
  for (const auto& p : schedule) {
    if (!(p.duration_s > 0.0)) throw ConfigError("synth: phase durations must be positive");
    if (p.action && (p.template_id < 0 || p.template_id >= static_cast<int>(n_actions))) {
      throw ConfigError("synth: phase template out of range");
    }
  }
}

SynthStream generate(const SynthSpec& spec) {
  spec.validate();
  std::vector<double> idle_dir;
  const auto templates = make_templates(spec, idle_dir);
  Rng rng(spec.seed);

  SynthStream out;
  out.phases = spec.schedule.empty() ? draw_schedule(spec, rng) : spec.schedule;

  std::vector<std::uint32_t> phase_frames;
  std::uint32_t total = 0;
  for (const auto& p : out.phases) {
    const auto f = static_cast<std::uint32_t>(std::lround(p.duration_s * spec.fps));
    phase_frames.push_back(f);
    total += f;
  }
  if (total < 2) throw ConfigError("synth: schedule shorter than two frames");

  const std::uint32_t n = spec.n_points;
  std::vector<double> base_x(n), base_y(n);
  const auto side = static_cast<std::uint32_t>(std::ceil(std::sqrt(static_cast<double>(n))));
  for (std::uint32_t p = 0; p < n; ++p) {
    base_x[p] = 320.0 + 12.0 * (p % side) + rng.uniform(-2.0, 2.0);
    base_y[p] = 240.0 + 12.0 * (p / side) + rng.uniform(-2.0, 2.0);
  }

  out.clip.frames = total;
  out.clip.points = n;
  out.clip.fps = static_cast<float>(spec.fps);
  out.clip.tracks.reserve(static_cast<std::size_t>(total) * n * 2);
  out.frame_features = MatrixF(total, spec.feature_dim);

  std::uint32_t frame = 0;
  for (std::size_t ph = 0; ph < out.phases.size(); ++ph) {
    const auto& phase = out.phases[ph];
    const Template* tpl = phase.action ? &templates[static_cast<std::size_t>(phase.template_id)] : nullptr;
    std::vector<double> last_dx(n, 0.0), last_dy(n, 0.0);
    for (std::uint32_t k = 0; k < phase_frames[ph]; ++k, ++frame) {
      double sx = 0.0, sy = 0.0;
      if (tpl) {
        const double tau = k / spec.fps;
        const double w = 2.0 * std::numbers::pi * tpl->freq_hz;
        const double main = std::sin(w * tau);
        const double side_wave = tpl->harmonic * (std::sin(2.0 * w * tau + tpl->phase) - std::sin(tpl->phase));
        sx = spec.action_amplitude * (main * tpl->dir_x - side_wave * tpl->dir_y);
        sy = spec.action_amplitude * (main * tpl->dir_y + side_wave * tpl->dir_x);
      }
      for (std::uint32_t p = 0; p < n; ++p) {
        const double g = tpl ? tpl->gains[p] : 0.0;
        last_dx[p] = g * sx;
        last_dy[p] = g * sy;
        out.clip.tracks.push_back(
            static_cast<float>(base_x[p] + last_dx[p] + rng.normal(0.0, spec.idle_jitter_sigma)));
        out.clip.tracks.push_back(
            static_cast<float>(base_y[p] + last_dy[p] + rng.normal(0.0, spec.idle_jitter_sigma)));
      }
      const auto& dir = tpl ? tpl->feature_dir : idle_dir;
      const double scale = rng.uniform(0.5, 2.0);
      auto row = out.frame_features.row(frame);
      for (std::size_t i = 0; i < spec.feature_dim; ++i) {
        row[i] = static_cast<float>(scale * (dir[i] + rng.normal(0.0, spec.feature_noise / std::sqrt(spec.feature_dim))));
      }
    }
    // The next phase starts from wherever this one left the points.
    for (std::uint32_t p = 0; p < n; ++p) {
      base_x[p] += last_dx[p];
      base_y[p] += last_dy[p];
    }
  }

  std::uint32_t start = 0;
  for (std::size_t ph = 0; ph < out.phases.size(); ++ph) {
    const std::uint32_t end = start + phase_frames[ph];
    if (ph > 0) out.truth.boundaries_s.push_back(frame_to_seconds(start, spec.fps));
    if (out.phases[ph].action) {
      out.truth.segments.push_back(
          {frame_to_seconds(start, spec.fps), frame_to_seconds(end, spec.fps), out.phases[ph].template_id});
    }
    start = end;
  }
  out.clip.validate();
  out.truth.validate();
  return out;
}

CorpusManifest generate_corpus(const SynthSpec& spec, std::size_t n_streams, const fs::path& dir) {
  spec.validate();
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create corpus directory " + dir.string() + ": " + ec.message());
  CorpusManifest m;
  json streams = json::array();
  for (std::size_t i = 0; i < n_streams; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "stream_%03zu", i);
    SynthSpec s = spec;
    s.seed = derive_seed(spec.seed, i);
    const auto stream = generate(s);
    CorpusEntry e{name, std::string(name) + ".kpc", std::string(name) + ".gt.json",
                  std::string(name) + ".frames.f32m", s.seed};
    write_keypoint_clip(stream.clip, dir / e.clip);
    write_ground_truth(stream.truth, dir / e.gt);
    write_matrix(stream.frame_features, dir / e.frames);
    streams.push_back({{"id", e.id}, {"clip", e.clip}, {"gt", e.gt}, {"frames", e.frames}, {"seed", e.seed}});
    m.streams.push_back(std::move(e));
  }
  json doc = {{"streams", std::move(streams)}};
  detail::write_text(dir / "manifest.json", doc.dump(2) + "\n");
  return m;
}

CorpusManifest read_corpus_manifest(const fs::path& dir) {
  CorpusManifest m;
  const auto manifest = dir / "manifest.json";
  if (fs::exists(manifest)) {
    try {
      const auto doc = json::parse(detail::read_text(manifest));
      for (const auto& s : doc.at("streams")) {
        m.streams.push_back({s.at("id").get<std::string>(), s.at("clip").get<std::string>(), s.value("gt", ""),
                             s.value("frames", ""), s.value("seed", std::uint64_t{0})});
      }
    } catch (const json::exception& e) {
      throw DataError(manifest.string() + ": " + e.what());
    }
  } else {
    if (!fs::is_directory(dir)) throw DataError("corpus directory not found: " + dir.string());
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (entry.path().extension() != ".kpc") continue;
      const auto stem = entry.path().stem().string();
      CorpusEntry e{stem, entry.path().filename().string(), "", "", 0};
      if (fs::exists(dir / (stem + ".gt.json"))) e.gt = stem + ".gt.json";
      if (fs::exists(dir / (stem + ".frames.f32m"))) e.frames = stem + ".frames.f32m";
      m.streams.push_back(std::move(e));
    }
  }
  std::sort(m.streams.begin(), m.streams.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  return m;
}

}  // namespace laps
