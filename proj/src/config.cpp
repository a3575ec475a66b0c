#include "laps/config.hpp"

#include <set>

#include <json.hpp>

#include "binary_io.hpp"
#include "laps/errors.hpp"

namespace laps {

using json = nlohmann::json;

namespace {

void check_keys(const json& obj, const char* section, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ConfigError(std::string("config: section '") + section + "' must be an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : obj.items()) {
    if (!ok.count(key)) throw ConfigError(std::string("config: unknown key '") + key + "' in '" + section + "'");
  }
}

template <typename T>
void read(const json& obj, const char* key, T& out) {
  if (obj.contains(key)) out = obj.at(key).get<T>();
}

json parse_or_throw(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
}

}  // namespace

void PipelineConfig::apply_seed(std::uint64_t s) {
  seed = s;
  encoder.seed = s;
  embedder.seed = s;
  clustering.seed = s;
}

void PipelineConfig::validate() const {
  encoder.validate();
  detector.validate();
  calibration.validate();
  embedder.validate();
  clustering.validate();
  if (encoder.fsq.latent_dim != embedder.input_dim) {
    throw ConfigError("config: encoder latent_dim (" + std::to_string(encoder.fsq.latent_dim) +
                      ") differs from embedder input_dim (" + std::to_string(embedder.input_dim) + ")");
  }
  if (icss.budget < 1) throw ConfigError("config: icss budget must be >= 1");
  if (icss.frames_per_segment < 1) throw ConfigError("config: icss frames_per_segment must be >= 1");
  for (double t : eval.tolerances_s) {
    if (!(t > 0.0)) throw ConfigError("config: tolerances must be positive");
  }
}

PipelineConfig parse_pipeline_config(const std::string& json_text) {
  const json doc = parse_or_throw(json_text);
  PipelineConfig cfg;
  try {
    check_keys(doc, "root",
               {"seed", "encoder", "detector", "calibration", "embedder", "clustering", "icss", "eval"});
    std::uint64_t seed = 0;
    read(doc, "seed", seed);
    cfg.apply_seed(seed);

    if (doc.contains("encoder")) {
      const auto& e = doc.at("encoder");
      check_keys(e, "encoder", {"window", "hop", "seed", "n_points", "velocity_scale", "levels", "latent_dim"});
      read(e, "window", cfg.encoder.window);
      read(e, "hop", cfg.encoder.hop);
      read(e, "seed", cfg.encoder.seed);
      read(e, "n_points", cfg.encoder.n_points);
      read(e, "velocity_scale", cfg.encoder.velocity_scale);
      read(e, "levels", cfg.encoder.fsq.levels);
      read(e, "latent_dim", cfg.encoder.fsq.latent_dim);
    }
    if (doc.contains("detector")) {
      const auto& d = doc.at("detector");
      check_keys(d, "detector", {"alpha", "theta_on", "ratio", "up", "down", "min_len"});
      read(d, "alpha", cfg.detector.alpha);
      if (d.contains("theta_on") && !d.at("theta_on").is_null()) {
        cfg.detector.theta_on = d.at("theta_on").get<double>();
        cfg.theta_on_set = true;
      }
      read(d, "ratio", cfg.detector.hysteresis_ratio);
      read(d, "up", cfg.detector.up_count);
      read(d, "down", cfg.detector.down_count);
      read(d, "min_len", cfg.detector.min_len);
    }
    if (doc.contains("calibration")) {
      const auto& c = doc.at("calibration");
      check_keys(c, "calibration", {"otsu_bins", "n_candidates"});
      read(c, "otsu_bins", cfg.calibration.otsu_bins);
      read(c, "n_candidates", cfg.calibration.n_candidates);
    }
    if (doc.contains("embedder")) {
      const auto& m = doc.at("embedder");
      check_keys(m, "embedder",
                 {"model_dim", "layers", "heads", "ff_dim", "input_dim", "seed", "enforce_parameter_budget"});
      read(m, "model_dim", cfg.embedder.model_dim);
      read(m, "layers", cfg.embedder.layers);
      read(m, "heads", cfg.embedder.heads);
      read(m, "ff_dim", cfg.embedder.ff_dim);
      read(m, "input_dim", cfg.embedder.input_dim);
      read(m, "seed", cfg.embedder.seed);
      read(m, "enforce_parameter_budget", cfg.enforce_parameter_budget);
    }
    if (doc.contains("clustering")) {
      const auto& k = doc.at("clustering");
      check_keys(k, "clustering", {"k", "seed", "n_init", "max_iter"});
      read(k, "k", cfg.clustering.k);
      read(k, "seed", cfg.clustering.seed);
      read(k, "n_init", cfg.clustering.n_init);
      read(k, "max_iter", cfg.clustering.max_iter);
    }
    if (doc.contains("icss")) {
      const auto& i = doc.at("icss");
      check_keys(i, "icss", {"budget", "frames_per_segment"});
      read(i, "budget", cfg.icss.budget);
      read(i, "frames_per_segment", cfg.icss.frames_per_segment);
    }
    if (doc.contains("eval")) {
      const auto& v = doc.at("eval");
      check_keys(v, "eval", {"tolerances", "include_endpoints"});
      read(v, "tolerances", cfg.eval.tolerances_s);
      read(v, "include_endpoints", cfg.eval.include_endpoints);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
  return parse_pipeline_config(detail::read_text(path));
}

std::string pipeline_config_to_json(const PipelineConfig& cfg) {
  json doc = {
      {"seed", cfg.seed},
      {"encoder",
       {{"window", cfg.encoder.window},
        {"hop", cfg.encoder.hop},
        {"seed", cfg.encoder.seed},
        {"n_points", cfg.encoder.n_points},
        {"velocity_scale", cfg.encoder.velocity_scale},
        {"levels", cfg.encoder.fsq.levels},
        {"latent_dim", cfg.encoder.fsq.latent_dim}}},
      {"detector",
       {{"alpha", cfg.detector.alpha},
        {"theta_on", cfg.theta_on_set ? json(cfg.detector.theta_on) : json(nullptr)},
        {"ratio", cfg.detector.hysteresis_ratio},
        {"up", cfg.detector.up_count},
        {"down", cfg.detector.down_count},
        {"min_len", cfg.detector.min_len}}},
      {"calibration", {{"otsu_bins", cfg.calibration.otsu_bins}, {"n_candidates", cfg.calibration.n_candidates}}},
      {"embedder",
       {{"model_dim", cfg.embedder.model_dim},
        {"layers", cfg.embedder.layers},
        {"heads", cfg.embedder.heads},
        {"ff_dim", cfg.embedder.ff_dim},
        {"input_dim", cfg.embedder.input_dim},
        {"seed", cfg.embedder.seed},
        {"enforce_parameter_budget", cfg.enforce_parameter_budget}}},
      {"clustering",
       {{"k", cfg.clustering.k},
        {"seed", cfg.clustering.seed},
        {"n_init", cfg.clustering.n_init},
        {"max_iter", cfg.clustering.max_iter}}},
      {"icss", {{"budget", cfg.icss.budget}, {"frames_per_segment", cfg.icss.frames_per_segment}}},
      {"eval", {{"tolerances", cfg.eval.tolerances_s}, {"include_endpoints", cfg.eval.include_endpoints}}},
  };
  return doc.dump(2) + "\n";
}

SynthSpec parse_synth_spec(const std::string& json_text) {
  const json doc = parse_or_throw(json_text);
  SynthSpec s;
  try {
    check_keys(doc, "synth",
               {"n_points", "fps", "n_actions", "total_s", "idle_s", "action_s", "idle_jitter_sigma",
                "action_amplitude", "seed", "template_seed", "feature_dim", "feature_noise", "schedule"});
    read(doc, "n_points", s.n_points);
    read(doc, "fps", s.fps);
    read(doc, "n_actions", s.n_actions);
    read(doc, "total_s", s.total_s);
    if (doc.contains("idle_s")) s.idle = {doc.at("idle_s").at(0).get<double>(), doc.at("idle_s").at(1).get<double>()};
    if (doc.contains("action_s")) {
      s.action = {doc.at("action_s").at(0).get<double>(), doc.at("action_s").at(1).get<double>()};
    }
    read(doc, "idle_jitter_sigma", s.idle_jitter_sigma);
    read(doc, "action_amplitude", s.action_amplitude);
    read(doc, "seed", s.seed);
    read(doc, "template_seed", s.template_seed);
    read(doc, "feature_dim", s.feature_dim);
    read(doc, "feature_noise", s.feature_noise);
    if (doc.contains("schedule")) {
      for (const auto& p : doc.at("schedule")) {
        Phase ph;
        ph.action = p.at("kind").get<std::string>() == "action";
        ph.duration_s = p.at("duration_s").get<double>();
        ph.template_id = p.value("template", -1);
        s.schedule.push_back(ph);
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("synth spec: ") + e.what());
  }
  s.validate();
  return s;
}

SynthSpec load_synth_spec(const std::filesystem::path& path) { return parse_synth_spec(detail::read_text(path)); }

}  // namespace laps
