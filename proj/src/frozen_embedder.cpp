#include "laps/frozen_embedder.hpp"

#include <cmath>
#include <map>
#include <thread>

#include <Eigen/Dense>

#include "laps/errors.hpp"
#include "laps/rng.hpp"

namespace laps {

using RowMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::RowVectorXf;

namespace {

constexpr float kLayerNormEps = 1e-5F;

// Weight matrix stored transposed (in x out) so activations multiply on the left.
RowMatrix frozen_weight(std::uint64_t seed, std::uint32_t layer, const char* name, Eigen::Index in,
                        Eigen::Index out) {
  const std::uint64_t key = derive_seed(derive_seed(seed, layer), fnv1a(name));
  const double limit = std::sqrt(3.0 / static_cast<double>(in));
  RowMatrix w(in, out);
  std::uint64_t counter = 0;
  for (Eigen::Index i = 0; i < in; ++i) {
    for (Eigen::Index j = 0; j < out; ++j) {
      const double u = unit_interval(splitmix64(key ^ splitmix64(counter++)));
      w(i, j) = static_cast<float>((2.0 * u - 1.0) * limit);
    }
  }
  return w;
}

struct LayerNorm {
  RowVector gain;
  RowVector bias;

  explicit LayerNorm(Eigen::Index d) : gain(RowVector::Ones(d)), bias(RowVector::Zero(d)) {}

  RowMatrix apply(const RowMatrix& x) const {
    RowMatrix out(x.rows(), x.cols());
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
      const float mean = x.row(r).mean();
      const RowVector centered = x.row(r).array() - mean;
      const float var = centered.squaredNorm() / static_cast<float>(x.cols());
      out.row(r) = (centered / std::sqrt(var + kLayerNormEps)).cwiseProduct(gain) + bias;
    }
    return out;
  }

  std::size_t size() const { return static_cast<std::size_t>(gain.size() + bias.size()); }
};

struct Linear {
  RowMatrix weight;  // in x out
  RowVector bias;

  Linear(std::uint64_t seed, std::uint32_t layer, const char* name, Eigen::Index in, Eigen::Index out)
      : weight(frozen_weight(seed, layer, name, in, out)), bias(RowVector::Zero(out)) {}

  RowMatrix apply(const RowMatrix& x) const {
    RowMatrix y = x * weight;
    y.rowwise() += bias;
    return y;
  }

  std::size_t size() const { return static_cast<std::size_t>(weight.size() + bias.size()); }
};

struct Block {
  LayerNorm norm_attn;
  Linear q, k, v, o;
  LayerNorm norm_ff;
  Linear ff_in, ff_out;

  Block(const EmbedderConfig& c, std::uint32_t layer)
      : norm_attn(c.model_dim),
        q(c.seed, layer, "attn.q", c.model_dim, c.model_dim),
        k(c.seed, layer, "attn.k", c.model_dim, c.model_dim),
        v(c.seed, layer, "attn.v", c.model_dim, c.model_dim),
        o(c.seed, layer, "attn.o", c.model_dim, c.model_dim),
        norm_ff(c.model_dim),
        ff_in(c.seed, layer, "ff.in", c.model_dim, c.ff_dim),
        ff_out(c.seed, layer, "ff.out", c.ff_dim, c.model_dim) {}

  std::size_t size() const {
    return norm_attn.size() + q.size() + k.size() + v.size() + o.size() + norm_ff.size() + ff_in.size() +
           ff_out.size();
  }
};

RowMatrix self_attention(const Block& b, const RowMatrix& x, std::uint32_t heads) {
  const RowMatrix q = b.q.apply(x);
  const RowMatrix k = b.k.apply(x);
  const RowMatrix v = b.v.apply(x);
  const Eigen::Index dh = x.cols() / heads;
  const float scale = 1.0F / std::sqrt(static_cast<float>(dh));
  RowMatrix merged(x.rows(), x.cols());
  for (std::uint32_t h = 0; h < heads; ++h) {
    const Eigen::Index off = h * dh;
    RowMatrix scores = (q.middleCols(off, dh) * k.middleCols(off, dh).transpose()) * scale;
    for (Eigen::Index r = 0; r < scores.rows(); ++r) {
      const float m = scores.row(r).maxCoeff();
      scores.row(r) = (scores.row(r).array() - m).exp();
      scores.row(r) /= scores.row(r).sum();
    }
    merged.middleCols(off, dh) = scores * v.middleCols(off, dh);
  }
  return b.o.apply(merged);
}

void gelu_inplace(RowMatrix& x) {
  x = x.unaryExpr([](float a) { return 0.5F * a * (1.0F + std::erf(a * 0.70710678118654752F)); });
}

}  // namespace

struct FrozenEmbedder::Weights {
  Linear input;
  std::vector<Block> blocks;
  LayerNorm final_norm;

  explicit Weights(const EmbedderConfig& c)
      : input(c.seed, 0xffffffffU, "input.proj", c.input_dim, c.model_dim), final_norm(c.model_dim) {
    blocks.reserve(c.layers);
    for (std::uint32_t l = 0; l < c.layers; ++l) blocks.emplace_back(c, l);
  }
};

void EmbedderConfig::validate() const {
  if (model_dim < 1 || layers < 1 || heads < 1 || ff_dim < 1 || input_dim < 1) {
    throw ConfigError("embedder: all dimensions must be >= 1");
  }
  if (model_dim % heads != 0) throw ConfigError("embedder: model_dim must be divisible by heads");
  if (model_dim % 2 != 0) throw ConfigError("embedder: model_dim must be even for sinusoidal encoding");
}

std::vector<float> sinusoidal_pe(std::size_t t, std::size_t d) {
  std::vector<float> pe(d);
  for (std::size_t i = 0; 2 * i < d; ++i) {
    const double angle = static_cast<double>(t) / std::pow(10000.0, static_cast<double>(2 * i) / d);
    pe[2 * i] = static_cast<float>(std::sin(angle));
    if (2 * i + 1 < d) pe[2 * i + 1] = static_cast<float>(std::cos(angle));
  }
  return pe;
}

FrozenEmbedder::FrozenEmbedder(EmbedderConfig cfg) : cfg_(cfg) {
  cfg_.validate();
  w_ = std::make_unique<Weights>(cfg_);
}

FrozenEmbedder::~FrozenEmbedder() = default;
FrozenEmbedder::FrozenEmbedder(FrozenEmbedder&&) noexcept = default;
FrozenEmbedder& FrozenEmbedder::operator=(FrozenEmbedder&&) noexcept = default;

std::size_t FrozenEmbedder::parameter_count() const {
  std::size_t n = w_->input.size() + w_->final_norm.size();
  for (const auto& b : w_->blocks) n += b.size();
  return n;
}

void FrozenEmbedder::check_parameter_budget(double tolerance) const {
  const double n = static_cast<double>(parameter_count());
  if (std::abs(n - kReferenceParameterCount) > tolerance * kReferenceParameterCount) {
    throw ConfigError("embedder: " + std::to_string(parameter_count()) +
                      " parameters, outside the expected budget around 2.3M");
  }
}

SegmentEmbedding FrozenEmbedder::embed(std::span<const float> seq, std::size_t steps, std::string id) const {
  if (steps == 0) throw DataError("embed: empty sequence");
  if (seq.size() != steps * cfg_.input_dim) {
    throw DataError("embed: sequence is not " + std::to_string(steps) + " x " + std::to_string(cfg_.input_dim));
  }
  const auto rows = static_cast<Eigen::Index>(steps);
  Eigen::Map<const RowMatrix> x(seq.data(), rows, cfg_.input_dim);

  // Embedding scale sqrt(d) keeps the content on par with the unit-amplitude PE.
  RowMatrix h = w_->input.apply(x) * std::sqrt(static_cast<float>(cfg_.model_dim));
  for (Eigen::Index t = 0; t < rows; ++t) {
    const auto pe = sinusoidal_pe(static_cast<std::size_t>(t), cfg_.model_dim);
    h.row(t) += Eigen::Map<const RowVector>(pe.data(), cfg_.model_dim);
  }
  for (const auto& b : w_->blocks) {
    h += self_attention(b, b.norm_attn.apply(h), cfg_.heads);
    RowMatrix f = b.ff_in.apply(b.norm_ff.apply(h));
    gelu_inplace(f);
    h += b.ff_out.apply(f);
  }
  h = w_->final_norm.apply(h);

  SegmentEmbedding out;
  out.primitive_id = std::move(id);
  out.raw.assign(cfg_.model_dim, 0.0F);
  double norm_sq = 0.0;
  for (std::uint32_t j = 0; j < cfg_.model_dim; ++j) {
    double sum = 0.0;
    for (Eigen::Index t = 0; t < rows; ++t) sum += h(t, j);
    const double mean = sum / static_cast<double>(rows);
    out.raw[j] = static_cast<float>(mean);
    norm_sq += mean * mean;
  }
  const double norm = std::sqrt(norm_sq);
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    throw DegenerateEmbeddingError("embed: degenerate embedding for '" + out.primitive_id + "'");
  }
  out.normalized.resize(cfg_.model_dim);
  for (std::uint32_t j = 0; j < cfg_.model_dim; ++j) {
    out.normalized[j] = static_cast<float>(static_cast<double>(out.raw[j]) / norm);
  }
  return out;
}

SegmentEmbedding FrozenEmbedder::embed(const Primitive& p, std::string id) const {
  if (p.dim != cfg_.input_dim) throw DataError("embed: primitive dimension does not match input_dim");
  return embed(p.vectors, p.length(), std::move(id));
}

std::vector<SegmentEmbedding> FrozenEmbedder::embed_all(std::span<const Primitive> primitives, unsigned jobs) const {
  std::vector<std::string> ids;
  ids.reserve(primitives.size());
  std::map<std::string, std::size_t> seen;
  for (const auto& p : primitives) ids.push_back(primitive_id(p.source_id, seen[p.source_id]++));

  std::vector<SegmentEmbedding> out(primitives.size());
  const unsigned workers = std::max(1U, std::min<unsigned>(jobs, static_cast<unsigned>(primitives.size())));
  if (workers <= 1) {
    for (std::size_t i = 0; i < primitives.size(); ++i) out[i] = embed(primitives[i], ids[i]);
    return out;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < primitives.size(); i += workers) out[i] = embed(primitives[i], ids[i]);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

}  // namespace laps
