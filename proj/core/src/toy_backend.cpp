/* Copyright 2026 The lgvqa Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "lgvqa/toy_backend.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "lgvqa/errors.hpp"
#include "lgvqa/rng.hpp"
#include "lgvqa/text.hpp"

namespace lgvqa {
namespace {

constexpr std::size_t kDualDefaultLen = 77;
constexpr std::size_t kFusionDefaultLen = 512;

// Distinct streams per tensor so adding a tensor never shifts the others.
enum : std::uint64_t {
  kTagTokens = 1,
  kTagPositions = 2,
  kTagTextHead = 3,
  kTagImageProj = 4,
  kTagQueries = 5,
  kTagOut = 6,
  kTagProj = 7,
  kTagExtension = 8,
};

Tensor normal_tensor(std::vector<std::size_t> shape, double stddev, std::uint64_t seed,
                     std::uint64_t tag) {
  Tensor t = Tensor::zeros(std::move(shape));
  Rng rng(mix_seed(seed, tag));
  for (double& x : t.data) x = rng.normal() * stddev;
  return t;
}

std::size_t feature_dim_of(const ToyBackendConfig& c) {
  return c.image_feature_dim == 0 ? c.dim : c.image_feature_dim;
}

void check_config(const ToyBackendConfig& c) {
  if (c.dim < 4) throw ConfigError("toy backend: dim must be >= 4, got " + std::to_string(c.dim));
  if (c.vocab_buckets == 0) throw ConfigError("toy backend: vocab_buckets must be positive");
  if (c.image_tokens == 0 || c.num_queries == 0) {
    throw ConfigError("toy backend: image_tokens and num_queries must be positive");
  }
}

// Mean of token + position embeddings over the sequence.
Vector pool_embeddings(const Tensor& tokens, const Tensor& positions,
                       const std::vector<std::size_t>& ids) {
  const std::size_t d = tokens.cols();
  Vector pooled(d, 0.0);
  for (std::size_t p = 0; p < ids.size(); ++p) {
    const auto e = tokens.row(ids[p]);
    const auto pos = positions.row(p);
    for (std::size_t i = 0; i < d; ++i) pooled[i] += e[i] + pos[i];
  }
  const double inv = 1.0 / static_cast<double>(ids.size());
  for (double& x : pooled) x *= inv;
  return pooled;
}

void backward_pool(Tensor& grad_tokens, Tensor& grad_positions,
                   const std::vector<std::size_t>& ids, std::span<const double> grad_pooled) {
  const double inv = 1.0 / static_cast<double>(ids.size());
  for (std::size_t p = 0; p < ids.size(); ++p) {
    auto ge = grad_tokens.row(ids[p]);
    auto gp = grad_positions.row(p);
    for (std::size_t i = 0; i < grad_pooled.size(); ++i) {
      ge[i] += grad_pooled[i] * inv;
      gp[i] += grad_pooled[i] * inv;
    }
  }
}

std::vector<std::size_t> require_ids(std::string_view text, const ToyBackendConfig& c,
                                     std::size_t max_len) {
  auto ids = toy_token_ids(text, c.vocab_buckets, max_len);
  if (ids.empty()) throw EmptyTextError("text has no tokens");
  return ids;
}

}  // namespace

std::string ToyBackendConfig::to_json() const {
  nlohmann::json j;
  j["seed"] = seed;
  j["dim"] = dim;
  j["vocab_buckets"] = vocab_buckets;
  j["max_text_len"] = max_text_len;
  j["image_feature_dim"] = image_feature_dim;
  j["image_tokens"] = image_tokens;
  j["num_queries"] = num_queries;
  j["init_logit_scale"] = init_logit_scale;
  j["guided_head"] = guided_head;
  j["feature_seed"] = feature_seed;
  return j.dump();
}

ToyBackendConfig ToyBackendConfig::from_json(const std::string& json_text) {
  ToyBackendConfig c;
  if (json_text.empty()) return c;
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("toy backend config: ") + e.what());
  }
  try {
    c.seed = j.value("seed", c.seed);
    c.dim = j.value("dim", c.dim);
    c.vocab_buckets = j.value("vocab_buckets", c.vocab_buckets);
    c.max_text_len = j.value("max_text_len", c.max_text_len);
    c.image_feature_dim = j.value("image_feature_dim", c.image_feature_dim);
    c.image_tokens = j.value("image_tokens", c.image_tokens);
    c.num_queries = j.value("num_queries", c.num_queries);
    c.init_logit_scale = j.value("init_logit_scale", c.init_logit_scale);
    c.guided_head = j.value("guided_head", c.guided_head);
    c.feature_seed = j.value("feature_seed", c.feature_seed);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("toy backend config: ") + e.what());
  }
  return c;
}

std::vector<std::size_t> toy_token_ids(std::string_view text, std::size_t vocab_buckets,
                                       std::size_t max_len) {
  const auto tokens = tokenize(text);
  const std::size_t n = std::min(tokens.size(), max_len);
  std::vector<std::size_t> ids(n);
  for (std::size_t i = 0; i < n; ++i) {
    ids[i] = static_cast<std::size_t>(fnv1a64(tokens[i]) % vocab_buckets);
  }
  return ids;
}

Vector pseudo_image_feature(std::string_view image_ref, std::size_t dim,
                            std::uint64_t feature_seed, std::uint64_t salt) {
  const auto tokens = tokenize(image_ref);
  if (tokens.empty()) {
    throw ImageResolveError("cannot resolve image_ref '" + std::string(image_ref) + "'");
  }
  Vector feature(dim, 0.0);
  for (const auto& token : tokens) {
    Rng rng(mix_seed(mix_seed(fnv1a64(token), feature_seed), salt));
    for (double& x : feature) x += rng.normal();
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(tokens.size()));
  for (double& x : feature) x *= scale;
  return feature;
}

// ---------------------------------------------------------------------------
// ToyDualEncoder

ToyDualEncoder::ToyDualEncoder(const ToyBackendConfig& config)
    : config_(config),
      max_text_len_(config.max_text_len == 0 ? kDualDefaultLen : config.max_text_len) {
  check_config(config_);
  config_.max_text_len = max_text_len_;
  const std::size_t d = config_.dim;
  const std::size_t f = feature_dim_of(config_);
  const std::uint64_t s = config_.seed;
  params_.add("text_encoder.token_embedding",
              normal_tensor({config_.vocab_buckets, d}, 1.0, s, kTagTokens));
  params_.add("text_encoder.positional", normal_tensor({max_text_len_, d}, 0.1, s, kTagPositions));
  params_.add("text_encoder.head",
              normal_tensor({d, d}, 1.0 / std::sqrt(static_cast<double>(d)), s, kTagTextHead));
  params_.add("image_encoder.proj",
              normal_tensor({d, f}, 1.0 / std::sqrt(static_cast<double>(f)), s, kTagImageProj));
  Tensor scale = Tensor::zeros({1});
  scale.data[0] = config_.init_logit_scale;
  params_.add("logit_scale", std::move(scale));
}

std::string ToyDualEncoder::config_json() const { return config_.to_json(); }

std::unique_ptr<Backend> ToyDualEncoder::clone() const {
  return std::make_unique<ToyDualEncoder>(*this);
}

Vector ToyDualEncoder::encode_image(std::string_view image_ref) const {
  const Vector phi = pseudo_image_feature(image_ref, feature_dim_of(config_), config_.feature_seed);
  return matvec(params_.at("image_encoder.proj"), phi);
}

Vector ToyDualEncoder::pooled_text(std::string_view text) const {
  const auto ids = require_ids(text, config_, max_text_len_);
  return pool_embeddings(params_.at("text_encoder.token_embedding"),
                         params_.at("text_encoder.positional"), ids);
}

Vector ToyDualEncoder::encode_text(std::string_view text) const {
  return matvec(params_.at("text_encoder.head"), pooled_text(text));
}

double ToyDualEncoder::temperature() const { return params_.at("logit_scale").data[0]; }

void ToyDualEncoder::backward_image(std::string_view image_ref, std::span<const double> grad,
                                    ParameterStore& grads) const {
  const Vector phi = pseudo_image_feature(image_ref, feature_dim_of(config_), config_.feature_seed);
  accumulate_outer(grads.at("image_encoder.proj"), grad, phi);
}

void ToyDualEncoder::backward_text(std::string_view text, std::span<const double> grad,
                                   ParameterStore& grads) const {
  const auto ids = require_ids(text, config_, max_text_len_);
  const Tensor& head = params_.at("text_encoder.head");
  const Vector pooled = pool_embeddings(params_.at("text_encoder.token_embedding"),
                                        params_.at("text_encoder.positional"), ids);
  accumulate_outer(grads.at("text_encoder.head"), grad, pooled);
  const Vector grad_pooled = matvec_transposed(head, grad);
  backward_pool(grads.at("text_encoder.token_embedding"), grads.at("text_encoder.positional"),
                ids, grad_pooled);
}

void ToyDualEncoder::backward_temperature(double grad, ParameterStore& grads) const {
  grads.at("logit_scale").data[0] += grad;
}

std::unique_ptr<DualEncoderBackend> ToyDualEncoder::with_extended_positions(
    std::size_t new_len) const {
  if (new_len <= max_text_len_) {
    throw ShrinkError("positional table extension must grow: current " +
                      std::to_string(max_text_len_) + ", requested " + std::to_string(new_len));
  }
  auto out = std::make_unique<ToyDualEncoder>(*this);
  const Tensor& old_table = params_.at("text_encoder.positional");

  double mean = 0.0;
  for (double x : old_table.data) mean += x;
  mean /= static_cast<double>(old_table.size());
  double var = 0.0;
  for (double x : old_table.data) var += (x - mean) * (x - mean);
  const double stddev = std::sqrt(var / static_cast<double>(old_table.size()));

  Tensor table = Tensor::zeros({new_len, old_table.cols()});
  std::copy(old_table.data.begin(), old_table.data.end(), table.data.begin());
  Rng rng(mix_seed(mix_seed(config_.seed, kTagExtension), new_len));
  for (std::size_t i = old_table.size(); i < table.size(); ++i) table.data[i] = rng.normal() * stddev;

  out->params_.add("text_encoder.positional", std::move(table));
  out->max_text_len_ = new_len;
  out->config_.max_text_len = new_len;
  return out;
}

// ---------------------------------------------------------------------------
// ToyFusion
//
//   h      = mean_p(E[tok_p] + P[p])
//   u_j    = q_j + h
//   a_jk   = softmax_k(u_j . v_k / sqrt(d))
//   z_j    = sum_k a_jk v_k
//   g      = mean_j(z_j * u_j)
//   x      = W_out g

struct ToyFusion::Forward {
  std::vector<std::size_t> ids;
  Vector pooled;
  std::vector<Vector> u;
  std::vector<Vector> alpha;
  std::vector<Vector> z;
  Vector g;
  Vector features;
};

ToyFusion::ToyFusion(const ToyBackendConfig& config)
    : config_(config),
      max_text_len_(config.max_text_len == 0 ? kFusionDefaultLen : config.max_text_len) {
  check_config(config_);
  config_.max_text_len = max_text_len_;
  const std::size_t d = config_.dim;
  const std::size_t f = feature_dim_of(config_);
  const std::uint64_t s = config_.seed;
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
  params_.add("image_encoder.proj",
              normal_tensor({d, f}, 1.0 / std::sqrt(static_cast<double>(f)), s, kTagImageProj));
  params_.add("qformer.token_embedding",
              normal_tensor({config_.vocab_buckets, d}, 1.0, s, kTagTokens));
  params_.add("qformer.positional", normal_tensor({max_text_len_, d}, 0.1, s, kTagPositions));
  params_.add("qformer.queries", normal_tensor({config_.num_queries, d}, 1.0, s, kTagQueries));
  params_.add("qformer.out", normal_tensor({d, d}, inv_sqrt_d, s, kTagOut));
  params_.add("proj.weight", normal_tensor({1, d}, inv_sqrt_d, s, kTagProj));
  params_.add("proj.bias", Tensor::zeros({1}));
  if (config_.guided_head) attach_guided_head(s);
}

std::string ToyFusion::config_json() const {
  ToyBackendConfig c = config_;
  c.guided_head = has_guided_head();
  return c.to_json();
}

std::unique_ptr<Backend> ToyFusion::clone() const { return std::make_unique<ToyFusion>(*this); }

std::vector<Vector> ToyFusion::encode_image(std::string_view image_ref) const {
  const Tensor& proj = params_.at("image_encoder.proj");
  std::vector<Vector> tokens;
  tokens.reserve(config_.image_tokens);
  for (std::size_t k = 0; k < config_.image_tokens; ++k) {
    tokens.push_back(matvec(
        proj, pseudo_image_feature(image_ref, feature_dim_of(config_), config_.feature_seed, k + 1)));
  }
  return tokens;
}

ToyFusion::Forward ToyFusion::forward(std::span<const Vector> image_tokens,
                                      std::string_view text) const {
  const std::size_t d = config_.dim;
  for (const auto& v : image_tokens) {
    if (v.size() != d) throw DimMismatchError("qformer: image token dim mismatch");
  }
  if (image_tokens.empty()) throw ImageResolveError("qformer: no image tokens");

  Forward fw;
  fw.ids = require_ids(text, config_, max_text_len_);
  fw.pooled = pool_embeddings(params_.at("qformer.token_embedding"),
                              params_.at("qformer.positional"), fw.ids);
  const Tensor& queries = params_.at("qformer.queries");
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
  const std::size_t nq = queries.rows();
  fw.g.assign(d, 0.0);
  for (std::size_t j = 0; j < nq; ++j) {
    Vector u(d);
    const auto q = queries.row(j);
    for (std::size_t i = 0; i < d; ++i) u[i] = q[i] + fw.pooled[i];

    Vector logits(image_tokens.size());
    for (std::size_t k = 0; k < image_tokens.size(); ++k) {
      logits[k] = dot(u, image_tokens[k]) * inv_sqrt_d;
    }
    const double mx = *std::max_element(logits.begin(), logits.end());
    double total = 0.0;
    for (double& l : logits) {
      l = std::exp(l - mx);
      total += l;
    }
    for (double& l : logits) l /= total;

    Vector z(d, 0.0);
    for (std::size_t k = 0; k < image_tokens.size(); ++k) {
      for (std::size_t i = 0; i < d; ++i) z[i] += logits[k] * image_tokens[k][i];
    }
    for (std::size_t i = 0; i < d; ++i) fw.g[i] += z[i] * u[i] / static_cast<double>(nq);

    fw.u.push_back(std::move(u));
    fw.alpha.push_back(std::move(logits));
    fw.z.push_back(std::move(z));
  }
  fw.features = matvec(params_.at("qformer.out"), fw.g);
  return fw;
}

Vector ToyFusion::qformer(std::span<const Vector> image_tokens, std::string_view text) const {
  return forward(image_tokens, text).features;
}

void ToyFusion::backward_qformer(std::span<const Vector> image_tokens, std::string_view text,
                                 std::span<const double> grad_features,
                                 ParameterStore& grads) const {
  const Forward fw = forward(image_tokens, text);
  const std::size_t d = config_.dim;
  const std::size_t nq = fw.u.size();
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));

  accumulate_outer(grads.at("qformer.out"), grad_features, fw.g);
  const Vector grad_g = matvec_transposed(params_.at("qformer.out"), grad_features);

  Tensor& grad_queries = grads.at("qformer.queries");
  Vector grad_pooled(d, 0.0);
  for (std::size_t j = 0; j < nq; ++j) {
    const Vector& u = fw.u[j];
    const Vector& z = fw.z[j];
    const Vector& alpha = fw.alpha[j];
    Vector grad_u(d);
    Vector grad_z(d);
    for (std::size_t i = 0; i < d; ++i) {
      grad_z[i] = grad_g[i] * u[i] / static_cast<double>(nq);
      grad_u[i] = grad_g[i] * z[i] / static_cast<double>(nq);
    }
    // Through z_j = sum_k alpha_jk v_k and the attention softmax.
    Vector grad_alpha(alpha.size());
    double weighted = 0.0;
    for (std::size_t k = 0; k < alpha.size(); ++k) {
      grad_alpha[k] = dot(grad_z, image_tokens[k]);
      weighted += alpha[k] * grad_alpha[k];
    }
    for (std::size_t k = 0; k < alpha.size(); ++k) {
      const double grad_logit = alpha[k] * (grad_alpha[k] - weighted);
      for (std::size_t i = 0; i < d; ++i) grad_u[i] += grad_logit * image_tokens[k][i] * inv_sqrt_d;
    }
    auto gq = grad_queries.row(j);
    for (std::size_t i = 0; i < d; ++i) {
      gq[i] += grad_u[i];
      grad_pooled[i] += grad_u[i];
    }
  }
  backward_pool(grads.at("qformer.token_embedding"), grads.at("qformer.positional"), fw.ids,
                grad_pooled);
}

std::unique_ptr<ToyDualEncoder> make_toy_dual(const ToyBackendConfig& config) {
  return std::make_unique<ToyDualEncoder>(config);
}

std::unique_ptr<ToyFusion> make_toy_fusion(const ToyBackendConfig& config) {
  return std::make_unique<ToyFusion>(config);
}

std::unique_ptr<Backend> toy_backend(std::uint64_t seed, std::size_t dim, BackendKind kind) {
  ToyBackendConfig config;
  config.seed = seed;
  config.dim = dim;
  if (kind == BackendKind::dual_encoder) return make_toy_dual(config);
  return make_toy_fusion(config);
}

}  // namespace lgvqa
