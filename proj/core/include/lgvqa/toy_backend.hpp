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

#pragma once

// Deterministic desk-scale backends. Both share the same text front end:
// lowercase tokens hashed into a fixed bucket table, plus a learned
// positional table, mean-pooled over the (head-truncated) sequence.
//
// Images are never decoded. Every image_ref maps to a pseudo-feature built
// from seeded Gaussian vectors, one per token of the reference string, so
// images whose references share a token share part of their feature.
//
// Parameter names (stable; used by checkpoints and freeze lists):
//   toy-dual:   text_encoder.token_embedding [V x d]
//               text_encoder.positional      [L x d]
//               text_encoder.head            [d x d]
//               image_encoder.proj           [d x f]
//               logit_scale                  [1]
//   toy-fusion: image_encoder.proj           [d x f]   (frozen by default)
//               qformer.token_embedding      [V x d]
//               qformer.positional           [L x d]
//               qformer.queries              [Q x d]
//               qformer.out                  [d x d]
//               proj.weight [1 x d], proj.bias [1]
//               proj_guided.weight [1 x 4d], proj_guided.bias [1]  (optional)

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "lgvqa/backend.hpp"

namespace lgvqa {

inline constexpr const char* kToyDualName = "toy-dual";
inline constexpr const char* kToyFusionName = "toy-fusion";
inline constexpr std::uint64_t kDefaultFeatureSeed = 0x7f4a7c159e3779b9ULL;

struct ToyBackendConfig {
  std::uint64_t seed = 0;
  std::size_t dim = 32;
  std::size_t vocab_buckets = 4096;
  // 0 selects the family default: 77 for toy-dual, 512 for toy-fusion.
  std::size_t max_text_len = 0;
  // 0 selects dim.
  std::size_t image_feature_dim = 0;
  std::size_t image_tokens = 4;
  std::size_t num_queries = 4;
  double init_logit_scale = 2.6592600369327779;  // log(1 / 0.07)
  bool guided_head = false;
  std::uint64_t feature_seed = kDefaultFeatureSeed;

  std::string to_json() const;
  static ToyBackendConfig from_json(const std::string& json_text);
};

// Token ids after tokenization, bucket hashing, and head truncation.
std::vector<std::size_t> toy_token_ids(std::string_view text, std::size_t vocab_buckets,
                                       std::size_t max_len);

// Sum of per-token seeded normals, scaled by 1/sqrt(token count). Throws
// ImageResolveError for references without any token.
Vector pseudo_image_feature(std::string_view image_ref, std::size_t dim,
                            std::uint64_t feature_seed, std::uint64_t salt = 0);

class ToyDualEncoder final : public DualEncoderBackend {
 public:
  explicit ToyDualEncoder(const ToyBackendConfig& config);

  std::string name() const override { return kToyDualName; }
  std::string config_json() const override;
  const ParameterStore& parameters() const override { return params_; }
  ParameterStore& mutable_parameters() override { return params_; }
  std::size_t max_text_len() const override { return max_text_len_; }
  std::vector<std::string> default_frozen_prefixes() const override { return {}; }
  std::unique_ptr<Backend> clone() const override;

  Vector encode_image(std::string_view image_ref) const override;
  Vector encode_text(std::string_view text) const override;
  double temperature() const override;
  void backward_image(std::string_view image_ref, std::span<const double> grad,
                      ParameterStore& grads) const override;
  void backward_text(std::string_view text, std::span<const double> grad,
                     ParameterStore& grads) const override;
  void backward_temperature(double grad, ParameterStore& grads) const override;
  std::unique_ptr<DualEncoderBackend> with_extended_positions(std::size_t new_len) const override;

  const ToyBackendConfig& config() const { return config_; }
  // Mean-pooled token + position embedding before the linear head.
  Vector pooled_text(std::string_view text) const;

 private:
  ToyBackendConfig config_;
  std::size_t max_text_len_;
  ParameterStore params_;
};

class ToyFusion final : public FusionBackend {
 public:
  explicit ToyFusion(const ToyBackendConfig& config);

  std::string name() const override { return kToyFusionName; }
  std::string config_json() const override;
  const ParameterStore& parameters() const override { return params_; }
  ParameterStore& mutable_parameters() override { return params_; }
  std::size_t max_text_len() const override { return max_text_len_; }
  std::vector<std::string> default_frozen_prefixes() const override { return {"image_encoder"}; }
  std::unique_ptr<Backend> clone() const override;

  std::vector<Vector> encode_image(std::string_view image_ref) const override;
  Vector qformer(std::span<const Vector> image_tokens, std::string_view text) const override;
  void backward_qformer(std::span<const Vector> image_tokens, std::string_view text,
                        std::span<const double> grad_features,
                        ParameterStore& grads) const override;
  std::size_t feature_dim() const override { return config_.dim; }

  const ToyBackendConfig& config() const { return config_; }

 private:
  struct Forward;
  Forward forward(std::span<const Vector> image_tokens, std::string_view text) const;

  ToyBackendConfig config_;
  std::size_t max_text_len_;
  ParameterStore params_;
};

std::unique_ptr<ToyDualEncoder> make_toy_dual(const ToyBackendConfig& config);
std::unique_ptr<ToyFusion> make_toy_fusion(const ToyBackendConfig& config);

// Convenience constructor: toy_backend(seed, d, kind). Throws ConfigError
// for d < 4.
std::unique_ptr<Backend> toy_backend(std::uint64_t seed, std::size_t dim, BackendKind kind);

}  // namespace lgvqa
