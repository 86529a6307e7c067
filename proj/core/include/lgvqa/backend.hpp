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

// Scoring engines. Two families share one parameter/gradient model:
//
//   DualEncoderBackend  separate image and text encoders; the framework
//                       computes  score = exp(t) * <I/|I|, T/|T|>.
//   FusionBackend       learned queries attend over image tokens together
//                       with the text; a linear projection head maps the
//                       resulting feature vector to a scalar score.
//
// Concrete backends implement the encoders and their backward passes; the
// free functions below own the matching formulas so that every backend,
// including out-of-tree adapters for pretrained models, shares them.
//
// Inference methods are const and pure given parameters, so one backend may
// serve many reader threads. Parameter updates need exclusive access.

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lgvqa/tensor.hpp"

namespace lgvqa {

enum class BackendKind { dual_encoder, fusion };

class Backend {
 public:
  virtual ~Backend() = default;

  virtual BackendKind kind() const = 0;
  // Registry name, e.g. "toy-dual".
  virtual std::string name() const = 0;
  // Constructor arguments as a JSON object; stored in checkpoints.
  virtual std::string config_json() const = 0;

  virtual const ParameterStore& parameters() const = 0;
  virtual ParameterStore& mutable_parameters() = 0;

  virtual std::size_t max_text_len() const = 0;

  // Parameter-name prefixes excluded from training unless overridden.
  virtual std::vector<std::string> default_frozen_prefixes() const = 0;

  virtual std::unique_ptr<Backend> clone() const = 0;
};

class DualEncoderBackend : public Backend {
 public:
  BackendKind kind() const final { return BackendKind::dual_encoder; }

  // Raw (pre-normalization) encodings. Throw ImageResolveError /
  // EmptyTextError on unusable inputs.
  virtual Vector encode_image(std::string_view image_ref) const = 0;
  virtual Vector encode_text(std::string_view text) const = 0;
  // Learned log-scale t; scores are multiplied by exp(t).
  virtual double temperature() const = 0;

  // Accumulate grad * d(encoding)/d(params) into grads.
  virtual void backward_image(std::string_view image_ref, std::span<const double> grad,
                              ParameterStore& grads) const = 0;
  virtual void backward_text(std::string_view text, std::span<const double> grad,
                             ParameterStore& grads) const = 0;
  virtual void backward_temperature(double grad, ParameterStore& grads) const = 0;

  // Copy of this backend whose positional table holds new_len rows.
  virtual std::unique_ptr<DualEncoderBackend> with_extended_positions(
      std::size_t new_len) const = 0;
};

class FusionBackend : public Backend {
 public:
  BackendKind kind() const final { return BackendKind::fusion; }

  // Frozen image encoder output: a sequence of image token vectors.
  virtual std::vector<Vector> encode_image(std::string_view image_ref) const = 0;
  // Query transformer over image tokens and text; returns a feature vector
  // of feature_dim() entries.
  virtual Vector qformer(std::span<const Vector> image_tokens, std::string_view text) const = 0;
  virtual void backward_qformer(std::span<const Vector> image_tokens, std::string_view text,
                                std::span<const double> grad_features,
                                ParameterStore& grads) const = 0;
  virtual std::size_t feature_dim() const = 0;

  // The projection heads live in parameters() under these prefixes:
  //   proj.weight [1 x d], proj.bias [1]
  //   proj_guided.weight [1 x 4d], proj_guided.bias [1]
  bool has_guided_head() const;
  // Adds a freshly initialized guided projection head (input 4d).
  void attach_guided_head(std::uint64_t seed);
};

inline constexpr std::string_view kProjHead = "proj";
inline constexpr std::string_view kGuidedHead = "proj_guided";

// exp(t) * <normalize(I), normalize(T)>.
double dual_match(const DualEncoderBackend& backend, std::string_view image_ref,
                  std::string_view text);
void dual_match_backward(const DualEncoderBackend& backend, std::string_view image_ref,
                         std::string_view text, double grad_score, ParameterStore& grads);

// Normalize-then-dot on already encoded vectors; exposed for oracles.
double cosine_times_scale(std::span<const double> image, std::span<const double> text,
                          double log_scale);

// Q(I, text, q) for one image/text pair.
Vector fusion_features(const FusionBackend& backend, std::string_view image_ref,
                       std::string_view text);
// Proj(Q(I, text, q)).
double fusion_match(const FusionBackend& backend, std::string_view image_ref,
                    std::string_view text);
void fusion_match_backward(const FusionBackend& backend, std::string_view image_ref,
                           std::string_view text, double grad_score, ParameterStore& grads);

// [x1, x2, x1 - x2, x1 * x2]; throws DimMismatchError on unequal sizes.
Vector merge_features(std::span<const double> x1, std::span<const double> x2);

// Proj_guided(merge(Q(I, text, q), Q(I, guided_text, q))). Throws
// ModeBackendMismatchError when the backend has no guided head.
double guided_fusion_match(const FusionBackend& backend, std::string_view image_ref,
                           std::string_view text, std::string_view guided_text);
void guided_fusion_match_backward(const FusionBackend& backend, std::string_view image_ref,
                                  std::string_view text, std::string_view guided_text,
                                  double grad_score, ParameterStore& grads);

// w . x + b for the head stored under prefix.
double linear_head(const ParameterStore& params, std::string_view prefix,
                   std::span<const double> x);
void linear_head_backward(const ParameterStore& params, std::string_view prefix,
                          std::span<const double> x, double grad_out, ParameterStore& grads,
                          std::span<double> grad_x);

// Grows the positional table to new_len rows. Rows below the old limit are
// copied bit-for-bit; the rest are drawn from a zero-mean normal whose std
// matches the existing rows. Throws ShrinkError when new_len <= current.
std::unique_ptr<DualEncoderBackend> extend_positional_table(const DualEncoderBackend& backend,
                                                            std::size_t new_len);

// Backend registry. The toy backends are registered as "toy-dual" and
// "toy-fusion"; adapters for pretrained models register under their own
// names and are addressed as plugin:<name> on the command line.
using BackendFactory = std::function<std::unique_ptr<Backend>(const std::string& config_json)>;

void register_backend(const std::string& name, BackendFactory factory);
bool has_backend(const std::string& name);
std::vector<std::string> registered_backends();
// Throws ConfigError for unknown names.
std::unique_ptr<Backend> create_backend(const std::string& name, const std::string& config_json);

}  // namespace lgvqa
