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

#include "lgvqa/backend.hpp"

#include <cmath>
#include <map>
#include <mutex>

#include "lgvqa/errors.hpp"
#include "lgvqa/rng.hpp"
#include "lgvqa/text.hpp"
#include "lgvqa/toy_backend.hpp"

namespace lgvqa {
namespace {

constexpr double kNormFloor = 1e-12;

std::string head_weight(std::string_view prefix) { return std::string(prefix) + ".weight"; }
std::string head_bias(std::string_view prefix) { return std::string(prefix) + ".bias"; }

void require_text(std::string_view text) {
  if (normalize_whitespace(text).empty()) throw EmptyTextError("empty text");
}

}  // namespace

bool FusionBackend::has_guided_head() const {
  return parameters().contains(head_weight(kGuidedHead));
}

void FusionBackend::attach_guided_head(std::uint64_t seed) {
  const std::size_t in = 4 * feature_dim();
  Rng rng(mix_seed(seed, 0x6775696465ULL));
  Tensor weight = Tensor::zeros({1, in});
  const double scale = 1.0 / std::sqrt(static_cast<double>(in));
  for (double& w : weight.data) w = rng.normal() * scale;
  auto& params = mutable_parameters();
  params.add(head_weight(kGuidedHead), std::move(weight));
  params.add(head_bias(kGuidedHead), Tensor::zeros({1}));
}

double cosine_times_scale(std::span<const double> image, std::span<const double> text,
                          double log_scale) {
  if (image.size() != text.size()) throw DimMismatchError("image/text embedding dims differ");
  const double ni = std::max(l2_norm(image), kNormFloor);
  const double nt = std::max(l2_norm(text), kNormFloor);
  return std::exp(log_scale) * (dot(image, text) / (ni * nt));
}

double dual_match(const DualEncoderBackend& backend, std::string_view image_ref,
                  std::string_view text) {
  require_text(text);
  const Vector image = backend.encode_image(image_ref);
  const Vector encoded = backend.encode_text(text);
  return cosine_times_scale(image, encoded, backend.temperature());
}

void dual_match_backward(const DualEncoderBackend& backend, std::string_view image_ref,
                         std::string_view text, double grad_score, ParameterStore& grads) {
  require_text(text);
  const Vector a = backend.encode_image(image_ref);
  const Vector b = backend.encode_text(text);
  if (a.size() != b.size()) throw DimMismatchError("image/text embedding dims differ");
  const double na = std::max(l2_norm(a), kNormFloor);
  const double nb = std::max(l2_norm(b), kNormFloor);
  const double scale = std::exp(backend.temperature());
  const double cosine = dot(a, b) / (na * nb);

  // d cos / da = (b_hat - cos * a_hat) / |a|, symmetric for b.
  Vector grad_a(a.size());
  Vector grad_b(b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double a_hat = a[i] / na;
    const double b_hat = b[i] / nb;
    grad_a[i] = grad_score * scale * (b_hat - cosine * a_hat) / na;
    grad_b[i] = grad_score * scale * (a_hat - cosine * b_hat) / nb;
  }
  backend.backward_image(image_ref, grad_a, grads);
  backend.backward_text(text, grad_b, grads);
  // d(exp(t) * cos)/dt is the score itself.
  backend.backward_temperature(grad_score * scale * cosine, grads);
}

double linear_head(const ParameterStore& params, std::string_view prefix,
                   std::span<const double> x) {
  const Tensor& w = params.at(head_weight(prefix));
  const Tensor& b = params.at(head_bias(prefix));
  if (w.size() != x.size()) {
    throw DimMismatchError(std::string(prefix) + ": expected input dim " +
                           std::to_string(w.size()) + ", got " + std::to_string(x.size()));
  }
  return dot(w.data, x) + b.data[0];
}

void linear_head_backward(const ParameterStore& params, std::string_view prefix,
                          std::span<const double> x, double grad_out, ParameterStore& grads,
                          std::span<double> grad_x) {
  const Tensor& w = params.at(head_weight(prefix));
  if (w.size() != x.size() || grad_x.size() != x.size()) {
    throw DimMismatchError(std::string(prefix) + ": dimension mismatch in backward");
  }
  Tensor& gw = grads.at(head_weight(prefix));
  for (std::size_t i = 0; i < x.size(); ++i) {
    gw.data[i] += grad_out * x[i];
    grad_x[i] += grad_out * w.data[i];
  }
  grads.at(head_bias(prefix)).data[0] += grad_out;
}

Vector fusion_features(const FusionBackend& backend, std::string_view image_ref,
                       std::string_view text) {
  require_text(text);
  const auto tokens = backend.encode_image(image_ref);
  return backend.qformer(tokens, text);
}

double fusion_match(const FusionBackend& backend, std::string_view image_ref,
                    std::string_view text) {
  const Vector features = fusion_features(backend, image_ref, text);
  return linear_head(backend.parameters(), kProjHead, features);
}

void fusion_match_backward(const FusionBackend& backend, std::string_view image_ref,
                           std::string_view text, double grad_score, ParameterStore& grads) {
  require_text(text);
  const auto tokens = backend.encode_image(image_ref);
  const Vector features = backend.qformer(tokens, text);
  Vector grad_features(features.size(), 0.0);
  linear_head_backward(backend.parameters(), kProjHead, features, grad_score, grads,
                       grad_features);
  backend.backward_qformer(tokens, text, grad_features, grads);
}

Vector merge_features(std::span<const double> x1, std::span<const double> x2) {
  if (x1.size() != x2.size()) {
    throw DimMismatchError("merge_features: dims " + std::to_string(x1.size()) + " and " +
                           std::to_string(x2.size()));
  }
  const std::size_t d = x1.size();
  Vector merged(4 * d);
  for (std::size_t i = 0; i < d; ++i) {
    merged[i] = x1[i];
    merged[d + i] = x2[i];
    merged[2 * d + i] = x1[i] - x2[i];
    merged[3 * d + i] = x1[i] * x2[i];
  }
  return merged;
}

namespace {

void require_guided_head(const FusionBackend& backend) {
  if (!backend.has_guided_head()) {
    throw ModeBackendMismatchError("backend '" + backend.name() +
                                   "' has no guided projection head");
  }
}

}  // namespace

double guided_fusion_match(const FusionBackend& backend, std::string_view image_ref,
                           std::string_view text, std::string_view guided_text) {
  require_guided_head(backend);
  require_text(text);
  require_text(guided_text);
  const auto tokens = backend.encode_image(image_ref);
  const Vector x1 = backend.qformer(tokens, text);
  const Vector x2 = backend.qformer(tokens, guided_text);
  return linear_head(backend.parameters(), kGuidedHead, merge_features(x1, x2));
}

void guided_fusion_match_backward(const FusionBackend& backend, std::string_view image_ref,
                                  std::string_view text, std::string_view guided_text,
                                  double grad_score, ParameterStore& grads) {
  require_guided_head(backend);
  require_text(text);
  require_text(guided_text);
  const auto tokens = backend.encode_image(image_ref);
  const Vector x1 = backend.qformer(tokens, text);
  const Vector x2 = backend.qformer(tokens, guided_text);
  const Vector merged = merge_features(x1, x2);
  Vector grad_merged(merged.size(), 0.0);
  linear_head_backward(backend.parameters(), kGuidedHead, merged, grad_score, grads,
                       grad_merged);

  const std::size_t d = x1.size();
  Vector grad_x1(d);
  Vector grad_x2(d);
  for (std::size_t i = 0; i < d; ++i) {
    const double g_diff = grad_merged[2 * d + i];
    const double g_prod = grad_merged[3 * d + i];
    grad_x1[i] = grad_merged[i] + g_diff + g_prod * x2[i];
    grad_x2[i] = grad_merged[d + i] - g_diff + g_prod * x1[i];
  }
  backend.backward_qformer(tokens, text, grad_x1, grads);
  backend.backward_qformer(tokens, guided_text, grad_x2, grads);
}

std::unique_ptr<DualEncoderBackend> extend_positional_table(const DualEncoderBackend& backend,
                                                            std::size_t new_len) {
  if (new_len <= backend.max_text_len()) {
    throw ShrinkError("positional table extension must grow: current " +
                      std::to_string(backend.max_text_len()) + ", requested " +
                      std::to_string(new_len));
  }
  return backend.with_extended_positions(new_len);
}

namespace {

struct Registry {
  std::mutex mutex;
  std::map<std::string, BackendFactory> factories;
};

Registry& registry() {
  static Registry* instance = [] {
    auto* r = new Registry;
    r->factories.emplace(kToyDualName, [](const std::string& config) {
      return std::unique_ptr<Backend>(make_toy_dual(ToyBackendConfig::from_json(config)));
    });
    r->factories.emplace(kToyFusionName, [](const std::string& config) {
      return std::unique_ptr<Backend>(make_toy_fusion(ToyBackendConfig::from_json(config)));
    });
    return r;
  }();
  return *instance;
}

}  // namespace

void register_backend(const std::string& name, BackendFactory factory) {
  auto& r = registry();
  std::lock_guard lock(r.mutex);
  r.factories.insert_or_assign(name, std::move(factory));
}

bool has_backend(const std::string& name) {
  auto& r = registry();
  std::lock_guard lock(r.mutex);
  return r.factories.count(name) != 0;
}

std::vector<std::string> registered_backends() {
  auto& r = registry();
  std::lock_guard lock(r.mutex);
  std::vector<std::string> names;
  for (const auto& [name, _] : r.factories) names.push_back(name);
  return names;
}

std::unique_ptr<Backend> create_backend(const std::string& name, const std::string& config_json) {
  BackendFactory factory;
  {
    auto& r = registry();
    std::lock_guard lock(r.mutex);
    auto it = r.factories.find(name);
    if (it == r.factories.end()) throw ConfigError("unknown backend '" + name + "'");
    factory = it->second;
  }
  return factory(config_json);
}

}  // namespace lgvqa
