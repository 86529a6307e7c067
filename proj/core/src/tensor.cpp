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

#include "lgvqa/tensor.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <numeric>

#include "lgvqa/errors.hpp"
#include "lgvqa/text.hpp"

namespace lgvqa {

Tensor Tensor::zeros(std::vector<std::size_t> shape) {
  Tensor t;
  const std::size_t n = std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                                        std::multiplies<>());
  t.shape = std::move(shape);
  t.data.assign(n, 0.0);
  return t;
}

void ParameterStore::add(std::string name, Tensor tensor) {
  tensors_.insert_or_assign(std::move(name), std::move(tensor));
}

bool ParameterStore::contains(std::string_view name) const {
  return tensors_.find(name) != tensors_.end();
}

Tensor& ParameterStore::at(std::string_view name) {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) throw Error("unknown parameter '" + std::string(name) + "'");
  return it->second;
}

const Tensor& ParameterStore::at(std::string_view name) const {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) throw Error("unknown parameter '" + std::string(name) + "'");
  return it->second;
}

std::vector<std::string> ParameterStore::names() const {
  std::vector<std::string> out;
  out.reserve(tensors_.size());
  for (const auto& [name, _] : tensors_) out.push_back(name);
  return out;
}

std::size_t ParameterStore::total_size() const {
  std::size_t n = 0;
  for (const auto& [_, t] : tensors_) n += t.size();
  return n;
}

ParameterStore ParameterStore::zeros_like() const {
  ParameterStore out;
  for (const auto& [name, t] : tensors_) out.add(name, Tensor::zeros(t.shape));
  return out;
}

void ParameterStore::fill_zero() {
  for (auto& [_, t] : tensors_) std::fill(t.data.begin(), t.data.end(), 0.0);
}

std::uint64_t parameter_hash(const ParameterStore& store) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& [name, t] : store) {
    h = fnv1a64(name, h);
    for (std::size_t dim : t.shape) {
      const auto d = static_cast<std::uint64_t>(dim);
      h = fnv1a64(std::string_view(reinterpret_cast<const char*>(&d), sizeof d), h);
    }
    h = fnv1a64(std::string_view(reinterpret_cast<const char*>(t.data.data()),
                                 t.data.size() * sizeof(double)),
                h);
  }
  return h;
}

std::string hash_hex(std::uint64_t hash) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimMismatchError("dot: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double l2_norm(std::span<const double> v) { return std::sqrt(dot(v, v)); }

bool all_finite(std::span<const double> v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

Vector matvec(const Tensor& weight, std::span<const double> x) {
  if (weight.cols() != x.size()) throw DimMismatchError("matvec: dimension mismatch");
  Vector y(weight.rows(), 0.0);
  for (std::size_t r = 0; r < weight.rows(); ++r) y[r] = dot(weight.row(r), x);
  return y;
}

Vector matvec_transposed(const Tensor& weight, std::span<const double> y) {
  if (weight.rows() != y.size()) throw DimMismatchError("matvec_transposed: dimension mismatch");
  Vector x(weight.cols(), 0.0);
  for (std::size_t r = 0; r < weight.rows(); ++r) {
    const auto row = weight.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) x[c] += row[c] * y[r];
  }
  return x;
}

void accumulate_outer(Tensor& grad_weight, std::span<const double> y_grad,
                      std::span<const double> x) {
  if (grad_weight.rows() != y_grad.size() || grad_weight.cols() != x.size()) {
    throw DimMismatchError("accumulate_outer: dimension mismatch");
  }
  for (std::size_t r = 0; r < y_grad.size(); ++r) {
    if (y_grad[r] == 0.0) continue;
    auto row = grad_weight.row(r);
    for (std::size_t c = 0; c < x.size(); ++c) row[c] += y_grad[r] * x[c];
  }
}

}  // namespace lgvqa
