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

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string_view>
#include <string>
#include <vector>

namespace lgvqa {

using Vector = std::vector<double>;

// Dense row-major tensor of doubles. Only rank 1 and 2 are used by the
// shipped backends, but the manifest format carries arbitrary shapes.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;

  static Tensor zeros(std::vector<std::size_t> shape);

  std::size_t size() const { return data.size(); }
  std::size_t rows() const { return shape.empty() ? 0 : shape[0]; }
  std::size_t cols() const { return shape.size() < 2 ? 1 : shape[1]; }

  std::span<double> row(std::size_t r) { return {data.data() + r * cols(), cols()}; }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols(), cols()}; }

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols() + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols() + c]; }

  bool operator==(const Tensor&) const = default;
};

// Named tensors in a stable (lexicographic) order. Parameters and their
// gradients use the same store type so they can be zipped by name.
class ParameterStore {
 public:
  using Map = std::map<std::string, Tensor, std::less<>>;

  void add(std::string name, Tensor tensor);
  bool contains(std::string_view name) const;
  Tensor& at(std::string_view name);
  const Tensor& at(std::string_view name) const;

  std::vector<std::string> names() const;
  std::size_t total_size() const;

  // Same names and shapes, all zero.
  ParameterStore zeros_like() const;
  void fill_zero();

  Map::const_iterator begin() const { return tensors_.begin(); }
  Map::const_iterator end() const { return tensors_.end(); }
  Map::iterator begin() { return tensors_.begin(); }
  Map::iterator end() { return tensors_.end(); }

  bool operator==(const ParameterStore&) const = default;

 private:
  Map tensors_;
};

// FNV-1a over names, shapes and the IEEE bytes of every value.
std::uint64_t parameter_hash(const ParameterStore& store);
std::string hash_hex(std::uint64_t hash);

double dot(std::span<const double> a, std::span<const double> b);
double l2_norm(std::span<const double> v);
bool all_finite(std::span<const double> v);

// y = W x for a row-major [out x in] matrix.
Vector matvec(const Tensor& weight, std::span<const double> x);
// W^T y.
Vector matvec_transposed(const Tensor& weight, std::span<const double> y);
// grad_W += outer(y_grad, x).
void accumulate_outer(Tensor& grad_weight, std::span<const double> y_grad,
                      std::span<const double> x);

}  // namespace lgvqa
