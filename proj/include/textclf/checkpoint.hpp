#pragma once
// Parameter checkpoint file: a flat, ordered list of named tensors with raw
// 64-bit little-endian values. Loading validates names and shapes exactly.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "textclf/tensor.hpp"

namespace textclf::ckpt {

struct NamedTensorData {
  std::string name;
  Shape shape;
  std::vector<double> values;
};

void save(const std::vector<NamedTensorData>& tensors, const std::filesystem::path& path);
std::vector<NamedTensorData> load(const std::filesystem::path& path);

template <typename S>
std::vector<NamedTensorData> snapshot(const std::vector<std::pair<std::string, Tensor<S>>>& params) {
  std::vector<NamedTensorData> out;
  out.reserve(params.size());
  for (const auto& [name, tensor] : params) {
    NamedTensorData t;
    t.name = name;
    t.shape = tensor.shape();
    t.values.assign(tensor.values().begin(), tensor.values().end());
    out.push_back(std::move(t));
  }
  return out;
}

/// Writes the loaded values into the given parameters; the checkpoint must
/// carry exactly the same names and shapes, in order.
template <typename S>
void restore(const std::vector<NamedTensorData>& data,
             std::vector<std::pair<std::string, Tensor<S>>>& params);

void expect_layout(const std::vector<NamedTensorData>& data,
                   const std::vector<std::pair<std::string, Shape>>& expected);

template <typename S>
void restore(const std::vector<NamedTensorData>& data,
             std::vector<std::pair<std::string, Tensor<S>>>& params) {
  std::vector<std::pair<std::string, Shape>> expected;
  expected.reserve(params.size());
  for (const auto& [name, tensor] : params) expected.emplace_back(name, tensor.shape());
  expect_layout(data, expected);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto vals = params[i].second.values_mut();
    for (std::size_t j = 0; j < vals.size(); ++j) vals[j] = static_cast<S>(data[i].values[j]);
  }
}

}  // namespace textclf::ckpt
