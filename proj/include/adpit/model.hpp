// Copyright 2026  The adpit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Toy ACCDOA predictor: a tanh MLP F -> H -> H -> 3NC applied frame by frame,
// with analytic backpropagation and an Adam optimizer.

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "adpit/core.hpp"
#include "adpit/io.hpp"
#include "adpit/synth.hpp"

namespace adpit {

struct ModelShape {
  int input_dim = 64;
  int hidden = 128;
  int n_tracks = 3;
  int n_classes = 12;

  int output_dim() const { return 3 * n_tracks * n_classes; }
  bool operator==(const ModelShape&) const = default;
};

// Output unit of (axis k, track n, class c) within one frame.
inline int output_index(const ModelShape& s, int k, int n, int c) { return (k * s.n_tracks + n) * s.n_classes + c; }

struct ParamBlock {
  std::string name;
  std::vector<int> dims;
  std::size_t offset = 0;
  std::size_t size() const {
    std::size_t n = 1;
    for (int d : dims) n *= static_cast<std::size_t>(d);
    return n;
  }
};

class ToyModel {
 public:
  // Per-frame activations kept for the backward pass.
  struct Activations {
    std::vector<double> h1, h2, y;
  };

  ToyModel() = default;
  explicit ToyModel(const ModelShape& shape) : shape_(shape) {
    if (shape.input_dim < 1 || shape.hidden < 1 || shape.n_tracks < 1 || shape.n_classes < 1)
      throw ContractError("invalid model shape");
    const int F = shape.input_dim, H = shape.hidden, O = shape.output_dim();
    add_block("w1", {H, F});
    add_block("b1", {H});
    add_block("w2", {H, H});
    add_block("b2", {H});
    add_block("w3", {O, H});
    add_block("b3", {O});
    params_.assign(total_, 0.0);
  }

  // Glorot-uniform hidden layers; the output layer is scaled down so an
  // untrained model emits near-zero (inactive) vectors.
  void initialize(std::uint64_t seed, double output_scale = 0.1) {
    Rng rng(seed);
    for (const auto& b : blocks_) {
      if (b.dims.size() != 2) continue;
      const double limit = std::sqrt(6.0 / (b.dims[0] + b.dims[1])) * (b.name == "w3" ? output_scale : 1.0);
      for (std::size_t i = 0; i < b.size(); ++i) params_[b.offset + i] = rng.uniform(-limit, limit);
    }
    for (const auto& b : blocks_)
      if (b.dims.size() == 1) std::fill_n(params_.begin() + static_cast<std::ptrdiff_t>(b.offset), b.size(), 0.0);
  }

  const ModelShape& shape() const { return shape_; }
  std::span<double> parameters() { return params_; }
  std::span<const double> parameters() const { return params_; }
  const std::vector<ParamBlock>& blocks() const { return blocks_; }
  const ParamBlock& block(const std::string& name) const {
    for (const auto& b : blocks_)
      if (b.name == name) return b;
    throw ContractError("no parameter block '" + name + "'");
  }

  void forward(std::span<const double> x, Activations& a) const {
    const int F = shape_.input_dim, H = shape_.hidden, O = shape_.output_dim();
    if (static_cast<int>(x.size()) != F)
      throw ContractError("feature dimension " + std::to_string(x.size()) + " does not match model input " +
                          std::to_string(F));
    a.h1.resize(H);
    a.h2.resize(H);
    a.y.resize(O);
    dense_tanh(x, block("w1"), block("b1"), a.h1);
    dense_tanh(a.h1, block("w2"), block("b2"), a.h2);
    dense_tanh(a.h2, block("w3"), block("b3"), a.y);
  }

  // Accumulates dLoss/dparams into grad given dLoss/dy for one frame.
  void backward(std::span<const double> x, const Activations& a, std::span<const double> dy,
                std::span<double> grad) const {
    const int H = shape_.hidden, O = shape_.output_dim();
    std::vector<double> dz3(O), dh2(H, 0.0), dz2(H), dh1(H, 0.0), dz1(H);
    for (int o = 0; o < O; ++o) dz3[o] = dy[o] * (1.0 - a.y[o] * a.y[o]);
    dense_backward(a.h2, dz3, block("w3"), block("b3"), grad, dh2);
    for (int h = 0; h < H; ++h) dz2[h] = dh2[h] * (1.0 - a.h2[h] * a.h2[h]);
    dense_backward(a.h1, dz2, block("w2"), block("b2"), grad, dh1);
    for (int h = 0; h < H; ++h) dz1[h] = dh1[h] * (1.0 - a.h1[h] * a.h1[h]);
    dense_backward(x, dz1, block("w1"), block("b1"), grad, {});
  }

  AccdoaGrid predict(const FeatureMatrix& features) const {
    AccdoaGrid grid(shape_.n_tracks, shape_.n_classes, features.n_frames);
    Activations a;
    for (int t = 0; t < features.n_frames; ++t) {
      forward(features.frame(t), a);
      write_frame(a.y, grid, t);
    }
    return grid;
  }

  void write_frame(std::span<const double> y, AccdoaGrid& grid, int t) const {
    for (int k = 0; k < 3; ++k)
      for (int n = 0; n < shape_.n_tracks; ++n)
        for (int c = 0; c < shape_.n_classes; ++c) grid.at(k, n, c, t) = y[output_index(shape_, k, n, c)];
  }
  void read_frame(const AccdoaGrid& grid, int t, std::span<double> dy) const {
    for (int k = 0; k < 3; ++k)
      for (int n = 0; n < shape_.n_tracks; ++n)
        for (int c = 0; c < shape_.n_classes; ++c) dy[output_index(shape_, k, n, c)] = grid.at(k, n, c, t);
  }

  bool operator==(const ToyModel& o) const { return shape_ == o.shape_ && params_ == o.params_; }

 private:
  void add_block(std::string name, std::vector<int> dims) {
    ParamBlock b{std::move(name), std::move(dims), total_};
    total_ += b.size();
    blocks_.push_back(std::move(b));
  }

  void dense_tanh(std::span<const double> in, const ParamBlock& w, const ParamBlock& b,
                  std::span<double> out) const {
    const int rows = w.dims[0], cols = w.dims[1];
    const double* W = params_.data() + w.offset;
    const double* B = params_.data() + b.offset;
    for (int r = 0; r < rows; ++r) {
      const double* row = W + static_cast<std::size_t>(r) * cols;
      double z = B[r];
      for (int k = 0; k < cols; ++k) z += row[k] * in[k];
      out[r] = std::tanh(z);
    }
  }

  void dense_backward(std::span<const double> in, std::span<const double> dz, const ParamBlock& w,
                      const ParamBlock& b, std::span<double> grad, std::span<double> din) const {
    const int rows = w.dims[0], cols = w.dims[1];
    const double* W = params_.data() + w.offset;
    double* gW = grad.data() + w.offset;
    double* gB = grad.data() + b.offset;
    for (int r = 0; r < rows; ++r) {
      const double g = dz[r];
      gB[r] += g;
      if (g == 0.0) continue;
      double* grow = gW + static_cast<std::size_t>(r) * cols;
      const double* row = W + static_cast<std::size_t>(r) * cols;
      for (int k = 0; k < cols; ++k) grow[k] += g * in[k];
      if (!din.empty())
        for (int k = 0; k < cols; ++k) din[k] += g * row[k];
    }
  }

  ModelShape shape_;
  std::vector<ParamBlock> blocks_;
  std::size_t total_ = 0;
  std::vector<double> params_;
};

// Adam with the usual constants; the step is bias-corrected.
class Adam {
 public:
  explicit Adam(std::size_t n_params, double lr = 1e-3, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps), m_(n_params, 0.0), v_(n_params, 0.0) {}

  void step(std::span<double> params, std::span<const double> grad) {
    if (params.size() != m_.size() || grad.size() != m_.size())
      throw ContractError("optimizer state size mismatch");
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
      v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
      params[i] -= lr_ * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps_);
    }
  }

  long long steps() const { return t_; }
  double learning_rate() const { return lr_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  std::vector<double> m_, v_;
  long long t_ = 0;
};

// Checkpoint: magic "ADPITCKPT1\n", uint32 block count, then per block
// uint32 name length, name bytes, uint32 rank, uint64 dims, float64 values.
// A "shape" block [4] holds (input_dim, hidden, n_tracks, n_classes).
namespace detail {

inline constexpr char kCheckpointMagic[] = "ADPITCKPT1\n";

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}
template <typename T>
T get(std::istream& in, const std::string& name) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (in.gcount() != static_cast<std::streamsize>(sizeof v)) throw DataError(name + ": truncated checkpoint");
  return v;
}

inline void put_block(std::ostream& out, const std::string& name, const std::vector<int>& dims,
                      std::span<const double> values) {
  put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
  out.write(name.data(), static_cast<std::streamsize>(name.size()));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(dims.size()));
  for (int d : dims) put<std::uint64_t>(out, static_cast<std::uint64_t>(d));
  write_doubles(out, values);
}

}  // namespace detail

inline void save_checkpoint(std::ostream& out, const ToyModel& model) {
  out.write(detail::kCheckpointMagic, sizeof detail::kCheckpointMagic - 1);
  detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(model.blocks().size() + 1));
  const auto& s = model.shape();
  const std::vector<double> shape{static_cast<double>(s.input_dim), static_cast<double>(s.hidden),
                                  static_cast<double>(s.n_tracks), static_cast<double>(s.n_classes)};
  detail::put_block(out, "shape", {4}, shape);
  for (const auto& b : model.blocks())
    detail::put_block(out, b.name, b.dims, model.parameters().subspan(b.offset, b.size()));
}

inline ToyModel load_checkpoint(std::istream& in, const std::string& name = "<stream>") {
  char magic[sizeof detail::kCheckpointMagic - 1];
  in.read(magic, sizeof magic);
  if (in.gcount() != static_cast<std::streamsize>(sizeof magic) ||
      std::memcmp(magic, detail::kCheckpointMagic, sizeof magic) != 0)
    throw DataError(name + ": not a model checkpoint");
  const auto count = detail::get<std::uint32_t>(in, name);
  ToyModel model;
  bool have_shape = false;
  std::size_t loaded = 0;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto len = detail::get<std::uint32_t>(in, name);
    if (len > 256) throw DataError(name + ": bad block name length");
    std::string block_name(len, '\0');
    in.read(block_name.data(), len);
    const auto rank = detail::get<std::uint32_t>(in, name);
    if (rank > 4) throw DataError(name + ": bad block rank");
    std::vector<int> dims;
    std::size_t size = 1;
    for (std::uint32_t r = 0; r < rank; ++r) {
      const auto d = detail::get<std::uint64_t>(in, name);
      if (d > (1u << 24)) throw DataError(name + ": implausible block dimension");
      dims.push_back(static_cast<int>(d));
      size *= d;
    }
    std::vector<double> values(size);
    detail::read_doubles(in, values, name);
    if (block_name == "shape") {
      if (size != 4) throw DataError(name + ": bad shape block");
      model = ToyModel(ModelShape{static_cast<int>(values[0]), static_cast<int>(values[1]),
                                  static_cast<int>(values[2]), static_cast<int>(values[3])});
      have_shape = true;
      continue;
    }
    if (!have_shape) throw DataError(name + ": parameter block before shape block");
    const ParamBlock& b = model.block(block_name);
    if (b.dims != dims) throw DataError(name + ": block '" + block_name + "' has unexpected dimensions");
    std::copy(values.begin(), values.end(), model.parameters().begin() + static_cast<std::ptrdiff_t>(b.offset));
    ++loaded;
  }
  if (!have_shape || loaded != model.blocks().size()) throw DataError(name + ": incomplete checkpoint");
  return model;
}

inline void save_checkpoint_file(const std::string& path, const ToyModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  save_checkpoint(out, model);
  if (!out) throw DataError("write failed for '" + path + "'");
}

inline ToyModel load_checkpoint_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint '" + path + "'");
  return load_checkpoint(in, path);
}

}  // namespace adpit
