// ctcasr/net.hpp

// Copyright 2026  The ctcasr Authors

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

// Multi-layer (bi)directional ReLU-RNN with a softmax output layer.
//
// Each layer runs  h_t = relu(Wx x_t + Wh h_{t-1} + b)  left to right, and,
// when bidirectional, a second copy right to left.  The two directions are
// concatenated to form the next layer's input, so a layer of width H feeds
// 2H activations upward.  The output layer maps the top concatenation to Q
// logits.
//
// All parameters live in one flat buffer.  Block order, which is also the
// checkpoint order:
//   for layer in 0..L-1, for direction in {forward, backward}:
//     Wx [H x in_l] row-major, Wh [H x H] row-major, b [H]
//   Wo [Q x D_top] row-major, bo [Q]

#ifndef CTCASR_NET_HPP_
#define CTCASR_NET_HPP_

#include "ctcasr/common.hpp"
#include "ctcasr/lattice.hpp"

#include <cstring>
#include <fstream>
#include <random>
#include <string>
#include <vector>

namespace ctcasr {

struct NetConfig {
  int input_dim = 120;
  int hidden_dim = 128;
  int num_layers = 3;
  int output_dim = 2;
  bool bidirectional = true;
  /// Output layer starts as an identity block per direction.
  bool identity_output_init = true;

  int directions() const { return bidirectional ? 2 : 1; }
  int layer_input_dim(int layer) const {
    return layer == 0 ? input_dim : hidden_dim * directions();
  }
  int top_dim() const { return hidden_dim * directions(); }

  void Validate() const {
    if (input_dim < 1 || hidden_dim < 1 || num_layers < 1 || output_dim < 1) {
      throw UsageError(StrCat("network dimensions must be >= 1 (input ", input_dim,
                              ", hidden ", hidden_dim, ", layers ", num_layers,
                              ", output ", output_dim, ")"));
    }
  }

  /// Total weights and biases.
  std::size_t ParamCount() const {
    std::size_t n = 0;
    const std::size_t h = static_cast<std::size_t>(hidden_dim);
    for (int l = 0; l < num_layers; ++l) {
      n += static_cast<std::size_t>(directions()) *
           (h * static_cast<std::size_t>(layer_input_dim(l)) + h * h + h);
    }
    n += static_cast<std::size_t>(output_dim) * (static_cast<std::size_t>(top_dim()) + 1);
    return n;
  }

  bool operator==(const NetConfig &) const = default;
};

template <typename Real>
class NetParams {
 public:
  using MatMap = Eigen::Map<Matrix<Real>>;
  using ConstMatMap = Eigen::Map<const Matrix<Real>>;
  using VecMap = Eigen::Map<Vector<Real>>;
  using ConstVecMap = Eigen::Map<const Vector<Real>>;

  NetParams() = default;
  explicit NetParams(const NetConfig &cfg) : cfg_(cfg) {
    cfg_.Validate();
    data_.assign(cfg_.ParamCount(), Real(0));
  }

  const NetConfig &config() const { return cfg_; }
  std::vector<Real> &data() { return data_; }
  const std::vector<Real> &data() const { return data_; }
  std::size_t size() const { return data_.size(); }

  MatMap Wx(int layer, int dir) { return {ptr(WxOffset(layer, dir)), cfg_.hidden_dim, cfg_.layer_input_dim(layer)}; }
  ConstMatMap Wx(int layer, int dir) const { return {ptr(WxOffset(layer, dir)), cfg_.hidden_dim, cfg_.layer_input_dim(layer)}; }
  MatMap Wh(int layer, int dir) { return {ptr(WhOffset(layer, dir)), cfg_.hidden_dim, cfg_.hidden_dim}; }
  ConstMatMap Wh(int layer, int dir) const { return {ptr(WhOffset(layer, dir)), cfg_.hidden_dim, cfg_.hidden_dim}; }
  VecMap b(int layer, int dir) { return {ptr(BOffset(layer, dir)), cfg_.hidden_dim}; }
  ConstVecMap b(int layer, int dir) const { return {ptr(BOffset(layer, dir)), cfg_.hidden_dim}; }
  MatMap Wo() { return {ptr(WoOffset()), cfg_.output_dim, cfg_.top_dim()}; }
  ConstMatMap Wo() const { return {ptr(WoOffset()), cfg_.output_dim, cfg_.top_dim()}; }
  VecMap bo() { return {ptr(WoOffset() + WoSize()), cfg_.output_dim}; }
  ConstVecMap bo() const { return {ptr(WoOffset() + WoSize()), cfg_.output_dim}; }

  bool AllFinite() const {
    return std::all_of(data_.begin(), data_.end(), [](Real v) { return std::isfinite(v); });
  }

  void SetZero() { std::fill(data_.begin(), data_.end(), Real(0)); }

 private:
  std::size_t LayerBlock(int layer) const {
    const std::size_t h = static_cast<std::size_t>(cfg_.hidden_dim);
    return h * static_cast<std::size_t>(cfg_.layer_input_dim(layer)) + h * h + h;
  }
  std::size_t WxOffset(int layer, int dir) const {
    std::size_t off = 0;
    for (int l = 0; l < layer; ++l) off += LayerBlock(l) * static_cast<std::size_t>(cfg_.directions());
    return off + LayerBlock(layer) * static_cast<std::size_t>(dir);
  }
  std::size_t WhOffset(int layer, int dir) const {
    return WxOffset(layer, dir) + static_cast<std::size_t>(cfg_.hidden_dim) *
                                      static_cast<std::size_t>(cfg_.layer_input_dim(layer));
  }
  std::size_t BOffset(int layer, int dir) const {
    return WhOffset(layer, dir) + static_cast<std::size_t>(cfg_.hidden_dim) *
                                      static_cast<std::size_t>(cfg_.hidden_dim);
  }
  std::size_t WoOffset() const { return WxOffset(cfg_.num_layers, 0); }
  std::size_t WoSize() const {
    return static_cast<std::size_t>(cfg_.output_dim) * static_cast<std::size_t>(cfg_.top_dim());
  }
  Real *ptr(std::size_t off) { return data_.data() + off; }
  const Real *ptr(std::size_t off) const { return data_.data() + off; }

  NetConfig cfg_;
  std::vector<Real> data_;
};

/// Gradients share the parameter layout.
template <typename Real>
using ParamGrad = NetParams<Real>;

/// Uniform(-c, c) with c = 1/sqrt(fan-in) for every matrix, zero biases.  The
/// output matrix is instead zero with ones at (q, q) and, when bidirectional,
/// (q, H + q) for q < Q.
template <typename Real>
NetParams<Real> InitParams(const NetConfig &cfg, std::uint64_t seed) {
  NetParams<Real> p(cfg);
  if (cfg.identity_output_init && cfg.hidden_dim < cfg.output_dim) {
    throw UsageError(StrCat("identity output init needs hidden_dim >= output_dim (",
                            cfg.hidden_dim, " < ", cfg.output_dim,
                            "); widen the network or disable identity_output_init"));
  }
  std::mt19937_64 rng(seed);
  auto fill = [&](auto &&m, int fan_in) {
    const double c = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-c, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<Real>(dist(rng));
  };
  for (int l = 0; l < cfg.num_layers; ++l) {
    for (int d = 0; d < cfg.directions(); ++d) {
      fill(p.Wx(l, d), cfg.layer_input_dim(l));
      fill(p.Wh(l, d), cfg.hidden_dim);
    }
  }
  if (cfg.identity_output_init) {
    for (int q = 0; q < cfg.output_dim; ++q) {
      for (int d = 0; d < cfg.directions(); ++d) p.Wo()(q, d * cfg.hidden_dim + q) = Real(1);
    }
  } else {
    fill(p.Wo(), cfg.top_dim());
  }
  return p;
}

/// Activations retained for backpropagation.
template <typename Real>
struct ForwardCache {
  /// inputs[l] is layer l's input sequence (T x in_l).
  std::vector<Matrix<Real>> inputs;
  /// hidden[l][d] is the post-ReLU output of layer l, direction d (T x H).
  std::vector<std::vector<Matrix<Real>>> hidden;
  /// Concatenated top-layer output (T x D_top).
  Matrix<Real> top;
  Matrix<Real> logits;
};

template <typename Real>
struct ForwardResult {
  PosteriorGrid<Real> grid;
  ForwardCache<Real> cache;
};

namespace detail {

template <typename Real>
void CheckFinite(const Matrix<Real> &m, const std::string &what) {
  if (m.allFinite()) return;
  for (Eigen::Index t = 0; t < m.rows(); ++t) {
    if (!m.row(t).allFinite()) {
      throw NumericalError(StrCat("non-finite activation in ", what, " at frame ", t));
    }
  }
}

/// One direction of one recurrent layer.
template <typename Real>
Matrix<Real> RunDirection(const NetParams<Real> &p, int layer, int dir,
                          const Matrix<Real> &x) {
  const Eigen::Index T = x.rows();
  Matrix<Real> z = x * p.Wx(layer, dir).transpose();
  z.rowwise() += p.b(layer, dir).transpose();
  const auto Wh = p.Wh(layer, dir);
  Matrix<Real> h(T, z.cols());
  for (Eigen::Index k = 0; k < T; ++k) {
    const Eigen::Index t = dir == 0 ? k : T - 1 - k;
    if (k == 0) {
      h.row(t) = z.row(t).cwiseMax(Real(0));
    } else {
      const Eigen::Index prev = dir == 0 ? t - 1 : t + 1;
      h.row(t) = (z.row(t) + h.row(prev) * Wh.transpose()).cwiseMax(Real(0));
    }
  }
  return h;
}

}  // namespace detail

/// Runs the network over a T x input_dim feature sequence.
template <typename Real>
ForwardResult<Real> Forward(const NetParams<Real> &p, const Matrix<Real> &features) {
  const NetConfig &cfg = p.config();
  if (features.rows() < 1) throw DataError("forward pass needs at least one frame");
  if (features.cols() != cfg.input_dim) {
    throw DataError(StrCat("feature dimension ", features.cols(), " != network input ",
                           cfg.input_dim));
  }
  ForwardResult<Real> res;
  auto &cache = res.cache;
  cache.inputs.reserve(static_cast<std::size_t>(cfg.num_layers));
  cache.hidden.resize(static_cast<std::size_t>(cfg.num_layers));
  Matrix<Real> x = features;
  const Eigen::Index T = features.rows();
  for (int l = 0; l < cfg.num_layers; ++l) {
    Matrix<Real> next(T, cfg.top_dim());
    for (int d = 0; d < cfg.directions(); ++d) {
      Matrix<Real> h = detail::RunDirection(p, l, d, x);
      detail::CheckFinite(h, StrCat("layer ", l, d ? " (backward)" : " (forward)"));
      next.middleCols(d * cfg.hidden_dim, cfg.hidden_dim) = h;
      cache.hidden[static_cast<std::size_t>(l)].push_back(std::move(h));
    }
    cache.inputs.push_back(std::move(x));
    x = std::move(next);
  }
  cache.top = std::move(x);
  cache.logits = cache.top * p.Wo().transpose();
  cache.logits.rowwise() += p.bo().transpose();
  detail::CheckFinite(cache.logits, "output layer");
  res.grid = PosteriorGrid<Real>(SoftmaxRows(cache.logits));
  return res;
}

/// Backpropagation through time.  `error_signal` is d(loss)/d(logits), T x Q.
template <typename Real, typename Derived>
ParamGrad<Real> Backward(const NetParams<Real> &p, const ForwardCache<Real> &cache,
                         const Eigen::MatrixBase<Derived> &error_signal) {
  const NetConfig &cfg = p.config();
  const Eigen::Index T = cache.top.rows();
  if (error_signal.rows() != T || error_signal.cols() != cfg.output_dim) {
    throw DataError(StrCat("error signal is ", error_signal.rows(), "x", error_signal.cols(),
                           ", expected ", T, "x", cfg.output_dim));
  }
  ParamGrad<Real> g(cfg);
  const Matrix<Real> dlogits = error_signal.template cast<Real>();
  g.Wo().noalias() = dlogits.transpose() * cache.top;
  g.bo() = dlogits.colwise().sum().transpose();
  Matrix<Real> dx = dlogits * p.Wo();  // T x D_top

  for (int l = cfg.num_layers - 1; l >= 0; --l) {
    const Matrix<Real> &x = cache.inputs[static_cast<std::size_t>(l)];
    Matrix<Real> dinput = Matrix<Real>::Zero(T, x.cols());
    for (int d = 0; d < cfg.directions(); ++d) {
      const Matrix<Real> &h = cache.hidden[static_cast<std::size_t>(l)][static_cast<std::size_t>(d)];
      const auto Wh = p.Wh(l, d);
      Matrix<Real> dz(T, cfg.hidden_dim);
      Vector<Real> carry = Vector<Real>::Zero(cfg.hidden_dim);
      for (Eigen::Index k = 0; k < T; ++k) {
        // Reverse of the direction's processing order.
        const Eigen::Index t = d == 0 ? T - 1 - k : k;
        Vector<Real> dh = dx.row(t).segment(d * cfg.hidden_dim, cfg.hidden_dim).transpose() + carry;
        for (Eigen::Index i = 0; i < dh.size(); ++i) {
          if (h(t, i) <= Real(0)) dh(i) = Real(0);
        }
        dz.row(t) = dh.transpose();
        carry.noalias() = Wh.transpose() * dh;
      }
      if (T > 1) {
        if (d == 0) {
          g.Wh(l, d).noalias() = dz.bottomRows(T - 1).transpose() * h.topRows(T - 1);
        } else {
          g.Wh(l, d).noalias() = dz.topRows(T - 1).transpose() * h.bottomRows(T - 1);
        }
      }
      g.Wx(l, d).noalias() = dz.transpose() * x;
      g.b(l, d) = dz.colwise().sum().transpose();
      dinput.noalias() += dz * p.Wx(l, d);
    }
    dx = std::move(dinput);
  }
  return g;
}

// Checkpoint layout (all integers little-endian):
//   char[8]  magic "CTCASRNT"
//   u32      format version (1)
//   u32      scalar size in bytes (4 = float32, 8 = float64)
//   u32      input_dim, hidden_dim, num_layers, output_dim
//   u8       bidirectional, identity_output_init, 0, 0
//   u64      parameter count
//   scalar[] parameters in block order

inline constexpr char kCheckpointMagic[8] = {'C', 'T', 'C', 'A', 'S', 'R', 'N', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

namespace detail {

template <typename T>
void WritePod(std::ostream &os, const T &v) {
  os.write(reinterpret_cast<const char *>(&v), sizeof(T));
}

template <typename T>
T ReadPod(std::istream &is, const std::string &what) {
  T v{};
  is.read(reinterpret_cast<char *>(&v), sizeof(T));
  if (!is) throw DataError(StrCat("truncated ", what));
  return v;
}

}  // namespace detail

struct CheckpointHeader {
  NetConfig config;
  std::uint32_t scalar_bytes = 8;
  std::uint64_t param_count = 0;
};

template <typename Real>
void WriteCheckpoint(std::ostream &os, const NetParams<Real> &p) {
  const NetConfig &c = p.config();
  os.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  detail::WritePod<std::uint32_t>(os, kCheckpointVersion);
  detail::WritePod<std::uint32_t>(os, sizeof(Real));
  for (int v : {c.input_dim, c.hidden_dim, c.num_layers, c.output_dim}) {
    detail::WritePod<std::uint32_t>(os, static_cast<std::uint32_t>(v));
  }
  const std::uint8_t flags[4] = {static_cast<std::uint8_t>(c.bidirectional),
                                 static_cast<std::uint8_t>(c.identity_output_init), 0, 0};
  os.write(reinterpret_cast<const char *>(flags), 4);
  detail::WritePod<std::uint64_t>(os, p.size());
  os.write(reinterpret_cast<const char *>(p.data().data()),
           static_cast<std::streamsize>(p.size() * sizeof(Real)));
}

inline CheckpointHeader ReadCheckpointHeader(std::istream &is) {
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, kCheckpointMagic, 8) != 0) {
    throw DataError("not a ctcasr checkpoint (bad magic)");
  }
  const auto version = detail::ReadPod<std::uint32_t>(is, "checkpoint header");
  if (version != kCheckpointVersion) {
    throw DataError(StrCat("unsupported checkpoint version ", version));
  }
  CheckpointHeader h;
  h.scalar_bytes = detail::ReadPod<std::uint32_t>(is, "checkpoint header");
  if (h.scalar_bytes != 4 && h.scalar_bytes != 8) {
    throw DataError(StrCat("unsupported checkpoint scalar size ", h.scalar_bytes));
  }
  h.config.input_dim = static_cast<int>(detail::ReadPod<std::uint32_t>(is, "checkpoint header"));
  h.config.hidden_dim = static_cast<int>(detail::ReadPod<std::uint32_t>(is, "checkpoint header"));
  h.config.num_layers = static_cast<int>(detail::ReadPod<std::uint32_t>(is, "checkpoint header"));
  h.config.output_dim = static_cast<int>(detail::ReadPod<std::uint32_t>(is, "checkpoint header"));
  std::uint8_t flags[4];
  is.read(reinterpret_cast<char *>(flags), 4);
  if (!is) throw DataError("truncated checkpoint header");
  h.config.bidirectional = flags[0] != 0;
  h.config.identity_output_init = flags[1] != 0;
  h.param_count = detail::ReadPod<std::uint64_t>(is, "checkpoint header");
  h.config.Validate();
  if (h.param_count != h.config.ParamCount()) {
    throw DataError(StrCat("checkpoint declares ", h.param_count, " parameters but its ",
                           "configuration implies ", h.config.ParamCount()));
  }
  return h;
}

/// Reads a checkpoint of either precision, converting to Real.
template <typename Real>
NetParams<Real> ReadCheckpoint(std::istream &is) {
  const CheckpointHeader h = ReadCheckpointHeader(is);
  NetParams<Real> p(h.config);
  auto read_as = [&]<typename Stored>() {
    std::vector<Stored> buf(h.param_count);
    is.read(reinterpret_cast<char *>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(Stored)));
    if (!is) throw DataError("truncated checkpoint parameters");
    for (std::size_t i = 0; i < buf.size(); ++i) p.data()[i] = static_cast<Real>(buf[i]);
  };
  if (h.scalar_bytes == 4) {
    read_as.template operator()<float>();
  } else {
    read_as.template operator()<double>();
  }
  return p;
}

template <typename Real>
void SaveCheckpoint(const std::string &path, const NetParams<Real> &p) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError(StrCat("cannot write checkpoint ", path));
  WriteCheckpoint(os, p);
  if (!os) throw DataError(StrCat("failed writing checkpoint ", path));
}

template <typename Real>
NetParams<Real> LoadCheckpoint(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError(StrCat("cannot read checkpoint ", path));
  return ReadCheckpoint<Real>(is);
}

}  // namespace ctcasr

#endif  // CTCASR_NET_HPP_
