#pragma once

// Time-conditioned residual MLP used as the score network.
//
// The network predicts the noise eps(x_t, t); the score is s(x_t, t) = -eps / sigma(t).
// Time enters through frozen random Fourier features of log sigma(t), concatenated
// to the input of every residual block:
//
//   h0      = W_in x + b_in
//   z_d     = W1_d [h_d; phi(t)] + b1_d
//   h_{d+1} = h_d + W2_d silu(z_d) + b2_d
//   eps     = W_out silu(h_D) + b_out
//
// All trainable parameters live in one flat vector so that the optimizer, the
// checkpoint writer and the finite-difference tests can treat them uniformly.

#include "zedo/core.hpp"
#include "zedo/diffusion/sde.hpp"

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace zedo {

struct ModelDims {
  int joints = 17;
  int hidden = 256;
  int depth = 4;
  int time_features = 64;
  /// Row of the pose that is the pelvis (always zero in network inputs).
  int pelvis_index = 0;
  /// Standard deviation of the Fourier frequencies applied to log sigma(t).
  double fourier_scale = 1.0;

  int input_dim() const { return 3 * joints; }

  void validate() const {
    if (joints < 1 || hidden < 1 || depth < 1 || time_features < 1)
      throw ConfigError("model dims must be positive");
    if (pelvis_index < 0 || pelvis_index >= joints) throw ConfigError("model pelvis_index out of range");
    if (!(fourier_scale > 0.0)) throw ConfigError("fourier_scale must be positive");
  }

  friend bool operator==(const ModelDims&, const ModelDims&) = default;
};

template <typename Scalar>
class ScoreModel {
 public:
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using RowVec = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;
  using MatMap = Eigen::Map<Mat>;
  using ConstMatMap = Eigen::Map<const Mat>;
  using VecMap = Eigen::Map<Vec>;
  using ConstVecMap = Eigen::Map<const Vec>;

  /// Activations kept by forward() for backward().
  struct Cache {
    Mat input;
    Mat time_emb;
    std::vector<Mat> hidden;  // depth + 1 entries
    std::vector<Mat> pre;     // depth entries
    std::vector<Mat> act;     // depth entries
    Mat out_act;
  };

  /// Parameter and gradient storage. Aligned so vectorized kernels take the same
  /// path on every run, which keeps training bitwise reproducible.
  using Params = std::vector<Scalar, Eigen::aligned_allocator<Scalar>>;

  ScoreModel() = default;

  ScoreModel(const ModelDims& dims, const SdeConfig& sde, std::uint64_t seed) : dims_(dims), sde_(sde) {
    dims_.validate();
    sde_.validate();
    build_layout();
    std::mt19937_64 rng(seed);
    initialize(rng);
  }

  /// Reassembles a model from stored parameters (checkpoint loading).
  ScoreModel(const ModelDims& dims, const SdeConfig& sde, Vec freq, Vec phase, std::vector<Scalar> params)
      : dims_(dims), sde_(sde), freq_(std::move(freq)), phase_(std::move(phase)), params_(params.begin(), params.end()) {
    dims_.validate();
    sde_.validate();
    build_layout();
    if (params_.size() != param_count_ || freq_.size() != dims_.time_features ||
        phase_.size() != dims_.time_features)
      throw FormatMismatch("parameter blob does not match model dims");
  }

  const ModelDims& dims() const { return dims_; }
  const SdeConfig& sde() const { return sde_; }
  std::size_t param_count() const { return param_count_; }
  std::span<Scalar> params() { return params_; }
  std::span<const Scalar> params() const { return params_; }
  const Vec& fourier_freq() const { return freq_; }
  const Vec& fourier_phase() const { return phase_; }

  bool params_finite() const {
    for (Scalar p : params_)
      if (!std::isfinite(static_cast<double>(p))) return false;
    return true;
  }

  /// Conditioning variable fed to the Fourier features.
  double time_input(double t) const { return std::log(sde_.sigma(t)); }

  /// Noise prediction for a batch; columns of `x` are samples.
  Mat forward(const Mat& x, const std::vector<double>& times, Cache* cache = nullptr) const {
    const int h = dims_.hidden, e = dims_.time_features;
    const Eigen::Index batch = x.cols();

    Mat temb(e, batch);
    for (Eigen::Index b = 0; b < batch; ++b) {
      const Scalar tau = static_cast<Scalar>(time_input(times[b]));
      temb.col(b) = (freq_ * tau + phase_).array().sin().matrix();
    }

    Mat hcur = w_in() * x;
    hcur.colwise() += b_in();
    if (cache) {
      cache->input = x;
      cache->time_emb = temb;
      cache->hidden.assign(1, hcur);
      cache->pre.clear();
      cache->act.clear();
    }
    for (int d = 0; d < dims_.depth; ++d) {
      const ConstMatMap w1 = block_w1(d);
      Mat z = w1.leftCols(h) * hcur;
      z.noalias() += w1.rightCols(e) * temb;
      z.colwise() += block_b1(d);
      Mat a = silu(z);
      hcur.noalias() += block_w2(d) * a;
      hcur.colwise() += block_b2(d);
      if (cache) {
        cache->pre.push_back(std::move(z));
        cache->act.push_back(std::move(a));
        cache->hidden.push_back(hcur);
      }
    }
    Mat g = silu(hcur);
    Mat out = w_out() * g;
    out.colwise() += b_out();
    if (cache) cache->out_act = std::move(g);
    return out;
  }

  /// Accumulates parameter gradients for dL/d(eps) = `d_out` into `grad`.
  void backward(const Cache& cache, const Mat& d_out, Params& grad) const {
    const int h = dims_.hidden, e = dims_.time_features;
    grad.assign(param_count_, Scalar(0));

    mat(grad, l_w_out_).noalias() += d_out * cache.out_act.transpose();
    vec(grad, l_b_out_) += d_out.rowwise().sum();
    Mat dh = w_out().transpose() * d_out;
    dh.array() *= silu_grad(cache.hidden.back()).array();

    for (int d = dims_.depth - 1; d >= 0; --d) {
      const Block& blk = blocks_[d];
      mat(grad, blk.w2).noalias() += dh * cache.act[d].transpose();
      vec(grad, blk.b2) += dh.rowwise().sum();
      Mat dz = block_w2(d).transpose() * dh;
      dz.array() *= silu_grad(cache.pre[d]).array();
      MatMap gw1 = mat(grad, blk.w1);
      gw1.leftCols(h).noalias() += dz * cache.hidden[d].transpose();
      gw1.rightCols(e).noalias() += dz * cache.time_emb.transpose();
      vec(grad, blk.b1) += dz.rowwise().sum();
      dh.noalias() += block_w1(d).leftCols(h).transpose() * dz;
    }
    mat(grad, l_w_in_).noalias() += dh * cache.input.transpose();
    vec(grad, l_b_in_) += dh.rowwise().sum();
  }

  /// Score s(x, t) = -eps(x, t) / sigma(t) for one flattened pose.
  Eigen::VectorXd score(const Eigen::Ref<const Eigen::VectorXd>& x, double t) const {
    const Mat in = x.cast<Scalar>();
    const Mat eps = forward(in, {t});
    return -eps.col(0).template cast<double>() / sde_.sigma(t);
  }

 private:
  struct Layer {
    std::size_t offset = 0;
    Eigen::Index rows = 0, cols = 0;
  };
  struct Block {
    Layer w1, b1, w2, b2;
  };

  void build_layout() {
    std::size_t off = 0;
    auto take = [&off](Eigen::Index rows, Eigen::Index cols) {
      Layer l{off, rows, cols};
      off += static_cast<std::size_t>(rows * cols);
      return l;
    };
    const int in = dims_.input_dim(), h = dims_.hidden, e = dims_.time_features;
    l_w_in_ = take(h, in);
    l_b_in_ = take(h, 1);
    blocks_.clear();
    for (int d = 0; d < dims_.depth; ++d) {
      Block b;
      b.w1 = take(h, h + e);
      b.b1 = take(h, 1);
      b.w2 = take(h, h);
      b.b2 = take(h, 1);
      blocks_.push_back(b);
    }
    l_w_out_ = take(in, h);
    l_b_out_ = take(in, 1);
    param_count_ = off;
  }

  void initialize(std::mt19937_64& rng) {
    params_.assign(param_count_, Scalar(0));
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    auto fill = [&](const Layer& l, double stddev) {
      for (Eigen::Index i = 0; i < l.rows * l.cols; ++i)
        params_[l.offset + i] = static_cast<Scalar>(stddev * normal(rng));
    };
    const int h = dims_.hidden, e = dims_.time_features;
    fill(l_w_in_, std::sqrt(1.0 / dims_.input_dim()));
    const double residual_scale = 1.0 / std::sqrt(static_cast<double>(dims_.depth));
    for (const Block& b : blocks_) {
      fill(b.w1, std::sqrt(2.0 / (h + e)));
      fill(b.w2, residual_scale * std::sqrt(1.0 / h));
    }
    fill(l_w_out_, 0.1 * std::sqrt(1.0 / h));

    freq_.resize(e);
    phase_.resize(e);
    for (int k = 0; k < e; ++k) {
      freq_[k] = static_cast<Scalar>(dims_.fourier_scale * normal(rng));
      phase_[k] = static_cast<Scalar>(2.0 * std::numbers::pi * unif(rng));
    }
  }

  static Mat silu(const Mat& z) {
    return (z.array() / (Scalar(1) + (-z.array()).exp())).matrix();
  }
  static Mat silu_grad(const Mat& z) {
    const auto s = Scalar(1) / (Scalar(1) + (-z.array()).exp());
    return (s * (Scalar(1) + z.array() * (Scalar(1) - s))).matrix();
  }

  ConstMatMap cmat(const Layer& l) const { return ConstMatMap(params_.data() + l.offset, l.rows, l.cols); }
  ConstVecMap cvec(const Layer& l) const { return ConstVecMap(params_.data() + l.offset, l.rows); }
  static MatMap mat(Params& buf, const Layer& l) { return MatMap(buf.data() + l.offset, l.rows, l.cols); }
  static VecMap vec(Params& buf, const Layer& l) { return VecMap(buf.data() + l.offset, l.rows); }

  ConstMatMap w_in() const { return cmat(l_w_in_); }
  ConstVecMap b_in() const { return cvec(l_b_in_); }
  ConstMatMap w_out() const { return cmat(l_w_out_); }
  ConstVecMap b_out() const { return cvec(l_b_out_); }
  ConstMatMap block_w1(int d) const { return cmat(blocks_[d].w1); }
  ConstVecMap block_b1(int d) const { return cvec(blocks_[d].b1); }
  ConstMatMap block_w2(int d) const { return cmat(blocks_[d].w2); }
  ConstVecMap block_b2(int d) const { return cvec(blocks_[d].b2); }

  ModelDims dims_;
  SdeConfig sde_;
  Vec freq_, phase_;
  Params params_;

  Layer l_w_in_, l_b_in_, l_w_out_, l_b_out_;
  std::vector<Block> blocks_;
  std::size_t param_count_ = 0;
};

/// Production precision; checkpoints store exactly these parameters.
using ScoreModelF = ScoreModel<float>;
using ScoreModelD = ScoreModel<double>;

}  // namespace zedo
