#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "json.hpp"

#include "dissipanet/linalg.hpp"

namespace dissipanet::rl {

/// Dense network with tanh hidden layers and a linear output layer.
/// Batches are matrices with one sample per column.
class Mlp {
 public:
  Mlp() = default;
  /// Zero weights. `sizes` = {input, hidden..., output}.
  explicit Mlp(std::vector<int> sizes);

  /// Glorot-uniform weights, zero biases; the output layer is scaled by
  /// `output_scale` (0 gives a zero output layer).
  void init(std::mt19937_64& rng, double output_scale = 1.0);

  int input_dim() const { return sizes_.front(); }
  int output_dim() const { return sizes_.back(); }
  const std::vector<int>& sizes() const { return sizes_; }
  std::size_t param_count() const;

  struct Cache {
    std::vector<Mat> act;  // act[0] = input, act[l] = output of layer l
  };

  Mat forward(const Mat& x, Cache* cache = nullptr) const;
  Vec forward(const Vec& x) const;

  /// Adds dL/dtheta for the batch to `grad` (flat layout of `params()`) and
  /// returns dL/dx. `dy` is dL/d(output), one column per sample.
  Mat backward(const Cache& cache, const Mat& dy, Vec& grad) const;

  /// Flat parameters: for each layer, W in column-major order, then b.
  Vec params() const;
  void set_params(const Vec& p);

  /// this <- tau * other + (1 - tau) * this
  void soft_update(const Mlp& other, double tau);

  nlohmann::json to_json() const;
  static Mlp from_json(const nlohmann::json& j);

 private:
  std::vector<int> sizes_;
  std::vector<Mat> w_;
  std::vector<Vec> b_;
};

/// Adam over a flat parameter vector.
class Adam {
 public:
  explicit Adam(double lr = 1e-3, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), b1_(beta1), b2_(beta2), eps_(eps) {}

  /// Descent step on `params` with gradient `grad`.
  void step(Vec& params, const Vec& grad);

 private:
  double lr_, b1_, b2_, eps_;
  Vec m_, v_;
  std::int64_t t_ = 0;
};

}  // namespace dissipanet::rl
