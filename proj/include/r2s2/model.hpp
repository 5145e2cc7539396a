// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "r2s2/autodiff.hpp"
#include "r2s2/tensor.hpp"

namespace r2s2 {

// Encoder-decoder reconstruction net. Complex channels enter as interleaved
// re/im planes; stage widths double per level and cap at 4x the base width.
struct ModelConfig {
  int n_in = 4;   // complex input channels
  int n_out = 12; // complex output channels
  int base_width = 16;
  int depth = 3;  // pooling stages
  double leaky_slope = 0.01;
  bool attention = true;
  bool pos_embed = true;

  void validate() const;
  int stage_width(int level) const;
  int input_planes() const { return 2 * n_in + (pos_embed ? 4 : 0); }
  bool operator==(const ModelConfig&) const = default;
};

struct Param {
  std::string name;
  Tensor value;
};

class Model {
 public:
  Model() = default;
  Model(ModelConfig cfg, uint64_t seed);

  const ModelConfig& config() const { return cfg_; }
  std::vector<Param>& params() { return params_; }
  const std::vector<Param>& params() const { return params_; }
  int64_t param_count() const;

  // Closed-form count (see README); param_count() matches it exactly.
  static int64_t analytic_param_count(const ModelConfig& cfg);

  // Records the forward pass on g. input must be (2*n_in, R, D) with R and D
  // divisible by 2^depth. Appends one leaf per parameter to param_vars when
  // given (ordered like params()). Throws NumericError naming the first
  // layer whose output goes non-finite.
  ad::Var build(ad::Graph& g, ad::Var input, std::vector<ad::Var>* param_vars = nullptr) const;

  // Same pass but over caller-provided parameter vars (ordered like
  // params()); used by the gradient checks.
  ad::Var build_with(ad::Graph& g, ad::Var input, const std::vector<ad::Var>& param_vars) const;

  // Convenience inference path (no gradients).
  Tensor forward(const Tensor& input) const;

  void save(const std::string& path) const;
  static Model load(const std::string& path);

 private:
  ModelConfig cfg_;
  std::vector<Param> params_;

  const Tensor& p(const std::string& name) const;
  mutable std::vector<ad::Var>* pv_ = nullptr;  // set during build()
};

// Fixed 2D sinusoid planes concatenated at the input: sin/cos along range,
// sin/cos along Doppler (one period across each extent).
Tensor position_embedding_planes(int64_t h, int64_t w);

}  // namespace r2s2
