// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <deque>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "r2s2/array_config.hpp"
#include "r2s2/beamform.hpp"
#include "r2s2/tensor.hpp"

namespace r2s2::ad {

class Graph;

// Lightweight handle to a node in a Graph (define-by-run tape).
struct Var {
  Graph* g = nullptr;
  int id = -1;
  bool valid() const { return g != nullptr && id >= 0; }
};

class Graph {
 public:
  // Leaf referencing caller-owned storage (no copy). The tensor must outlive
  // the graph.
  Var leaf(const Tensor& external, bool requires_grad = true);
  // Leaf owning a copy; never differentiated.
  Var constant(Tensor t);

  // Reverse pass from a scalar loss; forward closures are released afterwards.
  void backward(Var loss);

  const Tensor& value(Var v) const;
  // Gradient of the last backward() wrt v; zeros if v was unreachable.
  const Tensor& grad(Var v);
  bool backward_done() const { return backward_done_; }

  // --- internals used by the op implementations ---
  // Id the next make() will produce; closures capture it as "self".
  int next_id() const { return static_cast<int>(nodes_.size()); }
  Var make(Tensor value, std::vector<int> parents, std::function<void(Graph&)> backward_fn);
  bool needs_grad(Var v) const;
  bool needs_grad_id(int id) const;
  const Tensor& value_id(int id) const { return node_value(id); }
  Tensor& grad_buffer(int id);  // allocates zeros on first touch
  bool has_grad(int id) const;

 private:
  struct Node {
    Tensor owned;
    const Tensor* external = nullptr;
    Tensor grad;
    bool requires_grad = false;
    bool grad_alloc = false;
    std::vector<int> parents;
    std::function<void(Graph&)> backward_fn;
  };
  std::deque<Node> nodes_;
  bool backward_done_ = false;

  const Tensor& node_value(int id) const {
    const Node& n = nodes_[static_cast<size_t>(id)];
    return n.external ? *n.external : n.owned;
  }
  friend struct VarAccess;
};

// ---- elementwise / algebra ----
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double s);
Var leaky_relu(Var a, double slope);
Var abs(Var a);  // d|x|/dx = sign(x), 0 at 0
// Piecewise energy penalty with threshold delta. As printed in the model's
// energy terms: 0.5*d^2 inside, |d| - delta outside (discontinuous at the
// knee). The continuous variant uses 0.5*d^2/delta inside, |d| - delta/2 out.
Var smooth_l1(Var a, double delta = 0.5, bool continuous = false);

// ---- complex-plane helpers (planes interleaved: [re0, im0, re1, im1, ...]) ----
Var cmagnitude(Var a);  // (2C, H, W) -> (C, H, W)

// ---- shape ops ----
Var reshape(Var a, std::vector<int64_t> shape);
Var concat_c(Var a, Var b);               // leading (channel) axis
Var slice_c(Var a, int64_t c0, int64_t c1);
Var transpose3(Var a, int p0, int p1, int p2);  // permutation of a rank-3 tensor

// ---- reductions ----
Var mean_all(Var a);          // -> shape {1}
Var sum_all(Var a);           // -> shape {1}
Var mean_per_channel(Var a);  // (C, H, W) -> (C)

// ---- dense ----
Var matmul(Var a, Var b);     // (M,K) x (K,N)
Var matmul_nt(Var a, Var b);  // (M,K) x (N,K)^T
Var add_bias_rows(Var a, Var b);  // (M,N) + b[M]
Var softmax_rows(Var a);      // (M,N), rows sum to 1

// ---- structured grid ops ----
Var conv3x3(Var x, Var w, Var b);        // x(Cin,H,W), w(Cout,Cin,3,3), zero pad 1
Var tconv3x3_s2(Var x, Var w, Var b);    // w(Cin,Cout,3,3) -> (Cout,2H,2W)
Var avg_pool2(Var x);                    // (C,H,W) -> (C,H/2,W/2), H,W even
Var instance_norm(Var x, Var gamma, Var beta, double eps = 1e-5);
Var diag_diff(Var x);   // (C,H,W) -> (C,H-1,W-1): x[c,i+1,j+1] - x[c,i,j]
Var row_diff(Var x);    // (C,H,W) -> (C,H-1,W)
Var col_diff(Var x);    // (C,H,W) -> (C,H,W-1)

// ---- radar-specific linear maps ----
// Planar channel DFT: (2*nc, H, W) -> (2*n_az, H, W) using shared matrices.
Var channel_dft(Var x, const ChannelDftMatrices& mats);
// Merge predicted label channels (2*n_label planes) with constant input
// channels (2*n_input planes) into full array order (2*n_total planes).
Var scatter_channels(Var pred, const Tensor& input_planes, const ChannelSplit& split);

// ---- verification ----
struct GradCheckResult {
  double max_rel_err = 0.0;
  std::vector<std::pair<std::string, double>> per_block;
};

using BuildFn = std::function<Var(Graph&, const std::vector<Var>&)>;

// Central finite differences of fn (which must produce a scalar) against the
// reverse-mode gradients, elementwise over every named input block.
GradCheckResult grad_check(const BuildFn& fn,
                           const std::vector<std::pair<std::string, Tensor>>& inputs,
                           double h = 1e-4);

}  // namespace r2s2::ad
