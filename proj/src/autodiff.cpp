// SPDX-License-Identifier: Apache-2.0
//
// Tape engine and the unstructured ops. Grid ops (conv, norm, pooling) live
// in nn_ops.cpp.

#include "r2s2/autodiff.hpp"

#include <cmath>

#include "r2s2/kernels.hpp"

namespace r2s2::ad {

namespace {

Graph& graph_of(Var v) {
  if (!v.valid()) throw UsageError("operation on an invalid Var");
  return *v.g;
}

void check_same_graph(Var a, Var b) {
  if (a.g != b.g) throw UsageError("vars belong to different graphs");
}

}  // namespace

Var Graph::leaf(const Tensor& external, bool requires_grad) {
  Node n;
  n.external = &external;
  n.requires_grad = requires_grad;
  nodes_.push_back(std::move(n));
  return {this, static_cast<int>(nodes_.size()) - 1};
}

Var Graph::constant(Tensor t) {
  Node n;
  n.owned = std::move(t);
  nodes_.push_back(std::move(n));
  return {this, static_cast<int>(nodes_.size()) - 1};
}

Var Graph::make(Tensor value, std::vector<int> parents, std::function<void(Graph&)> backward_fn) {
  Node n;
  n.owned = std::move(value);
  n.parents = std::move(parents);
  for (int p : n.parents)
    if (nodes_[static_cast<size_t>(p)].requires_grad) n.requires_grad = true;
  if (n.requires_grad) n.backward_fn = std::move(backward_fn);
  nodes_.push_back(std::move(n));
  return {this, static_cast<int>(nodes_.size()) - 1};
}

const Tensor& Graph::value(Var v) const {
  if (!v.valid() || v.g != this) throw UsageError("value: foreign or invalid var");
  return node_value(v.id);
}

bool Graph::needs_grad(Var v) const { return nodes_[static_cast<size_t>(v.id)].requires_grad; }
bool Graph::needs_grad_id(int id) const { return nodes_[static_cast<size_t>(id)].requires_grad; }

Tensor& Graph::grad_buffer(int id) {
  Node& n = nodes_[static_cast<size_t>(id)];
  if (!n.grad_alloc) {
    n.grad = Tensor(n.external ? n.external->shape : n.owned.shape);
    n.grad_alloc = true;
  }
  return n.grad;
}

bool Graph::has_grad(int id) const { return nodes_[static_cast<size_t>(id)].grad_alloc; }

const Tensor& Graph::grad(Var v) {
  if (!v.valid() || v.g != this) throw UsageError("grad: foreign or invalid var");
  if (!backward_done_) throw UsageError("grad queried before backward");
  return grad_buffer(v.id);
}

void Graph::backward(Var loss) {
  if (!loss.valid() || loss.g != this) throw UsageError("backward: foreign or invalid var");
  if (backward_done_) throw UsageError("backward already ran on this graph");
  if (nodes_.empty()) throw UsageError("backward without forward");
  const Tensor& lv = node_value(loss.id);
  if (lv.numel() != 1) throw UsageError("backward requires a scalar loss");
  if (!nodes_[static_cast<size_t>(loss.id)].requires_grad)
    throw UsageError("loss does not depend on any differentiable leaf");

  grad_buffer(loss.id).v[0] = 1.0;
  for (int id = loss.id; id >= 0; --id) {
    Node& n = nodes_[static_cast<size_t>(id)];
    if (!n.requires_grad || !n.grad_alloc || !n.backward_fn) continue;
    n.backward_fn(*this);
  }
  // The tape is single-use; release the closures (and their cached buffers).
  for (auto& n : nodes_) n.backward_fn = nullptr;
  backward_done_ = true;
}

// ---------------------------------------------------------------------------
// elementwise / algebra
// ---------------------------------------------------------------------------

Var add(Var a, Var b) {
  Graph& g = graph_of(a);
  check_same_graph(a, b);
  const Tensor& av = g.value(a);
  const Tensor& bv = g.value(b);
  require_same_shape(av, bv, "add");
  Tensor out(av.shape);
  kernels::active().vadd(av.numel(), av.data(), bv.data(), out.data());
  const int self = g.next_id(), aid = a.id, bid = b.id;
  return g.make(std::move(out), {aid, bid}, [self, aid, bid](Graph& gg) {
    const Tensor& go = gg.grad_buffer(self);
    if (gg.needs_grad_id(aid))
      kernels::active().axpy(go.numel(), 1.0, go.data(), gg.grad_buffer(aid).data());
    if (gg.needs_grad_id(bid))
      kernels::active().axpy(go.numel(), 1.0, go.data(), gg.grad_buffer(bid).data());
  });
}

Var sub(Var a, Var b) {
  Graph& g = graph_of(a);
  check_same_graph(a, b);
  const Tensor& av = g.value(a);
  const Tensor& bv = g.value(b);
  require_same_shape(av, bv, "sub");
  Tensor out(av.shape);
  kernels::active().vsub(av.numel(), av.data(), bv.data(), out.data());
  const int self = g.next_id(), aid = a.id, bid = b.id;
  return g.make(std::move(out), {aid, bid}, [self, aid, bid](Graph& gg) {
    const Tensor& go = gg.grad_buffer(self);
    if (gg.needs_grad_id(aid))
      kernels::active().axpy(go.numel(), 1.0, go.data(), gg.grad_buffer(aid).data());
    if (gg.needs_grad_id(bid))
      kernels::active().axpy(go.numel(), -1.0, go.data(), gg.grad_buffer(bid).data());
  });
}

Var mul(Var a, Var b) {
  Graph& g = graph_of(a);
  check_same_graph(a, b);
  const Tensor& av = g.value(a);
  const Tensor& bv = g.value(b);
  require_same_shape(av, bv, "mul");
  Tensor out(av.shape);
  kernels::active().vmul(av.numel(), av.data(), bv.data(), out.data());
  const int self = g.next_id(), aid = a.id, bid = b.id;
  return g.make(std::move(out), {aid, bid}, [self, aid, bid](Graph& gg) {
    const Tensor& go = gg.grad_buffer(self);
    const int64_t n = go.numel();
    if (gg.needs_grad_id(aid)) {
      const Tensor& bvv = gg.value_id(bid);
      Tensor& da = gg.grad_buffer(aid);
      for (int64_t i = 0; i < n; ++i) da[i] += go[i] * bvv[i];
    }
    if (gg.needs_grad_id(bid)) {
      const Tensor& avv = gg.value_id(aid);
      Tensor& db = gg.grad_buffer(bid);
      for (int64_t i = 0; i < n; ++i) db[i] += go[i] * avv[i];
    }
  });
}

Var scale(Var a, double s) {
  Graph& g = graph_of(a);
  const Tensor& av = g.value(a);
  Tensor out = av;
  kernels::active().scale(out.numel(), s, out.data());
  const int self = g.next_id(), aid = a.id;
  return g.make(std::move(out), {aid}, [self, aid, s](Graph& gg) {
    const Tensor& go = gg.grad_buffer(self);
    kernels::active().axpy(go.numel(), s, go.data(), gg.grad_buffer(aid).data());
  });
}

Var leaky_relu(Var a, double slope) {
  Graph& g = graph_of(a);
  const Tensor& av = g.value(a);
  Tensor out(av.shape);
  kernels::active().leaky_relu(av.numel(), slope, av.data(), out.data());
  const int self = g.next_id(), aid = a.id;
  return g.make(std::move(out), {aid}, [self, aid, slope](Graph& gg) {
    const Tensor& go = gg.grad_buffer(self);
    const Tensor& xv = gg.value_id(aid);
    Tensor local(xv.shape);
    kernels::active().leaky_relu_bwd(go.numel(), slope, xv.data(), go.data(), local.data());
    kernels::active().axpy(go.numel(), 1.0, local.data(), gg.grad_buffer(aid).data());
  });
}

Var abs(Var a) {
  Graph& g = graph_of(a);
  const Tensor& av = g.value(a);
  Tensor out(av.shape);
  for (int64_t i = 0; i < av.numel(); ++i) out[i] = std::fabs(av[i]);
  const int self = g.next_id(), aid = a.id;
  return g.make(std::move(out), {aid}, [self, aid](Graph& gg) {
    const Tensor& go = gg.grad_buffer(self);
    const Tensor& xv = gg.value_id(aid);
    Tensor& da = gg.grad_buffer(aid);
    for (int64_t i = 0; i < go.numel(); ++i) {
      if (xv[i] > 0.0)
        da[i] += go[i];
      else if (xv[i] < 0.0)
        da[i] -= go[i];
    }
  });
}

Var smooth_l1(Var a, double delta, bool continuous) {
  if (delta <= 0.0) throw ConfigError("smooth_l1: delta must be positive");
  Graph& g = graph_of(a);
  const Tensor& av = g.value(a);
  Tensor out(av.shape);
  for (int64_t i = 0; i < av.numel(); ++i) {
    double d = av[i], m = std::fabs(d);
    if (m < delta)
      out[i] = continuous ? 0.5 * d * d / delta : 0.5 * d * d;
    else
      out[i] = continuous ? m - 0.5 * delta : m - delta;
  }
  const int self = g.next_id(), aid = a.id;
  return g.make(std::move(out), {aid}, [self, aid, delta, continuous](Graph& gg) {
    const Tensor& go = gg.grad_buffer(self);
    const Tensor& xv = gg.value_id(aid);
    Tensor& da = gg.grad_buffer(aid);
    for (int64_t i = 0; i < go.numel(); ++i) {
      double d = xv[i];
      double slope;
      if (std::fabs(d) < delta)
        slope = continuous ? d / delta : d;
      else
        slope = d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
      da[i] += go[i] * slope;
    }
  });
}

Var cmagnitude(Var a) {
  Graph& g = graph_of(a);
  const Tensor& av = g.value(a);
  if (av.rank() < 1 || av.dim(0) % 2 != 0)
    throw ShapeError("cmagnitude: leading dim must hold re/im plane pairs");
  std::vector<int64_t> oshape = av.shape;
  oshape[0] /= 2;
  Tensor out(oshape);
  const int64_t planes = oshape[0];
  const int64_t cells = planes == 0 ? 0 : out.numel() / planes;
  for (int64_t c = 0; c < planes; ++c) {
    const double* re = av.data() + 2 * c * cells;
    const double* im = av.data() + (2 * c + 1) * cells;
    kernels::active().cmag(cells, re, im, out.data() + c * cells);
  }
  const int self = g.next_id(), aid = a.id;
  return g.make(std::move(out), {aid}, [self, aid, planes, cells](Graph& gg) {
    const Tensor& go = gg.grad_buffer(self);
    const Tensor& mag = gg.value_id(self);
    const Tensor& xv = gg.value_id(aid);
    Tensor& da = gg.grad_buffer(aid);
    for (int64_t c = 0; c < planes; ++c) {
      kernels::active().cmag_bwd(cells, xv.data() + 2 * c * cells,
                                 xv.data() + (2 * c + 1) * cells, mag.data() + c * cells,
                                 go.data() + c * cells, da.data() + 2 * c * cells,
                                 da.data() + (2 * c + 1) * cells);
    }
  });
}

// ---------------------------------------------------------------------------
// shape ops
// ---------------------------------------------------------------------------

Var reshape(Var a, std::vector<int64_t> shape) {
  Graph& g = graph_of(a);
  const Tensor& av = g.value(a);
  if (Tensor::numel_of(shape) != av.numel()) throw ShapeError("reshape: element count changed");
  Tensor out(shape);
  out.v = av.v;
  const int self = g.next_id(), aid = a.id;
  return g.make(std::move(out), {aid}, [self, aid](Graph& gg) {
    const Tensor& go = gg.grad_buffer(self);
    kernels::active().axpy(go.numel(), 1.0, go.data(), gg.grad_buffer(aid).data());
  });
}

Var concat_c(Var a, Var b) {
  Graph& g = graph_of(a);
  check_same_graph(a, b);
  const Tensor& av = g.value(a);
  const Tensor& bv = g.value(b);
  if (av.rank() != bv.rank() || av.rank() < 1) throw ShapeError("concat_c: rank mismatch");
  for (int i = 1; i < av.rank(); ++i)
    if (av.dim(i) != bv.dim(i)) throw ShapeError("concat_c: trailing dims differ");
  std::vector<int64_t> oshape = av.shape;
  oshape[0] += bv.dim(0);
  Tensor out(oshape);
  std::copy(av.v.begin(), av.v.end(), out.v.begin());
  std::copy(bv.v.begin(), bv.v.end(), out.v.begin() + av.numel());
  const int self = g.next_id(), aid = a.id, bid = b.id;
  const int64_t na = av.numel();
  return g.make(std::move(out), {aid, bid}, [self, aid, bid, na](Graph& gg) {
    const Tensor& go = gg.grad_buffer(self);
    if (gg.needs_grad_id(aid))
      kernels::active().axpy(na, 1.0, go.data(), gg.grad_buffer(aid).data());
    if (gg.needs_grad_id(bid))
      kernels::active().axpy(go.numel() - na, 1.0, go.data() + na, gg.grad_buffer(bid).data());
  });
}

Var slice_c(Var a, int64_t c0, int64_t c1) {
  Graph& g = graph_of(a);
  const Tensor& av = g.value(a);
  if (av.rank() < 1 || c0 < 0 || c1 <= c0 || c1 > av.dim(0)) throw ShapeError("slice_c: bad range");
  std::vector<int64_t> oshape = av.shape;
  oshape[0] = c1 - c0;
  const int64_t stride = av.dim(0) == 0 ? 0 : av.numel() / av.dim(0);
  Tensor out(oshape);
  std::copy_n(av.data() + c0 * stride, (c1 - c0) * stride, out.data());
  const int self = g.next_id(), aid = a.id;
  return g.make(std::move(out), {aid}, [self, aid, c0, stride](Graph& gg) {
    const Tensor& go = gg.grad_buffer(self);
    kernels::active().axpy(go.numel(), 1.0, go.data(), gg.grad_buffer(aid).data() + c0 * stride);
  });
}

Var transpose3(Var a, int p0, int p1, int p2) {
  Graph& g = graph_of(a);
  const Tensor& av = g.value(a);
  if (av.rank() != 3) throw ShapeError("transpose3: rank-3 tensor required");
  int perm[3] = {p0, p1, p2};
  bool seen[3] = {false, false, false};
  for (int p : perm) {
    if (p < 0 || p > 2 || seen[p]) throw ShapeError("transpose3: bad permutation");
    seen[p] = true;
  }
  const int64_t d0 = av.dim(0), d1 = av.dim(1), d2 = av.dim(2);
  std::vector<int64_t> oshape = {av.dim(p0), av.dim(p1), av.dim(p2)};
  Tensor out(oshape);
  int64_t idx[3];
  for (idx[0] = 0; idx[0] < d0; ++idx[0])
    for (idx[1] = 0; idx[1] < d1; ++idx[1])
      for (idx[2] = 0; idx[2] < d2; ++idx[2])
        out.at(idx[p0], idx[p1], idx[p2]) = av.at(idx[0], idx[1], idx[2]);
  const int self = g.next_id(), aid = a.id;
  return g.make(std::move(out), {aid}, [self, aid, p0, p1, p2, d0, d1, d2](Graph& gg) {
    const Tensor& go = gg.grad_buffer(self);
    Tensor& da = gg.grad_buffer(aid);
    int64_t idx[3];
    int perm2[3] = {p0, p1, p2};
    for (idx[0] = 0; idx[0] < d0; ++idx[0])
      for (idx[1] = 0; idx[1] < d1; ++idx[1])
        for (idx[2] = 0; idx[2] < d2; ++idx[2])
          da.at(idx[0], idx[1], idx[2]) += go.at(idx[perm2[0]], idx[perm2[1]], idx[perm2[2]]);
  });
}

// ---------------------------------------------------------------------------
// reductions
// ---------------------------------------------------------------------------

Var sum_all(Var a) {
  Graph& g = graph_of(a);
  const Tensor& av = g.value(a);
  Tensor out({1});
  out[0] = kernels::active().sum(av.numel(), av.data());
  const int self = g.next_id(), aid = a.id;
  const int64_t n = av.numel();
  return g.make(std::move(out), {aid}, [self, aid, n](Graph& gg) {
    double go = gg.grad_buffer(self)[0];
    Tensor& da = gg.grad_buffer(aid);
    for (int64_t i = 0; i < n; ++i) da[i] += go;
  });
}

Var mean_all(Var a) {
  Graph& g = graph_of(a);
  const Tensor& av = g.value(a);
  if (av.numel() == 0) throw ShapeError("mean_all: empty tensor");
  const int64_t n = av.numel();
  Tensor out({1});
  out[0] = kernels::active().sum(n, av.data()) / static_cast<double>(n);
  const int self = g.next_id(), aid = a.id;
  return g.make(std::move(out), {aid}, [self, aid, n](Graph& gg) {
    double go = gg.grad_buffer(self)[0] / static_cast<double>(n);
    Tensor& da = gg.grad_buffer(aid);
    for (int64_t i = 0; i < n; ++i) da[i] += go;
  });
}

Var mean_per_channel(Var a) {
  Graph& g = graph_of(a);
  const Tensor& av = g.value(a);
  if (av.rank() < 2) throw ShapeError("mean_per_channel: rank >= 2 required");
  const int64_t c = av.dim(0);
  const int64_t cells = c == 0 ? 0 : av.numel() / c;
  Tensor out({c});
  for (int64_t i = 0; i < c; ++i)
    out[i] = kernels::active().sum(cells, av.data() + i * cells) / static_cast<double>(cells);
  const int self = g.next_id(), aid = a.id;
  return g.make(std::move(out), {aid}, [self, aid, c, cells](Graph& gg) {
    const Tensor& go = gg.grad_buffer(self);
    Tensor& da = gg.grad_buffer(aid);
    for (int64_t i = 0; i < c; ++i) {
      double gi = go[i] / static_cast<double>(cells);
      double* d = da.data() + i * cells;
      for (int64_t j = 0; j < cells; ++j) d[j] += gi;
    }
  });
}

// ---------------------------------------------------------------------------
// dense
// ---------------------------------------------------------------------------

Var matmul(Var a, Var b) {
  Graph& g = graph_of(a);
  check_same_graph(a, b);
  const Tensor& av = g.value(a);
  const Tensor& bv = g.value(b);
  if (av.rank() != 2 || bv.rank() != 2 || av.dim(1) != bv.dim(0))
    throw ShapeError("matmul: (M,K)x(K,N) required");
  const int M = static_cast<int>(av.dim(0)), K = static_cast<int>(av.dim(1)),
            N = static_cast<int>(bv.dim(1));
  Tensor out({M, N});
  kernels::active().gemm_nn(M, N, K, 1.0, av.data(), K, bv.data(), N, 0.0, out.data(), N);
  const int self = g.next_id(), aid = a.id, bid = b.id;
  return g.make(std::move(out), {aid, bid}, [self, aid, bid, M, N, K](Graph& gg) {
    const Tensor& go = gg.grad_buffer(self);
    if (gg.needs_grad_id(aid)) {
      // dA = dC * B^T
      kernels::active().gemm_nt(M, K, N, 1.0, go.data(), N, gg.value_id(bid).data(), N, 1.0,
                                gg.grad_buffer(aid).data(), K);
    }
    if (gg.needs_grad_id(bid)) {
      // dB = A^T * dC
      kernels::active().gemm_tn(K, N, M, 1.0, gg.value_id(aid).data(), K, go.data(), N, 1.0,
                                gg.grad_buffer(bid).data(), N);
    }
  });
}

Var matmul_nt(Var a, Var b) {
  Graph& g = graph_of(a);
  check_same_graph(a, b);
  const Tensor& av = g.value(a);
  const Tensor& bv = g.value(b);
  if (av.rank() != 2 || bv.rank() != 2 || av.dim(1) != bv.dim(1))
    throw ShapeError("matmul_nt: (M,K)x(N,K)^T required");
  const int M = static_cast<int>(av.dim(0)), K = static_cast<int>(av.dim(1)),
            N = static_cast<int>(bv.dim(0));
  Tensor out({M, N});
  kernels::active().gemm_nt(M, N, K, 1.0, av.data(), K, bv.data(), K, 0.0, out.data(), N);
  const int self = g.next_id(), aid = a.id, bid = b.id;
  return g.make(std::move(out), {aid, bid}, [self, aid, bid, M, N, K](Graph& gg) {
    const Tensor& go = gg.grad_buffer(self);
    if (gg.needs_grad_id(aid)) {
      // dA = dC * B
      kernels::active().gemm_nn(M, K, N, 1.0, go.data(), N, gg.value_id(bid).data(), K, 1.0,
                                gg.grad_buffer(aid).data(), K);
    }
    if (gg.needs_grad_id(bid)) {
      // dB = dC^T * A
      kernels::active().gemm_tn(N, K, M, 1.0, go.data(), N, gg.value_id(aid).data(), K, 1.0,
                                gg.grad_buffer(bid).data(), K);
    }
  });
}

Var add_bias_rows(Var a, Var b) {
  Graph& g = graph_of(a);
  check_same_graph(a, b);
  const Tensor& av = g.value(a);
  const Tensor& bv = g.value(b);
  if (av.rank() != 2 || bv.rank() != 1 || bv.dim(0) != av.dim(0))
    throw ShapeError("add_bias_rows: (M,N) + b[M] required");
  const int64_t M = av.dim(0), N = av.dim(1);
  Tensor out = av;
  for (int64_t i = 0; i < M; ++i) {
    double bi = bv[i];
    double* row = out.data() + i * N;
    for (int64_t j = 0; j < N; ++j) row[j] += bi;
  }
  const int self = g.next_id(), aid = a.id, bid = b.id;
  return g.make(std::move(out), {aid, bid}, [self, aid, bid, M, N](Graph& gg) {
    const Tensor& go = gg.grad_buffer(self);
    if (gg.needs_grad_id(aid))
      kernels::active().axpy(go.numel(), 1.0, go.data(), gg.grad_buffer(aid).data());
    if (gg.needs_grad_id(bid)) {
      Tensor& db = gg.grad_buffer(bid);
      for (int64_t i = 0; i < M; ++i) db[i] += kernels::active().sum(N, go.data() + i * N);
    }
  });
}

Var softmax_rows(Var a) {
  Graph& g = graph_of(a);
  const Tensor& av = g.value(a);
  if (av.rank() != 2) throw ShapeError("softmax_rows: matrix required");
  const int64_t M = av.dim(0), N = av.dim(1);
  Tensor out(av.shape);
  for (int64_t i = 0; i < M; ++i) {
    const double* x = av.data() + i * N;
    double* y = out.data() + i * N;
    double mx = x[0];
    for (int64_t j = 1; j < N; ++j) mx = std::max(mx, x[j]);
    double z = 0.0;
    for (int64_t j = 0; j < N; ++j) {
      y[j] = std::exp(x[j] - mx);
      z += y[j];
    }
    for (int64_t j = 0; j < N; ++j) y[j] /= z;
  }
  const int self = g.next_id(), aid = a.id;
  return g.make(std::move(out), {aid}, [self, aid, M, N](Graph& gg) {
    const Tensor& go = gg.grad_buffer(self);
    const Tensor& y = gg.value_id(self);
    Tensor& da = gg.grad_buffer(aid);
    for (int64_t i = 0; i < M; ++i) {
      const double* gy = go.data() + i * N;
      const double* yy = y.data() + i * N;
      double dot = kernels::active().dot(N, gy, yy);
      double* d = da.data() + i * N;
      for (int64_t j = 0; j < N; ++j) d[j] += yy[j] * (gy[j] - dot);
    }
  });
}

// ---------------------------------------------------------------------------
// gradient verification
// ---------------------------------------------------------------------------

GradCheckResult grad_check(const BuildFn& fn,
                           const std::vector<std::pair<std::string, Tensor>>& inputs, double h) {
  if (h <= 0.0) throw ConfigError("grad_check: h must be positive");
  std::vector<Tensor> work;
  work.reserve(inputs.size());
  for (const auto& [name, t] : inputs) work.push_back(t);

  // Analytic gradients once.
  std::vector<Tensor> analytic;
  {
    Graph g;
    std::vector<Var> leaves;
    for (auto& t : work) leaves.push_back(g.leaf(t));
    Var out = fn(g, leaves);
    if (g.value(out).numel() != 1) throw UsageError("grad_check: fn must produce a scalar");
    g.backward(out);
    for (Var v : leaves) analytic.push_back(g.grad(v));
  }

  auto scalar_eval = [&]() {
    Graph g;
    std::vector<Var> leaves;
    for (auto& t : work) leaves.push_back(g.leaf(t, false));
    // A constant graph is fine here; read the forward value only.
    Var out = fn(g, leaves);
    return g.value(out)[0];
  };

  GradCheckResult res;
  for (size_t b = 0; b < inputs.size(); ++b) {
    double block_err = 0.0;
    Tensor& t = work[b];
    for (int64_t i = 0; i < t.numel(); ++i) {
      double orig = t[i];
      t[i] = orig + h;
      double fp = scalar_eval();
      t[i] = orig - h;
      double fm = scalar_eval();
      t[i] = orig;
      double numeric = (fp - fm) / (2.0 * h);
      double a = analytic[b][i];
      // Central differences carry ~eps*|f|/h of rounding noise; discount it
      // so exactly-zero gradients (e.g. biases that a following norm layer
      // cancels) do not register as relative error.
      double abs_err = std::max(0.0, std::fabs(a - numeric) - 1e-9);
      double denom = std::max({std::fabs(a), std::fabs(numeric), 1e-6});
      block_err = std::max(block_err, abs_err / denom);
    }
    res.per_block.emplace_back(inputs[b].first, block_err);
    res.max_rel_err = std::max(res.max_rel_err, block_err);
  }
  return res;
}

}  // namespace r2s2::ad
