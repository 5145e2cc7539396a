// SPDX-License-Identifier: Apache-2.0
//
// Structured grid ops for the tape: im2col-backed 3x3 conv, stride-2
// transpose conv, pooling, instance norm, neighbor differences and the
// radar-specific linear maps.

#include <cmath>
#include <memory>

#include "r2s2/autodiff.hpp"
#include "r2s2/kernels.hpp"

namespace r2s2::ad {

namespace {

Graph& graph_of(Var v) {
  if (!v.valid()) throw UsageError("operation on an invalid Var");
  return *v.g;
}

// im2col for 3x3, zero pad 1, stride 1: (Cin,H,W) -> (Cin*9, H*W).
void im2col_3x3(const Tensor& x, Tensor& col) {
  const int64_t C = x.dim(0), H = x.dim(1), W = x.dim(2);
  const int64_t S = H * W;
  for (int64_t c = 0; c < C; ++c) {
    const double* plane = x.data() + c * S;
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        double* dst = col.data() + (c * 9 + ky * 3 + kx) * S;
        for (int64_t y = 0; y < H; ++y) {
          int64_t sy = y + ky - 1;
          double* drow = dst + y * W;
          if (sy < 0 || sy >= H) {
            std::fill(drow, drow + W, 0.0);
            continue;
          }
          const double* srow = plane + sy * W;
          int64_t x0 = std::max<int64_t>(0, 1 - kx);
          int64_t x1 = std::min<int64_t>(W, W + 1 - kx);
          if (x0 > 0) std::fill(drow, drow + x0, 0.0);
          for (int64_t xx = x0; xx < x1; ++xx) drow[xx] = srow[xx + kx - 1];
          if (x1 < W) std::fill(drow + x1, drow + W, 0.0);
        }
      }
    }
  }
}

// Transpose of im2col_3x3: scatter-add (Cin*9, H*W) back onto (Cin,H,W).
void col2im_3x3(const Tensor& col, Tensor& x) {
  const int64_t C = x.dim(0), H = x.dim(1), W = x.dim(2);
  const int64_t S = H * W;
  for (int64_t c = 0; c < C; ++c) {
    double* plane = x.data() + c * S;
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        const double* src = col.data() + (c * 9 + ky * 3 + kx) * S;
        for (int64_t y = 0; y < H; ++y) {
          int64_t sy = y + ky - 1;
          if (sy < 0 || sy >= H) continue;
          double* drow = plane + sy * W;
          const double* srow = src + y * W;
          int64_t x0 = std::max<int64_t>(0, 1 - kx);
          int64_t x1 = std::min<int64_t>(W, W + 1 - kx);
          for (int64_t xx = x0; xx < x1; ++xx) drow[xx + kx - 1] += srow[xx];
        }
      }
    }
  }
}

}  // namespace

Var conv3x3(Var x, Var w, Var b) {
  Graph& g = graph_of(x);
  const Tensor& xv = g.value(x);
  const Tensor& wv = g.value(w);
  const Tensor& bv = g.value(b);
  if (xv.rank() != 3) throw ShapeError("conv3x3: input must be (C,H,W)");
  if (wv.rank() != 4 || wv.dim(2) != 3 || wv.dim(3) != 3 || wv.dim(1) != xv.dim(0))
    throw ShapeError("conv3x3: weight must be (Cout,Cin,3,3) matching input");
  if (bv.rank() != 1 || bv.dim(0) != wv.dim(0)) throw ShapeError("conv3x3: bias mismatch");

  const int Cin = static_cast<int>(xv.dim(0)), H = static_cast<int>(xv.dim(1)),
            W = static_cast<int>(xv.dim(2)), Cout = static_cast<int>(wv.dim(0));
  const int K = Cin * 9, S = H * W;

  auto col = std::make_shared<Tensor>(Tensor({static_cast<int64_t>(K), static_cast<int64_t>(S)}));
  im2col_3x3(xv, *col);

  Tensor out({Cout, H, W});
  kernels::active().gemm_nn(Cout, S, K, 1.0, wv.data(), K, col->data(), S, 0.0, out.data(), S);
  for (int co = 0; co < Cout; ++co) {
    double bias = bv[co];
    double* plane = out.data() + static_cast<int64_t>(co) * S;
    for (int i = 0; i < S; ++i) plane[i] += bias;
  }

  const int self = g.next_id(), xid = x.id, wid = w.id, bid = b.id;
  return g.make(std::move(out), {xid, wid, bid},
                [self, xid, wid, bid, col, Cin, Cout, H, W, K, S](Graph& gg) {
                  const Tensor& go = gg.grad_buffer(self);
                  if (gg.needs_grad_id(bid)) {
                    Tensor& db = gg.grad_buffer(bid);
                    for (int co = 0; co < Cout; ++co)
                      db[co] += kernels::active().sum(S, go.data() + static_cast<int64_t>(co) * S);
                  }
                  if (gg.needs_grad_id(wid)) {
                    // dW (Cout,K) += dY (Cout,S) * col^T (S,K)
                    kernels::active().gemm_nt(Cout, K, S, 1.0, go.data(), S, col->data(), S, 1.0,
                                              gg.grad_buffer(wid).data(), K);
                  }
                  if (gg.needs_grad_id(xid)) {
                    // dcol (K,S) = W^T (K,Cout) * dY (Cout,S), then scatter.
                    Tensor dcol({K, S});
                    kernels::active().gemm_tn(K, S, Cout, 1.0, gg.value_id(wid).data(), K,
                                              go.data(), S, 0.0, dcol.data(), S);
                    Tensor dx({Cin, H, W});
                    col2im_3x3(dcol, dx);
                    kernels::active().axpy(dx.numel(), 1.0, dx.data(),
                                           gg.grad_buffer(xid).data());
                  }
                });
}

// Geometry of the stride-2 transpose conv: out[oy,ox] with oy = 2*iy + ky - 1
// (kernel 3, pad 1, output pad 1), giving exactly (2H, 2W) outputs.
namespace {

void tconv_scatter(const Tensor& tmp, Tensor& out, int Cout, int H, int W) {
  const int OH = 2 * H, OW = 2 * W;
  const int64_t S = static_cast<int64_t>(H) * W;
  for (int co = 0; co < Cout; ++co) {
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        const double* src = tmp.data() + ((static_cast<int64_t>(co) * 9) + ky * 3 + kx) * S;
        double* dst = out.data() + (static_cast<int64_t>(co) * OH) * OW;
        for (int iy = 0; iy < H; ++iy) {
          int oy = 2 * iy + ky - 1;
          if (oy < 0 || oy >= OH) continue;
          const double* srow = src + static_cast<int64_t>(iy) * W;
          double* drow = dst + static_cast<int64_t>(oy) * OW;
          for (int ix = 0; ix < W; ++ix) {
            int ox = 2 * ix + kx - 1;
            if (ox < 0 || ox >= OW) continue;
            drow[ox] += srow[ix];
          }
        }
      }
    }
  }
}

void tconv_gather(const Tensor& dout, Tensor& dtmp, int Cout, int H, int W) {
  const int OH = 2 * H, OW = 2 * W;
  const int64_t S = static_cast<int64_t>(H) * W;
  for (int co = 0; co < Cout; ++co) {
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        double* dst = dtmp.data() + ((static_cast<int64_t>(co) * 9) + ky * 3 + kx) * S;
        const double* src = dout.data() + (static_cast<int64_t>(co) * OH) * OW;
        for (int iy = 0; iy < H; ++iy) {
          int oy = 2 * iy + ky - 1;
          double* drow = dst + static_cast<int64_t>(iy) * W;
          if (oy < 0 || oy >= OH) {
            std::fill(drow, drow + W, 0.0);
            continue;
          }
          const double* srow = src + static_cast<int64_t>(oy) * OW;
          for (int ix = 0; ix < W; ++ix) {
            int ox = 2 * ix + kx - 1;
            drow[ix] = (ox < 0 || ox >= OW) ? 0.0 : srow[ox];
          }
        }
      }
    }
  }
}

}  // namespace

Var tconv3x3_s2(Var x, Var w, Var b) {
  Graph& g = graph_of(x);
  const Tensor& xv = g.value(x);
  const Tensor& wv = g.value(w);
  const Tensor& bv = g.value(b);
  if (xv.rank() != 3) throw ShapeError("tconv3x3_s2: input must be (C,H,W)");
  if (wv.rank() != 4 || wv.dim(0) != xv.dim(0) || wv.dim(2) != 3 || wv.dim(3) != 3)
    throw ShapeError("tconv3x3_s2: weight must be (Cin,Cout,3,3) matching input");
  const int Cin = static_cast<int>(xv.dim(0)), H = static_cast<int>(xv.dim(1)),
            W = static_cast<int>(xv.dim(2)), Cout = static_cast<int>(wv.dim(1));
  if (bv.rank() != 1 || bv.dim(0) != Cout) throw ShapeError("tconv3x3_s2: bias mismatch");
  const int K = Cout * 9, S = H * W;

  // tmp (Cout*9, S) = Wmat^T (Cout*9, Cin) * X (Cin, S)
  Tensor tmp({K, S});
  kernels::active().gemm_tn(K, S, Cin, 1.0, wv.data(), K, xv.data(), S, 0.0, tmp.data(), S);
  Tensor out({Cout, 2 * H, 2 * W});
  tconv_scatter(tmp, out, Cout, H, W);
  const int64_t OS = static_cast<int64_t>(2 * H) * (2 * W);
  for (int co = 0; co < Cout; ++co) {
    double bias = bv[co];
    double* plane = out.data() + co * OS;
    for (int64_t i = 0; i < OS; ++i) plane[i] += bias;
  }

  const int self = g.next_id(), xid = x.id, wid = w.id, bid = b.id;
  return g.make(std::move(out), {xid, wid, bid},
                [self, xid, wid, bid, Cin, Cout, H, W, K, S, OS](Graph& gg) {
                  const Tensor& go = gg.grad_buffer(self);
                  Tensor dtmp({K, S});
                  tconv_gather(go, dtmp, Cout, H, W);
                  if (gg.needs_grad_id(bid)) {
                    Tensor& db = gg.grad_buffer(bid);
                    for (int co = 0; co < Cout; ++co)
                      db[co] += kernels::active().sum(OS, go.data() + co * OS);
                  }
                  if (gg.needs_grad_id(wid)) {
                    // dW (Cin,K) += X (Cin,S) * dtmp^T (S,K)
                    kernels::active().gemm_nt(Cin, K, S, 1.0, gg.value_id(xid).data(), S,
                                              dtmp.data(), S, 1.0, gg.grad_buffer(wid).data(), K);
                  }
                  if (gg.needs_grad_id(xid)) {
                    // dX (Cin,S) += Wmat (Cin,K) * dtmp (K,S)
                    kernels::active().gemm_nn(Cin, S, K, 1.0, gg.value_id(wid).data(), K,
                                              dtmp.data(), S, 1.0, gg.grad_buffer(xid).data(), S);
                  }
                });
}

Var avg_pool2(Var x) {
  Graph& g = graph_of(x);
  const Tensor& xv = g.value(x);
  if (xv.rank() != 3) throw ShapeError("avg_pool2: input must be (C,H,W)");
  const int64_t C = xv.dim(0), H = xv.dim(1), W = xv.dim(2);
  if (H % 2 != 0 || W % 2 != 0) throw ConfigError("avg_pool2: spatial dims must be even");
  const int64_t OH = H / 2, OW = W / 2;
  Tensor out({C, OH, OW});
  for (int64_t c = 0; c < C; ++c)
    for (int64_t y = 0; y < OH; ++y)
      for (int64_t xx = 0; xx < OW; ++xx)
        out.at(c, y, xx) = 0.25 * (xv.at(c, 2 * y, 2 * xx) + xv.at(c, 2 * y, 2 * xx + 1) +
                                   xv.at(c, 2 * y + 1, 2 * xx) + xv.at(c, 2 * y + 1, 2 * xx + 1));
  const int self = g.next_id(), xid = x.id;
  return g.make(std::move(out), {xid}, [self, xid, C, OH, OW](Graph& gg) {
    const Tensor& go = gg.grad_buffer(self);
    Tensor& dx = gg.grad_buffer(xid);
    for (int64_t c = 0; c < C; ++c)
      for (int64_t y = 0; y < OH; ++y)
        for (int64_t xx = 0; xx < OW; ++xx) {
          double gv = 0.25 * go.at(c, y, xx);
          dx.at(c, 2 * y, 2 * xx) += gv;
          dx.at(c, 2 * y, 2 * xx + 1) += gv;
          dx.at(c, 2 * y + 1, 2 * xx) += gv;
          dx.at(c, 2 * y + 1, 2 * xx + 1) += gv;
        }
  });
}

Var instance_norm(Var x, Var gamma, Var beta, double eps) {
  Graph& g = graph_of(x);
  const Tensor& xv = g.value(x);
  const Tensor& gv = g.value(gamma);
  const Tensor& bv = g.value(beta);
  if (xv.rank() != 3) throw ShapeError("instance_norm: input must be (C,H,W)");
  const int64_t C = xv.dim(0), S = xv.dim(1) * xv.dim(2);
  if (gv.rank() != 1 || gv.dim(0) != C || bv.rank() != 1 || bv.dim(0) != C)
    throw ShapeError("instance_norm: affine params must be (C)");
  if (eps <= 0.0) throw ConfigError("instance_norm: eps must be positive");

  Tensor out(xv.shape);
  auto xhat = std::make_shared<Tensor>(Tensor(xv.shape));
  auto inv_std = std::make_shared<Tensor>(Tensor({C}));
  for (int64_t c = 0; c < C; ++c) {
    const double* p = xv.data() + c * S;
    double mean = kernels::active().sum(S, p) / static_cast<double>(S);
    double sq = kernels::active().sumsq(S, p) / static_cast<double>(S);
    double var = sq - mean * mean;
    double istd = 1.0 / std::sqrt(var + eps);
    (*inv_std)[c] = istd;
    double* xh = xhat->data() + c * S;
    double* o = out.data() + c * S;
    double gc = gv[c], bc = bv[c];
    for (int64_t i = 0; i < S; ++i) {
      xh[i] = (p[i] - mean) * istd;
      o[i] = gc * xh[i] + bc;
    }
  }

  const int self = g.next_id(), xid = x.id, gid = gamma.id, bid = beta.id;
  return g.make(std::move(out), {xid, gid, bid},
                [self, xid, gid, bid, xhat, inv_std, C, S](Graph& gg) {
                  const Tensor& go = gg.grad_buffer(self);
                  const Tensor& gam = gg.value_id(gid);
                  for (int64_t c = 0; c < C; ++c) {
                    const double* gy = go.data() + c * S;
                    const double* xh = xhat->data() + c * S;
                    double sum_gy = kernels::active().sum(S, gy);
                    double sum_gy_xh = kernels::active().dot(S, gy, xh);
                    if (gg.needs_grad_id(gid)) gg.grad_buffer(gid)[c] += sum_gy_xh;
                    if (gg.needs_grad_id(bid)) gg.grad_buffer(bid)[c] += sum_gy;
                    if (gg.needs_grad_id(xid)) {
                      double* dx = gg.grad_buffer(xid).data() + c * S;
                      double k = gam[c] * (*inv_std)[c];
                      double mean_gy = sum_gy / static_cast<double>(S);
                      double mean_gy_xh = sum_gy_xh / static_cast<double>(S);
                      for (int64_t i = 0; i < S; ++i)
                        dx[i] += k * (gy[i] - mean_gy - xh[i] * mean_gy_xh);
                    }
                  }
                });
}

namespace {

Var shift_diff(Var x, int dy, int dx, const char* name) {
  Graph& g = graph_of(x);
  const Tensor& xv = g.value(x);
  if (xv.rank() != 3) throw ShapeError(std::string(name) + ": input must be (C,H,W)");
  const int64_t C = xv.dim(0), H = xv.dim(1), W = xv.dim(2);
  const int64_t OH = H - dy, OW = W - dx;
  if (OH < 1 || OW < 1) throw ShapeError(std::string(name) + ": tensor too small");
  Tensor out({C, OH, OW});
  for (int64_t c = 0; c < C; ++c)
    for (int64_t y = 0; y < OH; ++y)
      for (int64_t xx = 0; xx < OW; ++xx)
        out.at(c, y, xx) = xv.at(c, y + dy, xx + dx) - xv.at(c, y, xx);
  const int self = g.next_id(), xid = x.id;
  return g.make(std::move(out), {xid}, [self, xid, C, OH, OW, dy, dx](Graph& gg) {
    const Tensor& go = gg.grad_buffer(self);
    Tensor& d = gg.grad_buffer(xid);
    for (int64_t c = 0; c < C; ++c)
      for (int64_t y = 0; y < OH; ++y)
        for (int64_t xx = 0; xx < OW; ++xx) {
          double gv = go.at(c, y, xx);
          d.at(c, y + dy, xx + dx) += gv;
          d.at(c, y, xx) -= gv;
        }
  });
}

}  // namespace

Var diag_diff(Var x) { return shift_diff(x, 1, 1, "diag_diff"); }
Var row_diff(Var x) { return shift_diff(x, 1, 0, "row_diff"); }
Var col_diff(Var x) { return shift_diff(x, 0, 1, "col_diff"); }

Var channel_dft(Var x, const ChannelDftMatrices& mats) {
  Graph& g = graph_of(x);
  const Tensor& xv = g.value(x);
  if (xv.rank() != 3 || xv.dim(0) != 2 * mats.n_channels)
    throw ShapeError("channel_dft: input must be (2*n_channels, H, W)");
  const int nc = mats.n_channels, na = mats.n_az;
  const int64_t S = xv.dim(1) * xv.dim(2);
  const int Si = static_cast<int>(S);

  // Deinterleave planes, run the 2x2 block GEMM, reinterleave.
  Tensor xr({nc, S}), xi({nc, S});
  for (int c = 0; c < nc; ++c) {
    std::copy_n(xv.data() + (2 * static_cast<int64_t>(c)) * S, S, xr.data() + c * S);
    std::copy_n(xv.data() + (2 * static_cast<int64_t>(c) + 1) * S, S, xi.data() + c * S);
  }
  Tensor yr({na, S}), yi({na, S});
  const auto& ops = kernels::active();
  ops.gemm_nn(na, Si, nc, 1.0, mats.cos_m.data(), nc, xr.data(), Si, 0.0, yr.data(), Si);
  ops.gemm_nn(na, Si, nc, -1.0, mats.sin_m.data(), nc, xi.data(), Si, 1.0, yr.data(), Si);
  ops.gemm_nn(na, Si, nc, 1.0, mats.cos_m.data(), nc, xi.data(), Si, 0.0, yi.data(), Si);
  ops.gemm_nn(na, Si, nc, 1.0, mats.sin_m.data(), nc, xr.data(), Si, 1.0, yi.data(), Si);

  Tensor out({2 * na, xv.dim(1), xv.dim(2)});
  for (int a = 0; a < na; ++a) {
    std::copy_n(yr.data() + a * S, S, out.data() + (2 * static_cast<int64_t>(a)) * S);
    std::copy_n(yi.data() + a * S, S, out.data() + (2 * static_cast<int64_t>(a) + 1) * S);
  }

  const int self = g.next_id(), xid = x.id;
  const Tensor* cosm = &mats.cos_m;
  const Tensor* sinm = &mats.sin_m;
  return g.make(std::move(out), {xid}, [self, xid, cosm, sinm, nc, na, S, Si](Graph& gg) {
    const Tensor& go = gg.grad_buffer(self);
    Tensor gr({na, S}), gi({na, S});
    for (int a = 0; a < na; ++a) {
      std::copy_n(go.data() + (2 * static_cast<int64_t>(a)) * S, S, gr.data() + a * S);
      std::copy_n(go.data() + (2 * static_cast<int64_t>(a) + 1) * S, S, gi.data() + a * S);
    }
    // Adjoint of the block matrix [C -S; S C] is [C^T S^T; -S^T C^T].
    Tensor dxr({nc, S}), dxi({nc, S});
    const auto& ops2 = kernels::active();
    ops2.gemm_tn(nc, Si, na, 1.0, cosm->data(), nc, gr.data(), Si, 0.0, dxr.data(), Si);
    ops2.gemm_tn(nc, Si, na, 1.0, sinm->data(), nc, gi.data(), Si, 1.0, dxr.data(), Si);
    ops2.gemm_tn(nc, Si, na, -1.0, sinm->data(), nc, gr.data(), Si, 0.0, dxi.data(), Si);
    ops2.gemm_tn(nc, Si, na, 1.0, cosm->data(), nc, gi.data(), Si, 1.0, dxi.data(), Si);
    Tensor& dx = gg.grad_buffer(xid);
    for (int c = 0; c < nc; ++c) {
      kernels::active().axpy(S, 1.0, dxr.data() + c * S,
                             dx.data() + (2 * static_cast<int64_t>(c)) * S);
      kernels::active().axpy(S, 1.0, dxi.data() + c * S,
                             dx.data() + (2 * static_cast<int64_t>(c) + 1) * S);
    }
  });
}

Var scatter_channels(Var pred, const Tensor& input_planes, const ChannelSplit& split) {
  Graph& g = graph_of(pred);
  const Tensor& pv = g.value(pred);
  split.validate();
  if (pv.rank() != 3 || pv.dim(0) != 2 * split.n_label())
    throw ShapeError("scatter_channels: pred must be (2*n_label, H, W)");
  if (input_planes.rank() != 3 || input_planes.dim(0) != 2 * split.n_input() ||
      input_planes.dim(1) != pv.dim(1) || input_planes.dim(2) != pv.dim(2))
    throw ShapeError("scatter_channels: input planes mismatch");

  const int64_t S = pv.dim(1) * pv.dim(2);
  Tensor out({2 * static_cast<int64_t>(split.n_total), pv.dim(1), pv.dim(2)});
  for (int i = 0; i < split.n_input(); ++i) {
    int ch = split.input_idx[static_cast<size_t>(i)];
    std::copy_n(input_planes.data() + 2 * static_cast<int64_t>(i) * S, 2 * S,
                out.data() + 2 * static_cast<int64_t>(ch) * S);
  }
  for (int i = 0; i < split.n_label(); ++i) {
    int ch = split.label_idx[static_cast<size_t>(i)];
    std::copy_n(pv.data() + 2 * static_cast<int64_t>(i) * S, 2 * S,
                out.data() + 2 * static_cast<int64_t>(ch) * S);
  }

  const int self = g.next_id(), pid = pred.id;
  std::vector<int> label_idx = split.label_idx;
  return g.make(std::move(out), {pid}, [self, pid, label_idx, S](Graph& gg) {
    const Tensor& go = gg.grad_buffer(self);
    Tensor& dp = gg.grad_buffer(pid);
    for (size_t i = 0; i < label_idx.size(); ++i) {
      int ch = label_idx[i];
      kernels::active().axpy(2 * S, 1.0, go.data() + 2 * static_cast<int64_t>(ch) * S,
                             dp.data() + 2 * static_cast<int64_t>(i) * S);
    }
  });
}

}  // namespace r2s2::ad
