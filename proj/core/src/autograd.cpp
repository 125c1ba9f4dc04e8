// Copyright 2026 The motionlab Authors
// SPDX-License-Identifier: Apache-2.0
#include "motionlab/autograd.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace motionlab::ag {

using RowMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using CMapMat = Eigen::Map<const RowMat>;

namespace {

std::atomic<std::uint64_t> g_next_id{1};

Var make_node(Tensor val, std::vector<Var> parents, std::function<void(Node&)> backfn) {
  auto n = std::make_shared<Node>();
  n->val = std::move(val);
  n->parents = std::move(parents);
  n->backfn = std::move(backfn);
  n->id = g_next_id.fetch_add(1, std::memory_order_relaxed);
  return n;
}

void check(bool cond, const char* msg) {
  if (!cond) throw std::invalid_argument(msg);
}

}  // namespace

Var constant(Tensor t) { return make_node(std::move(t), {}, nullptr); }

Var leaf(Tensor t) {
  auto n = make_node(std::move(t), {}, nullptr);
  n->is_leaf = true;
  return n;
}

void backward(const Var& root) {
  check(root != nullptr, "backward: null root");
  // Collect reachable nodes, then run in descending creation order.
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<Var> stack{root};
  while (!stack.empty()) {
    Var v = stack.back();
    stack.pop_back();
    if (!seen.insert(v.get()).second) continue;
    order.push_back(v.get());
    for (auto& p : v->parents) stack.push_back(p);
  }
  std::sort(order.begin(), order.end(), [](Node* a, Node* b) { return a->id > b->id; });

  Tensor& g = root->grad_buf();
  for (auto& x : g.v) x += 1.0f;
  for (Node* n : order) {
    if (n->backfn && !n->grad.v.empty()) n->backfn(*n);
    if (!n->is_leaf) n->grad = Tensor();  // free intermediate grads as we go
  }
}

// ---------------------------------------------------------------------------
// elementwise
// ---------------------------------------------------------------------------

Var add(const Var& a, const Var& b) {
  check(a->val.same_shape(b->val), "add: shape mismatch");
  Tensor out = a->val;
  for (std::int64_t i = 0; i < out.numel(); ++i) out[i] += b->val[i];
  return make_node(std::move(out), {a, b}, [a, b](Node& n) {
    Tensor& ga = a->grad_buf();
    Tensor& gb = b->grad_buf();
    for (std::int64_t i = 0; i < n.grad.numel(); ++i) {
      ga[i] += n.grad[i];
      gb[i] += n.grad[i];
    }
  });
}

Var scale(const Var& a, float s) {
  Tensor out = a->val;
  for (auto& x : out.v) x *= s;
  return make_node(std::move(out), {a}, [a, s](Node& n) {
    Tensor& ga = a->grad_buf();
    for (std::int64_t i = 0; i < n.grad.numel(); ++i) ga[i] += s * n.grad[i];
  });
}

Var mul(const Var& a, const Var& b) {
  check(a->val.same_shape(b->val), "mul: shape mismatch");
  Tensor out = a->val;
  for (std::int64_t i = 0; i < out.numel(); ++i) out[i] *= b->val[i];
  return make_node(std::move(out), {a, b}, [a, b](Node& n) {
    Tensor& ga = a->grad_buf();
    Tensor& gb = b->grad_buf();
    for (std::int64_t i = 0; i < n.grad.numel(); ++i) {
      ga[i] += n.grad[i] * b->val[i];
      gb[i] += n.grad[i] * a->val[i];
    }
  });
}

Var silu(const Var& x) {
  Tensor out = x->val;
  for (auto& v : out.v) {
    const float s = 1.0f / (1.0f + std::exp(-v));
    v = v * s;
  }
  return make_node(std::move(out), {x}, [x](Node& n) {
    Tensor& gx = x->grad_buf();
    for (std::int64_t i = 0; i < n.grad.numel(); ++i) {
      const float v = x->val[i];
      const float s = 1.0f / (1.0f + std::exp(-v));
      gx[i] += n.grad[i] * (s * (1.0f + v * (1.0f - s)));
    }
  });
}

Var add_channel_bias(const Var& x, const Var& bias) {
  check(x->val.ndim() == 4, "add_channel_bias: x must be 4-d");
  check(bias->val.ndim() == 1 && bias->val.dim(0) == x->val.dim(1),
        "add_channel_bias: bias/channel mismatch");
  const int N = x->val.dim(0), C = x->val.dim(1);
  const std::int64_t hw = static_cast<std::int64_t>(x->val.dim(2)) * x->val.dim(3);
  Tensor out = x->val;
  for (int n = 0; n < N; ++n)
    for (int c = 0; c < C; ++c) {
      float* p = &out.v[static_cast<size_t>((static_cast<std::int64_t>(n) * C + c) * hw)];
      const float b = bias->val[c];
      for (std::int64_t i = 0; i < hw; ++i) p[i] += b;
    }
  return make_node(std::move(out), {x, bias}, [x, bias, N, C, hw](Node& n) {
    Tensor& gx = x->grad_buf();
    Tensor& gb = bias->grad_buf();
    for (int b = 0; b < N; ++b)
      for (int c = 0; c < C; ++c) {
        const float* g = &n.grad.v[static_cast<size_t>((static_cast<std::int64_t>(b) * C + c) * hw)];
        float* gxp = &gx.v[static_cast<size_t>((static_cast<std::int64_t>(b) * C + c) * hw)];
        float acc = 0.0f;
        for (std::int64_t i = 0; i < hw; ++i) {
          gxp[i] += g[i];
          acc += g[i];
        }
        gb[c] += acc;
      }
  });
}

// ---------------------------------------------------------------------------
// shape
// ---------------------------------------------------------------------------

Var reshape(const Var& x, std::vector<int> shape) {
  check(Tensor::numel_of(shape) == x->val.numel(), "reshape: numel mismatch");
  Tensor out(std::move(shape), x->val.v);
  return make_node(std::move(out), {x}, [x](Node& n) {
    Tensor& gx = x->grad_buf();
    for (std::int64_t i = 0; i < n.grad.numel(); ++i) gx[i] += n.grad[i];
  });
}

namespace {
void permute4_copy(const Tensor& src, Tensor& dst, const std::array<int, 4>& axes, bool accumulate) {
  const auto& s = src.shape;
  std::int64_t stride[4] = {static_cast<std::int64_t>(s[1]) * s[2] * s[3],
                            static_cast<std::int64_t>(s[2]) * s[3], s[3], 1};
  int idx[4];
  std::int64_t o = 0;
  for (idx[0] = 0; idx[0] < dst.shape[0]; ++idx[0])
    for (idx[1] = 0; idx[1] < dst.shape[1]; ++idx[1])
      for (idx[2] = 0; idx[2] < dst.shape[2]; ++idx[2])
        for (idx[3] = 0; idx[3] < dst.shape[3]; ++idx[3], ++o) {
          std::int64_t si = 0;
          for (int a = 0; a < 4; ++a) si += static_cast<std::int64_t>(idx[a]) * stride[axes[a]];
          if (accumulate)
            dst.v[static_cast<size_t>(o)] += src.v[static_cast<size_t>(si)];
          else
            dst.v[static_cast<size_t>(o)] = src.v[static_cast<size_t>(si)];
        }
}
}  // namespace

Var permute4(const Var& x, std::array<int, 4> axes) {
  check(x->val.ndim() == 4, "permute4: x must be 4-d");
  std::vector<int> oshape(4);
  for (int a = 0; a < 4; ++a) oshape[static_cast<size_t>(a)] = x->val.dim(axes[static_cast<size_t>(a)]);
  Tensor out(oshape);
  permute4_copy(x->val, out, axes, false);
  return make_node(std::move(out), {x}, [x, axes](Node& n) {
    // inverse permutation scatter
    std::array<int, 4> inv{};
    for (int a = 0; a < 4; ++a) inv[static_cast<size_t>(axes[static_cast<size_t>(a)])] = a;
    Tensor& gx = x->grad_buf();
    permute4_copy(n.grad, gx, inv, true);
  });
}

Var concat_ch(const Var& a, const Var& b) {
  check(a->val.ndim() == 4 && b->val.ndim() == 4, "concat_ch: 4-d only");
  check(a->val.dim(0) == b->val.dim(0) && a->val.dim(2) == b->val.dim(2) &&
            a->val.dim(3) == b->val.dim(3),
        "concat_ch: shape mismatch");
  const int N = a->val.dim(0), Ca = a->val.dim(1), Cb = b->val.dim(1);
  const std::int64_t hw = static_cast<std::int64_t>(a->val.dim(2)) * a->val.dim(3);
  Tensor out({N, Ca + Cb, a->val.dim(2), a->val.dim(3)});
  for (int n = 0; n < N; ++n) {
    std::copy_n(&a->val.v[static_cast<size_t>(n * Ca * hw)], Ca * hw,
                &out.v[static_cast<size_t>(n * (Ca + Cb) * hw)]);
    std::copy_n(&b->val.v[static_cast<size_t>(n * Cb * hw)], Cb * hw,
                &out.v[static_cast<size_t>((n * (Ca + Cb) + Ca) * hw)]);
  }
  return make_node(std::move(out), {a, b}, [a, b, N, Ca, Cb, hw](Node& nd) {
    Tensor& ga = a->grad_buf();
    Tensor& gb = b->grad_buf();
    for (int n = 0; n < N; ++n) {
      const float* g = &nd.grad.v[static_cast<size_t>(n * (Ca + Cb) * hw)];
      float* pa = &ga.v[static_cast<size_t>(n * Ca * hw)];
      float* pb = &gb.v[static_cast<size_t>(n * Cb * hw)];
      for (std::int64_t i = 0; i < Ca * hw; ++i) pa[i] += g[i];
      for (std::int64_t i = 0; i < Cb * hw; ++i) pb[i] += g[Ca * hw + i];
    }
  });
}

Var expand0(const Var& x, int B) {
  check(x->val.ndim() == 2, "expand0: x must be 2-d");
  const int S = x->val.dim(0), C = x->val.dim(1);
  const std::int64_t sz = static_cast<std::int64_t>(S) * C;
  Tensor out({B, S, C});
  for (int b = 0; b < B; ++b)
    std::copy_n(x->val.v.data(), sz, &out.v[static_cast<size_t>(b * sz)]);
  return make_node(std::move(out), {x}, [x, B, sz](Node& n) {
    Tensor& gx = x->grad_buf();
    for (int b = 0; b < B; ++b) {
      const float* g = &n.grad.v[static_cast<size_t>(b * sz)];
      for (std::int64_t i = 0; i < sz; ++i) gx[i] += g[i];
    }
  });
}

// ---------------------------------------------------------------------------
// dense
// ---------------------------------------------------------------------------

namespace {
struct LinView {
  int batch;  // number of independent row blocks
  int rows;   // rows per block
  int cols;
};
LinView lin_view(const Tensor& t) {
  if (t.ndim() == 1) return {1, 1, t.dim(0)};
  if (t.ndim() == 2) return {1, t.dim(0), t.dim(1)};
  if (t.ndim() == 3) return {t.dim(0), t.dim(1), t.dim(2)};
  throw std::invalid_argument("linear: input must be 1-, 2- or 3-d");
}
}  // namespace

Var linear(const Var& x, const Var& w, const Var& b) {
  check(w->val.ndim() == 2, "linear: weight must be 2-d");
  const LinView v = lin_view(x->val);
  const int out_dim = w->val.dim(0), in_dim = w->val.dim(1);
  check(v.cols == in_dim, "linear: input/weight dim mismatch");
  if (b) check(b->val.ndim() == 1 && b->val.dim(0) == out_dim, "linear: bias dim mismatch");

  std::vector<int> oshape = x->val.shape;
  oshape.back() = out_dim;
  Tensor out(oshape);
  CMapMat W(w->val.v.data(), out_dim, in_dim);
  for (int n = 0; n < v.batch; ++n) {
    CMapMat X(x->val.v.data() + static_cast<std::int64_t>(n) * v.rows * in_dim, v.rows, in_dim);
    MapMat Y(out.v.data() + static_cast<std::int64_t>(n) * v.rows * out_dim, v.rows, out_dim);
    Y.noalias() = X * W.transpose();
    if (b) Y.rowwise() += Eigen::Map<const Eigen::RowVectorXf>(b->val.v.data(), out_dim);
  }
  std::vector<Var> parents{x, w};
  if (b) parents.push_back(b);
  return make_node(std::move(out), std::move(parents), [x, w, b, v, out_dim, in_dim](Node& n) {
    Tensor& gx = x->grad_buf();
    Tensor& gw = w->grad_buf();
    CMapMat W(w->val.v.data(), out_dim, in_dim);
    MapMat GW(gw.v.data(), out_dim, in_dim);
    for (int bn = 0; bn < v.batch; ++bn) {
      CMapMat X(x->val.v.data() + static_cast<std::int64_t>(bn) * v.rows * in_dim, v.rows, in_dim);
      CMapMat GY(n.grad.v.data() + static_cast<std::int64_t>(bn) * v.rows * out_dim, v.rows, out_dim);
      MapMat GX(gx.v.data() + static_cast<std::int64_t>(bn) * v.rows * in_dim, v.rows, in_dim);
      GX.noalias() += GY * W;
      GW.noalias() += GY.transpose() * X;
      if (b) {
        Tensor& gb = b->grad_buf();
        Eigen::Map<Eigen::RowVectorXf>(gb.v.data(), out_dim) += GY.colwise().sum();
      }
    }
  });
}

Var embedding(const Var& table, const std::vector<int>& ids) {
  check(table->val.ndim() == 2, "embedding: table must be 2-d");
  const int V = table->val.dim(0), D = table->val.dim(1);
  for (int id : ids) check(id >= 0 && id < V, "embedding: id out of range");
  Tensor out({static_cast<int>(ids.size()), D});
  for (size_t i = 0; i < ids.size(); ++i)
    std::copy_n(&table->val.v[static_cast<size_t>(ids[i]) * D], D, &out.v[i * static_cast<size_t>(D)]);
  return make_node(std::move(out), {table}, [table, ids, D](Node& n) {
    Tensor& gt = table->grad_buf();
    for (size_t i = 0; i < ids.size(); ++i) {
      float* dst = &gt.v[static_cast<size_t>(ids[i]) * D];
      const float* src = &n.grad.v[i * static_cast<size_t>(D)];
      for (int d = 0; d < D; ++d) dst[d] += src[d];
    }
  });
}

// ---------------------------------------------------------------------------
// attention
// ---------------------------------------------------------------------------

Var sdpa(const Var& q, const Var& k, const Var& v, int heads) {
  check(q->val.ndim() == 3 && k->val.ndim() == 3 && v->val.ndim() == 3, "sdpa: 3-d inputs required");
  const int B = q->val.dim(0), Sq = q->val.dim(1), C = q->val.dim(2);
  const int Sk = k->val.dim(1);
  check(k->val.dim(0) == B && v->val.dim(0) == B, "sdpa: batch mismatch");
  check(k->val.dim(2) == C && v->val.dim(2) == C && v->val.dim(1) == Sk, "sdpa: shape mismatch");
  check(heads >= 1 && C % heads == 0, "sdpa: heads must divide channels");
  const int dh = C / heads;
  const float sc = 1.0f / std::sqrt(static_cast<float>(dh));

  Tensor out({B, Sq, C});
  auto probs = std::make_shared<Tensor>(std::vector<int>{B, heads, Sq, Sk});
  RowMat S(Sq, Sk);
  for (int b = 0; b < B; ++b) {
    for (int h = 0; h < heads; ++h) {
      // head h occupies columns [h*dh, (h+1)*dh) of the (S, C) slice
      Eigen::Map<const RowMat, 0, Eigen::OuterStride<>> Qh(
          q->val.v.data() + (static_cast<std::int64_t>(b) * Sq) * C + h * dh, Sq, dh,
          Eigen::OuterStride<>(C));
      Eigen::Map<const RowMat, 0, Eigen::OuterStride<>> Kh(
          k->val.v.data() + (static_cast<std::int64_t>(b) * Sk) * C + h * dh, Sk, dh,
          Eigen::OuterStride<>(C));
      Eigen::Map<const RowMat, 0, Eigen::OuterStride<>> Vh(
          v->val.v.data() + (static_cast<std::int64_t>(b) * Sk) * C + h * dh, Sk, dh,
          Eigen::OuterStride<>(C));
      S.noalias() = (Qh * Kh.transpose()) * sc;
      MapMat P(probs->v.data() + ((static_cast<std::int64_t>(b) * heads + h) * Sq) * Sk, Sq, Sk);
      for (int i = 0; i < Sq; ++i) {
        const float m = S.row(i).maxCoeff();
        P.row(i) = (S.row(i).array() - m).exp();
        P.row(i) /= P.row(i).sum();
      }
      Eigen::Map<RowMat, 0, Eigen::OuterStride<>> Oh(
          out.v.data() + (static_cast<std::int64_t>(b) * Sq) * C + h * dh, Sq, dh,
          Eigen::OuterStride<>(C));
      Oh.noalias() = P * Vh;
    }
  }
  return make_node(std::move(out), {q, k, v}, [q, k, v, probs, B, Sq, Sk, C, heads, dh, sc](Node& n) {
    Tensor& gq = q->grad_buf();
    Tensor& gk = k->grad_buf();
    Tensor& gv = v->grad_buf();
    RowMat dP(Sq, Sk), dS(Sq, Sk);
    for (int b = 0; b < B; ++b) {
      for (int h = 0; h < heads; ++h) {
        Eigen::Map<const RowMat, 0, Eigen::OuterStride<>> Qh(
            q->val.v.data() + (static_cast<std::int64_t>(b) * Sq) * C + h * dh, Sq, dh,
            Eigen::OuterStride<>(C));
        Eigen::Map<const RowMat, 0, Eigen::OuterStride<>> Kh(
            k->val.v.data() + (static_cast<std::int64_t>(b) * Sk) * C + h * dh, Sk, dh,
            Eigen::OuterStride<>(C));
        Eigen::Map<const RowMat, 0, Eigen::OuterStride<>> Vh(
            v->val.v.data() + (static_cast<std::int64_t>(b) * Sk) * C + h * dh, Sk, dh,
            Eigen::OuterStride<>(C));
        CMapMat P(probs->v.data() + ((static_cast<std::int64_t>(b) * heads + h) * Sq) * Sk, Sq, Sk);
        Eigen::Map<const RowMat, 0, Eigen::OuterStride<>> GO(
            n.grad.v.data() + (static_cast<std::int64_t>(b) * Sq) * C + h * dh, Sq, dh,
            Eigen::OuterStride<>(C));
        Eigen::Map<RowMat, 0, Eigen::OuterStride<>> GQ(
            gq.v.data() + (static_cast<std::int64_t>(b) * Sq) * C + h * dh, Sq, dh,
            Eigen::OuterStride<>(C));
        Eigen::Map<RowMat, 0, Eigen::OuterStride<>> GK(
            gk.v.data() + (static_cast<std::int64_t>(b) * Sk) * C + h * dh, Sk, dh,
            Eigen::OuterStride<>(C));
        Eigen::Map<RowMat, 0, Eigen::OuterStride<>> GV(
            gv.v.data() + (static_cast<std::int64_t>(b) * Sk) * C + h * dh, Sk, dh,
            Eigen::OuterStride<>(C));
        GV.noalias() += P.transpose() * GO;
        dP.noalias() = GO * Vh.transpose();
        for (int i = 0; i < Sq; ++i) {
          const float dot = dP.row(i).cwiseProduct(P.row(i)).sum();
          dS.row(i) = P.row(i).array() * (dP.row(i).array() - dot);
        }
        GQ.noalias() += (dS * Kh) * sc;
        GK.noalias() += (dS.transpose() * Qh) * sc;
      }
    }
  });
}

// ---------------------------------------------------------------------------
// conv / norm / resize
// ---------------------------------------------------------------------------

namespace {
struct ConvDims {
  int N, Ci, H, W, Co, kh, kw, Ho, Wo, ph, pw;
};
void im2col(const float* x, const ConvDims& d, int stride, RowMat& cols) {
  // cols: (Ci*kh*kw, Ho*Wo)
  for (int c = 0; c < d.Ci; ++c)
    for (int ky = 0; ky < d.kh; ++ky)
      for (int kx = 0; kx < d.kw; ++kx) {
        const int row = (c * d.kh + ky) * d.kw + kx;
        for (int oy = 0; oy < d.Ho; ++oy) {
          const int iy = oy * stride + ky - d.ph;
          for (int ox = 0; ox < d.Wo; ++ox) {
            const int ix = ox * stride + kx - d.pw;
            float val = 0.0f;
            if (iy >= 0 && iy < d.H && ix >= 0 && ix < d.W)
              val = x[(static_cast<std::int64_t>(c) * d.H + iy) * d.W + ix];
            cols(row, oy * d.Wo + ox) = val;
          }
        }
      }
}
void col2im_accum(const RowMat& cols, const ConvDims& d, int stride, float* gx) {
  for (int c = 0; c < d.Ci; ++c)
    for (int ky = 0; ky < d.kh; ++ky)
      for (int kx = 0; kx < d.kw; ++kx) {
        const int row = (c * d.kh + ky) * d.kw + kx;
        for (int oy = 0; oy < d.Ho; ++oy) {
          const int iy = oy * stride + ky - d.ph;
          if (iy < 0 || iy >= d.H) continue;
          for (int ox = 0; ox < d.Wo; ++ox) {
            const int ix = ox * stride + kx - d.pw;
            if (ix < 0 || ix >= d.W) continue;
            gx[(static_cast<std::int64_t>(c) * d.H + iy) * d.W + ix] += cols(row, oy * d.Wo + ox);
          }
        }
      }
}
}  // namespace

Var conv2d(const Var& x, const Var& w, const Var& b, int stride, int pad) {
  return conv2d(x, w, b, stride, pad, pad);
}

Var conv2d(const Var& x, const Var& w, const Var& b, int stride, int pad_h, int pad_w) {
  check(x->val.ndim() == 4 && w->val.ndim() == 4, "conv2d: x and w must be 4-d");
  ConvDims d;
  d.N = x->val.dim(0);
  d.Ci = x->val.dim(1);
  d.H = x->val.dim(2);
  d.W = x->val.dim(3);
  d.Co = w->val.dim(0);
  d.kh = w->val.dim(2);
  d.kw = w->val.dim(3);
  check(w->val.dim(1) == d.Ci, "conv2d: channel mismatch");
  d.ph = pad_h;
  d.pw = pad_w;
  d.Ho = (d.H + 2 * pad_h - d.kh) / stride + 1;
  d.Wo = (d.W + 2 * pad_w - d.kw) / stride + 1;
  check(d.Ho >= 1 && d.Wo >= 1, "conv2d: empty output");
  if (b) check(b->val.ndim() == 1 && b->val.dim(0) == d.Co, "conv2d: bias mismatch");

  const int K = d.Ci * d.kh * d.kw;
  Tensor out({d.N, d.Co, d.Ho, d.Wo});
  CMapMat W(w->val.v.data(), d.Co, K);
  RowMat cols(K, d.Ho * d.Wo);
  for (int n = 0; n < d.N; ++n) {
    im2col(&x->val.v[static_cast<size_t>(n) * d.Ci * d.H * d.W], d, stride, cols);
    MapMat Y(&out.v[static_cast<size_t>(n) * d.Co * d.Ho * d.Wo], d.Co, d.Ho * d.Wo);
    Y.noalias() = W * cols;
    if (b)
      Y.colwise() += Eigen::Map<const Eigen::VectorXf>(b->val.v.data(), d.Co);
  }
  std::vector<Var> parents{x, w};
  if (b) parents.push_back(b);
  return make_node(std::move(out), std::move(parents), [x, w, b, d, stride, K](Node& n) {
    Tensor& gx = x->grad_buf();
    Tensor& gw = w->grad_buf();
    CMapMat W(w->val.v.data(), d.Co, K);
    MapMat GW(gw.v.data(), d.Co, K);
    RowMat cols(K, d.Ho * d.Wo), gcols(K, d.Ho * d.Wo);
    for (int bn = 0; bn < d.N; ++bn) {
      CMapMat GY(&n.grad.v[static_cast<size_t>(bn) * d.Co * d.Ho * d.Wo], d.Co, d.Ho * d.Wo);
      im2col(&x->val.v[static_cast<size_t>(bn) * d.Ci * d.H * d.W], d, stride, cols);
      GW.noalias() += GY * cols.transpose();
      gcols.noalias() = W.transpose() * GY;
      col2im_accum(gcols, d, stride, &gx.v[static_cast<size_t>(bn) * d.Ci * d.H * d.W]);
      if (b) {
        Tensor& gb = b->grad_buf();
        Eigen::Map<Eigen::VectorXf>(gb.v.data(), d.Co) += GY.rowwise().sum();
      }
    }
  });
}

Var group_norm(const Var& x, int groups, const Var& gamma, const Var& beta, float eps) {
  check(x->val.ndim() == 4, "group_norm: x must be 4-d");
  const int N = x->val.dim(0), C = x->val.dim(1);
  const std::int64_t hw = static_cast<std::int64_t>(x->val.dim(2)) * x->val.dim(3);
  check(C % groups == 0, "group_norm: groups must divide channels");
  check(gamma->val.dim(0) == C && beta->val.dim(0) == C, "group_norm: affine mismatch");
  const int cpg = C / groups;
  const std::int64_t gsz = cpg * hw;

  Tensor out(x->val.shape);
  auto stats = std::make_shared<Tensor>(std::vector<int>{N, groups, 2});  // mean, inv-std
  for (int n = 0; n < N; ++n)
    for (int g = 0; g < groups; ++g) {
      const float* p = &x->val.v[static_cast<size_t>((static_cast<std::int64_t>(n) * C + g * cpg) * hw)];
      double mean = 0;
      for (std::int64_t i = 0; i < gsz; ++i) mean += p[i];
      mean /= static_cast<double>(gsz);
      double var = 0;
      for (std::int64_t i = 0; i < gsz; ++i) {
        const double dd = p[i] - mean;
        var += dd * dd;
      }
      var /= static_cast<double>(gsz);
      const float istd = 1.0f / std::sqrt(static_cast<float>(var) + eps);
      stats->at3(n, g, 0) = static_cast<float>(mean);
      stats->at3(n, g, 1) = istd;
      for (int c = 0; c < cpg; ++c) {
        const int ch = g * cpg + c;
        const float* xp = &x->val.v[static_cast<size_t>((static_cast<std::int64_t>(n) * C + ch) * hw)];
        float* op = &out.v[static_cast<size_t>((static_cast<std::int64_t>(n) * C + ch) * hw)];
        const float gm = gamma->val[ch], bt = beta->val[ch];
        for (std::int64_t i = 0; i < hw; ++i)
          op[i] = (xp[i] - static_cast<float>(mean)) * istd * gm + bt;
      }
    }
  return make_node(std::move(out), {x, gamma, beta},
                   [x, gamma, beta, stats, N, C, groups, cpg, hw, gsz](Node& nd) {
    Tensor& gx = x->grad_buf();
    Tensor& gg = gamma->grad_buf();
    Tensor& gb = beta->grad_buf();
    for (int n = 0; n < N; ++n)
      for (int g = 0; g < groups; ++g) {
        const float mean = stats->at3(n, g, 0);
        const float istd = stats->at3(n, g, 1);
        // accumulate the two reduction terms over the group
        double sum_dy_g = 0, sum_dy_xhat = 0;
        for (int c = 0; c < cpg; ++c) {
          const int ch = g * cpg + c;
          const float* xp = &x->val.v[static_cast<size_t>((static_cast<std::int64_t>(n) * C + ch) * hw)];
          const float* dy = &nd.grad.v[static_cast<size_t>((static_cast<std::int64_t>(n) * C + ch) * hw)];
          const float gm = gamma->val[ch];
          double sdy = 0, sdyx = 0;
          for (std::int64_t i = 0; i < hw; ++i) {
            const float xhat = (xp[i] - mean) * istd;
            sdy += dy[i];
            sdyx += static_cast<double>(dy[i]) * xhat;
            gg[ch] += dy[i] * xhat;
            gb[ch] += dy[i];
          }
          sum_dy_g += sdy * gm;
          sum_dy_xhat += sdyx * gm;
        }
        const float m1 = static_cast<float>(sum_dy_g / static_cast<double>(gsz));
        const float m2 = static_cast<float>(sum_dy_xhat / static_cast<double>(gsz));
        for (int c = 0; c < cpg; ++c) {
          const int ch = g * cpg + c;
          const float* xp = &x->val.v[static_cast<size_t>((static_cast<std::int64_t>(n) * C + ch) * hw)];
          const float* dy = &nd.grad.v[static_cast<size_t>((static_cast<std::int64_t>(n) * C + ch) * hw)];
          float* gp = &gx.v[static_cast<size_t>((static_cast<std::int64_t>(n) * C + ch) * hw)];
          const float gm = gamma->val[ch];
          for (std::int64_t i = 0; i < hw; ++i) {
            const float xhat = (xp[i] - mean) * istd;
            gp[i] += istd * (dy[i] * gm - m1 - xhat * m2);
          }
        }
      }
  });
}

Var layer_norm(const Var& x, const Var& gamma, const Var& beta, float eps) {
  const int C = x->val.shape.back();
  check(gamma->val.dim(0) == C && beta->val.dim(0) == C, "layer_norm: affine mismatch");
  const std::int64_t rows = x->val.numel() / C;
  Tensor out(x->val.shape);
  auto stats = std::make_shared<Tensor>(std::vector<int>{static_cast<int>(rows), 2});
  for (std::int64_t r = 0; r < rows; ++r) {
    const float* p = &x->val.v[static_cast<size_t>(r * C)];
    double mean = 0;
    for (int i = 0; i < C; ++i) mean += p[i];
    mean /= C;
    double var = 0;
    for (int i = 0; i < C; ++i) {
      const double d = p[i] - mean;
      var += d * d;
    }
    var /= C;
    const float istd = 1.0f / std::sqrt(static_cast<float>(var) + eps);
    stats->at2(static_cast<int>(r), 0) = static_cast<float>(mean);
    stats->at2(static_cast<int>(r), 1) = istd;
    float* op = &out.v[static_cast<size_t>(r * C)];
    for (int i = 0; i < C; ++i)
      op[i] = (p[i] - static_cast<float>(mean)) * istd * gamma->val[i] + beta->val[i];
  }
  return make_node(std::move(out), {x, gamma, beta}, [x, gamma, beta, stats, rows, C](Node& nd) {
    Tensor& gx = x->grad_buf();
    Tensor& gg = gamma->grad_buf();
    Tensor& gb = beta->grad_buf();
    for (std::int64_t r = 0; r < rows; ++r) {
      const float mean = stats->at2(static_cast<int>(r), 0);
      const float istd = stats->at2(static_cast<int>(r), 1);
      const float* xp = &x->val.v[static_cast<size_t>(r * C)];
      const float* dy = &nd.grad.v[static_cast<size_t>(r * C)];
      float* gp = &gx.v[static_cast<size_t>(r * C)];
      double s1 = 0, s2 = 0;
      for (int i = 0; i < C; ++i) {
        const float xhat = (xp[i] - mean) * istd;
        s1 += static_cast<double>(dy[i]) * gamma->val[i];
        s2 += static_cast<double>(dy[i]) * gamma->val[i] * xhat;
        gg[i] += dy[i] * xhat;
        gb[i] += dy[i];
      }
      const float m1 = static_cast<float>(s1 / C);
      const float m2 = static_cast<float>(s2 / C);
      for (int i = 0; i < C; ++i) {
        const float xhat = (xp[i] - mean) * istd;
        gp[i] += istd * (dy[i] * gamma->val[i] - m1 - xhat * m2);
      }
    }
  });
}

Var upsample_nearest2x(const Var& x) {
  check(x->val.ndim() == 4, "upsample: x must be 4-d");
  const int N = x->val.dim(0), C = x->val.dim(1), H = x->val.dim(2), W = x->val.dim(3);
  Tensor out({N, C, H * 2, W * 2});
  for (int n = 0; n < N; ++n)
    for (int c = 0; c < C; ++c)
      for (int y = 0; y < 2 * H; ++y)
        for (int xq = 0; xq < 2 * W; ++xq)
          out.at4(n, c, y, xq) = x->val.at4(n, c, y / 2, xq / 2);
  return make_node(std::move(out), {x}, [x, N, C, H, W](Node& nd) {
    Tensor& gx = x->grad_buf();
    for (int n = 0; n < N; ++n)
      for (int c = 0; c < C; ++c)
        for (int y = 0; y < 2 * H; ++y)
          for (int xq = 0; xq < 2 * W; ++xq)
            gx.at4(n, c, y / 2, xq / 2) += nd.grad.at4(n, c, y, xq);
  });
}

Var mse(const Var& a, const Var& b) {
  check(a->val.same_shape(b->val), "mse: shape mismatch");
  const std::int64_t n = a->val.numel();
  double acc = 0;
  for (std::int64_t i = 0; i < n; ++i) {
    const double d = static_cast<double>(a->val[i]) - b->val[i];
    acc += d * d;
  }
  Tensor out({1});
  out[0] = static_cast<float>(acc / static_cast<double>(n));
  return make_node(std::move(out), {a, b}, [a, b, n](Node& nd) {
    Tensor& ga = a->grad_buf();
    Tensor& gb = b->grad_buf();
    const float g = nd.grad[0] * 2.0f / static_cast<float>(n);
    for (std::int64_t i = 0; i < n; ++i) {
      const float d = a->val[i] - b->val[i];
      ga[i] += g * d;
      gb[i] -= g * d;
    }
  });
}

}  // namespace motionlab::ag
