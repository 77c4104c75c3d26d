#include "tracknet/primitives.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

namespace tracknet {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using ConstMapMat = Eigen::Map<const RowMat>;

[[noreturn]] void fail(PrimitiveKind kind, const std::string& what) {
  throw TensorError(std::string(to_string(kind)) + ": " + what);
}

void expect_inputs(PrimitiveKind kind, std::span<const Tensor4* const> inputs, std::size_t lo,
                   std::size_t hi) {
  if (inputs.size() < lo || inputs.size() > hi) {
    fail(kind, "expected " + std::to_string(lo) + (lo == hi ? "" : "-" + std::to_string(hi)) +
                   " inputs, got " + std::to_string(inputs.size()));
  }
}

void expect_same(PrimitiveKind kind, const Shape& a, const Shape& b) {
  if (!(a == b)) fail(kind, "shape mismatch " + a.str() + " vs " + b.str());
}

// Sigmoid clamped one ulp inside (0, 1) so saturated logits still yield a
// probability strictly between the bounds.
double stable_sigmoid(double x) {
  const double y = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
  return std::clamp(y, std::numeric_limits<double>::min(), std::nextafter(1.0, 0.0));
}

// ---- broadcasting helpers -------------------------------------------------

Shape broadcast_shape(PrimitiveKind kind, const Shape& a, const Shape& b) {
  Shape out;
  for (int axis = 0; axis < 4; ++axis) {
    const int da = a.dim(axis);
    const int db = b.dim(axis);
    int d = 0;
    if (da == db) d = da;
    else if (da == 1) d = db;
    else if (db == 1) d = da;
    else fail(kind, "cannot broadcast " + a.str() + " with " + b.str() + " on axis " + std::to_string(axis));
    switch (axis) {
      case 0: out.n = d; break;
      case 1: out.c = d; break;
      case 2: out.h = d; break;
      default: out.w = d; break;
    }
  }
  return out;
}

std::array<std::size_t, 4> broadcast_strides(const Shape& s) {
  std::array<std::size_t, 4> st{static_cast<std::size_t>(s.c) * s.h * s.w,
                                static_cast<std::size_t>(s.h) * s.w, static_cast<std::size_t>(s.w), 1};
  if (s.n == 1) st[0] = 0;
  if (s.c == 1) st[1] = 0;
  if (s.h == 1) st[2] = 0;
  if (s.w == 1) st[3] = 0;
  return st;
}

template <typename Fn>
void for_each_broadcast(const Shape& out, const Shape& a, const Shape& b, Fn&& fn) {
  const auto sa = broadcast_strides(a);
  const auto sb = broadcast_strides(b);
  std::size_t o = 0;
  for (int n = 0; n < out.n; ++n)
    for (int c = 0; c < out.c; ++c)
      for (int h = 0; h < out.h; ++h)
        for (int w = 0; w < out.w; ++w, ++o) {
          fn(o, n * sa[0] + c * sa[1] + h * sa[2] + w * sa[3],
             n * sb[0] + c * sb[1] + h * sb[2] + w * sb[3]);
        }
}

// ---- conv2d ---------------------------------------------------------------

struct ConvGeometry {
  int cin, h, w, cout, kh, kw, stride, pad, hout, wout;
};

ConvGeometry conv_geometry(PrimitiveKind kind, const Tensor4& x, const Tensor4& weight,
                           const Tensor4* bias, const OpParams& p) {
  const Shape& xs = x.shape();
  const Shape& ws = weight.shape();
  if (ws.c != xs.c) {
    fail(kind, "input has " + std::to_string(xs.c) + " channels but weight " + ws.str() + " expects " +
                   std::to_string(ws.c));
  }
  if (p.stride < 1 || p.padding < 0) fail(kind, "stride must be >= 1 and padding >= 0");
  if (bias != nullptr && !(bias->shape() == Shape{1, ws.n, 1, 1})) {
    fail(kind, "bias shape " + bias->shape().str() + " must be (1, " + std::to_string(ws.n) + ", 1, 1)");
  }
  ConvGeometry g{xs.c, xs.h, xs.w, ws.n, ws.h, ws.w, p.stride, p.padding, 0, 0};
  g.hout = (g.h + 2 * g.pad - g.kh) / g.stride + 1;
  g.wout = (g.w + 2 * g.pad - g.kw) / g.stride + 1;
  if (g.hout <= 0 || g.wout <= 0) {
    fail(kind, "kernel " + std::to_string(g.kh) + "x" + std::to_string(g.kw) + " larger than padded input " +
                   xs.str());
  }
  return g;
}

void im2col(const double* x, const ConvGeometry& g, double* cols) {
  const int plane = g.hout * g.wout;
  for (int c = 0; c < g.cin; ++c) {
    const double* xc = x + static_cast<std::size_t>(c) * g.h * g.w;
    for (int ky = 0; ky < g.kh; ++ky) {
      for (int kx = 0; kx < g.kw; ++kx) {
        double* row = cols + (static_cast<std::size_t>(c) * g.kh * g.kw + ky * g.kw + kx) * plane;
        for (int oy = 0; oy < g.hout; ++oy) {
          const int iy = oy * g.stride - g.pad + ky;
          double* dst = row + static_cast<std::size_t>(oy) * g.wout;
          if (iy < 0 || iy >= g.h) {
            std::fill_n(dst, g.wout, 0.0);
            continue;
          }
          const double* src = xc + static_cast<std::size_t>(iy) * g.w;
          for (int ox = 0; ox < g.wout; ++ox) {
            const int ix = ox * g.stride - g.pad + kx;
            dst[ox] = (ix >= 0 && ix < g.w) ? src[ix] : 0.0;
          }
        }
      }
    }
  }
}

void col2im(const double* cols, const ConvGeometry& g, double* dx) {
  const int plane = g.hout * g.wout;
  for (int c = 0; c < g.cin; ++c) {
    double* xc = dx + static_cast<std::size_t>(c) * g.h * g.w;
    for (int ky = 0; ky < g.kh; ++ky) {
      for (int kx = 0; kx < g.kw; ++kx) {
        const double* row = cols + (static_cast<std::size_t>(c) * g.kh * g.kw + ky * g.kw + kx) * plane;
        for (int oy = 0; oy < g.hout; ++oy) {
          const int iy = oy * g.stride - g.pad + ky;
          if (iy < 0 || iy >= g.h) continue;
          const double* src = row + static_cast<std::size_t>(oy) * g.wout;
          double* dst = xc + static_cast<std::size_t>(iy) * g.w;
          for (int ox = 0; ox < g.wout; ++ox) {
            const int ix = ox * g.stride - g.pad + kx;
            if (ix >= 0 && ix < g.w) dst[ix] += src[ox];
          }
        }
      }
    }
  }
}

bool is_pointwise_1x1(const ConvGeometry& g) {
  return g.kh == 1 && g.kw == 1 && g.stride == 1 && g.pad == 0;
}

Tensor4 conv2d_forward(const Tensor4& x, const Tensor4& weight, const Tensor4* bias, const OpParams& p) {
  const auto g = conv_geometry(PrimitiveKind::conv2d, x, weight, bias, p);
  const int n = x.shape().n;
  const int k = g.cin * g.kh * g.kw;
  const int plane = g.hout * g.wout;
  Tensor4 out(Shape{n, g.cout, g.hout, g.wout});
  AlignedBuffer cols(is_pointwise_1x1(g) ? 0 : static_cast<std::size_t>(k) * plane);
  ConstMapMat wm(weight.data().data(), g.cout, k);
  for (int s = 0; s < n; ++s) {
    const double* xs = x.data().data() + x.offset(s, 0, 0, 0);
    const double* colp = xs;
    if (!cols.empty()) {
      im2col(xs, g, cols.data());
      colp = cols.data();
    }
    MapMat om(out.data().data() + out.offset(s, 0, 0, 0), g.cout, plane);
    om.noalias() = wm * ConstMapMat(colp, k, plane);
    if (bias != nullptr) {
      for (int co = 0; co < g.cout; ++co) om.row(co).array() += (*bias)[co];
    }
  }
  return out;
}

void conv2d_backward(const Tensor4& x, const Tensor4& weight, const Tensor4* bias, const OpParams& p,
                     const Tensor4& gout, Tensor4* gx, Tensor4* gw, Tensor4* gb) {
  const auto g = conv_geometry(PrimitiveKind::conv2d, x, weight, bias, p);
  const int n = x.shape().n;
  const int k = g.cin * g.kh * g.kw;
  const int plane = g.hout * g.wout;
  const bool pointwise = is_pointwise_1x1(g);
  AlignedBuffer cols(pointwise ? 0 : static_cast<std::size_t>(k) * plane);
  AlignedBuffer dcols(gx != nullptr && !pointwise ? static_cast<std::size_t>(k) * plane : 0);
  ConstMapMat wm(weight.data().data(), g.cout, k);
  for (int s = 0; s < n; ++s) {
    ConstMapMat gm(gout.data().data() + gout.offset(s, 0, 0, 0), g.cout, plane);
    const double* xs = x.data().data() + x.offset(s, 0, 0, 0);
    if (gw != nullptr) {
      const double* colp = xs;
      if (!pointwise) {
        im2col(xs, g, cols.data());
        colp = cols.data();
      }
      MapMat(gw->data().data(), g.cout, k).noalias() += gm * ConstMapMat(colp, k, plane).transpose();
    }
    if (gb != nullptr) {
      for (int co = 0; co < g.cout; ++co) (*gb)[co] += gm.row(co).sum();
    }
    if (gx != nullptr) {
      double* dxs = gx->data().data() + gx->offset(s, 0, 0, 0);
      if (pointwise) {
        MapMat(dxs, k, plane).noalias() += wm.transpose() * gm;
      } else {
        MapMat(dcols.data(), k, plane).noalias() = wm.transpose() * gm;
        col2im(dcols.data(), g, dxs);
      }
    }
  }
}

// ---- normalization --------------------------------------------------------

Tensor4 batch_norm_forward(std::span<const Tensor4* const> in, const OpParams& p, std::vector<Tensor4>& aux) {
  const PrimitiveKind kind = PrimitiveKind::batch_norm2d;
  const Tensor4& x = *in[0];
  const Shape& s = x.shape();
  const Shape cs{1, s.c, 1, 1};
  for (std::size_t i = 1; i < 5; ++i) {
    if (!(in[i]->shape() == cs)) fail(kind, "parameter " + std::to_string(i) + " shape " + in[i]->shape().str() + " must be " + cs.str());
  }
  const Tensor4& gamma = *in[1];
  const Tensor4& beta = *in[2];
  const std::size_t plane = static_cast<std::size_t>(s.h) * s.w;
  const std::size_t count = plane * s.n;
  Tensor4 mean(cs);
  Tensor4 invstd(cs);
  Tensor4 unbiased(cs);
  if (p.mode == Mode::train) {
    if (count < 2) fail(kind, "train mode needs at least 2 values per channel, input " + s.str());
    for (int c = 0; c < s.c; ++c) {
      double sum = 0.0;
      for (int n = 0; n < s.n; ++n) {
        const double* xp = x.data().data() + x.offset(n, c, 0, 0);
        for (std::size_t i = 0; i < plane; ++i) sum += xp[i];
      }
      const double mu = sum / static_cast<double>(count);
      double sq = 0.0;
      for (int n = 0; n < s.n; ++n) {
        const double* xp = x.data().data() + x.offset(n, c, 0, 0);
        for (std::size_t i = 0; i < plane; ++i) sq += (xp[i] - mu) * (xp[i] - mu);
      }
      const double var = sq / static_cast<double>(count);
      mean[c] = mu;
      invstd[c] = 1.0 / std::sqrt(var + p.eps);
      unbiased[c] = sq / static_cast<double>(count - 1);
    }
  } else {
    for (int c = 0; c < s.c; ++c) {
      mean[c] = (*in[3])[c];
      invstd[c] = 1.0 / std::sqrt((*in[4])[c] + p.eps);
      unbiased[c] = (*in[4])[c];
    }
  }
  Tensor4 out(s);
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      const double* xp = x.data().data() + x.offset(n, c, 0, 0);
      double* op = out.data().data() + out.offset(n, c, 0, 0);
      const double a = gamma[c] * invstd[c];
      const double b = beta[c] - a * mean[c];
      for (std::size_t i = 0; i < plane; ++i) op[i] = a * xp[i] + b;
    }
  }
  aux = {std::move(mean), std::move(invstd), std::move(unbiased)};
  return out;
}

void batch_norm_backward(std::span<const Tensor4* const> in, const OpParams& p, const std::vector<Tensor4>& aux,
                         const Tensor4& gout, std::span<Tensor4* const> gin) {
  const Tensor4& x = *in[0];
  const Tensor4& gamma = *in[1];
  const Shape& s = x.shape();
  const std::size_t plane = static_cast<std::size_t>(s.h) * s.w;
  const double count = static_cast<double>(plane * s.n);
  const Tensor4& mean = aux[0];
  const Tensor4& invstd = aux[1];
  for (int c = 0; c < s.c; ++c) {
    double sum_g = 0.0;
    double sum_gx = 0.0;
    for (int n = 0; n < s.n; ++n) {
      const double* xp = x.data().data() + x.offset(n, c, 0, 0);
      const double* gp = gout.data().data() + gout.offset(n, c, 0, 0);
      for (std::size_t i = 0; i < plane; ++i) {
        sum_g += gp[i];
        sum_gx += gp[i] * (xp[i] - mean[c]) * invstd[c];
      }
    }
    if (gin[1] != nullptr) (*gin[1])[c] += sum_gx;
    if (gin[2] != nullptr) (*gin[2])[c] += sum_g;
    if (gin[0] == nullptr) continue;
    const double gi = gamma[c] * invstd[c];
    for (int n = 0; n < s.n; ++n) {
      const double* xp = x.data().data() + x.offset(n, c, 0, 0);
      const double* gp = gout.data().data() + gout.offset(n, c, 0, 0);
      double* dp = gin[0]->data().data() + gin[0]->offset(n, c, 0, 0);
      if (p.mode == Mode::train) {
        for (std::size_t i = 0; i < plane; ++i) {
          const double xhat = (xp[i] - mean[c]) * invstd[c];
          dp[i] += gi * (gp[i] - sum_g / count - xhat * sum_gx / count);
        }
      } else {
        for (std::size_t i = 0; i < plane; ++i) dp[i] += gi * gp[i];
      }
    }
  }
}

Tensor4 layer_norm_forward(std::span<const Tensor4* const> in, const OpParams& p, std::vector<Tensor4>& aux) {
  const PrimitiveKind kind = PrimitiveKind::layer_norm;
  const Tensor4& x = *in[0];
  const int d = x.shape().w;
  const Shape ps{1, 1, 1, d};
  if (!(in[1]->shape() == ps) || !(in[2]->shape() == ps)) {
    fail(kind, "gamma/beta must have shape " + ps.str() + ", got " + in[1]->shape().str() + " and " + in[2]->shape().str());
  }
  const std::size_t rows = x.size() / static_cast<std::size_t>(d);
  Tensor4 out(x.shape());
  Tensor4 stats(Shape{1, 1, static_cast<int>(rows), 2});
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xp = x.data().data() + r * d;
    double mu = 0.0;
    for (int i = 0; i < d; ++i) mu += xp[i];
    mu /= d;
    double var = 0.0;
    for (int i = 0; i < d; ++i) var += (xp[i] - mu) * (xp[i] - mu);
    var /= d;
    const double inv = 1.0 / std::sqrt(var + p.eps);
    double* op = out.data().data() + r * d;
    for (int i = 0; i < d; ++i) op[i] = (*in[1])[i] * (xp[i] - mu) * inv + (*in[2])[i];
    stats[2 * r] = mu;
    stats[2 * r + 1] = inv;
  }
  aux = {std::move(stats)};
  return out;
}

void layer_norm_backward(std::span<const Tensor4* const> in, const std::vector<Tensor4>& aux, const Tensor4& gout,
                         std::span<Tensor4* const> gin) {
  const Tensor4& x = *in[0];
  const Tensor4& gamma = *in[1];
  const int d = x.shape().w;
  const std::size_t rows = x.size() / static_cast<std::size_t>(d);
  const Tensor4& stats = aux[0];
  std::vector<double> xhat(d);
  std::vector<double> gh(d);
  for (std::size_t r = 0; r < rows; ++r) {
    const double mu = stats[2 * r];
    const double inv = stats[2 * r + 1];
    const double* xp = x.data().data() + r * d;
    const double* gp = gout.data().data() + r * d;
    double sum_gh = 0.0;
    double sum_ghx = 0.0;
    for (int i = 0; i < d; ++i) {
      xhat[i] = (xp[i] - mu) * inv;
      gh[i] = gp[i] * gamma[i];
      sum_gh += gh[i];
      sum_ghx += gh[i] * xhat[i];
      if (gin[1] != nullptr) (*gin[1])[i] += gp[i] * xhat[i];
      if (gin[2] != nullptr) (*gin[2])[i] += gp[i];
    }
    if (gin[0] == nullptr) continue;
    double* dp = gin[0]->data().data() + r * d;
    for (int i = 0; i < d; ++i) dp[i] += inv * (gh[i] - sum_gh / d - xhat[i] * sum_ghx / d);
  }
}

// ---- token algebra --------------------------------------------------------

Tensor4 matmul_forward(const Tensor4& a, const Tensor4& b, const OpParams& p) {
  const PrimitiveKind kind = PrimitiveKind::matmul;
  const Shape& as = a.shape();
  const Shape& bs = b.shape();
  if (as.n != bs.n || as.c != bs.c) fail(kind, "batch dims differ: " + as.str() + " vs " + bs.str());
  const int m = as.h;
  const int k = as.w;
  const int kb = p.transpose_rhs ? bs.w : bs.h;
  const int nn = p.transpose_rhs ? bs.h : bs.w;
  if (k != kb) fail(kind, "inner dims differ: " + as.str() + " x " + bs.str() + (p.transpose_rhs ? "^T" : ""));
  Tensor4 out(Shape{as.n, as.c, m, nn});
  for (int i = 0; i < as.n; ++i) {
    for (int j = 0; j < as.c; ++j) {
      ConstMapMat am(a.data().data() + a.offset(i, j, 0, 0), m, k);
      ConstMapMat bm(b.data().data() + b.offset(i, j, 0, 0), bs.h, bs.w);
      MapMat om(out.data().data() + out.offset(i, j, 0, 0), m, nn);
      if (p.transpose_rhs) om.noalias() = am * bm.transpose();
      else om.noalias() = am * bm;
    }
  }
  return out;
}

void matmul_backward(const Tensor4& a, const Tensor4& b, const OpParams& p, const Tensor4& gout, Tensor4* ga,
                     Tensor4* gb) {
  const Shape& as = a.shape();
  const Shape& bs = b.shape();
  const int m = as.h;
  const int k = as.w;
  const int nn = gout.shape().w;
  for (int i = 0; i < as.n; ++i) {
    for (int j = 0; j < as.c; ++j) {
      ConstMapMat am(a.data().data() + a.offset(i, j, 0, 0), m, k);
      ConstMapMat bm(b.data().data() + b.offset(i, j, 0, 0), bs.h, bs.w);
      ConstMapMat gm(gout.data().data() + gout.offset(i, j, 0, 0), m, nn);
      if (ga != nullptr) {
        MapMat gam(ga->data().data() + ga->offset(i, j, 0, 0), m, k);
        if (p.transpose_rhs) gam.noalias() += gm * bm;
        else gam.noalias() += gm * bm.transpose();
      }
      if (gb != nullptr) {
        MapMat gbm(gb->data().data() + gb->offset(i, j, 0, 0), bs.h, bs.w);
        if (p.transpose_rhs) gbm.noalias() += gm.transpose() * am;
        else gbm.noalias() += am.transpose() * gm;
      }
    }
  }
}

Tensor4 linear_forward(std::span<const Tensor4* const> in) {
  const PrimitiveKind kind = PrimitiveKind::linear;
  const Tensor4& x = *in[0];
  const Tensor4& w = *in[1];
  const int din = x.shape().w;
  if (w.shape().n != 1 || w.shape().c != 1 || w.shape().h != din) {
    fail(kind, "weight " + w.shape().str() + " incompatible with input " + x.shape().str());
  }
  const int dout = w.shape().w;
  if (in.size() == 3 && !(in[2]->shape() == Shape{1, 1, 1, dout})) {
    fail(kind, "bias shape " + in[2]->shape().str() + " must be (1, 1, 1, " + std::to_string(dout) + ")");
  }
  const Shape& xs = x.shape();
  const int rows = xs.n * xs.c * xs.h;
  Tensor4 out(Shape{xs.n, xs.c, xs.h, dout});
  MapMat om(out.data().data(), rows, dout);
  om.noalias() = ConstMapMat(x.data().data(), rows, din) * ConstMapMat(w.data().data(), din, dout);
  if (in.size() == 3) {
    om.rowwise() += Eigen::Map<const Eigen::RowVectorXd>(in[2]->data().data(), dout);
  }
  return out;
}

void linear_backward(std::span<const Tensor4* const> in, const Tensor4& gout, std::span<Tensor4* const> gin) {
  const Tensor4& x = *in[0];
  const Tensor4& w = *in[1];
  const int din = x.shape().w;
  const int dout = w.shape().w;
  const int rows = static_cast<int>(x.size() / din);
  ConstMapMat gm(gout.data().data(), rows, dout);
  if (gin[0] != nullptr) {
    MapMat(gin[0]->data().data(), rows, din).noalias() += gm * ConstMapMat(w.data().data(), din, dout).transpose();
  }
  if (gin[1] != nullptr) {
    MapMat(gin[1]->data().data(), din, dout).noalias() += ConstMapMat(x.data().data(), rows, din).transpose() * gm;
  }
  if (in.size() == 3 && gin[2] != nullptr) {
    double* gb = gin[2]->data().data();
    for (int r = 0; r < rows; ++r)
      for (int j = 0; j < dout; ++j) gb[j] += gm(r, j);
  }
}

Tensor4 softmax_forward(const Tensor4& x) {
  const int d = x.shape().w;
  const std::size_t rows = x.size() / static_cast<std::size_t>(d);
  Tensor4 out(x.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xp = x.data().data() + r * d;
    double* op = out.data().data() + r * d;
    const double mx = *std::max_element(xp, xp + d);
    double z = 0.0;
    for (int i = 0; i < d; ++i) {
      op[i] = std::exp(xp[i] - mx);
      z += op[i];
    }
    for (int i = 0; i < d; ++i) op[i] /= z;
  }
  return out;
}

// Output axis i takes input axis perm[i].
Shape permuted_shape(const Shape& s, const std::array<int, 4>& perm) {
  return Shape{s.dim(perm[0]), s.dim(perm[1]), s.dim(perm[2]), s.dim(perm[3])};
}

void validate_perm(const std::array<int, 4>& perm) {
  std::array<bool, 4> seen{};
  for (int a : perm) {
    if (a < 0 || a > 3 || seen[a]) fail(PrimitiveKind::permute, "invalid axis permutation");
    seen[a] = true;
  }
}

// Calls fn(out_index, in_index) for every element.
template <typename Fn>
void for_each_permuted(const Shape& in, const std::array<int, 4>& perm, Fn&& fn) {
  const std::array<std::size_t, 4> in_strides{static_cast<std::size_t>(in.c) * in.h * in.w,
                                              static_cast<std::size_t>(in.h) * in.w,
                                              static_cast<std::size_t>(in.w), 1};
  const Shape out = permuted_shape(in, perm);
  const std::array<std::size_t, 4> st{in_strides[perm[0]], in_strides[perm[1]], in_strides[perm[2]],
                                      in_strides[perm[3]]};
  std::size_t o = 0;
  for (int a = 0; a < out.n; ++a)
    for (int b = 0; b < out.c; ++b)
      for (int c = 0; c < out.h; ++c)
        for (int d = 0; d < out.w; ++d, ++o) fn(o, a * st[0] + b * st[1] + c * st[2] + d * st[3]);
}

// patch element index for pixel (y, x): (patch, element)
struct PatchIndex {
  int patch;
  int element;
};

inline PatchIndex patch_of(int y, int x, int p, int patches_w) {
  return {(y / p) * patches_w + (x / p), (y % p) * p + (x % p)};
}

}  // namespace

std::string_view to_string(PrimitiveKind kind) {
  switch (kind) {
    case PrimitiveKind::conv2d: return "conv2d";
    case PrimitiveKind::relu: return "relu";
    case PrimitiveKind::sigmoid: return "sigmoid";
    case PrimitiveKind::tanh: return "tanh";
    case PrimitiveKind::add: return "add";
    case PrimitiveKind::subtract: return "subtract";
    case PrimitiveKind::multiply: return "multiply";
    case PrimitiveKind::matmul: return "matmul";
    case PrimitiveKind::layer_norm: return "layer_norm";
    case PrimitiveKind::softmax: return "softmax";
    case PrimitiveKind::concat: return "concat";
    case PrimitiveKind::dropout: return "dropout";
    case PrimitiveKind::pixel_shuffle: return "pixel_shuffle";
    case PrimitiveKind::max_pool2d: return "max_pool2d";
    case PrimitiveKind::nearest_upsample: return "nearest_upsample";
    case PrimitiveKind::batch_norm2d: return "batch_norm2d";
    case PrimitiveKind::linear: return "linear";
    case PrimitiveKind::patchify: return "patchify";
    case PrimitiveKind::unpatchify: return "unpatchify";
    case PrimitiveKind::abs: return "abs";
    case PrimitiveKind::affine: return "affine";
    case PrimitiveKind::reciprocal: return "reciprocal";
    case PrimitiveKind::channel_mean: return "channel_mean";
    case PrimitiveKind::slice_channels: return "slice_channels";
    case PrimitiveKind::reshape: return "reshape";
    case PrimitiveKind::permute: return "permute";
    case PrimitiveKind::sum: return "sum";
    case PrimitiveKind::wbce: return "wbce";
  }
  return "unknown";
}

std::vector<double> dropout_mask(std::size_t count, double rate, std::uint64_t seed) {
  if (rate < 0.0 || rate >= 1.0) {
    throw TensorError("dropout: rate " + std::to_string(rate) + " outside [0, 1)");
  }
  std::vector<double> mask(count, 1.0);
  if (rate == 0.0) return mask;
  std::mt19937_64 gen(seed);
  const double keep = 1.0 / (1.0 - rate);
  for (auto& m : mask) {
    const double u = static_cast<double>(gen() >> 11) * 0x1.0p-53;
    m = u < rate ? 0.0 : keep;
  }
  return mask;
}

Tensor4 primitive_forward(PrimitiveKind kind, std::span<const Tensor4* const> in, const OpParams& p,
                          std::vector<Tensor4>& aux) {
  aux.clear();
  for (std::size_t i = 0; i < in.size(); ++i) {
    if (!in[i]->all_finite()) fail(kind, "non-finite value in input " + std::to_string(i) + " " + in[i]->shape().str());
  }
  switch (kind) {
    case PrimitiveKind::conv2d: {
      expect_inputs(kind, in, 2, 3);
      return conv2d_forward(*in[0], *in[1], in.size() == 3 ? in[2] : nullptr, p);
    }
    case PrimitiveKind::relu:
    case PrimitiveKind::sigmoid:
    case PrimitiveKind::tanh:
    case PrimitiveKind::abs:
    case PrimitiveKind::affine:
    case PrimitiveKind::reciprocal: {
      expect_inputs(kind, in, 1, 1);
      Tensor4 out(in[0]->shape());
      const auto x = in[0]->data();
      auto y = out.data();
      for (std::size_t i = 0; i < x.size(); ++i) {
        const double v = x[i];
        switch (kind) {
          case PrimitiveKind::relu: y[i] = v > 0.0 ? v : 0.0; break;
          case PrimitiveKind::sigmoid: y[i] = stable_sigmoid(v); break;
          case PrimitiveKind::tanh: y[i] = std::tanh(v); break;
          case PrimitiveKind::abs: y[i] = std::abs(v); break;
          case PrimitiveKind::affine: y[i] = p.scale * v + p.offset; break;
          default:
            if (v == 0.0) fail(kind, "division by zero");
            y[i] = 1.0 / v;
            break;
        }
      }
      return out;
    }
    case PrimitiveKind::add:
    case PrimitiveKind::subtract:
    case PrimitiveKind::multiply: {
      expect_inputs(kind, in, 2, 2);
      const Tensor4& a = *in[0];
      const Tensor4& b = *in[1];
      const Shape os = broadcast_shape(kind, a.shape(), b.shape());
      Tensor4 out(os);
      auto y = out.data();
      const auto av = a.data();
      const auto bv = b.data();
      auto apply = [&](std::size_t o, std::size_t ia, std::size_t ib) {
        if (kind == PrimitiveKind::add) y[o] = av[ia] + bv[ib];
        else if (kind == PrimitiveKind::subtract) y[o] = av[ia] - bv[ib];
        else y[o] = av[ia] * bv[ib];
      };
      if (a.shape() == b.shape()) {
        for (std::size_t i = 0; i < y.size(); ++i) apply(i, i, i);
      } else {
        for_each_broadcast(os, a.shape(), b.shape(), apply);
      }
      return out;
    }
    case PrimitiveKind::matmul:
      expect_inputs(kind, in, 2, 2);
      return matmul_forward(*in[0], *in[1], p);
    case PrimitiveKind::layer_norm:
      expect_inputs(kind, in, 3, 3);
      return layer_norm_forward(in, p, aux);
    case PrimitiveKind::softmax:
      expect_inputs(kind, in, 1, 1);
      return softmax_forward(*in[0]);
    case PrimitiveKind::concat: {
      if (in.empty()) fail(kind, "needs at least one input");
      Shape os = in[0]->shape();
      os.c = 0;
      for (const Tensor4* t : in) {
        const Shape& s = t->shape();
        if (s.n != os.n || s.h != os.h || s.w != os.w) {
          fail(kind, "input " + s.str() + " does not match (n, h, w) of " + in[0]->shape().str());
        }
        os.c += s.c;
      }
      Tensor4 out(os);
      const std::size_t plane = static_cast<std::size_t>(os.h) * os.w;
      for (int n = 0; n < os.n; ++n) {
        double* dst = out.data().data() + out.offset(n, 0, 0, 0);
        for (const Tensor4* t : in) {
          const std::size_t len = plane * t->shape().c;
          std::copy_n(t->data().data() + t->offset(n, 0, 0, 0), len, dst);
          dst += len;
        }
      }
      return out;
    }
    case PrimitiveKind::dropout: {
      expect_inputs(kind, in, 1, 1);
      if (p.rate < 0.0 || p.rate >= 1.0) fail(kind, "rate " + std::to_string(p.rate) + " outside [0, 1)");
      if (p.mode == Mode::infer || p.rate == 0.0) return *in[0];
      Tensor4 mask(in[0]->shape(), dropout_mask(in[0]->size(), p.rate, p.seed));
      Tensor4 out(in[0]->shape());
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = (*in[0])[i] * mask[i];
      aux = {std::move(mask)};
      return out;
    }
    case PrimitiveKind::pixel_shuffle: {
      expect_inputs(kind, in, 1, 1);
      const Shape& s = in[0]->shape();
      const int r = p.factor;
      if (r < 1 || s.c % (r * r) != 0) {
        fail(kind, "channels " + std::to_string(s.c) + " not divisible by factor^2 = " + std::to_string(r * r));
      }
      const int co = s.c / (r * r);
      Tensor4 out(Shape{s.n, co, s.h * r, s.w * r});
      for (int n = 0; n < s.n; ++n)
        for (int c = 0; c < co; ++c)
          for (int y = 0; y < s.h * r; ++y)
            for (int x = 0; x < s.w * r; ++x)
              out.at(n, c, y, x) = in[0]->at(n, c * r * r + r * (y % r) + (x % r), y / r, x / r);
      return out;
    }
    case PrimitiveKind::max_pool2d: {
      expect_inputs(kind, in, 1, 1);
      const Shape& s = in[0]->shape();
      if (s.h % 2 != 0 || s.w % 2 != 0) fail(kind, "spatial size " + s.str() + " must be even");
      Tensor4 out(Shape{s.n, s.c, s.h / 2, s.w / 2});
      const Tensor4& x = *in[0];
      for (int n = 0; n < s.n; ++n)
        for (int c = 0; c < s.c; ++c)
          for (int y = 0; y < s.h / 2; ++y)
            for (int xx = 0; xx < s.w / 2; ++xx) {
              out.at(n, c, y, xx) = std::max({x.at(n, c, 2 * y, 2 * xx), x.at(n, c, 2 * y, 2 * xx + 1),
                                              x.at(n, c, 2 * y + 1, 2 * xx), x.at(n, c, 2 * y + 1, 2 * xx + 1)});
            }
      return out;
    }
    case PrimitiveKind::nearest_upsample: {
      expect_inputs(kind, in, 1, 1);
      const Shape& s = in[0]->shape();
      Tensor4 out(Shape{s.n, s.c, s.h * 2, s.w * 2});
      for (int n = 0; n < s.n; ++n)
        for (int c = 0; c < s.c; ++c)
          for (int y = 0; y < s.h * 2; ++y) {
            const double* src = in[0]->data().data() + in[0]->offset(n, c, y / 2, 0);
            double* dst = out.data().data() + out.offset(n, c, y, 0);
            for (int x = 0; x < s.w * 2; ++x) dst[x] = src[x / 2];
          }
      return out;
    }
    case PrimitiveKind::batch_norm2d:
      expect_inputs(kind, in, 5, 5);
      return batch_norm_forward(in, p, aux);
    case PrimitiveKind::linear:
      expect_inputs(kind, in, 2, 3);
      return linear_forward(in);
    case PrimitiveKind::patchify: {
      expect_inputs(kind, in, 1, 1);
      const Shape& s = in[0]->shape();
      const int pp = p.factor;
      if (pp < 1 || s.h % pp != 0 || s.w % pp != 0) {
        fail(kind, "spatial size " + s.str() + " not divisible by patch " + std::to_string(pp));
      }
      const int pw = s.w / pp;
      Tensor4 out(Shape{s.n, s.c, (s.h / pp) * pw, pp * pp});
      for (int n = 0; n < s.n; ++n)
        for (int c = 0; c < s.c; ++c)
          for (int y = 0; y < s.h; ++y)
            for (int x = 0; x < s.w; ++x) {
              const auto idx = patch_of(y, x, pp, pw);
              out.at(n, c, idx.patch, idx.element) = in[0]->at(n, c, y, x);
            }
      return out;
    }
    case PrimitiveKind::unpatchify: {
      expect_inputs(kind, in, 1, 1);
      const Shape& s = in[0]->shape();
      const int pp = p.factor;
      if (pp < 1 || p.out_h % pp != 0 || p.out_w % pp != 0 || s.w != pp * pp ||
          s.h != (p.out_h / pp) * (p.out_w / pp)) {
        fail(kind, "tokens " + s.str() + " incompatible with patch " + std::to_string(pp) + " and target " +
                       std::to_string(p.out_h) + "x" + std::to_string(p.out_w));
      }
      const int pw = p.out_w / pp;
      Tensor4 out(Shape{s.n, s.c, p.out_h, p.out_w});
      for (int n = 0; n < s.n; ++n)
        for (int c = 0; c < s.c; ++c)
          for (int y = 0; y < p.out_h; ++y)
            for (int x = 0; x < p.out_w; ++x) {
              const auto idx = patch_of(y, x, pp, pw);
              out.at(n, c, y, x) = in[0]->at(n, c, idx.patch, idx.element);
            }
      return out;
    }
    case PrimitiveKind::channel_mean: {
      expect_inputs(kind, in, 1, 1);
      const Shape& s = in[0]->shape();
      Tensor4 out(Shape{s.n, 1, s.h, s.w});
      const std::size_t plane = static_cast<std::size_t>(s.h) * s.w;
      for (int n = 0; n < s.n; ++n) {
        double* dst = out.data().data() + out.offset(n, 0, 0, 0);
        for (int c = 0; c < s.c; ++c) {
          const double* src = in[0]->data().data() + in[0]->offset(n, c, 0, 0);
          for (std::size_t i = 0; i < plane; ++i) dst[i] += src[i];
        }
        for (std::size_t i = 0; i < plane; ++i) dst[i] /= s.c;
      }
      return out;
    }
    case PrimitiveKind::slice_channels: {
      expect_inputs(kind, in, 1, 1);
      return in[0]->channels(p.start, p.count);
    }
    case PrimitiveKind::reshape: {
      expect_inputs(kind, in, 1, 1);
      if (p.target.size() != in[0]->size()) {
        fail(kind, "cannot reshape " + in[0]->shape().str() + " to " + p.target.str());
      }
      return in[0]->reshaped(p.target);
    }
    case PrimitiveKind::permute: {
      expect_inputs(kind, in, 1, 1);
      validate_perm(p.perm);
      Tensor4 out(permuted_shape(in[0]->shape(), p.perm));
      const auto x = in[0]->data();
      auto y = out.data();
      for_each_permuted(in[0]->shape(), p.perm, [&](std::size_t o, std::size_t i) { y[o] = x[i]; });
      return out;
    }
    case PrimitiveKind::sum: {
      expect_inputs(kind, in, 1, 1);
      const auto x = in[0]->data();
      return Tensor4::scalar(std::accumulate(x.begin(), x.end(), 0.0));
    }
    case PrimitiveKind::wbce: {
      expect_inputs(kind, in, 2, 2);
      expect_same(kind, in[0]->shape(), in[1]->shape());
      const auto pv = in[0]->data();
      const auto yv = in[1]->data();
      double total = 0.0;
      for (std::size_t i = 0; i < pv.size(); ++i) {
        const double q = std::clamp(pv[i], kProbabilityClamp, 1.0 - kProbabilityClamp);
        total += (1.0 - q) * (1.0 - q) * yv[i] * std::log(q) + q * q * (1.0 - yv[i]) * std::log(1.0 - q);
      }
      return Tensor4::scalar(-total / static_cast<double>(pv.size()));
    }
  }
  fail(kind, "unhandled kind");
}

void primitive_backward(PrimitiveKind kind, std::span<const Tensor4* const> in, const OpParams& p,
                        const Tensor4& out, const std::vector<Tensor4>& aux, const Tensor4& g,
                        std::span<Tensor4* const> gin) {
  switch (kind) {
    case PrimitiveKind::conv2d:
      conv2d_backward(*in[0], *in[1], in.size() == 3 ? in[2] : nullptr, p, g, gin[0], gin[1],
                      in.size() == 3 ? gin[2] : nullptr);
      return;
    case PrimitiveKind::relu:
    case PrimitiveKind::sigmoid:
    case PrimitiveKind::tanh:
    case PrimitiveKind::abs:
    case PrimitiveKind::affine:
    case PrimitiveKind::reciprocal: {
      if (gin[0] == nullptr) return;
      const auto x = in[0]->data();
      const auto y = out.data();
      auto d = gin[0]->data();
      for (std::size_t i = 0; i < x.size(); ++i) {
        double local = 0.0;
        switch (kind) {
          case PrimitiveKind::relu: local = x[i] > 0.0 ? 1.0 : 0.0; break;
          case PrimitiveKind::sigmoid: local = y[i] * (1.0 - y[i]); break;
          case PrimitiveKind::tanh: local = 1.0 - y[i] * y[i]; break;
          case PrimitiveKind::abs: local = x[i] > 0.0 ? 1.0 : (x[i] < 0.0 ? -1.0 : 0.0); break;
          case PrimitiveKind::affine: local = p.scale; break;
          default: local = -y[i] * y[i]; break;
        }
        d[i] += g[i] * local;
      }
      return;
    }
    case PrimitiveKind::add:
    case PrimitiveKind::subtract:
    case PrimitiveKind::multiply: {
      const Tensor4& a = *in[0];
      const Tensor4& b = *in[1];
      const auto av = a.data();
      const auto bv = b.data();
      const auto gv = g.data();
      Tensor4* ga = gin[0];
      Tensor4* gb = gin[1];
      auto apply = [&](std::size_t o, std::size_t ia, std::size_t ib) {
        if (kind == PrimitiveKind::multiply) {
          if (ga != nullptr) (*ga)[ia] += gv[o] * bv[ib];
          if (gb != nullptr) (*gb)[ib] += gv[o] * av[ia];
        } else {
          if (ga != nullptr) (*ga)[ia] += gv[o];
          if (gb != nullptr) (*gb)[ib] += kind == PrimitiveKind::add ? gv[o] : -gv[o];
        }
      };
      if (a.shape() == b.shape()) {
        for (std::size_t i = 0; i < gv.size(); ++i) apply(i, i, i);
      } else {
        for_each_broadcast(out.shape(), a.shape(), b.shape(), apply);
      }
      return;
    }
    case PrimitiveKind::matmul:
      matmul_backward(*in[0], *in[1], p, g, gin[0], gin[1]);
      return;
    case PrimitiveKind::layer_norm:
      layer_norm_backward(in, aux, g, gin);
      return;
    case PrimitiveKind::softmax: {
      if (gin[0] == nullptr) return;
      const int d = out.shape().w;
      const std::size_t rows = out.size() / static_cast<std::size_t>(d);
      for (std::size_t r = 0; r < rows; ++r) {
        const double* yp = out.data().data() + r * d;
        const double* gp = g.data().data() + r * d;
        double dot = 0.0;
        for (int i = 0; i < d; ++i) dot += yp[i] * gp[i];
        double* dp = gin[0]->data().data() + r * d;
        for (int i = 0; i < d; ++i) dp[i] += yp[i] * (gp[i] - dot);
      }
      return;
    }
    case PrimitiveKind::concat: {
      const Shape& os = out.shape();
      const std::size_t plane = static_cast<std::size_t>(os.h) * os.w;
      for (int n = 0; n < os.n; ++n) {
        const double* src = g.data().data() + g.offset(n, 0, 0, 0);
        for (std::size_t i = 0; i < in.size(); ++i) {
          const std::size_t len = plane * in[i]->shape().c;
          if (gin[i] != nullptr) {
            double* dst = gin[i]->data().data() + gin[i]->offset(n, 0, 0, 0);
            for (std::size_t j = 0; j < len; ++j) dst[j] += src[j];
          }
          src += len;
        }
      }
      return;
    }
    case PrimitiveKind::dropout: {
      if (gin[0] == nullptr) return;
      if (aux.empty()) {
        for (std::size_t i = 0; i < g.size(); ++i) (*gin[0])[i] += g[i];
      } else {
        for (std::size_t i = 0; i < g.size(); ++i) (*gin[0])[i] += g[i] * aux[0][i];
      }
      return;
    }
    case PrimitiveKind::pixel_shuffle: {
      if (gin[0] == nullptr) return;
      const Shape& s = in[0]->shape();
      const int r = p.factor;
      const int co = s.c / (r * r);
      for (int n = 0; n < s.n; ++n)
        for (int c = 0; c < co; ++c)
          for (int y = 0; y < s.h * r; ++y)
            for (int x = 0; x < s.w * r; ++x)
              gin[0]->at(n, c * r * r + r * (y % r) + (x % r), y / r, x / r) += g.at(n, c, y, x);
      return;
    }
    case PrimitiveKind::max_pool2d: {
      if (gin[0] == nullptr) return;
      const Tensor4& x = *in[0];
      const Shape& os = out.shape();
      for (int n = 0; n < os.n; ++n)
        for (int c = 0; c < os.c; ++c)
          for (int y = 0; y < os.h; ++y)
            for (int xx = 0; xx < os.w; ++xx) {
              // first maximum in scan order receives the gradient
              int by = 2 * y;
              int bx = 2 * xx;
              double best = x.at(n, c, by, bx);
              for (int k = 1; k < 4; ++k) {
                const int yy = 2 * y + k / 2;
                const int xk = 2 * xx + k % 2;
                if (x.at(n, c, yy, xk) > best) {
                  best = x.at(n, c, yy, xk);
                  by = yy;
                  bx = xk;
                }
              }
              gin[0]->at(n, c, by, bx) += g.at(n, c, y, xx);
            }
      return;
    }
    case PrimitiveKind::nearest_upsample: {
      if (gin[0] == nullptr) return;
      const Shape& os = out.shape();
      for (int n = 0; n < os.n; ++n)
        for (int c = 0; c < os.c; ++c)
          for (int y = 0; y < os.h; ++y)
            for (int x = 0; x < os.w; ++x) gin[0]->at(n, c, y / 2, x / 2) += g.at(n, c, y, x);
      return;
    }
    case PrimitiveKind::batch_norm2d:
      batch_norm_backward(in, p, aux, g, gin);
      return;
    case PrimitiveKind::linear:
      linear_backward(in, g, gin);
      return;
    case PrimitiveKind::patchify: {
      if (gin[0] == nullptr) return;
      const Shape& s = in[0]->shape();
      const int pw = s.w / p.factor;
      for (int n = 0; n < s.n; ++n)
        for (int c = 0; c < s.c; ++c)
          for (int y = 0; y < s.h; ++y)
            for (int x = 0; x < s.w; ++x) {
              const auto idx = patch_of(y, x, p.factor, pw);
              gin[0]->at(n, c, y, x) += g.at(n, c, idx.patch, idx.element);
            }
      return;
    }
    case PrimitiveKind::unpatchify: {
      if (gin[0] == nullptr) return;
      const Shape& os = out.shape();
      const int pw = os.w / p.factor;
      for (int n = 0; n < os.n; ++n)
        for (int c = 0; c < os.c; ++c)
          for (int y = 0; y < os.h; ++y)
            for (int x = 0; x < os.w; ++x) {
              const auto idx = patch_of(y, x, p.factor, pw);
              gin[0]->at(n, c, idx.patch, idx.element) += g.at(n, c, y, x);
            }
      return;
    }
    case PrimitiveKind::channel_mean: {
      if (gin[0] == nullptr) return;
      const Shape& s = in[0]->shape();
      const std::size_t plane = static_cast<std::size_t>(s.h) * s.w;
      for (int n = 0; n < s.n; ++n) {
        const double* src = g.data().data() + g.offset(n, 0, 0, 0);
        for (int c = 0; c < s.c; ++c) {
          double* dst = gin[0]->data().data() + gin[0]->offset(n, c, 0, 0);
          for (std::size_t i = 0; i < plane; ++i) dst[i] += src[i] / s.c;
        }
      }
      return;
    }
    case PrimitiveKind::slice_channels: {
      if (gin[0] == nullptr) return;
      const Shape& s = out.shape();
      const std::size_t len = static_cast<std::size_t>(s.c) * s.h * s.w;
      for (int n = 0; n < s.n; ++n) {
        const double* src = g.data().data() + g.offset(n, 0, 0, 0);
        double* dst = gin[0]->data().data() + gin[0]->offset(n, p.start, 0, 0);
        for (std::size_t i = 0; i < len; ++i) dst[i] += src[i];
      }
      return;
    }
    case PrimitiveKind::reshape: {
      if (gin[0] == nullptr) return;
      for (std::size_t i = 0; i < g.size(); ++i) (*gin[0])[i] += g[i];
      return;
    }
    case PrimitiveKind::permute: {
      if (gin[0] == nullptr) return;
      const auto gv = g.data();
      auto d = gin[0]->data();
      for_each_permuted(in[0]->shape(), p.perm, [&](std::size_t o, std::size_t i) { d[i] += gv[o]; });
      return;
    }
    case PrimitiveKind::sum: {
      if (gin[0] == nullptr) return;
      const double gs = g.item();
      for (auto& v : gin[0]->data()) v += gs;
      return;
    }
    case PrimitiveKind::wbce: {
      const auto pv = in[0]->data();
      const auto yv = in[1]->data();
      const double scale = -g.item() / static_cast<double>(pv.size());
      for (std::size_t i = 0; i < pv.size(); ++i) {
        const double raw = pv[i];
        const double q = std::clamp(raw, kProbabilityClamp, 1.0 - kProbabilityClamp);
        const double y = yv[i];
        if (gin[0] != nullptr && raw == q) {
          const double dpos = -2.0 * (1.0 - q) * std::log(q) + (1.0 - q) * (1.0 - q) / q;
          const double dneg = 2.0 * q * std::log(1.0 - q) - q * q / (1.0 - q);
          (*gin[0])[i] += scale * (y * dpos + (1.0 - y) * dneg);
        }
        if (gin[1] != nullptr) {
          (*gin[1])[i] += scale * ((1.0 - q) * (1.0 - q) * std::log(q) - q * q * std::log(1.0 - q));
        }
      }
      return;
    }
  }
}

std::uint64_t primitive_macs(PrimitiveKind kind, std::span<const Tensor4* const> in, const OpParams&,
                             const Shape& out) {
  switch (kind) {
    case PrimitiveKind::conv2d: {
      const Shape& ws = in[1]->shape();
      return static_cast<std::uint64_t>(out.size()) * ws.c * ws.h * ws.w;
    }
    case PrimitiveKind::linear:
      return static_cast<std::uint64_t>(out.size()) * in[0]->shape().w;
    case PrimitiveKind::matmul:
      return static_cast<std::uint64_t>(out.size()) * in[0]->shape().w;
    default:
      return 0;
  }
}

}  // namespace tracknet
