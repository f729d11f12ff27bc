#include "nn_ops.hpp"

#include <cmath>
#include <cstring>
#include <limits>

#include "antilearn/error.hpp"

namespace antilearn::nn {

void im2col(const Tensor4& in, int sample, int kh, int kw, int pad, float* cols) {
  const int h = in.h, w = in.w, c = in.c;
  const int kcols = kh * kw * c;
  const float* src = in.sample(sample);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      float* row = cols + static_cast<size_t>(y * w + x) * kcols;
      int k = 0;
      for (int ky = 0; ky < kh; ++ky) {
        int sy = y + ky - pad;
        for (int kx = 0; kx < kw; ++kx) {
          int sx = x + kx - pad;
          if (sy < 0 || sy >= h || sx < 0 || sx >= w) {
            std::memset(row + k, 0, sizeof(float) * c);
          } else {
            std::memcpy(row + k, src + (static_cast<size_t>(sy) * w + sx) * c,
                        sizeof(float) * c);
          }
          k += c;
        }
      }
    }
  }
}

void Conv2d::init(const std::string& prefix, int kh_, int kw_, int cin_, int cout_, int pad_,
                  Rng& rng) {
  kh = kh_;
  kw = kw_;
  cin = cin_;
  cout = cout_;
  pad = pad_;
  w.resize(prefix + ".w", {kh, kw, cin, cout});
  b.resize(prefix + ".b", {cout, 1, 1, 1});
  const float scale = std::sqrt(2.0f / (kh * kw * cin));
  for (float& x : w.v) x = static_cast<float>(rng.gauss()) * scale;
}

Tensor4 Conv2d::forward(const Tensor4& in) const {
  Tensor4 out(in.n, in.h, in.w, cout);
  const int m = in.h * in.w;
  const int kcols = kh * kw * cin;
  std::vector<float> cols(static_cast<size_t>(m) * kcols);
  CMapMat wm(w.v.data(), kcols, cout);
  for (int i = 0; i < in.n; ++i) {
    im2col(in, i, kh, kw, pad, cols.data());
    CMapMat cm(cols.data(), m, kcols);
    MapMat om(out.sample(i), m, cout);
    om.noalias() = cm * wm;
    om.rowwise() += CMapMat(b.v.data(), 1, cout).row(0);
  }
  return out;
}

Tensor4 Conv2d::backward(const Tensor4& in, const Tensor4& dout, bool accumulate) {
  Tensor4 din(in.n, in.h, in.w, cin);
  const int m = in.h * in.w;
  const int kcols = kh * kw * cin;
  std::vector<float> cols(static_cast<size_t>(m) * kcols);
  std::vector<float> dcols(static_cast<size_t>(m) * kcols);
  CMapMat wm(w.v.data(), kcols, cout);
  MapMat gwm(w.grad.data(), kcols, cout);

  for (int i = 0; i < in.n; ++i) {
    CMapMat dom(dout.sample(i), m, cout);
    if (accumulate) {
      im2col(in, i, kh, kw, pad, cols.data());
      CMapMat cm(cols.data(), m, kcols);
      gwm.noalias() += cm.transpose() * dom;
      MapMat gbm(b.grad.data(), 1, cout);
      gbm.row(0) += dom.colwise().sum();
    }
    // col2im of dom * w^T
    MapMat dcm(dcols.data(), m, kcols);
    dcm.noalias() = dom * wm.transpose();
    float* dst = din.sample(i);
    std::memset(dst, 0, sizeof(float) * din.sample_size());
    for (int y = 0; y < in.h; ++y)
      for (int x = 0; x < in.w; ++x) {
        const float* row = dcols.data() + static_cast<size_t>(y * in.w + x) * kcols;
        int k = 0;
        for (int ky = 0; ky < kh; ++ky) {
          int sy = y + ky - pad;
          for (int kx = 0; kx < kw; ++kx) {
            int sx = x + kx - pad;
            if (sy >= 0 && sy < in.h && sx >= 0 && sx < in.w) {
              float* d = dst + (static_cast<size_t>(sy) * in.w + sx) * cin;
              for (int ci = 0; ci < cin; ++ci) d[ci] += row[k + ci];
            }
            k += cin;
          }
        }
      }
  }
  return din;
}

void BatchNorm::init(const std::string& prefix, int channels) {
  c = channels;
  gamma.resize(prefix + ".gamma", {c, 1, 1, 1});
  beta.resize(prefix + ".beta", {c, 1, 1, 1});
  run_mean.resize(prefix + ".running_mean", {c, 1, 1, 1}, 0.0f);
  run_var.resize(prefix + ".running_var", {c, 1, 1, 1}, 1.0f);
  for (float& g : gamma.v) g = 1.0f;
}

Tensor4 BatchNorm::forward_train(const Tensor4& in, Cache& cache) {
  const size_t rows = in.v.size() / c;
  cache.mean.assign(c, 0.0f);
  cache.invstd.assign(c, 0.0f);
  std::vector<double> sum(c, 0.0), sq(c, 0.0);
  for (size_t r = 0; r < rows; ++r) {
    const float* p = in.v.data() + r * c;
    for (int ch = 0; ch < c; ++ch) {
      sum[ch] += p[ch];
      sq[ch] += static_cast<double>(p[ch]) * p[ch];
    }
  }
  for (int ch = 0; ch < c; ++ch) {
    double mean = sum[ch] / rows;
    double var = sq[ch] / rows - mean * mean;
    if (var < 0) var = 0;
    cache.mean[ch] = static_cast<float>(mean);
    cache.invstd[ch] = static_cast<float>(1.0 / std::sqrt(var + eps));
    run_mean.v[ch] = (1.0f - momentum) * run_mean.v[ch] + momentum * static_cast<float>(mean);
    run_var.v[ch] = (1.0f - momentum) * run_var.v[ch] + momentum * static_cast<float>(var);
  }
  cache.xhat = Tensor4(in.n, in.h, in.w, in.c);
  Tensor4 out(in.n, in.h, in.w, in.c);
  for (size_t r = 0; r < rows; ++r) {
    const float* p = in.v.data() + r * c;
    float* xh = cache.xhat.v.data() + r * c;
    float* o = out.v.data() + r * c;
    for (int ch = 0; ch < c; ++ch) {
      xh[ch] = (p[ch] - cache.mean[ch]) * cache.invstd[ch];
      o[ch] = gamma.v[ch] * xh[ch] + beta.v[ch];
    }
  }
  return out;
}

Tensor4 BatchNorm::forward_eval(const Tensor4& in) const {
  Tensor4 out(in.n, in.h, in.w, in.c);
  const size_t rows = in.v.size() / c;
  for (size_t r = 0; r < rows; ++r) {
    const float* p = in.v.data() + r * c;
    float* o = out.v.data() + r * c;
    for (int ch = 0; ch < c; ++ch) {
      float invstd = 1.0f / std::sqrt(run_var.v[ch] + eps);
      o[ch] = gamma.v[ch] * (p[ch] - run_mean.v[ch]) * invstd + beta.v[ch];
    }
  }
  return out;
}

Tensor4 BatchNorm::backward_train(const Cache& cache, const Tensor4& dout, bool accumulate) {
  const size_t rows = dout.v.size() / c;
  std::vector<double> sum_dy(c, 0.0), sum_dy_xhat(c, 0.0);
  for (size_t r = 0; r < rows; ++r) {
    const float* dy = dout.v.data() + r * c;
    const float* xh = cache.xhat.v.data() + r * c;
    for (int ch = 0; ch < c; ++ch) {
      sum_dy[ch] += dy[ch];
      sum_dy_xhat[ch] += static_cast<double>(dy[ch]) * xh[ch];
    }
  }
  if (accumulate) {
    for (int ch = 0; ch < c; ++ch) {
      gamma.grad[ch] += static_cast<float>(sum_dy_xhat[ch]);
      beta.grad[ch] += static_cast<float>(sum_dy[ch]);
    }
  }
  Tensor4 din(dout.n, dout.h, dout.w, dout.c);
  const double inv_rows = 1.0 / rows;
  for (size_t r = 0; r < rows; ++r) {
    const float* dy = dout.v.data() + r * c;
    const float* xh = cache.xhat.v.data() + r * c;
    float* dx = din.v.data() + r * c;
    for (int ch = 0; ch < c; ++ch) {
      double t = dy[ch] - sum_dy[ch] * inv_rows - xh[ch] * sum_dy_xhat[ch] * inv_rows;
      dx[ch] = static_cast<float>(gamma.v[ch] * cache.invstd[ch] * t);
    }
  }
  return din;
}

Tensor4 BatchNorm::backward_eval(const Tensor4& dout) const {
  Tensor4 din(dout.n, dout.h, dout.w, dout.c);
  const size_t rows = dout.v.size() / c;
  for (size_t r = 0; r < rows; ++r) {
    const float* dy = dout.v.data() + r * c;
    float* dx = din.v.data() + r * c;
    for (int ch = 0; ch < c; ++ch) {
      float invstd = 1.0f / std::sqrt(run_var.v[ch] + eps);
      dx[ch] = dy[ch] * gamma.v[ch] * invstd;
    }
  }
  return din;
}

void Linear::init(const std::string& prefix, int in_f_, int out_f_, Rng& rng) {
  in_f = in_f_;
  out_f = out_f_;
  w.resize(prefix + ".w", {in_f, out_f, 1, 1});
  b.resize(prefix + ".b", {out_f, 1, 1, 1});
  const float scale = std::sqrt(2.0f / in_f);
  for (float& x : w.v) x = static_cast<float>(rng.gauss()) * scale;
}

Tensor4 Linear::forward(const Tensor4& in) const {
  Tensor4 out(in.n, 1, 1, out_f);
  CMapMat xm(in.v.data(), in.n, in_f);
  CMapMat wm(w.v.data(), in_f, out_f);
  MapMat om(out.v.data(), in.n, out_f);
  om.noalias() = xm * wm;
  om.rowwise() += CMapMat(b.v.data(), 1, out_f).row(0);
  return out;
}

Tensor4 Linear::backward(const Tensor4& in, const Tensor4& dout, bool accumulate) {
  Tensor4 din(in.n, 1, 1, in_f);
  CMapMat xm(in.v.data(), in.n, in_f);
  CMapMat dom(dout.v.data(), in.n, out_f);
  CMapMat wm(w.v.data(), in_f, out_f);
  if (accumulate) {
    MapMat gwm(w.grad.data(), in_f, out_f);
    gwm.noalias() += xm.transpose() * dom;
    MapMat gbm(b.grad.data(), 1, out_f);
    gbm.row(0) += dom.colwise().sum();
  }
  MapMat dim(din.v.data(), in.n, in_f);
  dim.noalias() = dom * wm.transpose();
  return din;
}

Tensor4 relu(const Tensor4& in) {
  Tensor4 out = in;
  for (float& x : out.v)
    if (x < 0) x = 0;
  return out;
}

Tensor4 relu_backward(const Tensor4& out, const Tensor4& dout) {
  Tensor4 din = dout;
  for (size_t i = 0; i < din.v.size(); ++i)
    if (out.v[i] <= 0.0f) din.v[i] = 0.0f;
  return din;
}

Tensor4 maxpool2(const Tensor4& in, std::vector<uint8_t>& argmax) {
  const int oh = in.h / 2, ow = in.w / 2;
  Tensor4 out(in.n, oh, ow, in.c);
  argmax.assign(out.v.size(), 0);
  for (int i = 0; i < in.n; ++i)
    for (int y = 0; y < oh; ++y)
      for (int x = 0; x < ow; ++x)
        for (int ch = 0; ch < in.c; ++ch) {
          float best = -std::numeric_limits<float>::infinity();
          uint8_t arg = 0;
          for (int k = 0; k < 4; ++k) {
            float v = in.at(i, 2 * y + (k >> 1), 2 * x + (k & 1), ch);
            if (v > best) {
              best = v;
              arg = static_cast<uint8_t>(k);
            }
          }
          size_t oi = ((static_cast<size_t>(i) * oh + y) * ow + x) * in.c + ch;
          out.v[oi] = best;
          argmax[oi] = arg;
        }
  return out;
}

Tensor4 maxpool2_backward(const Tensor4& dout, const std::vector<uint8_t>& argmax, int in_h,
                          int in_w) {
  Tensor4 din(dout.n, in_h, in_w, dout.c);
  for (int i = 0; i < dout.n; ++i)
    for (int y = 0; y < dout.h; ++y)
      for (int x = 0; x < dout.w; ++x)
        for (int ch = 0; ch < dout.c; ++ch) {
          size_t oi = ((static_cast<size_t>(i) * dout.h + y) * dout.w + x) * dout.c + ch;
          uint8_t k = argmax[oi];
          din.at(i, 2 * y + (k >> 1), 2 * x + (k & 1), ch) += dout.v[oi];
        }
  return din;
}

Tensor4 global_avg_pool(const Tensor4& in) {
  Tensor4 out(in.n, 1, 1, in.c);
  const double inv = 1.0 / (static_cast<double>(in.h) * in.w);
  for (int i = 0; i < in.n; ++i) {
    std::vector<double> acc(in.c, 0.0);
    const float* p = in.sample(i);
    for (int r = 0; r < in.h * in.w; ++r)
      for (int ch = 0; ch < in.c; ++ch) acc[ch] += p[static_cast<size_t>(r) * in.c + ch];
    for (int ch = 0; ch < in.c; ++ch)
      out.v[static_cast<size_t>(i) * in.c + ch] = static_cast<float>(acc[ch] * inv);
  }
  return out;
}

Tensor4 global_avg_pool_backward(const Tensor4& dout, int h, int w) {
  Tensor4 din(dout.n, h, w, dout.c);
  const float inv = 1.0f / (h * w);
  for (int i = 0; i < dout.n; ++i) {
    const float* d = dout.v.data() + static_cast<size_t>(i) * dout.c;
    float* p = din.sample(i);
    for (int r = 0; r < h * w; ++r)
      for (int ch = 0; ch < dout.c; ++ch) p[static_cast<size_t>(r) * dout.c + ch] = d[ch] * inv;
  }
  return din;
}

Tensor4 upsample2(const Tensor4& in) {
  Tensor4 out(in.n, in.h * 2, in.w * 2, in.c);
  for (int i = 0; i < in.n; ++i)
    for (int y = 0; y < out.h; ++y)
      for (int x = 0; x < out.w; ++x) {
        const float* s = in.v.data() +
                         ((static_cast<size_t>(i) * in.h + y / 2) * in.w + x / 2) * in.c;
        float* d = out.v.data() + ((static_cast<size_t>(i) * out.h + y) * out.w + x) * in.c;
        std::memcpy(d, s, sizeof(float) * in.c);
      }
  return out;
}

Tensor4 upsample2_backward(const Tensor4& dout) {
  Tensor4 din(dout.n, dout.h / 2, dout.w / 2, dout.c);
  for (int i = 0; i < dout.n; ++i)
    for (int y = 0; y < dout.h; ++y)
      for (int x = 0; x < dout.w; ++x) {
        const float* s = dout.v.data() +
                         ((static_cast<size_t>(i) * dout.h + y) * dout.w + x) * dout.c;
        float* d = din.v.data() +
                   ((static_cast<size_t>(i) * din.h + y / 2) * din.w + x / 2) * dout.c;
        for (int ch = 0; ch < dout.c; ++ch) d[ch] += s[ch];
      }
  return din;
}

Tensor4 concat_c(const Tensor4& a, const Tensor4& b) {
  Tensor4 out(a.n, a.h, a.w, a.c + b.c);
  const size_t rows = static_cast<size_t>(a.n) * a.h * a.w;
  for (size_t r = 0; r < rows; ++r) {
    std::memcpy(out.v.data() + r * out.c, a.v.data() + r * a.c, sizeof(float) * a.c);
    std::memcpy(out.v.data() + r * out.c + a.c, b.v.data() + r * b.c, sizeof(float) * b.c);
  }
  return out;
}

void split_c(const Tensor4& d, Tensor4& da, Tensor4& db) {
  const size_t rows = static_cast<size_t>(d.n) * d.h * d.w;
  for (size_t r = 0; r < rows; ++r) {
    std::memcpy(da.v.data() + r * da.c, d.v.data() + r * d.c, sizeof(float) * da.c);
    std::memcpy(db.v.data() + r * db.c, d.v.data() + r * d.c + da.c, sizeof(float) * db.c);
  }
}

CeResult softmax_ce(const Tensor4& logits, const int32_t* cls, const uint8_t* mask,
                    Tensor4* dlogits) {
  const int classes = logits.c;
  const size_t rows = logits.v.size() / classes;
  CeResult res;
  res.rows = rows;
  double total = 0.0;
  const double inv_rows = 1.0 / static_cast<double>(rows);
  for (size_t r = 0; r < rows; ++r) {
    const float* z = logits.v.data() + r * classes;
    int y = cls ? cls[r / (static_cast<size_t>(logits.h) * logits.w)] : mask[r];
    float zmax = z[0];
    for (int k = 1; k < classes; ++k) zmax = std::max(zmax, z[k]);
    double denom = 0.0;
    for (int k = 0; k < classes; ++k) denom += std::exp(static_cast<double>(z[k]) - zmax);
    double lse = zmax + std::log(denom);
    total += lse - z[y];
    if (dlogits) {
      float* d = dlogits->v.data() + r * classes;
      for (int k = 0; k < classes; ++k) {
        double p = std::exp(static_cast<double>(z[k]) - lse);
        d[k] = static_cast<float>((p - (k == y ? 1.0 : 0.0)) * inv_rows);
      }
    }
  }
  res.loss = total * inv_rows;
  return res;
}

}  // namespace antilearn::nn
