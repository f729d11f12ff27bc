#ifndef ANTILEARN_NN_OPS_HPP
#define ANTILEARN_NN_OPS_HPP

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "antilearn/rng.hpp"
#include "antilearn/tensor.hpp"

// Internal layer kernels for the two reference architectures. Tensors are
// NHWC float32. Training-mode passes process whole batches single-threaded;
// evaluation-mode passes are strictly per-sample so that batched and
// per-sample runs are bit-identical.

namespace antilearn::nn {

using RowMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using CMapMat = Eigen::Map<const RowMat>;

struct Param {
  std::string name;
  std::array<int, 4> shape{1, 1, 1, 1};
  std::vector<float> v;
  std::vector<float> grad;
  std::vector<float> vel;

  void resize(const std::string& n, std::array<int, 4> s) {
    name = n;
    shape = s;
    size_t count = static_cast<size_t>(s[0]) * s[1] * s[2] * s[3];
    v.assign(count, 0.0f);
    grad.assign(count, 0.0f);
    vel.assign(count, 0.0f);
  }
  size_t count() const { return v.size(); }
};

struct Buffer {
  std::string name;
  std::array<int, 4> shape{1, 1, 1, 1};
  std::vector<float> v;

  void resize(const std::string& n, std::array<int, 4> s, float fill) {
    name = n;
    shape = s;
    v.assign(static_cast<size_t>(s[0]) * s[1] * s[2] * s[3], fill);
  }
};

// im2col for 3x3 (or 1x1) stride-1 convolutions with zero padding.
void im2col(const Tensor4& in, int sample, int kh, int kw, int pad, float* cols);

struct Conv2d {
  int kh = 3, kw = 3, cin = 0, cout = 0, pad = 1;
  Param w;  // [kh, kw, cin, cout]
  Param b;  // [cout]

  void init(const std::string& prefix, int kh_, int kw_, int cin_, int cout_, int pad_,
            Rng& rng);
  Tensor4 forward(const Tensor4& in) const;
  // din from dout; accumulates into w.grad / b.grad when accumulate is set.
  Tensor4 backward(const Tensor4& in, const Tensor4& dout, bool accumulate);
};

struct BatchNorm {
  int c = 0;
  float momentum = 0.1f;
  float eps = 1e-5f;
  Param gamma, beta;
  Buffer run_mean, run_var;

  struct Cache {
    std::vector<float> mean, invstd;
    Tensor4 xhat;
  };

  void init(const std::string& prefix, int channels);
  Tensor4 forward_train(const Tensor4& in, Cache& cache);  // updates running stats
  Tensor4 forward_eval(const Tensor4& in) const;
  Tensor4 backward_train(const Cache& cache, const Tensor4& dout, bool accumulate);
  Tensor4 backward_eval(const Tensor4& dout) const;
};

struct Linear {
  int in_f = 0, out_f = 0;
  Param w;  // [in_f, out_f]
  Param b;  // [out_f]

  void init(const std::string& prefix, int in_f_, int out_f_, Rng& rng);
  Tensor4 forward(const Tensor4& in) const;  // in: [N,1,1,in_f]
  Tensor4 backward(const Tensor4& in, const Tensor4& dout, bool accumulate);
};

Tensor4 relu(const Tensor4& in);
Tensor4 relu_backward(const Tensor4& out, const Tensor4& dout);

Tensor4 maxpool2(const Tensor4& in, std::vector<uint8_t>& argmax);
Tensor4 maxpool2_backward(const Tensor4& dout, const std::vector<uint8_t>& argmax, int in_h,
                          int in_w);

Tensor4 global_avg_pool(const Tensor4& in);
Tensor4 global_avg_pool_backward(const Tensor4& dout, int h, int w);

Tensor4 upsample2(const Tensor4& in);
Tensor4 upsample2_backward(const Tensor4& dout);

Tensor4 concat_c(const Tensor4& a, const Tensor4& b);
void split_c(const Tensor4& d, Tensor4& da, Tensor4& db);

// Softmax cross-entropy over logits rows. Classification: logits [N,1,1,C]
// with one class index per sample; segmentation: logits [N,H,W,C] with one
// index per pixel. Returns mean loss (double accumulation); dlogits, when
// requested, already carries the 1/rows factor.
struct CeResult {
  double loss = 0.0;
  size_t rows = 0;
};
CeResult softmax_ce(const Tensor4& logits, const int32_t* cls, const uint8_t* mask,
                    Tensor4* dlogits);

}  // namespace antilearn::nn

#endif
