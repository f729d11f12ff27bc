#ifndef ANTILEARN_TENSOR_HPP
#define ANTILEARN_TENSOR_HPP

#include <cstddef>
#include <cstdint>
#include <vector>

#include "antilearn/error.hpp"

namespace antilearn {

// Dense row-major N x H x W x C float32 tensor. The layout is part of the
// on-disk contracts (artifacts, checkpoints), so it never changes.
struct Tensor4 {
  int n = 0, h = 0, w = 0, c = 0;
  std::vector<float> v;

  Tensor4() = default;
  Tensor4(int n_, int h_, int w_, int c_)
      : n(n_), h(h_), w(w_), c(c_), v(static_cast<size_t>(n_) * h_ * w_ * c_, 0.0f) {}

  static Tensor4 like(const Tensor4& o) { return Tensor4(o.n, o.h, o.w, o.c); }

  size_t size() const { return v.size(); }
  bool same_shape(const Tensor4& o) const {
    return n == o.n && h == o.h && w == o.w && c == o.c;
  }

  float& at(int i, int y, int x, int ch) {
    return v[((static_cast<size_t>(i) * h + y) * w + x) * c + ch];
  }
  float at(int i, int y, int x, int ch) const {
    return v[((static_cast<size_t>(i) * h + y) * w + x) * c + ch];
  }

  size_t sample_size() const { return static_cast<size_t>(h) * w * c; }
  float* sample(int i) { return v.data() + static_cast<size_t>(i) * sample_size(); }
  const float* sample(int i) const { return v.data() + static_cast<size_t>(i) * sample_size(); }

  // Copies sample `src` of `o` into sample `dst` of *this.
  void copy_sample_from(const Tensor4& o, int src, int dst) {
    require(o.h == h && o.w == w && o.c == c, ErrorCode::ShapeMismatch,
            "sample copy between different shapes");
    const float* s = o.sample(src);
    float* d = sample(dst);
    for (size_t k = 0; k < sample_size(); ++k) d[k] = s[k];
  }
};

}  // namespace antilearn

#endif
