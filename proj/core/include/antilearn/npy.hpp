#ifndef ANTILEARN_NPY_HPP
#define ANTILEARN_NPY_HPP

#include <cstdint>
#include <string>
#include <vector>

namespace antilearn {

// Minimal .npy support: C-order arrays of uint8 ("|u1") or little-endian
// float32 ("<f4"), the two dtypes appearing in MedMNIST archives and in our
// own exports.
struct NpyArray {
  enum class Dtype { u8, f32 };
  Dtype dtype = Dtype::u8;
  std::vector<size_t> shape;
  std::vector<uint8_t> raw;  // payload bytes, little-endian

  size_t elem_count() const {
    size_t n = 1;
    for (size_t d : shape) n *= d;
    return n;
  }
  const float* as_f32() const { return reinterpret_cast<const float*>(raw.data()); }
};

NpyArray npy_parse(const std::vector<uint8_t>& bytes);
std::vector<uint8_t> npy_serialize_u8(const std::vector<size_t>& shape, const uint8_t* data);
std::vector<uint8_t> npy_serialize_f32(const std::vector<size_t>& shape, const float* data);

}  // namespace antilearn

#endif
