#ifndef ANTILEARN_CORE_DATA_HPP
#define ANTILEARN_CORE_DATA_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "antilearn/tensor.hpp"

namespace antilearn {

enum class TaskKind { classification, segmentation };
enum class Split { train, test };
enum class NormOrder { linf };
enum class Scope { sample_wise, class_wise };
enum class Method { synthetic, advt, em };

const char* to_string(TaskKind t);
const char* to_string(Split s);
const char* to_string(NormOrder n);
const char* to_string(Scope s);
const char* to_string(Method m);

struct ImageDataset {
  Tensor4 images;                // N x H x W x C, float32 in [0,1]
  std::vector<int32_t> labels;   // classification: N class indices
  std::vector<uint8_t> masks;    // segmentation: N*H*W binary values
  TaskKind task = TaskKind::classification;
  int num_classes = 0;           // segmentation fixes this to 2
  Split split = Split::train;
  std::string checksum;          // hex digest over content, see checksum_dataset

  int n() const { return images.n; }

  const uint8_t* mask(int i) const {
    return masks.data() + static_cast<size_t>(i) * images.h * images.w;
  }
  uint8_t* mask(int i) { return masks.data() + static_cast<size_t>(i) * images.h * images.w; }

  // Throws on any structural invariant violation (value range, label range,
  // non-binary masks, stale checksum).
  void validate() const;

  // Recomputes and stores the content checksum.
  void seal();
};

struct PerturbBudget {
  NormOrder norm = NormOrder::linf;
  uint32_t eps_num = 8;
  uint32_t eps_den = 255;
  Scope scope = Scope::sample_wise;

  double eps() const { return static_cast<double>(eps_num) / eps_den; }
  void validate() const;

  // Parses "8/255" or "0.05"-style strings (the fraction form is canonical).
  static PerturbBudget parse(const std::string& text, Scope scope = Scope::sample_wise);
  std::string eps_text() const;
};

struct PerturbationSet {
  // sample_wise: N x H x W x C; class_wise: num_classes x H x W x C.
  Tensor4 deltas;
  PerturbBudget budget;
  Method method = Method::synthetic;
  uint64_t seed = 0;
  std::string dataset_checksum;
  std::string generator_config_digest;
  // Optional provenance: set by gen_advt / gen_em respectively.
  std::string surrogate_digest;
  bool no_convergence = false;
};

struct BudgetViolation {
  size_t flat_index;
  float value;
};

struct BudgetReport {
  bool ok = true;
  double max_violation = 0.0;              // max(|delta| - eps, 0) over all elements
  std::vector<BudgetViolation> violations; // capped at 64 records
};

// Deterministic digest over a canonical serialization: shape header,
// task/num_classes, row-major little-endian image bytes, label bytes.
std::string checksum_dataset(const ImageDataset& ds);

// result_i = clamp(x_i + delta_i, 0, 1); labels copied; checksum recomputed.
// Throws ChecksumMismatch / ShapeMismatch.
ImageDataset apply_perturbation(const ImageDataset& ds, const PerturbationSet& pset);

// L-inf budget check with 1e-6 tolerance (closed ball).
BudgetReport validate_budget(const PerturbationSet& pset);

// Artifact container: zip with metadata.json + deltas.bin (16-byte magic,
// 4 x u32 LE dims, row-major LE float32 payload).
void save_perturbation(const PerturbationSet& pset, const std::string& path);
std::vector<uint8_t> serialize_perturbation(const PerturbationSet& pset);
PerturbationSet load_perturbation(const std::string& path);
PerturbationSet parse_perturbation(const std::vector<uint8_t>& bytes);

// Round-to-nearest 8-bit quantization of pixel values (lossy; quantum 1/255).
void quantize_images_u8(ImageDataset& ds);

// Tensor framing shared by deltas.bin and checkpoint entries.
std::vector<uint8_t> serialize_tensor(const Tensor4& t, const char magic[16]);
Tensor4 parse_tensor(const std::vector<uint8_t>& bytes, const char magic[16]);

extern const char kDeltaMagic[16];   // "ANTILEARN\0DELTA1"
extern const char kTensorMagic[16];  // "ANTILEARN\0TENSR1"

}  // namespace antilearn

#endif
