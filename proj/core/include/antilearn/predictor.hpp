#ifndef ANTILEARN_PREDICTOR_HPP
#define ANTILEARN_PREDICTOR_HPP

#include <array>
#include <memory>
#include <string>
#include <vector>

#include "antilearn/core_data.hpp"
#include "antilearn/tensor.hpp"

namespace antilearn {

// Non-owning view of the targets for a batch: class indices (one per sample)
// or binary masks (one byte per pixel).
struct LabelsView {
  TaskKind task = TaskKind::classification;
  int num_classes = 0;
  const int32_t* classes = nullptr;
  const uint8_t* masks = nullptr;
};

LabelsView labels_of(const ImageDataset& ds);

// Owned batch assembled by index gather.
struct Batch {
  Tensor4 images;
  std::vector<int32_t> classes;
  std::vector<uint8_t> masks;
  TaskKind task = TaskKind::classification;
  int num_classes = 0;

  LabelsView labels() const {
    return {task, num_classes, classes.empty() ? nullptr : classes.data(),
            masks.empty() ? nullptr : masks.data()};
  }
};

Batch gather_batch(const ImageDataset& ds, const std::vector<int>& indices);

// Named view over one parameter or statistics tensor of a predictor.
struct TensorRef {
  std::string name;
  std::array<int, 4> shape;
  std::vector<float>* values;
};

// The differentiable model contract. Evaluation-mode entry points (forward,
// loss, input_gradient) are strictly per-sample underneath: running them on
// a batch or sample-by-sample gives bit-identical numbers, and concurrent
// calls on a frozen predictor are safe. param_step is the only mutating op
// and must be externally serialized.
class Predictor {
 public:
  virtual ~Predictor() = default;

  virtual std::string arch() const = 0;
  virtual TaskKind task() const = 0;
  virtual int num_classes() const = 0;
  virtual int in_h() const = 0;
  virtual int in_w() const = 0;
  virtual int in_c() const = 0;
  virtual uint64_t init_seed() const = 0;

  virtual std::unique_ptr<Predictor> clone() const = 0;

  // Evaluation-mode logits: classification [N,1,1,C], segmentation [N,H,W,2].
  virtual Tensor4 forward(const Tensor4& images) const = 0;

  // Mean cross-entropy in evaluation mode. Throws NonFiniteLoss.
  virtual double loss(const Tensor4& images, const LabelsView& labels) const = 0;

  // d(loss)/d(images) at fixed parameters, evaluation mode. The loss at the
  // same point is written to *loss_out when non-null (saves a forward pass
  // inside PGD loops).
  virtual Tensor4 input_gradient(const Tensor4& images, const LabelsView& labels,
                                 double* loss_out) const = 0;
  Tensor4 input_gradient(const Tensor4& images, const LabelsView& labels) const {
    return input_gradient(images, labels, nullptr);
  }

  // One SGD-with-momentum step in training mode; returns the pre-step loss.
  virtual double param_step(const Tensor4& images, const LabelsView& labels, float lr) = 0;

  virtual float momentum() const = 0;
  virtual void set_momentum(float m) = 0;

  // Trainable parameters and batch statistics, in fixed declaration order.
  virtual std::vector<TensorRef> parameters() = 0;
  virtual std::vector<TensorRef> buffers() = 0;
  std::vector<TensorRef> parameters() const;
  std::vector<TensorRef> buffers() const;

  size_t parameter_count() const;
};

// arch in {"small_cnn", "small_unet"}; initialization is deterministic in
// seed. Throws IncompatibleDims when dims do not fit the architecture.
std::unique_ptr<Predictor> build_predictor(const std::string& arch, int h, int w, int c,
                                           int num_classes, uint64_t seed);

// Free-function spellings of the per-op contract.
double loss(const Predictor& p, const Tensor4& images, const LabelsView& labels);
Tensor4 input_gradient(const Predictor& p, const Tensor4& images, const LabelsView& labels);
double param_step(Predictor& p, const Tensor4& images, const LabelsView& labels, float lr);

// Checkpoint container: zip of arch.json plus one framed tensor entry per
// parameter/buffer. `provenance` is an arbitrary JSON object carried along.
void save_checkpoint(const Predictor& p, const std::string& path,
                     const std::string& provenance_json = "{}");
std::vector<uint8_t> serialize_checkpoint(const Predictor& p,
                                          const std::string& provenance_json = "{}");

struct Checkpoint {
  std::unique_ptr<Predictor> predictor;
  std::string provenance_json;
};
Checkpoint load_checkpoint(const std::string& path);
Checkpoint parse_checkpoint(const std::vector<uint8_t>& bytes);

// Digest of the serialized checkpoint (provenance excluded), used to bind
// generated artifacts to the surrogate that produced them.
std::string checkpoint_digest(const Predictor& p);

}  // namespace antilearn

#endif
