#include "antilearn/predictor.hpp"

#include <cmath>
#include <cstring>

#include <nlohmann/json.hpp>

#include "antilearn/digest.hpp"
#include "antilearn/error.hpp"
#include "antilearn/parallel.hpp"
#include "antilearn/rng.hpp"
#include "antilearn/zipfile.hpp"
#include "nn_ops.hpp"

namespace antilearn {

using json = nlohmann::json;
using namespace nn;

LabelsView labels_of(const ImageDataset& ds) {
  return {ds.task, ds.num_classes, ds.labels.empty() ? nullptr : ds.labels.data(),
          ds.masks.empty() ? nullptr : ds.masks.data()};
}

Batch gather_batch(const ImageDataset& ds, const std::vector<int>& indices) {
  Batch b;
  b.task = ds.task;
  b.num_classes = ds.num_classes;
  b.images = Tensor4(static_cast<int>(indices.size()), ds.images.h, ds.images.w, ds.images.c);
  if (ds.task == TaskKind::classification) {
    b.classes.resize(indices.size());
  } else {
    b.masks.resize(indices.size() * static_cast<size_t>(ds.images.h) * ds.images.w);
  }
  for (size_t k = 0; k < indices.size(); ++k) {
    b.images.copy_sample_from(ds.images, indices[k], static_cast<int>(k));
    if (ds.task == TaskKind::classification) {
      b.classes[k] = ds.labels[indices[k]];
    } else {
      std::memcpy(b.masks.data() + k * static_cast<size_t>(ds.images.h) * ds.images.w,
                  ds.mask(indices[k]), static_cast<size_t>(ds.images.h) * ds.images.w);
    }
  }
  return b;
}

std::vector<TensorRef> Predictor::parameters() const {
  return const_cast<Predictor*>(this)->parameters();
}
std::vector<TensorRef> Predictor::buffers() const {
  return const_cast<Predictor*>(this)->buffers();
}

size_t Predictor::parameter_count() const {
  size_t total = 0;
  for (const auto& r : parameters()) total += r.values->size();
  return total;
}

namespace {

void check_finite(double v, const char* what) {
  if (!std::isfinite(v)) raise(ErrorCode::NonFiniteLoss, std::string(what) + " is not finite");
}

Tensor4 slice_sample(const Tensor4& images, int i) {
  Tensor4 x(1, images.h, images.w, images.c);
  std::memcpy(x.v.data(), images.sample(i), sizeof(float) * x.v.size());
  return x;
}

// Offsets the labels view to a single sample.
LabelsView slice_labels(const LabelsView& labels, const Tensor4& images, int i) {
  LabelsView one = labels;
  if (labels.classes) one.classes = labels.classes + i;
  if (labels.masks) one.masks = labels.masks + static_cast<size_t>(i) * images.h * images.w;
  return one;
}

struct ParamGroup {
  std::vector<Param*> params;

  void zero_grads() {
    for (Param* p : params) std::fill(p->grad.begin(), p->grad.end(), 0.0f);
  }
  void sgd_step(float lr, float momentum) {
    for (Param* p : params)
      for (size_t k = 0; k < p->v.size(); ++k) {
        p->vel[k] = momentum * p->vel[k] + p->grad[k];
        p->v[k] -= lr * p->vel[k];
      }
  }
};

// Shared evaluation/training drivers over the arch-specific passes.
template <typename Derived>
class PredictorBase : public Predictor {
 public:
  PredictorBase(int h, int w, int c, int num_classes, uint64_t seed)
      : h_(h), w_(w), c_(c), num_classes_(num_classes), seed_(seed) {}

  TaskKind task() const override {
    return Derived::kTask;
  }
  int num_classes() const override { return num_classes_; }
  int in_h() const override { return h_; }
  int in_w() const override { return w_; }
  int in_c() const override { return c_; }
  uint64_t init_seed() const override { return seed_; }
  float momentum() const override { return momentum_; }
  void set_momentum(float m) override { momentum_ = m; }

  Tensor4 forward(const Tensor4& images) const override {
    check_input(images);
    const Derived* self = static_cast<const Derived*>(this);
    Tensor4 probe = self->eval_logits(slice_sample(images, 0));
    Tensor4 out(images.n, probe.h, probe.w, probe.c);
    out.copy_sample_from(probe, 0, 0);
    parallel_for(images.n - 1, [&](int k) {
      int i = k + 1;
      Tensor4 lg = self->eval_logits(slice_sample(images, i));
      out.copy_sample_from(lg, 0, i);
    });
    return out;
  }

  double loss(const Tensor4& images, const LabelsView& labels) const override {
    check_input(images);
    check_labels(labels);
    Tensor4 logits = forward(images);
    CeResult ce = softmax_ce(logits, labels.classes, labels.masks, nullptr);
    check_finite(ce.loss, "loss");
    return ce.loss;
  }

  Tensor4 input_gradient(const Tensor4& images, const LabelsView& labels,
                         double* loss_out) const override {
    check_input(images);
    check_labels(labels);
    const Derived* self = static_cast<const Derived*>(this);
    Tensor4 grad(images.n, images.h, images.w, images.c);
    std::vector<double> losses(images.n);
    parallel_for(images.n, [&](int i) {
      Tensor4 x = slice_sample(images, i);
      LabelsView one = slice_labels(labels, images, i);
      Tensor4 g = self->eval_input_grad(x, one, &losses[i]);
      grad.copy_sample_from(g, 0, i);
    });
    double mean = 0;
    for (double l : losses) mean += l;
    mean /= images.n;
    check_finite(mean, "loss");
    if (loss_out) *loss_out = mean;
    return grad;
  }

  double param_step(const Tensor4& images, const LabelsView& labels, float lr) override {
    check_input(images);
    check_labels(labels);
    require(lr >= 0.0f, ErrorCode::ConfigInvalid, "learning rate must be non-negative");
    Derived* self = static_cast<Derived*>(this);
    ParamGroup group{self->param_list()};
    group.zero_grads();
    double l = self->train_backprop(images, labels);
    check_finite(l, "loss");
    group.sgd_step(lr, momentum_);
    return l;
  }

  std::vector<TensorRef> parameters() override {
    std::vector<TensorRef> out;
    for (Param* p : static_cast<Derived*>(this)->param_list())
      out.push_back({p->name, p->shape, &p->v});
    return out;
  }
  std::vector<TensorRef> buffers() override {
    std::vector<TensorRef> out;
    for (Buffer* b : static_cast<Derived*>(this)->buffer_list())
      out.push_back({b->name, b->shape, &b->v});
    return out;
  }

 protected:
  void check_input(const Tensor4& images) const {
    require(images.n >= 1 && images.h == h_ && images.w == w_ && images.c == c_,
            ErrorCode::ShapeMismatch, "batch shape does not match predictor input dims");
  }
  void check_labels(const LabelsView& labels) const {
    require(labels.task == Derived::kTask, ErrorCode::TaskMismatch,
            "labels task does not match predictor task");
    if (labels.task == TaskKind::classification) {
      require(labels.classes != nullptr, ErrorCode::TaskMismatch, "class labels required");
    } else {
      require(labels.masks != nullptr, ErrorCode::TaskMismatch, "masks required");
    }
  }

  int h_, w_, c_, num_classes_;
  uint64_t seed_;
  float momentum_ = 0.9f;
};

// ---- small_cnn: 3 x (conv3x3 + bn + relu + maxpool2) + gap + linear -------

class SmallCnn final : public PredictorBase<SmallCnn> {
 public:
  static constexpr TaskKind kTask = TaskKind::classification;

  SmallCnn(int h, int w, int c, int num_classes, uint64_t seed)
      : PredictorBase(h, w, c, num_classes, seed) {
    require(h >= 16 && w >= 16, ErrorCode::IncompatibleDims,
            "small_cnn requires height and width >= 16");
    require(num_classes >= 2, ErrorCode::IncompatibleDims, "small_cnn needs >= 2 classes");
    Rng rng(derive_seed(seed, 0xc99));
    c1_.init("c1", 3, 3, c, 32, 1, rng);
    bn1_.init("bn1", 32);
    c2_.init("c2", 3, 3, 32, 64, 1, rng);
    bn2_.init("bn2", 64);
    c3_.init("c3", 3, 3, 64, 128, 1, rng);
    bn3_.init("bn3", 128);
    fc_.init("fc", 128, num_classes, rng);
  }

  std::string arch() const override { return "small_cnn"; }
  std::unique_ptr<Predictor> clone() const override { return std::make_unique<SmallCnn>(*this); }

  std::vector<Param*> param_list() {
    return {&c1_.w, &c1_.b, &bn1_.gamma, &bn1_.beta, &c2_.w, &c2_.b, &bn2_.gamma, &bn2_.beta,
            &c3_.w, &c3_.b, &bn3_.gamma, &bn3_.beta, &fc_.w, &fc_.b};
  }
  std::vector<Buffer*> buffer_list() {
    return {&bn1_.run_mean, &bn1_.run_var, &bn2_.run_mean, &bn2_.run_var, &bn3_.run_mean,
            &bn3_.run_var};
  }

  Tensor4 eval_logits(const Tensor4& x) const {
    std::vector<uint8_t> am;
    Tensor4 a = relu(bn1_.forward_eval(c1_.forward(x)));
    a = maxpool2(a, am);
    a = relu(bn2_.forward_eval(c2_.forward(a)));
    a = maxpool2(a, am);
    a = relu(bn3_.forward_eval(c3_.forward(a)));
    a = maxpool2(a, am);
    return fc_.forward(global_avg_pool(a));
  }

  Tensor4 eval_input_grad(const Tensor4& x, const LabelsView& labels, double* loss_out) const {
    // Forward with caches.
    Tensor4 z1 = c1_.forward(x);
    Tensor4 r1 = relu(bn1_.forward_eval(z1));
    std::vector<uint8_t> am1, am2, am3;
    Tensor4 p1 = maxpool2(r1, am1);
    Tensor4 z2 = c2_.forward(p1);
    Tensor4 r2 = relu(bn2_.forward_eval(z2));
    Tensor4 p2 = maxpool2(r2, am2);
    Tensor4 z3 = c3_.forward(p2);
    Tensor4 r3 = relu(bn3_.forward_eval(z3));
    Tensor4 p3 = maxpool2(r3, am3);
    Tensor4 g = global_avg_pool(p3);
    Tensor4 logits = fc_.forward(g);

    Tensor4 dlogits(logits.n, logits.h, logits.w, logits.c);
    CeResult ce = softmax_ce(logits, labels.classes, labels.masks, &dlogits);
    *loss_out = ce.loss;

    // Backward without touching parameter grads (const path).
    Tensor4 d = const_cast<Linear&>(fc_).backward(g, dlogits, false);
    d = global_avg_pool_backward(d, p3.h, p3.w);
    d = maxpool2_backward(d, am3, r3.h, r3.w);
    d = bn3_.backward_eval(relu_backward(r3, d));
    d = const_cast<Conv2d&>(c3_).backward(p2, d, false);
    d = maxpool2_backward(d, am2, r2.h, r2.w);
    d = bn2_.backward_eval(relu_backward(r2, d));
    d = const_cast<Conv2d&>(c2_).backward(p1, d, false);
    d = maxpool2_backward(d, am1, r1.h, r1.w);
    d = bn1_.backward_eval(relu_backward(r1, d));
    return const_cast<Conv2d&>(c1_).backward(x, d, false);
  }

  double train_backprop(const Tensor4& x, const LabelsView& labels) {
    BatchNorm::Cache cb1, cb2, cb3;
    std::vector<uint8_t> am1, am2, am3;
    Tensor4 z1 = c1_.forward(x);
    Tensor4 r1 = relu(bn1_.forward_train(z1, cb1));
    Tensor4 p1 = maxpool2(r1, am1);
    Tensor4 z2 = c2_.forward(p1);
    Tensor4 r2 = relu(bn2_.forward_train(z2, cb2));
    Tensor4 p2 = maxpool2(r2, am2);
    Tensor4 z3 = c3_.forward(p2);
    Tensor4 r3 = relu(bn3_.forward_train(z3, cb3));
    Tensor4 p3 = maxpool2(r3, am3);
    Tensor4 g = global_avg_pool(p3);
    Tensor4 logits = fc_.forward(g);

    Tensor4 dlogits(logits.n, logits.h, logits.w, logits.c);
    CeResult ce = softmax_ce(logits, labels.classes, labels.masks, &dlogits);

    Tensor4 d = fc_.backward(g, dlogits, true);
    d = global_avg_pool_backward(d, p3.h, p3.w);
    d = maxpool2_backward(d, am3, r3.h, r3.w);
    d = bn3_.backward_train(cb3, relu_backward(r3, d), true);
    d = c3_.backward(p2, d, true);
    d = maxpool2_backward(d, am2, r2.h, r2.w);
    d = bn2_.backward_train(cb2, relu_backward(r2, d), true);
    d = c2_.backward(p1, d, true);
    d = maxpool2_backward(d, am1, r1.h, r1.w);
    d = bn1_.backward_train(cb1, relu_backward(r1, d), true);
    c1_.backward(x, d, true);
    return ce.loss;
  }

 private:
  Conv2d c1_, c2_, c3_;
  BatchNorm bn1_, bn2_, bn3_;
  Linear fc_;
};

// ---- small_unet: 2-level encoder/decoder with skip connections ------------

class SmallUnet final : public PredictorBase<SmallUnet> {
 public:
  static constexpr TaskKind kTask = TaskKind::segmentation;
  static constexpr int kF = 20;

  SmallUnet(int h, int w, int c, int num_classes, uint64_t seed)
      : PredictorBase(h, w, c, num_classes, seed) {
    require(h % 4 == 0 && w % 4 == 0 && h >= 8 && w >= 8, ErrorCode::IncompatibleDims,
            "small_unet requires height and width divisible by 4");
    require(num_classes == 2, ErrorCode::IncompatibleDims,
            "small_unet is a binary segmentation net");
    Rng rng(derive_seed(seed, 0x0e7));
    e1a_.init("e1a", 3, 3, c, kF, 1, rng);
    bn_e1a_.init("bn_e1a", kF);
    e1b_.init("e1b", 3, 3, kF, kF, 1, rng);
    bn_e1b_.init("bn_e1b", kF);
    e2a_.init("e2a", 3, 3, kF, 2 * kF, 1, rng);
    bn_e2a_.init("bn_e2a", 2 * kF);
    e2b_.init("e2b", 3, 3, 2 * kF, 2 * kF, 1, rng);
    bn_e2b_.init("bn_e2b", 2 * kF);
    ba_.init("ba", 3, 3, 2 * kF, 4 * kF, 1, rng);
    bn_ba_.init("bn_ba", 4 * kF);
    bb_.init("bb", 3, 3, 4 * kF, 4 * kF, 1, rng);
    bn_bb_.init("bn_bb", 4 * kF);
    d1a_.init("d1a", 3, 3, 6 * kF, 2 * kF, 1, rng);
    bn_d1a_.init("bn_d1a", 2 * kF);
    d1b_.init("d1b", 3, 3, 2 * kF, 2 * kF, 1, rng);
    bn_d1b_.init("bn_d1b", 2 * kF);
    d2a_.init("d2a", 3, 3, 3 * kF, kF, 1, rng);
    bn_d2a_.init("bn_d2a", kF);
    d2b_.init("d2b", 3, 3, kF, kF, 1, rng);
    bn_d2b_.init("bn_d2b", kF);
    head_.init("head", 1, 1, kF, 2, 0, rng);
  }

  std::string arch() const override { return "small_unet"; }
  std::unique_ptr<Predictor> clone() const override {
    return std::make_unique<SmallUnet>(*this);
  }

  std::vector<Param*> param_list() {
    std::vector<Param*> out;
    for (Conv2d* cv : convs()) {
      out.push_back(&cv->w);
      out.push_back(&cv->b);
    }
    for (BatchNorm* bn : bns()) {
      out.push_back(&bn->gamma);
      out.push_back(&bn->beta);
    }
    return out;
  }
  std::vector<Buffer*> buffer_list() {
    std::vector<Buffer*> out;
    for (BatchNorm* bn : bns()) {
      out.push_back(&bn->run_mean);
      out.push_back(&bn->run_var);
    }
    return out;
  }

  // One full pass; train selects batch-stat BN + grad accumulation.
  template <bool Train>
  double pass(const Tensor4& x, const LabelsView& labels, Tensor4* input_grad,
              Tensor4* logits_out) const {
    SmallUnet* self = const_cast<SmallUnet*>(this);
    BatchNorm::Cache cc[10];
    std::vector<uint8_t> am1, am2;
    int ci = 0;
    auto block = [&](Conv2d& cv, BatchNorm& bn, const Tensor4& in) {
      Tensor4 z = cv.forward(in);
      Tensor4 y = Train ? bn.forward_train(z, cc[ci]) : bn.forward_eval(z);
      ++ci;
      return relu(y);
    };

    Tensor4 a1 = block(self->e1a_, self->bn_e1a_, x);
    Tensor4 a2 = block(self->e1b_, self->bn_e1b_, a1);       // skip at full res
    Tensor4 p1 = maxpool2(a2, am1);
    Tensor4 a3 = block(self->e2a_, self->bn_e2a_, p1);
    Tensor4 a4 = block(self->e2b_, self->bn_e2b_, a3);       // skip at half res
    Tensor4 p2 = maxpool2(a4, am2);
    Tensor4 a5 = block(self->ba_, self->bn_ba_, p2);
    Tensor4 a6 = block(self->bb_, self->bn_bb_, a5);
    Tensor4 u1 = upsample2(a6);
    Tensor4 k1 = concat_c(u1, a4);
    Tensor4 a7 = block(self->d1a_, self->bn_d1a_, k1);
    Tensor4 a8 = block(self->d1b_, self->bn_d1b_, a7);
    Tensor4 u2 = upsample2(a8);
    Tensor4 k2 = concat_c(u2, a2);
    Tensor4 a9 = block(self->d2a_, self->bn_d2a_, k2);
    Tensor4 a10 = block(self->d2b_, self->bn_d2b_, a9);
    Tensor4 logits = head_.forward(a10);
    if (logits_out) *logits_out = logits;

    if (!labels.masks) return 0.0;  // forward-only
    Tensor4 dlogits(logits.n, logits.h, logits.w, logits.c);
    CeResult ce = softmax_ce(logits, nullptr, labels.masks, &dlogits);
    if (!input_grad && !Train) return ce.loss;

    ci = 9;
    auto unblock = [&](Conv2d& cv, BatchNorm& bn, const Tensor4& in, const Tensor4& act,
                       const Tensor4& d) {
      Tensor4 db = relu_backward(act, d);
      db = Train ? bn.backward_train(cc[ci], db, true) : bn.backward_eval(db);
      --ci;
      return cv.backward(in, db, Train);
    };

    Tensor4 d = self->head_.backward(a10, dlogits, Train);
    d = unblock(self->d2b_, self->bn_d2b_, a9, a10, d);
    d = unblock(self->d2a_, self->bn_d2a_, k2, a9, d);
    Tensor4 du2(u2.n, u2.h, u2.w, u2.c), dskip1(a2.n, a2.h, a2.w, a2.c);
    split_c(d, du2, dskip1);
    d = upsample2_backward(du2);
    d = unblock(self->d1b_, self->bn_d1b_, a7, a8, d);
    d = unblock(self->d1a_, self->bn_d1a_, k1, a7, d);
    Tensor4 du1(u1.n, u1.h, u1.w, u1.c), dskip2(a4.n, a4.h, a4.w, a4.c);
    split_c(d, du1, dskip2);
    d = upsample2_backward(du1);
    d = unblock(self->bb_, self->bn_bb_, a5, a6, d);
    d = unblock(self->ba_, self->bn_ba_, p2, a5, d);
    d = maxpool2_backward(d, am2, a4.h, a4.w);
    for (size_t k = 0; k < d.v.size(); ++k) d.v[k] += dskip2.v[k];
    d = unblock(self->e2b_, self->bn_e2b_, a3, a4, d);
    d = unblock(self->e2a_, self->bn_e2a_, p1, a3, d);
    d = maxpool2_backward(d, am1, a2.h, a2.w);
    for (size_t k = 0; k < d.v.size(); ++k) d.v[k] += dskip1.v[k];
    d = unblock(self->e1b_, self->bn_e1b_, a1, a2, d);
    d = unblock(self->e1a_, self->bn_e1a_, x, a1, d);
    if (input_grad) *input_grad = std::move(d);
    return ce.loss;
  }

  Tensor4 eval_logits(const Tensor4& x) const {
    Tensor4 logits;
    LabelsView none;
    none.task = TaskKind::segmentation;
    pass<false>(x, none, nullptr, &logits);
    return logits;
  }

  Tensor4 eval_input_grad(const Tensor4& x, const LabelsView& labels, double* loss_out) const {
    Tensor4 grad;
    *loss_out = pass<false>(x, labels, &grad, nullptr);
    return grad;
  }

  double train_backprop(const Tensor4& x, const LabelsView& labels) {
    return pass<true>(x, labels, nullptr, nullptr);
  }

 private:
  std::vector<Conv2d*> convs() {
    return {&e1a_, &e1b_, &e2a_, &e2b_, &ba_, &bb_, &d1a_, &d1b_, &d2a_, &d2b_, &head_};
  }
  std::vector<BatchNorm*> bns() {
    return {&bn_e1a_, &bn_e1b_, &bn_e2a_, &bn_e2b_, &bn_ba_,
            &bn_bb_,  &bn_d1a_, &bn_d1b_, &bn_d2a_, &bn_d2b_};
  }

  Conv2d e1a_, e1b_, e2a_, e2b_, ba_, bb_, d1a_, d1b_, d2a_, d2b_, head_;
  BatchNorm bn_e1a_, bn_e1b_, bn_e2a_, bn_e2b_, bn_ba_, bn_bb_, bn_d1a_, bn_d1b_, bn_d2a_,
      bn_d2b_;
};

}  // namespace

std::unique_ptr<Predictor> build_predictor(const std::string& arch, int h, int w, int c,
                                           int num_classes, uint64_t seed) {
  require(h >= 1 && w >= 1 && (c == 1 || c == 3), ErrorCode::IncompatibleDims,
          "input dims must be positive with 1 or 3 channels");
  if (arch == "small_cnn") return std::make_unique<SmallCnn>(h, w, c, num_classes, seed);
  if (arch == "small_unet") return std::make_unique<SmallUnet>(h, w, c, num_classes, seed);
  raise(ErrorCode::ConfigInvalid, "unknown architecture " + arch);
}

double loss(const Predictor& p, const Tensor4& images, const LabelsView& labels) {
  return p.loss(images, labels);
}
Tensor4 input_gradient(const Predictor& p, const Tensor4& images, const LabelsView& labels) {
  return p.input_gradient(images, labels);
}
double param_step(Predictor& p, const Tensor4& images, const LabelsView& labels, float lr) {
  return p.param_step(images, labels, lr);
}

std::vector<uint8_t> serialize_checkpoint(const Predictor& p,
                                          const std::string& provenance_json) {
  json meta;
  meta["format_version"] = 1;
  meta["arch"] = p.arch();
  meta["input"] = {p.in_h(), p.in_w(), p.in_c()};
  meta["num_classes"] = p.num_classes();
  meta["seed"] = p.init_seed();
  meta["momentum"] = p.momentum();
  meta["provenance"] = json::parse(provenance_json);

  ZipWriter zw;
  zw.add("arch.json", meta.dump(2));
  auto add_tensors = [&](const std::vector<TensorRef>& refs, const std::string& prefix) {
    for (const TensorRef& r : refs) {
      Tensor4 t(r.shape[0], r.shape[1], r.shape[2], r.shape[3]);
      t.v = *r.values;
      zw.add(prefix + r.name + ".bin", serialize_tensor(t, kTensorMagic));
    }
  };
  add_tensors(p.parameters(), "params/");
  add_tensors(p.buffers(), "buffers/");
  return zw.finish();
}

void save_checkpoint(const Predictor& p, const std::string& path,
                     const std::string& provenance_json) {
  write_file_bytes(path, serialize_checkpoint(p, provenance_json));
}

Checkpoint parse_checkpoint(const std::vector<uint8_t>& bytes) {
  ZipReader zr(bytes);
  if (!zr.has("arch.json")) raise(ErrorCode::MetadataMissing, "arch.json entry missing");
  json meta;
  try {
    meta = json::parse(zr.read_string("arch.json"));
  } catch (const json::exception& e) {
    raise(ErrorCode::CorruptArtifact, std::string("arch.json unparsable: ") + e.what());
  }
  require(meta.value("format_version", 0) == 1, ErrorCode::CorruptArtifact,
          "unsupported checkpoint format_version");
  auto input = meta.at("input").get<std::vector<int>>();
  require(input.size() == 3, ErrorCode::CorruptArtifact, "bad input dims in arch.json");

  Checkpoint ck;
  ck.predictor = build_predictor(meta.at("arch").get<std::string>(), input[0], input[1],
                                 input[2], meta.at("num_classes").get<int>(),
                                 meta.at("seed").get<uint64_t>());
  ck.predictor->set_momentum(meta.value("momentum", 0.9f));
  ck.provenance_json = meta.value("provenance", json::object()).dump();

  auto load_tensors = [&](std::vector<TensorRef> refs, const std::string& prefix) {
    for (TensorRef& r : refs) {
      std::string entry = prefix + r.name + ".bin";
      if (!zr.has(entry)) raise(ErrorCode::CorruptArtifact, "checkpoint missing " + entry);
      Tensor4 t = parse_tensor(zr.read(entry), kTensorMagic);
      require(t.v.size() == r.values->size(), ErrorCode::CorruptArtifact,
              "tensor size mismatch for " + entry);
      *r.values = t.v;
    }
  };
  load_tensors(ck.predictor->parameters(), "params/");
  load_tensors(ck.predictor->buffers(), "buffers/");
  return ck;
}

Checkpoint load_checkpoint(const std::string& path) {
  return parse_checkpoint(read_file_bytes(path));
}

std::string checkpoint_digest(const Predictor& p) {
  return sha256_hex(serialize_checkpoint(p, "{}"));
}

}  // namespace antilearn
