#include "antilearn/generators.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "antilearn/digest.hpp"
#include "antilearn/error.hpp"
#include "antilearn/evaluation.hpp"
#include "antilearn/parallel.hpp"
#include "antilearn/rng.hpp"

namespace antilearn {

using json = nlohmann::json;

namespace {

constexpr uint64_t kSynRetryTag = 0x5e7;
constexpr uint64_t kEmModelTag = 0xe31;
constexpr uint64_t kEmShuffleTag = 0xe32;
constexpr uint64_t kEmPgdTag = 0xe33;

std::string digest_json(const json& j) { return sha256_hex(j.dump()); }

// clip(x_i + delta_slot) for a gathered index range.
Batch gather_poisoned(const ImageDataset& ds, const std::vector<int>& indices,
                      const Tensor4& deltas, Scope scope) {
  Batch b = gather_batch(ds, indices);
  const size_t per = ds.images.sample_size();
  for (size_t k = 0; k < indices.size(); ++k) {
    int slot = scope == Scope::sample_wise ? indices[k] : ds.labels[indices[k]];
    const float* d = deltas.sample(slot);
    float* px = b.images.sample(static_cast<int>(k));
    for (size_t q = 0; q < per; ++q) px[q] = std::clamp(px[q] + d[q], 0.0f, 1.0f);
  }
  return b;
}

std::vector<int> all_indices(int n) {
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  return idx;
}

// Poisoned-train loss and accuracy at the current deltas, evaluation mode.
// Chunked so peak memory stays bounded on large datasets.
std::pair<double, double> poisoned_metrics(const Predictor& p, const ImageDataset& ds,
                                           const Tensor4& deltas, Scope scope) {
  const int chunk = 256;
  double loss_sum = 0.0, correct_sum = 0.0;
  for (int lo = 0; lo < ds.n(); lo += chunk) {
    int hi = std::min(lo + chunk, ds.n());
    std::vector<int> idx(hi - lo);
    std::iota(idx.begin(), idx.end(), lo);
    Batch b = gather_poisoned(ds, idx, deltas, scope);
    loss_sum += p.loss(b.images, b.labels()) * (hi - lo);
    correct_sum += mean_correct(p, b.images, b.labels()) * (hi - lo);
  }
  return {loss_sum / ds.n(), correct_sum / ds.n()};
}

}  // namespace

// ---- synthetic -------------------------------------------------------------

PerturbationSet gen_synthetic(const ImageDataset& ds, const PerturbBudget& budget,
                              const SyntheticGenConfig& cfg) {
  require(ds.task == TaskKind::classification, ErrorCode::SegmentationUnsupported,
          "synthetic patterns are class-wise and need class labels");
  require(budget.scope == Scope::class_wise, ErrorCode::ConfigInvalid,
          "synthetic perturbation is class-wise by definition");
  budget.validate();
  const int h = ds.images.h, w = ds.images.w, c = ds.images.c;
  require(cfg.block_size >= 1 && cfg.block_size <= std::min(h, w), ErrorCode::ConfigInvalid,
          "block_size must lie in [1, min(H, W)]");

  const float eps = static_cast<float>(budget.eps());
  const int nby = (h + cfg.block_size - 1) / cfg.block_size;
  const int nbx = (w + cfg.block_size - 1) / cfg.block_size;

  PerturbationSet pset;
  pset.deltas = Tensor4(ds.num_classes, h, w, c);
  pset.budget = budget;
  pset.method = Method::synthetic;
  pset.seed = cfg.seed;
  pset.dataset_checksum = ds.checksum;

  std::vector<std::vector<int8_t>> signs(ds.num_classes);
  for (int cls = 0; cls < ds.num_classes; ++cls) {
    for (uint64_t retry = 0;; ++retry) {
      // Class-seeded stream (seed xor class), reseeded on pattern collision.
      uint64_t stream = cfg.seed ^ static_cast<uint64_t>(cls);
      if (retry > 0) stream = derive_seed(stream, kSynRetryTag, retry);
      Rng rng(stream);
      std::vector<int8_t> s(static_cast<size_t>(nby) * nbx);
      for (auto& b : s) b = rng.coin() ? 1 : -1;
      bool clash = false;
      if (eps > 0.0f && retry < 64) {
        for (int prev = 0; prev < cls && !clash; ++prev) clash = signs[prev] == s;
      }
      if (!clash) {
        signs[cls] = std::move(s);
        break;
      }
    }
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        float v = eps * signs[cls][static_cast<size_t>(y / cfg.block_size) * nbx +
                                   x / cfg.block_size];
        for (int ch = 0; ch < c; ++ch) pset.deltas.at(cls, y, x, ch) = v;
      }
  }

  pset.generator_config_digest = digest_json({{"method", "synthetic"},
                                              {"block_size", cfg.block_size},
                                              {"seed", cfg.seed},
                                              {"eps_num", budget.eps_num},
                                              {"eps_den", budget.eps_den},
                                              {"scope", to_string(budget.scope)}});
  return pset;
}

// ---- adversarial targeted ---------------------------------------------------

PerturbationSet gen_advt(const ImageDataset& ds, const PerturbBudget& budget,
                         const AdvTGenConfig& cfg) {
  require(ds.task == TaskKind::classification, ErrorCode::SegmentationUnsupported,
          "targeted adversarial generation needs class labels");
  require(budget.scope == Scope::sample_wise, ErrorCode::ConfigInvalid,
          "advt emits one delta per sample");
  budget.validate();
  require(cfg.surrogate != nullptr, ErrorCode::ConfigInvalid, "surrogate model required");
  const Predictor& surrogate = *cfg.surrogate;
  require(surrogate.task() == TaskKind::classification &&
              surrogate.num_classes() == ds.num_classes,
          ErrorCode::IncompatibleDims, "surrogate classes do not match dataset");
  require(surrogate.in_h() == ds.images.h && surrogate.in_w() == ds.images.w &&
              surrogate.in_c() == ds.images.c,
          ErrorCode::IncompatibleDims, "surrogate input dims do not match dataset");

  // The surrogate must actually be clean-trained: clean accuracy floor at
  // 1.5x chance level.
  double clean_acc = accuracy(surrogate, ds);
  double floor = 1.5 / ds.num_classes;
  if (clean_acc < floor) {
    std::ostringstream msg;
    msg << "surrogate clean accuracy " << clean_acc << " below floor " << floor;
    raise(ErrorCode::WeakSurrogate, msg.str());
  }

  std::vector<int32_t> targets(ds.n());
  for (int i = 0; i < ds.n(); ++i) targets[i] = (ds.labels[i] + 1) % ds.num_classes;

  PgdConfig pgd = cfg.pgd;
  pgd.direction = PgdDirection::minimize;
  pgd.budget = budget;
  pgd.validate();

  PerturbationSet pset;
  pset.deltas = Tensor4(ds.n(), ds.images.h, ds.images.w, ds.images.c);
  pset.budget = budget;
  pset.method = Method::advt;
  pset.seed = pgd.seed;
  pset.dataset_checksum = ds.checksum;
  pset.surrogate_digest = checkpoint_digest(surrogate);

  // Chunked over samples; pgd_run itself is per-sample, so chunking does not
  // change results.
  const int chunk = 64;
  for (int lo = 0; lo < ds.n(); lo += chunk) {
    int hi = std::min(lo + chunk, ds.n());
    std::vector<int> idx(hi - lo);
    std::iota(idx.begin(), idx.end(), lo);
    Batch b = gather_batch(ds, idx);
    LabelsView lv = b.labels();
    lv.classes = targets.data() + lo;
    PgdConfig chunk_cfg = pgd;
    chunk_cfg.seed = derive_seed(pgd.seed, static_cast<uint64_t>(lo));
    PgdResult r = pgd_run(surrogate, b.images, lv, chunk_cfg);
    for (int k = 0; k < hi - lo; ++k)
      pset.deltas.copy_sample_from(r.delta, k, lo + k);
  }

  pset.generator_config_digest = digest_json({{"method", "advt"},
                                              {"target_rule", "next_class"},
                                              {"pgd_steps", pgd.steps},
                                              {"pgd_step_size", pgd.resolved_step_size()},
                                              {"pgd_random_start", pgd.random_start},
                                              {"seed", pgd.seed},
                                              {"eps_num", budget.eps_num},
                                              {"eps_den", budget.eps_den},
                                              {"scope", to_string(budget.scope)},
                                              {"surrogate", pset.surrogate_digest}});
  return pset;
}

// ---- error-minimizing -------------------------------------------------------

void EmGenConfig::validate(const ImageDataset& ds) const {
  require(stop_train_accuracy > 0.0f && stop_train_accuracy <= 1.0f, ErrorCode::ConfigInvalid,
          "stop threshold must lie in (0, 1]");
  require(model_steps_per_round >= 1 && max_rounds >= 1, ErrorCode::ConfigInvalid,
          "model_steps_per_round and max_rounds must be >= 1");
  require(batch_size >= 1, ErrorCode::ConfigInvalid, "batch_size must be >= 1");
  if (scope == Scope::class_wise)
    require(ds.task == TaskKind::classification, ErrorCode::ConfigInvalid,
            "class-wise EM noise needs class labels; segmentation is sample-wise only");
}

namespace {

// One class-wise PGD sweep: per step, per-sample input gradients are averaged
// within each class before the sign step. Best iterate tracked per class by
// the class-mean loss.
void em_classwise_sweep(const Predictor& p, const ImageDataset& ds, Tensor4& deltas,
                        const PgdConfig& pgd) {
  const double eps = pgd.budget.eps();
  if (eps <= 0.0) return;
  const float alpha = pgd.resolved_step_size();
  const int classes = ds.num_classes;
  const size_t per = ds.images.sample_size();

  std::vector<double> class_count(classes, 0.0);
  for (int i = 0; i < ds.n(); ++i) class_count[ds.labels[i]] += 1.0;

  Tensor4 best = deltas;
  std::vector<double> best_loss(classes, 0.0);
  std::vector<double> cur_loss(classes, 0.0);
  Tensor4 grad_sum(classes, ds.images.h, ds.images.w, ds.images.c);

  auto sweep_eval = [&](bool need_grads) {
    std::fill(cur_loss.begin(), cur_loss.end(), 0.0);
    std::fill(grad_sum.v.begin(), grad_sum.v.end(), 0.0f);
    const int chunk = 64;
    for (int lo = 0; lo < ds.n(); lo += chunk) {
      int hi = std::min(lo + chunk, ds.n());
      std::vector<int> idx(hi - lo);
      std::iota(idx.begin(), idx.end(), lo);
      Batch b = gather_poisoned(ds, idx, deltas, Scope::class_wise);
      if (need_grads) {
        Tensor4 g = p.input_gradient(b.images, b.labels(), nullptr);
        for (int k = 0; k < hi - lo; ++k) {
          int cls = ds.labels[lo + k];
          float* dst = grad_sum.sample(cls);
          const float* src = g.sample(k);
          for (size_t q = 0; q < per; ++q) dst[q] += src[q];
        }
      }
      // Per-sample losses for the per-class means.
      for (int k = 0; k < hi - lo; ++k) {
        Tensor4 one(1, ds.images.h, ds.images.w, ds.images.c);
        one.copy_sample_from(b.images, k, 0);
        LabelsView lv = b.labels();
        LabelsView ov = lv;
        if (lv.classes) ov.classes = lv.classes + k;
        if (lv.masks) ov.masks = lv.masks + static_cast<size_t>(k) * per;
        cur_loss[ds.labels[lo + k]] += p.loss(one, ov);
      }
    }
    for (int cls = 0; cls < classes; ++cls)
      if (class_count[cls] > 0) cur_loss[cls] /= class_count[cls];
  };

  sweep_eval(pgd.steps > 0);
  best_loss = cur_loss;

  for (int s = 1; s <= pgd.steps; ++s) {
    for (int cls = 0; cls < classes; ++cls) {
      if (class_count[cls] == 0) continue;
      float* d = deltas.sample(cls);
      const float* g = grad_sum.sample(cls);
      for (size_t q = 0; q < per; ++q) {
        float sg = g[q] > 0.0f ? 1.0f : (g[q] < 0.0f ? -1.0f : 0.0f);
        d[q] -= alpha * sg;
      }
    }
    project_linf(deltas.v.data(), deltas.v.size(), eps);
    sweep_eval(s < pgd.steps);
    for (int cls = 0; cls < classes; ++cls)
      if (cur_loss[cls] < best_loss[cls]) {
        best_loss[cls] = cur_loss[cls];
        std::memcpy(best.sample(cls), deltas.sample(cls), sizeof(float) * per);
      }
  }
  deltas = best;
}

}  // namespace

std::pair<PerturbationSet, EmTrace> gen_em(const ImageDataset& ds, const PerturbBudget& budget,
                                           const EmGenConfig& cfg) {
  budget.validate();
  cfg.validate(ds);
  require(budget.scope == cfg.scope, ErrorCode::ConfigInvalid,
          "budget scope must match the EM scope");

  std::string arch = cfg.arch;
  if (arch.empty())
    arch = ds.task == TaskKind::classification ? "small_cnn" : "small_unet";
  auto scratch = build_predictor(arch, ds.images.h, ds.images.w, ds.images.c, ds.num_classes,
                                 derive_seed(cfg.seed, kEmModelTag));

  PgdConfig pgd = cfg.inner_pgd;
  pgd.direction = PgdDirection::minimize;
  pgd.budget = budget;
  pgd.budget.scope = Scope::sample_wise;  // projection radius only
  pgd.validate();

  const int slots = cfg.scope == Scope::sample_wise ? ds.n() : ds.num_classes;
  PerturbationSet pset;
  pset.deltas = Tensor4(slots, ds.images.h, ds.images.w, ds.images.c);
  pset.budget = budget;
  pset.method = Method::em;
  pset.seed = cfg.seed;
  pset.dataset_checksum = ds.checksum;

  EmTrace trace;
  std::vector<int> order = all_indices(ds.n());

  for (int round = 1; round <= cfg.max_rounds; ++round) {
    // (a) M optimizer steps on the current poisoned data.
    Rng shuffle_rng(derive_seed(cfg.seed, kEmShuffleTag, static_cast<uint64_t>(round)));
    shuffle_rng.shuffle(order);
    int cursor = 0;
    for (int m = 0; m < cfg.model_steps_per_round; ++m) {
      std::vector<int> idx;
      idx.reserve(cfg.batch_size);
      for (int k = 0; k < cfg.batch_size; ++k) {
        idx.push_back(order[cursor]);
        cursor = (cursor + 1) % ds.n();
      }
      Batch b = gather_poisoned(ds, idx, pset.deltas, cfg.scope);
      scratch->param_step(b.images, b.labels(), cfg.lr);
    }

    // (b) full sweep refreshing every delta, warm-started.
    if (cfg.scope == Scope::sample_wise) {
      const int chunk = 64;
      for (int lo = 0; lo < ds.n(); lo += chunk) {
        int hi = std::min(lo + chunk, ds.n());
        std::vector<int> idx(hi - lo);
        std::iota(idx.begin(), idx.end(), lo);
        Batch b = gather_batch(ds, idx);
        Tensor4 init(hi - lo, ds.images.h, ds.images.w, ds.images.c);
        for (int k = 0; k < hi - lo; ++k) init.copy_sample_from(pset.deltas, lo + k, k);
        PgdConfig chunk_cfg = pgd;
        chunk_cfg.seed = derive_seed(cfg.seed, kEmPgdTag, static_cast<uint64_t>(round),
                                     static_cast<uint64_t>(lo));
        PgdResult r = pgd_run(*scratch, b.images, b.labels(), chunk_cfg, &init);
        for (int k = 0; k < hi - lo; ++k) pset.deltas.copy_sample_from(r.delta, k, lo + k);
      }
    } else {
      em_classwise_sweep(*scratch, ds, pset.deltas, pgd);
    }

    auto [l, acc] = poisoned_metrics(*scratch, ds, pset.deltas, cfg.scope);
    trace.rounds.push_back({round, l, acc});
    if (acc >= cfg.stop_train_accuracy) {
      trace.converged = true;
      break;
    }
  }
  pset.no_convergence = !trace.converged;

  pset.generator_config_digest = digest_json({{"method", "em"},
                                              {"model_steps_per_round", cfg.model_steps_per_round},
                                              {"pgd_steps", pgd.steps},
                                              {"pgd_step_size", pgd.resolved_step_size()},
                                              {"stop_train_accuracy", cfg.stop_train_accuracy},
                                              {"max_rounds", cfg.max_rounds},
                                              {"scope", to_string(cfg.scope)},
                                              {"seed", cfg.seed},
                                              {"batch_size", cfg.batch_size},
                                              {"lr", cfg.lr},
                                              {"arch", arch},
                                              {"eps_num", budget.eps_num},
                                              {"eps_den", budget.eps_den}});
  return {std::move(pset), std::move(trace)};
}

std::string EmTrace::to_csv() const {
  std::ostringstream out;
  out << "round,train_loss,train_accuracy\n";
  for (const EmRound& r : rounds) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "%d,%.9g,%.9g\n", r.round, r.train_loss, r.train_accuracy);
    out << buf;
  }
  return out.str();
}

}  // namespace antilearn
