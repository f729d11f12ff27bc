#ifndef ANTILEARN_PERTURB_CORE_HPP
#define ANTILEARN_PERTURB_CORE_HPP

#include <cstdint>

#include "antilearn/core_data.hpp"
#include "antilearn/predictor.hpp"
#include "antilearn/tensor.hpp"

namespace antilearn {

enum class PgdDirection { minimize, maximize };

struct PgdConfig {
  int steps = 10;
  float step_size = 0.0f;  // pixel units; 0 selects min(2.5*eps/steps, 2*eps)
  PgdDirection direction = PgdDirection::minimize;
  PerturbBudget budget;
  bool random_start = false;
  uint64_t seed = 0;

  void validate() const;
  float resolved_step_size() const;
};

// Elementwise clamp onto the closed L-inf ball of radius eps. Idempotent.
void project_linf(float* delta, size_t count, double eps);
Tensor4 project_linf(Tensor4 delta, double eps);

// Clamp pixels onto the valid [0,1] range. Idempotent.
void clip_valid(float* x, size_t count);
Tensor4 clip_valid(Tensor4 x);

struct PgdResult {
  Tensor4 delta;          // best iterate per sample, inside the budget exactly
  double best_loss = 0;   // mean over samples of each sample's best loss
  double start_loss = 0;  // mean loss at delta0 (clean loss when random_start=false)
  bool non_finite_abort = false;
};

// Sign-gradient PGD with best-iterate tracking. The predictor must be
// frozen (evaluation mode is implicit: all Predictor eval entry points are
// per-sample), images must lie in [0,1]. x+delta is clamped to the valid
// range at every step; the per-sample trajectory starts at init_delta when
// given, else at a uniform draw in the ball (random_start) or zero.
// Deterministic in (parameters, batch, cfg); batched and per-sample runs
// are bit-identical. On NonFiniteLoss the affected sample keeps its last
// finite best iterate and the abort flag is set.
PgdResult pgd_run(const Predictor& p, const Tensor4& images, const LabelsView& labels,
                  const PgdConfig& cfg, const Tensor4* init_delta = nullptr);

}  // namespace antilearn

#endif
