#include "antilearn/perturb_core.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "antilearn/error.hpp"
#include "antilearn/parallel.hpp"
#include "antilearn/rng.hpp"

namespace antilearn {

void PgdConfig::validate() const {
  budget.validate();
  require(steps >= 0 && steps <= 10000, ErrorCode::ConfigInvalid,
          "pgd steps must lie in [0, 10000]");
  if (step_size > 0.0f && budget.eps() > 0.0) {
    require(static_cast<double>(step_size) <= 2.0 * budget.eps() + 1e-12,
            ErrorCode::ConfigInvalid,
            "step_size > 2*eps is always clipped away and indicates misconfiguration");
  }
  require(step_size >= 0.0f, ErrorCode::ConfigInvalid, "step_size must be non-negative");
}

float PgdConfig::resolved_step_size() const {
  if (step_size > 0.0f) return step_size;
  const double eps = budget.eps();
  if (eps <= 0.0) return 0.0f;
  const double s = 2.5 * eps / std::max(steps, 1);
  return static_cast<float>(std::min(s, 2.0 * eps));
}

void project_linf(float* delta, size_t count, double eps) {
  const float e = static_cast<float>(eps);
  for (size_t i = 0; i < count; ++i) delta[i] = std::clamp(delta[i], -e, e);
}

Tensor4 project_linf(Tensor4 delta, double eps) {
  project_linf(delta.v.data(), delta.v.size(), eps);
  return delta;
}

void clip_valid(float* x, size_t count) {
  for (size_t i = 0; i < count; ++i) x[i] = std::clamp(x[i], 0.0f, 1.0f);
}

Tensor4 clip_valid(Tensor4 x) {
  clip_valid(x.v.data(), x.v.size());
  return x;
}

namespace {

constexpr uint64_t kPgdTag = 0x96d;

struct SampleOutcome {
  double best = 0;
  double start = 0;
  bool aborted = false;
};

LabelsView one_sample_labels(const LabelsView& labels, const Tensor4& images, int i) {
  LabelsView one = labels;
  if (labels.classes) one.classes = labels.classes + i;
  if (labels.masks) one.masks = labels.masks + static_cast<size_t>(i) * images.h * images.w;
  return one;
}

}  // namespace

PgdResult pgd_run(const Predictor& p, const Tensor4& images, const LabelsView& labels,
                  const PgdConfig& cfg, const Tensor4* init_delta) {
  cfg.validate();
  if (init_delta)
    require(init_delta->same_shape(images), ErrorCode::ShapeMismatch,
            "init_delta shape must match images");
  const double eps = cfg.budget.eps();
  const float alpha = cfg.resolved_step_size();
  const bool minimize = cfg.direction == PgdDirection::minimize;

  PgdResult res;
  res.delta = Tensor4::like(images);
  std::vector<SampleOutcome> outcomes(images.n);

  parallel_for(images.n, [&](int i) {
    const size_t per = images.sample_size();
    Tensor4 x(1, images.h, images.w, images.c);
    std::memcpy(x.v.data(), images.sample(i), sizeof(float) * per);
    LabelsView one = one_sample_labels(labels, images, i);

    Tensor4 delta(1, images.h, images.w, images.c);
    if (init_delta) {
      std::memcpy(delta.v.data(), init_delta->sample(i), sizeof(float) * per);
      project_linf(delta.v.data(), per, eps);
    } else if (cfg.random_start && eps > 0.0) {
      Rng rng(derive_seed(cfg.seed, kPgdTag, static_cast<uint64_t>(i)));
      for (float& d : delta.v) d = static_cast<float>(rng.uniform(-eps, eps));
    }

    SampleOutcome& oc = outcomes[i];
    Tensor4 best_delta = delta;
    auto poisoned = [&](const Tensor4& d) {
      Tensor4 xt = x;
      for (size_t k = 0; k < per; ++k) xt.v[k] = std::clamp(xt.v[k] + d.v[k], 0.0f, 1.0f);
      return xt;
    };
    // With a zero budget every iterate projects back to zero; skip the loop.
    const int steps = eps > 0.0 ? cfg.steps : 0;

    try {
      Tensor4 xt = poisoned(delta);
      Tensor4 grad;
      double l;
      if (steps > 0) {
        grad = p.input_gradient(xt, one, &l);
      } else {
        l = p.loss(xt, one);
      }
      oc.start = l;
      oc.best = l;

      for (int s = 1; s <= steps; ++s) {
        for (size_t k = 0; k < per; ++k) {
          float g = grad.v[k];
          float sg = g > 0.0f ? 1.0f : (g < 0.0f ? -1.0f : 0.0f);
          delta.v[k] += minimize ? -alpha * sg : alpha * sg;
        }
        project_linf(delta.v.data(), per, eps);
        xt = poisoned(delta);
        if (s < steps) {
          grad = p.input_gradient(xt, one, &l);
        } else {
          l = p.loss(xt, one);
        }
        if (minimize ? l < oc.best : l > oc.best) {
          oc.best = l;
          best_delta = delta;
        }
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NonFiniteLoss) throw;
      oc.aborted = true;
    }
    std::memcpy(res.delta.sample(i), best_delta.v.data(), sizeof(float) * per);
  });

  double best_sum = 0, start_sum = 0;
  for (const SampleOutcome& oc : outcomes) {
    best_sum += oc.best;
    start_sum += oc.start;
    res.non_finite_abort = res.non_finite_abort || oc.aborted;
  }
  res.best_loss = best_sum / images.n;
  res.start_loss = start_sum / images.n;
  return res;
}

}  // namespace antilearn
