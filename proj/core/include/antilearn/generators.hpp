#ifndef ANTILEARN_GENERATORS_HPP
#define ANTILEARN_GENERATORS_HPP

#include <string>
#include <utility>
#include <vector>

#include "antilearn/core_data.hpp"
#include "antilearn/perturb_core.hpp"
#include "antilearn/predictor.hpp"

namespace antilearn {

// Class-wise random block patterns: a linearly separable shortcut tied to
// the label. Each class draws one +-eps sign per block from its own stream.
struct SyntheticGenConfig {
  int block_size = 4;
  uint64_t seed = 0;
};

PerturbationSet gen_synthetic(const ImageDataset& ds, const PerturbBudget& budget,
                              const SyntheticGenConfig& cfg);

// Targeted adversarial noise against a clean surrogate: every sample is
// pushed toward the next class under the frozen surrogate.
struct AdvTGenConfig {
  const Predictor* surrogate = nullptr;  // clean-trained, caller-owned
  PgdConfig pgd;                         // direction forced to minimize
  enum class TargetRule { next_class } target_rule = TargetRule::next_class;
};

PerturbationSet gen_advt(const ImageDataset& ds, const PerturbBudget& budget,
                         const AdvTGenConfig& cfg);

// Error-minimizing noise: alternate short model training on the poisoned
// data with a full PGD sweep that refreshes all deltas, until the scratch
// model fits the poisoned training set.
struct EmGenConfig {
  int model_steps_per_round = 10;      // M
  PgdConfig inner_pgd;                 // direction forced to minimize, warm-started
  float stop_train_accuracy = 0.99f;   // stop threshold on poisoned train data
  int max_rounds = 50;
  Scope scope = Scope::sample_wise;    // class_wise averages grads within a class
  uint64_t seed = 0;
  int batch_size = 32;
  float lr = 0.05f;
  std::string arch;                    // "" = small_cnn / small_unet by task

  void validate(const ImageDataset& ds) const;
};

struct EmRound {
  int round = 0;
  double train_loss = 0.0;      // on poisoned train data, end of round
  double train_accuracy = 0.0;  // samples (classification) or pixels (segmentation)
};

struct EmTrace {
  std::vector<EmRound> rounds;
  bool converged = false;

  std::string to_csv() const;  // columns: round, train_loss, train_accuracy
};

std::pair<PerturbationSet, EmTrace> gen_em(const ImageDataset& ds, const PerturbBudget& budget,
                                           const EmGenConfig& cfg);

}  // namespace antilearn

#endif
