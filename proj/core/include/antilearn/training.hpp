#ifndef ANTILEARN_TRAINING_HPP
#define ANTILEARN_TRAINING_HPP

#include <optional>
#include <string>
#include <vector>

#include "antilearn/core_data.hpp"
#include "antilearn/perturb_core.hpp"
#include "antilearn/predictor.hpp"

namespace antilearn {

// The unauthorized user's side: plain mini-batch SGD, optionally with a
// madry-style inner maximization per batch. This module deliberately knows
// nothing about how training data was produced.
struct AdvTrainConfig {
  PerturbBudget eps_a;
  PgdConfig pgd;  // direction forced to maximize, budget forced to eps_a
};

struct TrainConfig {
  int epochs = 30;
  int batch_size = 32;
  float lr = 0.05f;
  std::vector<int> lr_decay_milestones;  // 1-based epochs; lr *= 0.1 at each
  float momentum = 0.9f;
  uint64_t seed = 0;
  std::optional<AdvTrainConfig> adv;

  void validate() const;
  float lr_at(int epoch_1based) const;
};

struct EpochStats {
  int epoch = 0;  // 1-based
  float lr = 0.0f;
  double train_loss = 0.0;      // std: mean pre-step loss; adv: mean clean eval loss
  double train_accuracy = 0.0;  // evaluation-mode, end of epoch
  double adv_loss = 0.0;        // adversarial-batch pre-step loss (adv loop only)
  bool has_adv = false;
};

using History = std::vector<EpochStats>;

// Shuffled mini-batch SGD with momentum; deterministic in cfg.seed (the
// shuffle stream is derived per epoch). cfg.adv must be absent.
History train_standard(Predictor& p, const ImageDataset& train_ds, const TrainConfig& cfg);

// Every batch is replaced by its best-iterate maximization inside the eps_a
// ball before the parameter step. With eps_a = 0 the run is bit-identical
// to train_standard under the same seed.
History train_adversarial(Predictor& p, const ImageDataset& train_ds, const TrainConfig& cfg);

std::string history_to_csv(const History& history, const std::string& config_digest);
void write_history_csv(const std::string& path, const History& history,
                       const std::string& config_digest);

}  // namespace antilearn

#endif
