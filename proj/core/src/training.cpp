#include "antilearn/training.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "antilearn/error.hpp"
#include "antilearn/evaluation.hpp"
#include "antilearn/rng.hpp"

namespace antilearn {

namespace {
constexpr uint64_t kShuffleTag = 0x70a1;
constexpr uint64_t kAdvTag = 0x70a2;
}  // namespace

void TrainConfig::validate() const {
  require(epochs >= 1, ErrorCode::ConfigInvalid, "epochs must be >= 1");
  require(batch_size >= 1, ErrorCode::ConfigInvalid, "batch_size must be >= 1");
  require(lr > 0.0f, ErrorCode::ConfigInvalid, "lr must be positive");
  require(momentum >= 0.0f && momentum < 1.0f, ErrorCode::ConfigInvalid,
          "momentum must lie in [0, 1)");
  if (adv) adv->eps_a.validate();
}

float TrainConfig::lr_at(int epoch_1based) const {
  float f = lr;
  for (int m : lr_decay_milestones)
    if (epoch_1based >= m) f *= 0.1f;
  return f;
}

namespace {

History train_loop(Predictor& p, const ImageDataset& ds, const TrainConfig& cfg,
                   bool adversarial) {
  cfg.validate();
  require(ds.n() >= 1, ErrorCode::ConfigInvalid, "training set is empty");
  require(p.task() == ds.task, ErrorCode::TaskMismatch,
          "predictor task does not match dataset");
  p.set_momentum(cfg.momentum);

  PgdConfig adv_pgd;
  double eps_a = 0.0;
  if (adversarial) {
    adv_pgd = cfg.adv->pgd;
    adv_pgd.direction = PgdDirection::maximize;
    adv_pgd.budget = cfg.adv->eps_a;
    adv_pgd.validate();
    eps_a = adv_pgd.budget.eps();
  }

  History history;
  std::vector<int> order(ds.n());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const float lr = cfg.lr_at(epoch);
    Rng shuffle_rng(derive_seed(cfg.seed, kShuffleTag, static_cast<uint64_t>(epoch)));
    shuffle_rng.shuffle(order);

    double loss_sum = 0.0, adv_sum = 0.0;
    int batch_index = 0;
    for (int lo = 0; lo < ds.n(); lo += cfg.batch_size, ++batch_index) {
      int hi = std::min(lo + cfg.batch_size, ds.n());
      std::vector<int> idx(order.begin() + lo, order.begin() + hi);
      Batch b = gather_batch(ds, idx);

      double step_loss;
      try {
        if (adversarial && eps_a > 0.0) {
          PgdConfig batch_cfg = adv_pgd;
          batch_cfg.seed = derive_seed(cfg.seed, kAdvTag, static_cast<uint64_t>(epoch),
                                       static_cast<uint64_t>(batch_index));
          PgdResult r = pgd_run(p, b.images, b.labels(), batch_cfg);
          // Best-iterate maximize contract: worst-case loss never below the
          // clean loss at the same parameters (delta0 = 0).
          require(r.best_loss >= r.start_loss, ErrorCode::Generic,
                  "pgd maximize returned an iterate below the start loss");
          loss_sum += r.start_loss * (hi - lo);
          for (size_t k = 0; k < b.images.v.size(); ++k)
            b.images.v[k] = std::clamp(b.images.v[k] + r.delta.v[k], 0.0f, 1.0f);
          step_loss = p.param_step(b.images, b.labels(), lr);
          adv_sum += step_loss * (hi - lo);
        } else {
          step_loss = p.param_step(b.images, b.labels(), lr);
          loss_sum += step_loss * (hi - lo);
          adv_sum += step_loss * (hi - lo);
        }
      } catch (const Error& e) {
        if (e.code() != ErrorCode::NonFiniteLoss) throw;
        std::ostringstream msg;
        msg << "training diverged at epoch " << epoch << ", batch " << batch_index << ": "
            << e.what();
        raise(ErrorCode::NonFiniteLoss, msg.str());
      }
    }

    EpochStats st;
    st.epoch = epoch;
    st.lr = lr;
    st.train_loss = loss_sum / ds.n();
    st.train_accuracy = mean_correct(p, ds.images, labels_of(ds));
    st.has_adv = adversarial;
    st.adv_loss = adversarial ? adv_sum / ds.n() : 0.0;
    history.push_back(st);
  }
  return history;
}

}  // namespace

History train_standard(Predictor& p, const ImageDataset& train_ds, const TrainConfig& cfg) {
  require(!cfg.adv.has_value(), ErrorCode::ConfigInvalid,
          "train_standard takes no adversarial config");
  return train_loop(p, train_ds, cfg, false);
}

History train_adversarial(Predictor& p, const ImageDataset& train_ds, const TrainConfig& cfg) {
  require(cfg.adv.has_value(), ErrorCode::ConfigInvalid,
          "train_adversarial requires cfg.adv");
  return train_loop(p, train_ds, cfg, true);
}

std::string history_to_csv(const History& history, const std::string& config_digest) {
  std::ostringstream out;
  if (!config_digest.empty()) out << "# config_digest=" << config_digest << "\n";
  out << "epoch,lr,train_loss,train_accuracy,adv_loss\n";
  for (const EpochStats& st : history) {
    char buf[160];
    if (st.has_adv) {
      std::snprintf(buf, sizeof(buf), "%d,%.9g,%.9g,%.9g,%.9g\n", st.epoch, st.lr,
                    st.train_loss, st.train_accuracy, st.adv_loss);
    } else {
      std::snprintf(buf, sizeof(buf), "%d,%.9g,%.9g,%.9g,\n", st.epoch, st.lr, st.train_loss,
                    st.train_accuracy);
    }
    out << buf;
  }
  return out.str();
}

void write_history_csv(const std::string& path, const History& history,
                       const std::string& config_digest) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) raise(ErrorCode::IoFailure, "cannot write " + path);
  out << history_to_csv(history, config_digest);
}

}  // namespace antilearn
