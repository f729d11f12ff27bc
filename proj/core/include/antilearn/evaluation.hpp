#ifndef ANTILEARN_EVALUATION_HPP
#define ANTILEARN_EVALUATION_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "antilearn/core_data.hpp"
#include "antilearn/predictor.hpp"

namespace antilearn {

// Fraction of correct argmax predictions; classification counts samples,
// segmentation counts pixels. Ties break toward the lowest class index.
double mean_correct(const Predictor& p, const Tensor4& images, const LabelsView& labels);

// Test-accuracy contract: classification datasets only (TaskMismatch else).
double accuracy(const Predictor& p, const ImageDataset& ds);

// Dataset-level micro-averaged IoU: sum of intersections / sum of unions
// over all images; both-empty (mask, prediction) pairs add nothing to
// either sum. Segmentation datasets only.
double iou(const Predictor& p, const ImageDataset& ds);

// Per-image IoU averaged over images (both-empty pairs skipped); emitted
// alongside the micro average for transparency.
double macro_iou(const Predictor& p, const ImageDataset& ds);

// Pairwise IoU of two equal-shape binary masks; identical masks give 1
// (including the both-empty pair), disjoint non-empty masks give 0.
double iou_masks(const uint8_t* a, const uint8_t* b, size_t count);
double iou_masks(const std::vector<uint8_t>& a, const std::vector<uint8_t>& b);

struct EvalRun {
  std::string dataset_id;
  TaskKind task = TaskKind::classification;
  std::string method = "none";        // none | synthetic | advt | em
  PerturbBudget budget;               // eps_u; zero for clean runs
  std::string regime = "std";         // std | adv
  PerturbBudget eps_a;                // zero when regime == std
  double metric = 0.0;
  uint64_t seed = 0;
  double runtime_s = 0.0;
};

struct EvalReport {
  std::string dataset_id;
  TaskKind task = TaskKind::classification;
  std::string method = "none";
  uint32_t eps_num = 0, eps_den = 255;
  std::string regime = "std";
  uint32_t eps_a_num = 0, eps_a_den = 255;
  double clean_metric = 0.0;
  double poisoned_metric = 0.0;
  double drop = 0.0;  // clean - poisoned, exact
  std::string metric_kind;  // accuracy | iou
  uint64_t seed = 0;
  double runtime_s = 0.0;
};

// Pairs a clean baseline run with a poisoned run; MismatchedRuns unless the
// two share dataset id, task, and seed.
EvalReport build_report(const EvalRun& clean, const EvalRun& poisoned);

// Fixed-width text table in the style `poisoned (↓drop)`, percentages with
// one decimal.
std::string render_table(const std::vector<EvalReport>& reports);

// Machine-readable twin. Columns: dataset, task, method, eps_num, eps_den,
// regime, eps_a_num, eps_a_den, clean, poisoned, drop, seed, runtime_s.
// Doubles use shortest round-trip formatting; parsing reproduces every
// report field exactly.
std::string reports_to_csv(const std::vector<EvalReport>& reports);
std::vector<EvalReport> reports_from_csv(const std::string& csv);
void write_reports_csv(const std::string& path, const std::vector<EvalReport>& reports);
std::vector<EvalReport> read_reports_csv(const std::string& path);

}  // namespace antilearn

#endif
