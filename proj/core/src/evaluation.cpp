#include "antilearn/evaluation.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "antilearn/error.hpp"
#include "antilearn/zipfile.hpp"

namespace antilearn {

namespace {

// argmax with ties toward the lowest class index
int argmax_row(const float* z, int classes) {
  int best = 0;
  for (int k = 1; k < classes; ++k)
    if (z[k] > z[best]) best = k;
  return best;
}

std::string fmt_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

double parse_double(const std::string& s) {
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  require(ec == std::errc() && ptr == s.data() + s.size(), ErrorCode::CorruptArtifact,
          "bad double in csv: " + s);
  return v;
}

std::string pct(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f", v * 100.0);
  return buf;
}

}  // namespace

double mean_correct(const Predictor& p, const Tensor4& images, const LabelsView& labels) {
  Tensor4 logits = p.forward(images);
  const int classes = logits.c;
  const size_t rows = logits.v.size() / classes;
  const size_t pixels = static_cast<size_t>(logits.h) * logits.w;
  size_t correct = 0;
  for (size_t r = 0; r < rows; ++r) {
    int truth = labels.classes ? labels.classes[r / pixels] : labels.masks[r];
    if (argmax_row(logits.v.data() + r * classes, classes) == truth) ++correct;
  }
  return static_cast<double>(correct) / rows;
}

double accuracy(const Predictor& p, const ImageDataset& ds) {
  require(ds.task == TaskKind::classification, ErrorCode::TaskMismatch,
          "accuracy is defined for classification datasets");
  require(p.task() == TaskKind::classification, ErrorCode::TaskMismatch,
          "predictor is not a classifier");
  return mean_correct(p, ds.images, labels_of(ds));
}

namespace {

void iou_counts(const Predictor& p, const ImageDataset& ds,
                std::vector<uint64_t>& inter, std::vector<uint64_t>& uni) {
  require(ds.task == TaskKind::segmentation, ErrorCode::TaskMismatch,
          "iou is defined for segmentation datasets");
  require(p.task() == TaskKind::segmentation, ErrorCode::TaskMismatch,
          "predictor is not a segmentation net");
  Tensor4 logits = p.forward(ds.images);
  const size_t pixels = static_cast<size_t>(ds.images.h) * ds.images.w;
  inter.assign(ds.n(), 0);
  uni.assign(ds.n(), 0);
  for (int i = 0; i < ds.n(); ++i) {
    const uint8_t* truth = ds.mask(i);
    const float* z = logits.sample(i);
    uint64_t in = 0, un = 0;
    for (size_t px = 0; px < pixels; ++px) {
      int pred = z[2 * px + 1] > z[2 * px] ? 1 : 0;
      int t = truth[px];
      in += static_cast<uint64_t>(pred & t);
      un += static_cast<uint64_t>(pred | t);
    }
    inter[i] = in;
    uni[i] = un;
  }
}

}  // namespace

double iou(const Predictor& p, const ImageDataset& ds) {
  std::vector<uint64_t> inter, uni;
  iou_counts(p, ds, inter, uni);
  uint64_t in = 0, un = 0;
  for (int i = 0; i < ds.n(); ++i) {
    in += inter[i];
    un += uni[i];
  }
  return un == 0 ? 1.0 : static_cast<double>(in) / static_cast<double>(un);
}

double macro_iou(const Predictor& p, const ImageDataset& ds) {
  std::vector<uint64_t> inter, uni;
  iou_counts(p, ds, inter, uni);
  double sum = 0;
  size_t counted = 0;
  for (int i = 0; i < ds.n(); ++i) {
    if (uni[i] == 0) continue;  // both empty: excluded
    sum += static_cast<double>(inter[i]) / static_cast<double>(uni[i]);
    ++counted;
  }
  return counted == 0 ? 1.0 : sum / counted;
}

double iou_masks(const uint8_t* a, const uint8_t* b, size_t count) {
  uint64_t in = 0, un = 0;
  for (size_t i = 0; i < count; ++i) {
    in += static_cast<uint64_t>(a[i] & b[i]);
    un += static_cast<uint64_t>(a[i] | b[i]);
  }
  return un == 0 ? 1.0 : static_cast<double>(in) / static_cast<double>(un);
}

double iou_masks(const std::vector<uint8_t>& a, const std::vector<uint8_t>& b) {
  require(a.size() == b.size(), ErrorCode::ShapeMismatch, "masks must have equal shape");
  return iou_masks(a.data(), b.data(), a.size());
}

EvalReport build_report(const EvalRun& clean, const EvalRun& poisoned) {
  require(clean.dataset_id == poisoned.dataset_id, ErrorCode::MismatchedRuns,
          "clean and poisoned runs evaluate different datasets");
  require(clean.task == poisoned.task, ErrorCode::MismatchedRuns,
          "clean and poisoned runs have different tasks");
  require(clean.seed == poisoned.seed, ErrorCode::MismatchedRuns,
          "clean and poisoned runs use different seed counts");
  for (double m : {clean.metric, poisoned.metric})
    require(m >= 0.0 && m <= 1.0, ErrorCode::Generic, "metrics must lie in [0,1]");

  EvalReport r;
  r.dataset_id = poisoned.dataset_id;
  r.task = poisoned.task;
  r.method = poisoned.method;
  r.eps_num = poisoned.budget.eps_num;
  r.eps_den = poisoned.budget.eps_den;
  r.regime = poisoned.regime;
  r.eps_a_num = poisoned.eps_a.eps_num;
  r.eps_a_den = poisoned.eps_a.eps_den;
  r.clean_metric = clean.metric;
  r.poisoned_metric = poisoned.metric;
  r.drop = clean.metric - poisoned.metric;
  r.metric_kind = poisoned.task == TaskKind::classification ? "accuracy" : "iou";
  r.seed = poisoned.seed;
  r.runtime_s = poisoned.runtime_s;
  return r;
}

std::string render_table(const std::vector<EvalReport>& reports) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof(line), "%-12s %-14s %7s  %-20s %-5s %s\n", "dataset", "task",
                "clean", "protection", "mode", "result");
  out << line;
  out << std::string(76, '-') << "\n";
  for (const EvalReport& r : reports) {
    std::string protection = r.method == "none"
                                 ? "none"
                                 : r.method + "@" + std::to_string(r.eps_num) + "/" +
                                       std::to_string(r.eps_den);
    std::string mode = r.regime;
    if (r.regime == "adv")
      mode += "@" + std::to_string(r.eps_a_num) + "/" + std::to_string(r.eps_a_den);
    std::string result = pct(r.poisoned_metric) + " (↓" + pct(r.drop) + ")";
    std::snprintf(line, sizeof(line), "%-12s %-14s %7s  %-20s %-5s %s\n",
                  r.dataset_id.c_str(), to_string(r.task), pct(r.clean_metric).c_str(),
                  protection.c_str(), mode.c_str(), result.c_str());
    out << line;
  }
  return out.str();
}

std::string reports_to_csv(const std::vector<EvalReport>& reports) {
  std::ostringstream out;
  out << "dataset,task,method,eps_num,eps_den,regime,eps_a_num,eps_a_den,clean,poisoned,drop,"
         "seed,runtime_s\n";
  for (const EvalReport& r : reports) {
    out << r.dataset_id << ',' << to_string(r.task) << ',' << r.method << ',' << r.eps_num
        << ',' << r.eps_den << ',' << r.regime << ',' << r.eps_a_num << ',' << r.eps_a_den
        << ',' << fmt_double(r.clean_metric) << ',' << fmt_double(r.poisoned_metric) << ','
        << fmt_double(r.drop) << ',' << r.seed << ',' << fmt_double(r.runtime_s) << "\n";
  }
  return out.str();
}

std::vector<EvalReport> reports_from_csv(const std::string& csv) {
  std::vector<EvalReport> out;
  std::istringstream in(csv);
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (first) {
      first = false;
      continue;  // header
    }
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    require(cells.size() == 13, ErrorCode::CorruptArtifact, "report csv needs 13 columns");
    EvalReport r;
    r.dataset_id = cells[0];
    require(cells[1] == "classification" || cells[1] == "segmentation",
            ErrorCode::CorruptArtifact, "bad task " + cells[1]);
    r.task = cells[1] == "classification" ? TaskKind::classification : TaskKind::segmentation;
    r.method = cells[2];
    r.eps_num = static_cast<uint32_t>(std::stoul(cells[3]));
    r.eps_den = static_cast<uint32_t>(std::stoul(cells[4]));
    r.regime = cells[5];
    r.eps_a_num = static_cast<uint32_t>(std::stoul(cells[6]));
    r.eps_a_den = static_cast<uint32_t>(std::stoul(cells[7]));
    r.clean_metric = parse_double(cells[8]);
    r.poisoned_metric = parse_double(cells[9]);
    r.drop = parse_double(cells[10]);
    r.seed = std::stoull(cells[11]);
    r.runtime_s = parse_double(cells[12]);
    r.metric_kind = r.task == TaskKind::classification ? "accuracy" : "iou";
    require(std::abs(r.drop - (r.clean_metric - r.poisoned_metric)) <= 1e-9,
            ErrorCode::CorruptArtifact, "drop column violates clean - poisoned");
    out.push_back(std::move(r));
  }
  return out;
}

void write_reports_csv(const std::string& path, const std::vector<EvalReport>& reports) {
  std::string csv = reports_to_csv(reports);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) raise(ErrorCode::IoFailure, "cannot write " + path);
  out << csv;
}

std::vector<EvalReport> read_reports_csv(const std::string& path) {
  auto bytes = read_file_bytes(path);
  return reports_from_csv(std::string(bytes.begin(), bytes.end()));
}

}  // namespace antilearn
