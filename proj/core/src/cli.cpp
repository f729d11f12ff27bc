#include "antilearn/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "antilearn/core_data.hpp"
#include "antilearn/digest.hpp"
#include "antilearn/error.hpp"
#include "antilearn/evaluation.hpp"
#include "antilearn/generators.hpp"
#include "antilearn/ingestion.hpp"
#include "antilearn/predictor.hpp"
#include "antilearn/rng.hpp"
#include "antilearn/training.hpp"
#include "antilearn/zipfile.hpp"

namespace antilearn::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr uint64_t kInitTag = 0x171;
constexpr uint64_t kSurrogateTag = 0x172;
constexpr uint64_t kAdvtTag = 0x173;
constexpr uint64_t kAdvTrainTag = 0x174;

// G=generate A=apply T=train E=eval R=reproduce
struct SchemaEntry {
  const char* key;
  const char* def;
  const char* help;
  const char* cmds;
};

const SchemaEntry kSchema[] = {
    {"seed", "7", "base seed; every stream is derived from it", "GATER"},
    {"out", "out", "output directory", "GATER"},
    {"dataset", "blobs16", "blobs16|shapes_seg|medmnist|segfolder|archive", "GATE"},
    {"dataset_path", "", "path for medmnist|segfolder|archive datasets", "GATE"},
    {"n_train", "192", "synthetic datasets: train size", "GATE"},
    {"n_test", "96", "synthetic datasets: test size", "GATE"},
    {"noise_std", "0.1", "synthetic datasets: pixel noise sigma", "GATE"},
    {"image_size", "0", "synthetic datasets: size override (0 = default)", "GATE"},
    {"method", "em", "synthetic|advt|em", "G"},
    {"eps", "8/255", "L-inf budget as a fraction of dynamic range", "G"},
    {"scope", "auto", "sample_wise|class_wise|auto", "G"},
    {"block_size", "4", "synthetic: block size in pixels", "G"},
    {"pgd_steps", "0", "attack steps (0 = method default)", "G"},
    {"pgd_step_size", "0", "attack step size in pixel units (0 = auto)", "G"},
    {"pgd_random_start", "false", "start attacks from a random point in the ball", "G"},
    {"em_model_steps", "10", "EM: model updates per round", "G"},
    {"em_stop_acc", "0.99", "EM: poisoned-train accuracy stop threshold", "G"},
    {"em_max_rounds", "50", "EM: round cap", "G"},
    {"em_batch_size", "32", "EM: scratch-model batch size", "G"},
    {"em_lr", "0.05", "EM: scratch-model learning rate", "G"},
    {"surrogate", "", "advt: clean surrogate checkpoint ('' = train one)", "G"},
    {"surrogate_epochs", "15", "advt: epochs for the in-place surrogate", "G"},
    {"perturbation", "", "perturbation artifact path", "AT"},
    {"quantize", "false", "quantize images to 8-bit (lossy export path)", "AT"},
    {"arch", "auto", "small_cnn|small_unet|auto", "T"},
    {"epochs", "30", "training epochs", "T"},
    {"batch_size", "32", "training batch size", "T"},
    {"lr", "0.05", "initial learning rate", "T"},
    {"momentum", "0.9", "SGD momentum", "T"},
    {"lr_milestones", "", "comma-separated 1-based epochs with 10x lr decay", "T"},
    {"adv_eps", "", "adversarial-training radius ('' = standard training)", "T"},
    {"adv_steps", "5", "adversarial training: attack steps", "T"},
    {"adv_step_size", "0", "adversarial training: attack step size (0 = auto)", "T"},
    {"adv_random_start", "false", "adversarial training: random attack start", "T"},
    {"checkpoint", "", "checkpoint to evaluate", "E"},
    {"baseline", "", "clean-run checkpoint paired for the drop column", "E"},
    {"suite", "desk", "reproduction suite", "R"},
};

char command_letter(const std::string& command) {
  if (command == "generate") return 'G';
  if (command == "apply") return 'A';
  if (command == "train") return 'T';
  if (command == "eval") return 'E';
  if (command == "reproduce") return 'R';
  raise(ErrorCode::ConfigInvalid, "unknown command " + command);
}

struct Timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
};

void check_enum(const RunConfig& cfg, const std::string& key,
                std::initializer_list<const char*> allowed) {
  const std::string& v = cfg.str(key);
  for (const char* a : allowed)
    if (v == a) return;
  raise(ErrorCode::ConfigInvalid, "invalid value for " + key + ": " + v);
}

}  // namespace

const std::string& RunConfig::str(const std::string& key) const {
  auto it = values.find(key);
  require(it != values.end(), ErrorCode::ConfigInvalid,
          "key " + key + " is not part of command " + command);
  return it->second;
}

int64_t RunConfig::i64(const std::string& key) const {
  try {
    size_t pos = 0;
    int64_t v = std::stoll(str(key), &pos);
    require(pos == str(key).size(), ErrorCode::ConfigInvalid, "trailing junk in " + key);
    return v;
  } catch (const std::logic_error&) {
    raise(ErrorCode::ConfigInvalid, "cannot parse integer " + key + "=" + str(key));
  }
}

uint64_t RunConfig::u64(const std::string& key) const {
  try {
    size_t pos = 0;
    uint64_t v = std::stoull(str(key), &pos);
    require(pos == str(key).size(), ErrorCode::ConfigInvalid, "trailing junk in " + key);
    return v;
  } catch (const std::logic_error&) {
    raise(ErrorCode::ConfigInvalid, "cannot parse integer " + key + "=" + str(key));
  }
}

double RunConfig::f64(const std::string& key) const {
  try {
    size_t pos = 0;
    double v = std::stod(str(key), &pos);
    require(pos == str(key).size(), ErrorCode::ConfigInvalid, "trailing junk in " + key);
    return v;
  } catch (const std::logic_error&) {
    raise(ErrorCode::ConfigInvalid, "cannot parse number " + key + "=" + str(key));
  }
}

bool RunConfig::flag(const std::string& key) const {
  const std::string& v = str(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  raise(ErrorCode::ConfigInvalid, "boolean expected for " + key + ", got " + v);
}

std::vector<int> RunConfig::int_list(const std::string& key) const {
  std::vector<int> out;
  std::istringstream in(str(key));
  std::string tok;
  while (std::getline(in, tok, ',')) {
    if (tok.empty()) continue;
    try {
      out.push_back(std::stoi(tok));
    } catch (const std::logic_error&) {
      raise(ErrorCode::ConfigInvalid, "cannot parse list entry in " + key + ": " + tok);
    }
  }
  return out;
}

std::string RunConfig::canonical_text() const {
  std::ostringstream out;
  out << "command=" << command << "\n";
  for (const auto& [k, v] : values) out << k << "=" << v << "\n";  // std::map: sorted
  return out.str();
}

std::string RunConfig::digest() const { return sha256_hex(canonical_text()); }

RunConfig make_config(const std::string& command,
                      const std::map<std::string, std::string>& overrides) {
  char letter = command_letter(command);
  RunConfig cfg;
  cfg.command = command;
  for (const SchemaEntry& e : kSchema)
    if (std::strchr(e.cmds, letter)) cfg.values[e.key] = e.def;
  for (const auto& [k, v] : overrides) {
    require(cfg.values.count(k) != 0, ErrorCode::ConfigInvalid,
            "unknown key for command " + command + ": " + k);
    cfg.values[k] = v;
  }
  return cfg;
}

namespace {

struct LoadedData {
  ImageDataset train;
  ImageDataset test;
  std::string id;
};

LoadedData load_dataset(const RunConfig& cfg) {
  check_enum(cfg, "dataset", {"blobs16", "shapes_seg", "medmnist", "segfolder", "archive"});
  const std::string& kind = cfg.str("dataset");
  LoadedData out;
  if (kind == "blobs16" || kind == "shapes_seg") {
    SyntheticSpec spec;
    spec.name = kind == "blobs16" ? SyntheticSpec::Name::blobs16
                                  : SyntheticSpec::Name::shapes_seg;
    spec.n_train = static_cast<int>(cfg.i64("n_train"));
    spec.n_test = static_cast<int>(cfg.i64("n_test"));
    spec.seed = cfg.u64("seed");
    spec.image_size = static_cast<int>(cfg.i64("image_size"));
    spec.noise_std = static_cast<float>(cfg.f64("noise_std"));
    auto [train, test] = make_synthetic(spec);
    out.train = std::move(train);
    out.test = std::move(test);
    out.id = kind;
    return out;
  }
  const std::string& path = cfg.str("dataset_path");
  require(!path.empty(), ErrorCode::ConfigInvalid, "dataset_path required for " + kind);
  if (kind == "medmnist") {
    auto [train, test] = load_medmnist_archive(path);
    out.train = std::move(train);
    out.test = std::move(test);
  } else if (kind == "segfolder") {
    auto [train, test] = load_segmentation_folder(path);
    out.train = std::move(train);
    out.test = std::move(test);
  } else {
    out.train = load_dataset_archive(path, Split::train);
    out.test = out.train;
    out.test.split = Split::test;
    out.test.seal();
  }
  out.id = fs::path(path).stem().string();
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) raise(ErrorCode::IoFailure, "cannot write " + path.string());
  f << text;
}

fs::path prepare_out(const RunConfig& cfg) {
  fs::path out(cfg.str("out"));
  fs::create_directories(out);
  write_text(out / "config.txt", cfg.canonical_text());
  return out;
}

std::string arch_for(const ImageDataset& ds) {
  return ds.task == TaskKind::classification ? "small_cnn" : "small_unet";
}

std::unique_ptr<Predictor> train_surrogate(const ImageDataset& train, uint64_t seed,
                                           int epochs) {
  auto p = build_predictor(arch_for(train), train.images.h, train.images.w, train.images.c,
                           train.num_classes, derive_seed(seed, kSurrogateTag, 1));
  TrainConfig tc;
  tc.epochs = epochs;
  tc.batch_size = 32;
  tc.lr = 0.05f;
  tc.seed = derive_seed(seed, kSurrogateTag, 2);
  train_standard(*p, train, tc);
  return p;
}

}  // namespace

int cmd_generate(const RunConfig& cfg) {
  check_enum(cfg, "method", {"synthetic", "advt", "em"});
  Timer timer;
  LoadedData data = load_dataset(cfg);
  const std::string& method = cfg.str("method");

  check_enum(cfg, "scope", {"auto", "sample_wise", "class_wise"});
  Scope scope;
  if (cfg.str("scope") == "auto") {
    scope = method == "synthetic" ? Scope::class_wise : Scope::sample_wise;
  } else {
    scope = cfg.str("scope") == "class_wise" ? Scope::class_wise : Scope::sample_wise;
  }
  PerturbBudget budget = PerturbBudget::parse(cfg.str("eps"), scope);

  PerturbationSet pset;
  std::string trace_csv;
  if (method == "synthetic") {
    SyntheticGenConfig gc;
    gc.block_size = static_cast<int>(cfg.i64("block_size"));
    gc.seed = cfg.u64("seed");
    pset = gen_synthetic(data.train, budget, gc);
  } else if (method == "advt") {
    std::unique_ptr<Predictor> owned;
    if (cfg.str("surrogate").empty()) {
      owned = train_surrogate(data.train, cfg.u64("seed"),
                              static_cast<int>(cfg.i64("surrogate_epochs")));
    } else {
      owned = load_checkpoint(cfg.str("surrogate")).predictor;
    }
    AdvTGenConfig gc;
    gc.surrogate = owned.get();
    gc.pgd.steps = cfg.i64("pgd_steps") > 0 ? static_cast<int>(cfg.i64("pgd_steps")) : 20;
    gc.pgd.step_size = static_cast<float>(cfg.f64("pgd_step_size"));
    gc.pgd.random_start = cfg.flag("pgd_random_start");
    gc.pgd.seed = derive_seed(cfg.u64("seed"), kAdvtTag);
    pset = gen_advt(data.train, budget, gc);
  } else {
    EmGenConfig gc;
    gc.model_steps_per_round = static_cast<int>(cfg.i64("em_model_steps"));
    gc.inner_pgd.steps =
        cfg.i64("pgd_steps") > 0 ? static_cast<int>(cfg.i64("pgd_steps")) : 10;
    gc.inner_pgd.step_size = static_cast<float>(cfg.f64("pgd_step_size"));
    gc.stop_train_accuracy = static_cast<float>(cfg.f64("em_stop_acc"));
    gc.max_rounds = static_cast<int>(cfg.i64("em_max_rounds"));
    gc.scope = scope;
    gc.seed = cfg.u64("seed");
    gc.batch_size = static_cast<int>(cfg.i64("em_batch_size"));
    gc.lr = static_cast<float>(cfg.f64("em_lr"));
    auto [p, trace] = gen_em(data.train, budget, gc);
    pset = std::move(p);
    trace_csv = trace.to_csv();
  }

  BudgetReport report = validate_budget(pset);
  require(report.ok, ErrorCode::Generic, "generator emitted an out-of-budget delta");

  fs::path out = prepare_out(cfg);
  std::vector<uint8_t> artifact = serialize_perturbation(pset);
  write_file_bytes((out / "perturbation.alp").string(), artifact);
  if (!trace_csv.empty()) write_text(out / "em_trace.csv", trace_csv);

  std::cout << "generate method=" << method << " eps=" << budget.eps_text()
            << " scope=" << to_string(pset.budget.scope) << " deltas=" << pset.deltas.n
            << " budget=OK wall=" << timer.seconds() << "s digest=" << sha256_hex(artifact)
            << "\n";
  if (pset.no_convergence) {
    std::cerr << "warning: EM stopped at max_rounds before reaching the stop accuracy "
                 "(NoConvergence); artifact written anyway\n";
    return exit_code(ErrorCode::NoConvergence);
  }
  return 0;
}

int cmd_apply(const RunConfig& cfg) {
  Timer timer;
  LoadedData data = load_dataset(cfg);
  require(!cfg.str("perturbation").empty(), ErrorCode::ConfigInvalid,
          "apply requires perturbation=<artifact>");
  PerturbationSet pset = load_perturbation(cfg.str("perturbation"));
  ImageDataset poisoned = apply_perturbation(data.train, pset);
  bool quantize = cfg.flag("quantize");
  if (quantize) quantize_images_u8(poisoned);

  fs::path out = prepare_out(cfg);
  save_dataset_archive(poisoned, (out / "poisoned.npz").string(), quantize);
  std::cout << "apply dataset=" << data.id << " method=" << to_string(pset.method)
            << " eps=" << pset.budget.eps_text() << " quantize=" << (quantize ? "u8" : "f32")
            << " wall=" << timer.seconds() << "s checksum=" << poisoned.checksum << "\n";
  return 0;
}

namespace {

struct TrainOutcome {
  std::unique_ptr<Predictor> predictor;
  History history;
  std::string method = "none";
  PerturbBudget eps_u;
  std::string regime = "std";
  PerturbBudget eps_a;
};

json provenance_json(const RunConfig& cfg, const LoadedData& data, const TrainOutcome& oc,
                     const std::string& trained_on_checksum,
                     const std::string& perturbation_digest) {
  json prov;
  prov["config_digest"] = cfg.digest();
  prov["dataset_id"] = data.id;
  prov["dataset_checksum"] = data.train.checksum;
  prov["trained_on_checksum"] = trained_on_checksum;
  prov["perturbation_digest"] = perturbation_digest;
  prov["method"] = oc.method;
  prov["eps_num"] = oc.eps_u.eps_num;
  prov["eps_den"] = oc.eps_u.eps_den;
  prov["regime"] = oc.regime;
  prov["eps_a_num"] = oc.eps_a.eps_num;
  prov["eps_a_den"] = oc.eps_a.eps_den;
  prov["seed"] = cfg.u64("seed");
  return prov;
}

}  // namespace

int cmd_train(const RunConfig& cfg) {
  Timer timer;
  LoadedData data = load_dataset(cfg);

  TrainOutcome oc;
  oc.eps_u.eps_num = 0;
  oc.eps_a.eps_num = 0;
  ImageDataset train_ds = data.train;
  std::string perturbation_digest;
  if (!cfg.str("perturbation").empty()) {
    std::vector<uint8_t> bytes = read_file_bytes(cfg.str("perturbation"));
    perturbation_digest = sha256_hex(bytes);
    PerturbationSet pset = parse_perturbation(bytes);
    train_ds = apply_perturbation(data.train, pset);
    oc.method = to_string(pset.method);
    oc.eps_u = pset.budget;
  }
  if (cfg.flag("quantize")) quantize_images_u8(train_ds);

  check_enum(cfg, "arch", {"auto", "small_cnn", "small_unet"});
  std::string arch = cfg.str("arch") == "auto" ? arch_for(train_ds) : cfg.str("arch");
  auto p = build_predictor(arch, train_ds.images.h, train_ds.images.w, train_ds.images.c,
                           train_ds.num_classes, derive_seed(cfg.u64("seed"), kInitTag));

  TrainConfig tc;
  tc.epochs = static_cast<int>(cfg.i64("epochs"));
  tc.batch_size = static_cast<int>(cfg.i64("batch_size"));
  tc.lr = static_cast<float>(cfg.f64("lr"));
  tc.momentum = static_cast<float>(cfg.f64("momentum"));
  tc.lr_decay_milestones = cfg.int_list("lr_milestones");
  tc.seed = cfg.u64("seed");

  if (!cfg.str("adv_eps").empty()) {
    AdvTrainConfig adv;
    adv.eps_a = PerturbBudget::parse(cfg.str("adv_eps"));
    adv.pgd.steps = static_cast<int>(cfg.i64("adv_steps"));
    adv.pgd.step_size = static_cast<float>(cfg.f64("adv_step_size"));
    adv.pgd.random_start = cfg.flag("adv_random_start");
    adv.pgd.seed = derive_seed(cfg.u64("seed"), kAdvTrainTag);
    tc.adv = adv;
    oc.regime = "adv";
    oc.eps_a = adv.eps_a;
    oc.history = train_adversarial(*p, train_ds, tc);
  } else {
    oc.history = train_standard(*p, train_ds, tc);
  }
  oc.predictor = std::move(p);

  fs::path out = prepare_out(cfg);
  json prov = provenance_json(cfg, data, oc, train_ds.checksum, perturbation_digest);
  save_checkpoint(*oc.predictor, (out / "checkpoint.alc").string(), prov.dump());
  write_history_csv((out / "history.csv").string(), oc.history, cfg.digest());

  const EpochStats& last = oc.history.back();
  std::cout << "train dataset=" << data.id << " method=" << oc.method
            << " regime=" << oc.regime << " epochs=" << tc.epochs
            << " final_loss=" << last.train_loss << " final_acc=" << last.train_accuracy
            << " wall=" << timer.seconds() << "s\n";
  return 0;
}

int cmd_eval(const RunConfig& cfg) {
  LoadedData data = load_dataset(cfg);
  require(!cfg.str("checkpoint").empty(), ErrorCode::ConfigInvalid,
          "eval requires checkpoint=<path>");
  Checkpoint ck = load_checkpoint(cfg.str("checkpoint"));
  json prov = json::parse(ck.provenance_json);
  require(prov.value("dataset_id", "") == data.id, ErrorCode::MismatchedRuns,
          "checkpoint was trained on a different dataset id");

  auto metric_of = [&](const Predictor& p) {
    return data.test.task == TaskKind::classification ? accuracy(p, data.test)
                                                      : iou(p, data.test);
  };

  Timer timer;
  EvalRun poisoned;
  poisoned.dataset_id = data.id;
  poisoned.task = data.test.task;
  poisoned.method = prov.value("method", "none");
  poisoned.budget.eps_num = prov.value("eps_num", 0u);
  poisoned.budget.eps_den = prov.value("eps_den", 255u);
  poisoned.regime = prov.value("regime", "std");
  poisoned.eps_a.eps_num = prov.value("eps_a_num", 0u);
  poisoned.eps_a.eps_den = prov.value("eps_a_den", 255u);
  poisoned.seed = prov.value("seed", static_cast<uint64_t>(0));
  poisoned.metric = metric_of(*ck.predictor);
  poisoned.runtime_s = timer.seconds();

  EvalReport report;
  if (cfg.str("baseline").empty()) {
    report = build_report(poisoned, poisoned);
  } else {
    Checkpoint base = load_checkpoint(cfg.str("baseline"));
    json bprov = json::parse(base.provenance_json);
    require(bprov.value("dataset_id", "") == data.id, ErrorCode::MismatchedRuns,
            "baseline was trained on a different dataset id");
    require(bprov.value("method", "") == "none", ErrorCode::MismatchedRuns,
            "baseline checkpoint is not a clean run");
    require(bprov.value("dataset_checksum", "") == prov.value("dataset_checksum", "-"),
            ErrorCode::ChecksumMismatch,
            "baseline and checkpoint come from different source datasets");
    EvalRun clean = poisoned;
    clean.method = "none";
    clean.budget = PerturbBudget{NormOrder::linf, 0, 255, Scope::sample_wise};
    clean.regime = bprov.value("regime", "std");
    clean.seed = bprov.value("seed", static_cast<uint64_t>(0));
    require(clean.seed == poisoned.seed, ErrorCode::MismatchedRuns,
            "baseline and checkpoint use different seeds");
    clean.metric = metric_of(*base.predictor);
    report = build_report(clean, poisoned);
  }

  fs::path out = prepare_out(cfg);
  write_reports_csv((out / "report.csv").string(), {report});
  std::string table = render_table({report});
  write_text(out / "report.txt", table);
  std::cout << table;
  return 0;
}

// ---- reproduce -------------------------------------------------------------

namespace {

struct DeskProfile {
  SyntheticSpec blobs;
  SyntheticSpec shapes;
  TrainConfig cnn_train;
  TrainConfig unet_train;
  int cnn_adv_steps = 5;
  int unet_adv_steps = 4;
  int advt_pgd_steps = 10;
  int surrogate_epochs = 12;
  EmGenConfig em_cnn;
  EmGenConfig em_unet;
};

DeskProfile desk_profile(uint64_t seed) {
  DeskProfile d;
  d.blobs = {SyntheticSpec::Name::blobs16, 192, 96, seed, 0, 0.1f};
  d.shapes = {SyntheticSpec::Name::shapes_seg, 96, 48, seed, 0, 0.08f};
  d.cnn_train.epochs = 15;
  d.cnn_train.batch_size = 32;
  d.cnn_train.lr = 0.05f;
  d.cnn_train.lr_decay_milestones = {12};
  d.unet_train.epochs = 18;
  d.unet_train.batch_size = 16;
  d.unet_train.lr = 0.05f;
  d.unet_train.lr_decay_milestones = {14};
  d.em_cnn.model_steps_per_round = 10;
  d.em_cnn.inner_pgd.steps = 10;
  d.em_cnn.max_rounds = 30;
  d.em_cnn.batch_size = 32;
  d.em_unet = d.em_cnn;
  d.em_unet.batch_size = 16;
  return d;
}

struct CellResult {
  EvalRun run;
  double wall_s = 0.0;
  double macro = -1.0;  // macro IoU for segmentation cells
};

// Deterministic per-cell seed: fold the first 16 hex digits of the cell
// name's digest into the base seed.
uint64_t seed_from_name(uint64_t seed, const std::string& name) {
  std::string hex = sha256_hex(name).substr(0, 16);
  return derive_seed(seed, std::stoull(hex, nullptr, 16));
}

}  // namespace

int cmd_reproduce(const RunConfig& cfg) {
  check_enum(cfg, "suite", {"desk"});
  const uint64_t seed = cfg.u64("seed");
  DeskProfile prof = desk_profile(seed);
  fs::path out = prepare_out(cfg);
  fs::create_directories(out / "cells");

  std::vector<EvalReport> reports;
  std::ostringstream timings;
  std::ostringstream macro_csv;
  macro_csv << "dataset,method,eps_num,eps_den,regime,macro_iou\n";

  auto train_cell = [&](const std::string& name, const ImageDataset& train_ds,
                        const ImageDataset& test_ds, const std::string& dataset_id,
                        const TrainConfig& base_cfg, const std::string& method,
                        const PerturbBudget& eps_u, bool adv, int adv_steps,
                        const PerturbBudget& eps_a) -> CellResult {
    Timer timer;
    TrainConfig tc = base_cfg;
    tc.seed = seed_from_name(seed, name);
    auto p = build_predictor(arch_for(train_ds), train_ds.images.h, train_ds.images.w,
                             train_ds.images.c, train_ds.num_classes,
                             derive_seed(tc.seed, kInitTag));
    History history;
    if (adv) {
      AdvTrainConfig ac;
      ac.eps_a = eps_a;
      ac.pgd.steps = adv_steps;
      ac.pgd.seed = derive_seed(tc.seed, kAdvTrainTag);
      tc.adv = ac;
      history = train_adversarial(*p, train_ds, tc);
    } else {
      history = train_standard(*p, train_ds, tc);
    }

    CellResult res;
    res.run.dataset_id = dataset_id;
    res.run.task = train_ds.task;
    res.run.method = method;
    res.run.budget = eps_u;
    res.run.regime = adv ? "adv" : "std";
    res.run.eps_a = adv ? eps_a : PerturbBudget{NormOrder::linf, 0, 255, Scope::sample_wise};
    res.run.seed = seed;
    res.run.runtime_s = 0.0;  // kept deterministic; wall time goes to timings.txt
    res.run.metric = train_ds.task == TaskKind::classification ? accuracy(*p, test_ds)
                                                               : iou(*p, test_ds);
    if (train_ds.task == TaskKind::segmentation) res.macro = macro_iou(*p, test_ds);
    res.wall_s = timer.seconds();

    fs::path cell = out / "cells" / name;
    fs::create_directories(cell);
    json prov;
    prov["config_digest"] = cfg.digest();
    prov["dataset_id"] = dataset_id;
    prov["method"] = method;
    prov["regime"] = res.run.regime;
    prov["seed"] = seed;
    save_checkpoint(*p, (cell / "checkpoint.alc").string(), prov.dump());
    write_history_csv((cell / "history.csv").string(), history, cfg.digest());
    timings << name << " " << res.wall_s << "\n";
    std::cout << "cell " << name << " metric=" << res.run.metric << " wall=" << res.wall_s
              << "s\n";
    if (res.macro >= 0)
      macro_csv << dataset_id << ',' << method << ',' << eps_u.eps_num << ',' << eps_u.eps_den
                << ',' << res.run.regime << ',' << res.macro << "\n";
    return res;
  };

  PerturbBudget zero{NormOrder::linf, 0, 255, Scope::sample_wise};
  auto eps_of = [](uint32_t num, Scope scope) {
    return PerturbBudget{NormOrder::linf, num, 255, scope};
  };

  // ---- blobs16 (classification): 3 methods x 2 radii x {std, adv} ----------
  auto [blobs_train, blobs_test] = make_blobs16(prof.blobs);
  CellResult blobs_clean =
      train_cell("blobs16_clean", blobs_train, blobs_test, "blobs16", prof.cnn_train, "none",
                 zero, false, 0, zero);
  reports.push_back(build_report(blobs_clean.run, blobs_clean.run));

  std::unique_ptr<Predictor> surrogate;
  {
    Timer t;
    surrogate = train_surrogate(blobs_train, seed, prof.surrogate_epochs);
    timings << "blobs16_surrogate " << t.seconds() << "\n";
    std::cout << "cell blobs16_surrogate wall=" << t.seconds() << "s\n";
  }

  for (const std::string method : {"synthetic", "advt", "em"}) {
    for (uint32_t num : {8u, 16u}) {
      Scope scope = method == "synthetic" ? Scope::class_wise : Scope::sample_wise;
      PerturbBudget budget = eps_of(num, scope);
      std::string tag = method + "_" + std::to_string(num) + "_255";

      Timer gen_timer;
      PerturbationSet pset;
      if (method == "synthetic") {
        pset = gen_synthetic(blobs_train, budget, {4, seed});
      } else if (method == "advt") {
        AdvTGenConfig gc;
        gc.surrogate = surrogate.get();
        gc.pgd.steps = prof.advt_pgd_steps;
        gc.pgd.seed = derive_seed(seed, kAdvtTag, num);
        pset = gen_advt(blobs_train, budget, gc);
      } else {
        EmGenConfig gc = prof.em_cnn;
        gc.seed = derive_seed(seed, 0xe3, num);
        auto [p, trace] = gen_em(blobs_train, budget, gc);
        pset = std::move(p);
        fs::create_directories(out / "cells" / ("blobs16_" + tag));
        write_text(out / "cells" / ("blobs16_" + tag) / "em_trace.csv", trace.to_csv());
      }
      save_perturbation(pset, (out / "cells" / ("blobs16_" + tag + ".alp")).string());
      timings << "gen_blobs16_" << tag << " " << gen_timer.seconds() << "\n";
      std::cout << "cell gen_blobs16_" << tag << " wall=" << gen_timer.seconds() << "s\n";

      ImageDataset poisoned = apply_perturbation(blobs_train, pset);
      for (bool adv : {false, true}) {
        PerturbBudget eps_a = eps_of(num / 2, Scope::sample_wise);
        CellResult cell = train_cell(
            "blobs16_" + tag + (adv ? "_adv" : "_std"), poisoned, blobs_test, "blobs16",
            prof.cnn_train, method, budget, adv, prof.cnn_adv_steps, eps_a);
        reports.push_back(build_report(blobs_clean.run, cell.run));
      }
    }
  }

  // ---- shapes_seg (segmentation): EM x 2 radii x {std, adv} ----------------
  auto [shapes_train, shapes_test] = make_shapes_seg(prof.shapes);
  CellResult shapes_clean =
      train_cell("shapes_seg_clean", shapes_train, shapes_test, "shapes_seg",
                 prof.unet_train, "none", zero, false, 0, zero);
  reports.push_back(build_report(shapes_clean.run, shapes_clean.run));

  for (uint32_t num : {8u, 16u}) {
    PerturbBudget budget = eps_of(num, Scope::sample_wise);
    std::string tag = "em_" + std::to_string(num) + "_255";

    Timer gen_timer;
    EmGenConfig gc = prof.em_unet;
    gc.seed = derive_seed(seed, 0xe4, num);
    auto [pset, trace] = gen_em(shapes_train, budget, gc);
    fs::create_directories(out / "cells" / ("shapes_seg_" + tag));
    write_text(out / "cells" / ("shapes_seg_" + tag) / "em_trace.csv", trace.to_csv());
    save_perturbation(pset, (out / "cells" / ("shapes_seg_" + tag + ".alp")).string());
    timings << "gen_shapes_seg_" << tag << " " << gen_timer.seconds() << "\n";
    std::cout << "cell gen_shapes_seg_" << tag << " wall=" << gen_timer.seconds() << "s\n";

    ImageDataset poisoned = apply_perturbation(shapes_train, pset);
    for (bool adv : {false, true}) {
      PerturbBudget eps_a = eps_of(num / 2, Scope::sample_wise);
      CellResult cell = train_cell("shapes_seg_" + tag + (adv ? "_adv" : "_std"), poisoned,
                                   shapes_test, "shapes_seg", prof.unet_train, "em", budget,
                                   adv, prof.unet_adv_steps, eps_a);
      reports.push_back(build_report(shapes_clean.run, cell.run));
    }
  }

  write_reports_csv((out / "report.csv").string(), reports);
  std::string table = render_table(reports);
  write_text(out / "report.txt", table);
  write_text(out / "iou_macro.csv", macro_csv.str());
  write_text(out / "timings.txt", timings.str());
  std::cout << table;
  return 0;
}

// ---- argv plumbing ----------------------------------------------------------

int run(const std::vector<std::string>& args) {
  CLI::App app{"anti-learn: bounded anti-learning perturbations for image datasets"};
  app.require_subcommand(1);

  std::map<std::string, std::map<std::string, std::string>> raw;
  std::map<std::string, CLI::App*> subs;
  for (const char* command : {"generate", "apply", "train", "eval", "reproduce"}) {
    CLI::App* sub = app.add_subcommand(command, std::string(command) + " command");
    sub->set_config("--config", "", "flat key=value config file");
    char letter = command_letter(command);
    for (const SchemaEntry& e : kSchema)
      if (std::strchr(e.cmds, letter))
        sub->add_option("--" + std::string(e.key), raw[command][e.key], e.help);
    subs[command] = sub;
  }

  std::vector<const char*> argv;
  argv.push_back("anti-learn");
  for (const std::string& a : args) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: ConfigInvalid: " << e.what() << "\n";
    return exit_code(ErrorCode::ConfigInvalid);
  }

  try {
    for (const auto& [command, sub] : subs) {
      if (!sub->parsed()) continue;
      std::map<std::string, std::string> overrides;
      for (const auto& [key, value] : raw[command])
        if (sub->get_option("--" + key)->count() > 0) overrides[key] = value;
      RunConfig cfg = make_config(command, overrides);
      if (command == "generate") return cmd_generate(cfg);
      if (command == "apply") return cmd_apply(cfg);
      if (command == "train") return cmd_train(cfg);
      if (command == "eval") return cmd_eval(cfg);
      return cmd_reproduce(cfg);
    }
    raise(ErrorCode::ConfigInvalid, "no command given");
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

int run(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args);
}

}  // namespace antilearn::cli
