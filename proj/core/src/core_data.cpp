#include "antilearn/core_data.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>

#include <nlohmann/json.hpp>

#include "antilearn/digest.hpp"
#include "antilearn/error.hpp"
#include "antilearn/zipfile.hpp"

namespace antilearn {

using json = nlohmann::json;

const char kDeltaMagic[16] = {'A', 'N', 'T', 'I', 'L', 'E', 'A', 'R',
                              'N', '\0', 'D', 'E', 'L', 'T', 'A', '1'};
const char kTensorMagic[16] = {'A', 'N', 'T', 'I', 'L', 'E', 'A', 'R',
                               'N', '\0', 'T', 'E', 'N', 'S', 'R', '1'};

const char* to_string(TaskKind t) {
  return t == TaskKind::classification ? "classification" : "segmentation";
}
const char* to_string(Split s) { return s == Split::train ? "train" : "test"; }
const char* to_string(NormOrder) { return "inf"; }
const char* to_string(Scope s) { return s == Scope::sample_wise ? "sample_wise" : "class_wise"; }
const char* to_string(Method m) {
  switch (m) {
    case Method::synthetic: return "synthetic";
    case Method::advt: return "advt";
    case Method::em: return "em";
  }
  return "?";
}

namespace {

Method method_from_string(const std::string& s) {
  if (s == "synthetic") return Method::synthetic;
  if (s == "advt") return Method::advt;
  if (s == "em") return Method::em;
  raise(ErrorCode::CorruptArtifact, "unknown method " + s);
}

Scope scope_from_string(const std::string& s) {
  if (s == "sample_wise") return Scope::sample_wise;
  if (s == "class_wise") return Scope::class_wise;
  raise(ErrorCode::CorruptArtifact, "unknown scope " + s);
}

void append_f32_le(std::vector<uint8_t>& out, const float* data, size_t count) {
  for (size_t i = 0; i < count; ++i) {
    uint32_t bits = std::bit_cast<uint32_t>(data[i]);
    out.push_back(static_cast<uint8_t>(bits));
    out.push_back(static_cast<uint8_t>(bits >> 8));
    out.push_back(static_cast<uint8_t>(bits >> 16));
    out.push_back(static_cast<uint8_t>(bits >> 24));
  }
}

void hash_f32_le(Sha256& h, const float* data, size_t count) {
  if constexpr (std::endian::native == std::endian::little) {
    h.update(data, count * 4);
  } else {
    std::vector<uint8_t> tmp;
    tmp.reserve(count * 4);
    append_f32_le(tmp, data, count);
    h.update(tmp.data(), tmp.size());
  }
}

}  // namespace

void ImageDataset::validate() const {
  size_t expect = static_cast<size_t>(images.n) * images.h * images.w * images.c;
  require(images.v.size() == expect, ErrorCode::ShapeMismatch, "image buffer size mismatch");
  for (float x : images.v)
    require(x >= 0.0f && x <= 1.0f, ErrorCode::Generic, "pixel value outside [0,1]");
  require(num_classes > 0, ErrorCode::Generic, "num_classes must be positive");
  if (task == TaskKind::classification) {
    require(labels.size() == static_cast<size_t>(images.n), ErrorCode::ShapeMismatch,
            "one label per sample required");
    for (int32_t y : labels)
      require(y >= 0 && y < num_classes, ErrorCode::Generic, "label outside [0, num_classes)");
  } else {
    require(num_classes == 2, ErrorCode::Generic, "segmentation is binary");
    require(masks.size() == static_cast<size_t>(images.n) * images.h * images.w,
            ErrorCode::ShapeMismatch, "one mask pixel per image pixel required");
    for (uint8_t m : masks)
      require(m == 0 || m == 1, ErrorCode::NonBinaryMask, "masks must contain only {0,1}");
  }
  if (!checksum.empty())
    require(checksum == checksum_dataset(*this), ErrorCode::ChecksumMismatch,
            "stored checksum does not match content");
}

void ImageDataset::seal() { checksum = checksum_dataset(*this); }

void PerturbBudget::validate() const {
  require(eps_den != 0, ErrorCode::ConfigInvalid, "eps denominator must be nonzero");
  require(eps() <= 1.0, ErrorCode::ConfigInvalid, "eps must lie in [0,1]");
}

PerturbBudget PerturbBudget::parse(const std::string& text, Scope scope) {
  PerturbBudget b;
  b.scope = scope;
  size_t slash = text.find('/');
  try {
    if (slash != std::string::npos) {
      b.eps_num = static_cast<uint32_t>(std::stoul(text.substr(0, slash)));
      b.eps_den = static_cast<uint32_t>(std::stoul(text.substr(slash + 1)));
    } else {
      // Decimal form: snap to the default 1/255 grid.
      double v = std::stod(text);
      require(v >= 0.0 && v <= 1.0, ErrorCode::ConfigInvalid, "eps outside [0,1]");
      b.eps_num = static_cast<uint32_t>(std::lround(v * 255.0));
      b.eps_den = 255;
    }
  } catch (const std::logic_error&) {
    raise(ErrorCode::ConfigInvalid, "cannot parse eps: " + text);
  }
  b.validate();
  return b;
}

std::string PerturbBudget::eps_text() const {
  return std::to_string(eps_num) + "/" + std::to_string(eps_den);
}

std::string checksum_dataset(const ImageDataset& ds) {
  Sha256 h;
  h.update_u32(static_cast<uint32_t>(ds.images.n));
  h.update_u32(static_cast<uint32_t>(ds.images.h));
  h.update_u32(static_cast<uint32_t>(ds.images.w));
  h.update_u32(static_cast<uint32_t>(ds.images.c));
  h.update_u32(ds.task == TaskKind::classification ? 0u : 1u);
  h.update_u32(static_cast<uint32_t>(ds.num_classes));
  hash_f32_le(h, ds.images.v.data(), ds.images.v.size());
  if (ds.task == TaskKind::classification) {
    for (int32_t y : ds.labels) h.update_u32(static_cast<uint32_t>(y));
  } else {
    h.update(ds.masks.data(), ds.masks.size());
  }
  return h.hex_digest();
}

ImageDataset apply_perturbation(const ImageDataset& ds, const PerturbationSet& pset) {
  require(pset.dataset_checksum == ds.checksum, ErrorCode::ChecksumMismatch,
          "perturbation was generated for a different dataset");
  const Tensor4& d = pset.deltas;
  require(d.h == ds.images.h && d.w == ds.images.w && d.c == ds.images.c,
          ErrorCode::ShapeMismatch, "delta spatial dims do not match dataset");
  if (pset.budget.scope == Scope::sample_wise) {
    require(d.n == ds.images.n, ErrorCode::ShapeMismatch,
            "sample-wise deltas need one delta per sample");
  } else {
    require(ds.task == TaskKind::classification, ErrorCode::ShapeMismatch,
            "class-wise perturbation requires a classification dataset");
    require(d.n == ds.num_classes, ErrorCode::ShapeMismatch,
            "class-wise deltas need one delta per class");
  }

  ImageDataset out = ds;
  size_t per = ds.images.sample_size();
  for (int i = 0; i < ds.images.n; ++i) {
    int slot = pset.budget.scope == Scope::sample_wise ? i : ds.labels[i];
    const float* delta = d.sample(slot);
    float* px = out.images.sample(i);
    for (size_t k = 0; k < per; ++k)
      px[k] = std::clamp(px[k] + delta[k], 0.0f, 1.0f);
  }
  out.seal();
  return out;
}

BudgetReport validate_budget(const PerturbationSet& pset) {
  if (pset.budget.norm != NormOrder::linf)
    raise(ErrorCode::UnsupportedNorm, "only the L-inf norm is implemented");
  constexpr double kTol = 1e-6;
  const double eps = pset.budget.eps();
  BudgetReport report;
  for (size_t i = 0; i < pset.deltas.v.size(); ++i) {
    double excess = std::abs(static_cast<double>(pset.deltas.v[i])) - eps;
    if (excess > kTol) {
      report.ok = false;
      report.max_violation = std::max(report.max_violation, excess);
      if (report.violations.size() < 64)
        report.violations.push_back({i, pset.deltas.v[i]});
    }
  }
  return report;
}

std::vector<uint8_t> serialize_tensor(const Tensor4& t, const char magic[16]) {
  std::vector<uint8_t> out;
  out.reserve(16 + 16 + t.v.size() * 4);
  out.insert(out.end(), magic, magic + 16);
  for (int dim : {t.n, t.h, t.w, t.c}) {
    uint32_t u = static_cast<uint32_t>(dim);
    out.push_back(static_cast<uint8_t>(u));
    out.push_back(static_cast<uint8_t>(u >> 8));
    out.push_back(static_cast<uint8_t>(u >> 16));
    out.push_back(static_cast<uint8_t>(u >> 24));
  }
  append_f32_le(out, t.v.data(), t.v.size());
  return out;
}

Tensor4 parse_tensor(const std::vector<uint8_t>& bytes, const char magic[16]) {
  require(bytes.size() >= 32, ErrorCode::CorruptArtifact, "tensor blob too small");
  require(std::memcmp(bytes.data(), magic, 16) == 0, ErrorCode::CorruptArtifact,
          "bad tensor magic");
  uint32_t dims[4];
  for (int i = 0; i < 4; ++i) {
    size_t off = 16 + 4 * static_cast<size_t>(i);
    dims[i] = static_cast<uint32_t>(bytes[off]) | (static_cast<uint32_t>(bytes[off + 1]) << 8) |
              (static_cast<uint32_t>(bytes[off + 2]) << 16) |
              (static_cast<uint32_t>(bytes[off + 3]) << 24);
  }
  size_t count = static_cast<size_t>(dims[0]) * dims[1] * dims[2] * dims[3];
  require(bytes.size() == 32 + count * 4, ErrorCode::CorruptArtifact,
          "tensor payload size does not match dims");
  Tensor4 t(static_cast<int>(dims[0]), static_cast<int>(dims[1]), static_cast<int>(dims[2]),
            static_cast<int>(dims[3]));
  for (size_t i = 0; i < count; ++i) {
    size_t off = 32 + 4 * i;
    uint32_t bits = static_cast<uint32_t>(bytes[off]) |
                    (static_cast<uint32_t>(bytes[off + 1]) << 8) |
                    (static_cast<uint32_t>(bytes[off + 2]) << 16) |
                    (static_cast<uint32_t>(bytes[off + 3]) << 24);
    t.v[i] = std::bit_cast<float>(bits);
  }
  return t;
}

std::vector<uint8_t> serialize_perturbation(const PerturbationSet& pset) {
  json meta;
  meta["format_version"] = 1;
  meta["method"] = to_string(pset.method);
  meta["scope"] = to_string(pset.budget.scope);
  meta["norm"] = to_string(pset.budget.norm);
  meta["eps_numerator"] = pset.budget.eps_num;
  meta["eps_denominator"] = pset.budget.eps_den;
  meta["seed"] = pset.seed;
  meta["dataset_checksum"] = pset.dataset_checksum;
  meta["generator_config_digest"] = pset.generator_config_digest;
  meta["shape"] = {pset.deltas.n, pset.deltas.h, pset.deltas.w, pset.deltas.c};
  if (!pset.surrogate_digest.empty()) meta["surrogate_digest"] = pset.surrogate_digest;
  if (pset.no_convergence) meta["no_convergence"] = true;

  ZipWriter zw;
  zw.add("metadata.json", meta.dump(2));
  zw.add("deltas.bin", serialize_tensor(pset.deltas, kDeltaMagic));
  return zw.finish();
}

void save_perturbation(const PerturbationSet& pset, const std::string& path) {
  write_file_bytes(path, serialize_perturbation(pset));
}

PerturbationSet parse_perturbation(const std::vector<uint8_t>& bytes) {
  ZipReader zr(bytes);
  if (!zr.has("metadata.json")) raise(ErrorCode::MetadataMissing, "metadata.json entry missing");
  if (!zr.has("deltas.bin")) raise(ErrorCode::CorruptArtifact, "deltas.bin entry missing");

  json meta;
  try {
    meta = json::parse(zr.read_string("metadata.json"));
  } catch (const json::exception& e) {
    raise(ErrorCode::CorruptArtifact, std::string("metadata.json unparsable: ") + e.what());
  }
  for (const char* key : {"format_version", "method", "scope", "norm", "eps_numerator",
                          "eps_denominator", "seed", "dataset_checksum",
                          "generator_config_digest", "shape"})
    if (!meta.contains(key)) raise(ErrorCode::MetadataMissing, std::string("missing key ") + key);
  require(meta["format_version"].get<int>() == 1, ErrorCode::CorruptArtifact,
          "unsupported artifact format_version");

  PerturbationSet pset;
  pset.method = method_from_string(meta["method"].get<std::string>());
  pset.budget.scope = scope_from_string(meta["scope"].get<std::string>());
  require(meta["norm"].get<std::string>() == "inf", ErrorCode::UnsupportedNorm,
          "only the L-inf norm is implemented");
  pset.budget.norm = NormOrder::linf;
  pset.budget.eps_num = meta["eps_numerator"].get<uint32_t>();
  pset.budget.eps_den = meta["eps_denominator"].get<uint32_t>();
  pset.seed = meta["seed"].get<uint64_t>();
  pset.dataset_checksum = meta["dataset_checksum"].get<std::string>();
  pset.generator_config_digest = meta["generator_config_digest"].get<std::string>();
  if (meta.contains("surrogate_digest"))
    pset.surrogate_digest = meta["surrogate_digest"].get<std::string>();
  if (meta.contains("no_convergence")) pset.no_convergence = meta["no_convergence"].get<bool>();

  pset.deltas = parse_tensor(zr.read("deltas.bin"), kDeltaMagic);
  auto shape = meta["shape"].get<std::vector<int>>();
  require(shape.size() == 4 && shape[0] == pset.deltas.n && shape[1] == pset.deltas.h &&
              shape[2] == pset.deltas.w && shape[3] == pset.deltas.c,
          ErrorCode::CorruptArtifact, "metadata shape disagrees with deltas.bin");
  return pset;
}

PerturbationSet load_perturbation(const std::string& path) {
  return parse_perturbation(read_file_bytes(path));
}

void quantize_images_u8(ImageDataset& ds) {
  for (float& x : ds.images.v)
    x = std::clamp(std::round(x * 255.0f) / 255.0f, 0.0f, 1.0f);
  ds.seal();
}

}  // namespace antilearn
