#include "antilearn/ingestion.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>

#include "antilearn/error.hpp"
#include "antilearn/image_io.hpp"
#include "antilearn/npy.hpp"
#include "antilearn/rng.hpp"
#include "antilearn/zipfile.hpp"

namespace antilearn {

namespace fs = std::filesystem;

void SyntheticSpec::validate() const {
  require(n_train >= num_classes() && n_test >= num_classes(), ErrorCode::ConfigInvalid,
          "split sizes must cover every class");
  require(resolved_size() >= 8, ErrorCode::ConfigInvalid, "image_size must be >= 8");
  require(noise_std >= 0.0f && noise_std <= 0.2f, ErrorCode::ConfigInvalid,
          "noise_std outside [0, 0.2]");
}

int SyntheticSpec::resolved_size() const {
  if (image_size > 0) return image_size;
  return name == Name::blobs16 ? 16 : 32;
}

namespace {

constexpr uint64_t kTagBlobs = 0xb10b5;
constexpr uint64_t kTagShapes = 0x5a9e5;
constexpr uint64_t kTagTrain = 1;
constexpr uint64_t kTagTest = 2;

// ---- blobs16 -------------------------------------------------------------

void render_blob(Tensor4& images, int i, int cls, int size, Rng& rng, float noise_std) {
  // Low-contrast shapes with position and size jitter: the class signal has
  // to be genuinely learned rather than read off a couple of pixels, which
  // is what makes small-budget shortcuts competitive with it.
  const float bg = 0.35f, fg = 0.65f;
  const float scale = size / 16.0f;
  const int jr = std::max(1, static_cast<int>(std::lround(4 * scale)));
  int cx = size / 2 + static_cast<int>(rng.bounded(2 * jr + 1)) - jr;
  int cy = size / 2 + static_cast<int>(rng.bounded(2 * jr + 1)) - jr;
  float grow = static_cast<float>(rng.uniform(0.8, 1.2));
  // Brightness jitter scales with noise_std so the noise-free dataset stays
  // exactly two-tone.
  float shift = noise_std > 0 ? static_cast<float>(rng.uniform(-0.5, 0.5)) * noise_std : 0.0f;

  auto inside = [&](int y, int x) -> bool {
    float dx = x - cx, dy = y - cy;
    switch (cls) {
      case 0: {  // filled disc
        float r = 2.8f * scale * grow;
        return dx * dx + dy * dy <= r * r;
      }
      case 1: {  // cross
        float arm = 4.2f * scale * grow, thick = 1.0f * scale;
        return (std::abs(dx) <= thick && std::abs(dy) <= arm) ||
               (std::abs(dy) <= thick && std::abs(dx) <= arm);
      }
      default: {  // hollow square
        float outer = 4.0f * scale * grow, inner = outer - 2.0f * scale;
        float m = std::max(std::abs(dx), std::abs(dy));
        return m <= outer && m > inner;
      }
    }
  };

  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      float v = inside(y, x) ? fg : bg;
      v += shift;
      if (noise_std > 0) v += static_cast<float>(rng.gauss()) * noise_std;
      images.at(i, y, x, 0) = std::clamp(v, 0.0f, 1.0f);
    }
}

ImageDataset build_blobs_split(const SyntheticSpec& spec, int n, Split split, uint64_t tag) {
  const int size = spec.resolved_size();
  ImageDataset ds;
  ds.task = TaskKind::classification;
  ds.num_classes = 3;
  ds.split = split;
  ds.images = Tensor4(n, size, size, 1);
  ds.labels.resize(n);
  for (int i = 0; i < n; ++i) {
    int cls = i % 3;  // balanced within +-1
    ds.labels[i] = cls;
    Rng rng(derive_seed(spec.seed, kTagBlobs, tag, static_cast<uint64_t>(i)));
    render_blob(ds.images, i, cls, size, rng, spec.noise_std);
  }
  ds.seal();
  return ds;
}

// ---- shapes_seg ----------------------------------------------------------

void render_shape(Tensor4& images, std::vector<uint8_t>& masks, int i, int size, Rng& rng,
                  float noise_std) {
  const float scale = size / 32.0f;
  uint8_t* mask = masks.data() + static_cast<size_t>(i) * size * size;

  // Textured background: low-frequency sinusoid plus per-pixel speckle.
  float fx = static_cast<float>(rng.uniform(0.5, 2.0));
  float fy = static_cast<float>(rng.uniform(0.5, 2.0));
  float phase = static_cast<float>(rng.uniform(0.0, 6.2831853));
  float base = 0.28f + static_cast<float>(rng.uniform(-0.04, 0.04));

  bool ellipse = rng.coin();
  float cx = size / 2.0f + static_cast<float>(rng.uniform(-5.0, 5.0)) * scale;
  float cy = size / 2.0f + static_cast<float>(rng.uniform(-5.0, 5.0)) * scale;
  float ax = static_cast<float>(rng.uniform(4.0, 9.0)) * scale;
  float ay = static_cast<float>(rng.uniform(4.0, 9.0)) * scale;
  float fg = 0.80f + static_cast<float>(rng.uniform(-0.04, 0.06));

  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      float dx = x - cx, dy = y - cy;
      bool in = ellipse ? (dx * dx) / (ax * ax) + (dy * dy) / (ay * ay) <= 1.0f
                        : std::abs(dx) <= ax && std::abs(dy) <= ay;
      mask[y * size + x] = in ? 1 : 0;
      float v;
      if (in) {
        v = fg;
      } else {
        v = base + 0.10f * std::sin(6.2831853f * (fx * x + fy * y) / size + phase) +
            0.05f * static_cast<float>(rng.uniform(-1.0, 1.0));
      }
      if (noise_std > 0) v += static_cast<float>(rng.gauss()) * noise_std;
      images.at(i, y, x, 0) = std::clamp(v, 0.0f, 1.0f);
    }
}

ImageDataset build_shapes_split(const SyntheticSpec& spec, int n, Split split, uint64_t tag) {
  const int size = spec.resolved_size();
  require(size % 4 == 0, ErrorCode::ConfigInvalid,
          "shapes_seg size must be divisible by 4 for the segmentation net");
  ImageDataset ds;
  ds.task = TaskKind::segmentation;
  ds.num_classes = 2;
  ds.split = split;
  ds.images = Tensor4(n, size, size, 1);
  ds.masks.assign(static_cast<size_t>(n) * size * size, 0);
  for (int i = 0; i < n; ++i) {
    Rng rng(derive_seed(spec.seed, kTagShapes, tag, static_cast<uint64_t>(i)));
    render_shape(ds.images, ds.masks, i, size, rng, spec.noise_std);
  }
  ds.seal();
  return ds;
}

// ---- archives ------------------------------------------------------------

NpyArray read_npz_entry(const ZipReader& zr, const std::string& name) {
  if (zr.has(name + ".npy")) return npy_parse(zr.read(name + ".npy"));
  if (zr.has(name)) return npy_parse(zr.read(name));
  raise(ErrorCode::MissingArrayEntry, "archive missing array " + name);
}

Tensor4 images_from_array(const NpyArray& arr) {
  require(arr.shape.size() == 3 || arr.shape.size() == 4, ErrorCode::CorruptArtifact,
          "image array must be N x H x W (x C)");
  int n = static_cast<int>(arr.shape[0]);
  int h = static_cast<int>(arr.shape[1]);
  int w = static_cast<int>(arr.shape[2]);
  int c = arr.shape.size() == 4 ? static_cast<int>(arr.shape[3]) : 1;
  require(c == 1 || c == 3, ErrorCode::CorruptArtifact, "images must have 1 or 3 channels");
  Tensor4 t(n, h, w, c);
  if (arr.dtype == NpyArray::Dtype::u8) {
    for (size_t i = 0; i < t.v.size(); ++i) t.v[i] = arr.raw[i] / 255.0f;
  } else {
    const float* p = arr.as_f32();
    for (size_t i = 0; i < t.v.size(); ++i) {
      require(p[i] >= 0.0f && p[i] <= 1.0f, ErrorCode::CorruptArtifact,
              "float image values must lie in [0,1]");
      t.v[i] = p[i];
    }
  }
  return t;
}

std::vector<int32_t> labels_from_array(const NpyArray& arr, int n) {
  require(arr.dtype == NpyArray::Dtype::u8, ErrorCode::CorruptArtifact,
          "labels must be uint8");
  if (arr.shape.size() == 2 && arr.shape[1] > 1)
    raise(ErrorCode::MultiLabelUnsupported,
          "multi-label archives (label arrays with >1 column) are not supported");
  require((arr.shape.size() == 1 && arr.shape[0] == static_cast<size_t>(n)) ||
              (arr.shape.size() == 2 && arr.shape[0] == static_cast<size_t>(n)),
          ErrorCode::CorruptArtifact, "label array must have one row per image");
  std::vector<int32_t> labels(n);
  for (int i = 0; i < n; ++i) labels[i] = arr.raw[i];
  return labels;
}

}  // namespace

DatasetPair make_blobs16(const SyntheticSpec& spec) {
  require(spec.name == SyntheticSpec::Name::blobs16, ErrorCode::ConfigInvalid,
          "spec.name must be blobs16");
  spec.validate();
  return {build_blobs_split(spec, spec.n_train, Split::train, kTagTrain),
          build_blobs_split(spec, spec.n_test, Split::test, kTagTest)};
}

DatasetPair make_shapes_seg(const SyntheticSpec& spec) {
  require(spec.name == SyntheticSpec::Name::shapes_seg, ErrorCode::ConfigInvalid,
          "spec.name must be shapes_seg");
  spec.validate();
  return {build_shapes_split(spec, spec.n_train, Split::train, kTagTrain),
          build_shapes_split(spec, spec.n_test, Split::test, kTagTest)};
}

DatasetPair make_synthetic(const SyntheticSpec& spec) {
  return spec.name == SyntheticSpec::Name::blobs16 ? make_blobs16(spec) : make_shapes_seg(spec);
}

DatasetPair load_medmnist_archive(const std::string& path) {
  ZipReader zr = ZipReader::open_file(path);
  NpyArray train_images = read_npz_entry(zr, "train_images");
  NpyArray train_labels = read_npz_entry(zr, "train_labels");
  NpyArray test_images = read_npz_entry(zr, "test_images");
  NpyArray test_labels = read_npz_entry(zr, "test_labels");

  ImageDataset train, test;
  train.images = images_from_array(train_images);
  test.images = images_from_array(test_images);
  train.labels = labels_from_array(train_labels, train.images.n);
  test.labels = labels_from_array(test_labels, test.images.n);
  int32_t max_label = 0;
  for (int32_t y : train.labels) max_label = std::max(max_label, y);
  for (int32_t y : test.labels) max_label = std::max(max_label, y);
  train.num_classes = test.num_classes = max_label + 1;
  train.task = test.task = TaskKind::classification;
  train.split = Split::train;
  test.split = Split::test;
  train.seal();
  test.seal();
  return {std::move(train), std::move(test)};
}

namespace {

ImageDataset load_seg_split(const fs::path& dir, Split split) {
  fs::path images_dir = dir / "images";
  fs::path masks_dir = dir / "masks";
  require(fs::is_directory(images_dir), ErrorCode::IoFailure,
          "missing directory " + images_dir.string());
  require(fs::is_directory(masks_dir), ErrorCode::IoFailure,
          "missing directory " + masks_dir.string());

  std::map<std::string, fs::path> mask_by_stem;
  for (const auto& e : fs::directory_iterator(masks_dir))
    if (e.is_regular_file()) mask_by_stem[e.path().stem().string()] = e.path();

  std::vector<std::pair<std::string, fs::path>> image_files;
  for (const auto& e : fs::directory_iterator(images_dir))
    if (e.is_regular_file()) image_files.emplace_back(e.path().stem().string(), e.path());
  std::sort(image_files.begin(), image_files.end());  // order-stable datasets
  require(!image_files.empty(), ErrorCode::IoFailure, "no images in " + images_dir.string());

  std::vector<ImageU8> imgs;
  std::vector<ImageU8> msks;
  for (const auto& [stem, img_path] : image_files) {
    auto it = mask_by_stem.find(stem);
    if (it == mask_by_stem.end())
      raise(ErrorCode::UnpairedImage, "image without mask: " + img_path.string());
    imgs.push_back(read_image(img_path.string()));
    msks.push_back(read_image(it->second.string()));
    mask_by_stem.erase(it);
  }
  if (!mask_by_stem.empty())
    raise(ErrorCode::UnpairedImage,
          "mask without image: " + mask_by_stem.begin()->second.string());

  int h = imgs[0].h, w = imgs[0].w, c = imgs[0].c;
  int n = static_cast<int>(imgs.size());
  ImageDataset ds;
  ds.task = TaskKind::segmentation;
  ds.num_classes = 2;
  ds.split = split;
  ds.images = Tensor4(n, h, w, c);
  ds.masks.assign(static_cast<size_t>(n) * h * w, 0);

  size_t gray_zone = 0, total = 0;
  for (int i = 0; i < n; ++i) {
    const ImageU8& im = imgs[i];
    require(im.h == h && im.w == w && im.c == c, ErrorCode::ShapeMismatch,
            "all images must share one shape");
    for (size_t k = 0; k < im.v.size(); ++k) ds.images.v[ds.images.sample_size() * i + k] =
        im.v[k] / 255.0f;

    const ImageU8& mk = msks[i];
    require(mk.h == h && mk.w == w, ErrorCode::ShapeMismatch, "mask shape must match image");
    uint8_t* out = ds.mask(i);
    for (int p = 0; p < h * w; ++p) {
      int v;
      if (mk.c == 1) {
        v = mk.v[p];
      } else {
        v = (mk.v[3 * p] + mk.v[3 * p + 1] + mk.v[3 * p + 2]) / 3;
      }
      // Near-0 / near-255 test before binarization at 50%.
      if (v >= 64 && v <= 191) ++gray_zone;
      ++total;
      out[p] = v >= 128 ? 1 : 0;
    }
  }
  if (gray_zone * 100 > total)
    raise(ErrorCode::NonBinaryMask,
          "more than 1% of mask pixels are neither near-0 nor near-255");
  ds.seal();
  return ds;
}

}  // namespace

DatasetPair load_segmentation_folder(const std::string& root) {
  fs::path base(root);
  return {load_seg_split(base / "train", Split::train),
          load_seg_split(base / "test", Split::test)};
}

ImageDataset load_dataset_archive(const std::string& path, Split split) {
  ZipReader zr = ZipReader::open_file(path);
  NpyArray images = read_npz_entry(zr, "images");
  ImageDataset ds;
  ds.images = images_from_array(images);
  ds.split = split;
  if (zr.has("masks.npy") || zr.has("masks")) {
    NpyArray masks = read_npz_entry(zr, "masks");
    require(masks.dtype == NpyArray::Dtype::u8 && masks.shape.size() == 3,
            ErrorCode::CorruptArtifact, "masks must be uint8 N x H x W");
    require(masks.elem_count() ==
                static_cast<size_t>(ds.images.n) * ds.images.h * ds.images.w,
            ErrorCode::ShapeMismatch, "mask array size mismatch");
    ds.task = TaskKind::segmentation;
    ds.num_classes = 2;
    ds.masks.assign(masks.raw.begin(), masks.raw.end());
  } else {
    NpyArray labels = read_npz_entry(zr, "labels");
    ds.task = TaskKind::classification;
    ds.labels = labels_from_array(labels, ds.images.n);
    int32_t max_label = 0;
    for (int32_t y : ds.labels) max_label = std::max(max_label, y);
    ds.num_classes = max_label + 1;
  }
  ds.seal();
  return ds;
}

void save_dataset_archive(const ImageDataset& ds, const std::string& path, bool quantize_u8) {
  ZipWriter zw;
  std::vector<size_t> ishape = {static_cast<size_t>(ds.images.n),
                                static_cast<size_t>(ds.images.h),
                                static_cast<size_t>(ds.images.w),
                                static_cast<size_t>(ds.images.c)};
  if (quantize_u8) {
    std::vector<uint8_t> q(ds.images.v.size());
    for (size_t i = 0; i < q.size(); ++i)
      q[i] = static_cast<uint8_t>(
          std::clamp(std::lround(ds.images.v[i] * 255.0f), 0L, 255L));
    zw.add("images.npy", npy_serialize_u8(ishape, q.data()));
  } else {
    zw.add("images.npy", npy_serialize_f32(ishape, ds.images.v.data()));
  }
  if (ds.task == TaskKind::classification) {
    std::vector<uint8_t> lab(ds.labels.size());
    for (size_t i = 0; i < lab.size(); ++i) lab[i] = static_cast<uint8_t>(ds.labels[i]);
    zw.add("labels.npy", npy_serialize_u8({lab.size()}, lab.data()));
  } else {
    zw.add("masks.npy",
           npy_serialize_u8({static_cast<size_t>(ds.images.n), static_cast<size_t>(ds.images.h),
                             static_cast<size_t>(ds.images.w)},
                            ds.masks.data()));
  }
  zw.write_file(path);
}

}  // namespace antilearn
