#ifndef ANTILEARN_INGESTION_HPP
#define ANTILEARN_INGESTION_HPP

#include <string>
#include <utility>

#include "antilearn/core_data.hpp"

namespace antilearn {

// Desk-scale synthetic stand-ins for the real benchmark datasets. Both
// generators are deterministic in (spec, seed) and draw train/test from
// disjoint seed streams.
struct SyntheticSpec {
  enum class Name { blobs16, shapes_seg };
  Name name = Name::blobs16;
  int n_train = 192;
  int n_test = 96;
  uint64_t seed = 0;
  int image_size = 0;      // 0 = default for the name (16 / 32)
  float noise_std = 0.1f;  // [0, 0.2]

  void validate() const;
  int resolved_size() const;
  int num_classes() const { return name == Name::blobs16 ? 3 : 2; }
};

using DatasetPair = std::pair<ImageDataset, ImageDataset>;  // (train, test)

// MedMNIST-layout npz archive: train_images/train_labels/test_images/
// test_labels uint8 arrays, grayscale or 3-channel, single-label only.
DatasetPair load_medmnist_archive(const std::string& path);

// {train,test}/images/* + {train,test}/masks/* folder with matching stems;
// masks binarized at 50% intensity.
DatasetPair load_segmentation_folder(const std::string& root);

// Generic archive with `images` (u8 or f32) + `labels`/`masks` entries;
// reads the output of the CLI `apply` command back in.
ImageDataset load_dataset_archive(const std::string& path, Split split);
void save_dataset_archive(const ImageDataset& ds, const std::string& path, bool quantize_u8);

// 3-class 16x16 grayscale shapes (disc / cross / hollow square).
DatasetPair make_blobs16(const SyntheticSpec& spec);

// 32x32 grayscale, one bright ellipse or rectangle over textured background;
// mask equals the rendered foreground exactly.
DatasetPair make_shapes_seg(const SyntheticSpec& spec);

DatasetPair make_synthetic(const SyntheticSpec& spec);

}  // namespace antilearn

#endif
