#pragma once

#include <string>
#include <utility>
#include <vector>

#include "dawn/tensor.hpp"

namespace dawn {

struct Dataset {
  Tensor<float> images;  // [N,C,H,W], values in [0,1]
  std::vector<int> labels;
  std::vector<std::string> class_names;
  std::string split;  // "train" or "test"

  int64_t size() const { return images.defined() ? images.dim(0) : 0; }
  int64_t num_classes() const { return static_cast<int64_t>(class_names.size()); }

  /// Gather images/labels at the given row indices.
  Tensor<float> gather_images(const std::vector<int64_t>& indices) const;
  std::vector<int> gather_labels(const std::vector<int64_t>& indices) const;

  void validate() const;
};

/// CIFAR binary batches: CIFAR-10 records are 1 label byte + 3072 pixel
/// bytes (R, G, B planes); CIFAR-100 adds a coarse label byte before the
/// fine label (the fine label is used). Pixels scale to [0,1].
std::pair<Dataset, Dataset> load_cifar(const std::string& dir, int variant);

/// dir/class_name/*.png|*.pgm; classes sorted lexicographically, files
/// sorted within a class, every image center-resized to size x size and
/// expanded to 3 channels.
Dataset load_image_folder(const std::string& dir, int64_t size);

/// Four synthetic texture classes at the given square size: horizontal
/// sinusoidal gratings, vertical gratings, checkerboards, clamped Gaussian
/// noise. `per_class` images per training class; the test split holds
/// 2*per_class/5 per class, drawn from the same seeded stream. Images are
/// single-plane values replicated to 3 channels.
std::pair<Dataset, Dataset> synth_textures(int64_t per_class, int64_t size, uint64_t seed);

/// Export every image of a dataset as an 8-bit PGM (channel mean) for
/// inspection: dir/<split>_<index>_<class>.pgm.
void export_dataset_pgm(const Dataset& dataset, const std::string& dir);

/// Per-channel standardization with the train split's mean/std, applied to
/// both splits. Off by default everywhere so the mean-preservation loss term
/// acts on raw intensities.
void normalize_datasets(Dataset& train, Dataset& test);

struct AugmentPolicy {
  int pad = 0;             // zero padding before the random crop
  bool random_crop = false;
  bool mirror = false;

  bool active() const { return (random_crop && pad > 0) || mirror; }
};

/// Training-split augmentation: zero-pad, crop back to the original size at
/// a random offset, mirror horizontally with probability one half. Labels
/// are untouched; values stay in [0,1].
Tensor<float> augment_batch(const Tensor<float>& batch, const AugmentPolicy& policy, Rng& rng);

/// Mirror every image left-to-right.
Tensor<float> flip_horizontal(const Tensor<float>& batch);

/// Per-batch RNG stream derived from (seed, epoch, batch index) so prefetch
/// order cannot change the randomness.
Rng augment_stream(uint64_t seed, int epoch, int64_t batch_index);

}  // namespace dawn
