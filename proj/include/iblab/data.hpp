#ifndef IBLAB_DATA_HPP
#define IBLAB_DATA_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "iblab/types.hpp"

namespace iblab::data {

struct Dataset {
  FeatureMatrix features;  // D x M, one column per sample
  std::vector<int> labels;
  int num_classes = 0;
  std::string name;
  std::uint64_t checksum = 0;
};

// Validates shapes/label ranges and fills the checksum.
Dataset make_dataset(FeatureMatrix features, std::vector<int> labels,
                     int num_classes, std::string name);

// FNV-1a over D, M, K, the feature bytes (column-major, little-endian f64)
// and the labels. Stable across platforms.
std::uint64_t dataset_checksum(const FeatureMatrix& features,
                               const std::vector<int>& labels,
                               int num_classes);

// Synthetic 12-bit binary task: all 4096 patterns with +-1 entries. The label
// rule thresholds a smooth radial score of the signed vector sum of 12 seeded
// unit vectors on the sphere (see gen_szt in data.cpp for the exact rule).
// With gamma unset, the threshold is bisected until the positive fraction is
// within 0.5 +- 0.01.
Dataset gen_szt(std::optional<double> gamma, std::uint64_t noise_seed);

// Big-endian IDX ingestion (magics 0x00000803 / 0x00000801). Pixels scale to
// [0, 1]; D = rows*cols, K = 10.
Dataset load_mnist_idx(const std::string& images_path,
                       const std::string& labels_path);

// Fixture writers for the same IDX layout.
void write_idx_images(const std::string& path, int rows, int cols,
                      const std::vector<std::uint8_t>& pixels);
void write_idx_labels(const std::string& path,
                      const std::vector<std::uint8_t>& labels);

// One sample per row, trailing integer label column, optional header row.
Dataset import_csv(const std::string& path, int num_classes);

// Inverse of import_csv; feature values at 9 significant digits.
void export_csv(const Dataset& ds, const std::string& path);

// Seeded label-stratified subsample of n samples. Throws when n > M.
Dataset subsample(const Dataset& ds, int n, std::uint64_t seed);

// Seeded stratified split; first part holds round(fraction * M) samples,
// class ratios preserved within one sample per class.
std::pair<Dataset, Dataset> split(const Dataset& ds, double fraction,
                                  std::uint64_t seed);

// MNIST-scale stand-in: 28x28 images from seeded per-class blob templates
// plus pixel noise, quantized to the 256 IDX gray levels. Serves panel-style
// pipelines when the real IDX files are not on disk.
Dataset synth_images(int samples, int num_classes, std::uint64_t seed);

}  // namespace iblab::data

#endif  // IBLAB_DATA_HPP
