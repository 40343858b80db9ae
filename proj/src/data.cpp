#include "iblab/data.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

#include "iblab/rng.hpp"

namespace iblab::data {

namespace {

void fnv_mix(std::uint64_t& h, const void* bytes, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(bytes);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
}

void fnv_mix_u32(std::uint64_t& h, std::uint32_t v) {
  const std::array<unsigned char, 4> le{
      static_cast<unsigned char>(v & 0xff),
      static_cast<unsigned char>((v >> 8) & 0xff),
      static_cast<unsigned char>((v >> 16) & 0xff),
      static_cast<unsigned char>((v >> 24) & 0xff)};
  fnv_mix(h, le.data(), le.size());
}

void fnv_mix_f64(std::uint64_t& h, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof(bits));
  std::array<unsigned char, 8> le;
  for (int i = 0; i < 8; ++i) {
    le[static_cast<std::size_t>(i)] =
        static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
  }
  fnv_mix(h, le.data(), le.size());
}

}  // namespace

std::uint64_t dataset_checksum(const FeatureMatrix& features,
                               const std::vector<int>& labels,
                               int num_classes) {
  std::uint64_t h = 1469598103934665603ull;
  fnv_mix_u32(h, static_cast<std::uint32_t>(features.dim()));
  fnv_mix_u32(h, static_cast<std::uint32_t>(features.samples()));
  fnv_mix_u32(h, static_cast<std::uint32_t>(num_classes));
  const double* p = features.values.data();
  for (Eigen::Index i = 0; i < features.values.size(); ++i) {
    fnv_mix_f64(h, p[i]);
  }
  for (const int y : labels) {
    fnv_mix_u32(h, static_cast<std::uint32_t>(y));
  }
  return h;
}

Dataset make_dataset(FeatureMatrix features, std::vector<int> labels,
                     int num_classes, std::string name) {
  require_valid(features);
  if (static_cast<std::size_t>(features.samples()) != labels.size()) {
    throw InputDomainError("label count " + std::to_string(labels.size()) +
                           " does not match sample count " +
                           std::to_string(features.samples()));
  }
  if (num_classes < 1) throw InputDomainError("num_classes must be positive");
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= num_classes) {
      throw InputDomainError("label " + std::to_string(labels[i]) +
                             " at sample " + std::to_string(i) +
                             " outside [0, " + std::to_string(num_classes) +
                             ")");
    }
  }
  Dataset ds;
  ds.checksum = dataset_checksum(features, labels, num_classes);
  ds.features = std::move(features);
  ds.labels = std::move(labels);
  ds.num_classes = num_classes;
  ds.name = std::move(name);
  return ds;
}

// Label rule, fixed here once:
//   u_1..u_12 : unit vectors in R^3, seeded (normalized Gaussian draws)
//   v(x)      = sum_j x_j u_j          for a +-1 pattern x
//   score(x)  = exp(-(|v(x)| - 3.0)^2 / (2 * 1.2^2))
//   label(x)  = 1  iff  score(x) > gamma
// score is a smooth radial function of the signed point sum, so the rule is
// invariant under rotations of the seeded points and under x -> -x.
Dataset gen_szt(std::optional<double> gamma, std::uint64_t noise_seed) {
  constexpr int kBits = 12;
  constexpr int kPatterns = 1 << kBits;  // 4096
  constexpr double kShellRadius = 3.0;
  constexpr double kShellWidth = 1.2;

  Rng rng(noise_seed);
  std::array<std::array<double, 3>, kBits> pts;
  for (auto& u : pts) {
    double norm = 0.0;
    for (auto& coord : u) {
      coord = rng.normal();
      norm += coord * coord;
    }
    norm = std::sqrt(norm);
    if (norm < 1e-12) norm = 1.0;
    for (auto& coord : u) coord /= norm;
  }

  Matrix features(kBits, kPatterns);
  std::vector<double> score(kPatterns);
  for (int i = 0; i < kPatterns; ++i) {
    std::array<double, 3> v{0.0, 0.0, 0.0};
    for (int j = 0; j < kBits; ++j) {
      const double x = ((i >> j) & 1) ? 1.0 : -1.0;
      features(j, i) = x;
      for (int k = 0; k < 3; ++k) v[static_cast<std::size_t>(k)] += x * pts[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)];
    }
    const double r = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
    const double dev = (r - kShellRadius) / kShellWidth;
    score[static_cast<std::size_t>(i)] = std::exp(-0.5 * dev * dev);
  }

  double threshold;
  if (gamma.has_value()) {
    threshold = *gamma;
  } else {
    double lo = 0.0, hi = 1.0;
    threshold = 0.5;
    for (int iter = 0; iter < 200; ++iter) {
      threshold = 0.5 * (lo + hi);
      int positives = 0;
      for (const double s : score) positives += s > threshold ? 1 : 0;
      const double frac = static_cast<double>(positives) / kPatterns;
      if (std::abs(frac - 0.5) <= 0.01) break;
      if (frac > 0.5) {
        lo = threshold;
      } else {
        hi = threshold;
      }
    }
  }

  std::vector<int> labels(kPatterns);
  for (int i = 0; i < kPatterns; ++i) {
    labels[static_cast<std::size_t>(i)] =
        score[static_cast<std::size_t>(i)] > threshold ? 1 : 0;
  }
  return make_dataset(FeatureMatrix{std::move(features)}, std::move(labels), 2,
                      "szt");
}

namespace {

std::uint32_t read_be_u32(std::ifstream& in, const std::string& path,
                          std::size_t offset) {
  std::array<unsigned char, 4> b;
  if (!in.read(reinterpret_cast<char*>(b.data()), 4)) {
    throw FormatError(path + ": truncated at byte offset " +
                      std::to_string(offset));
  }
  return (static_cast<std::uint32_t>(b[0]) << 24) |
         (static_cast<std::uint32_t>(b[1]) << 16) |
         (static_cast<std::uint32_t>(b[2]) << 8) |
         static_cast<std::uint32_t>(b[3]);
}

void write_be_u32(std::ofstream& out, std::uint32_t v) {
  const std::array<unsigned char, 4> b{
      static_cast<unsigned char>((v >> 24) & 0xff),
      static_cast<unsigned char>((v >> 16) & 0xff),
      static_cast<unsigned char>((v >> 8) & 0xff),
      static_cast<unsigned char>(v & 0xff)};
  out.write(reinterpret_cast<const char*>(b.data()), 4);
}

constexpr std::uint32_t kImagesMagic = 0x00000803;
constexpr std::uint32_t kLabelsMagic = 0x00000801;

}  // namespace

Dataset load_mnist_idx(const std::string& images_path,
                       const std::string& labels_path) {
  std::ifstream img(images_path, std::ios::binary);
  if (!img) throw FormatError(images_path + ": cannot open");
  char magic_buf[16];
  std::snprintf(magic_buf, sizeof(magic_buf), "0x%08x", kImagesMagic);

  const std::uint32_t img_magic = read_be_u32(img, images_path, 0);
  if (img_magic != kImagesMagic) {
    char found[16];
    std::snprintf(found, sizeof(found), "0x%08x", img_magic);
    throw FormatError(images_path + ": bad magic, expected " +
                      std::string(magic_buf) + ", found " + found);
  }
  const std::uint32_t count = read_be_u32(img, images_path, 4);
  const std::uint32_t rows = read_be_u32(img, images_path, 8);
  const std::uint32_t cols = read_be_u32(img, images_path, 12);
  if (count == 0 || rows == 0 || cols == 0) {
    throw FormatError(images_path + ": zero image count or size in header");
  }
  const std::size_t pixel_bytes =
      static_cast<std::size_t>(count) * rows * cols;
  std::vector<unsigned char> pixels(pixel_bytes);
  if (!img.read(reinterpret_cast<char*>(pixels.data()),
                static_cast<std::streamsize>(pixel_bytes))) {
    throw FormatError(images_path + ": truncated at byte offset " +
                      std::to_string(16 + img.gcount()));
  }

  std::ifstream lab(labels_path, std::ios::binary);
  if (!lab) throw FormatError(labels_path + ": cannot open");
  const std::uint32_t lab_magic = read_be_u32(lab, labels_path, 0);
  if (lab_magic != kLabelsMagic) {
    char expected[16], found[16];
    std::snprintf(expected, sizeof(expected), "0x%08x", kLabelsMagic);
    std::snprintf(found, sizeof(found), "0x%08x", lab_magic);
    throw FormatError(labels_path + ": bad magic, expected " +
                      std::string(expected) + ", found " + found);
  }
  const std::uint32_t lab_count = read_be_u32(lab, labels_path, 4);
  if (lab_count != count) {
    throw FormatError("image count " + std::to_string(count) +
                      " does not match label count " +
                      std::to_string(lab_count));
  }
  std::vector<unsigned char> raw_labels(lab_count);
  if (!lab.read(reinterpret_cast<char*>(raw_labels.data()),
                static_cast<std::streamsize>(lab_count))) {
    throw FormatError(labels_path + ": truncated at byte offset " +
                      std::to_string(8 + lab.gcount()));
  }

  const Eigen::Index dim = static_cast<Eigen::Index>(rows) * cols;
  Matrix features(dim, static_cast<Eigen::Index>(count));
  for (std::uint32_t i = 0; i < count; ++i) {
    for (Eigen::Index p = 0; p < dim; ++p) {
      features(p, static_cast<Eigen::Index>(i)) =
          pixels[static_cast<std::size_t>(i) * static_cast<std::size_t>(dim) +
                 static_cast<std::size_t>(p)] /
          255.0;
    }
  }
  std::vector<int> labels(count);
  for (std::uint32_t i = 0; i < count; ++i) labels[i] = raw_labels[i];
  return make_dataset(FeatureMatrix{std::move(features)}, std::move(labels),
                      10, "mnist");
}

void write_idx_images(const std::string& path, int rows, int cols,
                      const std::vector<std::uint8_t>& pixels) {
  if (rows < 1 || cols < 1 ||
      pixels.size() % (static_cast<std::size_t>(rows) * cols) != 0) {
    throw InputDomainError("pixel buffer is not a whole number of images");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError(path + ": cannot open for writing");
  write_be_u32(out, kImagesMagic);
  write_be_u32(out, static_cast<std::uint32_t>(
                        pixels.size() / (static_cast<std::size_t>(rows) * cols)));
  write_be_u32(out, static_cast<std::uint32_t>(rows));
  write_be_u32(out, static_cast<std::uint32_t>(cols));
  out.write(reinterpret_cast<const char*>(pixels.data()),
            static_cast<std::streamsize>(pixels.size()));
  if (!out) throw FormatError(path + ": write failed");
}

void write_idx_labels(const std::string& path,
                      const std::vector<std::uint8_t>& labels) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError(path + ": cannot open for writing");
  write_be_u32(out, kLabelsMagic);
  write_be_u32(out, static_cast<std::uint32_t>(labels.size()));
  out.write(reinterpret_cast<const char*>(labels.data()),
            static_cast<std::streamsize>(labels.size()));
  if (!out) throw FormatError(path + ": write failed");
}

namespace {

bool parse_double(const std::string& cell, double& out) {
  const char* begin = cell.c_str();
  char* end = nullptr;
  out = std::strtod(begin, &end);
  if (end == begin) return false;
  while (*end == ' ' || *end == '\t' || *end == '\r') ++end;
  return *end == '\0';
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

}  // namespace

Dataset import_csv(const std::string& path, int num_classes) {
  std::ifstream in(path);
  if (!in) throw FormatError(path + ": cannot open");

  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  std::size_t width = 0;
  std::string line;
  std::size_t line_no = 0;
  bool maybe_header = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() < 2) {
      throw FormatError(path + ": row " + std::to_string(line_no) +
                        " needs at least one feature and a label");
    }

    std::vector<double> values(cells.size());
    bool numeric = true;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (!parse_double(cells[i], values[i])) {
        numeric = false;
        break;
      }
    }
    if (!numeric) {
      if (maybe_header && rows.empty()) {
        maybe_header = false;  // skip one header row
        continue;
      }
      throw FormatError(path + ": non-numeric cell at row " +
                        std::to_string(line_no));
    }
    maybe_header = false;

    if (width == 0) {
      width = cells.size();
    } else if (cells.size() != width) {
      throw FormatError(path + ": ragged row " + std::to_string(line_no) +
                        " has " + std::to_string(cells.size()) +
                        " cells, expected " + std::to_string(width));
    }
    const double raw_label = values.back();
    const int label = static_cast<int>(std::llround(raw_label));
    if (std::abs(raw_label - label) > 1e-9) {
      throw FormatError(path + ": non-integer label at row " +
                        std::to_string(line_no));
    }
    if (label < 0 || label >= num_classes) {
      throw FormatError(path + ": label " + std::to_string(label) + " at row " +
                        std::to_string(line_no) + " outside [0, " +
                        std::to_string(num_classes) + ")");
    }
    values.pop_back();
    rows.push_back(std::move(values));
    labels.push_back(label);
  }
  if (rows.empty()) {
    throw FormatError(path + ": no data rows");
  }

  Matrix features(static_cast<Eigen::Index>(width - 1),
                  static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j + 1 < width; ++j) {
      features(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) =
          rows[i][j];
    }
  }
  return make_dataset(FeatureMatrix{std::move(features)}, std::move(labels),
                      num_classes, path);
}

void export_csv(const Dataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw FormatError(path + ": cannot open for writing");
  const int d = ds.features.dim();
  for (int j = 0; j < d; ++j) {
    out << 'f' << j << ',';
  }
  out << "label\n";
  char buf[48];
  for (int i = 0; i < ds.features.samples(); ++i) {
    for (int j = 0; j < d; ++j) {
      std::snprintf(buf, sizeof(buf), "%.9g,", ds.features.values(j, i));
      out << buf;
    }
    out << ds.labels[static_cast<std::size_t>(i)] << '\n';
  }
  if (!out) throw FormatError(path + ": write failed");
}

namespace {

// Largest-remainder allocation of `total` slots proportional to sizes.
std::vector<int> proportional_alloc(const std::vector<int>& sizes, int total) {
  const double all = static_cast<double>(
      std::accumulate(sizes.begin(), sizes.end(), 0));
  std::vector<int> alloc(sizes.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  int used = 0;
  for (std::size_t c = 0; c < sizes.size(); ++c) {
    const double exact = total * sizes[c] / all;
    alloc[c] = std::min(static_cast<int>(exact), sizes[c]);
    used += alloc[c];
    remainders.emplace_back(exact - alloc[c], c);
  }
  std::sort(remainders.begin(), remainders.end(),
            [](const auto& a, const auto& b) {
              if (a.first != b.first) return a.first > b.first;
              return a.second < b.second;
            });
  for (const auto& [rem, c] : remainders) {
    if (used >= total) break;
    if (alloc[c] < sizes[c]) {
      ++alloc[c];
      ++used;
    }
  }
  return alloc;
}

Dataset take_columns(const Dataset& ds, const std::vector<int>& idx,
                     const std::string& name) {
  Matrix features(ds.features.values.rows(),
                  static_cast<Eigen::Index>(idx.size()));
  std::vector<int> labels(idx.size());
  for (std::size_t k = 0; k < idx.size(); ++k) {
    features.col(static_cast<Eigen::Index>(k)) = ds.features.values.col(idx[k]);
    labels[k] = ds.labels[static_cast<std::size_t>(idx[k])];
  }
  return make_dataset(FeatureMatrix{std::move(features)}, std::move(labels),
                      ds.num_classes, name);
}

}  // namespace

Dataset subsample(const Dataset& ds, int n, std::uint64_t seed) {
  const int m = ds.features.samples();
  if (n < 1 || n > m) {
    throw InputDomainError("subsample size " + std::to_string(n) +
                           " outside [1, " + std::to_string(m) + "]");
  }
  std::vector<std::vector<int>> by_class(ds.num_classes);
  for (int i = 0; i < m; ++i) {
    by_class[static_cast<std::size_t>(ds.labels[static_cast<std::size_t>(i)])]
        .push_back(i);
  }
  std::vector<int> sizes;
  sizes.reserve(by_class.size());
  for (const auto& members : by_class) {
    sizes.push_back(static_cast<int>(members.size()));
  }
  const auto alloc = proportional_alloc(sizes, n);

  Rng rng(seed);
  std::vector<int> chosen;
  chosen.reserve(static_cast<std::size_t>(n));
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto members = by_class[c];
    rng.shuffle(members);
    members.resize(static_cast<std::size_t>(alloc[c]));
    std::sort(members.begin(), members.end());
    chosen.insert(chosen.end(), members.begin(), members.end());
  }
  std::sort(chosen.begin(), chosen.end());
  return take_columns(ds, chosen, ds.name + "/sub" + std::to_string(n));
}

std::pair<Dataset, Dataset> split(const Dataset& ds, double fraction,
                                  std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) {
    throw InputDomainError("split fraction must lie in [0, 1]");
  }
  const int m = ds.features.samples();
  const int want = static_cast<int>(std::llround(fraction * m));

  std::vector<std::vector<int>> by_class(ds.num_classes);
  for (int i = 0; i < m; ++i) {
    by_class[static_cast<std::size_t>(ds.labels[static_cast<std::size_t>(i)])]
        .push_back(i);
  }
  std::vector<int> sizes;
  for (const auto& members : by_class) {
    sizes.push_back(static_cast<int>(members.size()));
  }
  const auto alloc = proportional_alloc(sizes, want);

  Rng rng(seed);
  std::vector<int> first, second;
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto members = by_class[c];
    rng.shuffle(members);
    for (std::size_t k = 0; k < members.size(); ++k) {
      (k < static_cast<std::size_t>(alloc[c]) ? first : second)
          .push_back(members[k]);
    }
  }
  std::sort(first.begin(), first.end());
  std::sort(second.begin(), second.end());

  // An empty side still carries the schema; bypass make_dataset's nonempty
  // checks by building a 0-column sibling directly.
  auto build = [&](const std::vector<int>& idx, const char* tag) {
    if (!idx.empty()) return take_columns(ds, idx, ds.name + tag);
    Dataset empty;
    empty.features =
        FeatureMatrix{Matrix(ds.features.values.rows(), 0)};
    empty.num_classes = ds.num_classes;
    empty.name = ds.name + tag;
    empty.checksum = 0;
    return empty;
  };
  return {build(first, "/train"), build(second, "/test")};
}

Dataset synth_images(int samples, int num_classes, std::uint64_t seed) {
  if (samples < 1) throw InputDomainError("samples must be positive");
  if (num_classes < 2 || num_classes > 255) {
    throw InputDomainError("num_classes must lie in [2, 255]");
  }
  constexpr int kSide = 28;
  constexpr int kDim = kSide * kSide;

  Rng rng(seed);
  // Per class: a template of three soft blobs at seeded positions.
  std::vector<std::array<double, kDim>> templates(
      static_cast<std::size_t>(num_classes));
  for (auto& tmpl : templates) {
    tmpl.fill(0.0);
    for (int blob = 0; blob < 3; ++blob) {
      const double cx = rng.uniform(4.0, 24.0);
      const double cy = rng.uniform(4.0, 24.0);
      const double radius = rng.uniform(2.0, 5.0);
      const double gain = rng.uniform(0.6, 1.0);
      for (int y = 0; y < kSide; ++y) {
        for (int x = 0; x < kSide; ++x) {
          const double dx = x - cx, dy = y - cy;
          tmpl[static_cast<std::size_t>(y * kSide + x)] +=
              gain * std::exp(-(dx * dx + dy * dy) / (2.0 * radius * radius));
        }
      }
    }
    for (auto& v : tmpl) v = std::min(v, 1.0);
  }

  Matrix features(kDim, samples);
  std::vector<int> labels(static_cast<std::size_t>(samples));
  for (int i = 0; i < samples; ++i) {
    const int cls = static_cast<int>(rng.below(
        static_cast<std::uint64_t>(num_classes)));
    labels[static_cast<std::size_t>(i)] = cls;
    const auto& tmpl = templates[static_cast<std::size_t>(cls)];
    for (int p = 0; p < kDim; ++p) {
      double v = tmpl[static_cast<std::size_t>(p)] + 0.15 * rng.normal();
      v = std::clamp(v, 0.0, 1.0);
      // Quantize to the 256 gray levels so IDX round-trips are exact.
      features(p, i) = std::round(v * 255.0) / 255.0;
    }
  }
  return make_dataset(FeatureMatrix{std::move(features)}, std::move(labels),
                      num_classes, "synth-images");
}

}  // namespace iblab::data
