#include "iblab/io.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

namespace iblab {

void write_feature_csv(const FeatureMatrix& z, std::ostream& out) {
  require_valid(z);
  const int d = z.dim();
  for (int j = 0; j < d; ++j) {
    out << 'f' << j << (j + 1 < d ? ',' : '\n');
  }
  char buf[48];
  for (int i = 0; i < z.samples(); ++i) {
    for (int j = 0; j < d; ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", z.values(j, i));
      out << buf << (j + 1 < d ? ',' : '\n');
    }
  }
}

FeatureMatrix read_feature_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) {
    throw FormatError("feature csv: empty input");
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line.rfind("f0", 0) != 0) {
    throw FormatError("feature csv: missing f0.. header");
  }
  const std::size_t d = static_cast<std::size_t>(
      std::count(line.begin(), line.end(), ',')) + 1;

  std::vector<double> values;
  std::size_t rows = 0;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::size_t got = 0;
    while (std::getline(ss, cell, ',')) {
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str()) {
        throw FormatError("feature csv: non-numeric cell at row " +
                          std::to_string(line_no));
      }
      values.push_back(v);
      ++got;
    }
    if (got != d) {
      throw FormatError("feature csv: row " + std::to_string(line_no) +
                        " has " + std::to_string(got) + " cells, expected " +
                        std::to_string(d));
    }
    ++rows;
  }
  if (rows == 0) throw FormatError("feature csv: no data rows");

  Matrix m(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(rows));
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      m(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) =
          values[i * d + j];
    }
  }
  return FeatureMatrix{std::move(m)};
}

void write_feature_csv_file(const FeatureMatrix& z, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw FormatError(path + ": cannot open for writing");
  write_feature_csv(z, out);
  if (!out) throw FormatError(path + ": write failed");
}

FeatureMatrix read_feature_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError(path + ": cannot open");
  return read_feature_csv(in);
}

namespace {

void put_u32_le(std::ofstream& out, std::uint32_t v) {
  const std::array<unsigned char, 4> b{
      static_cast<unsigned char>(v & 0xff),
      static_cast<unsigned char>((v >> 8) & 0xff),
      static_cast<unsigned char>((v >> 16) & 0xff),
      static_cast<unsigned char>((v >> 24) & 0xff)};
  out.write(reinterpret_cast<const char*>(b.data()), 4);
}

std::uint32_t get_u32_le(std::ifstream& in, const std::string& path) {
  std::array<unsigned char, 4> b;
  if (!in.read(reinterpret_cast<char*>(b.data()), 4)) {
    throw FormatError(path + ": truncated header");
  }
  return static_cast<std::uint32_t>(b[0]) |
         (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) |
         (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

void write_feature_bin(const FeatureMatrix& z, const std::string& path) {
  require_valid(z);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError(path + ": cannot open for writing");
  put_u32_le(out, static_cast<std::uint32_t>(z.dim()));
  put_u32_le(out, static_cast<std::uint32_t>(z.samples()));
  // Eigen stores column-major; f64 byte order is the host's, which this
  // format assumes little-endian.
  static_assert(sizeof(double) == 8);
  out.write(reinterpret_cast<const char*>(z.values.data()),
            static_cast<std::streamsize>(sizeof(double)) * z.values.size());
  if (!out) throw FormatError(path + ": write failed");
}

FeatureMatrix read_feature_bin(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(path + ": cannot open");
  const std::uint32_t d = get_u32_le(in, path);
  const std::uint32_t m = get_u32_le(in, path);
  if (d == 0 || m == 0) {
    throw FormatError(path + ": zero dimension in header");
  }
  Matrix values(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(m));
  if (!in.read(reinterpret_cast<char*>(values.data()),
               static_cast<std::streamsize>(sizeof(double)) * values.size())) {
    throw FormatError(path + ": truncated payload, expected " +
                      std::to_string(sizeof(double) * d * m) + " bytes");
  }
  return FeatureMatrix{std::move(values)};
}

}  // namespace iblab
