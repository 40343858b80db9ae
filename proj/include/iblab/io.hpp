#ifndef IBLAB_IO_HPP
#define IBLAB_IO_HPP

#include <iosfwd>
#include <string>

#include "iblab/types.hpp"

namespace iblab {

// Text form: header f0..f{d-1}, then one sample per row.
void write_feature_csv(const FeatureMatrix& z, std::ostream& out);
FeatureMatrix read_feature_csv(std::istream& in);
void write_feature_csv_file(const FeatureMatrix& z, const std::string& path);
FeatureMatrix read_feature_csv_file(const std::string& path);

// Raw form used by activation trace files:
// u32 d, u32 M, then d*M f64 values column-major, all little-endian.
void write_feature_bin(const FeatureMatrix& z, const std::string& path);
FeatureMatrix read_feature_bin(const std::string& path);

}  // namespace iblab

#endif  // IBLAB_IO_HPP
