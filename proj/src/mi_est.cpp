#include "iblab/mi_est.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <string>
#include <unordered_map>

namespace iblab::mi {

BinningConfig BinningConfig::fixed(double lo, double hi, int bins) {
  BinningConfig cfg;
  cfg.bins = bins;
  cfg.mode = RangeMode::kFixed;
  cfg.lo = lo;
  cfg.hi = hi;
  require_valid(cfg);
  return cfg;
}

BinningConfig BinningConfig::observed(RangeMode mode, int bins) {
  BinningConfig cfg;
  cfg.bins = bins;
  cfg.mode = mode;
  require_valid(cfg);
  return cfg;
}

void require_valid(const BinningConfig& cfg) {
  if (cfg.bins < 2) {
    throw InputDomainError("binning needs at least 2 bins");
  }
  if (cfg.mode == RangeMode::kFixed && !(cfg.lo < cfg.hi)) {
    throw InputDomainError("fixed binning range needs lo < hi");
  }
}

BinningConfig default_binning(ActivationKind kind) {
  if (kind == ActivationKind::kTanh) {
    return BinningConfig::fixed(-1.0, 1.0, 30);
  }
  return BinningConfig::observed(RangeMode::kPerLayerObserved, 30);
}

namespace {

DiscreteCode discretize_with_range(const Matrix& values, int bins, double lo,
                                   double hi) {
  const auto units = values.rows();
  const auto samples = values.cols();
  const bool degenerate = !(hi > lo);
  const double scale = degenerate ? 0.0 : bins / (hi - lo);

  DiscreteCode code;
  code.ids.resize(static_cast<std::size_t>(samples));

  // Key = packed u16 bin indices of all units.
  std::string key(static_cast<std::size_t>(units) * 2, '\0');
  std::unordered_map<std::string, std::uint32_t> seen;
  seen.reserve(static_cast<std::size_t>(samples));
  for (Eigen::Index s = 0; s < samples; ++s) {
    for (Eigen::Index u = 0; u < units; ++u) {
      int b = degenerate
                  ? 0
                  : static_cast<int>(std::floor((values(u, s) - lo) * scale));
      b = std::clamp(b, 0, bins - 1);
      key[static_cast<std::size_t>(u) * 2] = static_cast<char>(b & 0xff);
      key[static_cast<std::size_t>(u) * 2 + 1] =
          static_cast<char>((b >> 8) & 0xff);
    }
    const auto [it, inserted] =
        seen.emplace(key, static_cast<std::uint32_t>(seen.size()));
    code.ids[static_cast<std::size_t>(s)] = it->second;
  }
  code.distinct = static_cast<std::uint32_t>(seen.size());
  return code;
}

double entropy_of_counts(const std::vector<std::int64_t>& counts,
                         std::int64_t total) {
  if (total <= 0) return 0.0;
  double h = 0.0;
  for (const auto c : counts) {
    if (c > 0) {
      const double p = static_cast<double>(c) / static_cast<double>(total);
      h -= p * std::log2(p);
    }
  }
  return h;
}

}  // namespace

DiscreteCode discretize(const ActivationSnapshot& s, const BinningConfig& cfg) {
  require_valid(cfg);
  if (s.values.rows() < 1 || s.values.cols() < 1) {
    throw InputDomainError("snapshot must have at least one unit and sample");
  }
  if (!s.values.allFinite()) {
    throw InputDomainError("snapshot contains non-finite activations");
  }
  double lo = cfg.lo;
  double hi = cfg.hi;
  if (cfg.mode != RangeMode::kFixed) {
    lo = s.values.minCoeff();
    hi = s.values.maxCoeff();
  }
  if (cfg.bins > 0xffff) {
    throw InputDomainError("bin count exceeds code packing limit (65535)");
  }
  return discretize_with_range(s.values, cfg.bins, lo, hi);
}

double entropy_discrete(const DiscreteCode& c) {
  if (c.ids.empty()) {
    throw InputDomainError("empty code list");
  }
  std::vector<std::int64_t> counts(c.distinct, 0);
  for (const auto id : c.ids) ++counts[id];
  return entropy_of_counts(counts, static_cast<std::int64_t>(c.ids.size()));
}

double mi_xt(const DiscreteCode& c) { return entropy_discrete(c); }

double mi_xt_general(const DiscreteCode& c) {
  const double ht = entropy_discrete(c);
  // X = sample index: each x occurs once, so every conditional term is the
  // entropy of a single observation.
  const double px = 1.0 / static_cast<double>(c.ids.size());
  const std::vector<std::int64_t> singleton{1};
  double h_t_given_x = 0.0;
  for (std::size_t i = 0; i < c.ids.size(); ++i) {
    h_t_given_x += px * entropy_of_counts(singleton, 1);
  }
  return ht - h_t_given_x;
}

double mi_ty(const DiscreteCode& c, const std::vector<int>& labels) {
  if (labels.size() != c.ids.size()) {
    throw InputDomainError("labels length " + std::to_string(labels.size()) +
                           " does not match code count " +
                           std::to_string(c.ids.size()));
  }
  const auto m = static_cast<std::int64_t>(c.ids.size());
  int num_classes = 0;
  for (const int y : labels) {
    if (y < 0) throw InputDomainError("negative class label");
    num_classes = std::max(num_classes, y + 1);
  }

  std::vector<std::int64_t> code_counts(c.distinct, 0);
  std::vector<std::int64_t> class_counts(num_classes, 0);
  std::vector<std::vector<std::int64_t>> joint(
      num_classes, std::vector<std::int64_t>(c.distinct, 0));
  for (std::size_t i = 0; i < c.ids.size(); ++i) {
    ++code_counts[c.ids[i]];
    ++class_counts[labels[i]];
    ++joint[labels[i]][c.ids[i]];
  }

  const double ht = entropy_of_counts(code_counts, m);
  double h_t_given_y = 0.0;
  for (int y = 0; y < num_classes; ++y) {
    if (class_counts[y] == 0) continue;
    const double py =
        static_cast<double>(class_counts[y]) / static_cast<double>(m);
    h_t_given_y += py * entropy_of_counts(joint[y], class_counts[y]);
  }
  double value = ht - h_t_given_y;
  if (value < 0.0 && value > -1e-12) value = 0.0;
  return value;
}

std::vector<InfoPlanePoint> info_plane(
    const std::vector<ActivationSnapshot>& snapshots,
    const std::vector<int>& labels, const BinningConfig& cfg) {
  require_valid(cfg);
  for (const auto& s : snapshots) {
    if (static_cast<std::size_t>(s.values.cols()) != labels.size()) {
      throw InputDomainError(
          "snapshot at epoch " + std::to_string(s.epoch) + " layer " +
          std::to_string(s.layer) + " has " + std::to_string(s.values.cols()) +
          " samples, labels have " + std::to_string(labels.size()));
    }
  }

  // Resolve one range per layer (or one global range) before binning, so the
  // grid is shared across epochs.
  std::map<int, std::pair<double, double>> layer_range;
  if (cfg.mode != RangeMode::kFixed) {
    for (const auto& s : snapshots) {
      const int key = cfg.mode == RangeMode::kGlobalObserved ? -1 : s.layer;
      const double lo = s.values.minCoeff();
      const double hi = s.values.maxCoeff();
      auto [it, inserted] = layer_range.emplace(key, std::make_pair(lo, hi));
      if (!inserted) {
        it->second.first = std::min(it->second.first, lo);
        it->second.second = std::max(it->second.second, hi);
      }
    }
  }

  std::vector<InfoPlanePoint> points;
  points.reserve(snapshots.size());
  for (const auto& s : snapshots) {
    BinningConfig resolved = cfg;
    if (cfg.mode != RangeMode::kFixed) {
      const int key = cfg.mode == RangeMode::kGlobalObserved ? -1 : s.layer;
      const auto [lo, hi] = layer_range.at(key);
      resolved.mode = RangeMode::kFixed;
      resolved.lo = lo;
      resolved.hi = hi > lo ? hi : lo + 1.0;  // degenerate: single bin 0
    }
    const DiscreteCode code = discretize(s, resolved);
    InfoPlanePoint p;
    p.epoch = s.epoch;
    p.layer = s.layer;
    p.mi_xt_bits = mi_xt(code);
    p.mi_ty_bits = mi_ty(code, labels);
    points.push_back(p);
  }
  return points;
}

}  // namespace iblab::mi
