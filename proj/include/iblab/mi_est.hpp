#ifndef IBLAB_MI_EST_HPP
#define IBLAB_MI_EST_HPP

#include <cstdint>
#include <vector>

#include "iblab/types.hpp"

namespace iblab::mi {

// Per-epoch activations of one hidden layer on a fixed evaluation set.
// values is units x samples.
struct ActivationSnapshot {
  int epoch = 0;
  int layer = 0;
  Matrix values;
  ActivationKind kind = ActivationKind::kTanh;
};

enum class RangeMode { kFixed, kPerLayerObserved, kGlobalObserved };

struct BinningConfig {
  int bins = 30;
  RangeMode mode = RangeMode::kFixed;
  double lo = -1.0;  // used when mode == kFixed
  double hi = 1.0;

  static BinningConfig fixed(double lo, double hi, int bins = 30);
  static BinningConfig observed(RangeMode mode, int bins = 30);
};

void require_valid(const BinningConfig& cfg);

// Binning convention used by the experiment lineage: 30 bins; tanh layers on
// the fixed range [-1, 1]; relu/linear layers on the range observed per layer
// over the whole run.
BinningConfig default_binning(ActivationKind kind);

// One opaque symbol per sample: the tuple of per-unit bin indices, relabeled
// as dense ids in first-appearance order.
struct DiscreteCode {
  std::vector<std::uint32_t> ids;
  std::uint32_t distinct = 0;
};

// Maps each unit value to floor(bins (v - lo) / (hi - lo)) clamped to
// [0, bins - 1]. For observed modes the range is this snapshot's min/max; a
// degenerate range (max == min) sends everything to bin 0.
DiscreteCode discretize(const ActivationSnapshot& s, const BinningConfig& cfg);

// Plug-in entropy of the code distribution, bits.
double entropy_discrete(const DiscreteCode& c);

// I(X;T) for a deterministic encoder logged once per distinct input:
// H(T|X) = 0, so the estimate is entropy_discrete(c).
double mi_xt(const DiscreteCode& c);

// General form H(T) - H(T|X) with X = sample index; equal in value to mi_xt
// on such traces, kept for traces not flagged deterministic.
double mi_xt_general(const DiscreteCode& c);

// I(T;Y) = H(T) - sum_y p(y) H(T|Y=y) from empirical joint counts, bits.
// Negatives below 1e-12 from float cancellation clamp to zero.
double mi_ty(const DiscreteCode& c, const std::vector<int>& labels);

struct InfoPlanePoint {
  int epoch = 0;
  int layer = 0;
  double mi_xt_bits = 0.0;
  double mi_ty_bits = 0.0;
};

// One point per (epoch, layer). For the observed range modes the binning
// range is resolved across the whole snapshot list first (per layer, or
// globally), so every epoch of a layer shares one grid.
std::vector<InfoPlanePoint> info_plane(
    const std::vector<ActivationSnapshot>& snapshots,
    const std::vector<int>& labels, const BinningConfig& cfg);

}  // namespace iblab::mi

#endif  // IBLAB_MI_EST_HPP
