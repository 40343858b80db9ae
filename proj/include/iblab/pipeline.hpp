#ifndef IBLAB_PIPELINE_HPP
#define IBLAB_PIPELINE_HPP

#include <iosfwd>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "iblab/config.hpp"
#include "iblab/data.hpp"
#include "iblab/ib.hpp"
#include "iblab/rng.hpp"

namespace iblab::cli {

struct PreparedData {
  data::Dataset full;  // evaluation set: snapshot + MI source
  data::Dataset train;
  data::Dataset test;
};

// Generates or ingests the dataset, applies the optional subset, splits
// train/test. Deterministic for a fixed spec.
PreparedData prepare_dataset(const DatasetSpec& spec);

struct SeedRunResult {
  std::uint64_t seed = 0;
  std::string trace_dir;
  nn::EpochMetrics final_metrics;
};

// One training run per seed; trace directories land under cfg.out_dir/seedN.
// Progress lines go to `progress`.
std::vector<SeedRunResult> run_train(const ExperimentConfig& cfg,
                                     std::ostream& progress);

struct InfoPlaneRow {
  int epoch = 0;
  int layer = 0;
  double mi_xt = 0.0;
  double mi_ty = 0.0;
  std::string seed;  // decimal seed, "avg", or "" for single-trace files
};

// MI estimation over trace directories. Writes a 4-column infoplane.csv into
// each trace dir and the merged 5-column CSV (per-seed rows then an avg
// block) to out_csv. Returns the merged rows.
std::vector<InfoPlaneRow> run_infoplane(
    const std::vector<std::string>& trace_dirs, const std::string& binning_mode,
    int bins, double lo, double hi, const std::string& out_csv);

std::vector<InfoPlaneRow> read_infoplane_csv(const std::string& path);

// Renders the information plane from a CSV produced by run_infoplane (either
// column layout). Uses the avg block when present. widths, if given, label
// the legend.
void run_plot(const std::string& csv_path, const std::string& svg_path,
              const std::vector<int>& widths, const std::string& title);

struct LayerDiagnostics {
  int layer = 0;
  int width = 0;
  double mi_ty_epoch0 = 0.0;
  double mi_ty_final = 0.0;
  double mi_ty_gain = 0.0;
  double mi_xt_peak = 0.0;
  double mi_xt_final = 0.0;
  double compression_depth = 0.0;  // peak I(X;T) minus final I(X;T)
  bool shows_compression = false;  // depth >= 0.5 bits
  // Never drops more than 0.1 bits below its running max.
  bool mi_ty_nondecreasing = false;
};

inline constexpr double kCompressionThresholdBits = 0.5;
inline constexpr double kMiTyNoiseAllowanceBits = 0.1;

std::vector<LayerDiagnostics> phase_diagnostics(
    const std::vector<InfoPlaneRow>& rows, const std::vector<int>& widths);

struct PanelOutcome {
  std::string dir;
  nlohmann::json summary;  // also written to dir/summary.json
};

// Full train -> infoplane -> plot pipeline plus phase diagnostics.
PanelOutcome run_repro(const ExperimentConfig& cfg, std::ostream& progress);

struct VerifyOptions {
  int instances = 50;
  std::uint64_t seed = 7;
  std::vector<double> betas;  // empty = default sweep
  double epsilon = 0.5;
  bool corrupt_delta_r = false;  // self-test fault injection (+0.1)
  std::vector<std::string> trace_dirs;
  std::string report_csv;  // empty = no file
};

struct VerifyOutcome {
  int rows = 0;
  int failures = 0;
  std::string first_failure;
  bool ok() const { return failures == 0 && rows > 0; }
};

// Special-case verification over seeded random instances and, optionally,
// real trace snapshots.
VerifyOutcome run_verify(const VerifyOptions& opt);

struct RandomInstance {
  FeatureMatrix z;
  Partition pi;
};

// Random feature matrix (d in [1, max_d], M in [K, max_m]) with a partition
// guaranteed to have every class nonempty.
RandomInstance random_instance(Rng& rng, int max_d, int max_m, int max_k);

struct RateReport {
  double r = 0.0;   // nats
  double rc = 0.0;
  double dr = 0.0;
  int d = 0, m = 0, k = 0;
};

RateReport compute_rates(const FeatureMatrix& z, const Partition& pi,
                         Precision eps, bool center);

}  // namespace iblab::cli

#endif  // IBLAB_PIPELINE_HPP
