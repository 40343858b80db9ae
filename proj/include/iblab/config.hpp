#ifndef IBLAB_CONFIG_HPP
#define IBLAB_CONFIG_HPP

#include <cstdint>
#include <nlohmann/json_fwd.hpp>
#include <optional>
#include <string>
#include <vector>

#include "iblab/mi_est.hpp"
#include "iblab/nn.hpp"

namespace iblab::cli {

struct DatasetSpec {
  enum class Kind { kSzt, kMnist, kCsv, kSynthImages };
  Kind kind = Kind::kSzt;

  // szt
  std::optional<double> gamma;  // unset = auto-tuned threshold
  std::uint64_t noise_seed = 12;
  // mnist
  std::string images_path;
  std::string labels_path;
  int subset = 0;  // 0 = all samples
  // csv
  std::string csv_path;
  int num_classes = 2;
  // synth-images
  int synth_samples = 12000;

  double train_fraction = 0.85;
  std::uint64_t split_seed = 999;
};

// Everything one experiment run needs; serializable both ways so an output
// directory's config echo can be fed straight back in.
struct ExperimentConfig {
  std::string name = "experiment";
  DatasetSpec dataset;
  nn::MLPConfig model;  // model.seed is ignored; `seeds` drives the runs
  int binning_bins = 30;
  std::string binning_mode = "auto";  // auto | fixed | per_layer | global
  double binning_lo = -1.0;
  double binning_hi = 1.0;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  double epsilon = 0.5;
  std::vector<double> betas;  // empty = default sweep
  std::string out_dir;
};

// Throws InputDomainError naming the offending field.
ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& cfg);
ExperimentConfig load_config_file(const std::string& path);

// Maps the textual binning mode to a concrete config; "auto" follows the
// activation kind (tanh fixed [-1,1], relu/linear per-layer observed).
mi::BinningConfig resolve_binning(const std::string& mode, int bins, double lo,
                                  double hi, ActivationKind kind);

// Default output root: $IBLAB_OUT when set, else "out".
std::string default_out_root();

// Fully specified configs for the four reproduction panels.
ExperimentConfig panel_config(char panel);

}  // namespace iblab::cli

#endif  // IBLAB_CONFIG_HPP
