#include "iblab/config.hpp"

#include <cstdlib>
#include <fstream>
#include <nlohmann/json.hpp>

using nlohmann::json;

namespace iblab::cli {

namespace {

[[noreturn]] void bad_field(const std::string& field, const std::string& why) {
  throw InputDomainError("config field '" + field + "': " + why);
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    bad_field(key, "wrong type");
  }
}

DatasetSpec dataset_from_json(const json& j) {
  DatasetSpec spec;
  const std::string kind = get_or<std::string>(j, "kind", "szt");
  if (kind == "szt") {
    spec.kind = DatasetSpec::Kind::kSzt;
  } else if (kind == "mnist") {
    spec.kind = DatasetSpec::Kind::kMnist;
  } else if (kind == "csv") {
    spec.kind = DatasetSpec::Kind::kCsv;
  } else if (kind == "synth-images") {
    spec.kind = DatasetSpec::Kind::kSynthImages;
  } else {
    bad_field("dataset.kind", "expected szt, mnist, csv, or synth-images");
  }
  if (j.contains("gamma") && !j.at("gamma").is_null()) {
    spec.gamma = j.at("gamma").get<double>();
  }
  spec.noise_seed = get_or<std::uint64_t>(j, "noise_seed", spec.noise_seed);
  spec.images_path = get_or<std::string>(j, "images", spec.images_path);
  spec.labels_path = get_or<std::string>(j, "labels", spec.labels_path);
  spec.subset = get_or<int>(j, "subset", spec.subset);
  spec.csv_path = get_or<std::string>(j, "path", spec.csv_path);
  spec.num_classes = get_or<int>(j, "num_classes", spec.num_classes);
  spec.synth_samples = get_or<int>(j, "synth_samples", spec.synth_samples);
  spec.train_fraction =
      get_or<double>(j, "train_fraction", spec.train_fraction);
  spec.split_seed = get_or<std::uint64_t>(j, "split_seed", spec.split_seed);

  if (spec.kind == DatasetSpec::Kind::kMnist &&
      (spec.images_path.empty() || spec.labels_path.empty())) {
    bad_field("dataset.images", "mnist dataset needs images and labels paths");
  }
  if (spec.kind == DatasetSpec::Kind::kCsv && spec.csv_path.empty()) {
    bad_field("dataset.path", "csv dataset needs a file path");
  }
  if (spec.kind == DatasetSpec::Kind::kCsv && spec.num_classes < 2) {
    bad_field("dataset.num_classes", "must be at least 2");
  }
  if (!(spec.train_fraction > 0.0 && spec.train_fraction <= 1.0)) {
    bad_field("dataset.train_fraction", "must lie in (0, 1]");
  }
  if (spec.subset < 0) bad_field("dataset.subset", "must be nonnegative");
  if (spec.kind == DatasetSpec::Kind::kSynthImages && spec.synth_samples < 10) {
    bad_field("dataset.synth_samples", "must be at least 10");
  }
  return spec;
}

json dataset_to_json(const DatasetSpec& spec) {
  json j;
  switch (spec.kind) {
    case DatasetSpec::Kind::kSzt:
      j["kind"] = "szt";
      break;
    case DatasetSpec::Kind::kMnist:
      j["kind"] = "mnist";
      break;
    case DatasetSpec::Kind::kCsv:
      j["kind"] = "csv";
      break;
    case DatasetSpec::Kind::kSynthImages:
      j["kind"] = "synth-images";
      break;
  }
  if (spec.gamma.has_value()) {
    j["gamma"] = *spec.gamma;
  } else {
    j["gamma"] = nullptr;
  }
  j["noise_seed"] = spec.noise_seed;
  if (!spec.images_path.empty()) j["images"] = spec.images_path;
  if (!spec.labels_path.empty()) j["labels"] = spec.labels_path;
  if (spec.subset > 0) j["subset"] = spec.subset;
  if (!spec.csv_path.empty()) j["path"] = spec.csv_path;
  j["num_classes"] = spec.num_classes;
  if (spec.kind == DatasetSpec::Kind::kSynthImages) {
    j["synth_samples"] = spec.synth_samples;
  }
  j["train_fraction"] = spec.train_fraction;
  j["split_seed"] = spec.split_seed;
  return j;
}

}  // namespace

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig cfg;
  cfg.name = get_or<std::string>(j, "name", cfg.name);
  if (j.contains("dataset")) cfg.dataset = dataset_from_json(j.at("dataset"));

  if (j.contains("model")) {
    const json& m = j.at("model");
    cfg.model.hidden_widths =
        get_or<std::vector<int>>(m, "hidden_widths", cfg.model.hidden_widths);
    if (cfg.model.hidden_widths.empty()) {
      bad_field("model.hidden_widths", "must be nonempty");
    }
    for (const int w : cfg.model.hidden_widths) {
      if (w < 1) bad_field("model.hidden_widths", "entries must be positive");
    }
    const std::string act = get_or<std::string>(m, "activation", "tanh");
    try {
      cfg.model.activation = activation_from_string(act);
    } catch (const InputDomainError&) {
      bad_field("model.activation", "expected tanh, relu, or linear");
    }
    cfg.model.num_classes = get_or<int>(m, "num_classes", cfg.model.num_classes);
    cfg.model.learning_rate =
        get_or<double>(m, "learning_rate", cfg.model.learning_rate);
    cfg.model.batch_size = get_or<int>(m, "batch_size", cfg.model.batch_size);
    cfg.model.epochs = get_or<int>(m, "epochs", cfg.model.epochs);
    cfg.model.momentum = get_or<double>(m, "momentum", cfg.model.momentum);
    if (cfg.model.learning_rate < 0.0) bad_field("model.learning_rate", "must be nonnegative");
    if (cfg.model.batch_size < 1) bad_field("model.batch_size", "must be positive");
    if (cfg.model.epochs < 0) bad_field("model.epochs", "must be nonnegative");
    if (cfg.model.momentum < 0.0 || cfg.model.momentum >= 1.0) {
      bad_field("model.momentum", "must lie in [0, 1)");
    }
  }

  if (j.contains("binning")) {
    const json& b = j.at("binning");
    cfg.binning_bins = get_or<int>(b, "bins", cfg.binning_bins);
    cfg.binning_mode = get_or<std::string>(b, "mode", cfg.binning_mode);
    cfg.binning_lo = get_or<double>(b, "lo", cfg.binning_lo);
    cfg.binning_hi = get_or<double>(b, "hi", cfg.binning_hi);
    if (cfg.binning_bins < 2) bad_field("binning.bins", "must be at least 2");
    if (cfg.binning_mode != "auto" && cfg.binning_mode != "fixed" &&
        cfg.binning_mode != "per_layer" && cfg.binning_mode != "global") {
      bad_field("binning.mode", "expected auto, fixed, per_layer, or global");
    }
    if (cfg.binning_mode == "fixed" && !(cfg.binning_lo < cfg.binning_hi)) {
      bad_field("binning.lo", "fixed range needs lo < hi");
    }
  }

  cfg.seeds = get_or<std::vector<std::uint64_t>>(j, "seeds", cfg.seeds);
  if (cfg.seeds.empty()) bad_field("seeds", "must be nonempty");
  cfg.epsilon = get_or<double>(j, "epsilon", cfg.epsilon);
  if (!(cfg.epsilon > 0.0)) bad_field("epsilon", "must be positive");
  cfg.betas = get_or<std::vector<double>>(j, "betas", cfg.betas);
  for (const double b : cfg.betas) {
    if (!(b > 0.0)) bad_field("betas", "entries must be positive");
  }
  cfg.out_dir = get_or<std::string>(j, "out_dir", cfg.out_dir);
  return cfg;
}

json config_to_json(const ExperimentConfig& cfg) {
  json j;
  j["name"] = cfg.name;
  j["dataset"] = dataset_to_json(cfg.dataset);
  json m;
  m["hidden_widths"] = cfg.model.hidden_widths;
  m["activation"] = to_string(cfg.model.activation);
  m["num_classes"] = cfg.model.num_classes;
  m["learning_rate"] = cfg.model.learning_rate;
  m["batch_size"] = cfg.model.batch_size;
  m["epochs"] = cfg.model.epochs;
  m["momentum"] = cfg.model.momentum;
  j["model"] = m;
  json b;
  b["bins"] = cfg.binning_bins;
  b["mode"] = cfg.binning_mode;
  b["lo"] = cfg.binning_lo;
  b["hi"] = cfg.binning_hi;
  j["binning"] = b;
  j["seeds"] = cfg.seeds;
  j["epsilon"] = cfg.epsilon;
  j["betas"] = cfg.betas;
  j["out_dir"] = cfg.out_dir;
  return j;
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError(path + ": cannot open");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw FormatError(path + ": " + e.what());
  }
  return config_from_json(j);
}

mi::BinningConfig resolve_binning(const std::string& mode, int bins, double lo,
                                  double hi, ActivationKind kind) {
  if (mode == "auto") {
    mi::BinningConfig cfg = mi::default_binning(kind);
    cfg.bins = bins;
    return cfg;
  }
  if (mode == "fixed") return mi::BinningConfig::fixed(lo, hi, bins);
  if (mode == "per_layer") {
    return mi::BinningConfig::observed(mi::RangeMode::kPerLayerObserved, bins);
  }
  if (mode == "global") {
    return mi::BinningConfig::observed(mi::RangeMode::kGlobalObserved, bins);
  }
  throw InputDomainError("config field 'binning.mode': unknown mode '" + mode +
                         "'");
}

std::string default_out_root() {
  const char* env = std::getenv("IBLAB_OUT");
  if (env != nullptr && env[0] != '\0') return env;
  return "out";
}

ExperimentConfig panel_config(char panel) {
  ExperimentConfig cfg;
  cfg.model.num_classes = 2;
  cfg.model.learning_rate = 0.1;
  cfg.model.batch_size = 256;
  cfg.model.epochs = 8000;
  cfg.dataset.kind = DatasetSpec::Kind::kSzt;
  switch (panel) {
    case 'a':
      cfg.name = "panel-a";
      cfg.model.hidden_widths = {10, 7, 5, 3};
      cfg.model.activation = ActivationKind::kRelu;
      break;
    case 'b':
      cfg.name = "panel-b";
      cfg.model.hidden_widths = {12, 10, 7, 5, 4, 3, 2};
      cfg.model.activation = ActivationKind::kTanh;
      break;
    case 'c':
      cfg.name = "panel-c";
      cfg.model.hidden_widths = {10, 7, 5, 4, 3};
      cfg.model.activation = ActivationKind::kRelu;
      break;
    case 'd':
      cfg.name = "panel-d";
      cfg.model.hidden_widths = {32, 28, 24, 20, 16, 12};
      cfg.model.activation = ActivationKind::kRelu;
      cfg.model.batch_size = 128;
      cfg.model.learning_rate = 0.05;
      cfg.model.epochs = 2000;
      cfg.dataset.kind = DatasetSpec::Kind::kSynthImages;
      cfg.dataset.num_classes = 10;
      cfg.dataset.subset = 10000;
      cfg.dataset.train_fraction = 0.9;
      break;
    default:
      throw InputDomainError("unknown panel '" + std::string(1, panel) +
                             "' (expected a, b, c, or d)");
  }
  cfg.out_dir = default_out_root() + "/" + cfg.name;
  return cfg;
}

}  // namespace iblab::cli
