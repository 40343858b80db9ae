// iblab: coding-rate / information-bottleneck laboratory.
//
// Subcommands: verify, rate, train, infoplane, plot, repro, gen-data.
// Exit codes: 0 ok, 1 validation error, 2 runtime error, 3 verify failure.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <optional>

#include "iblab/data.hpp"
#include "iblab/ib.hpp"
#include "iblab/io.hpp"
#include "iblab/pipeline.hpp"
#include "iblab/rates.hpp"
#include "iblab/trace.hpp"

namespace fs = std::filesystem;
using namespace iblab;
using nlohmann::json;

namespace {

struct CommonOverrides {
  std::string config_path;
  std::string out_dir;
  std::vector<std::uint64_t> seeds;
  int epochs = -1;
  double learning_rate = -1.0;
  int batch_size = -1;
  std::string activation;
  std::vector<int> hidden_widths;
  std::string mnist_images, mnist_labels;
  std::string csv_path;
  int bins = -1;
  std::string binning_mode;
};

void add_override_flags(CLI::App* cmd, CommonOverrides& ov) {
  cmd->add_option("--config", ov.config_path, "JSON config file");
  cmd->add_option("--out", ov.out_dir, "output directory");
  cmd->add_option("--seeds", ov.seeds, "training seeds")->delimiter(',');
  cmd->add_option("--epochs", ov.epochs, "training epochs");
  cmd->add_option("--lr", ov.learning_rate, "learning rate");
  cmd->add_option("--batch", ov.batch_size, "batch size");
  cmd->add_option("--activation", ov.activation, "tanh|relu|linear");
  cmd->add_option("--widths", ov.hidden_widths, "hidden layer widths")
      ->delimiter(',');
  cmd->add_option("--mnist-images", ov.mnist_images, "IDX image file");
  cmd->add_option("--mnist-labels", ov.mnist_labels, "IDX label file");
  cmd->add_option("--data-csv", ov.csv_path, "dataset CSV (features,label)");
  cmd->add_option("--bins", ov.bins, "MI estimator bin count");
  cmd->add_option("--binning-mode", ov.binning_mode,
                  "auto|fixed|per_layer|global");
}

// Flags win over the config file.
cli::ExperimentConfig resolve_config(const CommonOverrides& ov,
                                     std::optional<char> panel) {
  cli::ExperimentConfig cfg;
  if (panel.has_value()) cfg = cli::panel_config(*panel);
  if (!ov.config_path.empty()) cfg = cli::load_config_file(ov.config_path);
  if (!ov.out_dir.empty()) cfg.out_dir = ov.out_dir;
  if (!ov.seeds.empty()) cfg.seeds = ov.seeds;
  if (ov.epochs >= 0) cfg.model.epochs = ov.epochs;
  if (ov.learning_rate >= 0.0) cfg.model.learning_rate = ov.learning_rate;
  if (ov.batch_size > 0) cfg.model.batch_size = ov.batch_size;
  if (!ov.activation.empty()) {
    cfg.model.activation = activation_from_string(ov.activation);
  }
  if (!ov.hidden_widths.empty()) cfg.model.hidden_widths = ov.hidden_widths;
  if (!ov.mnist_images.empty() || !ov.mnist_labels.empty()) {
    cfg.dataset.kind = cli::DatasetSpec::Kind::kMnist;
    cfg.dataset.images_path = ov.mnist_images;
    cfg.dataset.labels_path = ov.mnist_labels;
    cfg.dataset.num_classes = 10;
  }
  if (!ov.csv_path.empty()) {
    cfg.dataset.kind = cli::DatasetSpec::Kind::kCsv;
    cfg.dataset.csv_path = ov.csv_path;
  }
  if (ov.bins > 0) cfg.binning_bins = ov.bins;
  if (!ov.binning_mode.empty()) cfg.binning_mode = ov.binning_mode;
  if (cfg.out_dir.empty()) {
    cfg.out_dir = cli::default_out_root() + "/" + cfg.name;
  }
  return cfg;
}

void print_rates(const cli::RateReport& r) {
  std::printf("d=%d M=%d K=%d\n", r.d, r.m, r.k);
  std::printf("R       = %.12g nats  (%.12g bits)\n", r.r, nats_to_bits(r.r));
  std::printf("R^c     = %.12g nats  (%.12g bits)\n", r.rc,
              nats_to_bits(r.rc));
  std::printf("DeltaR  = %.12g nats  (%.12g bits)\n", r.dr,
              nats_to_bits(r.dr));
}

Partition partition_from_labels(const std::vector<int>& labels) {
  Partition pi;
  for (const int y : labels) pi.num_classes = std::max(pi.num_classes, y + 1);
  pi.assignment = labels;
  return pi;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"coding-rate and information-bottleneck laboratory"};
  app.require_subcommand(1);

  // verify ------------------------------------------------------------
  auto* verify = app.add_subcommand(
      "verify", "check the large-beta equivalence on random instances");
  cli::VerifyOptions vopt;
  std::vector<std::string> verify_traces;
  verify->add_option("--instances", vopt.instances, "random instance count");
  verify->add_option("--seed", vopt.seed, "instance generator seed");
  verify->add_option("--betas", vopt.betas, "beta sweep")->delimiter(',');
  verify->add_option("--epsilon", vopt.epsilon, "coding precision");
  verify->add_option("--report", vopt.report_csv, "write CSV report here");
  verify->add_option("--trace", verify_traces,
                     "also verify every snapshot of these trace dirs");
  verify->add_flag("--self-test-corrupt", vopt.corrupt_delta_r,
                   "fault injection: corrupt DeltaR by +0.1, expect FAIL");

  // rate ---------------------------------------------------------------
  auto* rate = app.add_subcommand(
      "rate", "print R, R^c, DeltaR for a dataset or a trace snapshot");
  std::string rate_csv, rate_trace;
  int rate_epoch = -1, rate_layer = -1, rate_classes = 2;
  double rate_eps = 0.5;
  bool rate_center = false;
  rate->add_option("--data-csv", rate_csv, "dataset CSV (features,label)");
  rate->add_option("--num-classes", rate_classes, "classes in the CSV");
  rate->add_option("--trace", rate_trace, "trace directory");
  rate->add_option("--epoch", rate_epoch, "snapshot epoch (with --trace)");
  rate->add_option("--layer", rate_layer, "snapshot layer (with --trace)");
  rate->add_option("--epsilon", rate_eps, "coding precision");
  rate->add_flag("--center", rate_center, "subtract per-row mean first");

  // train / infoplane / plot / repro ------------------------------------
  auto* train = app.add_subcommand("train", "train one run per seed");
  CommonOverrides train_ov;
  add_override_flags(train, train_ov);

  auto* infoplane = app.add_subcommand(
      "infoplane", "estimate information-plane points from trace dirs");
  std::vector<std::string> ip_traces;
  std::string ip_out = "infoplane.csv";
  int ip_bins = 30;
  std::string ip_mode = "auto";
  double ip_lo = -1.0, ip_hi = 1.0;
  infoplane->add_option("--trace", ip_traces, "trace directories")
      ->required();
  infoplane->add_option("--out", ip_out, "merged CSV path");
  infoplane->add_option("--bins", ip_bins, "bin count");
  infoplane->add_option("--binning-mode", ip_mode,
                        "auto|fixed|per_layer|global");
  infoplane->add_option("--lo", ip_lo, "fixed range low edge");
  infoplane->add_option("--hi", ip_hi, "fixed range high edge");

  auto* plot = app.add_subcommand("plot", "render an information-plane SVG");
  std::string plot_in, plot_out = "infoplane.svg", plot_title = "information plane";
  std::vector<int> plot_widths;
  plot->add_option("--in", plot_in, "infoplane CSV")->required();
  plot->add_option("--out", plot_out, "SVG path");
  plot->add_option("--widths", plot_widths, "legend widths per layer")
      ->delimiter(',');
  plot->add_option("--title", plot_title, "plot title");

  auto* repro = app.add_subcommand(
      "repro", "run one reproduction panel (train+infoplane+plot+summary)");
  std::string repro_panel;
  CommonOverrides repro_ov;
  repro->add_option("--panel", repro_panel, "a|b|c|d")->required();
  add_override_flags(repro, repro_ov);

  // gen-data -------------------------------------------------------------
  auto* gen = app.add_subcommand("gen-data", "generate datasets");
  std::string gen_kind = "szt", gen_out = "szt.csv";
  std::uint64_t gen_seed = 12;
  double gen_gamma = std::nan("");
  int gen_samples = 12000, gen_classes = 10;
  gen->add_option("--kind", gen_kind, "szt | synth-images");
  gen->add_option("--out", gen_out,
                  "CSV path (szt) or output directory (synth-images)");
  gen->add_option("--seed", gen_seed, "generator seed");
  gen->add_option("--gamma", gen_gamma, "szt threshold (default: auto)");
  gen->add_option("--samples", gen_samples, "synth-images sample count");
  gen->add_option("--classes", gen_classes, "synth-images class count");

  CLI11_PARSE(app, argc, argv);

  try {
    if (verify->parsed()) {
      vopt.trace_dirs = verify_traces;
      const cli::VerifyOutcome outcome = cli::run_verify(vopt);
      std::printf("verify: %d rows, %d failures\n", outcome.rows,
                  outcome.failures);
      if (!outcome.ok()) {
        if (!outcome.first_failure.empty()) {
          std::fprintf(stderr, "error: verify: %s\n",
                       outcome.first_failure.c_str());
        }
        return 3;
      }
      return 0;
    }

    if (rate->parsed()) {
      FeatureMatrix z;
      Partition pi;
      if (!rate_csv.empty()) {
        const data::Dataset ds = data::import_csv(rate_csv, rate_classes);
        z = ds.features;
        pi = partition_from_labels(ds.labels);
        pi.num_classes = ds.num_classes;
      } else if (!rate_trace.empty()) {
        if (rate_epoch < 0 || rate_layer < 0) {
          throw InputDomainError("--trace needs --epoch and --layer");
        }
        z = read_feature_bin(rate_trace + "/e" + std::to_string(rate_epoch) +
                             "_l" + std::to_string(rate_layer) + ".bin");
        const nn::LoadedTrace trace = nn::read_trace(rate_trace);
        pi = partition_from_labels(trace.eval_labels);
      } else {
        throw InputDomainError("rate needs --data-csv or --trace");
      }
      print_rates(cli::compute_rates(z, pi, Precision(rate_eps), rate_center));
      return 0;
    }

    if (train->parsed()) {
      const cli::ExperimentConfig cfg = resolve_config(train_ov, std::nullopt);
      const auto results = cli::run_train(cfg, std::cerr);
      for (const auto& r : results) {
        json line;
        line["seed"] = r.seed;
        line["trace_dir"] = r.trace_dir;
        line["final_loss"] = r.final_metrics.loss;
        line["final_train_acc"] = r.final_metrics.train_acc;
        line["final_test_acc"] = r.final_metrics.test_acc;
        std::cout << line.dump() << '\n';
      }
      return 0;
    }

    if (infoplane->parsed()) {
      cli::run_infoplane(ip_traces, ip_mode, ip_bins, ip_lo, ip_hi, ip_out);
      std::cout << ip_out << '\n';
      return 0;
    }

    if (plot->parsed()) {
      cli::run_plot(plot_in, plot_out, plot_widths, plot_title);
      std::cout << plot_out << '\n';
      return 0;
    }

    if (repro->parsed()) {
      if (repro_panel.size() != 1) {
        throw InputDomainError("--panel must be one of a, b, c, d");
      }
      cli::ExperimentConfig cfg = cli::panel_config(repro_panel[0]);
      // Merge overrides on top of the panel defaults.
      if (!repro_ov.config_path.empty()) {
        cfg = cli::load_config_file(repro_ov.config_path);
      }
      CommonOverrides ov = repro_ov;
      ov.config_path.clear();
      {
        // resolve_config starts from panel defaults here
        cli::ExperimentConfig base = cfg;
        if (!ov.out_dir.empty()) base.out_dir = ov.out_dir;
        if (!ov.seeds.empty()) base.seeds = ov.seeds;
        if (ov.epochs >= 0) base.model.epochs = ov.epochs;
        if (ov.learning_rate >= 0.0) base.model.learning_rate = ov.learning_rate;
        if (ov.batch_size > 0) base.model.batch_size = ov.batch_size;
        if (!ov.activation.empty()) {
          base.model.activation = activation_from_string(ov.activation);
        }
        if (!ov.hidden_widths.empty()) base.model.hidden_widths = ov.hidden_widths;
        if (!ov.mnist_images.empty()) {
          base.dataset.kind = cli::DatasetSpec::Kind::kMnist;
          base.dataset.images_path = ov.mnist_images;
          base.dataset.labels_path = ov.mnist_labels;
          base.dataset.num_classes = 10;
        }
        if (ov.bins > 0) base.binning_bins = ov.bins;
        if (!ov.binning_mode.empty()) base.binning_mode = ov.binning_mode;
        cfg = base;
      }
      const cli::PanelOutcome outcome = cli::run_repro(cfg, std::cerr);
      std::cout << outcome.summary.dump(2) << '\n';
      return 0;
    }

    if (gen->parsed()) {
      if (gen_kind == "szt") {
        std::optional<double> gamma;
        if (!std::isnan(gen_gamma)) gamma = gen_gamma;
        const data::Dataset ds = data::gen_szt(gamma, gen_seed);
        data::export_csv(ds, gen_out);
        std::printf("%s: %d samples, checksum %016llx\n", gen_out.c_str(),
                    ds.features.samples(),
                    static_cast<unsigned long long>(ds.checksum));
      } else if (gen_kind == "synth-images") {
        const data::Dataset ds =
            data::synth_images(gen_samples, gen_classes, gen_seed);
        fs::create_directories(gen_out);
        std::vector<std::uint8_t> pixels;
        pixels.reserve(static_cast<std::size_t>(ds.features.values.size()));
        for (int i = 0; i < ds.features.samples(); ++i) {
          for (int p = 0; p < ds.features.dim(); ++p) {
            pixels.push_back(static_cast<std::uint8_t>(
                std::lround(ds.features.values(p, i) * 255.0)));
          }
        }
        std::vector<std::uint8_t> labels(ds.labels.begin(), ds.labels.end());
        data::write_idx_images(gen_out + "/images.idx", 28, 28, pixels);
        data::write_idx_labels(gen_out + "/labels.idx", labels);
        std::printf("%s/images.idx + labels.idx: %d samples\n",
                    gen_out.c_str(), ds.features.samples());
      } else {
        throw InputDomainError("gen-data --kind must be szt or synth-images");
      }
      return 0;
    }
  } catch (const InputDomainError& e) {
    std::fprintf(stderr, "error: validation: %s\n", e.what());
    return 1;
  } catch (const PartitionError& e) {
    std::fprintf(stderr, "error: validation: %s\n", e.what());
    return 1;
  } catch (const FormatError& e) {
    std::fprintf(stderr, "error: format: %s\n", e.what());
    return 1;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: runtime: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: runtime: %s\n", e.what());
    return 2;
  }
  return 0;
}
