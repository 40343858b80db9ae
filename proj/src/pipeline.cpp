#include "iblab/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <sstream>

#include "iblab/rates.hpp"
#include "iblab/svg.hpp"
#include "iblab/trace.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace iblab::cli {

PreparedData prepare_dataset(const DatasetSpec& spec) {
  data::Dataset full;
  switch (spec.kind) {
    case DatasetSpec::Kind::kSzt:
      full = data::gen_szt(spec.gamma, spec.noise_seed);
      break;
    case DatasetSpec::Kind::kMnist:
      full = data::load_mnist_idx(spec.images_path, spec.labels_path);
      break;
    case DatasetSpec::Kind::kCsv:
      full = data::import_csv(spec.csv_path, spec.num_classes);
      break;
    case DatasetSpec::Kind::kSynthImages:
      full = data::synth_images(spec.synth_samples, spec.num_classes,
                                spec.noise_seed);
      break;
  }
  if (spec.subset > 0 && spec.subset < full.features.samples()) {
    full = data::subsample(full, spec.subset, spec.split_seed ^ 0x736d706cull);
  }
  PreparedData out;
  auto [train, test] = data::split(full, spec.train_fraction, spec.split_seed);
  out.full = std::move(full);
  out.train = std::move(train);
  out.test = std::move(test);
  return out;
}

std::vector<SeedRunResult> run_train(const ExperimentConfig& cfg,
                                     std::ostream& progress) {
  if (cfg.out_dir.empty()) {
    throw InputDomainError("config field 'out_dir': must be set for training");
  }
  PreparedData data = prepare_dataset(cfg.dataset);

  nn::MLPConfig model_cfg = cfg.model;
  model_cfg.input_dim = data.full.features.dim();
  model_cfg.num_classes = data.full.num_classes;
  nn::require_valid(model_cfg, data.train.features.samples());

  const std::vector<int> schedule =
      nn::geometric_log_schedule(model_cfg.epochs);

  fs::create_directories(cfg.out_dir);
  {
    std::ofstream echo(fs::path(cfg.out_dir) / "config.json");
    echo << config_to_json(cfg).dump(2) << '\n';
  }

  std::vector<SeedRunResult> results;
  for (const std::uint64_t seed : cfg.seeds) {
    model_cfg.seed = seed;
    nn::Model model = nn::init(model_cfg);
    progress << cfg.name << " seed " << seed << ": training "
             << model_cfg.epochs << " epochs on "
             << data.train.features.samples() << " samples\n";
    nn::TrainTrace trace = nn::train(
        model, data.train.features.values, data.train.labels,
        data.test.features.values, data.test.labels, data.full.features.values,
        model_cfg, schedule);

    const std::string dir =
        (fs::path(cfg.out_dir) / ("seed" + std::to_string(seed))).string();
    json echo = config_to_json(cfg);
    echo["run_seed"] = seed;
    echo["input_dim"] = model_cfg.input_dim;
    echo["deterministic_trace"] = true;
    nn::write_trace(dir, trace, model_cfg.activation, data.full.labels,
                    data.full.checksum, echo);

    SeedRunResult r;
    r.seed = seed;
    r.trace_dir = dir;
    r.final_metrics = trace.metrics.back();
    progress << cfg.name << " seed " << seed << ": final loss "
             << r.final_metrics.loss << ", train acc "
             << r.final_metrics.train_acc << ", test acc "
             << r.final_metrics.test_acc << '\n';
    results.push_back(std::move(r));
  }
  return results;
}

namespace {

std::string format_row(const InfoPlaneRow& row, bool with_seed) {
  char buf[128];
  if (with_seed) {
    std::snprintf(buf, sizeof(buf), "%d,%d,%.12g,%.12g,%s\n", row.epoch,
                  row.layer, row.mi_xt, row.mi_ty, row.seed.c_str());
  } else {
    std::snprintf(buf, sizeof(buf), "%d,%d,%.12g,%.12g\n", row.epoch,
                  row.layer, row.mi_xt, row.mi_ty);
  }
  return buf;
}

}  // namespace

std::vector<InfoPlaneRow> run_infoplane(
    const std::vector<std::string>& trace_dirs, const std::string& binning_mode,
    int bins, double lo, double hi, const std::string& out_csv) {
  if (trace_dirs.empty()) {
    throw InputDomainError("no trace directories given");
  }

  std::vector<InfoPlaneRow> merged;
  // (epoch, layer) -> accumulated values for the seed average
  std::map<std::pair<int, int>, std::pair<std::vector<double>, std::vector<double>>>
      groups;

  for (const auto& dir : trace_dirs) {
    const nn::LoadedTrace trace = nn::read_trace(dir);
    const json meta = nn::read_trace_meta(dir);
    std::string seed_name = "0";
    if (meta.contains("config") && meta.at("config").contains("run_seed")) {
      seed_name =
          std::to_string(meta.at("config").at("run_seed").get<std::uint64_t>());
    }
    const bool deterministic =
        !meta.contains("config") ||
        meta.at("config").value("deterministic_trace", true);

    const mi::BinningConfig cfg =
        resolve_binning(binning_mode, bins, lo, hi, trace.activation);
    std::vector<mi::InfoPlanePoint> points =
        mi::info_plane(trace.snapshots, trace.eval_labels, cfg);
    if (!deterministic) {
      // Same value through the general estimator; the shortcut assumes a
      // deterministic encoder.
      for (std::size_t i = 0; i < points.size(); ++i) {
        const mi::DiscreteCode code =
            mi::discretize(trace.snapshots[i], cfg);
        points[i].mi_xt_bits = mi::mi_xt_general(code);
      }
    }

    std::sort(points.begin(), points.end(),
              [](const mi::InfoPlanePoint& a, const mi::InfoPlanePoint& b) {
                return std::tie(a.epoch, a.layer) < std::tie(b.epoch, b.layer);
              });

    std::ofstream per_trace(fs::path(dir) / "infoplane.csv");
    if (!per_trace) {
      throw FormatError(dir + "/infoplane.csv: cannot open for writing");
    }
    per_trace << "epoch,layer,mi_xt_bits,mi_ty_bits\n";
    for (const auto& p : points) {
      InfoPlaneRow row{p.epoch, p.layer, p.mi_xt_bits, p.mi_ty_bits, seed_name};
      per_trace << format_row(row, false);
      merged.push_back(row);
      auto& g = groups[{p.epoch, p.layer}];
      g.first.push_back(p.mi_xt_bits);
      g.second.push_back(p.mi_ty_bits);
    }
  }

  std::sort(merged.begin(), merged.end(),
            [](const InfoPlaneRow& a, const InfoPlaneRow& b) {
              return std::tie(a.seed, a.epoch, a.layer) <
                     std::tie(b.seed, b.epoch, b.layer);
            });

  std::vector<InfoPlaneRow> avg_rows;
  for (const auto& [key, values] : groups) {
    InfoPlaneRow row;
    row.epoch = key.first;
    row.layer = key.second;
    row.seed = "avg";
    double sx = 0.0, sy = 0.0;
    for (const double v : values.first) sx += v;
    for (const double v : values.second) sy += v;
    row.mi_xt = sx / static_cast<double>(values.first.size());
    row.mi_ty = sy / static_cast<double>(values.second.size());
    avg_rows.push_back(row);
  }

  if (!out_csv.empty()) {
    fs::path parent = fs::path(out_csv).parent_path();
    if (!parent.empty()) fs::create_directories(parent);
    std::ofstream out(out_csv);
    if (!out) throw FormatError(out_csv + ": cannot open for writing");
    out << "epoch,layer,mi_xt_bits,mi_ty_bits,seed\n";
    for (const auto& row : merged) out << format_row(row, true);
    for (const auto& row : avg_rows) out << format_row(row, true);
  }
  merged.insert(merged.end(), avg_rows.begin(), avg_rows.end());
  return merged;
}

std::vector<InfoPlaneRow> read_infoplane_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError(path + ": cannot open");
  std::string line;
  if (!std::getline(in, line)) throw FormatError(path + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const bool with_seed = line == "epoch,layer,mi_xt_bits,mi_ty_bits,seed";
  if (!with_seed && line != "epoch,layer,mi_xt_bits,mi_ty_bits") {
    throw FormatError(path + ": unexpected header '" + line + "'");
  }

  std::vector<InfoPlaneRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != (with_seed ? 5u : 4u)) {
      throw FormatError(path + ": row " + std::to_string(line_no) +
                        " has wrong column count");
    }
    try {
      InfoPlaneRow row;
      row.epoch = std::stoi(cells[0]);
      row.layer = std::stoi(cells[1]);
      row.mi_xt = std::stod(cells[2]);
      row.mi_ty = std::stod(cells[3]);
      if (with_seed) row.seed = cells[4];
      rows.push_back(std::move(row));
    } catch (const std::exception&) {
      throw FormatError(path + ": unparsable row " + std::to_string(line_no));
    }
  }
  if (rows.empty()) throw FormatError(path + ": no data rows");
  return rows;
}

namespace {

// Collapses rows to one averaged value per (epoch, layer): the avg block
// when present, otherwise the mean over whatever rows share the key.
std::vector<InfoPlaneRow> averaged_rows(const std::vector<InfoPlaneRow>& rows) {
  std::vector<InfoPlaneRow> avg;
  for (const auto& r : rows) {
    if (r.seed == "avg") avg.push_back(r);
  }
  if (!avg.empty()) return avg;

  std::map<std::pair<int, int>, std::pair<std::vector<double>, std::vector<double>>>
      groups;
  for (const auto& r : rows) {
    auto& g = groups[{r.epoch, r.layer}];
    g.first.push_back(r.mi_xt);
    g.second.push_back(r.mi_ty);
  }
  for (const auto& [key, values] : groups) {
    InfoPlaneRow row;
    row.epoch = key.first;
    row.layer = key.second;
    row.seed = "avg";
    double sx = 0.0, sy = 0.0;
    for (const double v : values.first) sx += v;
    for (const double v : values.second) sy += v;
    row.mi_xt = sx / static_cast<double>(values.first.size());
    row.mi_ty = sy / static_cast<double>(values.second.size());
    avg.push_back(row);
  }
  return avg;
}

}  // namespace

void run_plot(const std::string& csv_path, const std::string& svg_path,
              const std::vector<int>& widths, const std::string& title) {
  const std::vector<InfoPlaneRow> rows = read_infoplane_csv(csv_path);
  const std::vector<InfoPlaneRow> avg = averaged_rows(rows);

  std::map<int, PlotSeries> by_layer;
  for (const auto& r : avg) {
    auto& s = by_layer[r.layer];
    s.layer = r.layer;
    s.points.push_back(PlotPoint{r.mi_xt, r.mi_ty, r.epoch});
  }
  std::vector<PlotSeries> series;
  for (auto& [layer, s] : by_layer) {
    std::sort(s.points.begin(), s.points.end(),
              [](const PlotPoint& a, const PlotPoint& b) {
                return a.epoch < b.epoch;
              });
    if (layer >= 0 && static_cast<std::size_t>(layer) < widths.size()) {
      s.label = "layer " + std::to_string(layer) + " (width " +
                std::to_string(widths[static_cast<std::size_t>(layer)]) + ")";
    } else {
      s.label = "layer " + std::to_string(layer);
    }
    series.push_back(std::move(s));
  }

  const std::string svg = render_info_plane_svg(series, title);
  fs::path parent = fs::path(svg_path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
  std::ofstream out(svg_path, std::ios::binary);
  if (!out) throw FormatError(svg_path + ": cannot open for writing");
  out << svg;
}

std::vector<LayerDiagnostics> phase_diagnostics(
    const std::vector<InfoPlaneRow>& rows, const std::vector<int>& widths) {
  const std::vector<InfoPlaneRow> avg = averaged_rows(rows);
  std::map<int, std::vector<InfoPlaneRow>> by_layer;
  for (const auto& r : avg) by_layer[r.layer].push_back(r);

  std::vector<LayerDiagnostics> out;
  for (auto& [layer, seq] : by_layer) {
    std::sort(seq.begin(), seq.end(),
              [](const InfoPlaneRow& a, const InfoPlaneRow& b) {
                return a.epoch < b.epoch;
              });
    LayerDiagnostics d;
    d.layer = layer;
    d.width = (layer >= 0 && static_cast<std::size_t>(layer) < widths.size())
                  ? widths[static_cast<std::size_t>(layer)]
                  : 0;
    d.mi_ty_epoch0 = seq.front().mi_ty;
    d.mi_ty_final = seq.back().mi_ty;
    d.mi_ty_gain = d.mi_ty_final - d.mi_ty_epoch0;
    d.mi_xt_final = seq.back().mi_xt;
    d.mi_xt_peak = seq.front().mi_xt;
    d.mi_ty_nondecreasing = true;
    double running_max_ty = -1.0;
    for (const auto& r : seq) {
      d.mi_xt_peak = std::max(d.mi_xt_peak, r.mi_xt);
      if (r.mi_ty < running_max_ty - kMiTyNoiseAllowanceBits) {
        d.mi_ty_nondecreasing = false;
      }
      running_max_ty = std::max(running_max_ty, r.mi_ty);
    }
    d.compression_depth = d.mi_xt_peak - d.mi_xt_final;
    d.shows_compression = d.compression_depth >= kCompressionThresholdBits;
    out.push_back(d);
  }
  return out;
}

PanelOutcome run_repro(const ExperimentConfig& cfg, std::ostream& progress) {
  const std::vector<SeedRunResult> runs = run_train(cfg, progress);

  std::vector<std::string> trace_dirs;
  for (const auto& r : runs) trace_dirs.push_back(r.trace_dir);
  const std::string csv = (fs::path(cfg.out_dir) / "infoplane.csv").string();
  const std::vector<InfoPlaneRow> rows =
      run_infoplane(trace_dirs, cfg.binning_mode, cfg.binning_bins,
                    cfg.binning_lo, cfg.binning_hi, csv);

  const std::string svg = (fs::path(cfg.out_dir) / "infoplane.svg").string();
  run_plot(csv, svg, cfg.model.hidden_widths, cfg.name);

  const std::vector<LayerDiagnostics> diags =
      phase_diagnostics(rows, cfg.model.hidden_widths);

  json summary;
  summary["name"] = cfg.name;
  summary["architecture"] = cfg.model.hidden_widths;
  summary["activation"] = to_string(cfg.model.activation);
  summary["seeds"] = cfg.seeds;
  summary["epochs"] = cfg.model.epochs;
  json layers = json::array();
  for (const auto& d : diags) {
    json l;
    l["layer"] = d.layer;
    l["width"] = d.width;
    l["mi_ty_epoch0"] = d.mi_ty_epoch0;
    l["mi_ty_final"] = d.mi_ty_final;
    l["mi_ty_gain"] = d.mi_ty_gain;
    l["mi_xt_peak"] = d.mi_xt_peak;
    l["mi_xt_final"] = d.mi_xt_final;
    l["compression_depth"] = d.compression_depth;
    l["shows_compression"] = d.shows_compression;
    l["mi_ty_nondecreasing"] = d.mi_ty_nondecreasing;
    layers.push_back(l);
  }
  summary["layers"] = layers;
  double train_acc = 0.0, test_acc = 0.0;
  for (const auto& r : runs) {
    train_acc += r.final_metrics.train_acc;
    test_acc += r.final_metrics.test_acc;
  }
  summary["final_train_acc_mean"] = train_acc / static_cast<double>(runs.size());
  summary["final_test_acc_mean"] = test_acc / static_cast<double>(runs.size());

  {
    std::ofstream out(fs::path(cfg.out_dir) / "summary.json");
    if (!out) throw FormatError(cfg.out_dir + "/summary.json: cannot open");
    out << summary.dump(2) << '\n';
  }
  PanelOutcome outcome;
  outcome.dir = cfg.out_dir;
  outcome.summary = std::move(summary);
  return outcome;
}

RandomInstance random_instance(Rng& rng, int max_d, int max_m, int max_k) {
  const int k = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_k)));
  const int d = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_d)));
  const int lo_m = std::max(k, 1);
  const int m =
      lo_m + static_cast<int>(rng.below(static_cast<std::uint64_t>(
                 std::max(1, max_m - lo_m + 1))));
  const double scale = std::pow(10.0, rng.uniform(-1.0, 1.0));

  Matrix z(d, m);
  for (Eigen::Index c = 0; c < z.cols(); ++c) {
    for (Eigen::Index r = 0; r < z.rows(); ++r) {
      z(r, c) = scale * rng.normal();
    }
  }
  Partition pi;
  pi.num_classes = k;
  pi.assignment.resize(static_cast<std::size_t>(m));
  for (int i = 0; i < k; ++i) pi.assignment[static_cast<std::size_t>(i)] = i;
  for (int i = k; i < m; ++i) {
    pi.assignment[static_cast<std::size_t>(i)] =
        static_cast<int>(rng.below(static_cast<std::uint64_t>(k)));
  }
  return RandomInstance{FeatureMatrix{std::move(z)}, std::move(pi)};
}

namespace {

void corrupt_report(ib::SpecialCaseReport& report) {
  for (auto& row : report.rows) {
    row.delta_r += 0.1;
    row.residual = std::abs(row.neg_delta_i / row.beta - row.delta_r);
    row.pass = std::abs(row.residual - row.predicted) <=
               ib::kSpecialCaseRelTol * std::max(1.0, std::abs(row.predicted));
  }
}

}  // namespace

VerifyOutcome run_verify(const VerifyOptions& opt) {
  if (opt.instances < 0) {
    throw InputDomainError("verify instance count must be nonnegative");
  }
  std::vector<ib::TradeoffBeta> betas;
  if (opt.betas.empty()) {
    betas = ib::default_beta_sweep();
  } else {
    for (const double b : opt.betas) betas.emplace_back(b);
  }
  const Precision eps(opt.epsilon);

  std::ofstream csv;
  if (!opt.report_csv.empty()) {
    fs::path parent = fs::path(opt.report_csv).parent_path();
    if (!parent.empty()) fs::create_directories(parent);
    csv.open(opt.report_csv);
    if (!csv) throw FormatError(opt.report_csv + ": cannot open for writing");
    csv << "beta,neg_delta_i,delta_r,residual,predicted,pass\n";
  }

  VerifyOutcome outcome;
  auto consume = [&](ib::SpecialCaseReport report, const std::string& what) {
    if (opt.corrupt_delta_r) corrupt_report(report);
    for (const auto& row : report.rows) {
      ++outcome.rows;
      if (!row.pass) {
        ++outcome.failures;
        if (outcome.first_failure.empty()) {
          char buf[192];
          std::snprintf(buf, sizeof(buf),
                        "%s: beta=%.12g neg_delta_i=%.12g delta_r=%.12g "
                        "residual=%.12g predicted=%.12g",
                        what.c_str(), row.beta, row.neg_delta_i, row.delta_r,
                        row.residual, row.predicted);
          outcome.first_failure = buf;
        }
      }
      if (csv.is_open()) {
        char buf[192];
        std::snprintf(buf, sizeof(buf), "%.12g,%.12g,%.12g,%.12g,%.12g,%s\n",
                      row.beta, row.neg_delta_i, row.delta_r, row.residual,
                      row.predicted, row.pass ? "PASS" : "FAIL");
        csv << buf;
      }
    }
    if (!report.residual_monotone) {
      ++outcome.failures;
      if (outcome.first_failure.empty()) {
        outcome.first_failure = what + ": residual not monotone in beta";
      }
    }
  };

  Rng rng(opt.seed);
  for (int i = 0; i < opt.instances; ++i) {
    RandomInstance inst = random_instance(rng, 8, 32, 4);
    consume(ib::verify_special_case(inst.z, inst.pi, eps, betas),
            "instance " + std::to_string(i));
  }

  for (const auto& dir : opt.trace_dirs) {
    const nn::LoadedTrace trace = nn::read_trace(dir);
    int num_classes = 0;
    for (const int y : trace.eval_labels) {
      num_classes = std::max(num_classes, y + 1);
    }
    Partition pi;
    pi.num_classes = num_classes;
    pi.assignment = trace.eval_labels;
    for (const auto& snap : trace.snapshots) {
      consume(
          ib::verify_special_case(FeatureMatrix{snap.values}, pi, eps, betas),
          dir + " e" + std::to_string(snap.epoch) + "_l" +
              std::to_string(snap.layer));
    }
  }
  return outcome;
}

RateReport compute_rates(const FeatureMatrix& z, const Partition& pi,
                         Precision eps, bool center) {
  FeatureMatrix centered;
  const FeatureMatrix* input = &z;
  if (center) {
    centered = rates::center_rows(z);
    input = &centered;
  }
  RateReport report;
  report.r = rates::coding_rate(*input, eps);
  report.rc = rates::conditional_coding_rate(*input, pi, eps);
  report.dr = report.r - report.rc;
  report.d = z.dim();
  report.m = z.samples();
  report.k = pi.num_classes;
  return report;
}

}  // namespace iblab::cli
