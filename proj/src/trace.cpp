#include "iblab/trace.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>

#include "iblab/io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace iblab::nn {

namespace {

std::string snapshot_name(int epoch, int layer) {
  return "e" + std::to_string(epoch) + "_l" + std::to_string(layer) + ".bin";
}

}  // namespace

void write_trace(const std::string& dir, const TrainTrace& trace,
                 ActivationKind kind, const std::vector<int>& eval_labels,
                 std::uint64_t dataset_checksum, const json& config_echo) {
  fs::create_directories(dir);

  std::vector<int> widths;
  if (!trace.snapshots.empty()) {
    for (const auto& s : trace.snapshots.front()) {
      widths.push_back(static_cast<int>(s.values.rows()));
    }
  }

  json meta;
  meta["config"] = config_echo;
  meta["logged_epochs"] = trace.logged_epochs;
  meta["hidden_widths"] = widths;
  meta["activation"] = to_string(kind);
  meta["eval_samples"] = eval_labels.size();
  char digest[32];
  std::snprintf(digest, sizeof(digest), "%016llx",
                static_cast<unsigned long long>(dataset_checksum));
  meta["dataset_checksum"] = digest;
  {
    std::ofstream out(fs::path(dir) / "meta.json");
    if (!out) throw FormatError(dir + "/meta.json: cannot open for writing");
    out << meta.dump(2) << '\n';
  }

  {
    std::ofstream out(fs::path(dir) / "metrics.csv");
    if (!out) throw FormatError(dir + "/metrics.csv: cannot open for writing");
    out << "epoch,loss,train_acc,test_acc\n";
    char buf[160];
    for (const auto& m : trace.metrics) {
      std::snprintf(buf, sizeof(buf), "%d,%.12g,%.12g,%.12g\n", m.epoch,
                    m.loss, m.train_acc, m.test_acc);
      out << buf;
    }
  }

  {
    std::ofstream out(fs::path(dir) / "labels.csv");
    if (!out) throw FormatError(dir + "/labels.csv: cannot open for writing");
    for (const int y : eval_labels) out << y << '\n';
  }

  for (const auto& per_epoch : trace.snapshots) {
    for (const auto& s : per_epoch) {
      write_feature_bin(FeatureMatrix{s.values},
                        (fs::path(dir) / snapshot_name(s.epoch, s.layer))
                            .string());
    }
  }
}

json read_trace_meta(const std::string& dir) {
  std::ifstream in(fs::path(dir) / "meta.json");
  if (!in) throw FormatError(dir + "/meta.json: cannot open");
  json meta;
  try {
    in >> meta;
  } catch (const json::exception& e) {
    throw FormatError(dir + "/meta.json: " + e.what());
  }
  return meta;
}

LoadedTrace read_trace(const std::string& dir) {
  const json meta = read_trace_meta(dir);
  LoadedTrace out;
  try {
    out.logged_epochs = meta.at("logged_epochs").get<std::vector<int>>();
    out.hidden_widths = meta.at("hidden_widths").get<std::vector<int>>();
    out.activation = activation_from_string(meta.at("activation"));
    out.dataset_checksum = std::stoull(
        meta.at("dataset_checksum").get<std::string>(), nullptr, 16);
  } catch (const json::exception& e) {
    throw FormatError(dir + "/meta.json: " + e.what());
  }

  {
    std::ifstream in(fs::path(dir) / "labels.csv");
    if (!in) throw FormatError(dir + "/labels.csv: cannot open");
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      out.eval_labels.push_back(std::stoi(line));
    }
  }

  for (const int epoch : out.logged_epochs) {
    for (std::size_t layer = 0; layer < out.hidden_widths.size(); ++layer) {
      const auto path =
          fs::path(dir) / snapshot_name(epoch, static_cast<int>(layer));
      mi::ActivationSnapshot s;
      s.epoch = epoch;
      s.layer = static_cast<int>(layer);
      s.kind = out.activation;
      s.values = read_feature_bin(path.string()).values;
      if (s.values.rows() != out.hidden_widths[layer]) {
        throw FormatError(path.string() + ": width " +
                          std::to_string(s.values.rows()) +
                          " does not match meta.json");
      }
      if (static_cast<std::size_t>(s.values.cols()) !=
          out.eval_labels.size()) {
        throw FormatError(path.string() + ": sample count does not match labels.csv");
      }
      out.snapshots.push_back(std::move(s));
    }
  }
  return out;
}

}  // namespace iblab::nn
