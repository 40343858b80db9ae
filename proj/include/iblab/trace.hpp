#ifndef IBLAB_TRACE_HPP
#define IBLAB_TRACE_HPP

#include <nlohmann/json_fwd.hpp>
#include <string>
#include <vector>

#include "iblab/nn.hpp"

namespace iblab::nn {

// On-disk layout of one training run:
//   meta.json     config echo, logged epochs, widths, dataset checksum
//   metrics.csv   epoch,loss,train_acc,test_acc
//   labels.csv    one evaluation-set label per line (consumed by MI passes)
//   e{E}_l{L}.bin activation snapshot, raw FeatureMatrix layout
void write_trace(const std::string& dir, const TrainTrace& trace,
                 ActivationKind kind, const std::vector<int>& eval_labels,
                 std::uint64_t dataset_checksum,
                 const nlohmann::json& config_echo);

struct LoadedTrace {
  std::vector<mi::ActivationSnapshot> snapshots;  // every (epoch, layer)
  std::vector<int> eval_labels;
  std::vector<int> logged_epochs;
  std::vector<int> hidden_widths;
  ActivationKind activation = ActivationKind::kTanh;
  std::uint64_t dataset_checksum = 0;
};

LoadedTrace read_trace(const std::string& dir);

// Reads just meta.json (cheap; no snapshot payloads).
nlohmann::json read_trace_meta(const std::string& dir);

}  // namespace iblab::nn

#endif  // IBLAB_TRACE_HPP
