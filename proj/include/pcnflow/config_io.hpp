#pragma once

#include <optional>
#include <string>

#include "pcnflow/events.hpp"
#include "pcnflow/golden.hpp"
#include "pcnflow/sim.hpp"

namespace pcnflow::io {

void write_file_atomic(const std::string& path, const std::string& payload);
std::string read_file(const std::string& path);  // DataError with path context

events::GeneratorConfig generator_config_from_json(const std::string& text);
std::string to_json(const events::GeneratorConfig& cfg);

golden::NetworkConfig network_config_from_json(const std::string& text);
std::string to_json(const golden::NetworkConfig& cfg);

struct ArchParams {
  int n_bar = 32;
  int par = 2;
  double f_kernel = 290e6;
  // constant per-event transfer overhead added to reported end-to-end
  // latency estimates; the compute pipeline itself is not slowed down
  double overhead_us = 0.0;
};

struct RunManifest {
  std::string network_path;
  std::string events_path;
  ArchParams arch;
  sim::SimConfig sim_cfg;
  std::string out_dir = ".";
  std::uint64_t seed = 1;
};

RunManifest manifest_from_json(const std::string& text);
std::string to_json(const RunManifest& m);
RunManifest load_manifest(const std::string& path);  // resolves relative paths

golden::NetworkConfig load_network_config(const std::string& path);
events::GeneratorConfig load_generator_config(const std::string& path);

// Flat little-endian f64 blob plus a JSON manifest describing each tensor.
void export_weights(const golden::NetworkModel& model, const std::string& blob_path,
                    const std::string& manifest_path);
void import_weights(golden::NetworkModel& model, const std::string& blob_path,
                    const std::string& manifest_path);

// Golden inference results container ("PCRZ"), bit-stable across runs.
void write_results_file(const std::string& path,
                        const std::vector<golden::InferenceResult>& results);
std::vector<golden::InferenceResult> read_results_file(const std::string& path);

}  // namespace pcnflow::io
