#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pcnflow/golden.hpp"

namespace pcnflow::presets {

// Bundled accelerator operating points. Versions A-E were implemented on the
// reference hardware platform; F did not fit and is model-only (its clock is
// a nominal placeholder).
struct RefConfig {
  std::string version;
  golden::Precision precision;
  int n_bar;
  int par;
  double f_kernel;   // Hz
  bool implemented;  // built and measured on the reference platform
};

const std::vector<RefConfig>& reference_configs();
std::optional<RefConfig> find_reference(golden::Precision p, int n_bar, int par);

// Externally published measurements for context columns in reports. These are
// third-party platform numbers (GPU baseline and the reference accelerator's
// end-to-end path incl. memory transfers); they are never asserted against
// this simulator, which models compute timing only.
struct PublishedRef {
  std::string version;
  double e2e_eps;              // end-to-end events/s
  double e2e_latency_us;       // end-to-end latency
  long compute_latency_cycles; // profiled kernel cycles
  double compute_latency_clock_hz;  // clock the cycle figure was reported at
};

struct PublishedGpu {
  int event_size;
  double e2e_eps;
  double e2e_latency_us;
};

const std::vector<PublishedRef>& published_accelerator_refs();
const std::vector<PublishedGpu>& published_gpu_baseline();
std::optional<PublishedRef> find_published(const std::string& version);
std::optional<PublishedGpu> find_published_gpu(int event_size);

// Note attached to reports: the published 64-point 8-bit latency figure was
// quoted against a 260 MHz clock while the configuration table rates C at
// 280 MHz; the configuration table is treated as authoritative here.
extern const char* kFrequencyDiscrepancyNote;

}  // namespace pcnflow::presets
