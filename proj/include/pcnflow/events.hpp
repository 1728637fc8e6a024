#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pcnflow/errors.hpp"
#include "pcnflow/mat.hpp"

namespace pcnflow::events {

// Unused slots of the index column carry the all-ones sentinel.
inline constexpr std::uint32_t kIndexSentinel = 0xffffffffu;

// Raw detector snapshot: one feature row per sensor, zero row = not hit.
struct SensorFrame {
  int n_total = 0;
  int f_dim = 0;
  std::vector<float> features;  // row-major n_total x f_dim

  float at(int sensor, int f) const {
    return features[static_cast<std::size_t>(sensor) * f_dim + f];
  }
  bool is_hit(int sensor) const;
  int hit_count() const;
};

// Compressed event: hit rows packed to the front, original sensor index kept
// in y, live count in n. Rows [n, n_bar) are zero, y there is the sentinel.
struct CompactEvent {
  int n_bar = 0;
  int f_dim = 0;
  int n = 0;
  std::vector<float> x;          // row-major n_bar x f_dim
  std::vector<std::uint32_t> y;  // length n_bar

  float at(int row, int f) const { return x[static_cast<std::size_t>(row) * f_dim + f]; }

  // Live feature rows as doubles, padded with zeros to n_bar rows.
  Mat feature_mat() const;
};

struct GeneratorConfig {
  int n_total = 320;
  int f_dim = 5;
  double sparsity_low = 0.05;
  double sparsity_high = 0.20;
  int clusters_min = 1;
  int clusters_max = 4;
  double cluster_spread = 0.06;
  std::uint64_t seed = 1;

  void check() const;
};

CompactEvent compact(const SensorFrame& frame, int n_bar);

// Scatter compact rows back to their original sensor positions.
Mat expand(const Mat& z, const std::vector<std::uint32_t>& y, int n, int n_total);

std::vector<SensorFrame> generate_events(const GeneratorConfig& cfg, int count);

// Convenience: generate frames and compact them in one pass.
std::vector<CompactEvent> generate_compact_events(const GeneratorConfig& cfg, int count, int n_bar);

// On-disk container. Binary layout (little-endian):
//   header { magic "PCEV", version u16, n_total u32, f_dim u16, n_bar u16, count u32 }
//   per event { n u16, y[n_bar] u32, x[n_bar * f_dim] f32 }
struct EventFile {
  std::uint32_t n_total = 0;
  std::uint16_t f_dim = 0;
  std::uint16_t n_bar = 0;
  std::vector<CompactEvent> events;
};

void write_event_file(const std::string& path, const EventFile& file);
EventFile read_event_file(const std::string& path);

// Whitespace-token text variant for small hand-written fixtures.
void write_event_file_text(const std::string& path, const EventFile& file);
EventFile read_event_file_text(const std::string& path);

}  // namespace pcnflow::events
