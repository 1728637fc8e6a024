#pragma once

#include <map>
#include <string>
#include <vector>

#include "pcnflow/dataflow.hpp"
#include "pcnflow/events.hpp"
#include "pcnflow/golden.hpp"

namespace pcnflow::sim {

struct SimConfig {
  std::map<int, int> fifo_capacity_override;  // edge id -> capacity
  int warmup_events = 8;                      // excluded from ii measurement
  long max_cycles = 200'000'000;              // deadlock / livelock guard
  bool record_trace = false;                  // keep per-actor stall detail
  bool record_outputs = true;                 // keep functional results
};

struct EventTrace {
  long event_id = 0;
  int n = 0;
  long t_first_in = 0;
  long t_last_in = 0;
  long t_first_out = 0;
  long t_last_out = 0;

  long latency_cycles() const { return t_last_out - t_first_in; }
};

struct ActorStalls {
  int actor_id = -1;
  std::string name;
  long output_blocked = 0;  // head beat ready, some out FIFO full
  long input_starved = 0;   // mid-event, an input FIFO empty
  long data_wait = 0;       // head beat due before its event finished computing

  long total() const { return output_blocked + input_starved + data_wait; }
};

struct SimReport {
  std::vector<EventTrace> traces;
  std::vector<golden::InferenceResult> outputs;  // empty unless record_outputs
  std::vector<ActorStalls> stalls;
  long total_stall_cycles = 0;
  long total_cycles = 0;
  double ii_measured = 0.0;  // steady-state cycles per event past warmup
  long latency_cycles_min = 0;
  long latency_cycles_max = 0;
  long latency_cycles_p95 = 0;
  bool in_order = true;
};

// Cycle-stepped execution of a validated graph. Tokens carry real point rows;
// actors run the golden operator kernels in the graph's numeric mode. Throws
// ConfigError if validation fails, DeadlockError if max_cycles is exceeded.
SimReport simulate(const dataflow::DataflowGraph& g, const std::vector<events::CompactEvent>& evs,
                   const SimConfig& cfg);

// Same engine without the validation gate, for observing defective graphs
// (under-sized FIFOs, mismatched rates) actually stall.
SimReport simulate_unchecked(const dataflow::DataflowGraph& g,
                             const std::vector<events::CompactEvent>& evs, const SimConfig& cfg);

struct Mismatch {
  long event_id = 0;
  int point = -1;
  std::string field;
  double got = 0.0;
  double want = 0.0;
};

// Empty iff every per-point output, priority, flag and cluster id is
// bit-identical. rel_tol > 0 relaxes the value fields (flags/ids stay exact).
std::vector<Mismatch> check_equivalence(const SimReport& report,
                                        const std::vector<golden::InferenceResult>& golden_results,
                                        double rel_tol = 0.0);

struct Measurement {
  double latency_us = 0.0;
  double throughput_eps = 0.0;
};

Measurement measure(const SimReport& report, double f_kernel);

std::string trace_csv(const SimReport& report);
std::string stalls_csv(const SimReport& report);

}  // namespace pcnflow::sim
