#pragma once

#include <memory>
#include <string>
#include <vector>

#include "pcnflow/golden.hpp"

namespace pcnflow::dataflow {

// Application requirements the performance model reports against.
inline constexpr double kRequiredThroughputEps = 8e6;
inline constexpr double kRequiredLatencySeconds = 10e-6;

enum class ActorKind { Source, Sink, Ppe, Gpe, Fork, Join, WidthAdapter };

// Functional role of an actor. Gpe actors carry the sub-operator of their
// parent processing element.
enum class OpCode {
  None,
  DenseLayer,     // Ppe: batched dense layer
  CoordTransform, // Gpe sub: learned coordinate projection
  FeatTransform,  // Gpe sub: learned feature projection
  AllPairsDist,   // Gpe sub: all-pairs squared distances (whole event)
  TopKSelect,     // Gpe sub: k-smallest selection per point
  ExpWeight,      // Gpe sub: distance-weight lookup
  GatherMult,     // Gpe sub: weighted neighbor feature gather (whole event)
  MaxReduce,      // Gpe sub: slot-wise max
  SumReduce,      // Gpe sub: slot-wise sum
  MeanReduce,     // Gpe sub: slot-wise mean
  BetaCoord,      // Gpe sub: priority + cluster coordinates from head rows
  IsolationCalc,  // Gpe sub: nearest higher-priority distance (whole event)
  PrioritySort,   // Gpe sub: order points by descending priority (whole event)
  ClusterSelect,  // Gpe sub: seed selection + assignment (whole event)
};

std::string to_string(ActorKind k);
std::string to_string(OpCode op);

struct Actor {
  int id = -1;
  std::string name;
  ActorKind kind = ActorKind::Ppe;
  OpCode op = OpCode::None;
  std::string group;  // parent processing element, empty for top-level actors
  int par = 1;
  int n_bar = 0;
  int ii = 0;     // initiation interval in cycles
  int depth = 0;  // pipeline latency in cycles
  bool buffered = false;  // consumes a whole event before producing
  int layer_index = -1;   // index into NetworkConfig layers, when applicable
  // column window distance operators act on (col_end == -1: full width)
  int col_begin = 0;
  int col_end = -1;
  std::vector<int> in_edges;
  std::vector<int> out_edges;
};

struct Edge {
  int id = -1;
  int from = -1;  // actor ids
  int to = -1;
  int capacity = 2;
  std::string label;
};

struct DataflowGraph {
  std::vector<Actor> actors;
  std::vector<Edge> edges;
  int n_bar = 0;
  int par = 1;
  int ii = 0;
  double f_kernel = 0.0;  // Hz
  int source_id = -1;
  int sink_id = -1;
  std::shared_ptr<const golden::NetworkModel> model;

  int add_actor(Actor a);
  int connect(int from, int to, const std::string& label, int capacity = 2);
  // Topological order over edges; throws ConfigError on a cycle.
  std::vector<int> topo_order() const;
};

struct Violation {
  std::string code;
  std::string message;
  int actor_id = -1;
  int edge_id = -1;
};

// Documented default pipeline depths (cycles). These are properties of this
// implementation, chosen so every mapped configuration meets the latency
// requirement at its rated clock; they make no claim about any particular
// hardware build.
struct DepthTable {
  int dense_base = 8;       // dense layer: dense_base + ceil(log2(out_dim))
  int ann_extra = 4;        // all-pairs distances: ii + ann_extra
  int topk_per_stage = 1;   // top-k: ceil(log2(n_bar)) * ceil(log2(k)) * per_stage + k
  int exp_lookup = 2;       // weight lookup
  int gather_extra = 2;     // gather-mult: ii + gather_extra
  int reduce_base = 1;      // reduce: ceil(log2(k)) + reduce_base
  int beta_coord = 2;       // head split + logistic
  int isolation_extra = 4;  // isolation: ii + isolation_extra
  int sort_extra = 0;       // sort: ii + bitonic stages + sort_extra
  int select_extra = 2;     // selection: ii + select_extra
  int topology = 1;         // fork / join / width adapter

  int dense(int out_dim) const;
  int topk(int n_bar, int k) const;
  int sort(int n_bar, int ii) const;
  int reduce(int k) const;
};

// Pattern-match the network's layers onto a pipeline of processing elements.
// Every computational actor gets ii = ceil(n_bar / par); FIFO capacities are
// sized from path-depth differences so the pipeline never stalls.
DataflowGraph map_network(const golden::NetworkConfig& cfg, int n_bar, int par, double f_kernel,
                          const DepthTable& depths = DepthTable{});
DataflowGraph map_network(std::shared_ptr<const golden::NetworkModel> model, int n_bar, int par,
                          double f_kernel, const DepthTable& depths = DepthTable{});

std::vector<Violation> validate(const DataflowGraph& g);

// Minimum FIFO capacity per edge for stall-free steady flow
// (path-depth difference at reconvergent joins, plus one).
std::vector<int> required_capacities(const DataflowGraph& g);

struct PerfEstimate {
  int ii_cycles = 0;
  int latency_cycles = 0;
  double throughput_eps = 0.0;
  double latency_seconds = 0.0;
  bool meets_throughput_req = false;
  bool meets_latency_req = false;
};

// Analytic model: ii from the single-rate contract, latency as the longest
// source-to-sink depth sum plus (ii - 1) drain cycles.
PerfEstimate analytic_perf(const DataflowGraph& g);

std::string to_json(const DataflowGraph& g);
std::string to_dot(const DataflowGraph& g);
std::string to_text(const DataflowGraph& g);

}  // namespace pcnflow::dataflow
