#include "pcnflow/dataflow.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <sstream>

#include <json.hpp>

namespace pcnflow::dataflow {

namespace {

int ceil_log2(int v) {
  int bits = 0;
  int x = 1;
  while (x < v) {
    x <<= 1;
    ++bits;
  }
  return bits;
}

int ceil_div(int a, int b) { return (a + b - 1) / b; }

}  // namespace

std::string to_string(ActorKind k) {
  switch (k) {
    case ActorKind::Source: return "source";
    case ActorKind::Sink: return "sink";
    case ActorKind::Ppe: return "ppe";
    case ActorKind::Gpe: return "gpe";
    case ActorKind::Fork: return "fork";
    case ActorKind::Join: return "join";
    case ActorKind::WidthAdapter: return "width_adapter";
  }
  return "?";
}

std::string to_string(OpCode op) {
  switch (op) {
    case OpCode::None: return "none";
    case OpCode::DenseLayer: return "dense";
    case OpCode::CoordTransform: return "coord_transform";
    case OpCode::FeatTransform: return "feat_transform";
    case OpCode::AllPairsDist: return "all_pairs_dist";
    case OpCode::TopKSelect: return "topk_select";
    case OpCode::ExpWeight: return "exp_weight";
    case OpCode::GatherMult: return "gather_mult";
    case OpCode::MaxReduce: return "max_reduce";
    case OpCode::SumReduce: return "sum_reduce";
    case OpCode::MeanReduce: return "mean_reduce";
    case OpCode::BetaCoord: return "beta_coord";
    case OpCode::IsolationCalc: return "isolation";
    case OpCode::PrioritySort: return "priority_sort";
    case OpCode::ClusterSelect: return "cluster_select";
  }
  return "?";
}

int DataflowGraph::add_actor(Actor a) {
  a.id = static_cast<int>(actors.size());
  actors.push_back(std::move(a));
  return actors.back().id;
}

int DataflowGraph::connect(int from, int to, const std::string& label, int capacity) {
  Edge e;
  e.id = static_cast<int>(edges.size());
  e.from = from;
  e.to = to;
  e.capacity = capacity;
  e.label = label;
  edges.push_back(e);
  actors[from].out_edges.push_back(e.id);
  actors[to].in_edges.push_back(e.id);
  return e.id;
}

std::vector<int> DataflowGraph::topo_order() const {
  std::vector<int> indeg(actors.size(), 0);
  for (const auto& e : edges) ++indeg[e.to];
  std::vector<int> order;
  order.reserve(actors.size());
  std::deque<int> ready;
  for (std::size_t i = 0; i < actors.size(); ++i) {
    if (indeg[i] == 0) ready.push_back(static_cast<int>(i));
  }
  while (!ready.empty()) {
    const int u = ready.front();
    ready.pop_front();
    order.push_back(u);
    for (int eid : actors[u].out_edges) {
      if (--indeg[edges[eid].to] == 0) ready.push_back(edges[eid].to);
    }
  }
  if (order.size() != actors.size()) throw ConfigError("dataflow: graph contains a cycle");
  return order;
}

int DepthTable::dense(int out_dim) const { return dense_base + ceil_log2(out_dim); }
int DepthTable::topk(int n_bar, int k) const {
  return ceil_log2(n_bar) * ceil_log2(k) * topk_per_stage + k;
}
int DepthTable::sort(int n_bar, int ii) const {
  const int stages = ceil_log2(n_bar) * (ceil_log2(n_bar) + 1) / 2;
  return ii + stages + sort_extra;
}
int DepthTable::reduce(int k) const { return ceil_log2(k) + reduce_base; }

namespace {

struct Builder {
  DataflowGraph g;
  const golden::NetworkConfig& cfg;
  const DepthTable& dt;

  Builder(const golden::NetworkConfig& c, const DepthTable& d) : cfg(c), dt(d) {}

  Actor base(const std::string& name, ActorKind kind, OpCode op, int depth, bool buffered,
             const std::string& group = {}, int layer = -1) const {
    Actor a;
    a.name = name;
    a.kind = kind;
    a.op = op;
    a.group = group;
    a.par = g.par;
    a.n_bar = g.n_bar;
    a.ii = g.ii;
    a.depth = depth;
    a.buffered = buffered;
    a.layer_index = layer;
    return a;
  }
};

}  // namespace

DataflowGraph map_network(std::shared_ptr<const golden::NetworkModel> model, int n_bar, int par,
                          double f_kernel, const DepthTable& dt) {
  const golden::NetworkConfig& cfg = model->cfg;
  cfg.check();
  if (n_bar < 1) throw ConfigError("map: n_bar >= 1 required");
  if (par < 1 || par > n_bar) throw ConfigError("map: require 1 <= par <= n_bar");
  if (f_kernel <= 0.0) throw ConfigError("map: f_kernel must be positive");

  Builder b(cfg, dt);
  b.g.n_bar = n_bar;
  b.g.par = par;
  b.g.ii = ceil_div(n_bar, par);
  b.g.f_kernel = f_kernel;
  b.g.model = std::move(model);
  DataflowGraph& g = b.g;
  const int ii = g.ii;

  g.source_id = g.add_actor(b.base("source", ActorKind::Source, OpCode::None, 0, false));
  int tail = g.source_id;  // actor whose output feeds the next stage

  int gravnet_count = 0;
  for (std::size_t li = 0; li < cfg.layers.size(); ++li) {
    const auto& l = cfg.layers[li];
    const std::string ln = "l" + std::to_string(li);
    if (l.kind == golden::LayerSpec::Kind::Custom) {
      throw ConfigError("map: no processing element template for layer kind '" + l.custom_name +
                        "' (layer " + std::to_string(li) + ")");
    }
    if (l.kind == golden::LayerSpec::Kind::Dense) {
      const int a = g.add_actor(b.base(ln + "_dense", ActorKind::Ppe, OpCode::DenseLayer,
                                       dt.dense(l.out_dim), false, {}, static_cast<int>(li)));
      g.connect(tail, a, ln + "_in");
      tail = a;
      continue;
    }

    // GravNet convolution processing element
    const std::string grp = ln + "_gravnet";
    ++gravnet_count;
    const int fork_in = g.add_actor(b.base(grp + "/fork", ActorKind::Fork, OpCode::None,
                                           dt.topology, false, grp, static_cast<int>(li)));
    const int scoord = g.add_actor(b.base(grp + "/coord", ActorKind::Gpe, OpCode::CoordTransform,
                                          dt.dense(l.s_dim), false, grp, static_cast<int>(li)));
    const int ffeat = g.add_actor(b.base(grp + "/feat", ActorKind::Gpe, OpCode::FeatTransform,
                                         dt.dense(l.f_dim), false, grp, static_cast<int>(li)));
    Actor ann_a = b.base(grp + "/ann", ActorKind::Gpe, OpCode::AllPairsDist, ii + dt.ann_extra,
                         true, grp, static_cast<int>(li));
    ann_a.col_begin = 0;
    ann_a.col_end = l.s_dim;
    const int ann = g.add_actor(ann_a);
    const int topk = g.add_actor(b.base(grp + "/topk", ActorKind::Gpe, OpCode::TopKSelect,
                                        dt.topk(n_bar, l.k), false, grp, static_cast<int>(li)));
    const int expw = g.add_actor(b.base(grp + "/exp", ActorKind::Gpe, OpCode::ExpWeight,
                                        dt.exp_lookup, false, grp, static_cast<int>(li)));
    const int mult = g.add_actor(b.base(grp + "/mult", ActorKind::Gpe, OpCode::GatherMult,
                                        ii + dt.gather_extra, true, grp, static_cast<int>(li)));

    g.connect(tail, fork_in, ln + "_in");
    g.connect(fork_in, scoord, grp + "/x_s");
    g.connect(fork_in, ffeat, grp + "/x_f");
    g.connect(scoord, ann, grp + "/s");
    g.connect(ann, topk, grp + "/d2_full");
    g.connect(topk, expw, grp + "/d2_knn");
    g.connect(topk, mult, grp + "/idx");
    g.connect(expw, mult, grp + "/w");
    g.connect(ffeat, mult, grp + "/f");

    if (l.aggregations.size() == 1) {
      const OpCode oc = l.aggregations[0] == golden::Aggregation::Max  ? OpCode::MaxReduce
                        : l.aggregations[0] == golden::Aggregation::Sum ? OpCode::SumReduce
                                                                        : OpCode::MeanReduce;
      const int red = g.add_actor(b.base(grp + "/reduce", ActorKind::Gpe, oc, dt.reduce(l.k),
                                         false, grp, static_cast<int>(li)));
      g.connect(mult, red, grp + "/contrib");
      tail = red;
    } else {
      const int fork_r = g.add_actor(b.base(grp + "/fork_reduce", ActorKind::Fork, OpCode::None,
                                            dt.topology, false, grp, static_cast<int>(li)));
      const int join_r = g.add_actor(b.base(grp + "/join_reduce", ActorKind::Join, OpCode::None,
                                            dt.topology, false, grp, static_cast<int>(li)));
      g.connect(mult, fork_r, grp + "/contrib");
      int agg_idx = 0;
      for (const auto agg : l.aggregations) {
        const OpCode oc = agg == golden::Aggregation::Max  ? OpCode::MaxReduce
                          : agg == golden::Aggregation::Sum ? OpCode::SumReduce
                                                            : OpCode::MeanReduce;
        const int red =
            g.add_actor(b.base(grp + "/reduce" + std::to_string(agg_idx), ActorKind::Gpe, oc,
                               dt.reduce(l.k), false, grp, static_cast<int>(li)));
        g.connect(fork_r, red, grp + "/contrib" + std::to_string(agg_idx));
        g.connect(red, join_r, grp + "/agg" + std::to_string(agg_idx));
        ++agg_idx;
      }
      tail = join_r;
    }
  }

  // Condensation point selection processing element
  {
    const auto& cp = cfg.condensation;
    const std::string grp = "condense";
    const int fork_in =
        g.add_actor(b.base(grp + "/fork", ActorKind::Fork, OpCode::None, dt.topology, false, grp));
    const int betac = g.add_actor(
        b.base(grp + "/beta_coord", ActorKind::Gpe, OpCode::BetaCoord, dt.beta_coord, false, grp));
    const int fork_b = g.add_actor(
        b.base(grp + "/fork_beta", ActorKind::Fork, OpCode::None, dt.topology, false, grp));
    Actor ann_a = b.base(grp + "/ann", ActorKind::Gpe, OpCode::AllPairsDist, ii + dt.ann_extra,
                         true, grp);
    ann_a.col_begin = 1;  // rows are [beta, coords...]
    ann_a.col_end = 1 + cp.cluster_dims;
    const int ann = g.add_actor(ann_a);
    const int iso = g.add_actor(b.base(grp + "/isolation", ActorKind::Gpe, OpCode::IsolationCalc,
                                       ii + dt.isolation_extra, true, grp));
    const int sortp = g.add_actor(b.base(grp + "/sort", ActorKind::Gpe, OpCode::PrioritySort,
                                         dt.sort(n_bar, ii), true, grp));
    const int select = g.add_actor(b.base(grp + "/select", ActorKind::Gpe, OpCode::ClusterSelect,
                                          ii + dt.select_extra, true, grp));
    const int join_out =
        g.add_actor(b.base(grp + "/join_out", ActorKind::Join, OpCode::None, dt.topology, false, grp));

    g.connect(tail, fork_in, "head");
    g.connect(fork_in, join_out, grp + "/payload");  // join input 0: head payload
    g.connect(fork_in, betac, grp + "/head");
    g.connect(betac, fork_b, grp + "/bc");
    g.connect(fork_b, ann, grp + "/coords");
    g.connect(fork_b, iso, grp + "/bc_pass");
    g.connect(ann, iso, grp + "/d2_full");
    g.connect(iso, sortp, grp + "/rho");
    g.connect(sortp, select, grp + "/sorted");
    g.connect(select, join_out, grp + "/meta");  // join input 1: [beta, flag, id]
    tail = join_out;
  }

  g.sink_id = g.add_actor(b.base("sink", ActorKind::Sink, OpCode::None, 0, false));
  g.connect(tail, g.sink_id, "out");

  // Size FIFOs for stall-free steady flow.
  const auto req = required_capacities(g);
  for (auto& e : g.edges) e.capacity = std::max(2, req[e.id]);
  return g;
}

DataflowGraph map_network(const golden::NetworkConfig& cfg, int n_bar, int par, double f_kernel,
                          const DepthTable& dt) {
  auto model = std::make_shared<golden::NetworkModel>(golden::build_network(cfg));
  return map_network(std::move(model), n_bar, par, f_kernel, dt);
}

std::vector<int> required_capacities(const DataflowGraph& g) {
  const auto order = g.topo_order();
  // completion[a]: cycle offset at which a's first output beat appears,
  // relative to the source's first emission
  std::vector<long> completion(g.actors.size(), 0);
  for (int id : order) {
    long arrive = 0;
    for (int eid : g.actors[id].in_edges) arrive = std::max(arrive, completion[g.edges[eid].from]);
    completion[id] = arrive + g.actors[id].depth;
  }
  std::vector<int> req(g.edges.size(), 1);
  for (const auto& a : g.actors) {
    if (a.in_edges.size() < 2) continue;
    long latest = 0;
    for (int eid : a.in_edges) latest = std::max(latest, completion[g.edges[eid].from]);
    for (int eid : a.in_edges) {
      const long skew = latest - completion[g.edges[eid].from];
      req[eid] = static_cast<int>(skew) + 1;
    }
  }
  return req;
}

std::vector<Violation> validate(const DataflowGraph& g) {
  std::vector<Violation> out;
  auto add = [&](std::string code, std::string msg, int actor = -1, int edge = -1) {
    out.push_back({std::move(code), std::move(msg), actor, edge});
  };

  try {
    (void)g.topo_order();
  } catch (const ConfigError&) {
    add("cycle", "graph is not a DAG");
    return out;
  }

  int sources = 0, sinks = 0;
  for (const auto& a : g.actors) {
    if (a.kind == ActorKind::Source) ++sources;
    if (a.kind == ActorKind::Sink) ++sinks;
  }
  if (sources != 1) add("structure", "expected exactly one source actor");
  if (sinks != 1) add("structure", "expected exactly one sink actor");

  int common_ii = -1;
  for (const auto& a : g.actors) {
    if (common_ii == -1) common_ii = a.ii;
    if (a.ii != common_ii) {
      add("ii_mismatch",
          "initiation interval mismatch: actor '" + a.name + "' has ii=" + std::to_string(a.ii) +
              ", expected " + std::to_string(common_ii),
          a.id);
    }
    if (a.kind == ActorKind::Ppe && (a.in_edges.size() != 1 || a.out_edges.size() != 1)) {
      add("ppe_arity", "ppe actor '" + a.name + "' must have exactly one input and one output",
          a.id);
    }
    if (a.par < 1 || a.par > a.n_bar) {
      add("par_bounds", "actor '" + a.name + "' violates 1 <= par <= n_bar", a.id);
    }
    if ((a.kind == ActorKind::Ppe || a.kind == ActorKind::Gpe) && a.par >= 1 &&
        a.ii != ceil_div(a.n_bar, a.par)) {
      add("ii_contract",
          "actor '" + a.name + "' ii != ceil(n_bar/par): " + std::to_string(a.ii) + " vs " +
              std::to_string(ceil_div(a.n_bar, a.par)),
          a.id);
    }
    if (a.buffered && a.depth < a.ii) {
      add("depth_contract",
          "whole-event actor '" + a.name + "' needs depth >= ii to hold an event", a.id);
    }
    if (a.kind != ActorKind::Source && a.kind != ActorKind::Sink && a.depth < 1) {
      add("depth_contract", "actor '" + a.name + "' needs depth >= 1", a.id);
    }
  }

  for (const auto& e : g.edges) {
    const auto& u = g.actors[e.from];
    const auto& v = g.actors[e.to];
    if (u.par != v.par || u.n_bar != v.n_bar) {
      add("rate_mismatch",
          "edge '" + e.label + "' endpoints disagree on tokens per event", -1, e.id);
    }
    if (e.capacity < 1) add("fifo_capacity", "edge '" + e.label + "' has zero capacity", -1, e.id);
  }

  if (out.empty()) {
    const auto req = required_capacities(g);
    for (const auto& e : g.edges) {
      if (e.capacity < req[e.id]) {
        add("fifo_capacity",
            "insufficient FIFO capacity on edge '" + e.label + "': " +
                std::to_string(e.capacity) + " < required " + std::to_string(req[e.id]),
            -1, e.id);
      }
    }
  }
  return out;
}

PerfEstimate analytic_perf(const DataflowGraph& g) {
  const auto violations = validate(g);
  if (!violations.empty()) {
    throw ConfigError("analytic_perf: graph failed validation: " + violations.front().message);
  }
  const auto order = g.topo_order();
  std::vector<long> completion(g.actors.size(), 0);
  for (int id : order) {
    long arrive = 0;
    for (int eid : g.actors[id].in_edges) arrive = std::max(arrive, completion[g.edges[eid].from]);
    completion[id] = arrive + g.actors[id].depth;
  }
  PerfEstimate pe;
  pe.ii_cycles = g.ii;
  pe.latency_cycles = static_cast<int>(completion[g.sink_id]) + g.ii - 1;
  pe.throughput_eps = g.f_kernel / static_cast<double>(pe.ii_cycles);
  pe.latency_seconds = static_cast<double>(pe.latency_cycles) / g.f_kernel;
  pe.meets_throughput_req = pe.throughput_eps >= kRequiredThroughputEps;
  pe.meets_latency_req = pe.latency_seconds <= kRequiredLatencySeconds;
  return pe;
}

std::string to_json(const DataflowGraph& g) {
  nlohmann::json j;
  j["n_bar"] = g.n_bar;
  j["par"] = g.par;
  j["ii"] = g.ii;
  j["f_kernel"] = g.f_kernel;
  j["actors"] = nlohmann::json::array();
  for (const auto& a : g.actors) {
    nlohmann::json ja;
    ja["id"] = a.id;
    ja["name"] = a.name;
    ja["kind"] = to_string(a.kind);
    ja["op"] = to_string(a.op);
    ja["group"] = a.group;
    ja["par"] = a.par;
    ja["ii"] = a.ii;
    ja["depth"] = a.depth;
    ja["buffered"] = a.buffered;
    j["actors"].push_back(std::move(ja));
  }
  j["edges"] = nlohmann::json::array();
  for (const auto& e : g.edges) {
    j["edges"].push_back({{"id", e.id},
                          {"from", e.from},
                          {"to", e.to},
                          {"capacity", e.capacity},
                          {"label", e.label}});
  }
  return j.dump(2);
}

std::string to_dot(const DataflowGraph& g) {
  std::ostringstream os;
  os << "digraph dataflow {\n  rankdir=LR;\n";
  for (const auto& a : g.actors) {
    os << "  a" << a.id << " [label=\"" << a.name << "\\nii=" << a.ii << " d=" << a.depth
       << "\", shape=" << (a.kind == ActorKind::Fork || a.kind == ActorKind::Join ? "diamond" : "box")
       << "];\n";
  }
  for (const auto& e : g.edges) {
    os << "  a" << e.from << " -> a" << e.to << " [label=\"cap=" << e.capacity << "\"];\n";
  }
  os << "}\n";
  return os.str();
}

std::string to_text(const DataflowGraph& g) {
  std::ostringstream os;
  os << "dataflow graph: n_bar=" << g.n_bar << " par=" << g.par << " ii=" << g.ii
     << " f_kernel=" << g.f_kernel << "\n";
  for (const auto& a : g.actors) {
    os << "  [" << a.id << "] " << a.name << " kind=" << to_string(a.kind)
       << " op=" << to_string(a.op) << " depth=" << a.depth << (a.buffered ? " buffered" : "")
       << "\n";
  }
  for (const auto& e : g.edges) {
    os << "  " << g.actors[e.from].name << " -> " << g.actors[e.to].name << " cap=" << e.capacity
       << " (" << e.label << ")\n";
  }
  return os.str();
}

}  // namespace pcnflow::dataflow
