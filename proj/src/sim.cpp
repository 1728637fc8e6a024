#include "pcnflow/sim.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <memory>
#include <numeric>
#include <sstream>

namespace pcnflow::sim {

using dataflow::ActorKind;
using dataflow::OpCode;

namespace {

struct Beat {
  long event_id = -1;
  int beat_idx = 0;
  int n = 0;
  std::shared_ptr<const Mat> data;
};

// A slot moving through an actor's rigid delay line; payload is resolved at
// emission time from the actor's per-event slab.
struct Slot {
  bool valid = false;
  long event_id = -1;
  int beat_idx = 0;
  int n = 0;
};

struct Fifo {
  std::deque<Beat> q;
  int capacity = 2;

  bool full() const { return static_cast<int>(q.size()) >= capacity; }
  bool empty() const { return q.empty(); }
};

// Per-event working storage of one actor.
struct Slab {
  std::vector<std::shared_ptr<const Mat>> in;   // one per in edge
  std::vector<std::shared_ptr<const Mat>> out;  // one per out edge (emission view)
  std::vector<std::shared_ptr<Mat>> work;       // mutable backing for own outputs
  int beats_consumed = 0;
  bool computed = false;  // whole-event outputs ready (buffered actors)
};

// Resolved kernel context per actor, fixed at engine construction.
struct ActorAux {
  const golden::DenseParams* dense = nullptr;
  golden::DenseParams synth;  // coordinate/feature transform of a gravnet layer
  bool use_synth = false;
  const golden::GravNetParams* grav = nullptr;
  const fix::ExpLut* lut = nullptr;
  fix::FixFormat in_fmt{};
  fix::FixFormat fmt{};
  double t_beta_eff = 0.0;
  double t_dist_eff = 0.0;
};

struct ActorState {
  const dataflow::Actor* def = nullptr;
  ActorAux aux;
  std::deque<Slot> line;
  std::map<long, Slab> slabs;
  int cur_event_beats = 0;  // beats of the in-progress event consumed so far
  ActorStalls stalls;
};

Mat cols_slice(const Mat& m, int c0, int c1, int n) {
  Mat out(m.rows(), c1 - c0);
  for (int r = 0; r < n; ++r) {
    for (int c = c0; c < c1; ++c) out(r, c - c0) = m(r, c);
  }
  return out;
}

class Engine {
 public:
  Engine(const dataflow::DataflowGraph& g, const SimConfig& cfg)
      : g_(g), cfg_(cfg), model_(g.model.get()) {
    if (model_ == nullptr) throw ConfigError("simulate: graph carries no network model");
    fixed_ = model_->cfg.fixed();
    states_.resize(g.actors.size());
    for (std::size_t i = 0; i < g.actors.size(); ++i) {
      ActorState& st = states_[i];
      st.def = &g.actors[i];
      st.stalls.actor_id = static_cast<int>(i);
      st.stalls.name = g.actors[i].name;
      if (st.def->kind != ActorKind::Source && st.def->kind != ActorKind::Sink) {
        st.line.assign(static_cast<std::size_t>(std::max(1, st.def->depth)), Slot{});
      }
      init_aux(st);
    }
    fifos_.resize(g.edges.size());
    for (std::size_t e = 0; e < g.edges.size(); ++e) {
      fifos_[e].capacity = g.edges[e].capacity;
      if (auto it = cfg.fifo_capacity_override.find(static_cast<int>(e));
          it != cfg.fifo_capacity_override.end()) {
        fifos_[e].capacity = it->second;
      }
    }
    topo_ = g.topo_order();
  }

  SimReport run(const std::vector<events::CompactEvent>& evs);

 private:
  void init_aux(ActorState& st);
  void step_source(ActorState& st, long cycle);
  void step_sink(ActorState& st, long cycle);
  void step_pipeline(ActorState& st);

  bool inputs_ready(const ActorState& st) const;
  void consume(ActorState& st);
  void emit(ActorState& st, const Slot& slot);
  void process_beat(ActorState& st, Slab& slab, const Beat& beat);
  void compute_event(ActorState& st, Slab& slab, int n);
  void gc(long oldest_alive);

  const dataflow::DataflowGraph& g_;
  const SimConfig& cfg_;
  const golden::NetworkModel* model_;
  bool fixed_ = false;
  std::vector<ActorState> states_;
  std::vector<Fifo> fifos_;
  std::vector<int> topo_;

  const std::vector<events::CompactEvent>* events_ = nullptr;
  long src_event_ = 0;
  int src_beat_ = 0;
  std::map<long, std::shared_ptr<Mat>> src_mats_;
  long completed_ = 0;
  std::vector<EventTrace> traces_;
  std::vector<golden::InferenceResult> outputs_;
  std::vector<long> completion_order_;
};

void Engine::init_aux(ActorState& st) {
  const auto& a = *st.def;
  ActorAux& x = st.aux;
  const auto& cfg = model_->cfg;
  const int li = a.layer_index;
  const int pi = li >= 0 ? model_->param_index[li] : -1;

  switch (a.op) {
    case OpCode::DenseLayer:
      x.dense = &model_->dense[pi];
      x.in_fmt = model_->in_fmts[li];
      x.fmt = x.dense->fmt;
      break;
    case OpCode::CoordTransform:
    case OpCode::FeatTransform: {
      x.grav = &model_->gravnet[pi];
      const bool coord = a.op == OpCode::CoordTransform;
      x.synth.weights = coord ? x.grav->w_s : x.grav->w_f;
      x.synth.bias = coord ? x.grav->b_s : x.grav->b_f;
      x.synth.activation = golden::Activation::None;
      x.synth.fmt = x.grav->fmt;
      x.use_synth = true;
      x.in_fmt = model_->in_fmts[li];
      x.fmt = x.grav->fmt;
      break;
    }
    case OpCode::AllPairsDist:
      if (li >= 0) {
        x.grav = &model_->gravnet[pi];
        x.fmt = x.grav->fmt;
      } else {
        x.fmt = model_->head_format();
      }
      break;
    case OpCode::TopKSelect:
    case OpCode::GatherMult:
    case OpCode::MaxReduce:
    case OpCode::SumReduce:
    case OpCode::MeanReduce:
      x.grav = &model_->gravnet[pi];
      x.fmt = x.grav->fmt;
      break;
    case OpCode::ExpWeight:
      x.grav = &model_->gravnet[pi];
      x.fmt = x.grav->fmt;
      x.lut = fixed_ ? &model_->luts[model_->gravnet_lut_index[li]] : nullptr;
      break;
    case OpCode::BetaCoord:
      x.fmt = model_->head_format();
      break;
    case OpCode::ClusterSelect:
      x.fmt = model_->head_format();
      x.t_beta_eff = golden::resolve_threshold(cfg.condensation.t_beta, fixed_, x.fmt);
      x.t_dist_eff = golden::resolve_threshold(cfg.condensation.t_dist, fixed_, x.fmt);
      break;
    default:
      break;
  }
}

bool Engine::inputs_ready(const ActorState& st) const {
  for (int eid : st.def->in_edges) {
    if (fifos_[eid].empty()) return false;
  }
  return true;
}

void Engine::emit(ActorState& st, const Slot& slot) {
  Slab& slab = st.slabs[slot.event_id];
  const auto& outs = st.def->out_edges;
  for (std::size_t i = 0; i < outs.size(); ++i) {
    Beat b;
    b.event_id = slot.event_id;
    b.beat_idx = slot.beat_idx;
    b.n = slot.n;
    b.data = slab.out[i];
    fifos_[outs[i]].q.push_back(std::move(b));
  }
}

void Engine::step_source(ActorState& st, long cycle) {
  if (src_event_ >= static_cast<long>(events_->size())) return;
  for (int eid : st.def->out_edges) {
    if (fifos_[eid].full()) {
      ++st.stalls.output_blocked;
      return;
    }
  }
  const auto& ev = (*events_)[src_event_];
  if (src_beat_ == 0) {
    traces_[src_event_].event_id = src_event_;
    traces_[src_event_].n = ev.n;
    traces_[src_event_].t_first_in = cycle;
    src_mats_[src_event_] = std::make_shared<Mat>(ev.feature_mat());
  }
  Beat b;
  b.event_id = src_event_;
  b.beat_idx = src_beat_;
  b.n = ev.n;
  b.data = src_mats_[src_event_];
  for (int eid : st.def->out_edges) fifos_[eid].q.push_back(b);
  if (src_beat_ == g_.ii - 1) {
    traces_[src_event_].t_last_in = cycle;
    ++src_event_;
    src_beat_ = 0;
  } else {
    ++src_beat_;
  }
}

void Engine::step_sink(ActorState& st, long cycle) {
  if (!inputs_ready(st)) return;
  Beat beat;
  for (int eid : st.def->in_edges) {
    beat = fifos_[eid].q.front();
    fifos_[eid].q.pop_front();
  }
  EventTrace& tr = traces_[beat.event_id];
  if (beat.beat_idx == 0) tr.t_first_out = cycle;
  if (beat.beat_idx != g_.ii - 1) return;
  tr.t_last_out = cycle;
  completion_order_.push_back(beat.event_id);
  ++completed_;
  if (!cfg_.record_outputs) return;

  // final rows: [payload(d_o) | beta | is_cp | cluster_id]
  const Mat& m = *beat.data;
  const auto& cfg = model_->cfg;
  const int d_o = cfg.output_dim();
  golden::InferenceResult res;
  res.n = beat.n;
  res.outputs = Mat(g_.n_bar, d_o);
  res.coords = Mat(g_.n_bar, cfg.condensation.cluster_dims);
  res.beta.assign(g_.n_bar, 0.0);
  res.is_cp.assign(g_.n_bar, 0);
  res.cluster_id.assign(g_.n_bar, -1);
  int cp_count = 0;
  for (int r = 0; r < g_.n_bar; ++r) {
    for (int c = 0; c < d_o; ++c) res.outputs(r, c) = m(r, c);
    res.beta[r] = m(r, d_o);
    res.is_cp[r] = m(r, d_o + 1) != 0.0 ? 1 : 0;
    res.cluster_id[r] = static_cast<std::int32_t>(m(r, d_o + 2));
    if (r < beat.n) {
      for (int c = 0; c < cfg.condensation.cluster_dims; ++c) {
        res.coords(r, c) = m(r, cfg.head.coord_indices[c]);
      }
      if (res.is_cp[r]) ++cp_count;
    }
  }
  res.cp_list.assign(cp_count, -1);
  for (int r = 0; r < beat.n; ++r) {
    if (res.is_cp[r]) res.cp_list[res.cluster_id[r]] = r;
  }
  outputs_.push_back(std::move(res));
}

void Engine::process_beat(ActorState& st, Slab& slab, const Beat& beat) {
  const auto& a = *st.def;
  const ActorAux& x = st.aux;
  const int n_bar = g_.n_bar;
  const int par = g_.par;
  const int r0 = beat.beat_idx * par;
  const int r1 = std::min(r0 + par, n_bar);
  const int n = beat.n;

  auto alloc = [&](std::size_t port, int cols) -> Mat& {
    if (!slab.work[port]) {
      slab.work[port] = std::make_shared<Mat>(n_bar, cols);
      slab.out[port] = slab.work[port];
    }
    return *slab.work[port];
  };

  switch (a.op) {
    case OpCode::DenseLayer: {
      Mat& out = alloc(0, x.dense->weights.cols());
      golden::dense_rows(*slab.in[0], out, r0, r1, n, *x.dense, fixed_, x.in_fmt);
      return;
    }
    case OpCode::CoordTransform:
    case OpCode::FeatTransform: {
      Mat& out = alloc(0, x.synth.weights.cols());
      golden::dense_rows(*slab.in[0], out, r0, r1, n, x.synth, fixed_, x.in_fmt);
      return;
    }
    case OpCode::TopKSelect: {
      Mat& d2 = alloc(0, x.grav->k);
      Mat& idx = alloc(1, x.grav->k);
      golden::topk_rows(*slab.in[0], idx, d2, r0, r1, n, x.grav->k);
      return;
    }
    case OpCode::ExpWeight: {
      Mat& out = alloc(0, x.grav->k);
      golden::exp_weight_rows(*slab.in[0], out, r0, r1, n, x.grav->exp_cfg.scale_alpha, x.lut);
      return;
    }
    case OpCode::MaxReduce:
    case OpCode::SumReduce:
    case OpCode::MeanReduce: {
      const auto agg = a.op == OpCode::MaxReduce   ? golden::Aggregation::Max
                       : a.op == OpCode::SumReduce ? golden::Aggregation::Sum
                                                   : golden::Aggregation::Mean;
      const int f_dim = x.grav->f_dim();
      Mat& out = alloc(0, f_dim);
      golden::reduce_rows(*slab.in[0], out, 0, r0, r1, n, x.grav->k, f_dim, agg, fixed_, x.fmt);
      return;
    }
    case OpCode::BetaCoord: {
      const auto& head = model_->cfg.head;
      const int c = static_cast<int>(head.coord_indices.size());
      Mat& out = alloc(0, 1 + c);
      const Mat& in = *slab.in[0];
      for (int r = r0; r < std::min(r1, n); ++r) {
        out(r, 0) = golden::beta_from_head(in(r, head.beta_index), fixed_, x.fmt);
        for (int ci = 0; ci < c; ++ci) out(r, 1 + ci) = in(r, head.coord_indices[ci]);
      }
      return;
    }
    case OpCode::None: {
      if (a.kind == ActorKind::Join) {
        int width = 0;
        for (const auto& im : slab.in) width += im->cols();
        Mat& out = alloc(0, width);
        int col = 0;
        for (const auto& im : slab.in) {
          for (int r = r0; r < r1; ++r) {
            for (int c = 0; c < im->cols(); ++c) out(r, col + c) = (*im)(r, c);
          }
          col += im->cols();
        }
        return;
      }
      // forks, width adapters and plain actors pass their input through
      for (std::size_t p = 0; p < slab.out.size(); ++p) slab.out[p] = slab.in[0];
      return;
    }
    // whole-event operators compute in compute_event once the event is in
    case OpCode::AllPairsDist:
    case OpCode::GatherMult:
    case OpCode::IsolationCalc:
    case OpCode::PrioritySort:
    case OpCode::ClusterSelect:
      return;
    default:
      return;
  }
}

void Engine::compute_event(ActorState& st, Slab& slab, int n) {
  const auto& a = *st.def;
  const ActorAux& x = st.aux;
  const int n_bar = g_.n_bar;

  auto publish = [&](std::size_t port, Mat&& m) {
    slab.work[port] = std::make_shared<Mat>(std::move(m));
    slab.out[port] = slab.work[port];
  };

  switch (a.op) {
    case OpCode::AllPairsDist: {
      const Mat& in = *slab.in[0];
      const int c0 = a.col_begin;
      const int c1 = a.col_end < 0 ? in.cols() : a.col_end;
      if (c0 == 0 && c1 == in.cols()) {
        publish(0, golden::all_pairs_sq_dists(in, n, fixed_, x.fmt));
      } else {
        publish(0, golden::all_pairs_sq_dists(cols_slice(in, c0, c1, n), n, fixed_, x.fmt));
      }
      return;
    }
    case OpCode::GatherMult: {
      // in: [idx, w, f]
      publish(0, golden::gather_mult_rows(*slab.in[1], *slab.in[0], *slab.in[2], n, fixed_, x.fmt));
      return;
    }
    case OpCode::IsolationCalc: {
      // in: [beta+coords rows, full d2 rows]
      const Mat& bc = *slab.in[0];
      const Mat& d2 = *slab.in[1];
      std::vector<double> beta(n);
      for (int i = 0; i < n; ++i) beta[i] = bc(i, 0);
      const auto rho = golden::isolation_from_dists(beta, d2, n);
      Mat out(n_bar, bc.cols() + 1);
      for (int i = 0; i < n; ++i) {
        for (int c = 0; c < bc.cols(); ++c) out(i, c) = bc(i, c);
        out(i, bc.cols()) = rho[i];
      }
      publish(0, std::move(out));
      return;
    }
    case OpCode::PrioritySort: {
      // rows ordered by descending priority (ties: ascending index),
      // original index prepended
      const Mat& in = *slab.in[0];
      std::vector<int> order(n);
      std::iota(order.begin(), order.end(), 0);
      std::sort(order.begin(), order.end(), [&](int p, int q) {
        if (in(p, 0) != in(q, 0)) return in(p, 0) > in(q, 0);
        return p < q;
      });
      Mat out(n_bar, 1 + in.cols());
      for (int r = 0; r < n_bar; ++r) out(r, 0) = -1.0;
      for (int r = 0; r < n; ++r) {
        out(r, 0) = order[r];
        for (int c = 0; c < in.cols(); ++c) out(r, 1 + c) = in(order[r], c);
      }
      publish(0, std::move(out));
      return;
    }
    case OpCode::ClusterSelect: {
      // in: sorted [orig_idx, beta, coords..., rho]
      const auto& cp = model_->cfg.condensation;
      const Mat& in = *slab.in[0];
      Mat out(n_bar, 3);
      for (int r = 0; r < n_bar; ++r) out(r, 2) = -1.0;
      if (n >= 1) {
        std::vector<double> beta(n, 0.0);
        Mat coords(n, cp.cluster_dims);
        for (int r = 0; r < n; ++r) {
          const int i = static_cast<int>(in(r, 0));
          if (i < 0 || i >= n) throw DataError("simulate: corrupt sort order");
          beta[i] = in(r, 1);
          for (int c = 0; c < cp.cluster_dims; ++c) coords(i, c) = in(r, 2 + c);
        }
        const auto cr = golden::condense(beta, coords, cp, n, x.t_beta_eff, x.t_dist_eff);
        for (int i = 0; i < n; ++i) {
          out(i, 0) = beta[i];
          out(i, 1) = cr.is_cp[i];
          out(i, 2) = cr.cluster_id[i];
        }
      }
      publish(0, std::move(out));
      return;
    }
    default:
      throw ConfigError("simulate: actor '" + a.name + "' marked buffered but has no event kernel");
  }
}

void Engine::consume(ActorState& st) {
  if (!inputs_ready(st)) {
    if (st.cur_event_beats > 0) ++st.stalls.input_starved;
    st.line.push_front(Slot{});
    return;
  }
  std::vector<Beat> beats;
  beats.reserve(st.def->in_edges.size());
  for (int eid : st.def->in_edges) {
    beats.push_back(fifos_[eid].q.front());
    fifos_[eid].q.pop_front();
  }
  const Beat& first = beats.front();
  for (const auto& b : beats) {
    if (b.event_id != first.event_id || b.beat_idx != first.beat_idx) {
      throw DataError("simulate: desynchronized beats at actor '" + st.def->name + "'");
    }
  }
  Slab& slab = st.slabs[first.event_id];
  if (slab.in.empty()) {
    slab.in.resize(st.def->in_edges.size());
    slab.out.resize(st.def->out_edges.size());
    slab.work.resize(st.def->out_edges.size());
  }
  for (std::size_t i = 0; i < beats.size(); ++i) slab.in[i] = beats[i].data;
  process_beat(st, slab, first);
  ++slab.beats_consumed;
  st.cur_event_beats = (first.beat_idx == g_.ii - 1) ? 0 : st.cur_event_beats + 1;
  if (st.def->buffered) {
    if (slab.beats_consumed == g_.ii) {
      compute_event(st, slab, first.n);
      slab.computed = true;
    }
  } else {
    slab.computed = true;
  }
  Slot s;
  s.valid = true;
  s.event_id = first.event_id;
  s.beat_idx = first.beat_idx;
  s.n = first.n;
  st.line.push_front(s);
}

void Engine::step_pipeline(ActorState& st) {
  const Slot head = st.line.back();
  if (head.valid) {
    for (int eid : st.def->out_edges) {
      if (fifos_[eid].full()) {
        ++st.stalls.output_blocked;
        return;  // rigid line freezes
      }
    }
    const Slab& slab = st.slabs.at(head.event_id);
    if (!slab.computed) {
      ++st.stalls.data_wait;
      return;
    }
    emit(st, head);
  }
  st.line.pop_back();
  consume(st);
}

void Engine::gc(long oldest_alive) {
  if (oldest_alive <= 0) return;
  for (auto& st : states_) {
    while (!st.slabs.empty() && st.slabs.begin()->first < oldest_alive) {
      st.slabs.erase(st.slabs.begin());
    }
  }
  while (!src_mats_.empty() && src_mats_.begin()->first < oldest_alive) {
    src_mats_.erase(src_mats_.begin());
  }
}

SimReport Engine::run(const std::vector<events::CompactEvent>& evs) {
  for (const auto& ev : evs) {
    if (ev.n_bar != g_.n_bar) throw ConfigError("simulate: event capacity differs from graph n_bar");
    if (ev.n > g_.n_bar) throw ConfigError("simulate: event n exceeds graph n_bar");
  }
  events_ = &evs;
  traces_.assign(evs.size(), EventTrace{});
  const long total = static_cast<long>(evs.size());

  long cycle = 0;
  while (completed_ < total) {
    if (cycle > cfg_.max_cycles) {
      std::ostringstream os;
      os << "simulate: exceeded max_cycles=" << cfg_.max_cycles << " with " << completed_ << "/"
         << total << " events completed; blocked actors:";
      for (const auto& st : states_) {
        if (st.def->kind == ActorKind::Source || st.def->kind == ActorKind::Sink) continue;
        if (!st.line.empty() && st.line.back().valid) {
          os << " '" << st.def->name << "'";
          for (int eid : st.def->out_edges) {
            if (fifos_[eid].full()) os << "[fifo '" << g_.edges[eid].label << "' full]";
          }
        }
      }
      throw DeadlockError(os.str());
    }
    for (int id : topo_) {
      ActorState& st = states_[id];
      switch (st.def->kind) {
        case ActorKind::Source: step_source(st, cycle); break;
        case ActorKind::Sink: step_sink(st, cycle); break;
        default: step_pipeline(st); break;
      }
    }
    if ((cycle & 0xff) == 0) gc(completed_ - 2);
    ++cycle;
  }

  SimReport rep;
  rep.traces = std::move(traces_);
  rep.outputs = std::move(outputs_);
  rep.total_cycles = cycle;
  rep.stalls.reserve(states_.size());
  for (auto& st : states_) {
    rep.total_stall_cycles += st.stalls.total();
    rep.stalls.push_back(st.stalls);
  }
  for (std::size_t e = 1; e < completion_order_.size(); ++e) {
    if (completion_order_[e] < completion_order_[e - 1]) rep.in_order = false;
  }

  if (!rep.traces.empty()) {
    std::vector<long> sorted;
    sorted.reserve(rep.traces.size());
    for (const auto& t : rep.traces) sorted.push_back(t.latency_cycles());
    std::sort(sorted.begin(), sorted.end());
    rep.latency_cycles_min = sorted.front();
    rep.latency_cycles_max = sorted.back();
    std::size_t p95 = (sorted.size() * 95 + 99) / 100;
    if (p95 > 0) --p95;
    rep.latency_cycles_p95 = sorted[std::min(sorted.size() - 1, p95)];
  }
  const long n_ev = static_cast<long>(rep.traces.size());
  if (n_ev >= 2) {
    const long anchor = std::min<long>(std::max(0, cfg_.warmup_events), n_ev - 2);
    rep.ii_measured =
        static_cast<double>(rep.traces[n_ev - 1].t_last_out - rep.traces[anchor].t_last_out) /
        static_cast<double>(n_ev - 1 - anchor);
  }
  return rep;
}

}  // namespace

SimReport simulate(const dataflow::DataflowGraph& g, const std::vector<events::CompactEvent>& evs,
                   const SimConfig& cfg) {
  const auto violations = dataflow::validate(g);
  if (!violations.empty()) {
    throw ConfigError("simulate: graph failed validation: " + violations.front().message);
  }
  Engine eng(g, cfg);
  return eng.run(evs);
}

// Validation is deliberately skipped here: negative controls need to watch a
// defective graph stall.
SimReport simulate_unchecked(const dataflow::DataflowGraph& g,
                             const std::vector<events::CompactEvent>& evs, const SimConfig& cfg) {
  Engine eng(g, cfg);
  return eng.run(evs);
}

std::vector<Mismatch> check_equivalence(const SimReport& report,
                                        const std::vector<golden::InferenceResult>& golden_results,
                                        double rel_tol) {
  std::vector<Mismatch> out;
  auto close = [&](double a, double b) {
    if (rel_tol <= 0.0) return a == b;
    return std::fabs(a - b) <= rel_tol * std::max(1.0, std::fabs(b));
  };
  const std::size_t n_ev = std::min(report.outputs.size(), golden_results.size());
  if (report.outputs.size() != golden_results.size()) {
    out.push_back({static_cast<long>(n_ev), -1, "event_count",
                   static_cast<double>(report.outputs.size()),
                   static_cast<double>(golden_results.size())});
  }
  for (std::size_t e = 0; e < n_ev; ++e) {
    const auto& got = report.outputs[e];
    const auto& want = golden_results[e];
    if (got.n != want.n) {
      out.push_back({static_cast<long>(e), -1, "n", static_cast<double>(got.n),
                     static_cast<double>(want.n)});
      continue;
    }
    for (int i = 0; i < want.n; ++i) {
      for (int c = 0; c < want.outputs.cols(); ++c) {
        if (!close(got.outputs(i, c), want.outputs(i, c))) {
          out.push_back({static_cast<long>(e), i, "output[" + std::to_string(c) + "]",
                         got.outputs(i, c), want.outputs(i, c)});
        }
      }
      if (!close(got.beta[i], want.beta[i])) {
        out.push_back({static_cast<long>(e), i, "beta", got.beta[i], want.beta[i]});
      }
      if (got.is_cp[i] != want.is_cp[i]) {
        out.push_back({static_cast<long>(e), i, "is_cp", static_cast<double>(got.is_cp[i]),
                       static_cast<double>(want.is_cp[i])});
      }
      if (got.cluster_id[i] != want.cluster_id[i]) {
        out.push_back({static_cast<long>(e), i, "cluster_id",
                       static_cast<double>(got.cluster_id[i]),
                       static_cast<double>(want.cluster_id[i])});
      }
    }
    if (got.cp_list != want.cp_list) {
      out.push_back({static_cast<long>(e), -1, "cp_list", static_cast<double>(got.cp_list.size()),
                     static_cast<double>(want.cp_list.size())});
    }
  }
  return out;
}

Measurement measure(const SimReport& report, double f_kernel) {
  Measurement m;
  if (f_kernel <= 0.0) throw ConfigError("measure: f_kernel must be positive");
  m.latency_us = static_cast<double>(report.latency_cycles_max) / f_kernel * 1e6;
  m.throughput_eps = report.ii_measured > 0.0 ? f_kernel / report.ii_measured : 0.0;
  return m;
}

std::string trace_csv(const SimReport& report) {
  std::ostringstream os;
  os << "event_id,n,t_first_in,t_last_in,t_first_out,t_last_out,latency_cycles\n";
  for (const auto& t : report.traces) {
    os << t.event_id << "," << t.n << "," << t.t_first_in << "," << t.t_last_in << ","
       << t.t_first_out << "," << t.t_last_out << "," << t.latency_cycles() << "\n";
  }
  return os.str();
}

std::string stalls_csv(const SimReport& report) {
  std::ostringstream os;
  os << "actor_id,name,output_blocked,input_starved,data_wait,total\n";
  for (const auto& s : report.stalls) {
    os << s.actor_id << "," << s.name << "," << s.output_blocked << "," << s.input_starved << ","
       << s.data_wait << "," << s.total() << "\n";
  }
  return os.str();
}

}  // namespace pcnflow::sim
