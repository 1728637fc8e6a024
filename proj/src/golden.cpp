#include "pcnflow/golden.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "pcnflow/rng.hpp"

namespace pcnflow::golden {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

std::int64_t qraw(double v, const fix::FixFormat& fmt) { return fix::quantize(v, fmt).raw; }

// round-half-even division for non-power-of-two mean reduction
std::int64_t div_round_half_even(std::int64_t num, std::int64_t den) {
  std::int64_t q = num / den;
  std::int64_t r = num % den;
  if (r < 0) {
    q -= 1;
    r += den;
  }
  const std::int64_t twice = 2 * r;
  if (twice > den || (twice == den && (q & 1))) return q + 1;
  return q;
}
}  // namespace

std::string to_string(Precision p) {
  switch (p) {
    case Precision::Real: return "real";
    case Precision::Fixed8: return "fixed8";
    case Precision::Fixed16: return "fixed16";
  }
  return "real";
}

Precision precision_from_string(const std::string& s) {
  if (s == "real") return Precision::Real;
  if (s == "fixed8") return Precision::Fixed8;
  if (s == "fixed16") return Precision::Fixed16;
  throw ConfigError("unknown precision: " + s);
}

void CondensationParams::check() const {
  if (!(t_beta > 0.0 && t_beta < 1.0)) throw ConfigError("condensation: require 0 < t_beta < 1");
  if (!(t_dist > 0.0)) throw ConfigError("condensation: require t_dist > 0");
  if (cluster_dims < 1) throw ConfigError("condensation: cluster_dims >= 1");
}

fix::FixFormat NetworkConfig::default_format() const {
  return precision == Precision::Fixed8 ? fmt8 : fmt16;
}

fix::FixFormat NetworkConfig::layer_format(const LayerSpec& layer) const {
  if (layer.fmt_override.word_bits != 0) return layer.fmt_override;
  return default_format();
}

int NetworkConfig::output_dim() const {
  int dim = input_dim;
  for (const auto& l : layers) {
    if (l.kind == LayerSpec::Kind::GravNet) {
      dim = static_cast<int>(l.aggregations.size()) * l.f_dim;
    } else {
      dim = l.out_dim;
    }
  }
  return dim;
}

void NetworkConfig::check() const {
  if (input_dim < 1) throw ConfigError("network: input_dim >= 1");
  if (layers.empty()) throw ConfigError("network: at least one layer required");
  if (!(weight_sparsity >= 0.0 && weight_sparsity < 1.0)) {
    throw ConfigError("network: weight_sparsity in [0, 1)");
  }
  if (fixed() && (!fmt8.valid() || !fmt16.valid())) throw ConfigError("network: invalid fixed format");
  int dim = input_dim;
  for (const auto& l : layers) {
    if (l.kind == LayerSpec::Kind::Dense || l.kind == LayerSpec::Kind::Custom) {
      if (l.out_dim < 1) throw ConfigError("network: layer out_dim >= 1");
      dim = l.out_dim;
    } else {
      if (l.s_dim < 1 || l.f_dim < 1) throw ConfigError("network: gravnet dims >= 1");
      if (l.k < 1) throw ConfigError("network: gravnet k >= 1");
      if (l.aggregations.empty()) throw ConfigError("network: gravnet needs an aggregation");
      if (!l.exp_cfg.valid()) throw ConfigError("network: bad exp config");
      dim = static_cast<int>(l.aggregations.size()) * l.f_dim;
    }
    if (l.fmt_override.word_bits != 0 && !l.fmt_override.valid()) {
      throw ConfigError("network: bad per-layer format override");
    }
  }
  condensation.check();
  const int d_o = dim;
  if (head.beta_index < 0 || head.beta_index >= d_o) throw ConfigError("network: head beta index");
  if (static_cast<int>(head.coord_indices.size()) != condensation.cluster_dims) {
    throw ConfigError("network: coord indices must match cluster_dims");
  }
  for (int ci : head.coord_indices) {
    if (ci < 0 || ci >= d_o) throw ConfigError("network: head coord index out of range");
  }
}

NetworkConfig NetworkConfig::reference(Precision p) {
  NetworkConfig cfg;
  cfg.input_dim = 5;
  cfg.precision = p;
  cfg.weight_seed = 42;
  cfg.weight_sparsity = 0.4;

  LayerSpec d1;
  d1.kind = LayerSpec::Kind::Dense;
  d1.out_dim = 16;
  d1.activation = Activation::Relu;

  LayerSpec d2 = d1;
  d2.out_dim = 32;

  LayerSpec gn;
  gn.kind = LayerSpec::Kind::GravNet;
  gn.s_dim = 6;
  gn.f_dim = 8;
  gn.k = 8;
  gn.exp_cfg = fix::ExpLutConfig{};

  LayerSpec d3 = d1;
  d3.out_dim = 32;

  LayerSpec headl;
  headl.kind = LayerSpec::Kind::Dense;
  headl.out_dim = 9;
  headl.activation = Activation::None;

  cfg.layers = {d1, d2, gn, d3, headl};
  cfg.head = HeadSpec{};
  cfg.condensation = CondensationParams{};
  return cfg;
}

Mat prune_weights(const Mat& w, double sparsity) {
  if (!(sparsity >= 0.0 && sparsity < 1.0)) throw ConfigError("prune: sparsity in [0, 1)");
  const std::size_t numel = static_cast<std::size_t>(w.rows()) * w.cols();
  const auto zeros = static_cast<std::size_t>(std::ceil(sparsity * static_cast<double>(numel)));
  if (zeros == 0) return w;
  std::vector<std::size_t> order(numel);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double ma = std::fabs(w.data()[a]);
    const double mb = std::fabs(w.data()[b]);
    if (ma != mb) return ma < mb;
    return a < b;
  });
  Mat out = w;
  for (std::size_t i = 0; i < zeros; ++i) out.data()[order[i]] = 0.0;
  return out;
}

int zero_count(const Mat& w) {
  const std::size_t numel = static_cast<std::size_t>(w.rows()) * w.cols();
  int zeros = 0;
  for (std::size_t i = 0; i < numel; ++i) {
    if (w.data()[i] == 0.0) ++zeros;
  }
  return zeros;
}

namespace {

Mat quantize_mat(const Mat& m, const fix::FixFormat& fmt) {
  Mat out(m.rows(), m.cols());
  for (int r = 0; r < m.rows(); ++r) {
    for (int c = 0; c < m.cols(); ++c) out(r, c) = fix::quantize(m(r, c), fmt).to_double();
  }
  return out;
}

std::vector<double> quantize_vec(const std::vector<double>& v, const fix::FixFormat& fmt) {
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = fix::quantize(v[i], fmt).to_double();
  return out;
}

Mat xavier(Rng& rng, int in, int out) {
  const double bound = std::sqrt(6.0 / (in + out));
  Mat w(in, out);
  for (int r = 0; r < in; ++r) {
    for (int c = 0; c < out; ++c) w(r, c) = rng.uniform(-bound, bound);
  }
  return w;
}

std::vector<double> small_bias(Rng& rng, int out) {
  std::vector<double> b(out);
  for (auto& v : b) v = rng.uniform(-0.1, 0.1);
  return b;
}

}  // namespace

NetworkModel build_network(const NetworkConfig& cfg) {
  cfg.check();
  NetworkModel model;
  model.cfg = cfg;
  int dim = cfg.input_dim;
  int layer_idx = 0;
  fix::FixFormat cur_fmt = cfg.default_format();
  for (const auto& l : cfg.layers) {
    Rng rng(derive_seed(cfg.weight_seed, static_cast<std::uint64_t>(layer_idx)));
    const fix::FixFormat fmt = cfg.layer_format(l);
    model.in_fmts.push_back(cur_fmt);
    model.gravnet_lut_index.push_back(-1);
    cur_fmt = fmt;
    if (l.kind == LayerSpec::Kind::Custom) {
      model.param_index.push_back(-1);
      dim = l.out_dim;
      ++layer_idx;
      continue;
    }
    if (l.kind == LayerSpec::Kind::Dense) {
      DenseParams p;
      p.weights = prune_weights(xavier(rng, dim, l.out_dim), cfg.weight_sparsity);
      p.bias = small_bias(rng, l.out_dim);
      p.activation = l.activation;
      p.fmt = fmt;
      if (cfg.fixed()) {
        p.weights = quantize_mat(p.weights, fmt);
        p.bias = quantize_vec(p.bias, fmt);
      }
      model.param_index.push_back(static_cast<int>(model.dense.size()));
      model.dense.push_back(std::move(p));
      dim = l.out_dim;
    } else {
      GravNetParams p;
      p.w_s = prune_weights(xavier(rng, dim, l.s_dim), cfg.weight_sparsity);
      p.w_f = prune_weights(xavier(rng, dim, l.f_dim), cfg.weight_sparsity);
      p.b_s = small_bias(rng, l.s_dim);
      p.b_f = small_bias(rng, l.f_dim);
      p.k = l.k;
      p.exp_cfg = l.exp_cfg;
      p.aggregations = l.aggregations;
      p.fmt = fmt;
      if (cfg.fixed()) {
        p.w_s = quantize_mat(p.w_s, fmt);
        p.w_f = quantize_mat(p.w_f, fmt);
        p.b_s = quantize_vec(p.b_s, fmt);
        p.b_f = quantize_vec(p.b_f, fmt);
        model.gravnet_lut_index.back() = static_cast<int>(model.luts.size());
        model.luts.emplace_back(l.exp_cfg, fmt);
      }
      model.param_index.push_back(static_cast<int>(model.gravnet.size()));
      model.gravnet.push_back(std::move(p));
      dim = static_cast<int>(l.aggregations.size()) * l.f_dim;
    }
    ++layer_idx;
  }
  return model;
}

// ---------------------------------------------------------------------------
// Kernels

void dense_rows(const Mat& x, Mat& out, int row_begin, int row_end, int n, const DenseParams& p,
                bool fixed, fix::FixFormat in_fmt) {
  const int in_dim = p.weights.rows();
  const int out_dim = p.weights.cols();
  if (x.cols() != in_dim) throw ConfigError("dense: input width mismatch");
  if (out.cols() != out_dim || out.rows() != x.rows()) throw ConfigError("dense: output shape mismatch");
  const int hi = std::min(row_end, n);
  if (!fixed) {
    for (int r = row_begin; r < hi; ++r) {
      for (int c = 0; c < out_dim; ++c) {
        double acc = 0.0;
        for (int i = 0; i < in_dim; ++i) acc += x(r, i) * p.weights(i, c);
        acc += p.bias[c];
        if (p.activation == Activation::Relu && acc < 0.0) acc = 0.0;
        out(r, c) = acc;
      }
    }
    return;
  }
  const int in_f = in_fmt.frac_bits;
  const int w_f = p.fmt.frac_bits;
  const int out_f = p.fmt.frac_bits;
  for (int r = row_begin; r < hi; ++r) {
    std::vector<std::int64_t> xq(in_dim);
    for (int i = 0; i < in_dim; ++i) xq[i] = qraw(x(r, i), in_fmt);
    for (int c = 0; c < out_dim; ++c) {
      std::int64_t acc = 0;  // scale 2^-(in_f + w_f)
      for (int i = 0; i < in_dim; ++i) acc += xq[i] * qraw(p.weights(i, c), p.fmt);
      acc += qraw(p.bias[c], p.fmt) << in_f;
      std::int64_t raw =
          fix::saturate_raw(fix::shift_round_half_even(acc, in_f + w_f - out_f), p.fmt);
      if (p.activation == Activation::Relu && raw < 0) raw = 0;
      out(r, c) = std::ldexp(static_cast<double>(raw), -out_f);
    }
  }
}

Mat dense_forward(const Mat& x, const DenseParams& p, int n, bool fixed, fix::FixFormat in_fmt) {
  Mat out(x.rows(), p.weights.cols());
  dense_rows(x, out, 0, x.rows(), n, p, fixed, in_fmt);
  return out;
}

Mat all_pairs_sq_dists(const Mat& s, int n, bool fixed, fix::FixFormat fmt) {
  const int n_bar = s.rows();
  const int d = s.cols();
  Mat out(n_bar, n_bar);
  out.fill(kInf);
  if (!fixed) {
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        double acc = 0.0;
        for (int c = 0; c < d; ++c) {
          const double diff = s(i, c) - s(j, c);
          acc += diff * diff;
        }
        out(i, j) = acc;
        out(j, i) = acc;
      }
    }
    return out;
  }
  const int f = fmt.frac_bits;
  std::vector<std::int64_t> raw(static_cast<std::size_t>(n) * d);
  for (int i = 0; i < n; ++i) {
    for (int c = 0; c < d; ++c) raw[static_cast<std::size_t>(i) * d + c] = qraw(s(i, c), fmt);
  }
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      std::int64_t acc = 0;  // scale 2^-2f, exact
      for (int c = 0; c < d; ++c) {
        const std::int64_t diff =
            raw[static_cast<std::size_t>(i) * d + c] - raw[static_cast<std::size_t>(j) * d + c];
        acc += diff * diff;
      }
      const double v = std::ldexp(static_cast<double>(acc), -2 * f);
      out(i, j) = v;
      out(j, i) = v;
    }
  }
  return out;
}

void topk_rows(const Mat& dists, Mat& indices, Mat& sq_dists, int row_begin, int row_end, int n,
               int k) {
  const int n_bar = dists.rows();
  const int hi = std::min(row_end, n);
  for (int i = row_begin; i < std::min(row_end, n_bar); ++i) {
    for (int s = 0; s < k; ++s) {
      indices(i, s) = -1.0;
      sq_dists(i, s) = kInf;
    }
  }
  for (int i = row_begin; i < hi; ++i) {
    // streaming insertion into a sorted k-buffer, candidates in index order
    int filled = 0;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      const double d = dists(i, j);
      if (!(d < kInf)) continue;
      if (filled == k) {
        const double worst = sq_dists(i, k - 1);
        if (d > worst || (d == worst && j > static_cast<int>(indices(i, k - 1)))) continue;
      }
      int pos = std::min(filled, k - 1);
      while (pos > 0 && (sq_dists(i, pos - 1) > d ||
                         (sq_dists(i, pos - 1) == d && indices(i, pos - 1) > j))) {
        sq_dists(i, pos) = sq_dists(i, pos - 1);
        indices(i, pos) = indices(i, pos - 1);
        --pos;
      }
      sq_dists(i, pos) = d;
      indices(i, pos) = j;
      if (filled < k) ++filled;
    }
  }
}

KnnResult knn_all(const Mat& s, int n, int k, bool fixed, fix::FixFormat fmt) {
  if (n < 1) throw ConfigError("knn: n >= 1 required");
  const Mat dists = all_pairs_sq_dists(s, n, fixed, fmt);
  KnnResult out{Mat(s.rows(), k), Mat(s.rows(), k)};
  topk_rows(dists, out.indices, out.sq_dists, 0, s.rows(), n, k);
  return out;
}

void exp_weight_rows(const Mat& knn_d2, Mat& out, int row_begin, int row_end, int n, double alpha,
                     const fix::ExpLut* lut) {
  const int k = knn_d2.cols();
  const int hi = std::min(row_end, n);
  for (int i = row_begin; i < std::min(row_end, out.rows()); ++i) {
    for (int s = 0; s < k; ++s) out(i, s) = 0.0;
  }
  for (int i = row_begin; i < hi; ++i) {
    for (int s = 0; s < k; ++s) {
      const double d2 = knn_d2(i, s);
      if (std::isinf(d2)) continue;  // sentinel slot, weight 0
      if (lut != nullptr) {
        out(i, s) = lut->weight_value(d2);
      } else {
        if (d2 < 0.0 || std::isnan(d2)) throw DataError("exp weight: negative squared distance");
        out(i, s) = fix::det_exp(-alpha * d2);
      }
    }
  }
}

Mat gather_mult_rows(const Mat& weights, const Mat& indices, const Mat& feat, int n, bool fixed,
                     fix::FixFormat fmt) {
  const int n_bar = weights.rows();
  const int k = weights.cols();
  const int d_f = feat.cols();
  Mat out(n_bar, k * d_f);
  for (int i = 0; i < n; ++i) {
    for (int s = 0; s < k; ++s) {
      const int j = static_cast<int>(indices(i, s));
      if (j < 0) continue;  // zeros already in place
      if (j >= n) throw DataError("gather: neighbor index out of range");
      if (!fixed) {
        const double w = weights(i, s);
        for (int c = 0; c < d_f; ++c) out(i, s * d_f + c) = w * feat(j, c);
      } else {
        const fix::FixValue w{qraw(weights(i, s), fmt), fmt};
        for (int c = 0; c < d_f; ++c) {
          const fix::FixValue fv{qraw(feat(j, c), fmt), fmt};
          out(i, s * d_f + c) = fix::fix_mul(w, fv, fmt).to_double();
        }
      }
    }
  }
  return out;
}

void reduce_rows(const Mat& contrib, Mat& out, int out_col0, int row_begin, int row_end, int n,
                 int k, int f_dim, Aggregation agg, bool fixed, fix::FixFormat fmt) {
  const int hi = std::min(row_end, n);
  for (int i = row_begin; i < hi; ++i) {
    for (int c = 0; c < f_dim; ++c) {
      if (agg == Aggregation::Max) {
        double m = contrib(i, c);
        for (int s = 1; s < k; ++s) m = std::max(m, contrib(i, s * f_dim + c));
        out(i, out_col0 + c) = m;
      } else if (!fixed) {
        double acc = 0.0;
        for (int s = 0; s < k; ++s) acc += contrib(i, s * f_dim + c);
        if (agg == Aggregation::Mean) acc /= static_cast<double>(k);
        out(i, out_col0 + c) = acc;
      } else {
        std::int64_t acc = 0;
        for (int s = 0; s < k; ++s) acc += qraw(contrib(i, s * f_dim + c), fmt);
        if (agg == Aggregation::Mean) acc = div_round_half_even(acc, k);
        out(i, out_col0 + c) =
            std::ldexp(static_cast<double>(fix::saturate_raw(acc, fmt)), -fmt.frac_bits);
      }
    }
  }
}

Mat gravnet_forward(const Mat& x, const GravNetParams& p, int n, bool fixed, fix::FixFormat in_fmt,
                    const fix::ExpLut* lut) {
  if (n < 1) throw ConfigError("gravnet: n >= 1 required");
  if (fixed && lut == nullptr) throw ConfigError("gravnet: fixed mode requires a LUT");
  DenseParams sp{p.w_s, p.b_s, Activation::None, p.fmt};
  DenseParams fp{p.w_f, p.b_f, Activation::None, p.fmt};
  const Mat s = dense_forward(x, sp, n, fixed, in_fmt);
  const Mat f = dense_forward(x, fp, n, fixed, in_fmt);
  const KnnResult knn = knn_all(s, n, p.k, fixed, p.fmt);
  Mat w(x.rows(), p.k);
  exp_weight_rows(knn.sq_dists, w, 0, x.rows(), n, p.exp_cfg.scale_alpha, lut);
  const Mat contrib = gather_mult_rows(w, knn.indices, f, n, fixed, p.fmt);
  Mat out(x.rows(), p.out_dim());
  int col = 0;
  for (const auto agg : p.aggregations) {
    reduce_rows(contrib, out, col, 0, x.rows(), n, p.k, p.f_dim(), agg, fixed, p.fmt);
    col += p.f_dim();
  }
  return out;
}

std::vector<double> isolation_from_dists(const std::vector<double>& beta, const Mat& sq_dists,
                                         int n) {
  std::vector<double> rho(std::max(n, 0), kInf);
  for (int i = 0; i < n; ++i) {
    double best = kInf;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      const bool higher = beta[j] > beta[i] || (beta[j] == beta[i] && j < i);
      if (!higher) continue;
      best = std::min(best, sq_dists(i, j));
    }
    rho[i] = std::isinf(best) ? kInf : std::sqrt(best);
  }
  return rho;
}

std::vector<double> isolation(const std::vector<double>& beta, const Mat& coords, int n) {
  if (n < 1) throw ConfigError("isolation: n >= 1 required");
  return isolation_from_dists(beta, all_pairs_sq_dists(coords, n, false, fix::FixFormat{}), n);
}

namespace {

// Squared distance in cluster space, exact for dyadic inputs.
double sq_dist(const Mat& coords, int i, int j) {
  double acc = 0.0;
  for (int c = 0; c < coords.cols(); ++c) {
    const double diff = coords(i, c) - coords(j, c);
    acc += diff * diff;
  }
  return acc;
}

void assign_clusters(const std::vector<double>& beta, const Mat& coords, int n, double t_dist_eff,
                     CondenseResult& res) {
  const double t2 = t_dist_eff * t_dist_eff;
  for (int i = 0; i < n; ++i) {
    if (res.is_cp[i]) continue;
    if (!(beta[i] > 0.0)) continue;
    double best = kInf;
    int best_cp = -1;
    for (std::size_t c = 0; c < res.cp_list.size(); ++c) {
      const double d2 = sq_dist(coords, i, res.cp_list[c]);
      if (d2 < best) {
        best = d2;
        best_cp = static_cast<int>(c);
      }
    }
    if (best_cp >= 0 && best <= t2) res.cluster_id[i] = best_cp;
  }
}

}  // namespace

CondenseResult condense(const std::vector<double>& beta, const Mat& coords,
                        const CondensationParams& p, int n, double t_beta_eff, double t_dist_eff) {
  if (n < 1) throw ConfigError("condense: n >= 1 required");
  CondenseResult res;
  res.is_cp.assign(n, 0);
  res.cluster_id.assign(n, -1);
  const double t2 = t_dist_eff * t_dist_eff;

  if (p.variant == SelectionVariant::Isolation) {
    // seeds: priority above threshold and no higher-priority point within t_dist
    for (int i = 0; i < n; ++i) {
      if (!(beta[i] > t_beta_eff)) continue;
      double best = kInf;
      for (int j = 0; j < n; ++j) {
        if (j == i) continue;
        const bool higher = beta[j] > beta[i] || (beta[j] == beta[i] && j < i);
        if (!higher) continue;
        best = std::min(best, sq_dist(coords, i, j));
      }
      if (best > t2) {
        res.is_cp[i] = 1;
        res.cluster_id[i] = static_cast<std::int32_t>(res.cp_list.size());
        res.cp_list.push_back(i);
      }
    }
  } else {
    // greedy scan in descending (priority, ascending index) order
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      if (beta[a] != beta[b]) return beta[a] > beta[b];
      return a < b;
    });
    for (int i : order) {
      if (!(beta[i] > t_beta_eff)) continue;
      bool clear = true;
      for (int cp : res.cp_list) {
        if (!(sq_dist(coords, i, cp) > t2)) {
          clear = false;
          break;
        }
      }
      if (clear) {
        res.is_cp[i] = 1;
        res.cluster_id[i] = static_cast<std::int32_t>(res.cp_list.size());
        res.cp_list.push_back(i);
      }
    }
  }

  assign_clusters(beta, coords, n, t_dist_eff, res);
  return res;
}

double beta_from_head(double h0, bool fixed, fix::FixFormat fmt) {
  const double b = fix::det_logistic(h0);
  return fixed ? fix::quantize(b, fmt).to_double() : b;
}

double resolve_threshold(double t, bool fixed, fix::FixFormat fmt) {
  return fixed ? fix::quantize(t, fmt).to_double() : t;
}

InferenceResult finalize_head(const Mat& head_out, const NetworkModel& model, int n) {
  const auto& cfg = model.cfg;
  const bool fixed = cfg.fixed();
  const fix::FixFormat fmt = cfg.layer_format(cfg.layers.back());
  const auto& cp = cfg.condensation;

  InferenceResult res;
  res.n = n;
  res.outputs = head_out;
  res.beta.assign(head_out.rows(), 0.0);
  res.coords = Mat(head_out.rows(), cp.cluster_dims);
  res.is_cp.assign(head_out.rows(), 0);
  res.cluster_id.assign(head_out.rows(), -1);

  for (int i = 0; i < n; ++i) {
    res.beta[i] = beta_from_head(head_out(i, cfg.head.beta_index), fixed, fmt);
    for (int c = 0; c < cp.cluster_dims; ++c) {
      res.coords(i, c) = head_out(i, cfg.head.coord_indices[c]);
    }
  }
  if (n >= 1) {
    const double tb = resolve_threshold(cp.t_beta, fixed, fmt);
    const double td = resolve_threshold(cp.t_dist, fixed, fmt);
    CondenseResult cr = condense(res.beta, res.coords, cp, n, tb, td);
    for (int i = 0; i < n; ++i) {
      res.is_cp[i] = cr.is_cp[i];
      res.cluster_id[i] = cr.cluster_id[i];
    }
    res.cp_list = std::move(cr.cp_list);
  }
  return res;
}

InferenceResult run_network(const events::CompactEvent& ev, const NetworkModel& model) {
  const auto& cfg = model.cfg;
  if (ev.f_dim != cfg.input_dim) throw ConfigError("run: event feature dim mismatch");
  const bool fixed = cfg.fixed();

  Mat cur = ev.feature_mat();
  fix::FixFormat cur_fmt = cfg.default_format();
  const int n = ev.n;

  if (n == 0) {
    InferenceResult res;
    res.n = 0;
    res.outputs = Mat(ev.n_bar, cfg.output_dim());
    res.coords = Mat(ev.n_bar, cfg.condensation.cluster_dims);
    res.beta.assign(ev.n_bar, 0.0);
    res.is_cp.assign(ev.n_bar, 0);
    res.cluster_id.assign(ev.n_bar, -1);
    return res;
  }

  int gravnet_idx = 0;
  for (std::size_t li = 0; li < cfg.layers.size(); ++li) {
    const auto& l = cfg.layers[li];
    const int pi = model.param_index[li];
    if (l.kind == LayerSpec::Kind::Custom) {
      throw ConfigError("run: no kernel for layer kind '" + l.custom_name + "'");
    }
    if (l.kind == LayerSpec::Kind::Dense) {
      cur = dense_forward(cur, model.dense[pi], n, fixed, cur_fmt);
      cur_fmt = model.dense[pi].fmt;
    } else {
      cur = gravnet_forward(cur, model.gravnet[pi], n, fixed, cur_fmt,
                            fixed ? &model.luts[gravnet_idx] : nullptr);
      cur_fmt = model.gravnet[pi].fmt;
      ++gravnet_idx;
    }
  }
  return finalize_head(cur, model, n);
}

}  // namespace pcnflow::golden
