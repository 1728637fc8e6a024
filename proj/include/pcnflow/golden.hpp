#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "pcnflow/events.hpp"
#include "pcnflow/fixnum.hpp"
#include "pcnflow/mat.hpp"

namespace pcnflow::golden {

enum class Activation { None, Relu };
enum class Aggregation { Max, Sum, Mean };
enum class SelectionVariant { Isolation, Greedy };
enum class Precision { Real, Fixed8, Fixed16 };

std::string to_string(Precision p);
Precision precision_from_string(const std::string& s);

struct DenseParams {
  Mat weights;               // in x out
  std::vector<double> bias;  // out
  Activation activation = Activation::None;
  fix::FixFormat fmt{};      // weight/activation format in fixed mode
};

struct GravNetParams {
  Mat w_s;  // in x s_dim, learned coordinate transform
  Mat w_f;  // in x f_dim, learned feature transform
  std::vector<double> b_s, b_f;
  int k = 8;
  fix::ExpLutConfig exp_cfg{};
  std::vector<Aggregation> aggregations{Aggregation::Max, Aggregation::Sum};
  fix::FixFormat fmt{};

  int s_dim() const { return w_s.cols(); }
  int f_dim() const { return w_f.cols(); }
  int out_dim() const { return static_cast<int>(aggregations.size()) * w_f.cols(); }
};

struct CondensationParams {
  double t_beta = 0.5;   // priority threshold
  double t_dist = 0.5;   // isolation / assignment distance threshold
  int cluster_dims = 2;
  SelectionVariant variant = SelectionVariant::Isolation;

  void check() const;
};

// How the network head decomposes into priority / cluster coordinates.
struct HeadSpec {
  int beta_index = 0;
  std::vector<int> coord_indices{1, 2};
};

struct LayerSpec {
  enum class Kind { Dense, GravNet, Custom };
  Kind kind = Kind::Dense;
  // custom layers carry a name and an output width; there is no kernel or
  // processing-element template for them, so executing or mapping one fails
  std::string custom_name;
  // dense
  int out_dim = 0;
  Activation activation = Activation::None;
  // gravnet
  int s_dim = 0;
  int f_dim = 0;
  int k = 8;
  fix::ExpLutConfig exp_cfg{};
  std::vector<Aggregation> aggregations{Aggregation::Max, Aggregation::Sum};
  // per-layer format override; word_bits == 0 means "use network default"
  fix::FixFormat fmt_override{0, 0};
};

struct NetworkConfig {
  int input_dim = 5;
  std::vector<LayerSpec> layers;
  HeadSpec head;
  CondensationParams condensation;
  Precision precision = Precision::Real;
  fix::FixFormat fmt8 = fix::kFormat8;
  fix::FixFormat fmt16 = fix::kFormat16;
  std::uint64_t weight_seed = 42;
  double weight_sparsity = 0.4;

  bool fixed() const { return precision != Precision::Real; }
  fix::FixFormat default_format() const;
  fix::FixFormat layer_format(const LayerSpec& layer) const;
  int output_dim() const;
  void check() const;

  // Bundled network: 5 -> dense(16, relu) -> dense(32, relu)
  // -> gravnet(s=6, f=8, k=8) -> dense(32, relu) -> dense(9, linear head),
  // head = [priority, 2 cluster coords, 6 payload], 40% weight sparsity.
  static NetworkConfig reference(Precision p);
};

// Materialized parameters. Fixed-mode weights are stored already quantized
// (as exact dyadic doubles).
struct NetworkModel {
  NetworkConfig cfg;
  std::vector<int> param_index;  // per layer: index into dense/gravnet below
  std::vector<DenseParams> dense;
  std::vector<GravNetParams> gravnet;
  std::vector<fix::ExpLut> luts;          // per gravnet layer, fixed mode only
  std::vector<fix::FixFormat> in_fmts;    // per layer: format of its input rows
  std::vector<int> gravnet_lut_index;     // per layer: lut slot, -1 for non-gravnet

  fix::FixFormat head_format() const { return cfg.layer_format(cfg.layers.back()); }

  const fix::ExpLut* lut_for(int gravnet_index) const {
    return cfg.fixed() ? &luts[gravnet_index] : nullptr;
  }
};

NetworkModel build_network(const NetworkConfig& cfg);

// Zero out ceil(sparsity * numel) smallest-magnitude entries (ties by flat index).
Mat prune_weights(const Mat& w, double sparsity);
int zero_count(const Mat& w);

// ---------------------------------------------------------------------------
// Operator kernels. All kernels are shared between the reference executor and
// the cycle simulator's actors; fixed-point paths quantize their inputs
// (idempotent on already-quantized values), accumulate in exact wide integers
// in ascending index order and rescale once.

void dense_rows(const Mat& x, Mat& out, int row_begin, int row_end, int n, const DenseParams& p,
                bool fixed, fix::FixFormat in_fmt);
Mat dense_forward(const Mat& x, const DenseParams& p, int n, bool fixed, fix::FixFormat in_fmt);

// Full squared-distance rows: entry (i, j) for live i, j < n, +inf on the
// diagonal and anywhere outside the live range.
Mat all_pairs_sq_dists(const Mat& s, int n, bool fixed, fix::FixFormat fmt);

struct KnnResult {
  Mat indices;   // n_bar x k, -1 sentinel
  Mat sq_dists;  // n_bar x k, +inf sentinel, ascending per row
};

// Streaming k-smallest selection per row of a full distance matrix.
void topk_rows(const Mat& dists, Mat& indices, Mat& sq_dists, int row_begin, int row_end, int n,
               int k);

// k nearest other points by squared distance, ties broken by lower index.
KnnResult knn_all(const Mat& s, int n, int k, bool fixed, fix::FixFormat fmt);

// Distance weights per neighbor slot; sentinel slots (+inf) get weight 0.
void exp_weight_rows(const Mat& knn_d2, Mat& out, int row_begin, int row_end, int n, double alpha,
                     const fix::ExpLut* lut);

// Weighted neighbor features, flattened to k * f_dim per row.
Mat gather_mult_rows(const Mat& weights, const Mat& indices, const Mat& feat, int n, bool fixed,
                     fix::FixFormat fmt);

// Slot-wise reduction of gathered contributions down to f_dim per row.
void reduce_rows(const Mat& contrib, Mat& out, int out_col0, int row_begin, int row_end, int n,
                 int k, int f_dim, Aggregation agg, bool fixed, fix::FixFormat fmt);

Mat gravnet_forward(const Mat& x, const GravNetParams& p, int n, bool fixed, fix::FixFormat in_fmt,
                    const fix::ExpLut* lut);

// rho_i = distance to the nearest strictly-higher-priority point (ties:
// equal priority with lower index); +inf for the globally top point.
std::vector<double> isolation(const std::vector<double>& beta, const Mat& coords, int n);

// Same, from precomputed full squared-distance rows.
std::vector<double> isolation_from_dists(const std::vector<double>& beta, const Mat& sq_dists,
                                         int n);

struct CondenseResult {
  std::vector<std::uint8_t> is_cp;
  std::vector<std::int32_t> cluster_id;  // -1 = unassigned / noise
  std::vector<int> cp_list;              // point index per condensation point
};

// Thresholds are passed pre-resolved (quantized in fixed mode) so both
// numeric modes compare exactly.
CondenseResult condense(const std::vector<double>& beta, const Mat& coords,
                        const CondensationParams& p, int n, double t_beta_eff, double t_dist_eff);

double beta_from_head(double h0, bool fixed, fix::FixFormat fmt);
double resolve_threshold(double t, bool fixed, fix::FixFormat fmt);

struct InferenceResult {
  int n = 0;
  Mat outputs;               // n_bar x d_o, zero above n
  std::vector<double> beta;  // n_bar
  Mat coords;                // n_bar x cluster_dims
  std::vector<std::uint8_t> is_cp;
  std::vector<std::int32_t> cluster_id;
  std::vector<int> cp_list;
};

// Assemble beta/coords and run condensation from head-layer output rows.
InferenceResult finalize_head(const Mat& head_out, const NetworkModel& model, int n);

InferenceResult run_network(const events::CompactEvent& ev, const NetworkModel& model);

}  // namespace pcnflow::golden
