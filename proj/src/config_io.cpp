#include "pcnflow/config_io.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace pcnflow::io {

using nlohmann::json;

void write_file_atomic(const std::string& path, const std::string& payload) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open for writing: " + tmp);
    out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
    if (!out) throw DataError("write failed: " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace {

json parse(const std::string& text, const char* what) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw ConfigError(std::string(what) + ": invalid JSON");
  return j;
}

golden::Activation activation_from_string(const std::string& s) {
  if (s == "relu") return golden::Activation::Relu;
  if (s == "none" || s == "linear") return golden::Activation::None;
  throw ConfigError("unknown activation: " + s);
}

std::string to_string(golden::Activation a) {
  return a == golden::Activation::Relu ? "relu" : "none";
}

golden::Aggregation aggregation_from_string(const std::string& s) {
  if (s == "max") return golden::Aggregation::Max;
  if (s == "sum") return golden::Aggregation::Sum;
  if (s == "mean") return golden::Aggregation::Mean;
  throw ConfigError("unknown aggregation: " + s);
}

std::string to_string(golden::Aggregation a) {
  switch (a) {
    case golden::Aggregation::Max: return "max";
    case golden::Aggregation::Sum: return "sum";
    case golden::Aggregation::Mean: return "mean";
  }
  return "max";
}

fix::FixFormat format_from_json(const json& j) {
  fix::FixFormat f;
  f.word_bits = j.at("word_bits").get<int>();
  f.frac_bits = j.at("frac_bits").get<int>();
  if (!f.valid()) throw ConfigError("invalid fixed-point format in config");
  return f;
}

json format_to_json(const fix::FixFormat& f) {
  return json{{"word_bits", f.word_bits}, {"frac_bits", f.frac_bits}};
}

}  // namespace

events::GeneratorConfig generator_config_from_json(const std::string& text) {
  const json j = parse(text, "generator config");
  events::GeneratorConfig cfg;
  cfg.n_total = j.value("n_total", cfg.n_total);
  cfg.f_dim = j.value("f_dim", cfg.f_dim);
  if (j.contains("sparsity")) {
    cfg.sparsity_low = j["sparsity"].at(0).get<double>();
    cfg.sparsity_high = j["sparsity"].at(1).get<double>();
  }
  if (j.contains("clusters")) {
    cfg.clusters_min = j["clusters"].at(0).get<int>();
    cfg.clusters_max = j["clusters"].at(1).get<int>();
  }
  cfg.cluster_spread = j.value("cluster_spread", cfg.cluster_spread);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.check();
  return cfg;
}

std::string to_json(const events::GeneratorConfig& cfg) {
  json j;
  j["n_total"] = cfg.n_total;
  j["f_dim"] = cfg.f_dim;
  j["sparsity"] = {cfg.sparsity_low, cfg.sparsity_high};
  j["clusters"] = {cfg.clusters_min, cfg.clusters_max};
  j["cluster_spread"] = cfg.cluster_spread;
  j["seed"] = cfg.seed;
  return j.dump(2);
}

golden::NetworkConfig network_config_from_json(const std::string& text) {
  const json j = parse(text, "network config");
  golden::NetworkConfig cfg;
  cfg.input_dim = j.value("input_dim", cfg.input_dim);
  cfg.precision = golden::precision_from_string(j.value("precision", "real"));
  cfg.weight_seed = j.value("weight_seed", cfg.weight_seed);
  cfg.weight_sparsity = j.value("weight_sparsity", cfg.weight_sparsity);
  if (j.contains("format8")) cfg.fmt8 = format_from_json(j["format8"]);
  if (j.contains("format16")) cfg.fmt16 = format_from_json(j["format16"]);

  if (!j.contains("layers")) throw ConfigError("network config: missing layers");
  cfg.layers.clear();
  for (const auto& jl : j["layers"]) {
    golden::LayerSpec l;
    const std::string type = jl.at("type").get<std::string>();
    if (type == "dense") {
      l.kind = golden::LayerSpec::Kind::Dense;
      l.out_dim = jl.at("out").get<int>();
      l.activation = activation_from_string(jl.value("activation", "none"));
    } else if (type == "gravnet") {
      l.kind = golden::LayerSpec::Kind::GravNet;
      l.s_dim = jl.at("s_dim").get<int>();
      l.f_dim = jl.at("f_dim").get<int>();
      l.k = jl.value("k", 8);
      l.exp_cfg.scale_alpha = jl.value("alpha", l.exp_cfg.scale_alpha);
      l.exp_cfg.input_bits = jl.value("lut_bits", l.exp_cfg.input_bits);
      l.exp_cfg.clamp_max = jl.value("lut_clamp", l.exp_cfg.clamp_max);
      if (jl.contains("aggregations")) {
        l.aggregations.clear();
        for (const auto& ja : jl["aggregations"]) {
          l.aggregations.push_back(aggregation_from_string(ja.get<std::string>()));
        }
      }
    } else {
      l.kind = golden::LayerSpec::Kind::Custom;
      l.custom_name = type;
      l.out_dim = jl.value("out", 1);
    }
    if (jl.contains("format")) l.fmt_override = format_from_json(jl["format"]);
    cfg.layers.push_back(std::move(l));
  }

  if (j.contains("head")) {
    cfg.head.beta_index = j["head"].value("beta_index", 0);
    if (j["head"].contains("coord_indices")) {
      cfg.head.coord_indices = j["head"]["coord_indices"].get<std::vector<int>>();
    }
  }
  if (j.contains("condensation")) {
    const auto& jc = j["condensation"];
    cfg.condensation.t_beta = jc.value("t_beta", cfg.condensation.t_beta);
    cfg.condensation.t_dist = jc.value("t_dist", cfg.condensation.t_dist);
    cfg.condensation.cluster_dims = jc.value("cluster_dims", cfg.condensation.cluster_dims);
    const std::string variant = jc.value("variant", "isolation");
    if (variant == "isolation") {
      cfg.condensation.variant = golden::SelectionVariant::Isolation;
    } else if (variant == "greedy") {
      cfg.condensation.variant = golden::SelectionVariant::Greedy;
    } else {
      throw ConfigError("unknown selection variant: " + variant);
    }
  }
  cfg.check();
  return cfg;
}

std::string to_json(const golden::NetworkConfig& cfg) {
  json j;
  j["input_dim"] = cfg.input_dim;
  j["precision"] = golden::to_string(cfg.precision);
  j["weight_seed"] = cfg.weight_seed;
  j["weight_sparsity"] = cfg.weight_sparsity;
  j["format8"] = format_to_json(cfg.fmt8);
  j["format16"] = format_to_json(cfg.fmt16);
  j["layers"] = json::array();
  for (const auto& l : cfg.layers) {
    json jl;
    if (l.kind == golden::LayerSpec::Kind::Dense) {
      jl["type"] = "dense";
      jl["out"] = l.out_dim;
      jl["activation"] = to_string(l.activation);
    } else if (l.kind == golden::LayerSpec::Kind::GravNet) {
      jl["type"] = "gravnet";
      jl["s_dim"] = l.s_dim;
      jl["f_dim"] = l.f_dim;
      jl["k"] = l.k;
      jl["alpha"] = l.exp_cfg.scale_alpha;
      jl["lut_bits"] = l.exp_cfg.input_bits;
      jl["lut_clamp"] = l.exp_cfg.clamp_max;
      jl["aggregations"] = json::array();
      for (auto a : l.aggregations) jl["aggregations"].push_back(to_string(a));
    } else {
      jl["type"] = l.custom_name;
      jl["out"] = l.out_dim;
    }
    if (l.fmt_override.word_bits != 0) jl["format"] = format_to_json(l.fmt_override);
    j["layers"].push_back(std::move(jl));
  }
  j["head"] = {{"beta_index", cfg.head.beta_index}, {"coord_indices", cfg.head.coord_indices}};
  j["condensation"] = {
      {"t_beta", cfg.condensation.t_beta},
      {"t_dist", cfg.condensation.t_dist},
      {"cluster_dims", cfg.condensation.cluster_dims},
      {"variant",
       cfg.condensation.variant == golden::SelectionVariant::Isolation ? "isolation" : "greedy"}};
  return j.dump(2);
}

RunManifest manifest_from_json(const std::string& text) {
  const json j = parse(text, "manifest");
  RunManifest m;
  m.network_path = j.at("network").get<std::string>();
  m.events_path = j.at("events").get<std::string>();
  if (j.contains("arch")) {
    const auto& ja = j["arch"];
    m.arch.n_bar = ja.value("n_bar", m.arch.n_bar);
    m.arch.par = ja.value("par", m.arch.par);
    m.arch.f_kernel = ja.value("f_kernel", m.arch.f_kernel);
    m.arch.overhead_us = ja.value("overhead_us", m.arch.overhead_us);
  }
  if (j.contains("sim")) {
    const auto& js = j["sim"];
    m.sim_cfg.warmup_events = js.value("warmup_events", m.sim_cfg.warmup_events);
    m.sim_cfg.max_cycles = js.value("max_cycles", m.sim_cfg.max_cycles);
    m.sim_cfg.record_trace = js.value("record_trace", m.sim_cfg.record_trace);
    if (js.contains("fifo_overrides")) {
      for (const auto& [key, val] : js["fifo_overrides"].items()) {
        m.sim_cfg.fifo_capacity_override[std::stoi(key)] = val.get<int>();
      }
    }
  }
  m.out_dir = j.value("out_dir", m.out_dir);
  m.seed = j.value("seed", m.seed);
  return m;
}

std::string to_json(const RunManifest& m) {
  json j;
  j["network"] = m.network_path;
  j["events"] = m.events_path;
  j["arch"] = {{"n_bar", m.arch.n_bar},
               {"par", m.arch.par},
               {"f_kernel", m.arch.f_kernel},
               {"overhead_us", m.arch.overhead_us}};
  j["sim"] = {{"warmup_events", m.sim_cfg.warmup_events},
              {"max_cycles", m.sim_cfg.max_cycles},
              {"record_trace", m.sim_cfg.record_trace}};
  j["out_dir"] = m.out_dir;
  j["seed"] = m.seed;
  return j.dump(2);
}

RunManifest load_manifest(const std::string& path) {
  RunManifest m = manifest_from_json(read_file(path));
  const auto base = std::filesystem::path(path).parent_path();
  auto resolve = [&](std::string& p) {
    if (!p.empty() && std::filesystem::path(p).is_relative()) p = (base / p).string();
  };
  resolve(m.network_path);
  resolve(m.events_path);
  return m;
}

golden::NetworkConfig load_network_config(const std::string& path) {
  return network_config_from_json(read_file(path));
}

events::GeneratorConfig load_generator_config(const std::string& path) {
  return generator_config_from_json(read_file(path));
}

// ---------------------------------------------------------------------------
// Weights blob

namespace {

void append_f64(std::string& buf, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

double f64_at(const std::string& buf, std::size_t idx) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) {
    bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[idx * 8 + i])) << (8 * i);
  }
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

struct TensorRef {
  std::string name;
  double* data;
  std::size_t count;
  int rows, cols;
};

std::vector<TensorRef> tensor_table(golden::NetworkModel& model) {
  std::vector<TensorRef> refs;
  auto add_mat = [&](const std::string& name, Mat& m) {
    refs.push_back({name, m.data(), static_cast<std::size_t>(m.rows()) * m.cols(), m.rows(),
                    m.cols()});
  };
  auto add_vec = [&](const std::string& name, std::vector<double>& v) {
    refs.push_back({name, v.data(), v.size(), 1, static_cast<int>(v.size())});
  };
  for (std::size_t li = 0; li < model.cfg.layers.size(); ++li) {
    const auto& l = model.cfg.layers[li];
    const int pi = model.param_index[li];
    const std::string base = "l" + std::to_string(li);
    if (l.kind == golden::LayerSpec::Kind::Dense) {
      add_mat(base + "/w", model.dense[pi].weights);
      add_vec(base + "/b", model.dense[pi].bias);
    } else if (l.kind == golden::LayerSpec::Kind::GravNet) {
      add_mat(base + "/w_s", model.gravnet[pi].w_s);
      add_vec(base + "/b_s", model.gravnet[pi].b_s);
      add_mat(base + "/w_f", model.gravnet[pi].w_f);
      add_vec(base + "/b_f", model.gravnet[pi].b_f);
    }
  }
  return refs;
}

}  // namespace

void export_weights(const golden::NetworkModel& model, const std::string& blob_path,
                    const std::string& manifest_path) {
  golden::NetworkModel copy = model;
  const auto refs = tensor_table(copy);
  std::string blob;
  json manifest;
  manifest["format"] = "pcnw-1";
  manifest["precision"] = golden::to_string(model.cfg.precision);
  manifest["weight_seed"] = model.cfg.weight_seed;
  manifest["weight_sparsity"] = model.cfg.weight_sparsity;
  manifest["tensors"] = json::array();
  std::size_t offset = 0;
  for (const auto& t : refs) {
    manifest["tensors"].push_back({{"name", t.name},
                                   {"rows", t.rows},
                                   {"cols", t.cols},
                                   {"offset", offset},
                                   {"count", t.count}});
    for (std::size_t i = 0; i < t.count; ++i) append_f64(blob, t.data[i]);
    offset += t.count;
  }
  manifest["blob_doubles"] = offset;
  write_file_atomic(blob_path, blob);
  write_file_atomic(manifest_path, manifest.dump(2));
}

void import_weights(golden::NetworkModel& model, const std::string& blob_path,
                    const std::string& manifest_path) {
  const json manifest = parse(read_file(manifest_path), "weights manifest");
  if (manifest.value("format", "") != "pcnw-1") throw DataError("weights manifest: bad format tag");
  const std::string blob = read_file(blob_path);
  const std::size_t doubles = blob.size() / 8;
  auto refs = tensor_table(model);
  std::size_t ti = 0;
  for (const auto& jt : manifest["tensors"]) {
    if (ti >= refs.size()) throw DataError("weights manifest: too many tensors for this network");
    auto& t = refs[ti];
    if (jt.at("name").get<std::string>() != t.name || jt.at("count").get<std::size_t>() != t.count) {
      throw DataError("weights manifest: tensor mismatch at '" + t.name + "'");
    }
    const std::size_t off = jt.at("offset").get<std::size_t>();
    if (off + t.count > doubles) throw DataError("weights blob: out of range: " + blob_path);
    for (std::size_t i = 0; i < t.count; ++i) t.data[i] = f64_at(blob, off + i);
    ++ti;
  }
  if (ti != refs.size()) throw DataError("weights manifest: missing tensors for this network");
}

// ---------------------------------------------------------------------------
// Results container

namespace {
constexpr char kResultsMagic[4] = {'P', 'C', 'R', 'Z'};

void append_u32(std::string& buf, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint32_t u32_at(const std::string& buf, std::size_t pos) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
  }
  return v;
}
}  // namespace

void write_results_file(const std::string& path,
                        const std::vector<golden::InferenceResult>& results) {
  std::string buf;
  buf.append(kResultsMagic, 4);
  append_u32(buf, 1);  // version
  const std::uint32_t count = static_cast<std::uint32_t>(results.size());
  const std::uint32_t n_bar = results.empty() ? 0 : results.front().outputs.rows();
  const std::uint32_t d_o = results.empty() ? 0 : results.front().outputs.cols();
  const std::uint32_t c_dim = results.empty() ? 0 : results.front().coords.cols();
  append_u32(buf, count);
  append_u32(buf, n_bar);
  append_u32(buf, d_o);
  append_u32(buf, c_dim);
  for (const auto& r : results) {
    append_u32(buf, static_cast<std::uint32_t>(r.n));
    for (int i = 0; i < r.outputs.rows(); ++i) {
      for (int c = 0; c < r.outputs.cols(); ++c) append_f64(buf, r.outputs(i, c));
    }
    for (double b : r.beta) append_f64(buf, b);
    for (int i = 0; i < r.coords.rows(); ++i) {
      for (int c = 0; c < r.coords.cols(); ++c) append_f64(buf, r.coords(i, c));
    }
    for (auto f : r.is_cp) buf.push_back(static_cast<char>(f));
    for (auto id : r.cluster_id) append_u32(buf, static_cast<std::uint32_t>(id));
  }
  write_file_atomic(path, buf);
}

std::vector<golden::InferenceResult> read_results_file(const std::string& path) {
  const std::string buf = read_file(path);
  if (buf.size() < 24 || std::memcmp(buf.data(), kResultsMagic, 4) != 0) {
    throw DataError("results file: bad magic: " + path);
  }
  std::size_t pos = 4;
  auto u32 = [&]() {
    if (pos + 4 > buf.size()) throw DataError("results file: truncated");
    const auto v = u32_at(buf, pos);
    pos += 4;
    return v;
  };
  auto f64 = [&]() {
    if (pos + 8 > buf.size()) throw DataError("results file: truncated");
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) {
      bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
    }
    pos += 8;
    double out;
    std::memcpy(&out, &bits, 8);
    return out;
  };
  if (u32() != 1) throw DataError("results file: unsupported version");
  const std::uint32_t count = u32();
  const int n_bar = static_cast<int>(u32());
  const int d_o = static_cast<int>(u32());
  const int c_dim = static_cast<int>(u32());
  std::vector<golden::InferenceResult> out;
  out.reserve(count);
  for (std::uint32_t e = 0; e < count; ++e) {
    golden::InferenceResult r;
    r.n = static_cast<int>(u32());
    r.outputs = Mat(n_bar, d_o);
    for (int i = 0; i < n_bar; ++i) {
      for (int c = 0; c < d_o; ++c) r.outputs(i, c) = f64();
    }
    r.beta.resize(n_bar);
    for (auto& b : r.beta) b = f64();
    r.coords = Mat(n_bar, c_dim);
    for (int i = 0; i < n_bar; ++i) {
      for (int c = 0; c < c_dim; ++c) r.coords(i, c) = f64();
    }
    r.is_cp.resize(n_bar);
    for (auto& f : r.is_cp) {
      if (pos >= buf.size()) throw DataError("results file: truncated");
      f = static_cast<std::uint8_t>(buf[pos++]);
    }
    r.cluster_id.resize(n_bar);
    for (auto& id : r.cluster_id) id = static_cast<std::int32_t>(u32());
    for (int i = 0; i < r.n; ++i) {
      if (r.is_cp[i]) r.cp_list.push_back(i);
    }
    std::sort(r.cp_list.begin(), r.cp_list.end(), [&](int a, int b) {
      return r.cluster_id[a] < r.cluster_id[b];
    });
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace pcnflow::io
