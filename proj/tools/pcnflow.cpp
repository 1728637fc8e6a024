// pcnflow: command-line front end for event generation, reference inference,
// dataflow mapping, cycle simulation and benchmark reports.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "pcnflow/config_io.hpp"
#include "pcnflow/dataflow.hpp"
#include "pcnflow/events.hpp"
#include "pcnflow/golden.hpp"
#include "pcnflow/presets.hpp"
#include "pcnflow/sim.hpp"

namespace {

using namespace pcnflow;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitDeadlock = 4;
constexpr int kExitMismatch = 5;

std::string resolve_out_dir(const std::string& manifest_dir) {
  if (const char* env = std::getenv("PCNFLOW_OUT_DIR"); env != nullptr && *env != '\0') {
    return env;
  }
  return manifest_dir;
}

void ensure_dir(const std::string& dir) {
  if (!dir.empty() && dir != ".") std::filesystem::create_directories(dir);
}

events::EventFile load_events(const std::string& path) {
  const std::string raw = io::read_file(path);
  if (raw.size() >= 4 && raw.compare(0, 4, "PCEV") == 0) return events::read_event_file(path);
  return events::read_event_file_text(path);
}

std::vector<events::CompactEvent> events_for_arch(const events::EventFile& file,
                                                  const io::ArchParams& arch) {
  if (file.n_bar != arch.n_bar) {
    throw ConfigError("event file n_bar=" + std::to_string(file.n_bar) +
                      " does not match arch n_bar=" + std::to_string(arch.n_bar));
  }
  return file.events;
}

// ---------------------------------------------------------------------------

int cmd_generate(const std::string& cfg_path, int count, int n_bar, const std::string& out_path,
                 bool text) {
  const auto cfg = io::load_generator_config(cfg_path);
  events::EventFile file;
  file.n_total = static_cast<std::uint32_t>(cfg.n_total);
  file.f_dim = static_cast<std::uint16_t>(cfg.f_dim);
  file.n_bar = static_cast<std::uint16_t>(n_bar);
  file.events = events::generate_compact_events(cfg, count, n_bar);
  if (text) {
    events::write_event_file_text(out_path, file);
  } else {
    events::write_event_file(out_path, file);
  }
  std::cout << "wrote " << file.events.size() << " events (n_total=" << cfg.n_total
            << ", n_bar=" << n_bar << ") to " << out_path << "\n";
  return kExitOk;
}

int cmd_run(const std::string& manifest_path, bool compare_real, const std::string& weights_blob,
            const std::string& weights_manifest, const std::string& export_dir) {
  const auto manifest = io::load_manifest(manifest_path);
  const auto out_dir = resolve_out_dir(manifest.out_dir);
  ensure_dir(out_dir);
  auto cfg = io::load_network_config(manifest.network_path);
  auto model = golden::build_network(cfg);
  if (!weights_blob.empty()) {
    io::import_weights(model, weights_blob,
                       weights_manifest.empty() ? weights_blob + ".json" : weights_manifest);
  }
  if (!export_dir.empty()) {
    ensure_dir(export_dir);
    io::export_weights(model, export_dir + "/weights.bin", export_dir + "/weights.json");
  }
  const auto file = load_events(manifest.events_path);
  const auto evs = events_for_arch(file, manifest.arch);

  std::vector<golden::InferenceResult> results;
  results.reserve(evs.size());
  int total_cps = 0;
  for (const auto& ev : evs) {
    results.push_back(golden::run_network(ev, model));
    total_cps += static_cast<int>(results.back().cp_list.size());
  }
  const std::string results_path = out_dir + "/results.pcrz";
  io::write_results_file(results_path, results);

  nlohmann::json summary;
  summary["events"] = evs.size();
  summary["precision"] = golden::to_string(cfg.precision);
  summary["n_bar"] = manifest.arch.n_bar;
  summary["condensation_points_total"] = total_cps;
  summary["results_file"] = results_path;

  if (compare_real && cfg.fixed()) {
    auto real_cfg = cfg;
    real_cfg.precision = golden::Precision::Real;
    const auto real_model = golden::build_network(real_cfg);
    double max_dev = 0.0;
    for (std::size_t e = 0; e < evs.size(); ++e) {
      const auto want = golden::run_network(evs[e], real_model);
      for (int i = 0; i < results[e].n; ++i) {
        for (int c = 0; c < results[e].outputs.cols(); ++c) {
          max_dev = std::max(max_dev, std::fabs(results[e].outputs(i, c) - want.outputs(i, c)));
        }
      }
    }
    summary["max_abs_deviation_vs_real"] = max_dev;
  }
  io::write_file_atomic(out_dir + "/run_summary.json", summary.dump(2));
  std::cout << summary.dump(2) << "\n";
  return kExitOk;
}

int cmd_simulate(const std::string& manifest_path, bool check_equiv, bool dump_trace,
                 bool dump_graph) {
  const auto manifest = io::load_manifest(manifest_path);
  const auto out_dir = resolve_out_dir(manifest.out_dir);
  ensure_dir(out_dir);
  const auto cfg = io::load_network_config(manifest.network_path);
  auto model = std::make_shared<golden::NetworkModel>(golden::build_network(cfg));
  const auto file = load_events(manifest.events_path);
  const auto evs = events_for_arch(file, manifest.arch);

  const auto graph =
      dataflow::map_network(model, manifest.arch.n_bar, manifest.arch.par, manifest.arch.f_kernel);
  if (dump_graph) {
    io::write_file_atomic(out_dir + "/graph.json", dataflow::to_json(graph));
    io::write_file_atomic(out_dir + "/graph.dot", dataflow::to_dot(graph));
    io::write_file_atomic(out_dir + "/graph.txt", dataflow::to_text(graph));
  }
  const auto perf = dataflow::analytic_perf(graph);
  auto sim_cfg = manifest.sim_cfg;
  sim_cfg.record_outputs = check_equiv;
  const auto report = sim::simulate(graph, evs, sim_cfg);
  const auto meas = sim::measure(report, manifest.arch.f_kernel);

  nlohmann::json summary;
  summary["events"] = evs.size();
  summary["ii_analytic"] = perf.ii_cycles;
  summary["ii_measured"] = report.ii_measured;
  summary["latency_cycles_analytic"] = perf.latency_cycles;
  summary["latency_cycles_max"] = report.latency_cycles_max;
  summary["latency_cycles_min"] = report.latency_cycles_min;
  summary["latency_cycles_p95"] = report.latency_cycles_p95;
  summary["latency_us"] = meas.latency_us;
  summary["latency_us_with_overhead"] = meas.latency_us + manifest.arch.overhead_us;
  summary["throughput_eps"] = meas.throughput_eps;
  summary["total_stall_cycles"] = report.total_stall_cycles;
  summary["in_order"] = report.in_order;
  summary["meets_throughput_req"] = meas.throughput_eps >= dataflow::kRequiredThroughputEps;
  summary["meets_latency_req"] = meas.latency_us <= dataflow::kRequiredLatencySeconds * 1e6;

  if (dump_trace || manifest.sim_cfg.record_trace) {
    io::write_file_atomic(out_dir + "/trace.csv", sim::trace_csv(report));
    io::write_file_atomic(out_dir + "/stalls.csv", sim::stalls_csv(report));
    summary["trace_file"] = out_dir + "/trace.csv";
  }

  int exit_code = kExitOk;
  if (check_equiv) {
    std::vector<golden::InferenceResult> want;
    want.reserve(evs.size());
    for (const auto& ev : evs) want.push_back(golden::run_network(ev, *model));
    const auto mismatches = sim::check_equivalence(report, want);
    summary["equivalence_mismatches"] = mismatches.size();
    if (!mismatches.empty()) {
      exit_code = kExitMismatch;
      const auto& m = mismatches.front();
      summary["first_mismatch"] = {{"event", m.event_id},
                                   {"point", m.point},
                                   {"field", m.field},
                                   {"got", m.got},
                                   {"want", m.want}};
    }
  }
  io::write_file_atomic(out_dir + "/sim_summary.json", summary.dump(2));
  std::cout << summary.dump(2) << "\n";
  return exit_code;
}

struct BenchRow {
  std::string version;
  golden::Precision precision;
  int n_bar = 0;
  int par = 0;
  double f_kernel = 0.0;
  dataflow::PerfEstimate perf;
  bool implemented = false;
};

std::string bench_csv(const std::vector<BenchRow>& rows) {
  std::ostringstream os;
  os << "version,precision,n_bar,par,f_kernel_hz,ii_cycles,latency_cycles,latency_us,"
        "throughput_eps,meets_8meps,meets_10us,implemented,ref_e2e_eps,ref_e2e_latency_us,"
        "ref_source\n";
  os.precision(12);
  for (const auto& r : rows) {
    os << r.version << "," << golden::to_string(r.precision) << "," << r.n_bar << "," << r.par
       << "," << r.f_kernel << "," << r.perf.ii_cycles << "," << r.perf.latency_cycles << ","
       << r.perf.latency_seconds * 1e6 << "," << r.perf.throughput_eps << ","
       << (r.perf.meets_throughput_req ? 1 : 0) << "," << (r.perf.meets_latency_req ? 1 : 0) << ","
       << (r.implemented ? 1 : 0) << ",";
    if (const auto pub = presets::find_published(r.version)) {
      os << pub->e2e_eps << "," << pub->e2e_latency_us << ",published";
    } else {
      os << ",,";
    }
    os << "\n";
  }
  return os.str();
}

BenchRow bench_one(golden::Precision prec, int n_bar, int par, double f_kernel) {
  const auto cfg = golden::NetworkConfig::reference(prec);
  const auto graph = dataflow::map_network(cfg, n_bar, par, f_kernel);
  BenchRow row;
  row.precision = prec;
  row.n_bar = n_bar;
  row.par = par;
  row.f_kernel = f_kernel;
  row.perf = dataflow::analytic_perf(graph);
  row.version = "-";
  if (const auto ref = presets::find_reference(prec, n_bar, par)) {
    if (std::fabs(ref->f_kernel - f_kernel) <= 1e-6 * ref->f_kernel) {
      row.version = ref->version;
      row.implemented = ref->implemented;
    }
  }
  return row;
}

int cmd_bench(bool preset_reference, const std::vector<int>& n_bars, const std::vector<int>& pars,
              const std::vector<std::string>& precisions, const std::vector<double>& f_kernels,
              const std::string& out_path) {
  std::vector<BenchRow> rows;
  if (preset_reference) {
    for (const auto& ref : presets::reference_configs()) {
      if (!ref.implemented) continue;
      rows.push_back(bench_one(ref.precision, ref.n_bar, ref.par, ref.f_kernel));
    }
  } else {
    for (const auto& ps : precisions) {
      const auto prec = golden::precision_from_string(ps);
      for (int nb : n_bars) {
        for (int par : pars) {
          for (double f : f_kernels) rows.push_back(bench_one(prec, nb, par, f));
        }
      }
    }
  }
  const std::string csv = bench_csv(rows);
  if (!out_path.empty()) {
    io::write_file_atomic(out_path, csv);
    std::cout << "wrote " << rows.size() << " rows to " << out_path << "\n";
  } else {
    std::cout << csv;
  }
  return kExitOk;
}

int cmd_report(const std::string& out_path) {
  std::ostringstream os;
  os << "model vs published reference measurements\n";
  os << "version precision n_bar par f_mhz | ii lat_cyc lat_us meps 8meps 10us | "
        "pub_e2e_meps pub_e2e_us gpu_meps gpu_us e2e_speedup\n";
  std::ostringstream csv;
  csv << "version,precision,n_bar,par,f_kernel_hz,ii_cycles,latency_cycles,latency_us,"
         "throughput_meps,meets_8meps,meets_10us,pub_e2e_meps,pub_e2e_latency_us,gpu_e2e_meps,"
         "gpu_e2e_latency_us,pub_e2e_speedup\n";
  for (const auto& ref : presets::reference_configs()) {
    if (!ref.implemented) continue;
    const auto row = bench_one(ref.precision, ref.n_bar, ref.par, ref.f_kernel);
    const auto pub = presets::find_published(ref.version);
    const auto gpu = presets::find_published_gpu(ref.n_bar);
    char line[256];
    const double meps = row.perf.throughput_eps / 1e6;
    std::snprintf(line, sizeof(line), "%-7s %-9s %5d %3d %5.0f | %4d %7d %6.3f %7.4f %5s %4s |",
                  ref.version.c_str(), golden::to_string(ref.precision).c_str(), ref.n_bar,
                  ref.par, ref.f_kernel / 1e6, row.perf.ii_cycles, row.perf.latency_cycles,
                  row.perf.latency_seconds * 1e6, meps,
                  row.perf.meets_throughput_req ? "yes" : "no",
                  row.perf.meets_latency_req ? "yes" : "no");
    os << line;
    csv << ref.version << "," << golden::to_string(ref.precision) << "," << ref.n_bar << ","
        << ref.par << "," << ref.f_kernel << "," << row.perf.ii_cycles << ","
        << row.perf.latency_cycles << "," << row.perf.latency_seconds * 1e6 << "," << meps << ","
        << (row.perf.meets_throughput_req ? 1 : 0) << "," << (row.perf.meets_latency_req ? 1 : 0)
        << ",";
    if (pub && gpu) {
      const double speedup = pub->e2e_eps / gpu->e2e_eps;
      std::snprintf(line, sizeof(line), " %9.3f %8.3f %8.3f %6.1f %8.2fx", pub->e2e_eps / 1e6,
                    pub->e2e_latency_us, gpu->e2e_eps / 1e6, gpu->e2e_latency_us, speedup);
      os << line << "\n";
      csv << pub->e2e_eps / 1e6 << "," << pub->e2e_latency_us << "," << gpu->e2e_eps / 1e6 << ","
          << gpu->e2e_latency_us << "," << speedup << "\n";
    } else {
      os << "\n";
      csv << ",,,,\n";
    }
  }
  os << "published columns are externally measured platform values, shown for context only\n";
  os << presets::kFrequencyDiscrepancyNote << "\n";
  std::cout << os.str();
  if (!out_path.empty()) {
    io::write_file_atomic(out_path, csv.str());
    std::cout << "wrote " << out_path << "\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"virtual dataflow pipeline for graph-based point cloud networks"};
  app.require_subcommand(1);

  auto* gen = app.add_subcommand("generate", "generate synthetic events");
  std::string gen_cfg, gen_out;
  int gen_count = 100;
  int gen_n_bar = 32;
  bool gen_text = false;
  gen->add_option("--config", gen_cfg, "generator config JSON")->required();
  gen->add_option("--count", gen_count, "number of events");
  gen->add_option("--n-bar", gen_n_bar, "event capacity of the container");
  gen->add_option("--out", gen_out, "output event file")->required();
  gen->add_flag("--text", gen_text, "write the text fixture format");

  auto* run = app.add_subcommand("run", "reference inference over an event file");
  std::string run_manifest, run_weights, run_weights_manifest, run_export;
  bool run_compare_real = false;
  run->add_option("--manifest", run_manifest, "run manifest JSON")->required();
  run->add_flag("--compare-real", run_compare_real, "also run real mode and report deviation");
  run->add_option("--weights", run_weights, "import weights blob instead of seeded init");
  run->add_option("--weights-manifest", run_weights_manifest, "manifest for --weights");
  run->add_option("--export-weights", run_export, "export weights blob+manifest to this dir");

  auto* simc = app.add_subcommand("simulate", "cycle-level pipeline simulation");
  std::string sim_manifest;
  bool sim_equiv = false, sim_trace = false, sim_graph = false;
  simc->add_option("--manifest", sim_manifest, "run manifest JSON")->required();
  simc->add_flag("--check-equivalence", sim_equiv, "compare outputs against the reference model");
  simc->add_flag("--trace", sim_trace, "write per-event trace and per-actor stall CSVs");
  simc->add_flag("--dump-graph", sim_graph, "write the mapped actor graph (json/dot/text)");

  auto* bench = app.add_subcommand("bench", "sweep configurations, emit a CSV");
  bool bench_preset = false;
  std::vector<int> bench_nbar, bench_par;
  std::vector<std::string> bench_prec;
  std::vector<double> bench_f;
  std::string bench_out;
  bench->add_flag("--preset-reference", bench_preset, "sweep the bundled reference versions A-E");
  bench->add_option("--n-bar", bench_nbar, "event capacities")->delimiter(',');
  bench->add_option("--par", bench_par, "parallelization factors")->delimiter(',');
  bench->add_option("--precision", bench_prec, "real|fixed8|fixed16")->delimiter(',');
  bench->add_option("--f-kernel", bench_f, "kernel clocks in Hz")->delimiter(',');
  bench->add_option("--out", bench_out, "output CSV path");

  auto* rep = app.add_subcommand("report", "comparison table against published references");
  std::string rep_out;
  rep->add_option("--out", rep_out, "also write the table as CSV");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_generate(gen_cfg, gen_count, gen_n_bar, gen_out, gen_text);
    if (run->parsed()) {
      return cmd_run(run_manifest, run_compare_real, run_weights, run_weights_manifest,
                     run_export);
    }
    if (simc->parsed()) return cmd_simulate(sim_manifest, sim_equiv, sim_trace, sim_graph);
    if (bench->parsed()) {
      return cmd_bench(bench_preset, bench_nbar, bench_par, bench_prec, bench_f, bench_out);
    }
    if (rep->parsed()) return cmd_report(rep_out);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DeadlockError& e) {
    std::cerr << "deadlock: " << e.what() << "\n";
    return kExitDeadlock;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitOk;
}
