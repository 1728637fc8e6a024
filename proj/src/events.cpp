#include "pcnflow/events.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "pcnflow/rng.hpp"

namespace pcnflow::events {

bool SensorFrame::is_hit(int sensor) const {
  const std::size_t base = static_cast<std::size_t>(sensor) * f_dim;
  for (int f = 0; f < f_dim; ++f) {
    if (features[base + f] != 0.0f) return true;
  }
  return false;
}

int SensorFrame::hit_count() const {
  int hits = 0;
  for (int s = 0; s < n_total; ++s) {
    if (is_hit(s)) ++hits;
  }
  return hits;
}

Mat CompactEvent::feature_mat() const {
  Mat m(n_bar, f_dim);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < f_dim; ++c) m(r, c) = at(r, c);
  }
  return m;
}

void GeneratorConfig::check() const {
  if (n_total < 1 || f_dim < 3) throw ConfigError("generator: n_total >= 1 and f_dim >= 3 required");
  if (!(sparsity_low > 0.0 && sparsity_low <= sparsity_high && sparsity_high < 1.0)) {
    throw ConfigError("generator: require 0 < low <= high < 1");
  }
  if (clusters_min < 1 || clusters_max < clusters_min) {
    throw ConfigError("generator: bad cluster count range");
  }
  if (cluster_spread <= 0.0) throw ConfigError("generator: cluster_spread must be positive");
}

CompactEvent compact(const SensorFrame& frame, int n_bar) {
  if (n_bar < 1) throw ConfigError("compact: n_bar must be >= 1");
  if (frame.f_dim < 1 || static_cast<std::size_t>(frame.n_total) * frame.f_dim != frame.features.size()) {
    throw ConfigError("compact: frame feature dimensions inconsistent");
  }
  CompactEvent ev;
  ev.n_bar = n_bar;
  ev.f_dim = frame.f_dim;
  ev.x.assign(static_cast<std::size_t>(n_bar) * frame.f_dim, 0.0f);
  ev.y.assign(n_bar, kIndexSentinel);
  // Ascending sensor order; overflow hits beyond n_bar are dropped.
  for (int s = 0; s < frame.n_total && ev.n < n_bar; ++s) {
    if (!frame.is_hit(s)) continue;
    std::memcpy(ev.x.data() + static_cast<std::size_t>(ev.n) * frame.f_dim,
                frame.features.data() + static_cast<std::size_t>(s) * frame.f_dim,
                sizeof(float) * frame.f_dim);
    ev.y[ev.n] = static_cast<std::uint32_t>(s);
    ++ev.n;
  }
  return ev;
}

Mat expand(const Mat& z, const std::vector<std::uint32_t>& y, int n, int n_total) {
  if (n < 0 || static_cast<std::size_t>(n) > y.size()) throw DataError("expand: n out of range");
  Mat out(n_total, z.cols());
  std::uint32_t prev = 0;
  for (int i = 0; i < n; ++i) {
    const std::uint32_t idx = y[i];
    if (idx >= static_cast<std::uint32_t>(n_total)) throw DataError("expand: index out of range");
    if (i > 0 && idx <= prev) throw DataError("expand: indices must be strictly increasing");
    prev = idx;
    for (int c = 0; c < z.cols(); ++c) out(static_cast<int>(idx), c) = z(i, c);
  }
  return out;
}

namespace {

// Map a 2-D position in [0,1)^2 to a cell of the virtual sensor grid.
int cell_of(double px, double py, int side, int n_total) {
  int cx = static_cast<int>(std::floor(px * side));
  int cy = static_cast<int>(std::floor(py * side));
  cx = std::clamp(cx, 0, side - 1);
  cy = std::clamp(cy, 0, side - 1);
  const int cell = cy * side + cx;
  return cell < n_total ? cell : -1;
}

}  // namespace

std::vector<SensorFrame> generate_events(const GeneratorConfig& cfg, int count) {
  cfg.check();
  std::vector<SensorFrame> frames;
  frames.reserve(count);
  const int side = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(cfg.n_total))));

  for (int e = 0; e < count; ++e) {
    Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(e)));
    SensorFrame frame;
    frame.n_total = cfg.n_total;
    frame.f_dim = cfg.f_dim;
    frame.features.assign(static_cast<std::size_t>(cfg.n_total) * cfg.f_dim, 0.0f);

    const double frac = rng.uniform(cfg.sparsity_low, cfg.sparsity_high);
    const int hits = std::max(1, static_cast<int>(std::lround(frac * cfg.n_total)));

    const int n_clusters =
        static_cast<int>(rng.uniform_int(cfg.clusters_min, cfg.clusters_max));
    std::vector<double> ccx(n_clusters), ccy(n_clusters), cce(n_clusters), cct(n_clusters);
    for (int c = 0; c < n_clusters; ++c) {
      ccx[c] = rng.uniform(0.1, 0.9);
      ccy[c] = rng.uniform(0.1, 0.9);
      cce[c] = rng.uniform(0.3, 1.5);  // cluster energy scale
      cct[c] = rng.uniform(0.0, 1.0);  // cluster time offset
    }

    std::set<int> used;
    int placed = 0;
    while (placed < hits) {
      const int c = static_cast<int>(rng.uniform_int(0, n_clusters - 1));
      double px = ccx[c] + cfg.cluster_spread * rng.gaussian();
      double py = ccy[c] + cfg.cluster_spread * rng.gaussian();
      int cell = cell_of(px, py, side, cfg.n_total);
      int attempts = 0;
      while ((cell < 0 || used.count(cell)) && attempts < 32) {
        px = ccx[c] + cfg.cluster_spread * rng.gaussian();
        py = ccy[c] + cfg.cluster_spread * rng.gaussian();
        cell = cell_of(px, py, side, cfg.n_total);
        ++attempts;
      }
      if (cell < 0 || used.count(cell)) {
        // Dense neighborhood: take the next free cell deterministically.
        cell = 0;
        while (used.count(cell)) ++cell;
      }
      used.insert(cell);

      const int cx = cell % side;
      const int cy = cell / side;
      const double fx = (cx + 0.5) / side;
      const double fy = (cy + 0.5) / side;
      const double dx = fx - ccx[c];
      const double dy = fy - ccy[c];
      const double r2 = dx * dx + dy * dy;
      const double falloff = std::exp(-r2 / (2.0 * cfg.cluster_spread * cfg.cluster_spread));
      const double energy = 0.05 + cce[c] * falloff * (0.8 + 0.4 * rng.uniform());
      const double t = cct[c] + 0.05 * rng.gaussian();

      float* row = frame.features.data() + static_cast<std::size_t>(cell) * cfg.f_dim;
      row[0] = static_cast<float>(fx);
      row[1] = static_cast<float>(fy);
      row[2] = static_cast<float>(energy);
      if (cfg.f_dim > 3) row[3] = static_cast<float>(t);
      if (cfg.f_dim > 4) row[4] = static_cast<float>(std::sqrt(r2));
      for (int f = 5; f < cfg.f_dim; ++f) row[f] = static_cast<float>(0.1 * rng.gaussian());
      ++placed;
    }
    frames.push_back(std::move(frame));
  }
  return frames;
}

std::vector<CompactEvent> generate_compact_events(const GeneratorConfig& cfg, int count, int n_bar) {
  const auto frames = generate_events(cfg, count);
  std::vector<CompactEvent> out;
  out.reserve(frames.size());
  for (const auto& f : frames) out.push_back(compact(f, n_bar));
  return out;
}

// ---------------------------------------------------------------------------
// File formats

namespace {

constexpr char kMagic[4] = {'P', 'C', 'E', 'V'};
constexpr std::uint16_t kVersion = 1;

void put_u16(std::string& buf, std::uint16_t v) {
  buf.push_back(static_cast<char>(v & 0xff));
  buf.push_back(static_cast<char>((v >> 8) & 0xff));
}
void put_u32(std::string& buf, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_f32(std::string& buf, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(buf, bits);
}

struct Reader {
  const std::string& buf;
  std::size_t pos = 0;

  void need(std::size_t k) const {
    if (pos + k > buf.size()) throw DataError("event file: truncated");
  }
  std::uint16_t u16() {
    need(2);
    const auto v = static_cast<std::uint16_t>(static_cast<unsigned char>(buf[pos]) |
                                              (static_cast<unsigned char>(buf[pos + 1]) << 8));
    pos += 2;
    return v;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
    pos += 4;
    return v;
  }
  float f32() {
    const std::uint32_t bits = u32();
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }
};

void write_atomic(const std::string& path, const std::string& payload) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open for writing: " + tmp);
    out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
    if (!out) throw DataError("write failed: " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

std::string read_all(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void check_consistent(const EventFile& file) {
  for (const auto& ev : file.events) {
    if (ev.n_bar != file.n_bar || ev.f_dim != file.f_dim || ev.n > ev.n_bar ||
        ev.y.size() != static_cast<std::size_t>(file.n_bar) ||
        ev.x.size() != static_cast<std::size_t>(file.n_bar) * file.f_dim) {
      throw DataError("event file: inconsistent event shape");
    }
  }
}

}  // namespace

void write_event_file(const std::string& path, const EventFile& file) {
  check_consistent(file);
  std::string buf;
  buf.append(kMagic, 4);
  put_u16(buf, kVersion);
  put_u32(buf, file.n_total);
  put_u16(buf, file.f_dim);
  put_u16(buf, file.n_bar);
  put_u32(buf, static_cast<std::uint32_t>(file.events.size()));
  for (const auto& ev : file.events) {
    put_u16(buf, static_cast<std::uint16_t>(ev.n));
    for (std::uint32_t idx : ev.y) put_u32(buf, idx);
    for (float v : ev.x) put_f32(buf, v);
  }
  write_atomic(path, buf);
}

EventFile read_event_file(const std::string& path) {
  const std::string buf = read_all(path);
  Reader r{buf};
  r.need(4);
  if (std::memcmp(buf.data(), kMagic, 4) != 0) throw DataError("event file: bad magic: " + path);
  r.pos = 4;
  const std::uint16_t version = r.u16();
  if (version != kVersion) throw DataError("event file: unsupported version");
  EventFile file;
  file.n_total = r.u32();
  file.f_dim = r.u16();
  file.n_bar = r.u16();
  const std::uint32_t count = r.u32();
  file.events.reserve(count);
  for (std::uint32_t e = 0; e < count; ++e) {
    CompactEvent ev;
    ev.n_bar = file.n_bar;
    ev.f_dim = file.f_dim;
    ev.n = r.u16();
    if (ev.n > ev.n_bar) throw DataError("event file: n exceeds n_bar");
    ev.y.resize(file.n_bar);
    for (auto& idx : ev.y) idx = r.u32();
    ev.x.resize(static_cast<std::size_t>(file.n_bar) * file.f_dim);
    for (auto& v : ev.x) v = r.f32();
    file.events.push_back(std::move(ev));
  }
  return file;
}

void write_event_file_text(const std::string& path, const EventFile& file) {
  check_consistent(file);
  std::ostringstream out;
  out << "pcev_text " << kVersion << "\n";
  out << "header " << file.n_total << " " << file.f_dim << " " << file.n_bar << " "
      << file.events.size() << "\n";
  out.precision(9);
  for (const auto& ev : file.events) {
    out << "event " << ev.n << "\n";
    for (int i = 0; i < ev.n; ++i) {
      out << ev.y[i];
      for (int f = 0; f < ev.f_dim; ++f) out << " " << ev.at(i, f);
      out << "\n";
    }
  }
  write_atomic(path, out.str());
}

EventFile read_event_file_text(const std::string& path) {
  std::istringstream in(read_all(path));
  std::string tag;
  int version = 0;
  if (!(in >> tag >> version) || tag != "pcev_text" || version != kVersion) {
    throw DataError("event text file: bad header: " + path);
  }
  EventFile file;
  std::size_t count = 0;
  std::uint32_t n_total = 0;
  int f_dim = 0, n_bar = 0;
  if (!(in >> tag >> n_total >> f_dim >> n_bar >> count) || tag != "header") {
    throw DataError("event text file: bad header line");
  }
  file.n_total = n_total;
  file.f_dim = static_cast<std::uint16_t>(f_dim);
  file.n_bar = static_cast<std::uint16_t>(n_bar);
  for (std::size_t e = 0; e < count; ++e) {
    int n = 0;
    if (!(in >> tag >> n) || tag != "event" || n < 0 || n > n_bar) {
      throw DataError("event text file: bad event record");
    }
    CompactEvent ev;
    ev.n_bar = n_bar;
    ev.f_dim = f_dim;
    ev.n = n;
    ev.x.assign(static_cast<std::size_t>(n_bar) * f_dim, 0.0f);
    ev.y.assign(n_bar, kIndexSentinel);
    for (int i = 0; i < n; ++i) {
      if (!(in >> ev.y[i])) throw DataError("event text file: truncated point");
      for (int f = 0; f < f_dim; ++f) {
        if (!(in >> ev.x[static_cast<std::size_t>(i) * f_dim + f])) {
          throw DataError("event text file: truncated features");
        }
      }
    }
    file.events.push_back(std::move(ev));
  }
  return file;
}

}  // namespace pcnflow::events
