#include "pcnflow/fixnum.hpp"

#include <cassert>
#include <cmath>
#include <limits>

namespace pcnflow::fix {

double FixFormat::lsb() const { return std::ldexp(1.0, -frac_bits); }
double FixFormat::max_value() const { return std::ldexp(static_cast<double>(raw_max()), -frac_bits); }
double FixFormat::min_value() const { return std::ldexp(static_cast<double>(raw_min()), -frac_bits); }

double FixValue::to_double() const { return std::ldexp(static_cast<double>(raw), -fmt.frac_bits); }

std::int64_t saturate_raw(std::int64_t raw, const FixFormat& fmt) {
  if (raw > fmt.raw_max()) return fmt.raw_max();
  if (raw < fmt.raw_min()) return fmt.raw_min();
  return raw;
}

std::int64_t shift_round_half_even(std::int64_t v, int shift) {
  if (shift <= 0) {
    assert(shift > -62);
    return v << (-shift);
  }
  assert(shift < 62);
  const std::int64_t q = v >> shift;  // floor
  const std::int64_t r = v - (q << shift);
  const std::int64_t half = std::int64_t{1} << (shift - 1);
  if (r > half || (r == half && (q & 1))) return q + 1;
  return q;
}

FixValue make_fix(std::int64_t raw, const FixFormat& fmt) {
  if (!fmt.valid()) throw ConfigError("fixnum: invalid format");
  return {saturate_raw(raw, fmt), fmt};
}

namespace {

double round_half_to_even(double s) {
  const double fl = std::floor(s);
  const double diff = s - fl;
  if (diff > 0.5) return fl + 1.0;
  if (diff < 0.5) return fl;
  return (std::fmod(fl, 2.0) == 0.0) ? fl : fl + 1.0;
}

}  // namespace

FixValue quantize(double x, const FixFormat& fmt) {
  if (!fmt.valid()) throw ConfigError("fixnum: invalid format");
  if (std::isnan(x)) return {0, fmt};
  const double scaled = std::ldexp(x, fmt.frac_bits);
  if (scaled >= static_cast<double>(fmt.raw_max())) return {fmt.raw_max(), fmt};
  if (scaled <= static_cast<double>(fmt.raw_min())) return {fmt.raw_min(), fmt};
  return {static_cast<std::int64_t>(round_half_to_even(scaled)), fmt};
}

double dequantize(const FixValue& v) { return v.to_double(); }

FixValue fix_add(const FixValue& a, const FixValue& b, const FixFormat& out_fmt) {
  if (!out_fmt.valid()) throw ConfigError("fixnum: invalid format");
  const int f = std::max(std::max(a.fmt.frac_bits, b.fmt.frac_bits), out_fmt.frac_bits);
  const std::int64_t ra = a.raw << (f - a.fmt.frac_bits);
  const std::int64_t rb = b.raw << (f - b.fmt.frac_bits);
  return make_fix(shift_round_half_even(ra + rb, f - out_fmt.frac_bits), out_fmt);
}

FixValue fix_mul(const FixValue& a, const FixValue& b, const FixFormat& out_fmt) {
  if (!out_fmt.valid()) throw ConfigError("fixnum: invalid format");
  const std::int64_t prod = a.raw * b.raw;
  const int shift = a.fmt.frac_bits + b.fmt.frac_bits - out_fmt.frac_bits;
  return make_fix(shift_round_half_even(prod, shift), out_fmt);
}

double det_exp(double x) {
  if (std::isnan(x)) return std::numeric_limits<double>::quiet_NaN();
  if (x > 709.0) return std::numeric_limits<double>::infinity();
  if (x < -745.0) return 0.0;

  const double k = std::floor(x);
  const double r = x - k;  // [0, 1)

  // e^r: fixed-order Taylor in Horner form, |error| < 1e-17 on [0,1)
  double p = 1.0;
  for (int i = 22; i >= 1; --i) p = 1.0 + p * r / static_cast<double>(i);

  // e^|k| by binary exponentiation of the nearest-double constant for e
  const long n = static_cast<long>(k);
  unsigned long m = static_cast<unsigned long>(n < 0 ? -n : n);
  double base = 2.718281828459045;
  double ek = 1.0;
  while (m != 0) {
    if (m & 1ul) ek *= base;
    m >>= 1;
    if (m != 0) base *= base;
  }
  return n < 0 ? p / ek : p * ek;
}

double det_logistic(double x) { return 1.0 / (1.0 + det_exp(-x)); }

ExpLut::ExpLut(const ExpLutConfig& cfg, const FixFormat& out_fmt) : cfg_(cfg), fmt_(out_fmt) {
  if (!cfg.valid()) throw ConfigError("exp lut: invalid config");
  if (!out_fmt.valid()) throw ConfigError("exp lut: invalid output format");
  const std::size_t bins = std::size_t{1} << cfg.input_bits;
  delta_ = cfg.clamp_max / static_cast<double>(bins);
  table_.resize(bins);
  for (std::size_t i = 0; i < bins; ++i) {
    const double v = (i == 0) ? 0.0 : (static_cast<double>(i) + 0.5) * delta_;
    table_[i] = quantize(det_exp(-cfg.scale_alpha * v), fmt_).raw;
    assert(i == 0 || table_[i] <= table_[i - 1]);
  }
}

std::int64_t ExpLut::weight_raw(double d2) const {
  if (std::isnan(d2) || d2 < 0.0) throw DataError("exp lut: negative squared distance");
  if (d2 >= cfg_.clamp_max) return 0;
  std::size_t addr = static_cast<std::size_t>(std::floor(d2 / delta_));
  if (addr >= table_.size()) addr = table_.size() - 1;
  return table_[addr];
}

double ExpLut::weight_value(double d2) const {
  return std::ldexp(static_cast<double>(weight_raw(d2)), -fmt_.frac_bits);
}

FixValue ExpLut::weight(const FixValue& d2) const {
  if (d2.raw < 0) throw DataError("exp lut: negative squared distance");
  return {weight_raw(d2.to_double()), fmt_};
}

}  // namespace pcnflow::fix
