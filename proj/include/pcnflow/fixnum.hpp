#pragma once

#include <cstdint>
#include <vector>

#include "pcnflow/errors.hpp"

namespace pcnflow::fix {

// Signed two's-complement Q-format: real value = raw * 2^-frac_bits.
struct FixFormat {
  int word_bits = 16;
  int frac_bits = 10;

  friend bool operator==(const FixFormat&, const FixFormat&) = default;

  constexpr bool valid() const {
    return (word_bits == 8 || word_bits == 16) && frac_bits >= 0 && frac_bits < word_bits;
  }
  constexpr std::int64_t raw_max() const { return (std::int64_t{1} << (word_bits - 1)) - 1; }
  constexpr std::int64_t raw_min() const { return -(std::int64_t{1} << (word_bits - 1)); }
  double lsb() const;
  double max_value() const;
  double min_value() const;
};

// Default splits: 1 sign + 3 integer + 4 fraction (8 bit),
// 1 sign + 5 integer + 10 fraction (16 bit).
inline constexpr FixFormat kFormat8{8, 4};
inline constexpr FixFormat kFormat16{16, 10};

struct FixValue {
  std::int64_t raw = 0;
  FixFormat fmt{};

  double to_double() const;
  friend bool operator==(const FixValue&, const FixValue&) = default;
};

// Clamp a raw integer into the format's representable range.
std::int64_t saturate_raw(std::int64_t raw, const FixFormat& fmt);

// v * 2^-shift with round-half-to-even; negative shift is an exact left shift.
std::int64_t shift_round_half_even(std::int64_t v, int shift);

FixValue make_fix(std::int64_t raw, const FixFormat& fmt);
FixValue quantize(double x, const FixFormat& fmt);
double dequantize(const FixValue& v);

// Exact wide-integer sum/product, one rescale (round-half-to-even), one
// saturation. Never wraps.
FixValue fix_add(const FixValue& a, const FixValue& b, const FixFormat& out_fmt);
FixValue fix_mul(const FixValue& a, const FixValue& b, const FixFormat& out_fmt);

// exp/logistic built from IEEE basic operations and frozen constants only, so
// raw fixed-point outputs derived from them are identical across platforms
// (libm exp is not guaranteed to round identically everywhere).
double det_exp(double x);
double det_logistic(double x);

struct ExpLutConfig {
  double scale_alpha = 10.0;  // w = exp(-alpha * d^2)
  int input_bits = 10;        // table has 2^input_bits entries
  double clamp_max = 4.0;     // inputs >= clamp_max map to weight 0

  bool valid() const {
    return scale_alpha > 0.0 && input_bits >= 1 && input_bits <= 24 && clamp_max > 0.0;
  }
};

// Hardware-style lookup table for exponential distance weights. Bin 0 is
// anchored at zero so a zero distance yields full scale; remaining bins are
// sampled at their midpoints. Entries are monotonically non-increasing.
class ExpLut {
 public:
  ExpLut(const ExpLutConfig& cfg, const FixFormat& out_fmt);

  // d2 must be a non-negative squared distance; throws DataError otherwise.
  FixValue weight(const FixValue& d2) const;

  // Same lookup keyed directly on the (exact) squared-distance value.
  // +inf is treated as beyond clamp_max and returns 0.
  double weight_value(double d2) const;
  std::int64_t weight_raw(double d2) const;

  const ExpLutConfig& config() const { return cfg_; }
  const FixFormat& format() const { return fmt_; }
  const std::vector<std::int64_t>& table() const { return table_; }
  double bin_width() const { return delta_; }

 private:
  ExpLutConfig cfg_;
  FixFormat fmt_;
  double delta_ = 0.0;
  std::vector<std::int64_t> table_;
};

}  // namespace pcnflow::fix
