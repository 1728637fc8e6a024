#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "pcnflow/fixnum.hpp"
#include "pcnflow/rng.hpp"

using namespace pcnflow;
using namespace pcnflow::fix;

TEST_CASE("quantize basics") {
  CHECK(quantize(0.5, {8, 6}).raw == 32);
  CHECK(quantize(10.0, {8, 6}).raw == 127);  // saturated
  CHECK(quantize(-0.015625, {8, 6}).raw == -1);
  CHECK(quantize(0.0, {16, 10}).raw == 0);
  CHECK(quantize(-100.0, {8, 4}).raw == -128);
}

TEST_CASE("quantize rounds half to even") {
  // 2.5 lsb -> 2, 3.5 lsb -> 4
  CHECK(quantize(2.5 / 16.0, {8, 4}).raw == 2);
  CHECK(quantize(3.5 / 16.0, {8, 4}).raw == 4);
  CHECK(quantize(-2.5 / 16.0, {8, 4}).raw == -2);
  CHECK(quantize(-3.5 / 16.0, {8, 4}).raw == -4);
}

TEST_CASE("round trip within half lsb") {
  Rng rng(7);
  for (const auto fmt : {FixFormat{8, 4}, FixFormat{16, 10}, FixFormat{16, 14}}) {
    for (int i = 0; i < 2000; ++i) {
      const double x = rng.uniform(fmt.min_value(), fmt.max_value());
      const double back = quantize(x, fmt).to_double();
      CHECK(std::fabs(back - x) <= fmt.lsb() / 2.0 + 1e-18);
    }
  }
}

TEST_CASE("mul and add examples") {
  const FixFormat f6{8, 6};
  CHECK(fix_mul({32, f6}, {32, f6}, f6).raw == 16);  // 0.5 * 0.5
  CHECK(fix_add({127, f6}, {127, f6}, f6).raw == 127);
  CHECK(fix_mul({-64, f6}, {64, f6}, f6).raw == -64);  // -1.0 * 1.0
}

TEST_CASE("arithmetic saturates, never wraps") {
  Rng rng(11);
  for (const auto fmt : {FixFormat{8, 4}, FixFormat{16, 10}}) {
    for (int i = 0; i < 5000; ++i) {
      const FixValue a{rng.uniform_int(fmt.raw_min(), fmt.raw_max()), fmt};
      const FixValue b{rng.uniform_int(fmt.raw_min(), fmt.raw_max()), fmt};
      for (const auto& v : {fix_add(a, b, fmt), fix_mul(a, b, fmt)}) {
        CHECK(v.raw <= fmt.raw_max());
        CHECK(v.raw >= fmt.raw_min());
      }
      // result of mul is within half lsb of the exact product when in range
      const double exact = a.to_double() * b.to_double();
      if (exact < fmt.max_value() && exact > fmt.min_value()) {
        CHECK(std::fabs(fix_mul(a, b, fmt).to_double() - exact) <= fmt.lsb() / 2.0 + 1e-15);
      }
    }
  }
}

TEST_CASE("mixed format add aligns exactly") {
  // 0.5 (f=6) + 0.25 (f=2) = 0.75 at f=10
  const FixValue a{32, {8, 6}};
  const FixValue b{1, {8, 2}};
  CHECK(fix_add(a, b, {16, 10}).to_double() == 0.75);
}

TEST_CASE("det_exp matches libm closely") {
  Rng rng(3);
  for (int i = 0; i < 4000; ++i) {
    const double x = rng.uniform(-42.0, 6.0);
    const double want = std::exp(x);
    const double got = det_exp(x);
    CHECK(std::fabs(got - want) <= 1e-12 * want + 1e-300);
  }
  CHECK(det_exp(0.0) == 1.0);
  CHECK(det_logistic(0.0) == 0.5);
  CHECK(det_logistic(40.0) > 0.999999);
  CHECK(det_logistic(-40.0) < 1e-6);
}

TEST_CASE("exp lut zero distance is full scale") {
  const ExpLut lut(ExpLutConfig{}, FixFormat{16, 15});
  CHECK(lut.weight(quantize(0.0, {16, 10})).raw == FixFormat{16, 15}.raw_max());
}

TEST_CASE("exp lut clamps to zero") {
  const ExpLut lut(ExpLutConfig{}, kFormat16);
  CHECK(lut.weight(quantize(4.0, {16, 10})).raw == 0);
  CHECK(lut.weight(quantize(12.5, {16, 10})).raw == 0);
  CHECK(lut.weight_raw(std::numeric_limits<double>::infinity()) == 0);
}

TEST_CASE("exp lut rejects negative distances") {
  const ExpLut lut(ExpLutConfig{}, kFormat16);
  CHECK_THROWS_AS(lut.weight({-1, {16, 10}}), DataError);
  CHECK_THROWS_AS(lut.weight_raw(-0.25), DataError);
}

TEST_CASE("exp lut monotone non-increasing") {
  const ExpLut lut(ExpLutConfig{}, kFormat16);
  const auto& t = lut.table();
  for (std::size_t i = 1; i < t.size(); ++i) CHECK(t[i] <= t[i - 1]);
  Rng rng(5);
  for (int i = 0; i < 2000; ++i) {
    const double a = rng.uniform(0.0, 5.0);
    const double b = rng.uniform(0.0, 5.0);
    const double lo = std::min(a, b), hi = std::max(a, b);
    CHECK(lut.weight_raw(lo) >= lut.weight_raw(hi));
  }
}

TEST_CASE("exp lut entry matches high precision exp at bin midpoint") {
  // fine table so the bin midpoint sits within one lsb of the true value
  ExpLutConfig cfg;
  cfg.scale_alpha = 10.0;
  cfg.input_bits = 18;
  cfg.clamp_max = 4.0;
  const FixFormat fmt{16, 14};
  const ExpLut lut(cfg, fmt);

  const FixValue d2 = quantize(0.1, {16, 14});
  const double v = d2.to_double();
  const auto bin = static_cast<std::size_t>(std::floor(v / lut.bin_width()));
  const double mid = (static_cast<double>(bin) + 0.5) * lut.bin_width();
  // exact identity against the construction rule
  CHECK(lut.weight(d2).raw == quantize(det_exp(-10.0 * mid), fmt).raw);
  // and within one lsb of exp(-1) = 0.3679
  CHECK(std::llabs(lut.weight(d2).raw - quantize(det_exp(-1.0), fmt).raw) <= 1);
}

TEST_CASE("identical inputs give identical raw outputs") {
  const ExpLut a(ExpLutConfig{}, kFormat8);
  const ExpLut b(ExpLutConfig{}, kFormat8);
  CHECK(a.table() == b.table());
  Rng rng(9);
  for (int i = 0; i < 500; ++i) {
    const double x = rng.uniform(-8.0, 8.0);
    CHECK(quantize(x, kFormat8).raw == quantize(x, kFormat8).raw);
    CHECK(det_exp(x) == det_exp(x));
  }
}

TEST_CASE("invalid formats are rejected") {
  CHECK_THROWS_AS(quantize(1.0, {8, 8}), ConfigError);
  CHECK_THROWS_AS(quantize(1.0, {12, 4}), ConfigError);
  CHECK_THROWS_AS(ExpLut(ExpLutConfig{-1.0, 10, 4.0}, kFormat8), ConfigError);
}
