#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>

namespace sentcast {

// Branchless a-if-c-else-b on the bit pattern.  Compare-select ternaries on
// doubles defeat gcc's if-conversion, so loops that must vectorize use this
// instead.
inline double detsel(bool c, double a, double b) {
  std::uint64_t m = -static_cast<std::uint64_t>(c);
  return std::bit_cast<double>((std::bit_cast<std::uint64_t>(a) & m) |
                               (std::bit_cast<std::uint64_t>(b) & ~m));
}

// exp(x) with an explicit, platform-independent evaluation order: libm's exp
// is not bit-identical across libc versions, and the selective-scan kernel
// evaluates it hundreds of millions of times, so reproducible runs need a
// pinned implementation.  Straight-line code (mask selects, no branches)
// keeps the loop in detexp_array auto-vectorizable.
//
// Scheme: k = round(x/ln2); r = x - k*ln2 (split-constant reduction, |r| <=
// ln2/2); exp(r) by degree-13 Taylor; scale by 2^k via two exponent-field
// constructions so the full double range (including subnormal results) is
// covered.  Overflow to +inf falls out of the two-step scaling and NaN
// propagates through the polynomial; only the deep negative tail needs an
// explicit cutoff.  Relative error is within a few ulp of correctly-rounded
// exp.
inline double detexp(double x) {
  constexpr double kLog2e = 1.4426950408889634074;
  constexpr double kShift = 6755399441055744.0;  // 1.5 * 2^52
  constexpr double kLn2Hi = 6.93147180369123816490e-01;
  constexpr double kLn2Lo = 1.90821492927058770002e-10;

  double xlo = detsel(x < -746.0, -746.0, x);
  double xc = detsel(x > 710.0, 710.0, xlo);

  double kd = xc * kLog2e + kShift;
  auto kbits = std::bit_cast<std::uint64_t>(kd);
  auto k = static_cast<std::int64_t>(static_cast<std::int32_t>(kbits & 0xffffffffu));
  double kf = kd - kShift;

  double r = (xc - kf * kLn2Hi) - kf * kLn2Lo;

  // P(r) = 1/2! + r/3! + ... + r^11/13!
  double p = 1.6059043836821613e-10;
  p = p * r + 2.08767569878681e-9;
  p = p * r + 2.505210838544172e-8;
  p = p * r + 2.755731922398589e-7;
  p = p * r + 2.7557319223985893e-6;
  p = p * r + 2.48015873015873e-5;
  p = p * r + 1.984126984126984e-4;
  p = p * r + 1.3888888888888889e-3;
  p = p * r + 8.333333333333333e-3;
  p = p * r + 4.1666666666666664e-2;
  p = p * r + 1.6666666666666666e-1;
  p = p * r + 0.5;
  double er = 1.0 + r + r * r * p;

  // 2^k = 2^k1 * 2^k2 with both halves inside the normal exponent range.
  std::int64_t k1 = k >> 1;
  std::int64_t k2 = k - k1;
  double s1 = std::bit_cast<double>(static_cast<std::uint64_t>(1023 + k1) << 52);
  double s2 = std::bit_cast<double>(static_cast<std::uint64_t>(1023 + k2) << 52);
  double res = (er * s1) * s2;

  return detsel(x < -745.133219101941222, 0.0, res);
}

inline void detexp_array(double* dst, const double* src, std::size_t n) {
#pragma omp simd
  for (std::size_t i = 0; i < n; ++i) dst[i] = detexp(src[i]);
}

}  // namespace sentcast
