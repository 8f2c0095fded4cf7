#pragma once

// Data-parallel inner loops used by the Cox fit, the estimators and the
// bootstrap. Each kernel has a portable scalar reference and, on x86-64,
// an AVX2/FMA variant; the variant is chosen once at runtime from CPUID.
// Setting CIF_SIMD=scalar in the environment forces the reference path.

#include <cstddef>
#include <span>
#include <string_view>

namespace cif::kernels {

enum class Isa { Scalar, Avx2 };

struct KernelTable {
  Isa isa;
  /// y[i] += a * x[i]
  void (*axpy)(double a, const double* x, double* y, std::size_t n);
  /// out[i] = w[i] * exp(eta[i] - shift)
  void (*scaled_exp)(const double* eta, const double* w, double shift, double* out, std::size_t n);
  /// sum of v[i] over i with key[i] >= threshold
  double (*sum_where_ge)(const double* v, const double* key, double threshold, std::size_t n);
  /// max_i |a[i] - b[i]|, 0 for n == 0
  double (*max_abs_diff)(const double* a, const double* b, std::size_t n);
  /// max_i x[i], -inf for n == 0
  double (*max_value)(const double* x, std::size_t n);
};

const KernelTable& scalar_table();
/// nullptr when the build or the CPU lacks AVX2+FMA.
const KernelTable* avx2_table();
/// The table selected for this process.
const KernelTable& active();

std::string_view isa_name(Isa isa);

// Convenience wrappers over the active table.
inline void axpy(double a, std::span<const double> x, std::span<double> y) {
  active().axpy(a, x.data(), y.data(), y.size());
}
inline void scaled_exp(std::span<const double> eta, std::span<const double> w, double shift, std::span<double> out) {
  active().scaled_exp(eta.data(), w.data(), shift, out.data(), out.size());
}
inline double sum_where_ge(std::span<const double> v, std::span<const double> key, double threshold) {
  return active().sum_where_ge(v.data(), key.data(), threshold, v.size());
}
inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  return active().max_abs_diff(a.data(), b.data(), a.size());
}
inline double max_value(std::span<const double> x) { return active().max_value(x.data(), x.size()); }

}  // namespace cif::kernels
