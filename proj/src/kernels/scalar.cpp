#include <cmath>
#include <cstdlib>
#include <limits>
#include <string_view>

#include "cif/kernels.hpp"

namespace cif::kernels {
namespace {

void axpy_scalar(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void scaled_exp_scalar(const double* eta, const double* w, double shift, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = w[i] * std::exp(eta[i] - shift);
}

double sum_where_ge_scalar(const double* v, const double* key, double threshold, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (key[i] >= threshold) s += v[i];
  }
  return s;
}

double max_abs_diff_scalar(const double* a, const double* b, std::size_t n) {
  double m = 0.0;
  for (std::size_t i = 0; i < n; ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double max_value_scalar(const double* x, std::size_t n) {
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) m = std::max(m, x[i]);
  return m;
}

constexpr KernelTable kScalar{Isa::Scalar,         axpy_scalar,         scaled_exp_scalar,
                              sum_where_ge_scalar, max_abs_diff_scalar, max_value_scalar};

const KernelTable& select() {
  if (const char* env = std::getenv("CIF_SIMD"); env != nullptr && std::string_view(env) == "scalar") {
    return kScalar;
  }
  if (const KernelTable* t = avx2_table()) return *t;
  return kScalar;
}

}  // namespace

const KernelTable& scalar_table() { return kScalar; }

const KernelTable& active() {
  static const KernelTable& table = select();
  return table;
}

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
  }
  return "unknown";
}

}  // namespace cif::kernels
