#include <algorithm>
#include <cmath>
#include <limits>

#include "cif/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)
#include <immintrin.h>
#define CIF_HAVE_X86 1
#else
#define CIF_HAVE_X86 0
#endif

namespace cif::kernels {

#if CIF_HAVE_X86

namespace {

#define CIF_AVX2 __attribute__((target("avx2,fma")))

CIF_AVX2 inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d sh = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

CIF_AVX2 inline double hmax(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_max_pd(lo, hi);
  __m128d sh = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_max_sd(lo, sh));
}

// 2^k for integer-valued k in [-1022, 1023].
CIF_AVX2 inline __m256d pow2i(__m256d k) {
  __m128i k32 = _mm256_cvtpd_epi32(k);
  __m256i k64 = _mm256_cvtepi32_epi64(k32);
  k64 = _mm256_add_epi64(k64, _mm256_set1_epi64x(1023));
  return _mm256_castsi256_pd(_mm256_slli_epi64(k64, 52));
}

// Cephes-style exp: range reduction by ln 2 and a (2,3) Pade form on
// |r| <= ln2/2. Accurate to about 1 ulp on [-708, 709.78].
CIF_AVX2 inline __m256d exp_pd(__m256d x) {
  const __m256d hi_limit = _mm256_set1_pd(709.782712893384);
  const __m256d lo_limit = _mm256_set1_pd(-708.3964185322641);
  const __m256d overflow = _mm256_cmp_pd(x, hi_limit, _CMP_GT_OQ);
  const __m256d underflow = _mm256_cmp_pd(x, lo_limit, _CMP_LT_OQ);
  const __m256d nan_mask = _mm256_cmp_pd(x, x, _CMP_UNORD_Q);
  x = _mm256_min_pd(_mm256_max_pd(x, lo_limit), hi_limit);

  const __m256d log2e = _mm256_set1_pd(1.4426950408889634073599);
  __m256d k = _mm256_round_pd(_mm256_mul_pd(x, log2e), _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(k, _mm256_set1_pd(6.93145751953125E-1), x);
  r = _mm256_fnmadd_pd(k, _mm256_set1_pd(1.42860682030941723212E-6), r);

  const __m256d rr = _mm256_mul_pd(r, r);
  __m256d p = _mm256_set1_pd(1.26177193074810590878E-4);
  p = _mm256_fmadd_pd(p, rr, _mm256_set1_pd(3.02994407707441961300E-2));
  p = _mm256_fmadd_pd(p, rr, _mm256_set1_pd(9.99999999999999999910E-1));
  p = _mm256_mul_pd(p, r);
  __m256d q = _mm256_set1_pd(3.00198505138664455042E-6);
  q = _mm256_fmadd_pd(q, rr, _mm256_set1_pd(2.52448340349684104192E-3));
  q = _mm256_fmadd_pd(q, rr, _mm256_set1_pd(2.27265548208155028766E-1));
  q = _mm256_fmadd_pd(q, rr, _mm256_set1_pd(2.00000000000000000009E0));
  __m256d e = _mm256_div_pd(p, _mm256_sub_pd(q, p));
  e = _mm256_fmadd_pd(e, _mm256_set1_pd(2.0), _mm256_set1_pd(1.0));

  // Split the scale so that k = 1024 (x just below the overflow limit) stays representable.
  const __m256d k1 = _mm256_floor_pd(_mm256_mul_pd(k, _mm256_set1_pd(0.5)));
  const __m256d k2 = _mm256_sub_pd(k, k1);
  e = _mm256_mul_pd(_mm256_mul_pd(e, pow2i(k1)), pow2i(k2));

  e = _mm256_blendv_pd(e, _mm256_set1_pd(std::numeric_limits<double>::infinity()), overflow);
  e = _mm256_blendv_pd(e, _mm256_setzero_pd(), underflow);
  e = _mm256_blendv_pd(e, _mm256_set1_pd(std::numeric_limits<double>::quiet_NaN()), nan_mask);
  return e;
}

CIF_AVX2 void axpy_avx2(double a, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] = std::fma(a, x[i], y[i]);
}

CIF_AVX2 void scaled_exp_avx2(const double* eta, const double* w, double shift, double* out, std::size_t n) {
  const __m256d vs = _mm256_set1_pd(shift);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d v = exp_pd(_mm256_sub_pd(_mm256_loadu_pd(eta + i), vs));
    _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(w + i), v));
  }
  if (i < n) {
    alignas(32) double buf_eta[4] = {0, 0, 0, 0};
    alignas(32) double buf_out[4];
    for (std::size_t j = i; j < n; ++j) buf_eta[j - i] = eta[j] - shift;
    _mm256_store_pd(buf_out, exp_pd(_mm256_load_pd(buf_eta)));
    for (std::size_t j = i; j < n; ++j) out[j] = w[j] * buf_out[j - i];
  }
}

CIF_AVX2 double sum_where_ge_avx2(const double* v, const double* key, double threshold, std::size_t n) {
  const __m256d vt = _mm256_set1_pd(threshold);
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d mask = _mm256_cmp_pd(_mm256_loadu_pd(key + i), vt, _CMP_GE_OQ);
    acc = _mm256_add_pd(acc, _mm256_and_pd(mask, _mm256_loadu_pd(v + i)));
  }
  double s = hsum(acc);
  for (; i < n; ++i) {
    if (key[i] >= threshold) s += v[i];
  }
  return s;
}

CIF_AVX2 double max_abs_diff_avx2(const double* a, const double* b, std::size_t n) {
  const __m256d sign = _mm256_set1_pd(-0.0);
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    acc = _mm256_max_pd(acc, _mm256_andnot_pd(sign, d));
  }
  double m = hmax(acc);
  for (; i < n; ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

CIF_AVX2 double max_value_avx2(const double* x, std::size_t n) {
  double m = -std::numeric_limits<double>::infinity();
  std::size_t i = 0;
  if (n >= 4) {
    __m256d acc = _mm256_loadu_pd(x);
    for (i = 4; i + 4 <= n; i += 4) acc = _mm256_max_pd(acc, _mm256_loadu_pd(x + i));
    m = hmax(acc);
  }
  for (; i < n; ++i) m = std::max(m, x[i]);
  return m;
}

constexpr KernelTable kAvx2{Isa::Avx2,        axpy_avx2,         scaled_exp_avx2,
                            sum_where_ge_avx2, max_abs_diff_avx2, max_value_avx2};

}  // namespace

const KernelTable* avx2_table() {
  static const bool supported = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  return supported ? &kAvx2 : nullptr;
}

#else

const KernelTable* avx2_table() { return nullptr; }

#endif

}  // namespace cif::kernels
