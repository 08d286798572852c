#pragma once

#include <cstddef>

// Arithmetic inner loops of the network engine. Each kernel has a scalar
// reference implementation and, on x86-64, an AVX2 variant selected at
// runtime. axpy and scale are bit-identical across backends (the vector code
// uses separate mul+add, not FMA); dot differs only in accumulation order.
namespace alpr::kernels {

namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double a, const double* x, double* y, std::size_t n);  // y += a*x
void scale(double a, double* x, std::size_t n);                  // x *= a
}  // namespace scalar

#if defined(ALPR_HAVE_AVX2)
namespace avx2 {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double a, const double* x, double* y, std::size_t n);
void scale(double a, double* x, std::size_t n);
}  // namespace avx2
#endif

enum class Backend { Scalar, Avx2 };

/// CPU capability probe; false when the binary was built without AVX2 support.
bool avx2_supported();

Backend active_backend();
const char* backend_name();

/// Scalar is always legal; selecting Avx2 on an unsupported CPU throws.
/// Intended for startup and tests, not for concurrent use.
void select_backend(Backend b);
void select_default_backend();

double dot(const double* a, const double* b, std::size_t n);
void axpy(double a, const double* x, double* y, std::size_t n);
void scale(double a, double* x, std::size_t n);

}  // namespace alpr::kernels
