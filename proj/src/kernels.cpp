#include "alpr/kernels.hpp"

#include "alpr/errors.hpp"

namespace alpr::kernels {

namespace scalar {

double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void scale(double a, double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] *= a;
}

}  // namespace scalar

namespace {

struct Dispatch {
  double (*dot)(const double*, const double*, std::size_t);
  void (*axpy)(double, const double*, double*, std::size_t);
  void (*scale)(double, double*, std::size_t);
  Backend backend;
};

Dispatch make(Backend b) {
#if defined(ALPR_HAVE_AVX2)
  if (b == Backend::Avx2)
    return {&avx2::dot, &avx2::axpy, &avx2::scale, Backend::Avx2};
#endif
  return {&scalar::dot, &scalar::axpy, &scalar::scale, Backend::Scalar};
}

Dispatch& dispatch() {
  static Dispatch d =
      make(avx2_supported() ? Backend::Avx2 : Backend::Scalar);
  return d;
}

}  // namespace

bool avx2_supported() {
#if defined(ALPR_HAVE_AVX2)
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

Backend active_backend() { return dispatch().backend; }

const char* backend_name() {
  return dispatch().backend == Backend::Avx2 ? "avx2" : "scalar";
}

void select_backend(Backend b) {
  if (b == Backend::Avx2 && !avx2_supported())
    throw InvalidArgument("avx2 backend not supported on this CPU");
  dispatch() = make(b);
}

void select_default_backend() {
  dispatch() = make(avx2_supported() ? Backend::Avx2 : Backend::Scalar);
}

double dot(const double* a, const double* b, std::size_t n) {
  return dispatch().dot(a, b, n);
}

void axpy(double a, const double* x, double* y, std::size_t n) {
  dispatch().axpy(a, x, y, n);
}

void scale(double a, double* x, std::size_t n) {
  dispatch().scale(a, x, n);
}

}  // namespace alpr::kernels
