#pragma once

// Dot-product kernels behind the dense flat scan and cosine matching.
// Each kernel has a scalar reference and vectorised variants; the active
// variant is chosen once at runtime from CPU features. Setting the
// environment variable MHRAG_SIMD=scalar forces the reference path.

#include <cstddef>
#include <span>
#include <string_view>

namespace mhrag::simd {

enum class Isa { Scalar, Avx2, Neon };

std::string_view to_string(Isa isa);

/// Best ISA supported by this CPU and compiled into this binary.
Isa detect_isa();

/// ISA used by the dispatching entry points.
Isa active_isa();

/// True if `isa` can run here (scalar always can).
bool isa_available(Isa isa);

namespace scalar {
float dot(const float* a, const float* b, std::size_t n);
void inner_products(const float* rows, std::size_t n_rows, std::size_t dim, const float* query, float* out);
}  // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
namespace avx2 {
float dot(const float* a, const float* b, std::size_t n);
void inner_products(const float* rows, std::size_t n_rows, std::size_t dim, const float* query, float* out);
}  // namespace avx2
#endif

#if defined(__aarch64__)
namespace neon {
float dot(const float* a, const float* b, std::size_t n);
void inner_products(const float* rows, std::size_t n_rows, std::size_t dim, const float* query, float* out);
}  // namespace neon
#endif

/// Runs the kernel for an explicit ISA. Throws std::invalid_argument if the
/// ISA is not available. Used by equivalence tests.
float dot(Isa isa, std::span<const float> a, std::span<const float> b);
void inner_products(Isa isa, std::span<const float> rows, std::size_t dim, std::span<const float> query,
                    std::span<float> out);

/// Dispatching entry points. Sizes must agree (checked).
float dot(std::span<const float> a, std::span<const float> b);
void inner_products(std::span<const float> rows, std::size_t dim, std::span<const float> query, std::span<float> out);

/// Scales `v` to unit L2 norm; a zero vector is left unchanged. Returns the
/// original norm.
float normalize(std::span<float> v);

}  // namespace mhrag::simd
