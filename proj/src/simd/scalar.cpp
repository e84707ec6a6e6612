#include "mhrag/simd/kernels.hpp"

namespace mhrag::simd::scalar {

float dot(const float* a, const float* b, std::size_t n) {
    float acc = 0.0f;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

void inner_products(const float* rows, std::size_t n_rows, std::size_t dim, const float* query, float* out) {
    for (std::size_t r = 0; r < n_rows; ++r) out[r] = dot(rows + r * dim, query, dim);
}

}  // namespace mhrag::simd::scalar
