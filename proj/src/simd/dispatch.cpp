#include "mhrag/simd/kernels.hpp"

#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace mhrag::simd {

namespace {

Isa resolve_active() {
    if (const char* env = std::getenv("MHRAG_SIMD"); env && std::string(env) == "scalar") return Isa::Scalar;
    return detect_isa();
}

void check_available(Isa isa) {
    if (!isa_available(isa)) throw std::invalid_argument("ISA not available: " + std::string(to_string(isa)));
}

}  // namespace

std::string_view to_string(Isa isa) {
    switch (isa) {
        case Isa::Scalar: return "scalar";
        case Isa::Avx2: return "avx2";
        case Isa::Neon: return "neon";
    }
    return "scalar";
}

bool isa_available(Isa isa) {
    switch (isa) {
        case Isa::Scalar: return true;
        case Isa::Avx2:
#if defined(__x86_64__) || defined(_M_X64)
            return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
            return false;
#endif
        case Isa::Neon:
#if defined(__aarch64__)
            return true;
#else
            return false;
#endif
    }
    return false;
}

Isa detect_isa() {
    if (isa_available(Isa::Avx2)) return Isa::Avx2;
    if (isa_available(Isa::Neon)) return Isa::Neon;
    return Isa::Scalar;
}

Isa active_isa() {
    static const Isa isa = resolve_active();
    return isa;
}

float dot(Isa isa, std::span<const float> a, std::span<const float> b) {
    if (a.size() != b.size()) throw std::invalid_argument("dot: size mismatch");
    check_available(isa);
    switch (isa) {
#if defined(__x86_64__) || defined(_M_X64)
        case Isa::Avx2: return avx2::dot(a.data(), b.data(), a.size());
#endif
#if defined(__aarch64__)
        case Isa::Neon: return neon::dot(a.data(), b.data(), a.size());
#endif
        default: return scalar::dot(a.data(), b.data(), a.size());
    }
}

void inner_products(Isa isa, std::span<const float> rows, std::size_t dim, std::span<const float> query,
                    std::span<float> out) {
    if (query.size() != dim) throw std::invalid_argument("inner_products: query dimension mismatch");
    if (dim == 0 ? !rows.empty() : rows.size() % dim != 0)
        throw std::invalid_argument("inner_products: rows not a multiple of dim");
    std::size_t n_rows = dim == 0 ? 0 : rows.size() / dim;
    if (out.size() != n_rows) throw std::invalid_argument("inner_products: output size mismatch");
    check_available(isa);
    switch (isa) {
#if defined(__x86_64__) || defined(_M_X64)
        case Isa::Avx2: avx2::inner_products(rows.data(), n_rows, dim, query.data(), out.data()); return;
#endif
#if defined(__aarch64__)
        case Isa::Neon: neon::inner_products(rows.data(), n_rows, dim, query.data(), out.data()); return;
#endif
        default: scalar::inner_products(rows.data(), n_rows, dim, query.data(), out.data()); return;
    }
}

float dot(std::span<const float> a, std::span<const float> b) { return dot(active_isa(), a, b); }

void inner_products(std::span<const float> rows, std::size_t dim, std::span<const float> query, std::span<float> out) {
    inner_products(active_isa(), rows, dim, query, out);
}

float normalize(std::span<float> v) {
    float norm = std::sqrt(dot(std::span<const float>(v), std::span<const float>(v)));
    if (norm > 0.0f)
        for (auto& x : v) x /= norm;
    return norm;
}

}  // namespace mhrag::simd
