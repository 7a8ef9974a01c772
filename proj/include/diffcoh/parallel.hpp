// Execution policy and deterministic reductions.
//
// Every parallel kernel in this library is "fill a buffer, then reduce it with a
// fixed pairwise tree".  The tree shape depends only on the element count, never on
// the thread count, so OpenMP and serial runs produce bitwise-identical results.
// The serial path is kept as the reference implementation for tests and benchmarks.
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace diffcoh {

enum class Exec { Serial, OpenMP };

// Pairwise (tree) summation over a fixed index order.  Deterministic: the result
// depends only on the values and their order, not on how the buffer was filled.
double pairwise_sum(std::span<const double> v);

// Evaluate f(i) for i in [0, n) into out[i].  Under Exec::OpenMP the iterations are
// distributed with a static schedule; each iteration writes only its own slot.
template <class F>
void fill_buffer(Exec exec, std::int64_t n, double* out, F&& f) {
    if (exec == Exec::OpenMP) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
        for (std::int64_t i = 0; i < n; ++i) out[i] = f(i);
        return;
#endif
    }
    for (std::int64_t i = 0; i < n; ++i) out[i] = f(i);
}

// Mean of f over [0, n): buffer fill + pairwise tree, divided by n.
template <class F>
double mean_map(Exec exec, std::int64_t n, F&& f) {
    std::vector<double> buf(static_cast<std::size_t>(n));
    fill_buffer(exec, n, buf.data(), f);
    return pairwise_sum(buf) / static_cast<double>(n);
}

// splitmix64: cheap deterministic per-item seed derivation (seed, index) -> stream seed.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index);

// Platform-stable uniform variates derived from mix_seed (never std:: distributions,
// whose outputs vary across standard libraries).
double uniform01(std::uint64_t seed, std::uint64_t index);   // [0, 1)
double uniform_pm1(std::uint64_t seed, std::uint64_t index); // [-1, 1)

// Thread count currently requested (1 when OpenMP is absent).
int max_threads();
void set_threads(int k);

}  // namespace diffcoh
