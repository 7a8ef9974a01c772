#include "diffcoh/parallel.hpp"

namespace diffcoh {

namespace {
// Leaf size for the pairwise tree.  Fixed: part of the reduction's arithmetic identity.
constexpr std::size_t kLeaf = 64;

double sum_range(const double* v, std::size_t n) {
    if (n <= kLeaf) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += v[i];
        return s;
    }
    std::size_t half = n / 2;
    return sum_range(v, half) + sum_range(v + half, n - half);
}
}  // namespace

double pairwise_sum(std::span<const double> v) { return sum_range(v.data(), v.size()); }

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

double uniform01(std::uint64_t seed, std::uint64_t index) {
    return (mix_seed(seed, index) >> 11) * 0x1.0p-53;
}

double uniform_pm1(std::uint64_t seed, std::uint64_t index) {
    return 2.0 * uniform01(seed, index) - 1.0;
}

int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

void set_threads(int k) {
#ifdef _OPENMP
    if (k > 0) omp_set_num_threads(k);
#else
    (void)k;
#endif
}

}  // namespace diffcoh
