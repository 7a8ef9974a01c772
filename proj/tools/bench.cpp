// Serial vs OpenMP benchmark.  Runs the two heaviest kernels with both
// executors, checks that the results agree bitwise (the reductions are
// deterministic pairwise trees, so they must), and prints the timings.
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <vector>

#include "diffcoh/groupcoc.hpp"
#include "diffcoh/liecoc.hpp"
#include "diffcoh/parallel.hpp"
#include "diffcoh/torusfield.hpp"

namespace dc = diffcoh;

namespace {

double time_ms(double& out, auto&& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    out = fn();
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

int main() {
    int failures = 0;
    std::printf("threads available: %d\n\n", dc::max_threads());

    {
        dc::DiffeoWord w1 = dc::make_word(
            2, {dc::Letter{dc::Shear(0, dc::random_shear_profile(2, 0, 2, 0.3, 101)), 1}});
        dc::DiffeoWord w2 = dc::make_word(
            2, {dc::Letter{dc::Shear(1, dc::random_shear_profile(2, 1, 2, 0.3, 102)), 1}});
        dc::StructureField j0 = dc::StructureField::standard_complex(1);
        dc::GridSpec grids = dc::GridSpec::square(2, 64, 128);

        double vs = 0.0, vp = 0.0;
        const double ts = time_ms(vs, [&] { return dc::delta2(w1, w2, j0, grids, dc::Exec::Serial).value; });
        const double tp = time_ms(vp, [&] { return dc::delta2(w1, w2, j0, grids, dc::Exec::OpenMP).value; });
        const bool same = vs == vp;
        failures += !same;
        std::printf("delta2 on shear words, grids 64^2 / 128^2\n");
        std::printf("  serial  %10.2f ms   value % .17g\n", ts, vs);
        std::printf("  openmp  %10.2f ms   value % .17g\n", tp, vp);
        std::printf("  bitwise equal: %s   speedup: %.2fx\n\n", same ? "yes" : "NO", ts / tp);
    }

    {
        std::vector<dc::DivFreeField> fields;
        for (int i = 0; i < 5; ++i) fields.push_back(dc::random_divfree_field(3, 1, 1.0, 200 + i));
        const std::vector<int> shape{16, 16, 16};

        double vs = 0.0, vp = 0.0;
        const double ts =
            time_ms(vs, [&] { return dc::psi_odd(std::nullopt, fields, shape, dc::Exec::Serial); });
        const double tp =
            time_ms(vp, [&] { return dc::psi_odd(std::nullopt, fields, shape, dc::Exec::OpenMP); });
        const bool same = vs == vp;
        failures += !same;
        std::printf("psi (arity 5) on T^3, grid 16^3\n");
        std::printf("  serial  %10.2f ms   value % .17g\n", ts, vs);
        std::printf("  openmp  %10.2f ms   value % .17g\n", tp, vp);
        std::printf("  bitwise equal: %s   speedup: %.2fx\n", same ? "yes" : "NO", ts / tp);
    }

    if (failures) {
        std::printf("\n%d kernel(s) disagreed between executors\n", failures);
        return 1;
    }
    return 0;
}
