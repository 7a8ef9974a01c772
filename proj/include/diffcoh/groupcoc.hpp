// Group cocycles on the volume-preserving and symplectic diffeomorphism groups,
// evaluated through fiberwise geodesic simplices:
//   - delta2: the bounded 2-cocycle given by the fiberwise signed hyperbolic area
//     of the triangle (J0, f1*J0, (f1 f2)*J0), integrated over the torus;
//   - sl2z_delta: its closed-form restriction to integer linear maps;
//   - simplex_integrate: iterated-join simplices of degree 2 and 5 against the
//     Kaehler fiber form or the odd invariant form on SPD matrices;
//   - the l^1-chain certificate machinery with an explicit error-margin verdict.
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "diffcoh/diffeo.hpp"
#include "diffcoh/parallel.hpp"
#include "diffcoh/torusfield.hpp"

namespace diffcoh {

struct CocycleReport {
    double value = 0.0;
    std::vector<int> resolution;  // grid backing the quoted value
    double error_estimate = 0.0;  // two-resolution difference (or Monte Carlo std error)
    std::string convention_tag;
    std::string note;
};

// Signed fiberwise hyperbolic area of (J0, f1*J0, (f1∘f2)*J0) integrated over T^2.
// |value| <= pi * area(T^2) + error_estimate.
CocycleReport delta2(const DiffeoWord& f1, const DiffeoWord& f2, const StructureField& j0,
                     const GridSpec& grids, Exec exec = Exec::OpenMP);

// Closed-form counterpart on integer linear maps: the signed hyperbolic area of
// (p0, A.p0, (AB).p0) with p0 = i, acting through the half-plane pushforward.
double sl2z_delta(const Eigen::Matrix2i& a, const Eigen::Matrix2i& b);

// delta2(f2,f3) - delta2(f1∘f2, f3) + delta2(f1, f2∘f3) - delta2(f1,f2);
// error_estimate accumulates the four contributing estimates.
CocycleReport cocycle_defect(const DiffeoWord& f1, const DiffeoWord& f2, const DiffeoWord& f3,
                             const StructureField& j0, const GridSpec& grids,
                             Exec exec = Exec::OpenMP);

enum class JoinRule { Straight, Geodesic };
enum class FiberForm { BorelOdd, Kaehler };

struct QuadratureSpec {
    int tensor_nodes = 12;          // Gauss-Legendre nodes per join parameter (degree 2)
    std::int64_t mc_nodes = 20000;  // Monte Carlo samples (degree 5)
    std::uint64_t seed = 1;
};

// Iterated-join simplex with vertices (base, w1*base, ..., (w1...wd)*base),
// integrated fiberwise against the chosen invariant form and then over the torus.
// degree 2 pairs with the Kaehler form on a complex-structure base (geodesic join);
// degree 5 pairs with the odd form on a metric base (straight or geodesic join).
CocycleReport simplex_integrate(int degree, const StructureField& base,
                                std::span<const DiffeoWord> words, JoinRule join, FiberForm form,
                                const QuadratureSpec& quad, const GridSpec& grids,
                                Exec exec = Exec::OpenMP);

// l^1 chains over the free group on two abstract generators f, g; capital letters
// denote inverses.  Example word: "fgF" = f · g · f^{-1}.
struct L1Term {
    double a = 0.0;
    std::string h;
    std::string k;
};

struct L1Chain {
    std::vector<L1Term> terms;
    std::string truncation_note;
};

struct CycleCheck {
    bool is_cycle = false;
    double l1_norm = 0.0;
    // leftover boundary coefficients by reduced word, sorted; empty iff is_cycle
    std::vector<std::pair<std::string, double>> residual;
};

// Formal boundary sum a_j([h_j k_j] - [h_j] - [k_j]) in the free-group chain
// complex, identity terms dropped.
CycleCheck check_cycle(const L1Chain& chain);

std::string reduce_fg_word(std::string_view word);
DiffeoWord substitute(std::string_view word, const DiffeoWord& f, const DiffeoWord& g);

struct Certificate {
    double pairing = 0.0;
    double accumulated_error = 0.0;
    double margin = 0.0;  // |pairing| - accumulated_error
    std::string verdict;  // "non-amenability certified" or "inconclusive"
    std::vector<double> term_values;
};

// pairing = sum_j a_j * delta2(h_j(f,g), k_j(f,g)).  The verdict certifies only
// when the pairing clears the accumulated quadrature error; it never claims
// amenability.
Certificate l1_certificate(const L1Chain& chain, const DiffeoWord& f, const DiffeoWord& g,
                           const StructureField& j0, const GridSpec& grids,
                           Exec exec = Exec::OpenMP);

// Max |pairing shift| when f and g are perturbed by seeded shears of amplitude
// eps.  An empirical probe of openness, not a bound.
double sensitivity_probe(const DiffeoWord& f, const DiffeoWord& g, const L1Chain& chain,
                         const StructureField& j0, double eps, std::uint64_t seed,
                         const GridSpec& grids, Exec exec = Exec::OpenMP);

}  // namespace diffcoh
