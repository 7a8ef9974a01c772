// Invariant pairing of divergence-free fields on T^3 (average linking), the
// biinvariant 3-form built from it, its coincidence with the evaluation form,
// closed-form checks on the unit 3-sphere, and torus rotation vectors.
#pragma once

#include <vector>

#include <Eigen/Dense>

#include "diffcoh/diffeo.hpp"
#include "diffcoh/torusfield.hpp"

namespace diffcoh {

// <X, Y> = integral of A . Y with curl A = X, div A = 0, A zero-mean.
// Both fields must have zero flux (zero mean); symmetric in its arguments.
double helicity_pair(const DivFreeField& x, const DivFreeField& y);
double helicity(const DivFreeField& x);

// Biinvariant 3-form <[X, Y], Z> on zero-flux fields.
double cartan_omega(const DivFreeField& x, const DivFreeField& y, const DivFreeField& z);

// Integral of det(X | Y | Z) over T^3 (spectrally exact).
double evaluation_3form(const FourierField& x, const FourierField& y, const FourierField& z);

// Both 3-forms on one triple.  They agree up to one global sign fixed by the
// bracket orientation; the sign is measured, not assumed.  ratio is NaN when
// the evaluation form vanishes.
struct Lemma65Result {
    double omega_eval = 0.0;
    double cartan_eval = 0.0;
    double ratio = 0.0;
};
Lemma65Result lemma65_check(const DivFreeField& x, const DivFreeField& y, const DivFreeField& z);

// Self-contained unit-sphere checks: the volume integral of the right-invariant
// frame determinant in Hopf coordinates (exactly the volume 2*pi^2 of S^3), and
// the exactness defect max |d(mu) - nu(X, ., .)| for X = iq, mu = (1/2)<iq, dq>,
// finite-differenced in a stereographic chart.
struct S3Report {
    double volume_period = 0.0;
    double dmu_residual = 0.0;
};
S3Report s3_checks(int resolution = 64);

// Pushforward of a vector field by an integer unimodular torus map:
// (m* X)(x) = m . X(m^{-1} x), exact on coefficients.
FourierField linear_pushforward_field(const Eigen::MatrixXi& m, const FourierField& x);

// Rotation vector of an isotopy: component k is the mean of lift_k(x) - x_k.
// The lift is continued letter by letter from the identity; a probe walk
// rejects isotopies whose steps are too large to certify continuity.
using HomologyVector = Eigen::VectorXd;
HomologyVector asymptotic_cycle(const Isotopy& iso, const std::vector<int>& shape,
                                Exec exec = Exec::OpenMP);

// Mean of the lifted phase gain z . (lift(x) - x); equals <asymptotic_cycle, z>.
double schwartzman_pairing(const Isotopy& iso, const Eigen::VectorXi& z,
                           const std::vector<int>& shape, Exec exec = Exec::OpenMP);

}  // namespace diffcoh
