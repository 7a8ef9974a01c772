// Multilinear alternating functionals on divergence-free vector fields of the
// torus, their Chevalley-Eilenberg defect, and the two-sided curvature pairing
// check on a conformal surface.
#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "diffcoh/torusfield.hpp"

namespace diffcoh {

// Hamiltonian vector field of a stream function f on T^2: X = (f_y, -f_x).
// Divergence-free by construction; the generating function rides along.
DivFreeField hamiltonian_field(const FourierField& f);

// Infinitesimal invariance of the standard symplectic form: L_X omega = 0,
// checked coefficient-wise on the exact band-limited derivative fields.
bool preserves_standard_omega(const DivFreeField& x, double tol = 1e-12);

// Lie derivative of a matrix field along X in the orbit-map orientation:
// (L_X J)^a_b = (d_c X^a) J^c_b - J^a_c (d_b X^c) - X^c d_c J^a_b.
// Exact at band B_X + B_J.
FourierField lie_derivative_field(const FourierField& x, const FourierField& j);

// Odd functional: integral over the torus of the alternating trace of the
// products of M_j = grad X_j + (grad X_j)^adjoint, against the metric volume.
// Flat metric when `metric` is empty (coordinate Jacobians, Lebesgue volume);
// otherwise covariant Jacobians and the e^A area density.  Arity must be odd
// and at least 5.
double psi_odd(const std::optional<ConformalMetric>& metric,
               std::span<const DivFreeField> fields, const std::vector<int>& shape,
               Exec exec = Exec::OpenMP);

// Even functional: integral of the alternating trace of J * prod L_{X_j} J
// against the coordinate volume (the symplectic volume of the standard form).
// Every field must preserve the standard symplectic form.
double phi_even(const FourierField& j, std::span<const DivFreeField> fields,
                const std::vector<int>& shape, Exec exec = Exec::OpenMP);

using LieCocycle = std::function<double(std::span<const DivFreeField>)>;

// Chevalley-Eilenberg differential with trivial coefficients, evaluated on
// arity + 1 fields: sum over i < j of (-1)^{i+j} c([X_i, X_j], ..., with X_i
// and X_j omitted).  Zero (to truncation error) exactly when c is a cocycle.
double ce_defect(const LieCocycle& cocycle, int arity, std::span<const DivFreeField> fields);

struct Identity54Result {
    double lhs = 0.0;
    double rhs = 0.0;
    double residual = 0.0;        // |lhs - rhs| on the fine grid
    double lhs_error = 0.0;       // two-resolution estimates
    double rhs_error = 0.0;
};

// Curvature pairing identity on the conformal torus (e^A metric):
//   integral Tr( J [H_f, J] [H_h, J] ) dArea  ==  -integral K {f, h} dArea
// with H the metric Hessian endomorphism, J the +90-degree rotation of the
// oriented orthonormal frame, K the Gauss curvature and {,} the metric Poisson
// bracket.  Both sides are integrated on both grids of `grids`; an aliasing
// alarm on the conformal factor raises numeric_error.
Identity54Result identity54_check(const ConformalMetric& m, const FourierField& f,
                                  const FourierField& h, const GridSpec& grids,
                                  Exec exec = Exec::OpenMP);

}  // namespace diffcoh
