// Fiberwise geometry: the symmetric space of unit-determinant positive matrices,
// the Siegel space of compatible complex structures on (R^{2n}, omega), and the
// hyperbolic upper half-plane that realizes the n = 1 fiber.
//
// Conventions pinned here (and nowhere else):
//   * omega is the standard block form [[0,1],[-1,0]] x n; the standard structure
//     J0 = omega itself (then omega(J0 u, v) = <u, v>).
//   * A compatible J is charted by G = J^T * omega (symmetric positive, symplectic,
//     det 1); for n = 1, G = (1/v) [[u^2+v^2, u],[u, 1]] defines the half-plane
//     point (u, v), with J0 at (0, 1).
//   * Pushing J forward through a linear map A acts on the chart as the Moebius
//     action of A^{-T}.
//   * Signed areas are counterclockwise-positive (angle-defect formula; the sign is
//     the orientation of the initial geodesic directions).
#pragma once

#include <array>
#include <complex>
#include <span>
#include <vector>

#include "diffcoh/matfun.hpp"

namespace diffcoh {

inline constexpr const char* kConventionTag = "chart G=J^T*omega; ccw-positive; v1";

// Unit-determinant symmetric positive definite matrix (a Riemannian metric fiber).
struct SpdPoint {
    Eigen::MatrixXd mat;
    explicit SpdPoint(Eigen::MatrixXd m);  // validates symmetry, positivity, det = 1
    static SpdPoint identity(int n);
    int size() const { return static_cast<int>(mat.rows()); }
};

// Tangent at an SpdPoint: symmetric, trace(g^{-1} h) = 0 (det-1 slice).
struct SymTangent {
    Eigen::MatrixXd mat;
};
bool is_spd_tangent(const SpdPoint& g, const Eigen::MatrixXd& h, double tol = 1e-10);

// omega-compatible complex structure: J^2 = -I, J^T omega J = omega, J^T omega > 0.
struct SiegelJ {
    Eigen::MatrixXd mat;
    explicit SiegelJ(Eigen::MatrixXd m);   // validates all three invariants
    static SiegelJ standard(int n);        // = standard_omega(n)
    int n() const { return static_cast<int>(mat.rows()) / 2; }
};

// Tangent at a SiegelJ: anticommutes with J and is omega-self-adjoint.
struct JTangent {
    Eigen::MatrixXd mat;
};
bool is_j_tangent(const SiegelJ& j, const Eigen::MatrixXd& a, double tol = 1e-10);

struct HalfPlanePoint {
    double u = 0.0, v = 1.0;  // v > 0
};

// Geodesic between unit-determinant positive matrices:
//   g1^{1/2} (g1^{-1/2} g2 g1^{-1/2})^t g1^{1/2};  endpoints at t = 0 (g1), t = 1 (g2).
SpdPoint geodesic_spd(const SpdPoint& g1, const SpdPoint& g2, double t);

// Affine segment t*g1 + (1-t)*g2 in the positive cone.  Leaves the det-1 slice
// (determinant generally > 1), hence returns a plain matrix, not an SpdPoint.
Eigen::MatrixXd straight_segment(const SpdPoint& g1, const SpdPoint& g2, double t);

// Geodesic in Siegel space through the positive-symplectic chart G = J^T omega:
// take the positive-matrix geodesic between G1, G2 (it stays symplectic) and map
// back via J = omega * G.
SiegelJ geodesic_siegel(const SiegelJ& j1, const SiegelJ& j2, double t);

// Invariant two-form on Siegel space: Tr(J A B) on tangents at J.
// (At n = 1 this is exactly twice the hyperbolic area form under the chart.)
double kaehler_form(const SiegelJ& j, const JTangent& a, const JTangent& b);

// Odd-degree invariant form on the positive cone: the fully antisymmetrized trace
//   (1/d!) sum_sigma sgn(sigma) Tr( g^{-1} h_{sigma(1)} ... g^{-1} h_{sigma(d)} ),
// nonzero only for odd d (5, 9, ...) small enough for the fiber dimension.
double borel_odd_form(const Eigen::MatrixXd& g, std::span<const Eigen::MatrixXd> h);

// Degrees d for which the form is identically zero on N x N fibers
// (even d, or d exceeding the fiber dimension N(N+1)/2 - 1).
bool odd_form_vanishes_identically(int N, int degree);

// Signed area of the geodesic triangle (z1, z2, z3) in the upper half-plane:
// orientation * (pi - alpha - beta - gamma).  |result| < pi; degenerate -> 0.
double hyp_area_signed(const std::complex<double>& z1, const std::complex<double>& z2,
                       const std::complex<double>& z3);

double hyp_distance(const std::complex<double>& z, const std::complex<double>& w);

// n = 1 chart and its inverse.
HalfPlanePoint j_to_halfplane(const SiegelJ& j);
SiegelJ halfplane_to_j(const HalfPlanePoint& p);

// Moebius action z -> (az + b)/(cz + d) of a real 2x2 matrix with positive det.
HalfPlanePoint mobius(const Eigen::Matrix2d& m, const HalfPlanePoint& z);

// Chart image of the pushforward A J A^{-1} for A in SL(2,R): Moebius by A^{-T}.
HalfPlanePoint halfplane_pushforward(const Eigen::Matrix2d& a, const HalfPlanePoint& z);

// Permutations of {0..d-1} with parities, generated once per degree (d <= 6).
struct PermTable {
    std::vector<std::array<int, 6>> perm;
    std::vector<double> sign;
    int degree = 0;
};
const PermTable& permutations(int degree);

// (1/d!) sum_sigma sgn(sigma) Tr( prefix * m[sigma(0)] * ... * m[sigma(d-1)] ).
// Pass the identity as prefix for a plain alternating trace.
double alternating_trace(const Eigen::MatrixXd& prefix, std::span<const Eigen::MatrixXd> m);

}  // namespace diffcoh
