// Small dense-matrix helpers: symmetric eigenfunctions with an eigenvalue floor,
// and fixed-capacity matrix/vector aliases used in hot loops (no heap below 4x4).
#pragma once

#include <Eigen/Dense>

namespace diffcoh {

// Stack-allocated up to 3x3 / 3: torus dimensions are 1..3.
using MatN = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, 3, 3>;
using VecN = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, 3, 1>;

// Hard floor under which an eigenvalue of a "positive" matrix is treated as lost.
inline constexpr double kEigFloor = 1e-14;

bool is_symmetric(const Eigen::MatrixXd& m, double tol = 1e-10);

// m^t for symmetric positive definite m via eigendecomposition.
// Throws numeric_error if an eigenvalue falls at or below kEigFloor.
Eigen::MatrixXd spd_power(const Eigen::MatrixXd& m, double t);

// Smallest eigenvalue of a symmetric matrix.
double min_eigenvalue(const Eigen::MatrixXd& m);

// Standard symplectic form on R^{2n}: block diagonal [[0,1],[-1,0]].
Eigen::MatrixXd standard_omega(int n);

}  // namespace diffcoh
