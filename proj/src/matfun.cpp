#include "diffcoh/matfun.hpp"

#include <cmath>
#include <sstream>

#include "diffcoh/errors.hpp"

namespace diffcoh {

bool is_symmetric(const Eigen::MatrixXd& m, double tol) {
    return (m - m.transpose()).cwiseAbs().maxCoeff() <= tol * (1.0 + m.cwiseAbs().maxCoeff());
}

Eigen::MatrixXd spd_power(const Eigen::MatrixXd& m, double t) {
    if (!is_symmetric(m))
        throw domain_error("spd_power: matrix is not symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    if (es.info() != Eigen::Success)
        throw numeric_error("spd_power: eigendecomposition failed");
    Eigen::VectorXd lam = es.eigenvalues();
    if (lam.minCoeff() <= kEigFloor) {
        std::ostringstream os;
        os << "spd_power: eigenvalue " << lam.minCoeff() << " at or below floor " << kEigFloor;
        throw numeric_error(os.str());
    }
    Eigen::VectorXd powed(lam.size());
    for (int i = 0; i < lam.size(); ++i) powed[i] = std::pow(lam[i], t);
    return es.eigenvectors() * powed.asDiagonal() * es.eigenvectors().transpose();
}

double min_eigenvalue(const Eigen::MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

Eigen::MatrixXd standard_omega(int n) {
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    for (int i = 0; i < n; ++i) {
        w(2 * i, 2 * i + 1) = 1.0;
        w(2 * i + 1, 2 * i) = -1.0;
    }
    return w;
}

}  // namespace diffcoh
