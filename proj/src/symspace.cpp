#include "diffcoh/symspace.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>

#include "diffcoh/errors.hpp"

namespace diffcoh {

namespace {

void require(bool ok, const char* what) {
    if (!ok) throw domain_error(what);
}

double det_small(const Eigen::MatrixXd& m) { return m.determinant(); }

}  // namespace

SpdPoint::SpdPoint(Eigen::MatrixXd m) : mat(std::move(m)) {
    require(mat.rows() == mat.cols() && mat.rows() >= 1, "SpdPoint: square matrix required");
    require(is_symmetric(mat), "SpdPoint: matrix is not symmetric");
    if (min_eigenvalue(mat) <= 0.0) throw domain_error("SpdPoint: matrix is not positive definite");
    double d = det_small(mat);
    if (std::abs(d - 1.0) > 1e-10 * std::max(1.0, std::abs(d))) {
        std::ostringstream os;
        os << "SpdPoint: determinant " << d << " is not 1";
        throw domain_error(os.str());
    }
}

SpdPoint SpdPoint::identity(int n) { return SpdPoint(Eigen::MatrixXd::Identity(n, n)); }

bool is_spd_tangent(const SpdPoint& g, const Eigen::MatrixXd& h, double tol) {
    if (!is_symmetric(h, tol)) return false;
    double tr = (g.mat.ldlt().solve(h)).trace();
    return std::abs(tr) <= tol * (1.0 + h.cwiseAbs().maxCoeff());
}

SiegelJ::SiegelJ(Eigen::MatrixXd m) : mat(std::move(m)) {
    require(mat.rows() == mat.cols() && mat.rows() % 2 == 0, "SiegelJ: even-sized square matrix required");
    const int n2 = static_cast<int>(mat.rows());
    Eigen::MatrixXd omega = standard_omega(n2 / 2);
    double scale = 1.0 + mat.cwiseAbs().maxCoeff();
    if ((mat * mat + Eigen::MatrixXd::Identity(n2, n2)).cwiseAbs().maxCoeff() > 1e-8 * scale * scale)
        throw domain_error("SiegelJ: J^2 != -I");
    if ((mat.transpose() * omega * mat - omega).cwiseAbs().maxCoeff() > 1e-8 * scale * scale)
        throw domain_error("SiegelJ: J does not preserve omega");
    Eigen::MatrixXd g = mat.transpose() * omega;
    if (!is_symmetric(g, 1e-8) || min_eigenvalue(0.5 * (g + g.transpose())) <= 0.0)
        throw domain_error("SiegelJ: omega(J.,.) is not positive definite");
}

SiegelJ SiegelJ::standard(int n) { return SiegelJ(standard_omega(n)); }

bool is_j_tangent(const SiegelJ& j, const Eigen::MatrixXd& a, double tol) {
    const int n2 = static_cast<int>(j.mat.rows());
    if (a.rows() != n2 || a.cols() != n2) return false;
    double scale = 1.0 + a.cwiseAbs().maxCoeff();
    if ((a * j.mat + j.mat * a).cwiseAbs().maxCoeff() > tol * scale) return false;
    Eigen::MatrixXd omega = standard_omega(n2 / 2);
    // omega-self-adjoint: A^T omega + omega A = 0.
    return (a.transpose() * omega + omega * a).cwiseAbs().maxCoeff() <= tol * scale;
}

SpdPoint geodesic_spd(const SpdPoint& g1, const SpdPoint& g2, double t) {
    Eigen::MatrixXd r1 = spd_power(g1.mat, 0.5);
    Eigen::MatrixXd r1i = spd_power(g1.mat, -0.5);
    Eigen::MatrixXd mid = spd_power(r1i * g2.mat * r1i, t);
    Eigen::MatrixXd out = r1 * mid * r1;
    return SpdPoint(0.5 * (out + out.transpose()));
}

Eigen::MatrixXd straight_segment(const SpdPoint& g1, const SpdPoint& g2, double t) {
    return t * g1.mat + (1.0 - t) * g2.mat;
}

SiegelJ geodesic_siegel(const SiegelJ& j1, const SiegelJ& j2, double t) {
    require(j1.mat.rows() == j2.mat.rows(), "geodesic_siegel: size mismatch");
    Eigen::MatrixXd omega = standard_omega(j1.n());
    SpdPoint G1(j1.mat.transpose() * omega), G2(j2.mat.transpose() * omega);
    SpdPoint Gt = geodesic_spd(G1, G2, t);
    return SiegelJ(omega * Gt.mat);
}

double kaehler_form(const SiegelJ& j, const JTangent& a, const JTangent& b) {
    if (!is_j_tangent(j, a.mat) || !is_j_tangent(j, b.mat))
        throw domain_error("kaehler_form: arguments are not tangent at J");
    return (j.mat * a.mat * b.mat).trace();
}

bool odd_form_vanishes_identically(int N, int degree) {
    if (degree % 2 == 0) return true;
    return degree > N * (N + 1) / 2 - 1;
}

const PermTable& permutations(int degree) {
    static std::map<int, PermTable> cache;
    static std::mutex mu;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(degree);
    if (it != cache.end()) return it->second;
    require(degree >= 1 && degree <= 6, "permutations: degree must be 1..6");
    PermTable t;
    t.degree = degree;
    std::array<int, 6> p{};
    for (int i = 0; i < degree; ++i) p[i] = i;
    do {
        int inv = 0;
        for (int i = 0; i < degree; ++i)
            for (int k = i + 1; k < degree; ++k)
                if (p[i] > p[k]) ++inv;
        t.perm.push_back(p);
        t.sign.push_back(inv % 2 == 0 ? 1.0 : -1.0);
    } while (std::next_permutation(p.begin(), p.begin() + degree));
    return cache.emplace(degree, std::move(t)).first->second;
}

double alternating_trace(const Eigen::MatrixXd& prefix, std::span<const Eigen::MatrixXd> m) {
    const int d = static_cast<int>(m.size());
    const PermTable& tab = permutations(d);
    double acc = 0.0;
    Eigen::MatrixXd prod;
    for (std::size_t s = 0; s < tab.perm.size(); ++s) {
        prod = prefix * m[tab.perm[s][0]];
        for (int i = 1; i < d; ++i) prod *= m[tab.perm[s][i]];
        acc += tab.sign[s] * prod.trace();
    }
    double fact = 1.0;
    for (int i = 2; i <= d; ++i) fact *= i;
    return acc / fact;
}

double borel_odd_form(const Eigen::MatrixXd& g, std::span<const Eigen::MatrixXd> h) {
    const int d = static_cast<int>(h.size());
    require(d >= 1 && d <= 6, "borel_odd_form: 1..6 arguments supported");
    if (!is_symmetric(g) || min_eigenvalue(g) <= 0.0)
        throw domain_error("borel_odd_form: base point must be symmetric positive definite");
    Eigen::MatrixXd gi = g.inverse();
    std::vector<Eigen::MatrixXd> m(h.size());
    for (std::size_t i = 0; i < h.size(); ++i) {
        if (h[i].rows() != g.rows() || h[i].cols() != g.cols())
            throw domain_error("borel_odd_form: tangent size mismatch");
        m[i] = gi * h[i];
    }
    return alternating_trace(Eigen::MatrixXd::Identity(g.rows(), g.cols()), m);
}

double hyp_distance(const std::complex<double>& z, const std::complex<double>& w) {
    double num = std::norm(z - w);
    double den = 2.0 * z.imag() * w.imag();
    if (z.imag() <= 0.0 || w.imag() <= 0.0) throw domain_error("hyp_distance: points must have v > 0");
    return std::acosh(1.0 + num / den);
}

namespace {

// Unit initial direction (Euclidean) of the geodesic from a toward b.
// Geodesics are vertical lines or semicircles centered on the real axis.
std::array<double, 2> geodesic_dir(const std::complex<double>& a, const std::complex<double>& b) {
    double du = b.real() - a.real();
    double scale = std::abs(a) + std::abs(b) + 1.0;
    if (std::abs(du) <= 1e-14 * scale) {
        return {0.0, b.imag() >= a.imag() ? 1.0 : -1.0};
    }
    double c = (std::norm(a) - std::norm(b)) / (2.0 * (a.real() - b.real()));
    double ta = std::atan2(a.imag(), a.real() - c);
    double tb = std::atan2(b.imag(), b.real() - c);
    double s = (tb > ta) ? 1.0 : -1.0;  // direction of increasing angle toward b
    return {-s * std::sin(ta), s * std::cos(ta)};
}

double angle_between(const std::array<double, 2>& p, const std::array<double, 2>& q) {
    double dot = p[0] * q[0] + p[1] * q[1];
    double cross = p[0] * q[1] - p[1] * q[0];
    return std::atan2(std::abs(cross), dot);  // in [0, pi]
}

}  // namespace

double hyp_area_signed(const std::complex<double>& z1, const std::complex<double>& z2,
                       const std::complex<double>& z3) {
    if (z1.imag() <= 0.0 || z2.imag() <= 0.0 || z3.imag() <= 0.0)
        throw domain_error("hyp_area_signed: vertices must lie in the upper half-plane");
    double scale = std::abs(z1) + std::abs(z2) + std::abs(z3) + 1.0;
    if (std::abs(z1 - z2) <= 1e-14 * scale || std::abs(z2 - z3) <= 1e-14 * scale ||
        std::abs(z1 - z3) <= 1e-14 * scale)
        return 0.0;

    auto d12 = geodesic_dir(z1, z2), d13 = geodesic_dir(z1, z3);
    auto d21 = geodesic_dir(z2, z1), d23 = geodesic_dir(z2, z3);
    auto d31 = geodesic_dir(z3, z1), d32 = geodesic_dir(z3, z2);
    double alpha = angle_between(d12, d13);
    double beta = angle_between(d21, d23);
    double gamma = angle_between(d31, d32);
    double cross = d12[0] * d13[1] - d12[1] * d13[0];
    double defect = std::numbers::pi - alpha - beta - gamma;
    if (defect < 0.0) defect = 0.0;  // roundoff guard for near-degenerate triangles
    return (cross >= 0.0 ? 1.0 : -1.0) * defect;
}

HalfPlanePoint j_to_halfplane(const SiegelJ& j) {
    require(j.n() == 1, "j_to_halfplane: n = 1 required");
    Eigen::Matrix2d omega;
    omega << 0, 1, -1, 0;
    Eigen::Matrix2d g = j.mat.transpose() * omega;  // (1/v) [[u^2+v^2, u],[u, 1]]
    double v = 1.0 / g(1, 1);
    double u = g(0, 1) * v;
    if (!(v > 0.0)) throw numeric_error("j_to_halfplane: chart broke positivity");
    return {u, v};
}

SiegelJ halfplane_to_j(const HalfPlanePoint& p) {
    require(p.v > 0.0, "halfplane_to_j: v > 0 required");
    Eigen::Matrix2d g;
    g << (p.u * p.u + p.v * p.v) / p.v, p.u / p.v, p.u / p.v, 1.0 / p.v;
    Eigen::Matrix2d omega;
    omega << 0, 1, -1, 0;
    return SiegelJ(omega * g);
}

HalfPlanePoint mobius(const Eigen::Matrix2d& m, const HalfPlanePoint& z) {
    require(m.determinant() > 0.0, "mobius: positive determinant required");
    std::complex<double> zz(z.u, z.v);
    std::complex<double> w = (m(0, 0) * zz + m(0, 1)) / (m(1, 0) * zz + m(1, 1));
    return {w.real(), w.imag()};
}

HalfPlanePoint halfplane_pushforward(const Eigen::Matrix2d& a, const HalfPlanePoint& z) {
    Eigen::Matrix2d ait = a.inverse().transpose();
    return mobius(ait, z);
}

}  // namespace diffcoh
