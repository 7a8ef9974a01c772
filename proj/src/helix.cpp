#include "diffcoh/helix.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include "diffcoh/errors.hpp"

namespace diffcoh {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void require_zero_flux(const FourierField& x, const char* who) {
    if (x.dim() != 3 || x.rank() != Rank::Vector)
        throw domain_error(std::string(who) + " expects a vector field on T^3");
    const std::array<int, 3> zero{0, 0, 0};
    const double tol = 1e-12 * (1.0 + x.max_abs_coeff());
    for (int a = 0; a < 3; ++a) {
        if (std::abs(x.at(a, zero)) > tol)
            throw harmonic_obstruction(std::string(who) + ": field has nonzero flux (mean of component " +
                                       std::to_string(a) + " is not zero)");
    }
}

// Integral of the dot product of two real band-limited vector fields:
// sum over the common coefficient box of u_k . conj(v_k).
double l2_pairing(const FourierField& u, const FourierField& v) {
    const int b = std::min(u.bandlimit(), v.bandlimit());
    std::complex<double> acc = 0.0;
    std::array<int, 3> k{};
    for (int a = 0; a < 3; ++a)
        for (k[0] = -b; k[0] <= b; ++k[0])
            for (k[1] = -b; k[1] <= b; ++k[1])
                for (k[2] = -b; k[2] <= b; ++k[2])
                    acc += u.at(a, k) * std::conj(v.at(a, k));
    return acc.real();
}

// Gauss-Legendre nodes/weights on [0, 1].
void gauss01(int n, std::vector<double>& nodes, std::vector<double>& weights) {
    nodes.resize(n);
    weights.resize(n);
    for (int i = 0; i < n; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int j = 2; j <= n; ++j) {
                double p2 = ((2 * j - 1) * x * p1 - (j - 1) * p0) / j;
                p0 = p1;
                p1 = p2;
            }
            pp = n * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / pp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        nodes[i] = 0.5 * (1.0 - x);
        weights[i] = 1.0 / ((1.0 - x * x) * pp * pp);
    }
}

using Q4 = Eigen::Vector4d;

Q4 qmul(const Q4& a, const Q4& b) {
    return Q4(a(0) * b(0) - a(1) * b(1) - a(2) * b(2) - a(3) * b(3),
              a(0) * b(1) + a(1) * b(0) + a(2) * b(3) - a(3) * b(2),
              a(0) * b(2) - a(1) * b(3) + a(2) * b(0) + a(3) * b(1),
              a(0) * b(3) + a(1) * b(2) - a(2) * b(1) + a(3) * b(0));
}

const Q4 kQi(0, 1, 0, 0), kQj(0, 0, 1, 0), kQk(0, 0, 0, 1);

// Volume 3-form of S^3 evaluated on tangent vectors: rows (q, u, v, w).
double nu3(const Q4& q, const Q4& u, const Q4& v, const Q4& w) {
    Eigen::Matrix4d m;
    m.row(0) = q;
    m.row(1) = u;
    m.row(2) = v;
    m.row(3) = w;
    return m.determinant();
}

// Inverse stereographic chart R^3 -> S^3 (misses only q = (-1,0,0,0)).
Q4 chart(const Eigen::Vector3d& p) {
    const double s = 1.0 + p.squaredNorm();
    return Q4((1.0 - p.squaredNorm()) / s, 2.0 * p(0) / s, 2.0 * p(1) / s, 2.0 * p(2) / s);
}

// Analytic chart Jacobian column d q / d p_a.
Q4 chart_deriv(const Eigen::Vector3d& p, int a) {
    const double s = 1.0 + p.squaredNorm();
    Q4 d;
    d(0) = -4.0 * p(a) / (s * s);
    for (int m = 0; m < 3; ++m)
        d(m + 1) = 2.0 * ((m == a ? 1.0 : 0.0) / s - 2.0 * p(m) * p(a) / (s * s));
    return d;
}

// Chart components of mu = (1/2) <iq, dq>.
double mu_comp(const Eigen::Vector3d& p, int a) {
    return 0.5 * qmul(kQi, chart(p)).dot(chart_deriv(p, a));
}

}  // namespace

double helicity_pair(const DivFreeField& x, const DivFreeField& y) {
    require_zero_flux(x.X, "helicity");
    require_zero_flux(y.X, "helicity");
    FourierField a = curl_inverse(x.X);
    return l2_pairing(a, y.X);
}

double helicity(const DivFreeField& x) { return helicity_pair(x, x); }

double cartan_omega(const DivFreeField& x, const DivFreeField& y, const DivFreeField& z) {
    require_zero_flux(x.X, "cartan form");
    require_zero_flux(y.X, "cartan form");
    return helicity_pair(make_divfree(bracket(x.X, y.X)), z);
}

double evaluation_3form(const FourierField& x, const FourierField& y, const FourierField& z) {
    if (x.dim() != 3 || y.dim() != 3 || z.dim() != 3 || x.rank() != Rank::Vector ||
        y.rank() != Rank::Vector || z.rank() != Rank::Vector)
        throw domain_error("evaluation form expects vector fields on T^3");
    static const int perm[6][3] = {{0, 1, 2}, {1, 2, 0}, {2, 0, 1}, {0, 2, 1}, {2, 1, 0}, {1, 0, 2}};
    double acc = 0.0;
    for (int s = 0; s < 6; ++s) {
        const double sign = s < 3 ? 1.0 : -1.0;
        acc += sign * multiply(multiply(x.component(perm[s][0]), y.component(perm[s][1])),
                               z.component(perm[s][2]))
                          .integrate();
    }
    return acc;
}

Lemma65Result lemma65_check(const DivFreeField& x, const DivFreeField& y, const DivFreeField& z) {
    Lemma65Result r;
    r.omega_eval = evaluation_3form(x.X, y.X, z.X);
    r.cartan_eval = cartan_omega(x, y, z);
    r.ratio = r.omega_eval != 0.0 ? r.cartan_eval / r.omega_eval
                                  : std::numeric_limits<double>::quiet_NaN();
    return r;
}

S3Report s3_checks(int resolution) {
    S3Report rep;

    // Hopf coordinates q = (cos(eta) e^{i xi1}, sin(eta) e^{i xi2}); the metric
    // volume element is cos(eta) sin(eta) d eta d xi1 d xi2.
    const int neta = resolution, nxi = resolution;
    std::vector<double> nodes, weights;
    gauss01(neta, nodes, weights);
    double period = 0.0;
    for (int ie = 0; ie < neta; ++ie) {
        const double eta = nodes[ie] * (std::numbers::pi / 2.0);
        double slice = 0.0;
        for (int i1 = 0; i1 < nxi; ++i1) {
            const double xi1 = kTwoPi * i1 / nxi;
            for (int i2 = 0; i2 < nxi; ++i2) {
                const double xi2 = kTwoPi * i2 / nxi;
                Q4 q(std::cos(eta) * std::cos(xi1), std::cos(eta) * std::sin(xi1),
                     std::sin(eta) * std::cos(xi2), std::sin(eta) * std::sin(xi2));
                slice += nu3(q, qmul(kQi, q), qmul(kQj, q), qmul(kQk, q));
            }
        }
        slice *= (kTwoPi / nxi) * (kTwoPi / nxi);
        period += weights[ie] * (std::numbers::pi / 2.0) * std::cos(eta) * std::sin(eta) * slice;
    }
    rep.volume_period = period;

    // Exactness of the dual 1-form, checked by central differences in the chart.
    const double h = 1e-4;
    double worst = 0.0;
    for (int ip = 0; ip < 50; ++ip) {
        Eigen::Vector3d p;
        for (int a = 0; a < 3; ++a) p(a) = 0.8 * uniform_pm1(mix_seed(0x5f3e1u, ip), a);
        const Q4 q = chart(p);
        for (int a = 0; a < 3; ++a) {
            for (int b = a + 1; b < 3; ++b) {
                Eigen::Vector3d pa1 = p, pa2 = p, pb1 = p, pb2 = p;
                pa1(a) += h;
                pa2(a) -= h;
                pb1(b) += h;
                pb2(b) -= h;
                const double dmu = (mu_comp(pa1, b) - mu_comp(pa2, b)) / (2 * h) -
                                   (mu_comp(pb1, a) - mu_comp(pb2, a)) / (2 * h);
                const double rhs = nu3(q, qmul(kQi, q), chart_deriv(p, a), chart_deriv(p, b));
                worst = std::max(worst, std::abs(dmu - rhs));
            }
        }
    }
    rep.dmu_residual = worst;
    return rep;
}

FourierField linear_pushforward_field(const Eigen::MatrixXi& m, const FourierField& x) {
    if (x.rank() != Rank::Vector) throw domain_error("linear pushforward expects a vector field");
    const int dim = x.dim();
    if (m.rows() != dim || m.cols() != dim)
        throw domain_error("linear pushforward: matrix size does not match the field dimension");
    Eigen::MatrixXd md = m.cast<double>();
    const double det = md.determinant();
    if (std::abs(std::abs(det) - 1.0) > 1e-9)
        throw domain_error("linear pushforward needs a unimodular matrix");
    // Integer inverse-transpose via the adjugate (|det| = 1).
    Eigen::MatrixXd mit = md.inverse().transpose();
    Eigen::MatrixXi miti(dim, dim);
    for (int r = 0; r < dim; ++r)
        for (int c = 0; c < dim; ++c) miti(r, c) = static_cast<int>(std::llround(mit(r, c)));

    const int b = x.bandlimit();
    int bout = 0;
    for (int r = 0; r < dim; ++r) {
        int row = 0;
        for (int c = 0; c < dim; ++c) row += std::abs(miti(r, c)) * b;
        bout = std::max(bout, row);
    }
    FourierField out(dim, Rank::Vector, bout);
    std::vector<int> k(dim), kp(dim);
    const int n = 2 * b + 1;
    std::int64_t total = 1;
    for (int a = 0; a < dim; ++a) total *= n;
    for (std::int64_t idx = 0; idx < total; ++idx) {
        std::int64_t rem = idx;
        for (int a = dim - 1; a >= 0; --a) {
            k[a] = static_cast<int>(rem % n) - b;
            rem /= n;
        }
        for (int r = 0; r < dim; ++r) {
            kp[r] = 0;
            for (int c = 0; c < dim; ++c) kp[r] += miti(r, c) * k[c];
        }
        for (int r = 0; r < dim; ++r) {
            std::complex<double> acc = 0.0;
            for (int c = 0; c < dim; ++c)
                acc += static_cast<double>(m(r, c)) * x.at(c, k);
            out.at(r, kp) = acc;
        }
    }
    return out;
}

HomologyVector asymptotic_cycle(const Isotopy& iso, const std::vector<int>& shape, Exec exec) {
    const int dim = iso.target.dim;
    if (static_cast<int>(shape.size()) != dim) throw domain_error("grid shape rank mismatch");

    // Continuity probe: walk t in small steps at a few points; a step that moves a
    // lift by half a period or more leaves the continuous branch uncertified.
    const int nsteps = 64, nprobe = 8;
    for (int p = 0; p < nprobe; ++p) {
        VecN x(dim);
        for (int a = 0; a < dim; ++a) x(a) = (p + 0.5) / nprobe + 0.13 * a;
        VecN prev = apply_lift(iso.at(0.0), x);
        for (int s = 1; s <= nsteps; ++s) {
            VecN cur = apply_lift(iso.at(static_cast<double>(s) / nsteps), x);
            if ((cur - prev).cwiseAbs().maxCoeff() >= 0.5)
                throw domain_error(
                    "isotopy moves a lift by half a period within one probe step; "
                    "continuity of the lift cannot be certified");
            prev = cur;
        }
    }

    GridField probe(shape, 1);  // for coords() only
    HomologyVector cycle(dim);
    for (int comp = 0; comp < dim; ++comp) {
        cycle(comp) = mean_map(exec, probe.points(), [&](std::int64_t idx) {
            double xs[3];
            probe.coords(idx, xs);
            VecN x(dim);
            for (int a = 0; a < dim; ++a) x(a) = xs[a];
            VecN lifted = apply_lift(iso.target, x);
            return lifted(comp) - x(comp);
        });
    }
    return cycle;
}

double schwartzman_pairing(const Isotopy& iso, const Eigen::VectorXi& z,
                           const std::vector<int>& shape, Exec exec) {
    const int dim = iso.target.dim;
    if (z.size() != dim) throw domain_error("covector size does not match the torus dimension");
    if (static_cast<int>(shape.size()) != dim) throw domain_error("grid shape rank mismatch");
    GridField probe(shape, 1);
    return mean_map(exec, probe.points(), [&](std::int64_t idx) {
        double xs[3];
        probe.coords(idx, xs);
        VecN x(dim);
        for (int a = 0; a < dim; ++a) x(a) = xs[a];
        VecN lifted = apply_lift(iso.target, x);
        double f = 0.0;
        for (int a = 0; a < dim; ++a) f += z(a) * (lifted(a) - x(a));
        return f;
    });
}

}  // namespace diffcoh
