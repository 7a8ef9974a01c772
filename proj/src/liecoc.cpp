#include "diffcoh/liecoc.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "diffcoh/errors.hpp"
#include "diffcoh/symspace.hpp"

namespace diffcoh {

namespace {

// Jacobian matrix field (d X)^a_b = d_b X^a at the field's own band (exact).
FourierField coordinate_jacobian(const FourierField& x) {
    const int dim = x.dim();
    FourierField out(dim, Rank::Matrix, x.bandlimit());
    for (int a = 0; a < dim; ++a) {
        for (int b = 0; b < dim; ++b) {
            FourierField d = x.component(a).derivative(b);
            std::copy(d.raw().begin(), d.raw().end(),
                      out.raw().begin() + static_cast<std::size_t>(a * dim + b) * out.cube_size());
        }
    }
    return out;
}

int common_dim(std::span<const DivFreeField> fields, const char* what) {
    if (fields.empty()) throw domain_error(std::string(what) + ": no fields given");
    const int dim = fields[0].X.dim();
    for (const auto& f : fields)
        if (f.X.dim() != dim) throw domain_error(std::string(what) + ": mixed field dimensions");
    return dim;
}

}  // namespace

DivFreeField hamiltonian_field(const FourierField& f) {
    if (f.rank() != Rank::Scalar || f.dim() != 2)
        throw domain_error("hamiltonian_field expects a scalar field on T^2");
    FourierField x(2, Rank::Vector, f.bandlimit());
    FourierField fy = f.derivative(1);
    FourierField fx = f.derivative(0);
    std::copy(fy.raw().begin(), fy.raw().end(), x.raw().begin());
    for (std::size_t i = 0; i < fx.raw().size(); ++i) x.raw()[x.cube_size() + i] = -fx.raw()[i];
    DivFreeField out = make_divfree(std::move(x));
    out.hamiltonian = f;
    return out;
}

bool preserves_standard_omega(const DivFreeField& x, double tol) {
    const int dim = x.X.dim();
    if (dim % 2 != 0) throw domain_error("symplectic check needs an even-dimensional torus");
    if (x.X.rank() != Rank::Vector) throw domain_error("symplectic check expects a vector field");
    Eigen::MatrixXd omega = standard_omega(dim / 2);
    // Roundoff in the input coefficients is amplified by the derivative scale,
    // so the comparison is relative to the largest derivative coefficient.
    double scale = 0.0;
    for (int c = 0; c < dim; ++c)
        for (int a = 0; a < dim; ++a)
            scale = std::max(scale, x.X.component(c).derivative(a).max_abs_coeff());
    // Constant form: (L_X omega)_{ab} = omega_{cb} d_a X^c + omega_{ac} d_b X^c.
    for (int a = 0; a < dim; ++a) {
        for (int b = a + 1; b < dim; ++b) {
            FourierField entry(dim, Rank::Scalar, x.X.bandlimit());
            for (int c = 0; c < dim; ++c) {
                if (omega(c, b) != 0.0)
                    entry = field_sum(entry, field_scaled(x.X.component(c).derivative(a), omega(c, b)));
                if (omega(a, c) != 0.0)
                    entry = field_sum(entry, field_scaled(x.X.component(c).derivative(b), omega(a, c)));
            }
            if (entry.max_abs_coeff() > tol * (1.0 + scale)) return false;
        }
    }
    return true;
}

FourierField lie_derivative_field(const FourierField& x, const FourierField& j) {
    if (x.rank() != Rank::Vector || j.rank() != Rank::Matrix)
        throw domain_error("lie_derivative_field expects a vector field and a matrix field");
    if (x.dim() != j.dim()) throw domain_error("lie_derivative_field: dimension mismatch");
    const int dim = x.dim();
    const int band = x.bandlimit() + j.bandlimit();
    FourierField out(dim, Rank::Matrix, band);
    for (int a = 0; a < dim; ++a) {
        for (int b = 0; b < dim; ++b) {
            FourierField acc(dim, Rank::Scalar, band);
            for (int c = 0; c < dim; ++c) {
                acc = field_sum(acc, multiply(x.component(a).derivative(c), j.component(c * dim + b)));
                acc = field_sum(acc, field_scaled(multiply(j.component(a * dim + c), x.component(c).derivative(b)), -1.0));
                acc = field_sum(acc, field_scaled(multiply(x.component(c), j.component(a * dim + b).derivative(c)), -1.0));
            }
            std::copy(acc.raw().begin(), acc.raw().end(),
                      out.raw().begin() + static_cast<std::size_t>(a * dim + b) * out.cube_size());
        }
    }
    return out;
}

double psi_odd(const std::optional<ConformalMetric>& metric,
               std::span<const DivFreeField> fields, const std::vector<int>& shape, Exec exec) {
    const int n = static_cast<int>(fields.size());
    if (n < 5 || n % 2 == 0) throw domain_error("odd functional needs odd arity >= 5");
    const int dim = common_dim(fields, "odd functional");
    if (metric && dim != 2) throw domain_error("conformal metrics live on T^2");
    if (static_cast<int>(shape.size()) != dim) throw domain_error("grid shape rank mismatch");

    std::vector<GridField> m;
    m.reserve(n);
    for (const auto& f : fields)
        m.push_back(metric ? metric->covariant_jacobian(f.X, shape)
                           : sample(coordinate_jacobian(f.X), shape));
    std::optional<GridField> dens;
    if (metric) dens = metric->area_density(shape);

    const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(dim, dim);
    return mean_map(exec, m[0].points(), [&](std::int64_t idx) {
        std::vector<Eigen::MatrixXd> ms(n);
        for (int j = 0; j < n; ++j) {
            Eigen::MatrixXd d = m[j].matrix_at(idx, dim);
            // The metric adjoint of an endomorphism under a conformal metric is the
            // plain transpose: the scalar factors of g and g^{-1} cancel.
            ms[j] = d + d.transpose();
        }
        double v = alternating_trace(eye, ms);
        return dens ? v * dens->value(0, idx) : v;
    });
}

double phi_even(const FourierField& j, std::span<const DivFreeField> fields,
                const std::vector<int>& shape, Exec exec) {
    const int n = static_cast<int>(fields.size());
    if (n < 2 || n % 2 != 0) throw domain_error("even functional needs even arity >= 2");
    const int dim = common_dim(fields, "even functional");
    if (j.rank() != Rank::Matrix || j.dim() != dim)
        throw domain_error("even functional expects a matrix field matching the fields' dimension");
    if (static_cast<int>(shape.size()) != dim) throw domain_error("grid shape rank mismatch");
    for (const auto& f : fields)
        if (!preserves_standard_omega(f))
            throw domain_error("even functional: a field fails to preserve the standard symplectic form");

    GridField jg = sample(j, shape);
    std::vector<GridField> lg;
    lg.reserve(n);
    for (const auto& f : fields) lg.push_back(sample(lie_derivative_field(f.X, j), shape));

    return mean_map(exec, jg.points(), [&](std::int64_t idx) {
        Eigen::MatrixXd jpt = jg.matrix_at(idx, dim);
        std::vector<Eigen::MatrixXd> ls(n);
        for (int i = 0; i < n; ++i) ls[i] = lg[i].matrix_at(idx, dim);
        return alternating_trace(jpt, ls);
    });
}

double ce_defect(const LieCocycle& cocycle, int arity, std::span<const DivFreeField> fields) {
    const int n = static_cast<int>(fields.size());
    if (n != arity + 1) throw domain_error("differential defect needs arity + 1 fields");
    common_dim(fields, "differential defect");
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            std::vector<DivFreeField> args;
            args.reserve(arity);
            args.push_back(make_divfree(bracket(fields[i].X, fields[j].X)));
            for (int k = 0; k < n; ++k)
                if (k != i && k != j) args.push_back(fields[k]);
            const double sign = ((i + j) % 2 == 0) ? 1.0 : -1.0;
            acc += sign * cocycle(args);
        }
    }
    return acc;
}

Identity54Result identity54_check(const ConformalMetric& m, const FourierField& f,
                                  const FourierField& h, const GridSpec& grids, Exec exec) {
    if (f.rank() != Rank::Scalar || h.rank() != Rank::Scalar || f.dim() != 2 || h.dim() != 2)
        throw domain_error("identity check expects scalar fields on T^2");

    // +90-degree rotation of the oriented orthonormal frame; the conformal factor
    // cancels, so the endomorphism is the same at every point.
    Eigen::Matrix2d rot;
    rot << 0.0, -1.0, 1.0, 0.0;

    auto lhs_on = [&](const std::vector<int>& shape) {
        GridField hf = m.hessian(f, shape);
        GridField hh = m.hessian(h, shape);
        GridField dens = m.area_density(shape);
        return mean_map(exec, dens.points(), [&](std::int64_t idx) {
            Eigen::Matrix2d a = hf.matrix_at(idx, 2);
            Eigen::Matrix2d b = hh.matrix_at(idx, 2);
            Eigen::Matrix2d ca = a * rot - rot * a;
            Eigen::Matrix2d cb = b * rot - rot * b;
            return (rot * ca * cb).trace() * dens.value(0, idx);
        });
    };
    auto rhs_on = [&](const std::vector<int>& shape) {
        GridField k = m.curvature(shape);
        GridField pb = m.poisson(f, h, shape);
        GridField dens = m.area_density(shape);
        return mean_map(exec, dens.points(), [&](std::int64_t idx) {
            return -k.value(0, idx) * pb.value(0, idx) * dens.value(0, idx);
        });
    };

    // Aliasing alarm: the conformal factor (and its reciprocal, which enters the
    // Hessian endomorphism and the curvature) must be resolved on the fine grid,
    // which is where the reported values are evaluated.  Coarse-grid aliasing is
    // legitimate and shows up in the two-grid error estimates instead.
    {
        GridField dens = m.area_density(grids.fine);
        GridField curv = m.curvature(grids.fine);
        if (spectral_tail_fraction(dens, 0) > 1e-9 || spectral_tail_fraction(curv, 0) > 1e-9)
            throw numeric_error("conformal factor is under-resolved on the requested grid (aliasing)");
    }

    Refined lhs = refined_value(grids, lhs_on);
    Refined rhs = refined_value(grids, rhs_on);
    Identity54Result out;
    out.lhs = lhs.value;
    out.rhs = rhs.value;
    out.residual = std::abs(lhs.value - rhs.value);
    out.lhs_error = lhs.error;
    out.rhs_error = rhs.error;
    return out;
}

}  // namespace diffcoh
