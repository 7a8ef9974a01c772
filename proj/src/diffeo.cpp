#include "diffcoh/diffeo.hpp"

#include <atomic>
#include <cmath>
#include <sstream>

#include "diffcoh/errors.hpp"
#include "diffcoh/symspace.hpp"

namespace diffcoh {

namespace {

long long int_det(const Eigen::MatrixXi& m) {
    const int n = static_cast<int>(m.rows());
    if (n == 1) return m(0, 0);
    if (n == 2)
        return static_cast<long long>(m(0, 0)) * m(1, 1) - static_cast<long long>(m(0, 1)) * m(1, 0);
    long long d = 0;
    for (int c = 0; c < 3; ++c) {
        const long long minor = static_cast<long long>(m(1, (c + 1) % 3)) * m(2, (c + 2) % 3) -
                                static_cast<long long>(m(1, (c + 2) % 3)) * m(2, (c + 1) % 3);
        d += static_cast<long long>(m(0, c)) * minor;
    }
    return d;
}

Eigen::MatrixXi int_adjugate(const Eigen::MatrixXi& m) {
    const int n = static_cast<int>(m.rows());
    Eigen::MatrixXi adj(n, n);
    if (n == 1) {
        adj(0, 0) = 1;
        return adj;
    }
    if (n == 2) {
        adj << m(1, 1), -m(0, 1), -m(1, 0), m(0, 0);
        return adj;
    }
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) {
            const int r1 = (c + 1) % 3, r2 = (c + 2) % 3;
            const int c1 = (r + 1) % 3, c2 = (r + 2) % 3;
            adj(r, c) = m(r1, c1) * m(r2, c2) - m(r1, c2) * m(r2, c1);
        }
    return adj;
}

double wrap1(double t) {
    double w = t - std::floor(t);
    if (w >= 1.0) w -= 1.0;
    return w;
}

void wrap_point(VecN& p) {
    for (int a = 0; a < p.size(); ++a) p(a) = wrap1(p(a));
}

bool eq_int_mat(const Eigen::MatrixXi& a, const Eigen::MatrixXi& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() && (a - b).cwiseAbs().maxCoeff() == 0;
}

bool eq_vec(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    if (a.size() != b.size()) return false;
    for (int i = 0; i < a.size(); ++i)
        if (a(i) != b(i)) return false;
    return true;
}

bool same_primitive(const Primitive& a, const Primitive& b) {
    if (a.index() != b.index()) return false;
    if (const auto* la = std::get_if<LinearTorus>(&a))
        return eq_int_mat(la->m, std::get<LinearTorus>(b).m);
    if (const auto* ta = std::get_if<Translation>(&a))
        return eq_vec(ta->v, std::get<Translation>(b).v);
    if (const auto* sa = std::get_if<Shear>(&a)) {
        const auto& sb = std::get<Shear>(b);
        return sa->axis == sb.axis && sa->phi == sb.phi;
    }
    const auto& ha = std::get<HamSplit>(a);
    const auto& hb = std::get<HamSplit>(b);
    return ha.steps == hb.steps && ha.f_part == hb.f_part && ha.g_part == hb.g_part;
}

// One shear substep of the split flow: which = 0 kicks y by -tau * F'(x),
// which = 1 kicks x by +tau * G'(y).
void ham_kick(const FourierField& dfield, int which, double tau, VecN& p, MatN* jac) {
    double val, grad[2];
    dfield.evaluate_with_gradient(std::span<const double>(p.data(), 2), val, grad);
    if (which == 0) {
        p(1) -= tau * val;
        if (jac) jac->row(1) -= tau * grad[0] * jac->row(0);
    } else {
        p(0) += tau * val;
        if (jac) jac->row(0) += tau * grad[1] * jac->row(1);
    }
}

void apply_ham(const HamSplit& h, int exp, VecN& p, MatN* jac) {
    const FourierField df = h.f_part.derivative(0);
    const FourierField dg = h.g_part.derivative(1);
    const double tau = 1.0 / h.steps;
    if (exp > 0) {
        for (int s = 0; s < h.steps; ++s) {
            ham_kick(df, 0, 0.5 * tau, p, jac);
            ham_kick(dg, 1, tau, p, jac);
            ham_kick(df, 0, 0.5 * tau, p, jac);
        }
    } else {
        for (int s = 0; s < h.steps; ++s) {
            ham_kick(df, 0, -0.5 * tau, p, jac);
            ham_kick(dg, 1, -tau, p, jac);
            ham_kick(df, 0, -0.5 * tau, p, jac);
        }
    }
}

// Applies one letter at p (premultiplying *jac by the letter Jacobian if given).
// lift = true runs the canonical lift on R^N: no wrapping anywhere.
void apply_letter(const Letter& l, VecN& p, MatN* jac, bool lift) {
    const int dim = static_cast<int>(p.size());
    if (const auto* lin = std::get_if<LinearTorus>(&l.prim)) {
        const Eigen::MatrixXi mi = (l.exp > 0) ? lin->m : lin->inverse_matrix();
        MatN m(dim, dim);
        for (int r = 0; r < dim; ++r)
            for (int c = 0; c < dim; ++c) m(r, c) = mi(r, c);
        p = m * p;
        if (!lift) wrap_point(p);
        if (jac) *jac = m * (*jac);
        return;
    }
    if (const auto* tr = std::get_if<Translation>(&l.prim)) {
        if (l.exp > 0)
            p += tr->v;
        else
            p -= tr->v;
        if (!lift) wrap_point(p);
        return;
    }
    if (const auto* sh = std::get_if<Shear>(&l.prim)) {
        double val, grad[3];
        sh->phi.evaluate_with_gradient(std::span<const double>(p.data(), static_cast<std::size_t>(dim)),
                                       val, grad);
        grad[sh->axis] = 0.0;  // independence of the sheared axis is a construction invariant
        const double e = (l.exp > 0) ? 1.0 : -1.0;
        p(sh->axis) += e * val;
        if (!lift) p(sh->axis) = wrap1(p(sh->axis));
        if (jac) {
            Eigen::Matrix<double, 1, Eigen::Dynamic, Eigen::RowMajor, 1, 3> row(1, dim);
            row.setZero();
            for (int c = 0; c < dim; ++c)
                if (c != sh->axis) row(0, c) = grad[c];
            jac->row(sh->axis) += e * (row * (*jac));
        }
        return;
    }
    const auto& h = std::get<HamSplit>(l.prim);
    apply_ham(h, l.exp, p, jac);
    if (!lift) wrap_point(p);
}

VecN run_word(const DiffeoWord& w, const VecN& x, MatN* jac, bool lift) {
    VecN p = x;
    if (!lift) wrap_point(p);
    if (jac) {
        jac->resize(w.dim, w.dim);
        jac->setIdentity();
    }
    for (auto it = w.letters.rbegin(); it != w.letters.rend(); ++it) apply_letter(*it, p, jac, lift);
    return p;
}

void check_letter_dim(const Letter& l, int dim) {
    if (primitive_dim(l.prim) != dim) throw domain_error("letter dimension does not match the word");
    if (l.exp != 1 && l.exp != -1) throw domain_error("letter exponent must be +1 or -1");
}

bool complex_defect(const MatN& j, const Eigen::MatrixXd& omega, double tol, double& defect) {
    const int n = static_cast<int>(j.rows());
    // roundoff in J*J scales with |J|^2, so the gate must be scale-relative
    const double scale = 1.0 + j.cwiseAbs().maxCoeff();
    MatN jj = j * j;
    for (int d = 0; d < n; ++d) jj(d, d) += 1.0;
    defect = jj.cwiseAbs().maxCoeff() / (scale * scale);
    MatN g = j.transpose() * omega;
    defect = std::max(defect, (g - g.transpose()).cwiseAbs().maxCoeff() / scale);
    if (defect > tol) return false;
    const MatN gs = 0.5 * (g + g.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gs);
    if (es.info() != Eigen::Success || es.eigenvalues().minCoeff() <= 0.0) {
        defect = std::max(defect, 1.0);
        return false;
    }
    return true;
}

bool metric_defect(const MatN& g, double tol, double& defect) {
    const double scale = 1.0 + g.cwiseAbs().maxCoeff();
    defect = (g - g.transpose()).cwiseAbs().maxCoeff() / scale;
    defect = std::max(defect, std::abs(g.determinant() - 1.0) / (scale * scale));
    if (defect > tol) return false;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (g + g.transpose()));
    if (es.info() != Eigen::Success || es.eigenvalues().minCoeff() <= 0.0) {
        defect = std::max(defect, 1.0);
        return false;
    }
    return true;
}

}  // namespace

LinearTorus::LinearTorus(Eigen::MatrixXi mat) : m(std::move(mat)) {
    if (m.rows() != m.cols() || m.rows() < 1 || m.rows() > 3)
        throw domain_error("integer torus map must be square, dimension 1 to 3");
    if (int_det(m) != 1) throw domain_error("integer torus map must have determinant exactly 1");
}

Eigen::MatrixXi LinearTorus::inverse_matrix() const {
    return int_adjugate(m);  // det = 1, so the adjugate is the exact inverse
}

Shear::Shear(int ax, FourierField profile) : axis(ax), phi(std::move(profile)) {
    if (phi.rank() != Rank::Scalar) throw domain_error("shear profile must be a scalar field");
    if (axis < 0 || axis >= phi.dim()) throw domain_error("shear axis out of range");
    if (phi.depends_on_axis(axis))
        throw domain_error("shear profile must not depend on its own axis");
}

HamSplit::HamSplit(FourierField f, FourierField g, int steps_)
    : f_part(std::move(f)), g_part(std::move(g)), steps(steps_) {
    if (f_part.dim() != 2 || g_part.dim() != 2 || f_part.rank() != Rank::Scalar ||
        g_part.rank() != Rank::Scalar)
        throw domain_error("split Hamiltonian parts must be scalar fields on the 2-torus");
    if (f_part.depends_on_axis(1)) throw domain_error("the F part may depend on x only");
    if (g_part.depends_on_axis(0)) throw domain_error("the G part may depend on y only");
    if (steps < 1) throw domain_error("step count must be at least 1");
}

int primitive_dim(const Primitive& p) {
    if (const auto* lin = std::get_if<LinearTorus>(&p)) return static_cast<int>(lin->m.rows());
    if (const auto* tr = std::get_if<Translation>(&p)) return static_cast<int>(tr->v.size());
    if (const auto* sh = std::get_if<Shear>(&p)) return sh->phi.dim();
    return 2;
}

DiffeoWord DiffeoWord::identity(int dim) {
    DiffeoWord w;
    w.dim = dim;
    return w;
}

DiffeoWord make_word(int dim, std::vector<Letter> letters) {
    if (dim < 1 || dim > 3) throw domain_error("word dimension must be 1, 2, or 3");
    DiffeoWord w;
    w.dim = dim;
    w.letters = std::move(letters);
    for (auto& l : w.letters) {
        check_letter_dim(l, dim);
        if (auto* tr = std::get_if<Translation>(&l.prim))
            for (int a = 0; a < tr->v.size(); ++a) tr->v(a) = wrap1(tr->v(a));
    }
    return w;
}

DiffeoWord concat(const DiffeoWord& w1, const DiffeoWord& w2) {
    if (w1.dim != w2.dim) throw domain_error("cannot concatenate words of different dimension");
    DiffeoWord w = w1;
    w.letters.insert(w.letters.end(), w2.letters.begin(), w2.letters.end());
    return w;
}

DiffeoWord inverse_word(const DiffeoWord& w) {
    DiffeoWord r;
    r.dim = w.dim;
    r.letters.reserve(w.letters.size());
    for (auto it = w.letters.rbegin(); it != w.letters.rend(); ++it)
        r.letters.push_back({it->prim, -it->exp});
    return r;
}

DiffeoWord reduce(const DiffeoWord& w) {
    DiffeoWord r;
    r.dim = w.dim;
    for (const Letter& l : w.letters) {
        if (!r.letters.empty() && r.letters.back().exp == -l.exp &&
            same_primitive(r.letters.back().prim, l.prim)) {
            r.letters.pop_back();
        } else {
            r.letters.push_back(l);
        }
    }
    return r;
}

VecN apply(const DiffeoWord& w, const VecN& x) { return run_word(w, x, nullptr, false); }

MatN jacobian(const DiffeoWord& w, const VecN& x) {
    MatN j;
    run_word(w, x, &j, false);
    return j;
}

VecN apply_lift(const DiffeoWord& w, const VecN& x) { return run_word(w, x, nullptr, true); }

Isotopy::Isotopy(DiffeoWord w) : target(std::move(w)) {
    for (const Letter& l : target.letters)
        if (std::holds_alternative<LinearTorus>(l.prim))
            throw domain_error(
                "integer-linear letters admit no canonical path from the identity; "
                "remove them before building an isotopy");
}

DiffeoWord Isotopy::at(double t) const {
    DiffeoWord w;
    w.dim = target.dim;
    w.letters.reserve(target.letters.size());
    for (const Letter& l : target.letters) {
        if (const auto* tr = std::get_if<Translation>(&l.prim)) {
            Translation s{tr->v * t};
            w.letters.push_back({Primitive{std::move(s)}, l.exp});
        } else if (const auto* sh = std::get_if<Shear>(&l.prim)) {
            FourierField scaled_phi = sh->phi;
            for (auto& c : scaled_phi.raw()) c *= t;
            w.letters.push_back({Primitive{Shear(sh->axis, std::move(scaled_phi))}, l.exp});
        } else {
            const auto& h = std::get<HamSplit>(l.prim);
            // the time-t flow of H equals the time-1 flow of t*H
            FourierField fs = h.f_part, gs = h.g_part;
            for (auto& c : fs.raw()) c *= t;
            for (auto& c : gs.raw()) c *= t;
            w.letters.push_back({Primitive{HamSplit(std::move(fs), std::move(gs), h.steps)}, l.exp});
        }
    }
    return w;
}

StructureField StructureField::standard_complex(int n) {
    if (n < 1) throw domain_error("fiber rank must be at least 1");
    StructureField s;
    s.kind_ = Kind::Complex;
    s.dim_ = 2 * n;
    s.data_ = Eigen::MatrixXd(standard_omega(n));
    return s;
}

StructureField StructureField::standard_metric(int dim) {
    StructureField s;
    s.kind_ = Kind::Metric;
    s.dim_ = dim;
    s.data_ = Eigen::MatrixXd(Eigen::MatrixXd::Identity(dim, dim));
    return s;
}

StructureField StructureField::constant(Kind kind, Eigen::MatrixXd m) {
    StructureField s;
    s.kind_ = kind;
    s.dim_ = static_cast<int>(m.rows());
    if (kind == Kind::Complex) {
        SiegelJ check(m);  // validates J^2 = -I, symplectic linearity, taming
        (void)check;
    } else {
        SpdPoint check(m);  // validates symmetric positive definite, det 1
        (void)check;
    }
    s.data_ = std::move(m);
    return s;
}

StructureField StructureField::from_field(Kind kind, FourierField f) {
    if (f.rank() != Rank::Matrix) throw domain_error("structure field needs a matrix-valued field");
    if (kind == Kind::Complex && f.dim() % 2 != 0)
        throw domain_error("a complex structure needs an even-dimensional torus");
    StructureField s;
    s.kind_ = kind;
    s.dim_ = f.dim();
    s.data_ = std::move(f);
    return s;
}

StructureField StructureField::pushed(const DiffeoWord& w, StructureField base) {
    if (w.dim != base.dim()) throw domain_error("word and structure dimension mismatch");
    StructureField s;
    s.kind_ = base.kind_;
    s.dim_ = base.dim_;
    Pushed p{inverse_word(w), w, std::make_shared<const StructureField>(std::move(base))};
    s.data_ = std::move(p);
    return s;
}

MatN StructureField::evaluate(const VecN& x) const {
    if (const auto* m = std::get_if<Eigen::MatrixXd>(&data_)) return *m;
    if (const auto* f = std::get_if<FourierField>(&data_))
        return f->evaluate_matrix(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
    const Pushed& p = std::get<Pushed>(data_);
    const VecN y = apply(p.inverse, x);
    const MatN d = jacobian(p.forward, y);
    const MatN b = p.base->evaluate(y);
    if (kind_ == Kind::Complex) return d * b * d.inverse();
    const MatN di = d.inverse();
    const MatN g = di.transpose() * b * di;
    return 0.5 * (g + g.transpose());
}

StructureField pushforward_J(const DiffeoWord& w, const StructureField& j) {
    if (j.kind() != StructureField::Kind::Complex)
        throw domain_error("pushforward_J expects a complex-structure field");
    return StructureField::pushed(w, j);
}

StructureField pushforward_metric(const DiffeoWord& w, const StructureField& g) {
    if (g.kind() != StructureField::Kind::Metric)
        throw domain_error("pushforward_metric expects a metric field");
    return StructureField::pushed(w, g);
}

GridField structure_grid(const StructureField& s, const std::vector<int>& shape, Exec exec, double tol) {
    const int dim = s.dim();
    if (static_cast<int>(shape.size()) != dim)
        throw domain_error("grid dimension does not match structure dimension");
    GridField out(shape, dim * dim);
    Eigen::MatrixXd omega;
    if (s.kind() == StructureField::Kind::Complex) omega = standard_omega(dim / 2);

    std::atomic<std::int64_t> first_bad{-1};
    const std::int64_t n = out.points();
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (exec == Exec::OpenMP)
#endif
    for (std::int64_t i = 0; i < n; ++i) {
        if (first_bad.load(std::memory_order_relaxed) >= 0) continue;
        double xb[3];
        out.coords(i, xb);
        VecN x(dim);
        for (int a = 0; a < dim; ++a) x(a) = xb[a];
        const MatN m = s.evaluate(x);
        double defect = 0.0;
        const bool ok = (s.kind() == StructureField::Kind::Complex)
                            ? complex_defect(m, omega, tol, defect)
                            : metric_defect(m, tol, defect);
        if (!ok) {
            std::int64_t expect = -1;
            first_bad.compare_exchange_strong(expect, i);
            continue;
        }
        for (int r = 0; r < dim; ++r)
            for (int c = 0; c < dim; ++c) out.value(r * dim + c, i) = m(r, c);
    }
    (void)exec;
    const std::int64_t bad = first_bad.load();
    if (bad >= 0) {
        double xb[3];
        out.coords(bad, xb);
        VecN x(dim);
        for (int a = 0; a < dim; ++a) x(a) = xb[a];
        const MatN m = s.evaluate(x);
        double defect = 0.0;
        if (s.kind() == StructureField::Kind::Complex)
            complex_defect(m, omega, tol, defect);
        else
            metric_defect(m, tol, defect);
        std::ostringstream msg;
        msg << "structure lost its defining relations at grid point (";
        for (int a = 0; a < dim; ++a) msg << (a ? "," : "") << x(a);
        msg << "): relative defect " << defect << " exceeds " << tol << " (under-resolution?)";
        throw numeric_error(msg.str());
    }
    return out;
}

}  // namespace diffcoh
