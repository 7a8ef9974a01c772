#include "diffcoh/torusfield.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdlib>
#include <numbers>
#include <sstream>

#include "diffcoh/errors.hpp"

namespace diffcoh {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
using cd = std::complex<double>;

int rank_components(int dim, Rank rank) {
    switch (rank) {
        case Rank::Scalar: return 1;
        case Rank::Vector: return dim;
        case Rank::Matrix: return dim * dim;
    }
    throw domain_error("unknown field rank");
}

std::string rank_name(Rank rank) {
    switch (rank) {
        case Rank::Scalar: return "scalar";
        case Rank::Vector: return "vector";
        case Rank::Matrix: return "matrix";
    }
    return "?";
}

// Phases e^{2 pi i k x} for k = -B..B.  polar() per entry keeps exact conjugate
// symmetry between k and -k, which analyze() relies on for Hermitian output.
std::vector<cd> phase_row(double x, int band) {
    std::vector<cd> p(2 * band + 1);
    for (int k = -band; k <= band; ++k)
        p[k + band] = std::polar(1.0, kTwoPi * (static_cast<double>(k) * x));
    return p;
}

// Per-axis table, entry [i * n + (k + B)] = e^{2 pi i k i/s}.
std::vector<cd> phase_table(int s, int band) {
    const int n = 2 * band + 1;
    std::vector<cd> t(static_cast<std::size_t>(s) * n);
    for (int i = 0; i < s; ++i)
        for (int k = -band; k <= band; ++k)
            t[static_cast<std::size_t>(i) * n + (k + band)] =
                std::polar(1.0, kTwoPi * (static_cast<double>(k) * i / s));
    return t;
}

int pow2_grid_for_band(int band) {
    const unsigned need = static_cast<unsigned>(std::max(4, 2 * band + 1));
    return static_cast<int>(std::bit_ceil(need));
}

}  // namespace

FourierField::FourierField(int dim, Rank rank, int bandlimit)
    : dim_(dim), rank_(rank), band_(bandlimit) {
    if (dim < 1 || dim > 3) throw domain_error("field dimension must be 1, 2, or 3");
    if (bandlimit < 0) throw domain_error("bandlimit must be nonnegative");
    ncomp_ = rank_components(dim, rank);
    cube_ = 1;
    for (int a = 0; a < dim; ++a) cube_ *= static_cast<std::size_t>(2 * bandlimit + 1);
    c_.assign(static_cast<std::size_t>(ncomp_) * cube_, cd(0.0, 0.0));
}

std::size_t FourierField::coeff_index(std::span<const int> k) const {
    const int n = 2 * band_ + 1;
    std::size_t idx = 0;
    for (int a = 0; a < dim_; ++a) {
        if (k[a] < -band_ || k[a] > band_) throw domain_error("wavevector outside bandlimit");
        idx = idx * n + static_cast<std::size_t>(k[a] + band_);
    }
    return idx;
}

std::complex<double>& FourierField::at(int comp, std::span<const int> k) {
    return c_[static_cast<std::size_t>(comp) * cube_ + coeff_index(k)];
}

const std::complex<double>& FourierField::at(int comp, std::span<const int> k) const {
    return c_[static_cast<std::size_t>(comp) * cube_ + coeff_index(k)];
}

double FourierField::evaluate(std::span<const double> x, int comp) const {
    const int n = 2 * band_ + 1;
    const cd* base = c_.data() + static_cast<std::size_t>(comp) * cube_;
    std::vector<cd> p0 = phase_row(x[0], band_);
    cd acc(0.0, 0.0);
    if (dim_ == 1) {
        for (int j0 = 0; j0 < n; ++j0) acc += base[j0] * p0[j0];
    } else if (dim_ == 2) {
        std::vector<cd> p1 = phase_row(x[1], band_);
        for (int j0 = 0; j0 < n; ++j0) {
            cd row(0.0, 0.0);
            for (int j1 = 0; j1 < n; ++j1) row += base[static_cast<std::size_t>(j0) * n + j1] * p1[j1];
            acc += p0[j0] * row;
        }
    } else {
        std::vector<cd> p1 = phase_row(x[1], band_);
        std::vector<cd> p2 = phase_row(x[2], band_);
        for (int j0 = 0; j0 < n; ++j0) {
            cd lvl(0.0, 0.0);
            for (int j1 = 0; j1 < n; ++j1) {
                cd row(0.0, 0.0);
                const cd* line = base + (static_cast<std::size_t>(j0) * n + j1) * n;
                for (int j2 = 0; j2 < n; ++j2) row += line[j2] * p2[j2];
                lvl += p1[j1] * row;
            }
            acc += p0[j0] * lvl;
        }
    }
    return acc.real();
}

void FourierField::evaluate_with_gradient(std::span<const double> x, double& value, double* grad) const {
    if (rank_ != Rank::Scalar) throw domain_error("gradient evaluation expects a scalar field");
    const int n = 2 * band_ + 1;
    std::vector<std::vector<cd>> p(dim_);
    for (int a = 0; a < dim_; ++a) p[a] = phase_row(x[a], band_);
    cd acc(0.0, 0.0);
    std::array<cd, 3> gacc{cd(0, 0), cd(0, 0), cd(0, 0)};
    std::array<int, 3> j{0, 0, 0};
    for (std::size_t idx = 0; idx < cube_; ++idx) {
        std::size_t rem = idx;
        for (int a = dim_ - 1; a >= 0; --a) {
            j[a] = static_cast<int>(rem % n);
            rem /= n;
        }
        cd term = c_[idx];
        for (int a = 0; a < dim_; ++a) term *= p[a][j[a]];
        acc += term;
        for (int a = 0; a < dim_; ++a)
            gacc[a] += term * cd(0.0, kTwoPi * (j[a] - band_));
    }
    value = acc.real();
    for (int a = 0; a < dim_; ++a) grad[a] = gacc[a].real();
}

VecN FourierField::evaluate_vector(std::span<const double> x) const {
    if (rank_ != Rank::Vector) throw domain_error("vector evaluation expects a vector field");
    VecN v(dim_);
    for (int a = 0; a < dim_; ++a) v(a) = evaluate(x, a);
    return v;
}

MatN FourierField::evaluate_matrix(std::span<const double> x) const {
    if (rank_ != Rank::Matrix) throw domain_error("matrix evaluation expects a matrix field");
    MatN m(dim_, dim_);
    for (int r = 0; r < dim_; ++r)
        for (int c = 0; c < dim_; ++c) m(r, c) = evaluate(x, r * dim_ + c);
    return m;
}

FourierField FourierField::derivative(int axis) const {
    if (axis < 0 || axis >= dim_) throw domain_error("derivative axis out of range");
    FourierField out(dim_, rank_, band_);
    const int n = 2 * band_ + 1;
    std::size_t stride = 1;
    for (int a = dim_ - 1; a > axis; --a) stride *= n;
    for (int comp = 0; comp < ncomp_; ++comp) {
        const cd* src = c_.data() + static_cast<std::size_t>(comp) * cube_;
        cd* dst = out.c_.data() + static_cast<std::size_t>(comp) * cube_;
        for (std::size_t idx = 0; idx < cube_; ++idx) {
            const int k = static_cast<int>((idx / stride) % n) - band_;
            dst[idx] = src[idx] * cd(0.0, kTwoPi * k);
        }
    }
    return out;
}

double FourierField::integrate(int comp) const {
    std::vector<int> zero(dim_, 0);
    return at(comp, zero).real();
}

FourierField FourierField::component(int comp) const {
    if (comp < 0 || comp >= ncomp_) throw domain_error("component index out of range");
    FourierField out(dim_, Rank::Scalar, band_);
    std::copy_n(c_.data() + static_cast<std::size_t>(comp) * cube_, cube_, out.c_.data());
    return out;
}

FourierField FourierField::resized_band(int bandlimit) const {
    FourierField out(dim_, rank_, bandlimit);
    const int keep = std::min(band_, bandlimit);
    std::array<int, 3> k{0, 0, 0};
    std::vector<int> kv(dim_, 0);
    const int n = 2 * keep + 1;
    std::size_t count = 1;
    for (int a = 0; a < dim_; ++a) count *= static_cast<std::size_t>(n);
    for (std::size_t e = 0; e < count; ++e) {
        std::size_t rem = e;
        for (int a = dim_ - 1; a >= 0; --a) {
            k[a] = static_cast<int>(rem % n) - keep;
            rem /= n;
        }
        for (int a = 0; a < dim_; ++a) kv[a] = k[a];
        for (int comp = 0; comp < ncomp_; ++comp) out.at(comp, kv) = at(comp, kv);
    }
    return out;
}

void FourierField::hermitize() {
    const int n = 2 * band_ + 1;
    for (int comp = 0; comp < ncomp_; ++comp) {
        cd* base = c_.data() + static_cast<std::size_t>(comp) * cube_;
        for (std::size_t idx = 0; idx < cube_; ++idx) {
            std::size_t mirror = 0, rem = idx;
            std::array<int, 3> j{};
            for (int a = dim_ - 1; a >= 0; --a) {
                j[a] = static_cast<int>(rem % n);
                rem /= n;
            }
            for (int a = 0; a < dim_; ++a) mirror = mirror * n + static_cast<std::size_t>(n - 1 - j[a]);
            if (mirror < idx) continue;
            const cd avg = 0.5 * (base[idx] + std::conj(base[mirror]));
            base[idx] = avg;
            base[mirror] = std::conj(avg);
        }
    }
}

bool FourierField::is_hermitian(double tol) const {
    const int n = 2 * band_ + 1;
    for (int comp = 0; comp < ncomp_; ++comp) {
        const cd* base = c_.data() + static_cast<std::size_t>(comp) * cube_;
        for (std::size_t idx = 0; idx < cube_; ++idx) {
            std::size_t mirror = 0, rem = idx;
            std::array<int, 3> j{};
            for (int a = dim_ - 1; a >= 0; --a) {
                j[a] = static_cast<int>(rem % n);
                rem /= n;
            }
            for (int a = 0; a < dim_; ++a) mirror = mirror * n + static_cast<std::size_t>(n - 1 - j[a]);
            if (std::abs(base[idx] - std::conj(base[mirror])) > tol) return false;
        }
    }
    return true;
}

double FourierField::max_abs_coeff() const {
    double m = 0.0;
    for (const cd& c : c_) m = std::max(m, std::abs(c));
    return m;
}

bool FourierField::depends_on_axis(int axis) const {
    if (axis < 0 || axis >= dim_) throw domain_error("axis out of range");
    const int n = 2 * band_ + 1;
    const double floor = 1e-14 * std::max(1.0, max_abs_coeff());
    std::size_t stride = 1;
    for (int a = dim_ - 1; a > axis; --a) stride *= n;
    for (int comp = 0; comp < ncomp_; ++comp) {
        const cd* base = c_.data() + static_cast<std::size_t>(comp) * cube_;
        for (std::size_t idx = 0; idx < cube_; ++idx) {
            const int k = static_cast<int>((idx / stride) % n) - band_;
            if (k != 0 && std::abs(base[idx]) > floor) return true;
        }
    }
    return false;
}

GridField::GridField(std::vector<int> shape, int ncomp) : shape_(std::move(shape)), ncomp_(ncomp) {
    if (shape_.empty() || shape_.size() > 3) throw domain_error("grid dimension must be 1, 2, or 3");
    npts_ = 1;
    for (int s : shape_) {
        if (s < 4 || (s & (s - 1)) != 0) {
            std::ostringstream msg;
            msg << "grid shape entries must be powers of two >= 4, got " << s;
            throw domain_error(msg.str());
        }
        npts_ *= s;
    }
    if (ncomp_ < 1) throw domain_error("grid needs at least one component");
    v_.assign(static_cast<std::size_t>(ncomp_) * npts_, 0.0);
}

void GridField::coords(std::int64_t idx, double* x) const {
    for (int a = dim() - 1; a >= 0; --a) {
        const int s = shape_[a];
        x[a] = static_cast<double>(idx % s) / s;
        idx /= s;
    }
}

MatN GridField::matrix_at(std::int64_t idx, int nrows) const {
    MatN m(nrows, nrows);
    for (int r = 0; r < nrows; ++r)
        for (int c = 0; c < nrows; ++c) m(r, c) = value(r * nrows + c, idx);
    return m;
}

void GridField::set_matrix(std::int64_t idx, const MatN& m) {
    const int nr = static_cast<int>(m.rows());
    for (int r = 0; r < nr; ++r)
        for (int c = 0; c < nr; ++c) value(r * nr + c, idx) = m(r, c);
}

GridField sample(const FourierField& f, const std::vector<int>& shape) {
    if (static_cast<int>(shape.size()) != f.dim())
        throw domain_error("sample: grid dimension does not match field dimension");
    GridField g(shape, f.components());
    const int B = f.bandlimit();
    const int n = 2 * B + 1;
    std::vector<std::vector<cd>> t(f.dim());
    for (int a = 0; a < f.dim(); ++a) t[a] = phase_table(shape[a], B);

    for (int comp = 0; comp < f.components(); ++comp) {
        const cd* base = f.raw().data() + static_cast<std::size_t>(comp) * f.cube_size();
        if (f.dim() == 1) {
            const int s0 = shape[0];
            for (int i0 = 0; i0 < s0; ++i0) {
                cd acc(0, 0);
                for (int j0 = 0; j0 < n; ++j0) acc += base[j0] * t[0][static_cast<std::size_t>(i0) * n + j0];
                g.value(comp, i0) = acc.real();
            }
        } else if (f.dim() == 2) {
            const int s0 = shape[0], s1 = shape[1];
            std::vector<cd> u(static_cast<std::size_t>(s0) * n);
            for (int i0 = 0; i0 < s0; ++i0)
                for (int j1 = 0; j1 < n; ++j1) {
                    cd acc(0, 0);
                    for (int j0 = 0; j0 < n; ++j0)
                        acc += base[static_cast<std::size_t>(j0) * n + j1] * t[0][static_cast<std::size_t>(i0) * n + j0];
                    u[static_cast<std::size_t>(i0) * n + j1] = acc;
                }
            for (int i0 = 0; i0 < s0; ++i0)
                for (int i1 = 0; i1 < s1; ++i1) {
                    cd acc(0, 0);
                    for (int j1 = 0; j1 < n; ++j1)
                        acc += u[static_cast<std::size_t>(i0) * n + j1] * t[1][static_cast<std::size_t>(i1) * n + j1];
                    g.value(comp, static_cast<std::int64_t>(i0) * s1 + i1) = acc.real();
                }
        } else {
            const int s0 = shape[0], s1 = shape[1], s2 = shape[2];
            std::vector<cd> u(static_cast<std::size_t>(s0) * n * n);
            for (int i0 = 0; i0 < s0; ++i0)
                for (int j1 = 0; j1 < n; ++j1)
                    for (int j2 = 0; j2 < n; ++j2) {
                        cd acc(0, 0);
                        for (int j0 = 0; j0 < n; ++j0)
                            acc += base[(static_cast<std::size_t>(j0) * n + j1) * n + j2] *
                                   t[0][static_cast<std::size_t>(i0) * n + j0];
                        u[(static_cast<std::size_t>(i0) * n + j1) * n + j2] = acc;
                    }
            std::vector<cd> w(static_cast<std::size_t>(s0) * s1 * n);
            for (int i0 = 0; i0 < s0; ++i0)
                for (int i1 = 0; i1 < s1; ++i1)
                    for (int j2 = 0; j2 < n; ++j2) {
                        cd acc(0, 0);
                        for (int j1 = 0; j1 < n; ++j1)
                            acc += u[(static_cast<std::size_t>(i0) * n + j1) * n + j2] *
                                   t[1][static_cast<std::size_t>(i1) * n + j1];
                        w[(static_cast<std::size_t>(i0) * s1 + i1) * n + j2] = acc;
                    }
            for (int i0 = 0; i0 < s0; ++i0)
                for (int i1 = 0; i1 < s1; ++i1)
                    for (int i2 = 0; i2 < s2; ++i2) {
                        cd acc(0, 0);
                        for (int j2 = 0; j2 < n; ++j2)
                            acc += w[(static_cast<std::size_t>(i0) * s1 + i1) * n + j2] *
                                   t[2][static_cast<std::size_t>(i2) * n + j2];
                        g.value(comp, (static_cast<std::int64_t>(i0) * s1 + i1) * s2 + i2) = acc.real();
                    }
        }
    }
    return g;
}

FourierField analyze(const GridField& g, Rank rank, int bandlimit) {
    const int dim = g.dim();
    FourierField f(dim, rank, bandlimit);
    if (f.components() != g.components())
        throw domain_error("analyze: component count does not match requested rank");
    const int B = bandlimit;
    const int n = 2 * B + 1;
    for (int a = 0; a < dim; ++a)
        if (g.shape()[a] < n) throw domain_error("analyze: grid too coarse for requested bandlimit");
    std::vector<std::vector<cd>> t(dim);
    for (int a = 0; a < dim; ++a) t[a] = phase_table(g.shape()[a], B);

    for (int comp = 0; comp < g.components(); ++comp) {
        cd* out = f.raw().data() + static_cast<std::size_t>(comp) * f.cube_size();
        if (dim == 1) {
            const int s0 = g.shape()[0];
            for (int j0 = 0; j0 < n; ++j0) {
                cd acc(0, 0);
                for (int i0 = 0; i0 < s0; ++i0)
                    acc += g.value(comp, i0) * std::conj(t[0][static_cast<std::size_t>(i0) * n + j0]);
                out[j0] = acc / static_cast<double>(s0);
            }
        } else if (dim == 2) {
            const int s0 = g.shape()[0], s1 = g.shape()[1];
            std::vector<cd> u(static_cast<std::size_t>(n) * s1);
            for (int j0 = 0; j0 < n; ++j0)
                for (int i1 = 0; i1 < s1; ++i1) {
                    cd acc(0, 0);
                    for (int i0 = 0; i0 < s0; ++i0)
                        acc += g.value(comp, static_cast<std::int64_t>(i0) * s1 + i1) *
                               std::conj(t[0][static_cast<std::size_t>(i0) * n + j0]);
                    u[static_cast<std::size_t>(j0) * s1 + i1] = acc / static_cast<double>(s0);
                }
            for (int j0 = 0; j0 < n; ++j0)
                for (int j1 = 0; j1 < n; ++j1) {
                    cd acc(0, 0);
                    for (int i1 = 0; i1 < s1; ++i1)
                        acc += u[static_cast<std::size_t>(j0) * s1 + i1] *
                               std::conj(t[1][static_cast<std::size_t>(i1) * n + j1]);
                    out[static_cast<std::size_t>(j0) * n + j1] = acc / static_cast<double>(s1);
                }
        } else {
            const int s0 = g.shape()[0], s1 = g.shape()[1], s2 = g.shape()[2];
            std::vector<cd> u(static_cast<std::size_t>(n) * s1 * s2);
            for (int j0 = 0; j0 < n; ++j0)
                for (int i1 = 0; i1 < s1; ++i1)
                    for (int i2 = 0; i2 < s2; ++i2) {
                        cd acc(0, 0);
                        for (int i0 = 0; i0 < s0; ++i0)
                            acc += g.value(comp, (static_cast<std::int64_t>(i0) * s1 + i1) * s2 + i2) *
                                   std::conj(t[0][static_cast<std::size_t>(i0) * n + j0]);
                        u[(static_cast<std::size_t>(j0) * s1 + i1) * s2 + i2] = acc / static_cast<double>(s0);
                    }
            std::vector<cd> w(static_cast<std::size_t>(n) * n * s2);
            for (int j0 = 0; j0 < n; ++j0)
                for (int j1 = 0; j1 < n; ++j1)
                    for (int i2 = 0; i2 < s2; ++i2) {
                        cd acc(0, 0);
                        for (int i1 = 0; i1 < s1; ++i1)
                            acc += u[(static_cast<std::size_t>(j0) * s1 + i1) * s2 + i2] *
                                   std::conj(t[1][static_cast<std::size_t>(i1) * n + j1]);
                        w[(static_cast<std::size_t>(j0) * n + j1) * s2 + i2] = acc / static_cast<double>(s1);
                    }
            for (int j0 = 0; j0 < n; ++j0)
                for (int j1 = 0; j1 < n; ++j1)
                    for (int j2 = 0; j2 < n; ++j2) {
                        cd acc(0, 0);
                        for (int i2 = 0; i2 < s2; ++i2)
                            acc += w[(static_cast<std::size_t>(j0) * n + j1) * s2 + i2] *
                                   std::conj(t[2][static_cast<std::size_t>(i2) * n + j2]);
                        out[(static_cast<std::size_t>(j0) * n + j1) * n + j2] = acc / static_cast<double>(s2);
                    }
        }
    }
    return f;
}

FourierField multiply(const FourierField& a, const FourierField& b) {
    if (a.dim() != b.dim()) throw domain_error("multiply: dimension mismatch");
    if (a.rank() != Rank::Scalar && b.rank() != Rank::Scalar)
        throw domain_error("multiply expects at least one scalar operand");
    const FourierField& sc = (a.rank() == Rank::Scalar) ? a : b;
    const FourierField& other = (a.rank() == Rank::Scalar) ? b : a;
    const int bout = a.bandlimit() + b.bandlimit();
    const int s = pow2_grid_for_band(bout);
    std::vector<int> shape(a.dim(), s);
    GridField gs = sample(sc, shape);
    GridField go = sample(other, shape);
    GridField prod(shape, other.components());
    for (int comp = 0; comp < other.components(); ++comp)
        for (std::int64_t i = 0; i < prod.points(); ++i)
            prod.value(comp, i) = gs.value(0, i) * go.value(comp, i);
    FourierField out = analyze(prod, other.rank(), bout);
    out.hermitize();
    return out;
}

FourierField field_scaled(const FourierField& f, double s) {
    FourierField out = f;
    for (auto& c : out.raw()) c *= s;
    return out;
}

FourierField field_sum(const FourierField& a, const FourierField& b) {
    if (a.dim() != b.dim() || a.rank() != b.rank() || a.bandlimit() != b.bandlimit())
        throw domain_error("field sum requires matching layout");
    FourierField out = a;
    for (std::size_t i = 0; i < out.raw().size(); ++i) out.raw()[i] += b.raw()[i];
    return out;
}

double integrate(const GridField& g, int comp, Exec exec) {
    auto vals = g.comp_span(comp);
    return mean_map(exec, g.points(), [&](std::int64_t i) { return vals[static_cast<std::size_t>(i)]; });
}

double spectral_tail_fraction(const GridField& g, int comp) {
    int smin = g.shape()[0];
    for (int s : g.shape()) smin = std::min(smin, s);
    const int band = smin / 2 - 1;
    GridField one(g.shape(), 1);
    std::copy(g.comp_span(comp).begin(), g.comp_span(comp).end(), &one.value(0, 0));
    FourierField c = analyze(one, Rank::Scalar, band);
    const int n = 2 * band + 1;
    double total = 0.0, tail = 0.0;
    std::array<int, 3> k{};
    for (std::size_t idx = 0; idx < c.cube_size(); ++idx) {
        std::size_t rem = idx;
        int kmax = 0;
        for (int a = c.dim() - 1; a >= 0; --a) {
            k[a] = static_cast<int>(rem % n) - band;
            rem /= n;
            kmax = std::max(kmax, std::abs(k[a]));
        }
        const double e = std::norm(c.raw()[idx]);
        total += e;
        if (2 * kmax > band) tail += e;
    }
    if (total == 0.0) return 0.0;
    return std::sqrt(tail / total);
}

FourierField curl_inverse(const FourierField& x) {
    if (x.dim() != 3 || x.rank() != Rank::Vector)
        throw domain_error("curl_inverse expects a vector field on the 3-torus");
    const int B = x.bandlimit();
    const double scale = std::max(1.0, x.max_abs_coeff());
    FourierField a(3, Rank::Vector, B);
    std::vector<int> kv(3, 0);
    static const char* axis_name[3] = {"x", "y", "z"};
    for (int c = 0; c < 3; ++c) {
        kv = {0, 0, 0};
        if (std::abs(x.at(c, kv)) > 1e-12 * scale) {
            std::ostringstream msg;
            msg << "vector field has nonzero mean in component " << axis_name[c]
                << "; the harmonic part obstructs a vector potential";
            throw harmonic_obstruction(msg.str());
        }
    }
    for (int k0 = -B; k0 <= B; ++k0)
        for (int k1 = -B; k1 <= B; ++k1)
            for (int k2 = -B; k2 <= B; ++k2) {
                if (k0 == 0 && k1 == 0 && k2 == 0) continue;
                kv = {k0, k1, k2};
                const cd x0 = x.at(0, kv), x1 = x.at(1, kv), x2 = x.at(2, kv);
                const double kk = static_cast<double>(k0) * k0 + static_cast<double>(k1) * k1 +
                                  static_cast<double>(k2) * k2;
                const cd div = static_cast<double>(k0) * x0 + static_cast<double>(k1) * x1 +
                               static_cast<double>(k2) * x2;
                if (std::abs(div) > 1e-10 * std::sqrt(kk) * scale) {
                    std::ostringstream msg;
                    msg << "field is not divergence-free at wavevector (" << k0 << "," << k1 << "," << k2 << ")";
                    throw domain_error(msg.str());
                }
                // A_k = i (k x X_k) / (2 pi |k|^2); then curl A = X and div A = 0.
                const cd f = cd(0.0, 1.0) / (kTwoPi * kk);
                a.at(0, kv) = f * (static_cast<double>(k1) * x2 - static_cast<double>(k2) * x1);
                a.at(1, kv) = f * (static_cast<double>(k2) * x0 - static_cast<double>(k0) * x2);
                a.at(2, kv) = f * (static_cast<double>(k0) * x1 - static_cast<double>(k1) * x0);
            }
    return a;
}

FourierField bracket(const FourierField& x, const FourierField& y) {
    if (x.dim() != y.dim() || x.rank() != Rank::Vector || y.rank() != Rank::Vector)
        throw domain_error("bracket expects two vector fields of equal dimension");
    const int dim = x.dim();
    const int bout = x.bandlimit() + y.bandlimit();
    FourierField out(dim, Rank::Vector, bout);
    for (int a = 0; a < dim; ++a) {
        FourierField acc(dim, Rank::Scalar, bout);
        for (int c = 0; c < dim; ++c) {
            acc = field_sum(acc, multiply(x.component(c), y.component(a).derivative(c)));
            acc = field_sum(acc, field_scaled(multiply(y.component(c), x.component(a).derivative(c)), -1.0));
        }
        std::copy(acc.raw().begin(), acc.raw().end(),
                  out.raw().begin() + static_cast<std::ptrdiff_t>(a) * static_cast<std::ptrdiff_t>(out.cube_size()));
    }
    return out;
}

DivFreeField make_divfree(FourierField x, double tol) {
    if (x.rank() != Rank::Vector) throw domain_error("divergence-free field must have vector rank");
    FourierField div(x.dim(), Rank::Scalar, x.bandlimit());
    for (int a = 0; a < x.dim(); ++a) div = field_sum(div, x.component(a).derivative(a));
    const double scale = std::max(1.0, kTwoPi * x.bandlimit() * x.max_abs_coeff());
    if (div.max_abs_coeff() > tol * scale)
        throw domain_error("vector field is not divergence-free");
    return DivFreeField{std::move(x), std::nullopt};
}

ConformalMetric::ConformalMetric(FourierField a) : a_(std::move(a)) {
    if (a_.dim() != 2 || a_.rank() != Rank::Scalar)
        throw domain_error("conformal factor must be a scalar field on the 2-torus");
    ax_ = a_.derivative(0);
    ay_ = a_.derivative(1);
}

FourierField ConformalMetric::christoffel(int up, int lo1, int lo2) const {
    if (up < 0 || up > 1 || lo1 < 0 || lo1 > 1 || lo2 < 0 || lo2 > 1)
        throw domain_error("christoffel index out of range");
    if (lo1 > lo2) std::swap(lo1, lo2);
    // Gamma^x_xx = A_x/2, Gamma^x_xy = A_y/2, Gamma^x_yy = -A_x/2,
    // Gamma^y_xx = -A_y/2, Gamma^y_xy = A_x/2, Gamma^y_yy = A_y/2.
    if (up == 0) {
        if (lo1 == 0 && lo2 == 0) return field_scaled(ax_, 0.5);
        if (lo1 == 0 && lo2 == 1) return field_scaled(ay_, 0.5);
        return field_scaled(ax_, -0.5);
    }
    if (lo1 == 0 && lo2 == 0) return field_scaled(ay_, -0.5);
    if (lo1 == 0 && lo2 == 1) return field_scaled(ax_, 0.5);
    return field_scaled(ay_, 0.5);
}

GridField ConformalMetric::area_density(const std::vector<int>& shape) const {
    GridField ga = sample(a_, shape);
    GridField out(shape, 1);
    for (std::int64_t i = 0; i < out.points(); ++i) out.value(0, i) = std::exp(ga.value(0, i));
    return out;
}

GridField ConformalMetric::curvature(const std::vector<int>& shape) const {
    FourierField lap = field_sum(ax_.derivative(0), ay_.derivative(1));
    GridField gl = sample(lap, shape);
    GridField ga = sample(a_, shape);
    GridField out(shape, 1);
    for (std::int64_t i = 0; i < out.points(); ++i)
        out.value(0, i) = -0.5 * std::exp(-ga.value(0, i)) * gl.value(0, i);
    return out;
}

GridField ConformalMetric::hessian(const FourierField& f, const std::vector<int>& shape) const {
    if (f.dim() != 2 || f.rank() != Rank::Scalar) throw domain_error("hessian expects a scalar field on the 2-torus");
    FourierField fx = f.derivative(0), fy = f.derivative(1);
    GridField gfx = sample(fx, shape), gfy = sample(fy, shape);
    GridField gfxx = sample(fx.derivative(0), shape), gfxy = sample(fx.derivative(1), shape),
              gfyy = sample(fy.derivative(1), shape);
    GridField gax = sample(ax_, shape), gay = sample(ay_, shape), ga = sample(a_, shape);
    GridField out(shape, 4);
    for (std::int64_t i = 0; i < out.points(); ++i) {
        const double px = gfx.value(0, i), py = gfy.value(0, i);
        const double sx = gax.value(0, i), sy = gay.value(0, i);
        const double hxx = gfxx.value(0, i) - 0.5 * (sx * px - sy * py);
        const double hxy = gfxy.value(0, i) - 0.5 * (sy * px + sx * py);
        const double hyy = gfyy.value(0, i) + 0.5 * (sx * px - sy * py);
        const double e = std::exp(-ga.value(0, i));
        out.value(0, i) = e * hxx;
        out.value(1, i) = e * hxy;
        out.value(2, i) = e * hxy;
        out.value(3, i) = e * hyy;
    }
    return out;
}

GridField ConformalMetric::laplacian(const FourierField& f, const std::vector<int>& shape) const {
    FourierField lap = field_sum(f.derivative(0).derivative(0), f.derivative(1).derivative(1));
    GridField gl = sample(lap, shape);
    GridField ga = sample(a_, shape);
    GridField out(shape, 1);
    for (std::int64_t i = 0; i < out.points(); ++i)
        out.value(0, i) = std::exp(-ga.value(0, i)) * gl.value(0, i);
    return out;
}

GridField ConformalMetric::poisson(const FourierField& f, const FourierField& h,
                                   const std::vector<int>& shape) const {
    GridField gfx = sample(f.derivative(0), shape), gfy = sample(f.derivative(1), shape);
    GridField ghx = sample(h.derivative(0), shape), ghy = sample(h.derivative(1), shape);
    GridField ga = sample(a_, shape);
    GridField out(shape, 1);
    for (std::int64_t i = 0; i < out.points(); ++i)
        out.value(0, i) = std::exp(-ga.value(0, i)) *
                          (gfx.value(0, i) * ghy.value(0, i) - gfy.value(0, i) * ghx.value(0, i));
    return out;
}

GridField ConformalMetric::covariant_jacobian(const FourierField& x, const std::vector<int>& shape) const {
    if (x.dim() != 2 || x.rank() != Rank::Vector)
        throw domain_error("covariant_jacobian expects a vector field on the 2-torus");
    GridField gx0 = sample(x.component(0), shape), gx1 = sample(x.component(1), shape);
    GridField d00 = sample(x.component(0).derivative(0), shape), d01 = sample(x.component(0).derivative(1), shape);
    GridField d10 = sample(x.component(1).derivative(0), shape), d11 = sample(x.component(1).derivative(1), shape);
    GridField gax = sample(ax_, shape), gay = sample(ay_, shape);
    GridField out(shape, 4);
    for (std::int64_t i = 0; i < out.points(); ++i) {
        const double v0 = gx0.value(0, i), v1 = gx1.value(0, i);
        const double sx = gax.value(0, i), sy = gay.value(0, i);
        // (nabla X)^a_b = d_b X^a + Gamma^a_{b c} X^c
        out.value(0, i) = d00.value(0, i) + 0.5 * (sx * v0 + sy * v1);   // a=0 b=0
        out.value(1, i) = d01.value(0, i) + 0.5 * (sy * v0 - sx * v1);   // a=0 b=1
        out.value(2, i) = d10.value(0, i) + 0.5 * (-sy * v0 + sx * v1);  // a=1 b=0
        out.value(3, i) = d11.value(0, i) + 0.5 * (sx * v0 + sy * v1);   // a=1 b=1
    }
    return out;
}

GridSpec GridSpec::square(int dim, int c, int f) {
    if (f <= c) throw domain_error("refinement grid must be strictly finer than the base grid");
    GridSpec g;
    g.coarse.assign(dim, c);
    g.fine.assign(dim, f);
    return g;
}

nlohmann::ordered_json field_to_json(const FourierField& f) {
    nlohmann::ordered_json j;
    j["dim"] = f.dim();
    j["rank"] = rank_name(f.rank());
    j["bandlimit"] = f.bandlimit();
    nlohmann::ordered_json coeffs = nlohmann::ordered_json::array();
    const int B = f.bandlimit();
    const int n = 2 * B + 1;
    std::array<int, 3> k{};
    std::vector<int> kv(f.dim(), 0);
    for (std::size_t idx = 0; idx < f.cube_size(); ++idx) {
        std::size_t rem = idx;
        for (int a = f.dim() - 1; a >= 0; --a) {
            k[a] = static_cast<int>(rem % n) - B;
            rem /= n;
        }
        for (int a = 0; a < f.dim(); ++a) kv[a] = k[a];
        bool any = false;
        for (int comp = 0; comp < f.components(); ++comp) {
            const cd c = f.at(comp, kv);
            if (c.real() != 0.0 || c.imag() != 0.0) any = true;
        }
        if (!any) continue;
        nlohmann::ordered_json entry = nlohmann::ordered_json::array();
        entry.push_back(kv);
        if (f.rank() == Rank::Scalar) {
            const cd c = f.at(0, kv);
            entry.push_back(c.real());
            entry.push_back(c.imag());
        } else {
            std::vector<double> re(f.components()), im(f.components());
            for (int comp = 0; comp < f.components(); ++comp) {
                const cd c = f.at(comp, kv);
                re[comp] = c.real();
                im[comp] = c.imag();
            }
            entry.push_back(re);
            entry.push_back(im);
        }
        coeffs.push_back(std::move(entry));
    }
    j["coeffs"] = std::move(coeffs);
    return j;
}

FourierField field_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw domain_error("field must be a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        const std::string& key = it.key();
        if (key != "dim" && key != "rank" && key != "bandlimit" && key != "coeffs")
            throw domain_error("unknown key '" + key + "' in field object");
    }
    if (!j.contains("dim") || !j.contains("rank") || !j.contains("bandlimit") || !j.contains("coeffs"))
        throw domain_error("field object needs keys dim, rank, bandlimit, coeffs");
    if (!j["dim"].is_number_integer()) throw domain_error("field dim must be an integer");
    if (!j["bandlimit"].is_number_integer()) throw domain_error("field bandlimit must be an integer");
    if (!j["rank"].is_string()) throw domain_error("field rank must be a string");
    const int dim = j["dim"].get<int>();
    const int band = j["bandlimit"].get<int>();
    const std::string rs = j["rank"].get<std::string>();
    Rank rank;
    if (rs == "scalar") rank = Rank::Scalar;
    else if (rs == "vector") rank = Rank::Vector;
    else if (rs == "matrix") rank = Rank::Matrix;
    else throw domain_error("field rank must be scalar, vector, or matrix");
    FourierField f(dim, rank, band);
    if (!j["coeffs"].is_array()) throw domain_error("field coeffs must be an array");
    std::vector<bool> seen(f.cube_size(), false);
    std::vector<int> kv(dim, 0);
    for (const auto& entry : j["coeffs"]) {
        if (!entry.is_array() || entry.size() != 3)
            throw domain_error("each coeff entry must be [wavevector, re, im]");
        if (!entry[0].is_array() || entry[0].size() != static_cast<std::size_t>(dim))
            throw domain_error("coeff wavevector length must equal dim");
        for (int a = 0; a < dim; ++a) {
            if (!entry[0][a].is_number_integer()) throw domain_error("wavevector entries must be integers");
            kv[a] = entry[0][a].get<int>();
            if (kv[a] < -band || kv[a] > band) throw domain_error("wavevector outside bandlimit");
        }
        const std::size_t idx = f.coeff_index(kv);
        if (seen[idx]) throw domain_error("duplicate wavevector in coeffs");
        seen[idx] = true;
        if (rank == Rank::Scalar) {
            if (!entry[1].is_number() || !entry[2].is_number())
                throw domain_error("scalar coeff entry must be [wavevector, re, im] with numbers");
            f.at(0, kv) = cd(entry[1].get<double>(), entry[2].get<double>());
        } else {
            if (!entry[1].is_array() || !entry[2].is_array() ||
                entry[1].size() != static_cast<std::size_t>(f.components()) ||
                entry[2].size() != static_cast<std::size_t>(f.components()))
                throw domain_error("coeff entry must carry re/im arrays matching the component count");
            for (int comp = 0; comp < f.components(); ++comp) {
                if (!entry[1][comp].is_number() || !entry[2][comp].is_number())
                    throw domain_error("re/im arrays must hold numbers");
                f.at(comp, kv) = cd(entry[1][comp].get<double>(), entry[2][comp].get<double>());
            }
        }
    }
    if (!f.is_hermitian(0.0))
        throw domain_error("coefficients violate conjugate symmetry; the field would not be real-valued");
    return f;
}

FourierField random_scalar_field(int dim, int bandlimit, double amplitude, std::uint64_t seed, bool zero_mean) {
    FourierField f(dim, Rank::Scalar, bandlimit);
    const int B = bandlimit;
    const int n = 2 * B + 1;
    std::vector<int> kv(dim, 0), mv(dim, 0);
    std::uint64_t ctr = 0;
    for (std::size_t idx = 0; idx < f.cube_size(); ++idx) {
        std::size_t rem = idx;
        for (int a = dim - 1; a >= 0; --a) {
            kv[a] = static_cast<int>(rem % n) - B;
            rem /= n;
        }
        int lead = 0;
        for (int a = 0; a < dim; ++a)
            if (kv[a] != 0) {
                lead = kv[a];
                break;
            }
        if (lead < 0) continue;  // filled by the conjugate mirror
        if (lead == 0) {
            f.at(0, kv) = zero_mean ? cd(0, 0) : cd(amplitude * uniform_pm1(seed, ctr), 0.0);
            ctr += 2;
            continue;
        }
        const double re = amplitude * uniform_pm1(seed, ctr++);
        const double im = amplitude * uniform_pm1(seed, ctr++);
        f.at(0, kv) = cd(re, im);
        for (int a = 0; a < dim; ++a) mv[a] = -kv[a];
        f.at(0, mv) = cd(re, -im);
    }
    return f;
}

FourierField random_shear_profile(int dim, int axis, int bandlimit, double amplitude,
                                  std::uint64_t seed) {
    if (axis < 0 || axis >= dim) throw domain_error("shear profile axis out of range");
    FourierField f = random_scalar_field(dim, bandlimit, amplitude, seed);
    const int B = bandlimit;
    const int n = 2 * B + 1;
    std::vector<int> kv(dim, 0);
    for (std::size_t idx = 0; idx < f.cube_size(); ++idx) {
        std::size_t rem = idx;
        for (int a = dim - 1; a >= 0; --a) {
            kv[a] = static_cast<int>(rem % n) - B;
            rem /= n;
        }
        if (kv[axis] != 0) f.at(0, kv) = cd(0.0, 0.0);  // constant along its own axis
    }
    return f;
}

DivFreeField random_divfree_field(int dim, int bandlimit, double amplitude, std::uint64_t seed) {
    FourierField x(dim, Rank::Vector, bandlimit);
    for (int c = 0; c < dim; ++c) {
        FourierField comp = random_scalar_field(dim, bandlimit, amplitude, mix_seed(seed, 1000 + c), true);
        std::copy(comp.raw().begin(), comp.raw().end(),
                  x.raw().begin() + static_cast<std::ptrdiff_t>(c) * static_cast<std::ptrdiff_t>(x.cube_size()));
    }
    // Project out the gradient part wavevector by wavevector.
    const int B = bandlimit;
    const int n = 2 * B + 1;
    std::vector<int> kv(dim, 0);
    for (std::size_t idx = 0; idx < x.cube_size(); ++idx) {
        std::size_t rem = idx;
        double kk = 0.0;
        for (int a = dim - 1; a >= 0; --a) {
            kv[a] = static_cast<int>(rem % n) - B;
            rem /= n;
            kk += static_cast<double>(kv[a]) * kv[a];
        }
        if (kk == 0.0) {
            for (int c = 0; c < dim; ++c) x.at(c, kv) = cd(0, 0);
            continue;
        }
        cd dot(0, 0);
        for (int c = 0; c < dim; ++c) dot += static_cast<double>(kv[c]) * x.at(c, kv);
        for (int c = 0; c < dim; ++c) x.at(c, kv) -= (static_cast<double>(kv[c]) / kk) * dot;
    }
    x.hermitize();
    return make_divfree(std::move(x));
}

}  // namespace diffcoh
