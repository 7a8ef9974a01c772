// Band-limited spectral analysis on T^N = R^N / Z^N (N = 1, 2, 3), volume
// normalized to 1.
//
// FourierField is a finite table of coefficients; everything linear (derivative,
// integral, evaluation) is exact on it.  Nonlinear work happens on GridFields:
// products are formed on grids fine enough to rule out aliasing into the retained
// band (shape >= 2*(sum of operand bandlimits) + 1 per axis) and re-truncated, so
// "spectrally exact" is a checkable contract rather than a hope.
#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "diffcoh/matfun.hpp"
#include "diffcoh/parallel.hpp"
#include "json.hpp"

namespace diffcoh {

enum class Rank { Scalar, Vector, Matrix };

class GridField;

class FourierField {
public:
    FourierField() = default;
    FourierField(int dim, Rank rank, int bandlimit);

    int dim() const { return dim_; }
    Rank rank() const { return rank_; }
    int bandlimit() const { return band_; }
    int components() const { return ncomp_; }

    // k entries in [-bandlimit, bandlimit].
    std::complex<double>& at(int comp, std::span<const int> k);
    const std::complex<double>& at(int comp, std::span<const int> k) const;

    double evaluate(std::span<const double> x, int comp = 0) const;
    // Scalar value and gradient in one pass (scalar rank only).
    void evaluate_with_gradient(std::span<const double> x, double& value, double* grad) const;
    VecN evaluate_vector(std::span<const double> x) const;
    MatN evaluate_matrix(std::span<const double> x) const;

    FourierField derivative(int axis) const;     // multiply by 2*pi*i*k_axis
    double integrate(int comp = 0) const;        // k = 0 coefficient (exact)
    FourierField component(int comp) const;      // scalar slice
    FourierField resized_band(int bandlimit) const;

    void hermitize();                            // enforce coeff(-k) = conj(coeff(k))
    bool is_hermitian(double tol = 0.0) const;
    double max_abs_coeff() const;
    bool depends_on_axis(int axis) const;        // any nonzero coeff with k_axis != 0

    bool operator==(const FourierField& o) const = default;

    const std::vector<std::complex<double>>& raw() const { return c_; }
    std::vector<std::complex<double>>& raw() { return c_; }
    std::size_t cube_size() const { return cube_; }
    std::size_t coeff_index(std::span<const int> k) const;

private:
    int dim_ = 0;
    Rank rank_ = Rank::Scalar;
    int band_ = 0;
    int ncomp_ = 0;
    std::size_t cube_ = 0;
    std::vector<std::complex<double>> c_;
};

// Real-valued samples on a uniform grid; shape entries are powers of two >= 4.
class GridField {
public:
    GridField() = default;
    GridField(std::vector<int> shape, int ncomp);

    int dim() const { return static_cast<int>(shape_.size()); }
    const std::vector<int>& shape() const { return shape_; }
    int components() const { return ncomp_; }
    std::int64_t points() const { return npts_; }

    double& value(int comp, std::int64_t idx) { return v_[comp * npts_ + idx]; }
    double value(int comp, std::int64_t idx) const { return v_[comp * npts_ + idx]; }

    void coords(std::int64_t idx, double* x) const;  // grid point -> torus point
    MatN matrix_at(std::int64_t idx, int nrows) const;
    void set_matrix(std::int64_t idx, const MatN& m);

    std::span<const double> comp_span(int comp) const { return {v_.data() + comp * npts_, static_cast<std::size_t>(npts_)}; }

private:
    std::vector<int> shape_;
    int ncomp_ = 0;
    std::int64_t npts_ = 0;
    std::vector<double> v_;
};

GridField sample(const FourierField& f, const std::vector<int>& shape);
// Exact inverse of sampling when shape resolves the data: shape >= 2*band+1 needed,
// exactness needs shape > band(field) + bandlimit.
FourierField analyze(const GridField& g, Rank rank, int bandlimit);

// Product of scalar fields (or scalar * multi-component), exact:
// sampled on an anti-aliasing grid, multiplied pointwise, re-truncated at Ba + Bb.
FourierField multiply(const FourierField& a, const FourierField& b);

// Coefficient-wise sum (layouts must match) and scalar multiple; exact.
FourierField field_sum(const FourierField& a, const FourierField& b);
FourierField field_scaled(const FourierField& f, double s);

double integrate(const GridField& g, int comp = 0, Exec exec = Exec::OpenMP);

// L^2 fraction of grid spectrum above half the Nyquist band; an honest aliasing alarm.
double spectral_tail_fraction(const GridField& g, int comp = 0);

// Unique zero-mean vector potential on T^3: curl A = X, div A = 0.
// Nonzero mean -> harmonic_obstruction naming the component; nonzero divergence -> domain_error.
FourierField curl_inverse(const FourierField& x);

// Vector-field commutator (X . grad) Y - (Y . grad) X, exact at band Bx + By.
FourierField bracket(const FourierField& x, const FourierField& y);

// Divergence-free vector field (checked on construction).  Fields built from a
// stream/generating function carry it along for provenance.
struct DivFreeField {
    FourierField X;
    std::optional<FourierField> hamiltonian;
};
DivFreeField make_divfree(FourierField x, double tol = 1e-12);

// Conformal surface metric g = e^A (dx^2 + dy^2) on T^2 with band-limited A.
class ConformalMetric {
public:
    explicit ConformalMetric(FourierField a);
    const FourierField& A() const { return a_; }

    // Christoffel symbol Gamma^up_{lo1 lo2} as an exact band-limited field.
    FourierField christoffel(int up, int lo1, int lo2) const;

    GridField area_density(const std::vector<int>& shape) const;           // e^A
    GridField curvature(const std::vector<int>& shape) const;              // -e^{-A} (A_xx + A_yy) / 2
    GridField hessian(const FourierField& f, const std::vector<int>& shape) const;   // 2x2 matrix field
    GridField laplacian(const FourierField& f, const std::vector<int>& shape) const; // e^{-A} (f_xx + f_yy)
    GridField poisson(const FourierField& f, const FourierField& h, const std::vector<int>& shape) const;
    // Covariant derivative matrix (nabla X)^a_b = d_b X^a + Gamma^a_{bc} X^c.
    GridField covariant_jacobian(const FourierField& x, const std::vector<int>& shape) const;

private:
    FourierField a_, ax_, ay_;
};

// Two-resolution protocol: report the fine value, estimate the error as the
// difference against the coarse value.
struct GridSpec {
    std::vector<int> coarse, fine;
    static GridSpec square(int dim, int c, int f);
};

struct Refined {
    double value = 0.0;
    double error = 0.0;
};

template <class F>
Refined refined_value(const GridSpec& g, F&& eval) {
    double c = eval(g.coarse);
    double f = eval(g.fine);
    return {f, std::abs(f - c)};
}

// JSON round-trip (bit-exact through shortest-round-trip double formatting).
nlohmann::ordered_json field_to_json(const FourierField& f);
FourierField field_from_json(const nlohmann::json& j);

// Seeded band-limited test data.
FourierField random_scalar_field(int dim, int bandlimit, double amplitude, std::uint64_t seed,
                                 bool zero_mean = true);
// Scalar field constant along `axis` (a valid shear profile for that axis).
FourierField random_shear_profile(int dim, int axis, int bandlimit, double amplitude,
                                  std::uint64_t seed);
DivFreeField random_divfree_field(int dim, int bandlimit, double amplitude, std::uint64_t seed);

}  // namespace diffcoh
