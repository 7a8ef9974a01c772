#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "doctest.h"

#include "diffcoh/errors.hpp"
#include "diffcoh/torusfield.hpp"

namespace dc = diffcoh;
using cd = std::complex<double>;
constexpr double kTau = 2.0 * std::numbers::pi;

namespace {

// sin(2 pi k.x) as a band-limited field
dc::FourierField sin_mode(int dim, const std::vector<int>& k, int band) {
    dc::FourierField f(dim, dc::Rank::Scalar, band);
    std::vector<int> mk(k.size());
    for (std::size_t i = 0; i < k.size(); ++i) mk[i] = -k[i];
    f.at(0, k) = cd(0.0, -0.5);
    f.at(0, mk) = cd(0.0, 0.5);
    return f;
}

// independent curl built from the exact derivative operator
dc::FourierField curl3(const dc::FourierField& x) {
    const int B = x.bandlimit();
    std::vector<dc::FourierField> d(9, dc::FourierField(3, dc::Rank::Scalar, B));
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) d[3 * a + b] = x.component(a).derivative(b);
    // (curl X)_a = eps_{abc} d_b X_c
    const dc::FourierField r[3] = {
        dc::field_sum(d[3 * 2 + 1], dc::field_scaled(d[3 * 1 + 2], -1.0)),
        dc::field_sum(d[3 * 0 + 2], dc::field_scaled(d[3 * 2 + 0], -1.0)),
        dc::field_sum(d[3 * 1 + 0], dc::field_scaled(d[3 * 0 + 1], -1.0)),
    };
    dc::FourierField out(3, dc::Rank::Vector, B);
    std::vector<int> k(3);
    for (k[0] = -B; k[0] <= B; ++k[0])
        for (k[1] = -B; k[1] <= B; ++k[1])
            for (k[2] = -B; k[2] <= B; ++k[2])
                for (int comp = 0; comp < 3; ++comp) out.at(comp, k) = r[comp].at(0, k);
    return out;
}

double field_gap(const dc::FourierField& a, const dc::FourierField& b) {
    const int band = std::max(a.bandlimit(), b.bandlimit());
    return dc::field_sum(a.resized_band(band), dc::field_scaled(b.resized_band(band), -1.0))
        .max_abs_coeff();
}

}  // namespace

TEST_CASE("derivative is exact on modes") {
    dc::FourierField f = sin_mode(2, {1, 0}, 1);
    dc::FourierField df = f.derivative(0);
    for (double x : {0.0, 0.13, 0.77}) {
        std::array<double, 2> p{x, 0.4};
        CHECK(df.evaluate(p) == doctest::Approx(kTau * std::cos(kTau * x)).epsilon(1e-12));
    }
    dc::FourierField c(2, dc::Rank::Scalar, 0);
    c.at(0, std::vector<int>{0, 0}) = 3.25;
    CHECK(c.derivative(1).max_abs_coeff() == 0.0);
}

TEST_CASE("integration oracles") {
    dc::FourierField one(2, dc::Rank::Scalar, 0);
    one.at(0, std::vector<int>{0, 0}) = 1.0;
    CHECK(one.integrate() == 1.0);
    dc::FourierField s = sin_mode(2, {1, 0}, 1);
    CHECK(s.integrate() == 0.0);
    dc::FourierField s2 = dc::multiply(s, s);
    CHECK(s2.integrate() == doctest::Approx(0.5).epsilon(1e-14));
    dc::GridField g = dc::sample(s2, {16, 16});
    CHECK(dc::integrate(g) == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("multiply equals direct convolution") {
    dc::FourierField a = dc::random_scalar_field(2, 2, 1.0, 11, false);
    dc::FourierField b = dc::random_scalar_field(2, 2, 1.0, 12, false);
    dc::FourierField p = dc::multiply(a, b);
    REQUIRE(p.bandlimit() == 4);
    for (int k0 = -4; k0 <= 4; ++k0) {
        for (int k1 = -4; k1 <= 4; ++k1) {
            cd want = 0.0;
            for (int m0 = -2; m0 <= 2; ++m0) {
                for (int m1 = -2; m1 <= 2; ++m1) {
                    const int r0 = k0 - m0, r1 = k1 - m1;
                    if (std::abs(r0) > 2 || std::abs(r1) > 2) continue;
                    want += a.at(0, std::vector<int>{m0, m1}) *
                            b.at(0, std::vector<int>{r0, r1});
                }
            }
            const cd got = p.at(0, std::vector<int>{k0, k1});
            CHECK(std::abs(got - want) < 1e-13);
        }
    }
}

TEST_CASE("sample, evaluate and analyze are mutually consistent") {
    dc::FourierField f = dc::random_scalar_field(2, 3, 0.7, 21, false);
    dc::GridField g = dc::sample(f, {16, 16});
    std::vector<double> x(2);
    for (std::int64_t i = 0; i < g.points(); ++i) {
        g.coords(i, x.data());
        CHECK(g.value(0, i) == doctest::Approx(f.evaluate(x)).epsilon(1e-12));
    }
    dc::FourierField back = dc::analyze(g, dc::Rank::Scalar, 3);
    REQUIRE(back.raw().size() == f.raw().size());
    for (std::size_t i = 0; i < f.raw().size(); ++i)
        CHECK(std::abs(back.raw()[i] - f.raw()[i]) < 1e-13);
}

TEST_CASE("json round trip is bit-exact") {
    dc::FourierField s = dc::random_scalar_field(2, 2, 0.9, 31);
    dc::DivFreeField v = dc::random_divfree_field(3, 1, 1.1, 32);
    for (const dc::FourierField* f : {&s, &v.X}) {
        dc::FourierField back = dc::field_from_json(dc::field_to_json(*f));
        REQUIRE(back.raw().size() == f->raw().size());
        for (std::size_t i = 0; i < f->raw().size(); ++i) CHECK(back.raw()[i] == f->raw()[i]);
        CHECK(back.is_hermitian(0.0));
    }
}

TEST_CASE("curl inverse closed form and round trip") {
    dc::FourierField x(3, dc::Rank::Vector, 1);
    const std::vector<int> kz{0, 0, 1}, mkz{0, 0, -1};
    x.at(0, kz) = cd(0.0, -0.5);
    x.at(0, mkz) = cd(0.0, 0.5);
    x.at(1, kz) = cd(0.5, 0.0);
    x.at(1, mkz) = cd(0.5, 0.0);
    dc::FourierField a = dc::curl_inverse(x);
    // curl X = 2 pi X here, so A = X / (2 pi)
    for (int comp = 0; comp < 3; ++comp)
        for (const auto& k : {kz, mkz})
            CHECK(std::abs(a.at(comp, k) - x.at(comp, k) / kTau) < 1e-14);

    dc::DivFreeField r = dc::random_divfree_field(3, 2, 1.0, 41);
    dc::FourierField rt = curl3(dc::curl_inverse(r.X));
    REQUIRE(rt.raw().size() == r.X.raw().size());
    for (std::size_t i = 0; i < r.X.raw().size(); ++i)
        CHECK(std::abs(rt.raw()[i] - r.X.raw()[i]) < 1e-12);
}

TEST_CASE("curl inverse rejects bad inputs") {
    dc::FourierField x(3, dc::Rank::Vector, 1);
    x.at(0, std::vector<int>{0, 0, 0}) = 0.3;  // constant (harmonic) part
    CHECK_THROWS_AS(dc::curl_inverse(x), dc::harmonic_obstruction);

    dc::FourierField y(3, dc::Rank::Vector, 1);
    y.at(0, std::vector<int>{1, 0, 0}) = cd(0.0, -0.5);  // X = (sin 2 pi x, 0, 0): div != 0
    y.at(0, std::vector<int>{-1, 0, 0}) = cd(0.0, 0.5);
    CHECK_THROWS_AS(dc::curl_inverse(y), dc::domain_error);
}

TEST_CASE("bracket identities") {
    dc::DivFreeField x = dc::random_divfree_field(3, 1, 1.0, 51);
    dc::DivFreeField y = dc::random_divfree_field(3, 1, 1.0, 52);
    dc::DivFreeField w = dc::random_divfree_field(3, 1, 1.0, 53);

    CHECK(dc::bracket(x.X, x.X).max_abs_coeff() < 1e-12);

    dc::FourierField xy = dc::bracket(x.X, y.X);
    dc::FourierField yx = dc::bracket(y.X, x.X);
    CHECK(dc::field_sum(xy, yx).max_abs_coeff() < 1e-12);

    // Jacobi identity: cyclic sum vanishes to roundoff (products are exact)
    dc::FourierField j1 = dc::bracket(dc::bracket(x.X, y.X), w.X);
    dc::FourierField j2 = dc::bracket(dc::bracket(y.X, w.X), x.X);
    dc::FourierField j3 = dc::bracket(dc::bracket(w.X, x.X), y.X);
    CHECK(dc::field_sum(dc::field_sum(j1, j2), j3).max_abs_coeff() < 1e-10);

    dc::FourierField c1(3, dc::Rank::Vector, 0);
    dc::FourierField c2(3, dc::Rank::Vector, 0);
    c1.at(0, std::vector<int>{0, 0, 0}) = 1.0;
    c1.at(2, std::vector<int>{0, 0, 0}) = -0.5;
    c2.at(1, std::vector<int>{0, 0, 0}) = 0.7;
    CHECK(dc::bracket(c1, c2).max_abs_coeff() == 0.0);
}

TEST_CASE("conformal geometry invariants") {
    dc::FourierField a(2, dc::Rank::Scalar, 1);
    a.at(0, std::vector<int>{1, 0}) = 0.15;
    a.at(0, std::vector<int>{-1, 0}) = 0.15;  // A = 0.3 cos 2 pi x
    dc::ConformalMetric m(a);

    SUBCASE("connection symmetry and metric compatibility") {
        for (int u = 0; u < 2; ++u)
            for (int p = 0; p < 2; ++p)
                for (int q = 0; q < 2; ++q)
                    CHECK(field_gap(m.christoffel(u, p, q), m.christoffel(u, q, p)) == 0.0);
        // nabla g = 0 for g = e^A I reduces to Gamma^a_{cb} + Gamma^b_{ca} = delta_ab d_c A
        for (int aa = 0; aa < 2; ++aa) {
            for (int bb = 0; bb < 2; ++bb) {
                for (int cc = 0; cc < 2; ++cc) {
                    dc::FourierField lhs =
                        dc::field_sum(m.christoffel(aa, cc, bb), m.christoffel(bb, cc, aa));
                    dc::FourierField rhs = aa == bb ? a.derivative(cc)
                                                    : dc::field_scaled(a.derivative(cc), 0.0);
                    CHECK(field_gap(lhs, rhs) < 1e-14);
                }
            }
        }
    }

    SUBCASE("hessian trace equals the laplace-beltrami operator") {
        dc::FourierField f = dc::random_scalar_field(2, 2, 1.0, 61);
        dc::GridField h = m.hessian(f, {64, 64});
        dc::GridField lap = m.laplacian(f, {64, 64});
        double scale = 0.0;
        for (std::int64_t i = 0; i < lap.points(); ++i)
            scale = std::max(scale, std::fabs(lap.value(0, i)));
        for (std::int64_t i = 0; i < lap.points(); ++i) {
            dc::MatN hm = h.matrix_at(i, 2);
            CHECK(std::fabs(hm(0, 0) + hm(1, 1) - lap.value(0, i)) < 1e-10 * (1.0 + scale));
        }
    }

    SUBCASE("total curvature of the torus vanishes") {
        dc::GridField k = m.curvature({64, 64});
        dc::GridField dens = m.area_density({64, 64});
        double total = 0.0;
        for (std::int64_t i = 0; i < k.points(); ++i) total += k.value(0, i) * dens.value(0, i);
        total /= static_cast<double>(k.points());
        CHECK(std::fabs(total) < 1e-10);
    }

    SUBCASE("flat and constant conformal factors are curvature-free") {
        dc::ConformalMetric flat(dc::FourierField(2, dc::Rank::Scalar, 0));
        dc::GridField k0 = flat.curvature({8, 8});
        for (std::int64_t i = 0; i < k0.points(); ++i) CHECK(k0.value(0, i) == 0.0);

        dc::FourierField cf(2, dc::Rank::Scalar, 0);
        cf.at(0, std::vector<int>{0, 0}) = 0.7;
        dc::GridField kc = dc::ConformalMetric(cf).curvature({8, 8});
        for (std::int64_t i = 0; i < kc.points(); ++i) CHECK(std::fabs(kc.value(0, i)) < 1e-14);
    }

    SUBCASE("poisson bracket antisymmetry and flat form") {
        dc::FourierField f = dc::random_scalar_field(2, 1, 1.0, 62);
        dc::FourierField h = dc::random_scalar_field(2, 1, 1.0, 63);
        dc::GridField fh = m.poisson(f, h, {32, 32});
        dc::GridField hf = m.poisson(h, f, {32, 32});
        dc::GridField ff = m.poisson(f, f, {32, 32});
        double scale = 0.0;
        for (std::int64_t i = 0; i < fh.points(); ++i)
            scale = std::max(scale, std::fabs(fh.value(0, i)));
        for (std::int64_t i = 0; i < fh.points(); ++i) {
            CHECK(std::fabs(fh.value(0, i) + hf.value(0, i)) < 1e-13 * (1.0 + scale));
            CHECK(std::fabs(ff.value(0, i)) < 1e-13 * (1.0 + scale));
        }
        dc::ConformalMetric flat(dc::FourierField(2, dc::Rank::Scalar, 0));
        dc::GridField pb = flat.poisson(f, h, {32, 32});
        dc::FourierField want = dc::field_sum(
            dc::multiply(f.derivative(0), h.derivative(1)),
            dc::field_scaled(dc::multiply(f.derivative(1), h.derivative(0)), -1.0));
        std::vector<double> x(2);
        for (std::int64_t i = 0; i < pb.points(); ++i) {
            pb.coords(i, x.data());
            CHECK(std::fabs(pb.value(0, i) - want.evaluate(x)) < 1e-11 * (1.0 + scale));
        }
    }

    SUBCASE("covariant jacobian reduces to the plain jacobian when flat") {
        dc::ConformalMetric flat(dc::FourierField(2, dc::Rank::Scalar, 0));
        dc::DivFreeField v = dc::random_divfree_field(2, 1, 1.0, 64);
        dc::GridField cj = flat.covariant_jacobian(v.X, {16, 16});
        std::vector<double> x(2);
        for (std::int64_t i = 0; i < cj.points(); ++i) {
            cj.coords(i, x.data());
            dc::MatN got = cj.matrix_at(i, 2);
            for (int r = 0; r < 2; ++r)
                for (int c = 0; c < 2; ++c) {
                    const double want = v.X.component(r).derivative(c).evaluate(x);
                    CHECK(std::fabs(got(r, c) - want) < 1e-11);
                }
        }
    }
}

TEST_CASE("spectral tail detects under-resolution") {
    dc::FourierField mild(2, dc::Rank::Scalar, 1);
    mild.at(0, std::vector<int>{1, 0}) = 0.15;
    mild.at(0, std::vector<int>{-1, 0}) = 0.15;
    dc::GridField dens = dc::ConformalMetric(mild).area_density({64, 64});
    CHECK(dc::spectral_tail_fraction(dens) < 1e-9);

    dc::FourierField strong(2, dc::Rank::Scalar, 4);
    strong.at(0, std::vector<int>{4, 0}) = 1.5;
    strong.at(0, std::vector<int>{-4, 0}) = 1.5;  // A = 3 cos(8 pi x)
    dc::GridField coarse = dc::ConformalMetric(strong).area_density({16, 16});
    CHECK(dc::spectral_tail_fraction(coarse) > 1e-9);
}

TEST_CASE("random generators respect the declared structure") {
    dc::DivFreeField v = dc::random_divfree_field(3, 2, 1.0, 71);
    dc::FourierField div(3, dc::Rank::Scalar, 2);
    for (int a = 0; a < 3; ++a) div = dc::field_sum(div, v.X.component(a).derivative(a));
    CHECK(div.max_abs_coeff() < 1e-11);
    CHECK(v.X.at(0, std::vector<int>{0, 0, 0}) == cd(0.0, 0.0));

    dc::FourierField sp = dc::random_shear_profile(2, 0, 2, 1.0, 72);
    CHECK(!sp.depends_on_axis(0));
    CHECK(sp.depends_on_axis(1));
    CHECK(sp.is_hermitian(0.0));

    dc::FourierField sc = dc::random_scalar_field(2, 2, 1.0, 73);
    CHECK(sc.is_hermitian(0.0));
    CHECK(sc.at(0, std::vector<int>{0, 0}) == cd(0.0, 0.0));
}

TEST_CASE("grid validation") {
    dc::FourierField f = dc::random_scalar_field(2, 1, 1.0, 81);
    CHECK_THROWS_AS(dc::sample(f, {12, 16}), dc::domain_error);  // not a power of two
    CHECK_THROWS_AS(dc::sample(f, {2, 16}), dc::domain_error);   // below the minimum size
}

TEST_CASE("two-grid protocol reports zero error on resolved integrands") {
    dc::FourierField s = sin_mode(2, {1, 0}, 1);
    dc::FourierField s2 = dc::multiply(s, s);
    dc::GridSpec spec = dc::GridSpec::square(2, 8, 16);
    dc::Refined r = dc::refined_value(
        spec, [&](const std::vector<int>& shape) { return dc::integrate(dc::sample(s2, shape)); });
    CHECK(r.value == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(r.error < 1e-15);
}
