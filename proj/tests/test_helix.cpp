#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "doctest.h"

#include "diffcoh/diffeo.hpp"
#include "diffcoh/errors.hpp"
#include "diffcoh/helix.hpp"
#include "diffcoh/parallel.hpp"
#include "diffcoh/torusfield.hpp"

namespace dc = diffcoh;
using cd = std::complex<double>;
constexpr double kPi = std::numbers::pi;
constexpr double kTau = 2.0 * std::numbers::pi;

namespace {

// X = (sin 2 pi z, cos 2 pi z, 0): curl X = 2 pi X, helicity 1 / (2 pi)
dc::DivFreeField chiral_field(double mirror) {
    dc::FourierField x(3, dc::Rank::Vector, 1);
    const std::vector<int> k{0, 0, 1}, mk{0, 0, -1};
    x.at(0, k) = cd(0.0, -0.5 * mirror);
    x.at(0, mk) = cd(0.0, 0.5 * mirror);
    x.at(1, k) = cd(0.5, 0.0);
    x.at(1, mk) = cd(0.5, 0.0);
    return dc::make_divfree(std::move(x));
}

}  // namespace

TEST_CASE("helicity closed forms") {
    CHECK(std::fabs(dc::helicity(chiral_field(1.0)) - 1.0 / kTau) < 1e-14);
    CHECK(std::fabs(dc::helicity(chiral_field(-1.0)) + 1.0 / kTau) < 1e-14);
}

TEST_CASE("helicity pairing is symmetric and bilinear") {
    dc::DivFreeField x = dc::random_divfree_field(3, 2, 1.0, 400);
    dc::DivFreeField y = dc::random_divfree_field(3, 2, 1.0, 401);
    dc::DivFreeField z = dc::random_divfree_field(3, 2, 1.0, 402);

    const double xy = dc::helicity_pair(x, y);
    CHECK(std::fabs(xy - dc::helicity_pair(y, x)) < 1e-12 * (1.0 + std::fabs(xy)));

    dc::DivFreeField comb = dc::make_divfree(
        dc::field_sum(dc::field_scaled(y.X, 2.0), dc::field_scaled(z.X, -0.5)));
    const double lin = dc::helicity_pair(x, comb);
    const double want = 2.0 * xy - 0.5 * dc::helicity_pair(x, z);
    CHECK(std::fabs(lin - want) < 1e-12 * (1.0 + std::fabs(want)));
}

TEST_CASE("helicity pairing is gauge-natural") {
    // <X, Y> only sees Y through its vorticity class: adding curl-free pieces to
    // the potential changes nothing, and the pairing of X with Y equals the
    // pairing computed from the potentials directly.
    dc::DivFreeField x = dc::random_divfree_field(3, 1, 1.0, 410);
    dc::DivFreeField y = dc::random_divfree_field(3, 1, 1.0, 411);
    dc::FourierField ax = dc::curl_inverse(x.X);
    // integral A_x . Y computed independently, component by component
    double direct = 0.0;
    for (int comp = 0; comp < 3; ++comp)
        direct += dc::multiply(ax.component(comp), y.X.component(comp)).integrate();
    const double pair = dc::helicity_pair(x, y);
    CHECK(std::fabs(pair - direct) < 1e-12 * (1.0 + std::fabs(pair)));
}

TEST_CASE("helicity requires zero flux") {
    dc::FourierField x(3, dc::Rank::Vector, 1);
    x.at(0, std::vector<int>{0, 0, 0}) = 1.0;  // constant drift
    CHECK_THROWS_AS(dc::helicity(dc::make_divfree(std::move(x))), dc::harmonic_obstruction);
}

TEST_CASE("biinvariant 3-form versus the evaluation form") {
    // one global sign relates them; it is fixed once by the bracket orientation
    for (int s = 0; s < 4; ++s) {
        dc::DivFreeField x = dc::random_divfree_field(3, 1, 1.0, 420 + 3 * s);
        dc::DivFreeField y = dc::random_divfree_field(3, 1, 1.0, 421 + 3 * s);
        dc::DivFreeField z = dc::random_divfree_field(3, 1, 1.0, 422 + 3 * s);
        dc::Lemma65Result r = dc::lemma65_check(x, y, z);
        REQUIRE(std::fabs(r.omega_eval) > 1e-8);
        CHECK(std::fabs(r.cartan_eval + r.omega_eval) < 1e-11 * (1.0 + std::fabs(r.omega_eval)));
        CHECK(r.ratio == doctest::Approx(-1.0).epsilon(1e-9));
        CHECK(std::fabs(r.cartan_eval -
                        dc::cartan_omega(x, y, z)) < 1e-13 * (1.0 + std::fabs(r.cartan_eval)));
        CHECK(std::fabs(r.omega_eval -
                        dc::evaluation_3form(x.X, y.X, z.X)) < 1e-13 * (1.0 + std::fabs(r.omega_eval)));
    }
}

TEST_CASE("cartan form is alternating") {
    dc::DivFreeField x = dc::random_divfree_field(3, 1, 1.0, 430);
    dc::DivFreeField y = dc::random_divfree_field(3, 1, 1.0, 431);
    dc::DivFreeField z = dc::random_divfree_field(3, 1, 1.0, 432);
    const double v = dc::cartan_omega(x, y, z);
    CHECK(std::fabs(dc::cartan_omega(y, x, z) + v) < 1e-11 * (1.0 + std::fabs(v)));
    CHECK(std::fabs(dc::cartan_omega(x, z, y) + v) < 1e-11 * (1.0 + std::fabs(v)));
    CHECK(std::fabs(dc::cartan_omega(x, y, y)) < 1e-11);
}

TEST_CASE("evaluation form on constant frames is the determinant") {
    dc::FourierField e0(3, dc::Rank::Vector, 0), e1(3, dc::Rank::Vector, 0),
        e2(3, dc::Rank::Vector, 0);
    const std::vector<int> z{0, 0, 0};
    e0.at(0, z) = 2.0;
    e1.at(1, z) = 0.5;
    e1.at(0, z) = 7.0;  // shear in the frame leaves the determinant at 1
    e2.at(2, z) = 1.0;
    CHECK(dc::evaluation_3form(e0, e1, e2) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("unit sphere closed forms") {
    for (int res : {48, 64}) {
        dc::S3Report r = dc::s3_checks(res);
        CHECK(std::fabs(r.volume_period - 2.0 * kPi * kPi) < 1e-8);
        CHECK(r.dmu_residual < 1e-5);
    }
}

TEST_CASE("integer pushforward preserves the pairing") {
    Eigen::MatrixXi m(3, 3);
    m << 1, 1, 0, 0, 1, 0, 1, 0, 1;  // det 1
    dc::DivFreeField x = dc::random_divfree_field(3, 1, 1.0, 440);
    dc::DivFreeField y = dc::random_divfree_field(3, 1, 1.0, 441);

    dc::FourierField px = dc::linear_pushforward_field(m, x.X);
    dc::FourierField py = dc::linear_pushforward_field(m, y.X);
    dc::DivFreeField dx = dc::make_divfree(px);  // stays divergence-free
    dc::DivFreeField dy = dc::make_divfree(py);

    const double before = dc::helicity_pair(x, y);
    const double after = dc::helicity_pair(dx, dy);
    CHECK(std::fabs(before - after) < 1e-12 * (1.0 + std::fabs(before)));

    Eigen::MatrixXi bad(3, 3);
    bad << 2, 0, 0, 0, 1, 0, 0, 0, 1;
    CHECK_THROWS_AS(dc::linear_pushforward_field(bad, x.X), dc::domain_error);
}

TEST_CASE("rotation vectors") {
    SUBCASE("translations rotate by exactly their vector") {
        dc::VecN v(2);
        v << 0.25, 0.5;
        dc::Isotopy iso(dc::make_word(2, {{dc::Translation{v}, 1}}));
        dc::HomologyVector rho = dc::asymptotic_cycle(iso, {16, 16}, dc::Exec::Serial);
        CHECK(rho(0) == 0.25);
        CHECK(rho(1) == 0.5);
    }

    SUBCASE("shears rotate by the profile mean") {
        dc::FourierField phi = dc::random_shear_profile(2, 0, 2, 0.4, 450);
        dc::FourierField lifted = phi;
        lifted.at(0, std::vector<int>{0, 0}) = 0.3;  // constant part moves the mean
        dc::Isotopy iso(dc::make_word(2, {{dc::Shear(0, lifted), 1}}));
        dc::HomologyVector rho = dc::asymptotic_cycle(iso, {64, 64});
        CHECK(std::fabs(rho(0) - 0.3) < 1e-12);
        CHECK(std::fabs(rho(1)) < 1e-14);
    }

    SUBCASE("split hamiltonian loops do not rotate") {
        dc::FourierField f(2, dc::Rank::Scalar, 1);
        f.at(0, std::vector<int>{1, 0}) = 0.05;
        f.at(0, std::vector<int>{-1, 0}) = 0.05;
        dc::FourierField g(2, dc::Rank::Scalar, 1);
        g.at(0, std::vector<int>{0, 1}) = cd(0.0, -0.04);
        g.at(0, std::vector<int>{0, -1}) = cd(0.0, 0.04);
        dc::Isotopy iso(dc::make_word(2, {{dc::HamSplit(f, g, 8), 1}}));
        dc::HomologyVector rho = dc::asymptotic_cycle(iso, {64, 64});
        CHECK(std::fabs(rho(0)) < 1e-10);
        CHECK(std::fabs(rho(1)) < 1e-10);
    }

    SUBCASE("pairing against integer classes is the inner product") {
        for (int s = 0; s < 10; ++s) {
            dc::FourierField phi = dc::random_shear_profile(2, 1, 2, 0.5, 460 + s);
            phi.at(0, std::vector<int>{0, 0}) = 0.1 * (s + 1);
            dc::DiffeoWord w = dc::make_word(
                2, {{dc::Shear(1, phi), 1}, {dc::Translation{(dc::VecN(2) << 0.2, 0.0).finished()}, 1}});
            dc::Isotopy iso(w);
            dc::HomologyVector rho = dc::asymptotic_cycle(iso, {32, 32});
            Eigen::VectorXi zc(2);
            zc << 2, -3;
            const double pairing = dc::schwartzman_pairing(iso, zc, {32, 32});
            CHECK(std::fabs(pairing - (2.0 * rho(0) - 3.0 * rho(1))) < 1e-10);
        }
    }
}
