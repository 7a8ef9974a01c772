#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "doctest.h"

#include "diffcoh/diffeo.hpp"
#include "diffcoh/errors.hpp"
#include "diffcoh/groupcoc.hpp"
#include "diffcoh/parallel.hpp"
#include "diffcoh/torusfield.hpp"

namespace dc = diffcoh;

namespace {

Eigen::Matrix2i mat2i(int a, int b, int c, int d) {
    Eigen::Matrix2i m;
    m << a, b, c, d;
    return m;
}

dc::DiffeoWord linear_word(const Eigen::Matrix2i& m) {
    return dc::make_word(2, {{dc::LinearTorus(Eigen::MatrixXi(m)), 1}});
}

dc::DiffeoWord shear_word(int axis, int band, double amp, std::uint64_t seed) {
    return dc::make_word(2, {{dc::Shear(axis, dc::random_shear_profile(2, axis, band, amp, seed)), 1}});
}

const dc::GridSpec kGrids = dc::GridSpec::square(2, 32, 64);

}  // namespace

TEST_CASE("delta2 restricted to integer linear words matches the closed form") {
    struct Pair {
        Eigen::Matrix2i a, b;
        double frozen;
    };
    // frozen values computed from the half-plane triangle directly
    const Pair pairs[] = {
        {mat2i(2, 1, 1, 1), mat2i(1, 1, 1, 2), -0.643501108793283},
        {mat2i(1, 2, 0, 1), mat2i(1, 0, 3, 1), -0.146081130606238},
        {mat2i(2, 3, 1, 2), mat2i(3, 2, 4, 3), 0.130250326668769},
        {mat2i(1, 1, 0, 1), mat2i(1, 0, 1, 1), 0.0},
    };
    dc::StructureField j0 = dc::StructureField::standard_complex(1);
    for (const Pair& p : pairs) {
        const double closed = dc::sl2z_delta(p.a, p.b);
        CHECK(std::fabs(closed - p.frozen) < 1e-12);
        dc::CocycleReport r =
            dc::delta2(linear_word(p.a), linear_word(p.b), j0, kGrids, dc::Exec::Serial);
        CHECK(std::fabs(r.value - closed) < 1e-10);
        CHECK(r.error_estimate < 1e-10);  // fibers are constant: both grids agree
        CHECK(std::fabs(r.value) <= std::numbers::pi + r.error_estimate);
    }
}

TEST_CASE("delta2 is bounded by the area bound on mixed words") {
    dc::StructureField j0 = dc::StructureField::standard_complex(1);
    for (int s = 0; s < 3; ++s) {
        dc::DiffeoWord f = dc::concat(shear_word(0, 2, 0.6, 300 + s), linear_word(mat2i(1, 1, 0, 1)));
        dc::DiffeoWord g = dc::concat(linear_word(mat2i(1, 0, 1, 1)), shear_word(1, 2, 0.5, 310 + s));
        dc::CocycleReport r = dc::delta2(f, g, j0, kGrids);
        CHECK(std::fabs(r.value) <= std::numbers::pi + r.error_estimate);
        CHECK(r.resolution == std::vector<int>{64, 64});
        CHECK(!r.convention_tag.empty());
    }
}

TEST_CASE("delta2 vanishes when either argument is the identity") {
    dc::StructureField j0 = dc::StructureField::standard_complex(1);
    dc::DiffeoWord id = dc::DiffeoWord::identity(2);
    dc::DiffeoWord f = shear_word(0, 2, 0.5, 320);
    CHECK(std::fabs(dc::delta2(id, f, j0, kGrids).value) < 1e-12);
    CHECK(std::fabs(dc::delta2(f, id, j0, kGrids).value) < 1e-12);
}

TEST_CASE("coboundary defect vanishes within the quoted error") {
    dc::StructureField j0 = dc::StructureField::standard_complex(1);

    SUBCASE("integer linear triples are exact") {
        dc::DiffeoWord f1 = linear_word(mat2i(1, 1, 0, 1));
        dc::DiffeoWord f2 = linear_word(mat2i(1, 0, 1, 1));
        dc::DiffeoWord f3 = linear_word(mat2i(2, 1, 1, 1));
        dc::CocycleReport r = dc::cocycle_defect(f1, f2, f3, j0, kGrids, dc::Exec::Serial);
        CHECK(std::fabs(r.value) < 1e-10);
    }

    SUBCASE("shear and linear triples vanish to estimate") {
        for (int s = 0; s < 3; ++s) {
            dc::DiffeoWord f1 = shear_word(0, 2, 0.4, 330 + s);
            dc::DiffeoWord f2 = linear_word(mat2i(1, 1, 0, 1));
            dc::DiffeoWord f3 = shear_word(1, 2, 0.4, 340 + s);
            dc::CocycleReport r = dc::cocycle_defect(f1, f2, f3, j0, kGrids);
            CHECK(std::fabs(r.value) <= 10.0 * r.error_estimate + 1e-12);
        }
    }
}

TEST_CASE("degree-2 geodesic simplex agrees with the triangle cocycle") {
    dc::StructureField j0 = dc::StructureField::standard_complex(1);
    dc::DiffeoWord w1 = linear_word(mat2i(2, 1, 1, 1));
    dc::DiffeoWord w2 = linear_word(mat2i(1, 1, 1, 2));
    std::vector<dc::DiffeoWord> words{w1, w2};
    dc::QuadratureSpec quad;
    dc::CocycleReport simp = dc::simplex_integrate(2, j0, words, dc::JoinRule::Geodesic,
                                                   dc::FiberForm::Kaehler, quad, kGrids);
    const double tri = dc::sl2z_delta(mat2i(2, 1, 1, 1), mat2i(1, 1, 1, 2));
    // quadrature truncation dominates: the 12-node rule resolves the area to ~2e-10
    CHECK(std::fabs(simp.value - tri) < 5e-9);
    CHECK(simp.error_estimate < 1e-9);

    // shear words go through the same path; just bound them
    std::vector<dc::DiffeoWord> mixed{shear_word(0, 1, 0.4, 350), w1};
    dc::CocycleReport r = dc::simplex_integrate(2, j0, mixed, dc::JoinRule::Geodesic,
                                                dc::FiberForm::Kaehler, quad, kGrids);
    CHECK(std::fabs(r.value) <= std::numbers::pi + r.error_estimate + 5e-9);
}

TEST_CASE("degree-5 simplex on metric fibers") {
    dc::StructureField g0 = dc::StructureField::standard_metric(2);
    std::vector<dc::DiffeoWord> words;
    for (int i = 0; i < 5; ++i)
        words.push_back(i % 2 == 0 ? shear_word(0, 1, 0.3, 360 + i) : shear_word(1, 1, 0.3, 360 + i));
    dc::QuadratureSpec quad;
    quad.mc_nodes = 2000;
    quad.seed = 9;
    dc::GridSpec small = dc::GridSpec::square(2, 8, 16);
    dc::CocycleReport r = dc::simplex_integrate(5, g0, words, dc::JoinRule::Straight,
                                                dc::FiberForm::BorelOdd, quad, small);
    // 2x2 metric fibers cannot support a degree-5 alternating form
    CHECK(r.value == 0.0);
    CHECK(r.note.find("identically-zero") != std::string::npos);
}

TEST_CASE("simplex validation") {
    dc::StructureField j0 = dc::StructureField::standard_complex(1);
    dc::StructureField g0 = dc::StructureField::standard_metric(2);
    std::vector<dc::DiffeoWord> two{linear_word(mat2i(1, 1, 0, 1)), linear_word(mat2i(1, 0, 1, 1))};
    dc::QuadratureSpec quad;
    CHECK_THROWS_AS(dc::simplex_integrate(3, j0, two, dc::JoinRule::Geodesic,
                                          dc::FiberForm::Kaehler, quad, kGrids),
                    dc::domain_error);  // Kaehler pairs with degree 2 only
    CHECK_THROWS_AS(dc::simplex_integrate(2, g0, two, dc::JoinRule::Geodesic,
                                          dc::FiberForm::Kaehler, quad, kGrids),
                    dc::domain_error);  // Kaehler needs a complex-structure base
    CHECK_THROWS_AS(dc::simplex_integrate(2, j0, {two.data(), 1}, dc::JoinRule::Geodesic,
                                          dc::FiberForm::Kaehler, quad, kGrids),
                    dc::domain_error);  // word count must equal the degree
}

TEST_CASE("free-group word reduction") {
    CHECK(dc::reduce_fg_word("fF") == "");
    CHECK(dc::reduce_fg_word("fgGf") == "ff");
    CHECK(dc::reduce_fg_word("GgfF") == "");
    CHECK(dc::reduce_fg_word("fgf") == "fgf");
    CHECK(dc::reduce_fg_word("FfGgFf") == "");
    CHECK_THROWS_AS(dc::reduce_fg_word("fxg"), dc::domain_error);
}

TEST_CASE("substitution builds the expected composition") {
    dc::DiffeoWord f = shear_word(0, 1, 0.3, 370);
    dc::DiffeoWord g = linear_word(mat2i(1, 1, 0, 1));
    dc::DiffeoWord w = dc::substitute("fgF", f, g);
    dc::VecN x(2);
    x << 0.3, 0.7;
    dc::VecN want = dc::apply(f, dc::apply(g, dc::apply(dc::inverse_word(f), x)));
    dc::VecN got = dc::apply(w, x);
    for (int i = 0; i < 2; ++i) {
        double d = std::fabs(got(i) - want(i));
        CHECK(std::min(d, 1.0 - d) < 1e-13);
    }
    CHECK(dc::substitute("", f, g).letters.empty());
}

TEST_CASE("cycle checker") {
    SUBCASE("a boundary-of-boundary combination is a cycle") {
        dc::L1Chain chain;
        chain.terms = {{1.0, "g", "fG"}, {-1.0, "fg", "fG"}, {1.0, "f", "gfG"}, {-1.0, "f", "g"}};
        dc::CycleCheck c = dc::check_cycle(chain);
        CHECK(c.is_cycle);
        CHECK(c.residual.empty());
        CHECK(c.l1_norm == doctest::Approx(4.0));
    }

    SUBCASE("a single term is not a cycle") {
        dc::L1Chain chain;
        chain.terms = {{1.0, "f", "g"}};
        dc::CycleCheck c = dc::check_cycle(chain);
        CHECK(!c.is_cycle);
        CHECK(c.residual.size() == 3);  // [fg], [f], [g]
    }

    SUBCASE("identity terms are dropped from the boundary") {
        dc::L1Chain chain;
        chain.terms = {{1.0, "f", "F"}};  // [fF] = identity
        dc::CycleCheck c = dc::check_cycle(chain);
        CHECK(!c.is_cycle);
        CHECK(c.residual.size() == 2);  // only [f] and [F] remain
    }

    SUBCASE("the empty chain is a cycle of norm zero") {
        dc::CycleCheck c = dc::check_cycle(dc::L1Chain{});
        CHECK(c.is_cycle);
        CHECK(c.l1_norm == 0.0);
    }
}

TEST_CASE("certificate machinery") {
    dc::StructureField j0 = dc::StructureField::standard_complex(1);
    dc::DiffeoWord f = linear_word(mat2i(2, 1, 1, 1));
    dc::DiffeoWord g = linear_word(mat2i(1, 1, 1, 2));
    // the pairing only applies to cycles, so feed it a boundary-of-boundary one
    dc::L1Chain chain;
    chain.terms = {{1.0, "g", "fG"}, {-1.0, "fg", "fG"}, {1.0, "f", "gfG"}, {-1.0, "f", "g"}};
    REQUIRE(dc::check_cycle(chain).is_cycle);

    dc::Certificate c = dc::l1_certificate(chain, f, g, j0, kGrids, dc::Exec::Serial);
    REQUIRE(c.term_values.size() == 4);

    SUBCASE("pairing is linear in the chain coefficients") {
        dc::L1Chain scaled = chain;
        for (auto& t : scaled.terms) t.a *= -2.5;
        dc::Certificate cs = dc::l1_certificate(scaled, f, g, j0, kGrids, dc::Exec::Serial);
        CHECK(std::fabs(cs.pairing + 2.5 * c.pairing) < 1e-12 * (1.0 + std::fabs(c.pairing)));
    }

    SUBCASE("margin and verdict are consistent") {
        CHECK(c.margin == doctest::Approx(std::fabs(c.pairing) - c.accumulated_error));
        if (c.margin > 0.0) CHECK(c.verdict == "non-amenability certified");

        dc::Certificate zero = dc::l1_certificate(dc::L1Chain{}, f, g, j0, kGrids, dc::Exec::Serial);
        CHECK(zero.pairing == 0.0);
        CHECK(zero.verdict == "inconclusive");
    }

    SUBCASE("term values recompose the pairing") {
        double sum = 0.0;
        for (std::size_t i = 0; i < chain.terms.size(); ++i)
            sum += chain.terms[i].a * c.term_values[i];
        CHECK(std::fabs(sum - c.pairing) < 1e-13 * (1.0 + std::fabs(c.pairing)));
    }

    SUBCASE("sensitivity probe is deterministic") {
        dc::GridSpec small = dc::GridSpec::square(2, 16, 32);
        double s1 = dc::sensitivity_probe(f, g, chain, j0, 1e-3, 77, small, dc::Exec::Serial);
        double s2 = dc::sensitivity_probe(f, g, chain, j0, 1e-3, 77, small, dc::Exec::Serial);
        CHECK(s1 == s2);
        CHECK(s1 >= 0.0);
    }
}
