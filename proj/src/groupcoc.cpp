#include "diffcoh/groupcoc.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <complex>
#include <map>
#include <numbers>
#include <sstream>

#include "diffcoh/errors.hpp"
#include "diffcoh/matfun.hpp"
#include "diffcoh/symspace.hpp"

namespace diffcoh {

namespace {

std::complex<double> chart_point(const Eigen::MatrixXd& j) {
    const HalfPlanePoint z = j_to_halfplane(SiegelJ(j));
    return {z.u, z.v};
}

// Mean of the signed fiber area over one grid.  Exceptions raised inside the
// parallel fill are converted to a flag and rethrown afterwards.
double delta2_on_grid(const DiffeoWord& f1, const DiffeoWord& f12, const StructureField& j0,
                      const std::vector<int>& shape, Exec exec) {
    const GridField g0 = structure_grid(j0, shape, exec);
    const GridField g1 = structure_grid(pushforward_J(f1, j0), shape, exec);
    const GridField g2 = structure_grid(pushforward_J(f12, j0), shape, exec);
    std::atomic<bool> failed{false};
    const double value = mean_map(exec, g0.points(), [&](std::int64_t i) {
        try {
            return hyp_area_signed(chart_point(g0.matrix_at(i, 2)), chart_point(g1.matrix_at(i, 2)),
                                   chart_point(g2.matrix_at(i, 2)));
        } catch (const std::exception&) {
            failed.store(true);
            return 0.0;
        }
    });
    if (failed.load())
        throw numeric_error("fiber chart evaluation failed on the grid (structure lost positivity)");
    return value;
}

Eigen::Matrix2d to_double(const Eigen::Matrix2i& m) {
    Eigen::Matrix2d d;
    d << m(0, 0), m(0, 1), m(1, 0), m(1, 1);
    return d;
}

// Gauss-Legendre nodes/weights on [0,1] (Newton iteration on the Legendre recurrence).
void gauss_legendre01(int n, std::vector<double>& nodes, std::vector<double>& weights) {
    nodes.resize(n);
    weights.resize(n);
    for (int i = 0; i < n; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        nodes[i] = 0.5 * (1.0 - x);  // descending roots -> ascending nodes
        weights[i] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
}

Eigen::MatrixXd spd_sqrt_cached(const Eigen::MatrixXd& a, double t) { return spd_power(a, t); }

Eigen::MatrixXd seg_point(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double t, JoinRule join) {
    if (join == JoinRule::Straight) return (1.0 - t) * a + t * b;
    const Eigen::MatrixXd r = spd_sqrt_cached(a, 0.5);
    const Eigen::MatrixXd ri = spd_sqrt_cached(a, -0.5);
    Eigen::MatrixXd mid = ri * b * ri;
    mid = 0.5 * (mid + mid.transpose());
    Eigen::MatrixXd g = r * spd_power(mid, t) * r;
    return 0.5 * (g + g.transpose());
}

Eigen::MatrixXd simplex_point(std::span<const Eigen::MatrixXd> verts, std::span<const double> s,
                              JoinRule join) {
    if (verts.size() == 1) return verts[0];
    const Eigen::MatrixXd tail = simplex_point(verts.subspan(1), s.subspan(1), join);
    return seg_point(verts.front(), tail, s.front(), join);
}

// Form pullback at cube coordinates s: central finite differences in each join
// parameter give the tangent matrices fed to the fiber form.
double form_at(std::span<const Eigen::MatrixXd> verts, std::span<const double> s, JoinRule join,
               FiberForm form, const Eigen::MatrixXd& omega) {
    const int d = static_cast<int>(s.size());
    const double h = 1e-5;
    std::vector<double> sp(s.begin(), s.end());
    std::vector<Eigen::MatrixXd> partials(d);
    for (int i = 0; i < d; ++i) {
        sp[i] = s[i] + h;
        const Eigen::MatrixXd gp = simplex_point(verts, sp, join);
        sp[i] = s[i] - h;
        const Eigen::MatrixXd gm = simplex_point(verts, sp, join);
        sp[i] = s[i];
        partials[i] = (gp - gm) / (2.0 * h);
    }
    const Eigen::MatrixXd g = simplex_point(verts, s, join);
    if (form == FiberForm::BorelOdd) return borel_odd_form(g, partials);
    // Kaehler fiber 2-form: back out J = omega * G from the chart and take
    // (1/2) Tr(J dJ_1 dJ_2), which equals the hyperbolic area form at n = 1.
    const Eigen::MatrixXd j = omega * g;
    const Eigen::MatrixXd dj1 = omega * partials[0];
    const Eigen::MatrixXd dj2 = omega * partials[1];
    return 0.5 * (j * dj1 * dj2).trace();
}

// Chart used for simplex vertices: complex structures pass through G = J^T omega
// into the SPD cone, metrics are already there.
Eigen::MatrixXd vertex_chart(const StructureField& s, const Eigen::MatrixXd& omega, const VecN& x) {
    const MatN v = s.evaluate(x);
    if (s.kind() == StructureField::Kind::Complex) {
        Eigen::MatrixXd g = v.transpose() * omega;
        return 0.5 * (g + g.transpose());
    }
    return v;
}

struct SimplexEval {
    double value = 0.0;
    double stat_error = 0.0;
};

SimplexEval simplex_on_grid(const std::vector<StructureField>& chain_fields, JoinRule join,
                            FiberForm form, const QuadratureSpec& quad,
                            const std::vector<int>& shape, int degree, int dim,
                            const Eigen::MatrixXd& omega, Exec exec) {
    const int nverts = degree + 1;
    SimplexEval out;
    if (degree <= 3) {
        std::vector<double> nodes, weights;
        gauss_legendre01(quad.tensor_nodes, nodes, weights);
        GridField probe(shape, 1);
        std::atomic<bool> failed{false};
        out.value = mean_map(exec, probe.points(), [&](std::int64_t idx) {
            try {
                double xb[3];
                probe.coords(idx, xb);
                VecN x(dim);
                for (int a = 0; a < dim; ++a) x(a) = xb[a];
                std::vector<Eigen::MatrixXd> verts(nverts);
                for (int v = 0; v < nverts; ++v) verts[v] = vertex_chart(chain_fields[v], omega, x);
                // tensor Gauss-Legendre over the join cube
                std::vector<int> mi(degree, 0);
                std::vector<double> s(degree, 0.0);
                double acc = 0.0;
                while (true) {
                    double w = 1.0;
                    for (int i = 0; i < degree; ++i) {
                        s[i] = nodes[mi[i]];
                        w *= weights[mi[i]];
                    }
                    acc += w * form_at(verts, s, join, form, omega);
                    int carry = degree - 1;
                    while (carry >= 0 && ++mi[carry] == quad.tensor_nodes) mi[carry--] = 0;
                    if (carry < 0) break;
                }
                return acc;
            } catch (const std::exception&) {
                failed.store(true);
                return 0.0;
            }
        });
        if (failed.load()) throw numeric_error("simplex quadrature left the positive cone");
        return out;
    }
    // Monte Carlo over the joint space (join cube) x (torus).
    const std::int64_t n = quad.mc_nodes;
    std::vector<double> buf(static_cast<std::size_t>(n));
    std::atomic<bool> failed{false};
    fill_buffer(exec, n, buf.data(), [&](std::int64_t j) {
        try {
            const std::uint64_t base = static_cast<std::uint64_t>(j) * 16u;
            VecN x(dim);
            for (int a = 0; a < dim; ++a) x(a) = uniform01(quad.seed, base + static_cast<std::uint64_t>(a));
            std::vector<double> s(degree);
            for (int i = 0; i < degree; ++i)
                s[i] = uniform01(quad.seed, base + 8u + static_cast<std::uint64_t>(i));
            std::vector<Eigen::MatrixXd> verts(nverts);
            for (int v = 0; v < nverts; ++v) verts[v] = vertex_chart(chain_fields[v], omega, x);
            return form_at(verts, s, join, form, omega);
        } catch (const std::exception&) {
            failed.store(true);
            return 0.0;
        }
    });
    if (failed.load()) throw numeric_error("simplex quadrature left the positive cone");
    const double mean = pairwise_sum(buf) / static_cast<double>(n);
    std::vector<double> dev(buf.size());
    for (std::size_t i = 0; i < buf.size(); ++i) dev[i] = (buf[i] - mean) * (buf[i] - mean);
    const double var = pairwise_sum(dev) / std::max<double>(1.0, static_cast<double>(n - 1));
    out.value = mean;
    out.stat_error = std::sqrt(var / static_cast<double>(n));
    return out;
}

bool is_identity_char(char c) { return c == ' ' || c == '\t'; }

}  // namespace

CocycleReport delta2(const DiffeoWord& f1, const DiffeoWord& f2, const StructureField& j0,
                     const GridSpec& grids, Exec exec) {
    if (j0.kind() != StructureField::Kind::Complex)
        throw domain_error("delta2 needs a complex-structure base");
    if (j0.dim() != 2)
        throw domain_error("delta2 is implemented for the 2-torus fiber only");
    if (f1.dim != 2 || f2.dim != 2) throw domain_error("delta2 words must act on the 2-torus");
    const DiffeoWord f12 = concat(f1, f2);
    const double coarse = delta2_on_grid(f1, f12, j0, grids.coarse, exec);
    const double fine = delta2_on_grid(f1, f12, j0, grids.fine, exec);
    CocycleReport r;
    r.value = fine;
    r.resolution = grids.fine;
    r.error_estimate = std::abs(fine - coarse);
    r.convention_tag = kConventionTag;
    return r;
}

double sl2z_delta(const Eigen::Matrix2i& a, const Eigen::Matrix2i& b) {
    const long long da = static_cast<long long>(a(0, 0)) * a(1, 1) - static_cast<long long>(a(0, 1)) * a(1, 0);
    const long long db = static_cast<long long>(b(0, 0)) * b(1, 1) - static_cast<long long>(b(0, 1)) * b(1, 0);
    if (da != 1 || db != 1) throw domain_error("integer matrices must have determinant exactly 1");
    const HalfPlanePoint p0{0.0, 1.0};
    const Eigen::Matrix2d ad = to_double(a);
    const Eigen::Matrix2d abd = to_double(a) * to_double(b);
    const HalfPlanePoint p1 = halfplane_pushforward(ad, p0);
    const HalfPlanePoint p2 = halfplane_pushforward(abd, p0);
    return hyp_area_signed({p0.u, p0.v}, {p1.u, p1.v}, {p2.u, p2.v});
}

CocycleReport cocycle_defect(const DiffeoWord& f1, const DiffeoWord& f2, const DiffeoWord& f3,
                             const StructureField& j0, const GridSpec& grids, Exec exec) {
    const CocycleReport d23 = delta2(f2, f3, j0, grids, exec);
    const CocycleReport d12_3 = delta2(concat(f1, f2), f3, j0, grids, exec);
    const CocycleReport d1_23 = delta2(f1, concat(f2, f3), j0, grids, exec);
    const CocycleReport d12 = delta2(f1, f2, j0, grids, exec);
    CocycleReport r;
    r.value = d23.value - d12_3.value + d1_23.value - d12.value;
    r.resolution = grids.fine;
    r.error_estimate =
        d23.error_estimate + d12_3.error_estimate + d1_23.error_estimate + d12.error_estimate;
    r.convention_tag = kConventionTag;
    r.note = "bar-complex defect of delta2";
    return r;
}

CocycleReport simplex_integrate(int degree, const StructureField& base,
                                std::span<const DiffeoWord> words, JoinRule join, FiberForm form,
                                const QuadratureSpec& quad, const GridSpec& grids, Exec exec) {
    if (degree != 2 && degree != 5) throw domain_error("simplex degree must be 2 or 5");
    if (static_cast<int>(words.size()) != degree)
        throw domain_error("simplex needs exactly one word per degree");
    if (form == FiberForm::Kaehler) {
        if (degree != 2) throw domain_error("the Kaehler fiber form has degree 2");
        if (join != JoinRule::Geodesic)
            throw domain_error("the Kaehler form lives on the geodesic join of complex structures");
        if (base.kind() != StructureField::Kind::Complex)
            throw domain_error("the Kaehler form needs a complex-structure base");
    } else {
        if (base.kind() != StructureField::Kind::Metric)
            throw domain_error("the odd invariant form needs a metric base");
        if (degree != 5) throw domain_error("the odd invariant form is used at degree 5");
    }
    const int dim = base.dim();
    for (const DiffeoWord& w : words)
        if (w.dim != dim) throw domain_error("simplex words must act on the structure's torus");

    CocycleReport r;
    r.convention_tag = kConventionTag;
    r.resolution = grids.fine;
    if (form == FiberForm::BorelOdd && odd_form_vanishes_identically(dim, degree)) {
        r.note = "identically-zero form in this dimension";
        return r;
    }

    std::vector<StructureField> chain_fields;
    chain_fields.push_back(base);
    DiffeoWord prefix = DiffeoWord::identity(dim);
    for (const DiffeoWord& w : words) {
        prefix = concat(prefix, w);
        chain_fields.push_back(StructureField::pushed(prefix, base));
    }
    Eigen::MatrixXd omega;
    if (base.kind() == StructureField::Kind::Complex) omega = standard_omega(dim / 2);

    if (degree <= 3) {
        const SimplexEval coarse =
            simplex_on_grid(chain_fields, join, form, quad, grids.coarse, degree, dim, omega, exec);
        const SimplexEval fine =
            simplex_on_grid(chain_fields, join, form, quad, grids.fine, degree, dim, omega, exec);
        r.value = fine.value;
        r.error_estimate = std::abs(fine.value - coarse.value);
    } else {
        const SimplexEval mc =
            simplex_on_grid(chain_fields, join, form, quad, grids.fine, degree, dim, omega, exec);
        r.value = mc.value;
        r.error_estimate = mc.stat_error;
        r.note = "Monte Carlo; error_estimate is the standard error of the mean";
    }
    return r;
}

std::string reduce_fg_word(std::string_view word) {
    std::string out;
    for (char c : word) {
        if (is_identity_char(c)) continue;
        if (c != 'f' && c != 'g' && c != 'F' && c != 'G')
            throw domain_error(std::string("invalid generator '") + c + "' in word (use f, g, F, G)");
        const char inv = std::isupper(static_cast<unsigned char>(c))
                             ? static_cast<char>(std::tolower(static_cast<unsigned char>(c)))
                             : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
        if (!out.empty() && out.back() == inv)
            out.pop_back();
        else
            out.push_back(c);
    }
    return out;
}

CycleCheck check_cycle(const L1Chain& chain) {
    CycleCheck out;
    std::map<std::string, double> boundary;
    for (const L1Term& t : chain.terms) {
        out.l1_norm += std::abs(t.a);
        const std::string h = reduce_fg_word(t.h);
        const std::string k = reduce_fg_word(t.k);
        const std::string hk = reduce_fg_word(h + k);
        if (!hk.empty()) boundary[hk] += t.a;
        if (!h.empty()) boundary[h] -= t.a;
        if (!k.empty()) boundary[k] -= t.a;
    }
    const double tol = 1e-12 * (1.0 + out.l1_norm);
    for (const auto& [word, coeff] : boundary)
        if (std::abs(coeff) > tol) out.residual.emplace_back(word, coeff);
    out.is_cycle = out.residual.empty();
    return out;
}

DiffeoWord substitute(std::string_view word, const DiffeoWord& f, const DiffeoWord& g) {
    if (f.dim != g.dim) throw domain_error("generator words must share a dimension");
    DiffeoWord out = DiffeoWord::identity(f.dim);
    const DiffeoWord fi = inverse_word(f), gi = inverse_word(g);
    for (char c : word) {
        if (is_identity_char(c)) continue;
        switch (c) {
            case 'f': out = concat(out, f); break;
            case 'F': out = concat(out, fi); break;
            case 'g': out = concat(out, g); break;
            case 'G': out = concat(out, gi); break;
            default:
                throw domain_error(std::string("invalid generator '") + c + "' in word (use f, g, F, G)");
        }
    }
    return out;
}

Certificate l1_certificate(const L1Chain& chain, const DiffeoWord& f, const DiffeoWord& g,
                           const StructureField& j0, const GridSpec& grids, Exec exec) {
    const CycleCheck cc = check_cycle(chain);
    if (!cc.is_cycle) {
        std::ostringstream msg;
        msg << "chain is not a cycle; nonzero formal boundary:";
        for (const auto& [word, coeff] : cc.residual) msg << " [" << word << "] " << coeff << ";";
        throw domain_error(msg.str());
    }
    Certificate cert;
    for (const L1Term& t : chain.terms) {
        const CocycleReport r = delta2(substitute(t.h, f, g), substitute(t.k, f, g), j0, grids, exec);
        cert.term_values.push_back(r.value);
        cert.pairing += t.a * r.value;
        cert.accumulated_error += std::abs(t.a) * r.error_estimate;
    }
    cert.margin = std::abs(cert.pairing) - cert.accumulated_error;
    cert.verdict = (cert.margin > 0.0) ? "non-amenability certified" : "inconclusive";
    return cert;
}

double sensitivity_probe(const DiffeoWord& f, const DiffeoWord& g, const L1Chain& chain,
                         const StructureField& j0, double eps, std::uint64_t seed,
                         const GridSpec& grids, Exec exec) {
    if (eps < 0.0) throw domain_error("perturbation size must be nonnegative");
    const Certificate base = l1_certificate(chain, f, g, j0, grids, exec);
    double max_shift = 0.0;
    for (int probe = 0; probe < 4; ++probe) {
        const int axis = probe % 2;
        // band-1 profile on the complementary axis, amplitude eps
        FourierField phi(2, Rank::Scalar, 1);
        const double re = eps * (2.0 * uniform01(seed, 2 * probe) - 1.0);
        const double im = eps * (2.0 * uniform01(seed, 2 * probe + 1) - 1.0);
        std::vector<int> kplus(2, 0), kminus(2, 0);
        kplus[1 - axis] = 1;
        kminus[1 - axis] = -1;
        phi.at(0, kplus) = {0.5 * re, 0.5 * im};
        phi.at(0, kminus) = {0.5 * re, -0.5 * im};
        DiffeoWord probe_word = (probe < 2) ? f : g;
        probe_word.letters.push_back({Primitive{Shear(axis, phi)}, 1});
        const DiffeoWord& pf = (probe < 2) ? probe_word : f;
        const DiffeoWord& pg = (probe < 2) ? g : probe_word;
        const Certificate shifted = l1_certificate(chain, pf, pg, j0, grids, exec);
        max_shift = std::max(max_shift, std::abs(shifted.pairing - base.pairing));
    }
    return max_shift;
}

}  // namespace diffcoh
