// Volume-preserving diffeomorphisms of T^N assembled as words in exactly
// invertible primitives.  No numerical map inversion happens anywhere: every
// primitive knows its exact inverse, so w^{-1}(x) is as cheap and as accurate
// as w(x).  Jacobians are exact (chain rule over letters).
#pragma once

#include <memory>
#include <variant>
#include <vector>

#include "diffcoh/matfun.hpp"
#include "diffcoh/parallel.hpp"
#include "diffcoh/torusfield.hpp"

namespace diffcoh {

// x |-> M x mod 1 with M integer and det M = 1 (checked in exact arithmetic).
struct LinearTorus {
    Eigen::MatrixXi m;
    explicit LinearTorus(Eigen::MatrixXi mat);
    Eigen::MatrixXi inverse_matrix() const;  // integer adjugate
};

// x |-> x + v mod 1.
struct Translation {
    Eigen::VectorXd v;
};

// x_axis |-> x_axis + phi(other coordinates); phi must not depend on its own axis.
struct Shear {
    int axis = 0;
    FourierField phi;
    Shear(int ax, FourierField profile);
};

// Strang splitting of the time-1 flow of H(x, y) = F(x) + G(y) on T^2:
// an exact composition of shears, hence exactly area-preserving and exactly
// invertible at every step count.
struct HamSplit {
    FourierField f_part;  // depends on x only
    FourierField g_part;  // depends on y only
    int steps = 1;
    HamSplit(FourierField f, FourierField g, int steps_);
};

using Primitive = std::variant<LinearTorus, Translation, Shear, HamSplit>;

struct Letter {
    Primitive prim;
    int exp = 1;  // +1 or -1
};

// Word [l1, l2, ..., lm] acts as the composition l1 ∘ l2 ∘ ... ∘ lm
// (the rightmost letter is applied first), so concat(w1, w2) is "w2 first".
struct DiffeoWord {
    std::vector<Letter> letters;
    int dim = 2;

    static DiffeoWord identity(int dim);
};

int primitive_dim(const Primitive& p);
DiffeoWord make_word(int dim, std::vector<Letter> letters);
DiffeoWord concat(const DiffeoWord& w1, const DiffeoWord& w2);
DiffeoWord inverse_word(const DiffeoWord& w);
// Free-group reduction: cancels adjacent (letter, letter^{-1}) pairs of
// structurally identical primitives.  Never applied implicitly.
DiffeoWord reduce(const DiffeoWord& w);

VecN apply(const DiffeoWord& w, const VecN& x);            // result mod 1
MatN jacobian(const DiffeoWord& w, const VecN& x);
VecN apply_lift(const DiffeoWord& w, const VecN& x);       // canonical lift to R^N, no wrap

// The canonical path from the identity to the word: translations t*v, shear
// profiles t*phi, split Hamiltonian flows run for time t.  Integer-linear
// letters admit no such path and are rejected.
struct Isotopy {
    DiffeoWord target;
    explicit Isotopy(DiffeoWord w);
    DiffeoWord at(double t) const;  // at(0) = identity, at(1) = target
};

// Evaluable field of geometric structures on T^N.  Pushforwards stay lazy so
// that w^{-1}(grid point) is evaluated exactly rather than interpolated;
// grids are materialized only for quadrature.
class StructureField {
public:
    enum class Kind { Metric, Complex };

    static StructureField standard_complex(int n);            // J0 on T^{2n}
    static StructureField standard_metric(int dim);            // identity metric
    static StructureField constant(Kind kind, Eigen::MatrixXd m);
    static StructureField from_field(Kind kind, FourierField f);  // validated at materialization
    static StructureField pushed(const DiffeoWord& w, StructureField base);

    Kind kind() const { return kind_; }
    int dim() const { return dim_; }
    MatN evaluate(const VecN& x) const;

private:
    struct Pushed {
        DiffeoWord inverse;  // stored inverse word: evaluation needs w^{-1}
        DiffeoWord forward;
        std::shared_ptr<const StructureField> base;
    };
    StructureField() = default;
    Kind kind_ = Kind::Complex;
    int dim_ = 0;
    std::variant<Eigen::MatrixXd, FourierField, Pushed> data_;
};

StructureField pushforward_J(const DiffeoWord& w, const StructureField& j);
StructureField pushforward_metric(const DiffeoWord& w, const StructureField& g);

// Materialize on a grid, validating the defining relations at every point
// (J^2 = -I and omega-compatibility, resp. symmetry and det = 1) to `tol`,
// measured relative to the pointwise magnitude of the structure so that
// well-conditioned violations are caught while legitimate ill-conditioned
// pushforwards pass; violations raise numeric_error.
GridField structure_grid(const StructureField& s, const std::vector<int>& shape, Exec exec,
                         double tol = 1e-8);

}  // namespace diffcoh
