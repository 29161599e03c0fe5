#ifndef GPL_SEMI_INFINITE_HPP
#define GPL_SEMI_INFINITE_HPP

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "gpl/environment.hpp"
#include "gpl/lattice.hpp"

namespace gpl {

enum class BusemannMode { ne_stationary, truncated_direction };

// log partition functions to a far corner over frame = [box.lo, box.hi + (1,1)];
// B(x,y) = L(x) - L(y)
class BusemannField {
public:
    BusemannField(Rect box, double rho, BusemannMode mode, std::vector<double> log_z);

    const Rect& box() const { return box_; }
    const Rect& frame() const { return frame_; }
    double rho() const { return rho_; }
    BusemannMode mode() const { return mode_; }

    double log_z(LatticePoint x) const { return log_z_[frame_.index(x)]; }
    double busemann(LatticePoint x, LatticePoint y) const { return log_z(x) - log_z(y); }
    // log I_z = B(z - e1, z), log J_z = B(z - e2, z)
    double log_i(LatticePoint z) const { return busemann(z - e1, z); }
    double log_j(LatticePoint z) const { return busemann(z - e2, z); }

private:
    Rect box_;
    Rect frame_;
    double rho_;
    BusemannMode mode_;
    std::vector<double> log_z_;
};

// ne_stationary needs env to carry a northeast boundary with parameter rho anchored at
// box.hi + (1,1). truncated_direction needs a boundary-free env and uses the plain polymer
// to box.lo + v_M with M = 16 * horizon_n (horizon_n defaults to the smallest N with the box
// inside box.lo + [0, v_N]).
BusemannField busemann_field(const WeightField& env, double rho, Rect box, BusemannMode mode, int horizon_n = 0);

// max over interior sites of |log(1/Y_z) - log(e^{-B(z,z+e1)} + e^{-B(z,z+e2)})|
double recovery_residual(const BusemannField& field, const WeightField& env);
// max cocycle defect of B summed along the staircase around every unit square
double cocycle_residual(const BusemannField& field);

class TransitionField {
public:
    TransitionField(Rect box, std::vector<double> p_e1);
    const Rect& box() const { return box_; }
    double p_e1(LatticePoint x) const { return p_[box_.index(x)]; }
    double p_e2(LatticePoint x) const { return 1.0 - p_e1(x); }

private:
    Rect box_;
    std::vector<double> p_;
};

TransitionField transitions(const BusemannField& field, const WeightField& env);

// g(x) = e1 iff theta_x <= p_e1(x); theta comes from the env's theta channel at `replica`
LatticePoint tree_step(const TransitionField& trans, const WeightField& env, LatticePoint x, std::uint32_t replica);

class ForwardTree {
public:
    ForwardTree(Rect box, std::vector<std::uint8_t> steps);
    const Rect& box() const { return box_; }
    // e1 or e2
    LatticePoint step(LatticePoint x) const { return steps_[box_.index(x)] == 1 ? e1 : e2; }
    // vertices from start while inside the box
    std::vector<LatticePoint> path(LatticePoint start) const;
    // first vertex of the path from start on the northeast boundary of the box
    LatticePoint exit_point(LatticePoint start) const;
    void write_csv(std::ostream& os) const;

private:
    Rect box_;
    std::vector<std::uint8_t> steps_;
};

ForwardTree forward_tree(const TransitionField& trans, const WeightField& env, std::uint32_t replica = 0);

// Dual graph on integer sites x standing for x - (1/2,1/2): step(x) = -g(x - e1 - e2).
// Defined for x - (1,1) in the forward box.
class DualTree {
public:
    explicit DualTree(const ForwardTree& tree) : tree_(tree) {}
    Rect box() const { return {tree_.box().lo + LatticePoint{1, 1}, tree_.box().hi + LatticePoint{1, 1}}; }
    LatticePoint step(LatticePoint x) const { return -tree_.step(x - LatticePoint{1, 1}); }
    // vertices from start until the first site outside box(); that site is included
    std::vector<LatticePoint> path(LatticePoint start) const;
    void write_csv(std::ostream& os) const;

private:
    const ForwardTree& tree_;
};

DualTree dual_tree(const ForwardTree& tree);

// first common vertex of the tree paths from a and b, or nullopt if one leaves the box first
std::optional<LatticePoint> coalescence_point(const ForwardTree& tree, LatticePoint a, LatticePoint b);
// same, drawing steps lazily from theta replica `replica`
std::optional<LatticePoint> coalescence_point(const TransitionField& trans, const WeightField& env,
                                              std::uint32_t replica, LatticePoint a, LatticePoint b);

// For starts on the southwest boundary of the box: does some dual path started just outside
// the northeast boundary reach the southwest boundary strictly between the two starts?
bool dual_separates(const ForwardTree& tree, LatticePoint a, LatticePoint b);

// number of dual edges crossing forward edges over the whole box
std::size_t crossing_count(const ForwardTree& tree);

struct HittingDistribution {
    Rect box;
    // northeast boundary in down-right order: top row left to right, then the right column downward
    std::vector<LatticePoint> boundary;
    std::vector<double> mass;

    std::size_t position(LatticePoint x) const;
};

std::vector<LatticePoint> northeast_boundary(const Rect& box);

HittingDistribution hitting_distribution(const TransitionField& trans, LatticePoint start);
// point mass at the realized exit site
HittingDistribution point_mass(const Rect& box, LatticePoint site);

double tv_distance(const HittingDistribution& h1, const HittingDistribution& h2);

// Exact probability that independent chains from a and b (moving together after meeting)
// first meet inside the box. Boxes up to 64 x 64.
double pair_coalescence_prob(const TransitionField& trans, LatticePoint a, LatticePoint b);

// Same probability for starts on one antidiagonal, any box size. The two chains cannot cross
// without meeting, so only ordered position pairs are stored: O(width^2) memory, O(width^2)
// work per level.
double level_pair_coalescence_prob(const TransitionField& trans, LatticePoint a, LatticePoint b);

// max over up-right paths u -> v of |Pi_{u,v} - Q^NE_{u,v}| and of the backward pair
// |reverse Pi_{v,u} - Q^SW_{u,v}|, by enumeration. env supplies the bulk weights and seed.
double backward_measure_check(const Environment& env, double rho, LatticePoint u, LatticePoint v);

}  // namespace gpl

#endif
