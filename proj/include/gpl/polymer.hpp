#ifndef GPL_POLYMER_HPP
#define GPL_POLYMER_HPP

#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <vector>

#include "gpl/environment.hpp"
#include "gpl/lattice.hpp"
#include "gpl/philox.hpp"

namespace gpl {

enum class Orientation { forward, backward };

// log-sum-exp of two log values; -inf is the additive identity
inline double log_add(double a, double b) {
    if (a < b) std::swap(a, b);
    if (b == -std::numeric_limits<double>::infinity()) return a;
    return a + std::log1p(std::exp(b - a));
}

// Log partition values over a rectangle. Forward tables hold log Z_{anchor,w}, backward tables
// log Z_{x,anchor}. Sites with no admissible path read as empty (nullopt).
class PartitionTable {
public:
    PartitionTable(Rect rect, Orientation orientation, LatticePoint anchor, std::vector<double> values);

    const Rect& rect() const { return rect_; }
    Orientation orientation() const { return orientation_; }
    LatticePoint anchor() const { return anchor_; }

    std::optional<double> at(LatticePoint p) const;
    // throws UsageError on an empty or outside site
    double log_value(LatticePoint p) const;

    // row-major storage in which empty sites are -inf
    const std::vector<double>& raw() const { return values_; }

    void write_csv(std::ostream& os) const;

private:
    Rect rect_;
    Orientation orientation_;
    LatticePoint anchor_;
    std::vector<double> values_;
};

// signed exit-index window [lo, hi]
struct ExitRange {
    int lo;
    int hi;
    bool contains(int k) const { return lo <= k && k <= hi; }
};

// A down-right vertex list: consecutive increments are e1 or -e2.
struct DownRightPath {
    std::vector<LatticePoint> vertices;
};

void validate_down_right(const DownRightPath& path);

// Ratio weights S on the edges of a down-right path (edge n joins vertices n-1 and n).
struct BoundaryAssignment {
    DownRightPath path;
    std::vector<double> log_ratio;
};

// log H along the path from the root: an e1 edge multiplies by S, a -e2 edge divides by S
std::vector<double> boundary_log_h(const BoundaryAssignment& b, std::size_t root_index, double root_log_value = 0.0);

// Forward DP input: seeds on a down-right path, bulk weights strictly northeast of it.
// The role array marks each site as absent, seed or bulk; init holds the seed value or the
// bulk log weight. Exit indices let a solve restrict which seeds may start a path.
class SeededProblem {
public:
    enum Role : std::uint8_t { absent = 0, seed = 1, bulk = 2 };

    Rect rect;
    LatticePoint anchor;
    std::vector<double> init;
    std::vector<std::uint8_t> role;
    std::vector<std::size_t> seed_sites;
    std::vector<int> seed_exit;

    // -inf marks sites without admissible paths
    std::vector<double> solve(std::optional<ExitRange> range = std::nullopt) const;
    void solve_into(std::vector<double>& out, std::optional<ExitRange> range = std::nullopt) const;
};

// seeds on `vertices` with values log_h and exit indices, bulk weights from `field`, up to corner
SeededProblem seeded_problem(const WeightField& field, const DownRightPath& path,
                             const std::vector<double>& log_h, const std::vector<int>& exit_index,
                             LatticePoint anchor, LatticePoint corner);

// Plain polymer from rect.lo with both endpoint weights, for a precomputed log-weight array
// over rect; axis seeds are cumulative weight sums including the base.
SeededProblem plain_problem(const Rect& rect, const std::vector<double>& log_weight);

// log Y over a rectangle, row-major
std::vector<double> sample_log_weights(const WeightField& field, const Rect& rect);

// The polymer rooted at `base` as declared by the field: stationary southwest when the field's
// southwest anchor is base, the staircase model when the field's staircase anchor is base,
// otherwise the plain polymer with both endpoint weights.
SeededProblem base_problem(const WeightField& field, LatticePoint base, LatticePoint corner);

PartitionTable forward_table(const WeightField& field, LatticePoint base, LatticePoint corner,
                             std::optional<ExitRange> range = std::nullopt);

// log Z_{x,corner} for x in [base, corner]; stationary northeast when the field's northeast
// anchor is corner, plain otherwise
PartitionTable backward_table(const WeightField& field, LatticePoint corner, LatticePoint base);

double log_partition(const WeightField& field, LatticePoint u, LatticePoint v);

std::optional<double> restricted_log_partition(const WeightField& field, LatticePoint u, LatticePoint v,
                                               int a, int b);

double quenched_exit_prob(const WeightField& field, LatticePoint u, LatticePoint v, int a, int b);

struct PathSample {
    std::vector<LatticePoint> vertices;
    int tau = 0;
};

// signed first-run length; a path that never turns gets its full signed length
int exit_time(const std::vector<LatticePoint>& vertices);

// exact backward sampling from a forward table
PathSample sample_path(const PartitionTable& table, LatticePoint v, Stream& stream);
PathSample sample_path(const WeightField& field, LatticePoint u, LatticePoint v, Stream& stream);

// ratio weights on `inner` induced by an outer forward table:
// e1 edge gets Z(z_n)/Z(z_{n-1}), -e2 edge gets Z(z_{n-1})/Z(z_n)
BoundaryAssignment nested_boundary(const PartitionTable& outer, const DownRightPath& inner);
BoundaryAssignment nested_boundary(const WeightField& field, LatticePoint outer_base,
                                   const DownRightPath& inner);

// southwest axes of a root, clipped to the rectangle [root, corner]
DownRightPath axes_path(LatticePoint root, LatticePoint corner);
// staircase through `anchor` covering every corner (k,-k) that can reach `corner`
DownRightPath staircase_path(LatticePoint anchor, LatticePoint corner);

// exit index of path vertices relative to a root: k for root + k e1, -k for root + k e2
// (axes), k for the staircase corner root + (k,-k); vertices that cannot start a path get 0
std::vector<int> axes_exit_index(const DownRightPath& path, LatticePoint root);
std::vector<int> staircase_exit_index(const DownRightPath& path, LatticePoint root);

// forward table of the polymer with the given boundary, rooted at path vertex `root`
PartitionTable boundary_table(const WeightField& field, const BoundaryAssignment& boundary, LatticePoint root,
                              LatticePoint corner, bool staircase, std::optional<ExitRange> range = std::nullopt);

// log sum over k in [k_lo, k_hi] of H_k Z~_{(k,-k),v} for the field's staircase; empty if no
// admissible corner reaches v
std::optional<double> diagonal_log_partition(const WeightField& field, LatticePoint anchor, LatticePoint v,
                                             int k_lo, int k_hi);

// Q_{-v,v}{path meets [-k,k]^2} by deleting the ball from the DP
double midpoint_crossing_prob(const WeightField& field, int k, LatticePoint v);
double midpoint_crossing_prob(const WeightField& field, double rho, int k, long long N);

// Same probability for several radii from one forward and one backward table: the weight of
// paths meeting the ball is summed over the edges through which a path first enters it.
std::vector<double> midpoint_crossing_probs(const WeightField& field, const std::vector<int>& ks, LatticePoint v);

// log Z(tau = k) of the southwest stationary polymer from the field's base to corner, for
// k in [k_min, k_max]; the k = 0 slot is -inf
struct ExitTimeLaw {
    int k_min = 0;
    int k_max = 0;
    std::vector<double> log_z;

    double log_z_at(int k) const { return log_z[static_cast<std::size_t>(k - k_min)]; }
    double log_total() const;
    // Q{|tau| > m}
    double tail_prob(int m) const;
};

ExitTimeLaw exit_time_law(const WeightField& field, LatticePoint corner);

}  // namespace gpl

#endif
