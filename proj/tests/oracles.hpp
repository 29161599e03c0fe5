// Brute-force references for the dynamic programs: explicit path enumeration with
// weights read straight from the field definitions.
#ifndef GPL_TESTS_ORACLES_HPP
#define GPL_TESTS_ORACLES_HPP

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "gpl/environment.hpp"
#include "gpl/lattice.hpp"

namespace oracle {

using gpl::LatticePoint;
using Path = std::vector<LatticePoint>;

inline void enumerate(LatticePoint cur, LatticePoint v, Path& prefix, std::vector<Path>& out) {
    prefix.push_back(cur);
    if (cur == v) {
        out.push_back(prefix);
    } else {
        if (cur.x < v.x) enumerate(cur + gpl::e1, v, prefix, out);
        if (cur.y < v.y) enumerate(cur + gpl::e2, v, prefix, out);
    }
    prefix.pop_back();
}

inline std::vector<Path> all_paths(LatticePoint u, LatticePoint v) {
    std::vector<Path> out;
    Path prefix;
    if (u.x <= v.x && u.y <= v.y) enumerate(u, v, prefix, out);
    return out;
}

inline int tau(const Path& p) {
    if (p.size() < 2) return 0;
    const LatticePoint d = p[1] - p[0];
    int run = 1;
    while (static_cast<std::size_t>(run + 1) < p.size() && p[run + 1] - p[run] == d) ++run;
    return d == gpl::e1 ? run : -run;
}

// sum of log vertex weights; the stationary conventions replace the base weight by 1 and
// axis weights by the edge ratio entering the vertex (southwest) or leaving it (northeast)
inline double path_log_weight(const gpl::WeightField& f, const Path& p) {
    const auto& b = f.boundary();
    double s = 0.0;
    for (const auto& z : p) {
        const LatticePoint r = z - b.anchor;
        if (b.kind == gpl::BoundaryKind::southwest && r.x >= 0 && r.y >= 0 && (r.x == 0 || r.y == 0)) {
            if (r.x > 0) s += f.log_boundary_ratio(z - gpl::e1, z);
            if (r.y > 0) s += f.log_boundary_ratio(z - gpl::e2, z);
        } else if (b.kind == gpl::BoundaryKind::northeast && r.x <= 0 && r.y <= 0 && (r.x == 0 || r.y == 0)) {
            if (r.x < 0) s += f.log_boundary_ratio(z, z + gpl::e1);
            if (r.y < 0) s += f.log_boundary_ratio(z, z + gpl::e2);
        } else {
            s += f.log_bulk_weight(z);
        }
    }
    return s;
}

inline double log_sum(const std::vector<double>& terms) {
    if (terms.empty()) return -std::numeric_limits<double>::infinity();
    double m = terms[0];
    for (double t : terms) m = std::max(m, t);
    double s = 0.0;
    for (double t : terms) s += std::exp(t - m);
    return m + std::log(s);
}

inline double log_partition(const gpl::WeightField& f, LatticePoint u, LatticePoint v,
                            const std::function<bool(const Path&)>& keep = {}) {
    std::vector<double> terms;
    for (const auto& p : all_paths(u, v))
        if (!keep || keep(p)) terms.push_back(path_log_weight(f, p));
    return log_sum(terms);
}

// log H_k for the staircase through `anchor`, multiplying the boundary factors from the
// anchor to the corner anchor + (k,-k)
inline double staircase_log_h(const gpl::Environment& env, LatticePoint anchor, int k) {
    double h = 0.0;
    if (k > 0) {
        for (int j = 0; j < k; ++j) {
            const LatticePoint c = anchor + LatticePoint{j, -j};
            h += std::log(env.boundary_weight(c, c - gpl::e2));
            h += std::log(env.boundary_weight(c - gpl::e2, c - gpl::e2 + gpl::e1));
        }
    } else {
        for (int j = -1; j >= k; --j) {
            const LatticePoint lower = anchor + LatticePoint{j, -j - 1};
            h += std::log(env.boundary_weight(lower, lower + gpl::e1));
            h += std::log(env.boundary_weight(lower, lower + gpl::e2));
        }
    }
    return h;
}

// log sum_k H_k Z~_{(k,-k),v}, with Z~ omitting the corner's weight
inline double diagonal_log_partition(const gpl::Environment& env, LatticePoint anchor, LatticePoint v, int k_lo,
                                     int k_hi) {
    std::vector<double> terms;
    for (int k = k_lo; k <= k_hi; ++k) {
        const LatticePoint c = anchor + LatticePoint{k, -k};
        if (!(c.x <= v.x && c.y <= v.y) || c == v) continue;
        const double h = staircase_log_h(env, anchor, k);
        for (const auto& p : all_paths(c, v)) {
            double s = h;
            for (std::size_t i = 1; i < p.size(); ++i) s += env.log_bulk_weight(p[i]);
            terms.push_back(s);
        }
    }
    return log_sum(terms);
}

inline double midpoint_prob(const gpl::WeightField& f, int k, LatticePoint v) {
    std::vector<double> all, hit;
    for (const auto& p : all_paths(-v, v)) {
        const double w = path_log_weight(f, p);
        all.push_back(w);
        bool meets = false;
        for (const auto& z : p)
            if (std::abs(z.x) <= k && std::abs(z.y) <= k) meets = true;
        if (meets) hit.push_back(w);
    }
    if (hit.empty()) return 0.0;
    return std::exp(log_sum(hit) - log_sum(all));
}

}  // namespace oracle

#endif
