#include "gpl/polymer.hpp"

#include <algorithm>
#include <climits>
#include <map>
#include <ostream>

#include "gpl/errors.hpp"
#include "gpl/special_functions.hpp"

namespace gpl {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void require_leq(LatticePoint u, LatticePoint v) {
    if (!leq(u, v)) throw DomainError("endpoints must satisfy u <= v componentwise");
}

}  // namespace

PartitionTable::PartitionTable(Rect rect, Orientation orientation, LatticePoint anchor, std::vector<double> values)
    : rect_(rect), orientation_(orientation), anchor_(anchor), values_(std::move(values)) {
    if (values_.size() != rect_.size()) throw UsageError("table size does not match its rectangle");
}

std::optional<double> PartitionTable::at(LatticePoint p) const {
    if (!rect_.contains(p)) return std::nullopt;
    const double v = values_[rect_.index(p)];
    if (v == kNegInf) return std::nullopt;
    return v;
}

double PartitionTable::log_value(LatticePoint p) const {
    const auto v = at(p);
    if (!v) throw UsageError("table has no admissible path at the requested site");
    return *v;
}

void PartitionTable::write_csv(std::ostream& os) const {
    os << "x,y,logZ\n";
    os.precision(17);
    for (std::size_t i = 0; i < values_.size(); ++i) {
        if (values_[i] == kNegInf) continue;
        const LatticePoint p = rect_.point(i);
        os << p.x << ',' << p.y << ',' << values_[i] << '\n';
    }
}

void validate_down_right(const DownRightPath& path) {
    if (path.vertices.empty()) throw UsageError("down-right path is empty");
    for (std::size_t i = 1; i < path.vertices.size(); ++i) {
        const LatticePoint d = path.vertices[i] - path.vertices[i - 1];
        if (d != e1 && d != -e2) throw UsageError("path is not down-right");
    }
}

std::vector<double> boundary_log_h(const BoundaryAssignment& b, std::size_t root_index, double root_log_value) {
    const auto& v = b.path.vertices;
    if (root_index >= v.size()) throw UsageError("root is not a path vertex");
    if (b.log_ratio.size() + 1 != v.size()) throw UsageError("one ratio per path edge required");
    std::vector<double> h(v.size(), 0.0);
    h[root_index] = root_log_value;
    auto sign = [&](std::size_t n) { return (v[n] - v[n - 1]) == e1 ? 1.0 : -1.0; };
    for (std::size_t n = root_index + 1; n < v.size(); ++n) h[n] = h[n - 1] + sign(n) * b.log_ratio[n - 1];
    for (std::size_t n = root_index; n > 0; --n) h[n - 1] = h[n] - sign(n) * b.log_ratio[n - 1];
    return h;
}

void SeededProblem::solve_into(std::vector<double>& out, std::optional<ExitRange> range) const {
    const std::uint8_t* roles = role.data();
    std::vector<std::uint8_t> masked;
    if (range) {
        masked = role;
        for (std::size_t s = 0; s < seed_sites.size(); ++s)
            if (!range->contains(seed_exit[s])) masked[seed_sites[s]] = absent;
        roles = masked.data();
    }
    out.resize(init.size());
    const std::size_t w = static_cast<std::size_t>(rect.width());
    const std::size_t h = static_cast<std::size_t>(rect.height());
    for (std::size_t y = 0; y < h; ++y) {
        const std::size_t row = y * w;
        for (std::size_t x = 0; x < w; ++x) {
            const std::size_t i = row + x;
            switch (roles[i]) {
                case bulk: {
                    const double left = x > 0 ? out[i - 1] : kNegInf;
                    const double down = y > 0 ? out[i - w] : kNegInf;
                    out[i] = init[i] + log_add(left, down);
                    break;
                }
                case seed: out[i] = init[i]; break;
                default: out[i] = kNegInf;
            }
        }
    }
}

std::vector<double> SeededProblem::solve(std::optional<ExitRange> range) const {
    std::vector<double> out;
    solve_into(out, range);
    return out;
}

std::vector<double> sample_log_weights(const WeightField& field, const Rect& rect) {
    std::vector<double> w(rect.size());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = field.log_bulk_weight(rect.point(i));
    return w;
}

SeededProblem plain_problem(const Rect& rect, const std::vector<double>& log_weight) {
    if (log_weight.size() != rect.size()) throw UsageError("weight array does not match rectangle");
    SeededProblem p;
    p.rect = rect;
    p.anchor = rect.lo;
    p.init = log_weight;
    p.role.assign(rect.size(), SeededProblem::bulk);
    const std::size_t w = static_cast<std::size_t>(rect.width());
    const std::size_t h = static_cast<std::size_t>(rect.height());
    p.seed_sites.reserve(w + h);
    p.seed_exit.reserve(w + h);
    p.role[0] = SeededProblem::seed;
    p.seed_sites.push_back(0);
    p.seed_exit.push_back(0);
    for (std::size_t x = 1; x < w; ++x) {
        p.init[x] += p.init[x - 1];
        p.role[x] = SeededProblem::seed;
        p.seed_sites.push_back(x);
        p.seed_exit.push_back(static_cast<int>(x));
    }
    for (std::size_t y = 1; y < h; ++y) {
        p.init[y * w] += p.init[(y - 1) * w];
        p.role[y * w] = SeededProblem::seed;
        p.seed_sites.push_back(y * w);
        p.seed_exit.push_back(-static_cast<int>(y));
    }
    return p;
}

SeededProblem seeded_problem(const WeightField& field, const DownRightPath& path, const std::vector<double>& log_h,
                             const std::vector<int>& exit_index, LatticePoint anchor, LatticePoint corner) {
    validate_down_right(path);
    const auto& v = path.vertices;
    if (log_h.size() != v.size() || exit_index.size() != v.size())
        throw UsageError("boundary values must match the path vertices");
    if (v.front().y < corner.y || v.back().x < corner.x)
        throw UsageError("boundary path does not cover the rectangle");
    if (v.front().x > corner.x) throw UsageError("corner lies west of the boundary path");

    int lo_y = INT_MAX;
    for (const auto& p : v)
        if (p.x <= corner.x) lo_y = std::min(lo_y, p.y);
    if (lo_y > corner.y) throw UsageError("corner lies south of the boundary path");

    SeededProblem prob;
    prob.rect = Rect{{v.front().x, lo_y}, corner};
    prob.anchor = anchor;
    const Rect& r = prob.rect;
    const int w = r.width();
    std::vector<int> top(static_cast<std::size_t>(w), INT_MIN);
    for (const auto& p : v)
        if (p.x <= corner.x) top[static_cast<std::size_t>(p.x - r.lo.x)] = std::max(top[static_cast<std::size_t>(p.x - r.lo.x)], p.y);

    prob.init.assign(r.size(), 0.0);
    prob.role.assign(r.size(), SeededProblem::absent);
    for (std::size_t i = 0; i < r.size(); ++i) {
        const LatticePoint p = r.point(i);
        if (p.y > top[static_cast<std::size_t>(p.x - r.lo.x)]) {
            prob.role[i] = SeededProblem::bulk;
            prob.init[i] = field.log_bulk_weight(p);
        }
    }
    for (std::size_t n = 0; n < v.size(); ++n) {
        if (!r.contains(v[n])) continue;
        const std::size_t i = r.index(v[n]);
        prob.role[i] = SeededProblem::seed;
        prob.init[i] = log_h[n];
        prob.seed_sites.push_back(i);
        prob.seed_exit.push_back(exit_index[n]);
    }
    return prob;
}

DownRightPath axes_path(LatticePoint root, LatticePoint corner) {
    require_leq(root, corner);
    DownRightPath p;
    for (int y = corner.y; y > root.y; --y) p.vertices.push_back({root.x, y});
    for (int x = root.x; x <= corner.x; ++x) p.vertices.push_back({x, root.y});
    return p;
}

DownRightPath staircase_path(LatticePoint anchor, LatticePoint corner) {
    const LatticePoint r = corner - anchor;
    const int kmin = -r.y;
    const int kmax = r.x;
    if (kmin > kmax) throw UsageError("corner lies below the staircase");
    DownRightPath p;
    for (int k = kmin; k <= kmax; ++k) {
        p.vertices.push_back(anchor + LatticePoint{k, -k});
        p.vertices.push_back(anchor + LatticePoint{k, -k - 1});
    }
    return p;
}

std::vector<int> axes_exit_index(const DownRightPath& path, LatticePoint root) {
    std::vector<int> idx;
    idx.reserve(path.vertices.size());
    for (const auto& p : path.vertices) {
        const LatticePoint d = p - root;
        idx.push_back(d.y == 0 ? d.x : -d.y);
    }
    return idx;
}

std::vector<int> staircase_exit_index(const DownRightPath& path, LatticePoint root) {
    std::vector<int> idx;
    idx.reserve(path.vertices.size());
    for (const auto& p : path.vertices) idx.push_back((p - root).x);
    return idx;
}

namespace {

std::size_t vertex_index(const DownRightPath& path, LatticePoint root) {
    const auto it = std::find(path.vertices.begin(), path.vertices.end(), root);
    if (it == path.vertices.end()) throw UsageError("root is not a vertex of the boundary path");
    return static_cast<std::size_t>(it - path.vertices.begin());
}

BoundaryAssignment field_boundary(const WeightField& field, const DownRightPath& path) {
    BoundaryAssignment b{path, {}};
    for (std::size_t n = 1; n < path.vertices.size(); ++n)
        b.log_ratio.push_back(field.log_boundary_ratio(path.vertices[n - 1], path.vertices[n]));
    return b;
}

}  // namespace

SeededProblem base_problem(const WeightField& field, LatticePoint base, LatticePoint corner) {
    const BoundarySpec& bs = field.boundary();
    if (bs.kind == BoundaryKind::southwest && bs.anchor == base) {
        require_leq(base, corner);
        const DownRightPath path = axes_path(base, corner);
        const BoundaryAssignment b = field_boundary(field, path);
        return seeded_problem(field, path, boundary_log_h(b, vertex_index(path, base)), axes_exit_index(path, base),
                              base, corner);
    }
    if (bs.kind == BoundaryKind::antidiagonal && bs.anchor == base) {
        const DownRightPath path = staircase_path(base, corner);
        const BoundaryAssignment b = field_boundary(field, path);
        return seeded_problem(field, path, boundary_log_h(b, vertex_index(path, base)),
                              staircase_exit_index(path, base), base, corner);
    }
    require_leq(base, corner);
    const Rect rect{base, corner};
    return plain_problem(rect, sample_log_weights(field, rect));
}

PartitionTable forward_table(const WeightField& field, LatticePoint base, LatticePoint corner,
                             std::optional<ExitRange> range) {
    const SeededProblem p = base_problem(field, base, corner);
    return PartitionTable(p.rect, Orientation::forward, base, p.solve(range));
}

PartitionTable backward_table(const WeightField& field, LatticePoint corner, LatticePoint base) {
    require_leq(base, corner);
    const ReflectedField mirror(field);
    const SeededProblem p = base_problem(mirror, -corner, -base);
    std::vector<double> values = p.solve();
    std::reverse(values.begin(), values.end());
    return PartitionTable(Rect{-p.rect.hi, -p.rect.lo}, Orientation::backward, corner, std::move(values));
}

double log_partition(const WeightField& field, LatticePoint u, LatticePoint v) {
    require_leq(u, v);
    const BoundarySpec& bs = field.boundary();
    if (bs.kind == BoundaryKind::northeast && bs.anchor == v) return backward_table(field, v, u).log_value(u);
    return forward_table(field, u, v).log_value(v);
}

std::optional<double> restricted_log_partition(const WeightField& field, LatticePoint u, LatticePoint v, int a,
                                               int b) {
    require_leq(u, v);
    if (a > b) return std::nullopt;
    if (field.boundary().kind == BoundaryKind::northeast && field.boundary().anchor == v)
        throw UsageError("exit-time restriction is defined for polymers with a southwest base");
    const SeededProblem p = base_problem(field, u, v);
    const std::vector<double> values = p.solve(ExitRange{a, b});
    const double z = values[p.rect.index(v)];
    if (z == kNegInf) return std::nullopt;
    return z;
}

double quenched_exit_prob(const WeightField& field, LatticePoint u, LatticePoint v, int a, int b) {
    const auto restricted = restricted_log_partition(field, u, v, a, b);
    if (!restricted) return 0.0;
    const double full = log_partition(field, u, v);
    return std::clamp(std::exp(*restricted - full), 0.0, 1.0);
}

int exit_time(const std::vector<LatticePoint>& vertices) {
    if (vertices.size() < 2) return 0;
    const LatticePoint first = vertices[1] - vertices[0];
    int run = 1;
    while (static_cast<std::size_t>(run) + 1 < vertices.size() && vertices[run + 1] - vertices[run] == first) ++run;
    return first == e1 ? run : -run;
}

PathSample sample_path(const PartitionTable& table, LatticePoint v, Stream& stream) {
    if (table.orientation() != Orientation::forward || table.anchor() != table.rect().lo)
        throw UsageError("path sampling needs a forward table rooted at its lower-left corner");
    const LatticePoint u = table.anchor();
    require_leq(u, v);
    if (!table.rect().contains(v)) throw UsageError("endpoint outside the table");
    PathSample s;
    LatticePoint w = v;
    s.vertices.push_back(w);
    while (w != u) {
        if (w.y == u.y) {
            w = w - e1;
        } else if (w.x == u.x) {
            w = w - e2;
        } else {
            const double a = table.log_value(w - e1);
            const double b = table.log_value(w - e2);
            // P(predecessor w - e1) = Z_a / (Z_a + Z_b)
            const double p_left = 1.0 / (1.0 + std::exp(b - a));
            w = stream.uniform() < p_left ? w - e1 : w - e2;
        }
        s.vertices.push_back(w);
    }
    std::reverse(s.vertices.begin(), s.vertices.end());
    s.tau = exit_time(s.vertices);
    return s;
}

PathSample sample_path(const WeightField& field, LatticePoint u, LatticePoint v, Stream& stream) {
    return sample_path(forward_table(field, u, v), v, stream);
}

BoundaryAssignment nested_boundary(const PartitionTable& outer, const DownRightPath& inner) {
    validate_down_right(inner);
    if (outer.orientation() != Orientation::forward) throw UsageError("nesting needs a forward outer table");
    BoundaryAssignment b{inner, {}};
    const auto& v = inner.vertices;
    for (std::size_t n = 1; n < v.size(); ++n) {
        const auto a = outer.at(v[n - 1]);
        const auto c = outer.at(v[n]);
        if (!a || !c) throw UsageError("inner path leaves the outer polymer's domain");
        b.log_ratio.push_back((v[n] - v[n - 1]) == e1 ? *c - *a : *a - *c);
    }
    return b;
}

BoundaryAssignment nested_boundary(const WeightField& field, LatticePoint outer_base, const DownRightPath& inner) {
    validate_down_right(inner);
    LatticePoint corner = inner.vertices.front();
    for (const auto& p : inner.vertices) corner = {std::max(corner.x, p.x), std::max(corner.y, p.y)};
    return nested_boundary(forward_table(field, outer_base, corner), inner);
}

PartitionTable boundary_table(const WeightField& field, const BoundaryAssignment& boundary, LatticePoint root,
                              LatticePoint corner, bool staircase, std::optional<ExitRange> range) {
    const DownRightPath& path = boundary.path;
    const std::vector<double> h = boundary_log_h(boundary, vertex_index(path, root));
    const std::vector<int> idx = staircase ? staircase_exit_index(path, root) : axes_exit_index(path, root);
    const SeededProblem p = seeded_problem(field, path, h, idx, root, corner);
    return PartitionTable(p.rect, Orientation::forward, root, p.solve(range));
}

std::optional<double> diagonal_log_partition(const WeightField& field, LatticePoint anchor, LatticePoint v, int k_lo,
                                             int k_hi) {
    const BoundarySpec& bs = field.boundary();
    if (bs.kind != BoundaryKind::antidiagonal || bs.anchor != anchor)
        throw UsageError("field does not declare a staircase boundary at this anchor");
    const LatticePoint r = v - anchor;
    if (r.x + r.y < 1) throw UsageError("endpoint must lie strictly northeast of the staircase");
    if (k_lo > k_hi) throw UsageError("empty truncation window");
    const SeededProblem p = base_problem(field, anchor, v);
    const std::vector<double> values = p.solve(ExitRange{k_lo, k_hi});
    const double z = values[p.rect.index(v)];
    if (z == kNegInf) return std::nullopt;
    return z;
}

double midpoint_crossing_prob(const WeightField& field, int k, LatticePoint v) {
    if (k < 0) throw UsageError("ball radius must be nonnegative");
    if (v.x < 0 || v.y < 0) throw DomainError("box corner must lie in the closed quadrant");
    // every crossing of the antidiagonal x+y=0 has |x| <= min(v)
    if (k >= std::min(v.x, v.y)) return 1.0;
    const Rect rect{-v, v};
    SeededProblem p = plain_problem(rect, sample_log_weights(field, rect));
    const double full = p.solve().back();
    for (int y = -k; y <= k; ++y)
        for (int x = -k; x <= k; ++x) p.role[rect.index({x, y})] = SeededProblem::absent;
    const double avoid = p.solve().back();
    if (avoid == kNegInf) return 1.0;
    return std::clamp(-std::expm1(avoid - full), 0.0, 1.0);
}

double midpoint_crossing_prob(const WeightField& field, double rho, int k, long long N) {
    const LatticePoint v = special_functions::characteristic_point({field.mu(), rho}, N);
    return midpoint_crossing_prob(field, k, v);
}

}  // namespace gpl

namespace gpl {

std::vector<double> midpoint_crossing_probs(const WeightField& field, const std::vector<int>& ks, LatticePoint v) {
    if (v.x < 0 || v.y < 0) throw DomainError("box corner must lie in the closed quadrant");
    for (const int k : ks)
        if (k < 0) throw UsageError("ball radius must be nonnegative");
    const Rect rect{-v, v};
    const std::vector<double> w = sample_log_weights(field, rect);
    const std::vector<double> fwd = plain_problem(rect, w).solve();
    // the rectangle is symmetric, so point reflection reverses row-major order
    std::vector<double> bwd = plain_problem(rect, std::vector<double>(w.rbegin(), w.rend())).solve();
    std::reverse(bwd.begin(), bwd.end());
    const double full = fwd.back();
    auto f = [&](LatticePoint p) { return fwd[rect.index(p)]; };
    auto b = [&](LatticePoint p) { return bwd[rect.index(p)]; };

    std::vector<double> out;
    out.reserve(ks.size());
    for (const int k : ks) {
        if (k >= std::min(v.x, v.y)) {
            out.push_back(1.0);
            continue;
        }
        double meet = kNegInf;
        for (int y = -k; y <= k; ++y) {
            const LatticePoint e{-k, y};
            meet = log_add(meet, f(e - e1) + b(e));
            if (y == -k) meet = log_add(meet, f(e - e2) + b(e));
        }
        for (int x = -k + 1; x <= k; ++x) {
            const LatticePoint e{x, -k};
            meet = log_add(meet, f(e - e2) + b(e));
        }
        out.push_back(std::clamp(std::exp(meet - full), 0.0, 1.0));
    }
    return out;
}

double ExitTimeLaw::log_total() const {
    double t = kNegInf;
    for (const double z : log_z) t = log_add(t, z);
    return t;
}

double ExitTimeLaw::tail_prob(int m) const {
    if (m < 0) return 1.0;
    double t = kNegInf;
    for (int k = k_min; k <= k_max; ++k)
        if (std::abs(k) > m) t = log_add(t, log_z_at(k));
    return t == kNegInf ? 0.0 : std::clamp(std::exp(t - log_total()), 0.0, 1.0);
}

ExitTimeLaw exit_time_law(const WeightField& field, LatticePoint corner) {
    const BoundarySpec& bs = field.boundary();
    if (bs.kind != BoundaryKind::southwest) throw UsageError("exit time law needs a southwest boundary");
    const LatticePoint base = bs.anchor;
    if (!strictly_less(base, corner)) throw UsageError("exit time law needs corner strictly northeast of the base");
    const LatticePoint d = corner - base;
    const PartitionTable bulk = backward_table(field, corner, base + LatticePoint{1, 1});

    ExitTimeLaw law;
    law.k_min = -d.y;
    law.k_max = d.x;
    law.log_z.assign(static_cast<std::size_t>(d.x + d.y + 1), kNegInf);
    double h = 0.0;
    for (int k = 1; k <= d.x; ++k) {
        const LatticePoint a = base + e1 * k;
        h += field.log_boundary_ratio(a - e1, a);
        law.log_z[static_cast<std::size_t>(k - law.k_min)] = h + bulk.log_value(a + e2);
    }
    h = 0.0;
    for (int k = 1; k <= d.y; ++k) {
        const LatticePoint a = base + e2 * k;
        h += field.log_boundary_ratio(a - e2, a);
        law.log_z[static_cast<std::size_t>(-k - law.k_min)] = h + bulk.log_value(a + e1);
    }
    return law;
}

}  // namespace gpl
