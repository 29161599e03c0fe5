#include "gpl/semi_infinite.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <ostream>
#include <unordered_set>

#include "gpl/errors.hpp"
#include "gpl/polymer.hpp"
#include "gpl/special_functions.hpp"

namespace gpl {

namespace {

const LatticePoint one{1, 1};

std::vector<double> copy_frame(const PartitionTable& t, const Rect& frame) {
    std::vector<double> out(frame.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = t.log_value(frame.point(i));
    return out;
}

}  // namespace

BusemannField::BusemannField(Rect box, double rho, BusemannMode mode, std::vector<double> log_z)
    : box_(box), frame_{box.lo, box.hi + one}, rho_(rho), mode_(mode), log_z_(std::move(log_z)) {
    if (log_z_.size() != frame_.size()) throw UsageError("busemann field: value count does not match the frame");
}

BusemannField busemann_field(const WeightField& env, double rho, Rect box, BusemannMode mode, int horizon_n) {
    if (box.empty()) throw UsageError("busemann field: empty box");
    special_functions::validate({env.mu(), rho});
    const Rect frame{box.lo, box.hi + one};
    const BoundarySpec& b = env.boundary();
    if (mode == BusemannMode::ne_stationary) {
        if (b.kind != BoundaryKind::northeast || b.anchor != frame.hi || b.rho != rho)
            throw UsageError("busemann field: ne_stationary needs a northeast boundary with the same rho at box.hi + (1,1)");
        return {box, rho, mode, backward_table(env, frame.hi, frame.lo).raw()};
    }
    if (b.kind != BoundaryKind::none) throw UsageError("busemann field: truncated_direction needs a boundary-free environment");
    // default N: the smallest scale whose characteristic rectangle v_N covers the box
    const auto xi = special_functions::characteristic_direction({env.mu(), rho});
    const long long n = horizon_n > 0 ? horizon_n
                                      : static_cast<long long>(std::ceil(std::max(box.width() / xi.e1, box.height() / xi.e2)));
    const LatticePoint horizon = box.lo + special_functions::characteristic_point({env.mu(), rho}, 16 * n);
    if (!leq(frame.hi, horizon)) throw UsageError("busemann field: horizon does not clear the box");
    return {box, rho, mode, copy_frame(backward_table(env, horizon, frame.lo), frame)};
}

double recovery_residual(const BusemannField& field, const WeightField& env) {
    double worst = 0.0;
    const Rect& box = field.box();
    for (std::size_t i = 0; i < box.size(); ++i) {
        const LatticePoint z = box.point(i);
        const double rhs = log_add(-field.busemann(z, z + e1), -field.busemann(z, z + e2));
        worst = std::max(worst, std::fabs(-env.log_bulk_weight(z) - rhs));
    }
    return worst;
}

double cocycle_residual(const BusemannField& field) {
    double worst = 0.0;
    const Rect& box = field.box();
    for (std::size_t i = 0; i < box.size(); ++i) {
        const LatticePoint z = box.point(i);
        const double right_up = field.busemann(z, z + e1) + field.busemann(z + e1, z + one);
        const double up_right = field.busemann(z, z + e2) + field.busemann(z + e2, z + one);
        worst = std::max({worst, std::fabs(right_up - field.busemann(z, z + one)),
                          std::fabs(up_right - field.busemann(z, z + one))});
    }
    return worst;
}

TransitionField::TransitionField(Rect box, std::vector<double> p_e1) : box_(box), p_(std::move(p_e1)) {
    if (p_.size() != box_.size()) throw UsageError("transition field: value count does not match the box");
}

TransitionField transitions(const BusemannField& field, const WeightField& env) {
    const Rect& box = field.box();
    const auto log_y = sample_log_weights(env, box);
    std::vector<double> p(box.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
        const LatticePoint x = box.point(i);
        p[i] = std::exp(log_y[i] - field.busemann(x, x + e1));
    }
    return {box, std::move(p)};
}

LatticePoint tree_step(const TransitionField& trans, const WeightField& env, LatticePoint x, std::uint32_t replica) {
    return env.uniform_theta(x, replica) <= trans.p_e1(x) ? e1 : e2;
}

ForwardTree::ForwardTree(Rect box, std::vector<std::uint8_t> steps) : box_(box), steps_(std::move(steps)) {
    if (steps_.size() != box_.size()) throw UsageError("forward tree: step count does not match the box");
}

std::vector<LatticePoint> ForwardTree::path(LatticePoint start) const {
    std::vector<LatticePoint> out;
    for (LatticePoint x = start; box_.contains(x); x = x + step(x)) out.push_back(x);
    return out;
}

LatticePoint ForwardTree::exit_point(LatticePoint start) const {
    if (!box_.contains(start)) throw UsageError("forward tree: start outside the box");
    LatticePoint x = start;
    while (!box_.on_northeast_boundary(x)) x = x + step(x);
    return x;
}

void ForwardTree::write_csv(std::ostream& os) const {
    os << "x,y,step\n";
    for (std::size_t i = 0; i < box_.size(); ++i) {
        const LatticePoint p = box_.point(i);
        os << p.x << ',' << p.y << ',' << (steps_[i] == 1 ? "e1" : "e2") << '\n';
    }
}

ForwardTree forward_tree(const TransitionField& trans, const WeightField& env, std::uint32_t replica) {
    const Rect& box = trans.box();
    std::vector<std::uint8_t> steps(box.size());
    for (std::size_t i = 0; i < steps.size(); ++i)
        steps[i] = tree_step(trans, env, box.point(i), replica) == e1 ? 1 : 2;
    return {box, std::move(steps)};
}

std::vector<LatticePoint> DualTree::path(LatticePoint start) const {
    const Rect b = box();
    std::vector<LatticePoint> out{start};
    while (b.contains(out.back())) out.push_back(out.back() + step(out.back()));
    return out;
}

void DualTree::write_csv(std::ostream& os) const {
    os << "x,y,step\n";
    const Rect b = box();
    for (std::size_t i = 0; i < b.size(); ++i) {
        const LatticePoint p = b.point(i);
        os << p.x << ',' << p.y << ',' << (step(p) == -e1 ? "-e1" : "-e2") << '\n';
    }
}

DualTree dual_tree(const ForwardTree& tree) { return DualTree(tree); }

namespace {

std::optional<LatticePoint> follow_pair(const Rect& box, const std::function<LatticePoint(LatticePoint)>& step,
                                        LatticePoint a, LatticePoint b) {
    if (!box.contains(a) || !box.contains(b)) throw UsageError("coalescence: start outside the box");
    auto level = [](LatticePoint p) { return p.x + p.y; };
    while (true) {
        if (a == b) return a;
        if (level(a) <= level(b)) a = a + step(a);
        else b = b + step(b);
        if (!box.contains(a) || !box.contains(b)) return std::nullopt;
    }
}

}  // namespace

std::optional<LatticePoint> coalescence_point(const ForwardTree& tree, LatticePoint a, LatticePoint b) {
    return follow_pair(tree.box(), [&](LatticePoint x) { return tree.step(x); }, a, b);
}

std::optional<LatticePoint> coalescence_point(const TransitionField& trans, const WeightField& env,
                                              std::uint32_t replica, LatticePoint a, LatticePoint b) {
    return follow_pair(trans.box(), [&](LatticePoint x) { return tree_step(trans, env, x, replica); }, a, b);
}

namespace {

// position along the southwest boundary: -j for lo + j e2, j for lo + j e1
int southwest_position(const Rect& box, LatticePoint p) {
    if (p.y == box.lo.y) return p.x - box.lo.x;
    if (p.x == box.lo.x) return -(p.y - box.lo.y);
    throw UsageError("dual separation: start off the southwest boundary");
}

}  // namespace

bool dual_separates(const ForwardTree& tree, LatticePoint a, LatticePoint b) {
    const Rect& box = tree.box();
    if (!box.contains(a) || !box.contains(b)) throw UsageError("dual separation: start outside the box");
    int sa = southwest_position(box, a), sb = southwest_position(box, b);
    if (sa > sb) std::swap(sa, sb);
    const DualTree dual(tree);
    const Rect dbox = dual.box();
    // dual points just outside the northeast side of the box: the dual box's own northeast boundary
    for (const LatticePoint x : northeast_boundary(dbox)) {
        const LatticePoint end = dual.path(x).back();
        // landing (j,0) relative to box.lo is the dual point between southwest sites j-1 and j
        double pos;
        const LatticePoint rel = end - box.lo;
        if (rel.y == 0) pos = rel.x - 0.5;
        else pos = -(rel.y - 0.5);
        if (sa < pos && pos < sb) return true;
    }
    return false;
}

std::size_t crossing_count(const ForwardTree& tree) {
    const Rect& box = tree.box();
    auto key = [](long long x, long long y) { return (x << 32) ^ (y & 0xffffffffLL); };
    std::unordered_set<long long> forward_mid;
    for (std::size_t i = 0; i < box.size(); ++i) {
        const LatticePoint p = box.point(i);
        const LatticePoint m = p * 2 + tree.step(p);
        forward_mid.insert(key(m.x, m.y));
    }
    const DualTree dual(tree);
    const Rect dbox = dual.box();
    std::size_t crossings = 0;
    for (std::size_t i = 0; i < dbox.size(); ++i) {
        const LatticePoint p = dbox.point(i);
        // doubled coordinates of the dual point p - (1/2,1/2), then the edge midpoint
        const LatticePoint m = p * 2 - one + dual.step(p);
        if (forward_mid.count(key(m.x, m.y))) ++crossings;
    }
    return crossings;
}

std::vector<LatticePoint> northeast_boundary(const Rect& box) {
    std::vector<LatticePoint> out;
    for (int x = box.lo.x; x <= box.hi.x; ++x) out.push_back({x, box.hi.y});
    for (int y = box.hi.y - 1; y >= box.lo.y; --y) out.push_back({box.hi.x, y});
    return out;
}

std::size_t HittingDistribution::position(LatticePoint x) const {
    if (!box.on_northeast_boundary(x)) throw UsageError("hitting distribution: site off the northeast boundary");
    if (x.y == box.hi.y) return static_cast<std::size_t>(x.x - box.lo.x);
    return static_cast<std::size_t>(box.width() + (box.hi.y - 1 - x.y));
}

HittingDistribution point_mass(const Rect& box, LatticePoint site) {
    HittingDistribution h{box, northeast_boundary(box), {}};
    h.mass.assign(h.boundary.size(), 0.0);
    h.mass[h.position(site)] = 1.0;
    return h;
}

HittingDistribution hitting_distribution(const TransitionField& trans, LatticePoint start) {
    const Rect& box = trans.box();
    if (!box.contains(start)) throw UsageError("hitting distribution: start outside the box");
    HittingDistribution h{box, northeast_boundary(box), {}};
    h.mass.assign(h.boundary.size(), 0.0);
    std::vector<double> m(box.size(), 0.0);
    m[box.index(start)] = 1.0;
    for (std::size_t i = box.index(start); i < box.size(); ++i) {
        if (m[i] == 0.0) continue;
        const LatticePoint x = box.point(i);
        if (box.on_northeast_boundary(x)) {
            h.mass[h.position(x)] += m[i];
            continue;
        }
        const double p = trans.p_e1(x);
        m[box.index(x + e1)] += m[i] * p;
        m[box.index(x + e2)] += m[i] * (1.0 - p);
    }
    return h;
}

double tv_distance(const HittingDistribution& h1, const HittingDistribution& h2) {
    if (h1.box != h2.box || h1.mass.size() != h2.mass.size())
        throw UsageError("tv distance: distributions live on different boundaries");
    double s = 0.0;
    for (std::size_t i = 0; i < h1.mass.size(); ++i) s += std::fabs(h1.mass[i] - h2.mass[i]);
    return 0.5 * s;
}

double pair_coalescence_prob(const TransitionField& trans, LatticePoint a, LatticePoint b) {
    const Rect& box = trans.box();
    if (box.width() > 64 || box.height() > 64) throw UsageError("pair chain: box larger than 64 x 64");
    if (!box.contains(a) || !box.contains(b)) throw UsageError("pair chain: start outside the box");
    if (a == b) return 1.0;
    auto level = [](LatticePoint p) { return p.x + p.y; };
    if (level(a) > level(b)) std::swap(a, b);

    // bring a up to b's level; distributions indexed by x coordinate on a level
    const int w = box.width();
    std::vector<double> da(w, 0.0);
    da[a.x - box.lo.x] = 1.0;
    auto advance = [&](std::vector<double>& d, int lev) {
        std::vector<double> next(w, 0.0);
        for (int i = 0; i < w; ++i) {
            if (d[i] == 0.0) continue;
            const LatticePoint x{box.lo.x + i, lev - box.lo.x - i};
            // steps that leave the box drop their mass
            const double p = trans.p_e1(x);
            if (x.x < box.hi.x) next[i + 1] += d[i] * p;
            if (x.y < box.hi.y) next[i] += d[i] * (1.0 - p);
        }
        d.swap(next);
    };
    int lev = level(a);
    for (; lev < level(b); ++lev) advance(da, lev);

    // joint mass over (xa, xb) with xa != xb
    std::vector<double> joint(static_cast<std::size_t>(w) * w, 0.0);
    double met = 0.0;
    const int ib = b.x - box.lo.x;
    for (int i = 0; i < w; ++i) {
        if (i == ib) met += da[i];
        else joint[static_cast<std::size_t>(i) * w + ib] = da[i];
    }
    const int last = level(box.hi);
    for (; lev < last; ++lev) {
        std::vector<double> next(joint.size(), 0.0);
        bool any = false;
        for (int i = 0; i < w; ++i)
            for (int j = 0; j < w; ++j) {
                const double m = joint[static_cast<std::size_t>(i) * w + j];
                if (m == 0.0) continue;
                const LatticePoint x{box.lo.x + i, lev - box.lo.x - i};
                const LatticePoint y{box.lo.x + j, lev - box.lo.x - j};
                const double px = trans.p_e1(x), py = trans.p_e1(y);
                const double pa[2] = {x.y < box.hi.y ? 1.0 - px : 0.0, x.x < box.hi.x ? px : 0.0};
                const double pb[2] = {y.y < box.hi.y ? 1.0 - py : 0.0, y.x < box.hi.x ? py : 0.0};
                for (int s = 0; s < 2; ++s)
                    for (int t = 0; t < 2; ++t) {
                        const int ni = i + s, nj = j + t;
                        if (pa[s] == 0.0 || pb[t] == 0.0) continue;
                        const double q = m * pa[s] * pb[t];
                        if (ni == nj) met += q;
                        else {
                            next[static_cast<std::size_t>(ni) * w + nj] += q;
                            any = true;
                        }
                    }
            }
        joint.swap(next);
        if (!any) break;
    }
    return met;
}

double level_pair_coalescence_prob(const TransitionField& trans, LatticePoint a, LatticePoint b) {
    const Rect& box = trans.box();
    if (!box.contains(a) || !box.contains(b)) throw UsageError("pair chain: start outside the box");
    if (a.x + a.y != b.x + b.y) throw UsageError("pair chain: starts must share an antidiagonal");
    if (a == b) return 1.0;
    if (a.x < b.x) std::swap(a, b);  // a is lower right: columns i (of a) > j (of b)

    const int w = box.width();
    const auto W = static_cast<std::size_t>(w);
    // m[i * w + j] for j < i, relative columns
    std::vector<double> m(W * W, 0.0);
    std::vector<double> p(W, 0.0);
    int ilo = a.x - box.lo.x, ihi = ilo, jlo = b.x - box.lo.x, jhi = jlo;
    m[static_cast<std::size_t>(ilo) * W + jlo] = 1.0;
    double met = 0.0;
    const int last = box.hi.x + box.hi.y;
    for (int lev = a.x + a.y; lev < last; ++lev) {
        // sites of this level inside the box
        const int cmin = std::max(0, lev - box.hi.y - box.lo.x);
        const int cmax = std::min(w - 1, lev - box.lo.y - box.lo.x);
        for (int c = cmin; c <= cmax; ++c) p[c] = trans.p_e1({box.lo.x + c, lev - box.lo.x - c});
        auto e1_ok = [&](int c) { return box.lo.x + c < box.hi.x; };
        auto e2_ok = [&](int c) { return lev - box.lo.x - c < box.hi.y; };
        bool any = false;
        // descending order: targets (i or i+1, j or j+1) were already read
        for (int i = ihi; i >= ilo; --i) {
            const double pa1 = e1_ok(i) ? p[i] : 0.0;
            const double pa2 = e2_ok(i) ? 1.0 - p[i] : 0.0;
            double* row = &m[static_cast<std::size_t>(i) * W];
            double* up = i + 1 < w ? &m[static_cast<std::size_t>(i + 1) * W] : nullptr;
            for (int j = std::min(jhi, i - 1); j >= jlo; --j) {
                const double q = row[j];
                if (q == 0.0) continue;
                row[j] = 0.0;
                any = true;
                const double pb1 = e1_ok(j) ? p[j] : 0.0;
                const double pb2 = e2_ok(j) ? 1.0 - p[j] : 0.0;
                // a stays in column i, b moves to j or j + 1
                row[j] += q * pa2 * pb2;
                if (j + 1 == i) met += q * pa2 * pb1;
                else row[j + 1] += q * pa2 * pb1;
                if (up) {
                    up[j] += q * pa1 * pb2;
                    up[j + 1] += q * pa1 * pb1;
                }
            }
        }
        if (!any) break;
        ihi = std::min(ihi + 1, w - 1);
        jhi = std::min(jhi + 1, w - 1);
    }
    return met;
}

namespace {

void enumerate_paths(LatticePoint u, LatticePoint v, const std::function<void(const std::vector<LatticePoint>&)>& f) {
    std::vector<LatticePoint> path{u};
    std::function<void()> rec = [&]() {
        const LatticePoint x = path.back();
        if (x == v) {
            f(path);
            return;
        }
        for (const LatticePoint s : {e1, e2}) {
            const LatticePoint y = x + s;
            if (!leq(y, v)) continue;
            path.push_back(y);
            rec();
            path.pop_back();
        }
    };
    rec();
}

double binomial(int n, int k) { return std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0)); }

}  // namespace

double backward_measure_check(const Environment& env, double rho, LatticePoint u, LatticePoint v) {
    if (!leq(u, v)) throw UsageError("backward measure check: need u <= v");
    const LatticePoint d = v - u;
    if (binomial(d.x + d.y, d.x) > 2e5) throw UsageError("backward measure check: box exceeds the enumeration budget");
    special_functions::validate({env.mu(), rho});
    EnvironmentSpec base = env.spec();
    double worst = 0.0;

    // forward chain against the northeast stationary polymer at v
    {
        base.boundary = {BoundaryKind::northeast, rho, v};
        const Environment ne(base);
        const Rect box{u, v - one};
        std::optional<TransitionField> trans;
        if (!box.empty()) trans.emplace(transitions(busemann_field(ne, rho, box, BusemannMode::ne_stationary), ne));
        std::vector<double> log_w;
        std::vector<double> pi;
        enumerate_paths(u, v, [&](const std::vector<LatticePoint>& p) {
            double lw = 0.0, pr = 1.0;
            for (std::size_t i = 0; i + 1 < p.size(); ++i) {
                const LatticePoint x = p[i];
                if (strictly_less(x, v)) {
                    lw += ne.log_bulk_weight(x);
                    pr *= p[i + 1] == x + e1 ? trans->p_e1(x) : trans->p_e2(x);
                } else {
                    lw += ne.log_boundary_ratio(x, p[i + 1]);
                }
            }
            log_w.push_back(lw);
            pi.push_back(pr);
        });
        double lz = -std::numeric_limits<double>::infinity();
        for (const double lw : log_w) lz = log_add(lz, lw);
        for (std::size_t i = 0; i < pi.size(); ++i) worst = std::max(worst, std::fabs(pi[i] - std::exp(log_w[i] - lz)));
    }

    // backward chain from v against the southwest polymer built from Y-check and I, J
    {
        base.boundary = {BoundaryKind::northeast, rho, v + one};
        const Environment ne(base);
        const BusemannField field = busemann_field(ne, rho, {u, v}, BusemannMode::ne_stationary);
        auto log_ycheck = [&](LatticePoint z) { return -log_add(-field.log_i(z), -field.log_j(z)); };
        std::vector<double> log_w;
        std::vector<double> pi;
        enumerate_paths(u, v, [&](const std::vector<LatticePoint>& p) {
            double lw = 0.0, pr = 1.0;
            for (std::size_t i = 1; i < p.size(); ++i) {
                const LatticePoint x = p[i];
                if (strictly_less(u, x)) {
                    lw += log_ycheck(x);
                    const bool came_e1 = p[i - 1] == x - e1;
                    pr *= std::exp(log_ycheck(x) - (came_e1 ? field.log_i(x) : field.log_j(x)));
                } else {
                    lw += x.y == u.y ? field.log_i(x) : field.log_j(x);
                }
            }
            log_w.push_back(lw);
            pi.push_back(pr);
        });
        double lz = -std::numeric_limits<double>::infinity();
        for (const double lw : log_w) lz = log_add(lz, lw);
        for (std::size_t i = 0; i < pi.size(); ++i) worst = std::max(worst, std::fabs(pi[i] - std::exp(log_w[i] - lz)));
    }
    return worst;
}

}  // namespace gpl
