#include <doctest.h>

#include <cmath>
#include <map>
#include <sstream>

#include "gpl/errors.hpp"
#include "gpl/polymer.hpp"
#include "gpl/semi_infinite.hpp"
#include "gpl/special_functions.hpp"
#include "gpl/stats.hpp"

using namespace gpl;

namespace {

Environment ne_env(std::uint64_t seed, const Rect& box, double mu = 2.0, double rho = 1.0) {
    return Environment({mu, seed, {BoundaryKind::northeast, rho, box.hi + LatticePoint{1, 1}}});
}

struct Setup {
    Environment env;
    BusemannField field;
    TransitionField trans;
};

Setup make(std::uint64_t seed, const Rect& box, double mu = 2.0, double rho = 1.0) {
    Environment env = ne_env(seed, box, mu, rho);
    BusemannField field = busemann_field(env, rho, box, BusemannMode::ne_stationary);
    TransitionField trans = transitions(field, env);
    return {std::move(env), std::move(field), std::move(trans)};
}

}  // namespace

TEST_CASE("busemann recovery and cocycle") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Rect box{{0, 0}, {11, 7}};
        const auto s = make(seed, box, seed % 2 ? 0.3 : 2.0, seed % 2 ? 0.1 : 1.3);
        CHECK(recovery_residual(s.field, s.env) < 1e-9);
        CHECK(cocycle_residual(s.field) < 1e-12);
    }
    const Rect box{{0, 0}, {4, 4}};
    const Environment plain({2.0, 1, {}});
    CHECK_THROWS_AS(busemann_field(plain, 1.0, box, BusemannMode::ne_stationary), UsageError);
    const Environment wrong({2.0, 1, {BoundaryKind::northeast, 0.5, box.hi + LatticePoint{1, 1}}});
    CHECK_THROWS_AS(busemann_field(wrong, 1.0, box, BusemannMode::ne_stationary), UsageError);
    CHECK_THROWS_AS(busemann_field(ne_env(1, box), 1.0, box, BusemannMode::truncated_direction), UsageError);
    const auto t = busemann_field(plain, 1.0, box, BusemannMode::truncated_direction);
    CHECK(recovery_residual(t, plain) < 1e-9);
}

TEST_CASE("busemann increment laws") {
    const double mu = 2.0, rho = 0.7;
    const Rect box{{0, 0}, {7, 7}};
    std::vector<double> i_ne, j_ne, i_tr;
    for (int r = 0; r < 2000; ++r) {
        const auto env = ne_env(5000 + r, box, mu, rho);
        const auto f = busemann_field(env, rho, box, BusemannMode::ne_stationary);
        i_ne.push_back(std::exp(f.log_i({3, 2})));
        j_ne.push_back(std::exp(f.log_j({2, 3})));
        const Environment plain({mu, 90000u + r, {}});
        const auto t = busemann_field(plain, rho, box, BusemannMode::truncated_direction);
        i_tr.push_back(std::exp(t.log_i({1, 0})));
    }
    CHECK(stats::ks_test(i_ne, [&](double y) { return stats::inverse_gamma_cdf(mu - rho, y); }).p_value > 0.01);
    CHECK(stats::ks_test(j_ne, [&](double y) { return stats::inverse_gamma_cdf(rho, y); }).p_value > 0.01);
    CHECK(stats::ks_two_sample(i_ne, i_tr).p_value > 0.01);
}

TEST_CASE("transition field") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const Rect box{{0, 0}, {9, 9}};
        const auto s = make(seed, box);
        for (std::size_t i = 0; i < box.size(); ++i) {
            const LatticePoint x = box.point(i);
            const double p = s.trans.p_e1(x);
            const double ij = std::exp(s.field.log_j(x + e2)) /
                              (std::exp(s.field.log_i(x + e1)) + std::exp(s.field.log_j(x + e2)));
            CHECK(std::fabs(p - ij) < 1e-9);
            CHECK((p > 0.0 && p < 1.0));
            CHECK(s.trans.p_e2(x) == 1.0 - p);
        }
    }
    // one-step annealed mean: J/(I+J) with independent I, J is Beta(mu - rho, rho)
    for (const double rho : {1.0, 0.5}) {
        const double mu = 2.0;
        std::vector<double> p;
        const Rect box{{0, 0}, {3, 3}};
        for (int r = 0; r < 10000; ++r) p.push_back(make(20000 + r, box, mu, rho).trans.p_e1({1, 1}));
        const auto e = stats::estimate(p);
        CHECK(std::fabs(e.mean - (mu - rho) / mu) < 3 * e.std_error);
        if (rho == 1.0)
            CHECK(std::fabs(e.mean - special_functions::characteristic_direction({mu, rho}).e1) < 3 * e.std_error);
    }
}

TEST_CASE("forward tree") {
    const Rect box{{0, 0}, {9, 9}};
    const auto s = make(3, box);
    const TransitionField right(box, std::vector<double>(box.size(), 1.0));
    const auto forced = forward_tree(right, s.env);
    for (std::size_t i = 0; i < box.size(); ++i) CHECK(forced.step(box.point(i)) == e1);

    // prefix law from a fixed start
    const LatticePoint start{2, 1};
    const int reps = 10000;
    std::map<int, int> counts;
    for (int r = 0; r < reps; ++r) {
        const auto t = forward_tree(s.trans, s.env, r);
        LatticePoint x = start;
        int code = 0;
        for (int k = 0; k < 3; ++k) {
            const LatticePoint st = t.step(x);
            code = 2 * code + (st == e1 ? 1 : 0);
            x = x + st;
        }
        ++counts[code];
    }
    for (int code = 0; code < 8; ++code) {
        LatticePoint x = start;
        double p = 1.0;
        for (int k = 2; k >= 0; --k) {
            const bool right_step = (code >> k) & 1;
            p *= right_step ? s.trans.p_e1(x) : s.trans.p_e2(x);
            x = x + (right_step ? e1 : e2);
        }
        const double f = counts[code] / double(reps);
        CHECK(std::fabs(f - p) < 3 * std::sqrt(p * (1 - p) / reps) + 1e-12);
    }

    // paths from an antidiagonal never cross
    for (std::uint32_t r = 0; r < 50; ++r) {
        const auto t = forward_tree(s.trans, s.env, r);
        std::vector<std::vector<LatticePoint>> paths;
        for (int k = 0; k <= 6; ++k) paths.push_back(t.path({k, 6 - k}));
        for (std::size_t a = 0; a + 1 < paths.size(); ++a) {
            const auto& p = paths[a];
            const auto& q = paths[a + 1];
            for (std::size_t n = 0; n < std::min(p.size(), q.size()); ++n) CHECK(p[n].x <= q[n].x);
        }
    }
    std::ostringstream os;
    forced.write_csv(os);
    CHECK(os.str().rfind("x,y,step\n0,0,e1\n", 0) == 0);
}

TEST_CASE("dual tree") {
    const Rect box{{0, 0}, {9, 9}};
    const auto s = make(4, box);
    for (std::uint32_t r = 0; r < 200; ++r) {
        const auto t = forward_tree(s.trans, s.env, r);
        const auto d = dual_tree(t);
        const Rect db = d.box();
        for (std::size_t i = 0; i < db.size(); ++i) {
            const LatticePoint x = db.point(i);
            CHECK(d.step(x) == -t.step(x - LatticePoint{1, 1}));
        }
        CHECK(crossing_count(t) == 0);
    }

    // dual steps follow J_x / (I_x + J_x) to the left
    const LatticePoint start{7, 6};
    const int reps = 10000;
    std::map<int, int> counts;
    for (int r = 0; r < reps; ++r) {
        const auto t = forward_tree(s.trans, s.env, r);
        const auto d = dual_tree(t);
        LatticePoint x = start;
        int code = 0;
        for (int k = 0; k < 3; ++k) {
            const LatticePoint st = d.step(x);
            code = 2 * code + (st == -e1 ? 1 : 0);
            x = x + st;
        }
        ++counts[code];
    }
    for (int code = 0; code < 8; ++code) {
        LatticePoint x = start;
        double p = 1.0;
        for (int k = 2; k >= 0; --k) {
            const bool left = (code >> k) & 1;
            const double i = std::exp(s.field.log_i(x)), j = std::exp(s.field.log_j(x));
            p *= left ? j / (i + j) : i / (i + j);
            x = x - (left ? e1 : e2);
        }
        const double f = counts[code] / double(reps);
        CHECK(std::fabs(f - p) < 3 * std::sqrt(p * (1 - p) / reps) + 1e-12);
    }
}

TEST_CASE("coalescence and the dual event") {
    const Rect box{{0, 0}, {15, 15}};
    const auto s = make(6, box);
    const auto t = forward_tree(s.trans, s.env, 0);
    CHECK(coalescence_point(t, {3, 4}, {3, 4}) == LatticePoint{3, 4});
    for (int x = 0; x < 15; ++x)
        for (int y = 0; y < 15; ++y) {
            const LatticePoint a{x, y};
            if (t.step(a) == e1) CHECK(coalescence_point(t, a, a + e1) == a + e1);
        }
    int inside = 0, outside = 0;
    for (std::uint32_t r = 0; r < 300; ++r) {
        const auto tr = forward_tree(s.trans, s.env, r);
        for (int k = 1; k <= 8; ++k) {
            const auto c = coalescence_point(tr, {k, 0}, {0, k});
            CHECK(c == coalescence_point(s.trans, s.env, r, {k, 0}, {0, k}));
            CHECK(!c.has_value() == dual_separates(tr, {k, 0}, {0, k}));
            (c ? inside : outside)++;
        }
        CHECK(!coalescence_point(tr, {2, 0}, {9, 0}).has_value() == dual_separates(tr, {2, 0}, {9, 0}));
    }
    CHECK(inside > 0);
    CHECK(outside > 0);
    CHECK_THROWS_AS(dual_separates(t, {2, 2}, {0, 3}), UsageError);
}

TEST_CASE("hitting distributions") {
    const Rect box{{0, 0}, {12, 9}};
    const auto s = make(7, box, 2.0, 0.8);
    const auto on = hitting_distribution(s.trans, {12, 4});
    CHECK(on.mass[on.position({12, 4})] == 1.0);
    CHECK(on.boundary.size() == 13 + 9);
    CHECK(on.boundary.front() == LatticePoint{0, 9});
    CHECK(on.boundary.back() == LatticePoint{12, 0});

    const LatticePoint start{1, 2};
    const auto h = hitting_distribution(s.trans, start);
    double total = 0.0;
    for (const double m : h.mass) total += m;
    CHECK(std::fabs(total - 1.0) < 1e-12);

    const int reps = 100000;
    std::vector<int> counts(h.mass.size(), 0);
    CHECK(forward_tree(s.trans, s.env, 3).exit_point(start) == [&] {
        LatticePoint x = start;
        while (!box.on_northeast_boundary(x)) x = x + tree_step(s.trans, s.env, x, 3);
        return x;
    }());
    for (int r = 0; r < reps; ++r) {
        LatticePoint x = start;
        while (!box.on_northeast_boundary(x)) x = x + tree_step(s.trans, s.env, x, r);
        ++counts[h.position(x)];
    }
    for (std::size_t i = 0; i < h.mass.size(); ++i) {
        const double p = h.mass[i];
        CHECK(std::fabs(counts[i] / double(reps) - p) < 3 * std::sqrt(p * (1 - p) / reps) + 1e-12);
    }
}

TEST_CASE("total variation and coupling") {
    const Rect box{{0, 0}, {12, 12}};
    const auto s = make(8, box);
    const auto h = hitting_distribution(s.trans, {2, 0});
    CHECK(tv_distance(h, h) == 0.0);
    CHECK(tv_distance(point_mass(box, {0, 12}), point_mass(box, {12, 3})) == 1.0);
    CHECK_THROWS_AS(tv_distance(h, point_mass({{0, 0}, {5, 5}}, {5, 5})), UsageError);

    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto e = make(100 + seed, box);
        for (int k = 1; k <= 6; ++k) {
            const LatticePoint a{k, 0}, b{0, k};
            const double tv = tv_distance(hitting_distribution(e.trans, a), hitting_distribution(e.trans, b));
            const double apart = 1.0 - pair_coalescence_prob(e.trans, a, b);
            CHECK(tv <= apart + 1e-12);
        }
    }
}

TEST_CASE("pair chain against theta replication") {
    const Rect box{{0, 0}, {20, 20}};
    const auto s = make(9, box);
    CHECK(pair_coalescence_prob(s.trans, {4, 4}, {4, 4}) == 1.0);
    for (const auto& [a, b] : {std::pair{LatticePoint{3, 0}, LatticePoint{0, 3}},
                               std::pair{LatticePoint{1, 0}, LatticePoint{0, 6}},
                               std::pair{LatticePoint{8, 0}, LatticePoint{0, 8}}}) {
        const double p = pair_coalescence_prob(s.trans, a, b);
        const int reps = 10000;
        int met = 0;
        for (int r = 0; r < reps; ++r)
            if (coalescence_point(s.trans, s.env, r, a, b)) ++met;
        CHECK(std::fabs(met / double(reps) - p) < 3 * std::sqrt(p * (1 - p) / reps) + 1e-12);
    }
    const Rect big{{0, 0}, {64, 10}};
    const TransitionField wide(big, std::vector<double>(big.size(), 0.5));
    CHECK_THROWS_AS(pair_coalescence_prob(wide, {0, 0}, {1, 0}), UsageError);
}

TEST_CASE("ordered pair chain matches the general pair chain") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const Rect box{{2, 1}, {2 + 10 + int(seed % 3), 1 + 12}};
        const auto e = make(300 + seed, box);
        for (int k = 1; k <= 8; ++k) {
            const LatticePoint a = box.lo + LatticePoint{k, 0}, b = box.lo + LatticePoint{0, k};
            const double ref = pair_coalescence_prob(e.trans, a, b);
            CHECK(level_pair_coalescence_prob(e.trans, a, b) == doctest::Approx(ref).epsilon(1e-12));
            CHECK(level_pair_coalescence_prob(e.trans, b, a) == doctest::Approx(ref).epsilon(1e-12));
        }
        const LatticePoint a = box.lo + LatticePoint{6, 2}, b = box.lo + LatticePoint{3, 5};
        CHECK(level_pair_coalescence_prob(e.trans, a, b) == doctest::Approx(pair_coalescence_prob(e.trans, a, b)).epsilon(1e-12));
    }
    const auto s = make(9, {{0, 0}, {20, 20}});
    CHECK(level_pair_coalescence_prob(s.trans, {4, 4}, {4, 4}) == 1.0);
    CHECK_THROWS_AS(level_pair_coalescence_prob(s.trans, {4, 4}, {4, 5}), UsageError);
}

TEST_CASE("point-to-point chains match stationary polymers") {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const Environment env({2.0, seed, {}});
        CHECK(backward_measure_check(env, 1.0, {0, 0}, {1, 1}) < 1e-9);
        CHECK(backward_measure_check(env, 0.6, {1, 2}, {3, 4}) < 1e-9);
    }
    const Environment env({2.0, 1, {}});
    CHECK(backward_measure_check(env, 1.0, {0, 0}, {5, 0}) < 1e-15);
    CHECK(backward_measure_check(env, 1.0, {0, 0}, {0, 4}) < 1e-15);
    CHECK_THROWS_AS(backward_measure_check(env, 1.0, {0, 0}, {30, 30}), UsageError);
    CHECK_THROWS_AS(backward_measure_check(env, 2.5, {0, 0}, {2, 2}), DomainError);
}
