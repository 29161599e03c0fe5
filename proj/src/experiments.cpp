#include "gpl/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <ostream>
#include <sstream>
#include <thread>

#include "gpl/environment.hpp"
#include "gpl/errors.hpp"
#include "gpl/philox.hpp"
#include "gpl/polymer.hpp"
#include "gpl/semi_infinite.hpp"
#include "gpl/special_functions.hpp"

namespace gpl::experiments {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

using Clock = std::chrono::steady_clock;

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

ExperimentReport start_report(const std::string& name, const RunParams& p) {
    ExperimentReport r;
    r.name = name;
    r.params = params_json(p);
    r.seed = p.seed;
    r.replicas = static_cast<std::size_t>(p.env_replicas);
    return r;
}

void finish_timing(ExperimentReport& r, const RunParams& p, Clock::time_point t0) {
    if (p.timing) r.elapsed_s = std::chrono::duration<double>(Clock::now() - t0).count();
}

void require_model(const RunParams& p) {
    try {
        special_functions::validate({p.mu, p.rho});
    } catch (const DomainError& e) {
        throw UsageError(e.what());
    }
}

void require_common(const RunParams& p) {
    require_model(p);
    if (p.N < 1) throw UsageError("N must be positive");
    if (p.env_replicas < 1) throw UsageError("env_replicas must be positive");
}

// per-environment values, one row per replica
using Table = std::vector<std::vector<double>>;

Estimate column_estimate(const Table& t, std::size_t col) {
    std::vector<double> v(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) v[i] = t[i][col];
    return stats::estimate(v);
}

NamedFit make_fit(const std::string& name, const std::string& kind, const std::vector<GridEstimate>& pts) {
    NamedFit f{name, kind, std::nullopt, ""};
    std::vector<std::pair<double, double>> xy;
    for (const auto& g : pts) {
        const double m = g.estimate.mean;
        if (kind == "loglog") {
            if (m > 0.0 && g.x > 0.0) xy.emplace_back(g.x, m);
        } else {
            if (m > 0.0 && m < 1.0 && g.x > 0.0) xy.emplace_back(g.x, -std::log(m));
        }
    }
    if (xy.size() < pts.size()) f.note = "dropped " + std::to_string(pts.size() - xy.size()) + " grid points outside the fit domain";
    try {
        f.fit = fit_power_law(xy);
    } catch (const UsageError& e) {
        f.note = f.note.empty() ? e.what() : f.note + "; " + e.what();
    }
    return f;
}

// 1 if consecutive means are nondecreasing (sign = +1) or nonincreasing (-1) within
// `slack` joint standard errors
bool monotone(const std::vector<GridEstimate>& g, int sign, double slack) {
    for (std::size_t i = 0; i + 1 < g.size(); ++i) {
        const double d = sign * (g[i + 1].estimate.mean - g[i].estimate.mean);
        const double se = std::hypot(g[i].estimate.std_error, g[i + 1].estimate.std_error);
        if (d < -slack * se) return false;
    }
    return true;
}

bool strictly_monotone(const std::vector<GridEstimate>& g, int sign) {
    for (std::size_t i = 0; i + 1 < g.size(); ++i)
        if (!(sign * (g[i + 1].estimate.mean - g[i].estimate.mean) > 0.0)) return false;
    return true;
}

struct SemiInfiniteReplica {
    Environment env;
    TransitionField trans;
};

SemiInfiniteReplica semi_infinite_replica(const RunParams& p, std::size_t i) {
    const LatticePoint v = special_functions::characteristic_point({p.mu, p.rho}, p.N);
    const Rect box{{0, 0}, v};
    Environment env({p.mu, replica_seed(p.seed, i), {BoundaryKind::northeast, p.rho, v + LatticePoint{1, 1}}});
    TransitionField trans = transitions(busemann_field(env, p.rho, box, BusemannMode::ne_stationary), env);
    return {std::move(env), std::move(trans)};
}

void check_delta_grid(ExperimentReport& r, const RunParams& p, const std::vector<double>& grid) {
    const double floor_delta = 1.0 / special_functions::two_thirds_power(static_cast<double>(p.N));
    for (const double d : grid) {
        if (!(d > 0.0)) throw UsageError("grid values must be positive");
        if (d < floor_delta) r.warnings.push_back("delta " + fmt(d) + " is below N^{-2/3}: the starts coincide");
    }
}

void check_r_grid(ExperimentReport& r, const RunParams& p, const std::vector<double>& grid) {
    const LatticePoint v = special_functions::characteristic_point({p.mu, p.rho}, p.N);
    for (const double x : grid) {
        if (!(x > 0.0)) throw UsageError("grid values must be positive");
        if (mesoscale(x, p.N) > std::min(v.x, v.y))
            r.warnings.push_back("r " + fmt(x) + " puts the starts outside [0, v_N]");
        if (x > std::cbrt(static_cast<double>(p.N)))
            r.warnings.push_back("r " + fmt(x) + " exceeds N^{1/3}");
    }
}

// per-replica fractions of theta replicas whose paths from (k,0), (0,k) coalesce inside the box
Table coalescence_fractions(const RunParams& p, const std::vector<double>& grid) {
    std::vector<int> ks;
    for (const double g : grid) ks.push_back(mesoscale(g, p.N));
    Table t(static_cast<std::size_t>(p.env_replicas), std::vector<double>(grid.size(), 0.0));
    parallel_for(t.size(), [&](std::size_t i) {
        const auto rep = semi_infinite_replica(p, i);
        for (std::size_t g = 0; g < ks.size(); ++g) {
            const int k = ks[g];
            if (k == 0) {
                t[i][g] = 1.0;
                continue;
            }
            const LatticePoint a{k, 0}, b{0, k};
            if (!rep.trans.box().contains(a) || !rep.trans.box().contains(b)) {
                t[i][g] = 0.0;
                continue;
            }
            int inside = 0;
            for (int j = 0; j < p.theta_replicas; ++j)
                if (coalescence_point(rep.trans, rep.env, static_cast<std::uint32_t>(j), a, b)) ++inside;
            t[i][g] = inside / static_cast<double>(p.theta_replicas);
        }
    });
    return t;
}

}  // namespace

std::vector<GridEstimate> ExperimentReport::series(const std::string& s) const {
    std::vector<GridEstimate> out;
    for (const auto& g : estimates)
        if (g.series == s) out.push_back(g);
    return out;
}

const NamedFit* ExperimentReport::find_fit(const std::string& n) const {
    for (const auto& f : fits)
        if (f.name == n) return &f;
    return nullptr;
}

nlohmann::json ExperimentReport::to_json() const {
    nlohmann::json j;
    j["name"] = name;
    j["params"] = params;
    nlohmann::json grid = nlohmann::json::object();
    for (const auto& g : estimates) grid[g.series].push_back(g.x);
    j["grid"] = grid;
    j["estimates"] = nlohmann::json::array();
    for (const auto& g : estimates)
        j["estimates"].push_back({{"series", g.series},
                                  {"x", g.x},
                                  {"mean", g.estimate.mean},
                                  {"stderr", g.estimate.std_error},
                                  {"n", g.estimate.n}});
    j["fits"] = nlohmann::json::array();
    for (const auto& f : fits) {
        nlohmann::json o{{"name", f.name}, {"kind", f.kind}};
        if (f.fit) {
            o["slope"] = f.fit->slope;
            o["stderr"] = f.fit->slope_stderr;
            o["intercept"] = f.fit->intercept;
            o["r2"] = f.fit->r_squared;
        } else {
            o["slope"] = nullptr;
        }
        if (!f.note.empty()) o["note"] = f.note;
        j["fits"].push_back(o);
    }
    j["seed"] = seed;
    j["replicas"] = {{"first", 0}, {"last", replicas == 0 ? 0 : replicas - 1}};
    j["diagnostics"] = diagnostics;
    j["warnings"] = warnings;
    j["failures"] = failures;
    if (elapsed_s) j["elapsed_s"] = *elapsed_s;
    return j;
}

void ExperimentReport::write_csv(std::ostream& os) const {
    os << "x,mean,stderr,n,series\n";
    for (const auto& g : estimates)
        os << fmt(g.x) << ',' << fmt(g.estimate.mean) << ',' << fmt(g.estimate.std_error) << ',' << g.estimate.n
           << ',' << g.series << '\n';
}

nlohmann::json params_json(const RunParams& p) {
    return {{"mu", p.mu},
            {"rho", p.rho},
            {"N", p.N},
            {"delta", p.delta_grid},
            {"r", p.r_grid},
            {"env_replicas", p.env_replicas},
            {"theta_replicas", p.theta_replicas},
            {"box", p.box},
            {"tail_thresholds", p.tail_thresholds},
            {"seed", p.seed}};
}

std::uint64_t replica_seed(std::uint64_t seed, std::size_t i) {
    return splitmix64(seed ^ splitmix64(0x5851f42d4c957f2dULL + static_cast<std::uint64_t>(i)));
}

unsigned worker_count() {
    if (const char* s = std::getenv("GPL_THREADS")) {
        const long v = std::strtol(s, nullptr, 10);
        if (v > 0) return static_cast<unsigned>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& f) {
    const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(worker_count(), n));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) f(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::atomic<bool> failed{false};
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            while (!failed) {
                const std::size_t i = next++;
                if (i >= n) return;
                try {
                    f(i);
                } catch (...) {
                    if (!failed.exchange(true)) error = std::current_exception();
                }
            }
        });
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

int mesoscale(double a, long long N) {
    return static_cast<int>(special_functions::scaled_floor(a * special_functions::two_thirds_power(static_cast<double>(N))));
}

ExperimentReport run_coalescence_slow(const RunParams& p) {
    const auto t0 = Clock::now();
    require_common(p);
    if (p.theta_replicas < 1) throw UsageError("theta_replicas must be positive");
    ExperimentReport r = start_report("coalesce-slow", p);
    check_delta_grid(r, p, p.delta_grid);
    const Table inside = coalescence_fractions(p, p.delta_grid);
    for (std::size_t g = 0; g < p.delta_grid.size(); ++g) {
        Estimate e = column_estimate(inside, g);
        e.mean = 1.0 - e.mean;  // outside the box
        r.estimates.push_back({"delta", p.delta_grid[g], e});
    }
    r.fits.push_back(make_fit("delta", "loglog", r.series("delta")));
    r.diagnostics["monotone_within_2se"] = monotone(r.series("delta"), +1, 2.0) ? 1.0 : 0.0;
    r.diagnostics["coupling_shared_uniform"] = 1.0;
    finish_timing(r, p, t0);
    return r;
}

ExperimentReport run_coalescence_fast(const RunParams& p) {
    const auto t0 = Clock::now();
    require_common(p);
    if (p.theta_replicas < 1) throw UsageError("theta_replicas must be positive");
    ExperimentReport r = start_report("coalesce-fast", p);
    check_r_grid(r, p, p.r_grid);
    const Table inside = coalescence_fractions(p, p.r_grid);
    for (std::size_t g = 0; g < p.r_grid.size(); ++g)
        r.estimates.push_back({"r", p.r_grid[g], column_estimate(inside, g)});
    for (const double t : p.tail_thresholds) {
        const std::string name = "tail_ge_" + fmt(t);
        for (std::size_t g = 0; g < p.r_grid.size(); ++g) {
            std::vector<double> hit(inside.size());
            for (std::size_t i = 0; i < inside.size(); ++i) hit[i] = inside[i][g] >= t ? 1.0 : 0.0;
            r.estimates.push_back({name, p.r_grid[g], stats::estimate(hit)});
        }
    }
    r.fits.push_back(make_fit("r", "cubic", r.series("r")));
    r.diagnostics["noncoalescence_strictly_increasing"] = strictly_monotone(r.series("r"), -1) ? 1.0 : 0.0;
    r.diagnostics["decreasing_within_2se"] = monotone(r.series("r"), -1, 2.0) ? 1.0 : 0.0;
    r.diagnostics["coupling_shared_uniform"] = 1.0;
    finish_timing(r, p, t0);
    return r;
}

ExperimentReport run_exit_tail(const RunParams& p) {
    const auto t0 = Clock::now();
    require_common(p);
    ExperimentReport r = start_report("exit-tail", p);
    check_delta_grid(r, p, p.delta_grid);
    check_r_grid(r, p, p.r_grid);
    const LatticePoint v = special_functions::characteristic_point({p.mu, p.rho}, p.N);
    const std::vector<LatticePoint> ne = northeast_boundary({{0, 0}, v});
    std::vector<int> rm, dm;
    for (const double x : p.r_grid) rm.push_back(mesoscale(x, p.N));
    for (const double x : p.delta_grid) dm.push_back(mesoscale(x, p.N));

    auto one = [&](std::size_t i) {
        std::vector<double> row;
        const Environment env({p.mu, replica_seed(p.seed, i), {BoundaryKind::southwest, p.rho, {0, 0}}});
        const ExitTimeLaw law = exit_time_law(env, v + LatticePoint{1, 1});
        for (const int m : rm) row.push_back(law.tail_prob(m));
        const SeededProblem prob = base_problem(env, {0, 0}, v);
        const std::vector<double> full = prob.solve();
        std::vector<double> part;
        for (const int m : dm) {
            prob.solve_into(part, ExitRange{-m, m});
            double best = 0.0;
            for (const LatticePoint x : ne) {
                const std::size_t k = prob.rect.index(x);
                if (part[k] != kNegInf) best = std::max(best, std::exp(part[k] - full[k]));
            }
            row.push_back(std::min(best, 1.0));
        }
        return row;
    };
    Table t(static_cast<std::size_t>(p.env_replicas));
    parallel_for(t.size(), [&](std::size_t i) { t[i] = one(i); });

    for (std::size_t g = 0; g < rm.size(); ++g) r.estimates.push_back({"r", p.r_grid[g], column_estimate(t, g)});
    for (std::size_t g = 0; g < dm.size(); ++g)
        r.estimates.push_back({"delta", p.delta_grid[g], column_estimate(t, rm.size() + g)});
    r.fits.push_back(make_fit("r", "cubic", r.series("r")));
    r.fits.push_back(make_fit("delta", "loglog", r.series("delta")));
    r.diagnostics["r_decreasing"] = strictly_monotone(r.series("r"), -1) ? 1.0 : 0.0;
    // quenched values carry no path-sampling error: the first environment recomputes identically
    r.diagnostics["recompute_identical"] = (t.empty() || one(0) == t[0]) ? 1.0 : 0.0;
    finish_timing(r, p, t0);
    return r;
}

ExperimentReport run_tv(const RunParams& p) {
    const auto t0 = Clock::now();
    require_common(p);
    if (p.theta_replicas < 1) throw UsageError("theta_replicas must be positive");
    ExperimentReport r = start_report("tv", p);
    check_delta_grid(r, p, p.delta_grid);
    check_r_grid(r, p, p.r_grid);
    struct Point {
        std::string series;
        double x;
        int k;
    };
    std::vector<Point> pts;
    for (const double d : p.delta_grid) pts.push_back({"delta", d, mesoscale(d, p.N)});
    for (const double x : p.r_grid) pts.push_back({"r", x, mesoscale(x, p.N)});

    // columns per point: exact d_TV, empirical d_TV, chi disagreement, non-coalescence, late merges
    constexpr std::size_t kCols = 5;
    Table t(static_cast<std::size_t>(p.env_replicas), std::vector<double>(pts.size() * kCols, 0.0));
    parallel_for(t.size(), [&](std::size_t i) {
        const auto rep = semi_infinite_replica(p, i);
        const Rect& box = rep.trans.box();
        for (std::size_t g = 0; g < pts.size(); ++g) {
            const int k = pts[g].k;
            double* row = &t[i][g * kCols];
            if (k == 0) continue;  // identical starts
            const LatticePoint a{k, 0}, b{0, k};
            if (!box.contains(a) || !box.contains(b)) throw UsageError("tv: starts outside [0, v_N]");
            const HittingDistribution ha = hitting_distribution(rep.trans, a);
            const HittingDistribution hb = hitting_distribution(rep.trans, b);
            row[0] = tv_distance(ha, hb);
            std::vector<double> fa(ha.mass.size(), 0.0), fb(ha.mass.size(), 0.0);
            int disagree = 0, apart = 0, late = 0;
            for (int j = 0; j < p.theta_replicas; ++j) {
                const auto rj = static_cast<std::uint32_t>(j);
                auto chi = [&](LatticePoint x) {
                    while (!box.on_northeast_boundary(x)) x = x + tree_step(rep.trans, rep.env, x, rj);
                    return x;
                };
                const LatticePoint ca = chi(a), cb = chi(b);
                fa[ha.position(ca)] += 1.0;
                fb[ha.position(cb)] += 1.0;
                const bool met = coalescence_point(rep.trans, rep.env, rj, a, b).has_value();
                if (ca != cb) ++disagree;
                if (!met) ++apart;
                if (met && ca != cb) ++late;
            }
            double emp = 0.0;
            for (std::size_t s = 0; s < fa.size(); ++s) emp += std::fabs(fa[s] - fb[s]);
            const double n = p.theta_replicas;
            row[1] = 0.5 * emp / n;
            row[2] = disagree / n;
            row[3] = apart / n;
            row[4] = late;
        }
    });

    for (std::size_t g = 0; g < pts.size(); ++g) {
        r.estimates.push_back({pts[g].series, pts[g].x, column_estimate(t, g * kCols)});
        double realized = 0, literal = 0, late = 0;
        for (const auto& row : t) {
            const double* v = &row[g * kCols];
            if (v[1] > v[2] + 1e-12) ++realized;
            if (v[1] > v[3] + 1e-12) ++literal;
            late += v[4];
        }
        const std::string tag = pts[g].series + "=" + fmt(pts[g].x);
        r.diagnostics["coupling_violations_realized[" + tag + "]"] = realized;
        r.diagnostics["coupling_violations_vs_noncoalescence[" + tag + "]"] = literal;
        r.diagnostics["late_boundary_merges[" + tag + "]"] = late;
        r.estimates.push_back({"noncoalescence_" + pts[g].series, pts[g].x, column_estimate(t, g * kCols + 3)});
    }
    r.fits.push_back(make_fit("delta", "loglog", r.series("delta")));
    finish_timing(r, p, t0);
    return r;
}

ExperimentReport run_transversal(const RunParams& p) {
    const auto t0 = Clock::now();
    require_common(p);
    ExperimentReport r = start_report("transversal", p);
    check_delta_grid(r, p, p.delta_grid);
    const LatticePoint v = special_functions::characteristic_point({p.mu, p.rho}, p.N);
    std::vector<int> ks;
    for (const double d : p.delta_grid) ks.push_back(mesoscale(d, p.N));
    Table t(static_cast<std::size_t>(p.env_replicas));
    parallel_for(t.size(), [&](std::size_t i) {
        const Environment env({p.mu, replica_seed(p.seed, i), {}});
        t[i] = midpoint_crossing_probs(env, ks, v);
    });
    for (std::size_t g = 0; g < ks.size(); ++g) r.estimates.push_back({"delta", p.delta_grid[g], column_estimate(t, g)});
    r.fits.push_back(make_fit("delta", "loglog", r.series("delta")));
    r.diagnostics["monotone_within_2se"] = monotone(r.series("delta"), +1, 2.0) ? 1.0 : 0.0;
    finish_timing(r, p, t0);
    return r;
}

ExperimentReport stationarity_suite(const RunParams& p) {
    const auto t0 = Clock::now();
    require_model(p);
    if (p.box < 20) throw UsageError("stationarity box must be at least 20 x 20");
    if (p.env_replicas < 2) throw UsageError("env_replicas must be at least 2");
    ExperimentReport r = start_report("stationarity", p);
    const int b = p.box;
    const LatticePoint c{b - 1, b - 1};
    const LatticePoint mean_site{40, 60};
    const LatticePoint corner{std::max(c.x, mean_site.x), std::max(c.y, mean_site.y)};

    // staircase from (1, b-1) alternating e1, -e2 down to row 1
    std::vector<LatticePoint> stair{{1, b - 1}};
    while (stair.back().y > 1) {
        const LatticePoint last = stair.back();
        stair.push_back(stair.size() % 2 == 1 ? last + e1 : last - e2);
    }
    const std::size_t edges = stair.size() - 1;

    struct Row {
        double h, v, w, shift, log_z;
        std::vector<double> stair;
    };
    std::vector<Row> rows(static_cast<std::size_t>(p.env_replicas));
    parallel_for(rows.size(), [&](std::size_t i) {
        const Environment env({p.mu, replica_seed(p.seed, i), {BoundaryKind::southwest, p.rho, {0, 0}}});
        const PartitionTable t = forward_table(env, {0, 0}, corner);
        Row& row = rows[i];
        const double lh = t.log_value(c) - t.log_value(c - e1);
        const double lv = t.log_value(c) - t.log_value(c - e2);
        row.h = std::exp(lh);
        row.v = std::exp(lv);
        row.w = std::exp(-log_add(-lh, -lv));
        const LatticePoint s = i % 2 == 0 ? LatticePoint{5, 5} : LatticePoint{15, 15};
        row.shift = std::exp(t.log_value(s) - t.log_value(s - e1));
        row.log_z = t.log_value(mean_site);
        row.stair.resize(edges);
        for (std::size_t n = 0; n < edges; ++n) row.stair[n] = t.log_value(stair[n + 1]) - t.log_value(stair[n]);
    });

    std::vector<double> h, v, w, shallow, deep, lz;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        h.push_back(rows[i].h);
        v.push_back(rows[i].v);
        w.push_back(rows[i].w);
        (i % 2 == 0 ? shallow : deep).push_back(rows[i].shift);
        lz.push_back(rows[i].log_z);
    }
    const double mu = p.mu, rho = p.rho;
    r.diagnostics["ks_horizontal_p"] = stats::ks_test(h, [&](double y) { return stats::inverse_gamma_cdf(mu - rho, y); }).p_value;
    r.diagnostics["ks_vertical_p"] = stats::ks_test(v, [&](double y) { return stats::inverse_gamma_cdf(rho, y); }).p_value;
    r.diagnostics["ks_weight_p"] = stats::ks_test(w, [&](double y) { return stats::inverse_gamma_cdf(mu, y); }).p_value;
    r.diagnostics["ks_translation_p"] = stats::ks_two_sample(shallow, deep).p_value;

    // pooled correlations at lags 1..3 of standardized staircase log-ratios
    std::vector<double> mean(edges, 0.0), sd(edges, 0.0);
    const double n = static_cast<double>(rows.size());
    for (const auto& row : rows)
        for (std::size_t e = 0; e < edges; ++e) mean[e] += row.stair[e] / n;
    for (const auto& row : rows)
        for (std::size_t e = 0; e < edges; ++e) sd[e] += (row.stair[e] - mean[e]) * (row.stair[e] - mean[e]) / (n - 1);
    for (auto& s : sd) s = std::sqrt(s);
    double worst = 0.0;
    for (std::size_t lag = 1; lag <= 3 && lag < edges; ++lag) {
        double acc = 0.0;
        std::size_t cnt = 0;
        for (const auto& row : rows)
            for (std::size_t e = 0; e + lag < edges; ++e) {
                acc += (row.stair[e] - mean[e]) / sd[e] * (row.stair[e + lag] - mean[e + lag]) / sd[e + lag];
                ++cnt;
            }
        const double corr = acc / static_cast<double>(cnt);
        r.diagnostics["staircase_corr_lag" + std::to_string(lag)] = corr;
        worst = std::max(worst, std::fabs(corr));
    }
    r.diagnostics["staircase_max_abs_corr"] = worst;
    r.diagnostics["staircase_edges"] = static_cast<double>(edges);

    const Estimate e = stats::estimate(lz);
    const double expect = -mean_site.x * special_functions::digamma(mu - rho) - mean_site.y * special_functions::digamma(rho);
    r.estimates.push_back({"log_z_40_60", 0.0, e});
    r.diagnostics["log_z_40_60_expected"] = expect;
    r.diagnostics["log_z_40_60_z_score"] = (e.mean - expect) / e.std_error;
    finish_timing(r, p, t0);
    return r;
}

// ---------------------------------------------------------------------------------------------
// identity suite

namespace {

struct IdentityLog {
    ExperimentReport& report;
    double tol;

    // residual <= tol passes; residual is a log-domain gap or a signed inequality violation
    void check(const std::string& name, double residual, std::uint64_t seed, double mu, const std::string& where) {
        auto& worst = report.diagnostics["worst[" + name + "]"];
        auto& count = report.diagnostics["checks[" + name + "]"];
        count += 1;
        if (!(residual <= worst)) worst = residual;
        if (!(residual <= tol))
            report.failures.push_back(name + " seed=" + std::to_string(seed) + " mu=" + fmt(mu) + " at " + where +
                                      " residual=" + fmt(residual));
    }
};

std::string at(LatticePoint p) {
    std::ostringstream os;
    os << p;
    return os.str();
}

void identities_for(IdentityLog& log, std::uint64_t s, double mu) {
    const double rho = mu / 2;
    const LatticePoint o{0, 0}, top{5, 5};
    const Rect box{o, top};

    // recursion
    {
        const Environment env({mu, s, {}});
        const auto t = forward_table(env, o, top);
        double worst = 0.0;
        LatticePoint where;
        for (int x = 1; x <= 5; ++x)
            for (int y = 1; y <= 5; ++y) {
                const double r = std::fabs(t.log_value({x, y}) - env.log_bulk_weight({x, y}) -
                                           log_add(t.log_value({x - 1, y}), t.log_value({x, y - 1})));
                if (r > worst) worst = r, where = {x, y};
            }
        log.check("recursion", worst, s, mu, at(where));
    }

    const Environment sw({mu, s, {BoundaryKind::southwest, rho, o}});
    // telescoping of restricted sums
    {
        const double full = log_partition(sw, o, top);
        double sum = kNegInf;
        for (int k = -5; k <= 5; ++k)
            if (const auto z = restricted_log_partition(sw, o, top, k, k)) sum = log_add(sum, *z);
        log.check("telescoping", std::fabs(sum - full), s, mu, "singletons");
        for (int m = -5; m < 5; ++m) {
            const auto lo = restricted_log_partition(sw, o, top, -5, m);
            const auto hi = restricted_log_partition(sw, o, top, m + 1, 5);
            const double both = log_add(lo.value_or(kNegInf), hi.value_or(kNegInf));
            log.check("telescoping", std::fabs(both - full), s, mu, "split " + std::to_string(m));
        }
    }

    // mono_ratio on the plain polymer
    {
        const Environment env({mu, s, {}});
        for (int zx = 1; zx <= 5; ++zx)
            for (int zy = 1; zy <= 5; ++zy) {
                const LatticePoint z{zx, zy};
                const auto bz = backward_table(env, z, o);
                const auto b1 = backward_table(env, z - e1, o);
                const auto b2 = backward_table(env, z - e2, o);
                double worst = -1.0;
                std::string where;
                for (std::size_t i = 0; i < box.size(); ++i)
                    for (std::size_t j = 0; j < box.size(); ++j) {
                        const LatticePoint x = box.point(i), y = box.point(j);
                        if (!(x.x <= y.x && x.y >= y.y)) continue;
                        if (leq(x, z - e1) && leq(y, z - e1)) {
                            const double gap = (bz.log_value(x) - b1.log_value(x)) - (bz.log_value(y) - b1.log_value(y));
                            if (gap > worst) worst = gap, where = at(x) + at(y) + at(z) + " e1";
                        }
                        if (leq(x, z - e2) && leq(y, z - e2)) {
                            const double gap = (bz.log_value(y) - b2.log_value(y)) - (bz.log_value(x) - b2.log_value(x));
                            if (gap > worst) worst = gap, where = at(x) + at(y) + at(z) + " e2";
                        }
                    }
                log.check("mono_ratio", std::max(worst, 0.0), s, mu, where);
            }
    }

    // 2_exit_ineq and polymono on the stationary polymer
    {
        const auto full = forward_table(sw, o, top);
        std::vector<PartitionTable> ge;
        for (int l = 0; l <= 5; ++l) ge.push_back(forward_table(sw, o, top, ExitRange{l, 100}));
        auto ratio = [&](int l, LatticePoint z, LatticePoint step) -> std::optional<double> {
            const auto a = ge[l].at(z), b = ge[l].at(z - step);
            if (!a || !b) return std::nullopt;
            return *a - *b;
        };
        double worst = 0.0;
        std::string where;
        for (int l = 0; l <= 5; ++l)
            for (int k = l; k <= 5; ++k)
                for (std::size_t i = 0; i < box.size(); ++i) {
                    const LatticePoint z = box.point(i);
                    if (z.x >= 1) {
                        const auto rl = ratio(l, z, e1), rk = ratio(k, z, e1);
                        if (rl && rk && *rl - *rk > worst) worst = *rl - *rk, where = at(z) + " e1";
                    }
                    if (z.y >= 1) {
                        const auto rl = ratio(l, z, e2), rk = ratio(k, z, e2);
                        if (rl && rk && *rk - *rl > worst) worst = *rk - *rl, where = at(z) + " e2";
                    }
                }
        log.check("2_exit_ineq", worst, s, mu, where);

        auto q = [&](int k, LatticePoint x) {
            const auto a = ge[k].at(x);
            return a ? std::exp(*a - full.log_value(x)) : 0.0;
        };
        double pw = 0.0;
        std::string pwhere;
        for (int k = 0; k <= 5; ++k)
            for (std::size_t i = 0; i < box.size(); ++i) {
                const LatticePoint x = box.point(i);
                for (int l = 0; x.x + l <= 5; ++l)
                    for (int m = 0; m <= x.y; ++m) {
                        const double gap = q(k, x) - q(k, x + e1 * l - e2 * m);
                        if (gap > pw) pw = gap, pwhere = at(x) + " l=" + std::to_string(l) + " m=" + std::to_string(m);
                    }
            }
        log.check("polymono", pw, s, mu, pwhere);
    }

    // ratio_agrees and nestedpoly
    {
        const LatticePoint corner{6, 6};
        const auto outer = forward_table(sw, o, corner);
        const DownRightPath inner{{{1, 6}, {1, 5}, {1, 4}, {1, 3}, {2, 3}, {2, 2}, {3, 2}, {4, 2}, {4, 1}, {5, 1}, {6, 1}}};
        const auto nb = nested_boundary(outer, inner);
        const LatticePoint root{2, 2};
        const auto nested = boundary_table(sw, nb, root, corner, false);
        double worst = 0.0;
        for (int x = 2; x <= 6; ++x)
            for (int y = 2; y <= 6; ++y) {
                if (x <= 4 && y <= 2) continue;
                const auto z = nested.at({x, y});
                const double r = z ? std::fabs(*z - (outer.log_value({x, y}) - outer.log_value(root))) : 1.0;
                worst = std::max(worst, r);
            }
        log.check("ratio_agrees", worst, s, mu, "inner staircase");
        const auto back = backward_table(sw, corner, {1, 1});
        auto passage = [&](const PartitionTable& fwd, LatticePoint a, LatticePoint b) {
            return fwd.log_value(a) + back.log_value(b) - fwd.log_value(corner);
        };
        double pw = 0.0;
        for (int x = 2; x <= 6; ++x)
            for (int y = 4; y <= 6; ++y)
                for (const LatticePoint step : {e1, e2}) {
                    const LatticePoint a{x, y};
                    if (!leq(a + step, corner)) continue;
                    pw = std::max(pw, std::fabs(passage(outer, a, a + step) - passage(nested, a, a + step)));
                }
        log.check("nestedpoly", pw, s, mu, "edges northeast of the inner path");
    }

    // relatetau and dia_vs_sw inside a staircase polymer
    {
        const LatticePoint u{-1, -3};
        const Environment dia({mu, s, {BoundaryKind::antidiagonal, rho, u}});
        const LatticePoint v{5, 4};
        const auto outer = forward_table(dia, u, v);
        auto q = [&](LatticePoint root, int a, int b) {
            const auto nb = nested_boundary(outer, axes_path(root, v));
            const auto full = boundary_table(dia, nb, root, v, false);
            const auto part = boundary_table(dia, nb, root, v, false, ExitRange{a, b});
            const auto z = part.at(v);
            return z ? *z - full.log_value(v) : kNegInf;
        };
        for (const auto& [m, n] : {std::pair{2, 2}, std::pair{1, 3}}) {
            const double lhs = q({0, 0}, -100, m), rhs = q({m, -n}, -100, -n - 1);
            log.check("relatetau", std::fabs(lhs - rhs), s, mu, "m=" + std::to_string(m) + " n=" + std::to_string(n));
        }

        const LatticePoint u2{-1, -2};
        const Environment dia2({mu, s, {BoundaryKind::antidiagonal, rho, u2}});
        const LatticePoint w{5, 5};
        const auto outer2 = forward_table(dia2, u2, w);
        for (const int rr : {1, 2}) {
            const auto swb = nested_boundary(outer2, axes_path({0, 0}, w));
            const double q_sw = boundary_table(dia2, swb, {0, 0}, w, false, ExitRange{2 * rr, 100}).log_value(w) -
                                boundary_table(dia2, swb, {0, 0}, w, false).log_value(w);
            const auto db = nested_boundary(outer2, staircase_path({rr, rr}, w));
            const double q_dia = boundary_table(dia2, db, {rr, rr}, w, true, ExitRange{rr, 100}).log_value(w) -
                                 boundary_table(dia2, db, {rr, rr}, w, true).log_value(w);
            log.check("dia_vs_sw", std::fabs(q_sw - q_dia), s, mu, "r=" + std::to_string(rr));
        }
    }

    // point-to-point chains against stationary polymers
    {
        const Environment env({mu, s, {}});
        log.check("stat_iid", backward_measure_check(env, rho, {0, 0}, {1, 1}), s, mu, "2x2");
        log.check("stat_iid", backward_measure_check(env, rho, {0, 0}, {2, 2}), s, mu, "3x3");
    }

    // Busemann invariants, dual no-crossing and the dual description of coalescence
    {
        const Environment ne({mu, s, {BoundaryKind::northeast, rho, top + LatticePoint{1, 1}}});
        const auto field = busemann_field(ne, rho, box, BusemannMode::ne_stationary);
        log.check("busemann_recovery", recovery_residual(field, ne), s, mu, "box");
        log.check("busemann_cocycle", cocycle_residual(field), s, mu, "box");
        const auto trans = transitions(field, ne);
        for (std::uint32_t j = 0; j < 10; ++j) {
            const auto tree = forward_tree(trans, ne, j);
            log.check("dual_no_crossing", static_cast<double>(crossing_count(tree)), s, mu, "theta " + std::to_string(j));
            for (int k = 1; k <= 5; ++k) {
                const bool apart = !coalescence_point(tree, {k, 0}, {0, k}).has_value();
                const bool sep = dual_separates(tree, {k, 0}, {0, k});
                log.check("coalescence_dual", apart == sep ? 0.0 : 1.0, s, mu,
                          "theta " + std::to_string(j) + " k=" + std::to_string(k));
            }
        }
    }
}

}  // namespace

ExperimentReport identity_suite(const IdentityOptions& opt) {
    if (opt.seed_count < 1) throw UsageError("seed count must be positive");
    for (const double mu : opt.mus)
        if (!(mu > 0.0)) throw UsageError("identity suite: mu must be positive");
    ExperimentReport r;
    r.name = "verify";
    r.params = {{"seeds", opt.seed_count}, {"seed", opt.seed}, {"tolerance", opt.tolerance}, {"mu", opt.mus}};
    r.seed = opt.seed;
    r.replicas = static_cast<std::size_t>(opt.seed_count);
    IdentityLog log{r, opt.tolerance};
    for (const double mu : opt.mus)
        for (int i = 0; i < opt.seed_count; ++i) identities_for(log, replica_seed(opt.seed, static_cast<std::size_t>(i)), mu);
    r.diagnostics["failures"] = static_cast<double>(r.failures.size());
    return r;
}

}  // namespace gpl::experiments
