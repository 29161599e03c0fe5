// Acceptance run: one PASS/FAIL line per criterion, full-size experiments.
// Exit status is the number of failed criteria (capped at 100).
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include "gpl/environment.hpp"
#include "gpl/experiments.hpp"
#include "gpl/polymer.hpp"
#include "gpl/special_functions.hpp"
#include "oracles.hpp"

using namespace gpl;
using namespace gpl::experiments;
using Clock = std::chrono::steady_clock;

namespace {

int failed = 0;

void report(int id, bool pass, const std::string& detail) {
    if (!pass) ++failed;
    std::cout << (pass ? "PASS" : "FAIL") << " criterion " << id << ": " << detail << std::endl;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string num(double v, int prec = 4) {
    std::ostringstream os;
    os.precision(prec);
    os << v;
    return os.str();
}

std::string fit_text(const NamedFit* f) {
    if (!f || !f->fit) return "no fit" + (f && !f->note.empty() ? " (" + f->note + ")" : std::string());
    return "slope " + num(f->fit->slope) + " +- " + num(f->fit->slope_stderr, 2) + ", R2 " + num(f->fit->r_squared, 3);
}

bool slope_in(const NamedFit* f, double lo, double hi) { return f && f->fit && f->fit->slope >= lo && f->fit->slope <= hi; }

std::string series_text(const ExperimentReport& r, const std::string& s) {
    std::string out;
    for (const auto& g : r.series(s))
        out += (out.empty() ? "" : ", ") + num(g.x, 3) + ":" + num(g.estimate.mean, 3) + "(" + num(g.estimate.std_error, 2) + ")";
    return s + " [" + out + "]";
}

// projected wall time on 8 workers, assuming replicas parallelize linearly
double on_eight(double elapsed) { return elapsed * std::min(8u, worker_count()) / 8.0; }

RunParams desk() {
    RunParams p;
    p.mu = 2.0;
    p.rho = 1.0;
    p.N = 2000;
    p.delta_grid = {0.05, 0.1, 0.2, 0.4};
    p.r_grid = {0.8, 1.2, 1.8, 2.6};
    p.env_replicas = 1000;
    p.theta_replicas = 100;
    p.seed = 20261018;
    return p;
}

void criterion1() {
    const auto t0 = Clock::now();
    IdentityOptions o;
    o.seed_count = 50;
    const auto r = identity_suite(o);
    const double t = seconds_since(t0);
    std::string worst;
    double w = 0.0;
    for (const auto& [k, v] : r.diagnostics)
        if (k.rfind("worst[", 0) == 0 && v > w) w = v, worst = k;
    report(1, r.failures.empty() && t < 60.0,
           std::to_string(r.failures.size()) + " identity failures over 50 seeds x mu {2, 0.3}; largest residual " +
               num(w, 3) + " " + worst + "; " + num(t, 3) + " s");
}

void criterion2() {
    const auto t0 = Clock::now();
    double worst = 0.0;
    long checks = 0;
    auto gap = [&](double a, double b) {
        ++checks;
        const double d = (a == b) ? 0.0 : std::fabs(a - b);
        worst = std::max(worst, std::isnan(d) ? 1.0 : d);
    };
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const LatticePoint u{-1, 2};
        const Environment plain({2.0, seed, {}});
        const Environment sw({2.0, seed, {BoundaryKind::southwest, 1.0, u}});
        const Environment ne({2.0, seed, {BoundaryKind::northeast, 1.0, u + LatticePoint{3, 3}}});
        for (const Environment* env : {&plain, &sw, &ne})
            for (int w = 1; w <= 4; ++w)
                for (int h = 1; h <= 4; ++h) {
                    const LatticePoint v = u + LatticePoint{w - 1, h - 1};
                    if (env == &ne && !(v == u + LatticePoint{3, 3})) continue;
                    const double all = oracle::log_partition(*env, u, v);
                    gap(log_partition(*env, u, v), all);
                    if (u == v || env == &ne) continue;
                    for (int a = -(h - 1); a <= w - 1; ++a)
                        for (int b = a; b <= w - 1; ++b) {
                            auto keep = [&](const oracle::Path& p) {
                                const int t = oracle::tau(p);
                                return t >= a && t <= b;
                            };
                            const double ref = oracle::log_partition(*env, u, v, keep);
                            const auto got = restricted_log_partition(*env, u, v, a, b);
                            if (std::isinf(ref)) gap(got ? 1.0 : 0.0, 0.0);
                            else gap(got ? *got : -INFINITY, ref);
                            gap(quenched_exit_prob(*env, u, v, a, b), std::isinf(ref) ? 0.0 : std::exp(ref - all));
                        }
                }
        for (int vx = 0; vx <= 1; ++vx)
            for (int vy = 0; vy <= 1; ++vy)
                for (int k = 0; k <= 1; ++k) {
                    const LatticePoint v{vx, vy};
                    gap(midpoint_crossing_prob(plain, k, v), oracle::midpoint_prob(plain, k, v));
                }
    }
    report(2, worst < 1e-9,
           std::to_string(checks) + " comparisons against path enumeration, max gap " + num(worst, 3) + "; " +
               num(seconds_since(t0), 3) + " s");
}

void criterion3() {
    RunParams p = desk();
    p.env_replicas = 2000;
    p.box = 30;
    p.timing = true;
    const auto r = stationarity_suite(p);
    const auto& d = r.diagnostics;
    const double ph = d.at("ks_horizontal_p"), pv = d.at("ks_vertical_p"), pw = d.at("ks_weight_p");
    const double corr = d.at("staircase_max_abs_corr"), z = d.at("log_z_40_60_z_score");
    const bool pass = ph > 0.01 && pv > 0.01 && pw > 0.01 && corr < 0.02 && std::fabs(z) <= 3.0 && *r.elapsed_s < 300.0;
    report(3, pass,
           "KS p horizontal " + num(ph, 3) + ", vertical " + num(pv, 3) + ", weight " + num(pw, 3) +
               "; translation p " + num(d.at("ks_translation_p"), 3) + "; max |staircase corr| " + num(corr, 3) +
               "; log Z(40,60) z-score " + num(z, 3) + "; " + num(*r.elapsed_s, 3) + " s");
}

void criterion4() {
    RunParams p = desk();
    p.timing = true;
    const auto r = run_coalescence_slow(p);
    const NamedFit* f = r.find_fit("delta");
    const double t8 = on_eight(*r.elapsed_s);
    report(4, slope_in(f, 0.7, 1.3) && f->fit->r_squared > 0.9 && t8 < 1800.0,
           series_text(r, "delta") + "; " + fit_text(f) + "; " + num(*r.elapsed_s, 4) + " s on " +
               std::to_string(worker_count()) + " worker(s), " + num(t8, 4) + " s projected on 8");
}

void criterion5() {
    RunParams p = desk();
    p.timing = true;
    const auto r = run_coalescence_fast(p);
    const NamedFit* f = r.find_fit("r");
    const bool increasing = r.diagnostics.at("noncoalescence_strictly_increasing") == 1.0;
    const double t8 = on_eight(*r.elapsed_s);
    report(5, increasing && slope_in(f, 2.0, 4.0) && t8 < 1800.0,
           series_text(r, "r") + " (inside); non-coalescence strictly increasing: " + (increasing ? "yes" : "no") +
               "; cubic diagnostic " + fit_text(f) + "; " + num(*r.elapsed_s, 4) + " s");
}

void criterion6() {
    RunParams p = desk();
    p.timing = true;
    const auto r = run_exit_tail(p);
    const NamedFit* fd = r.find_fit("delta");
    const NamedFit* fr = r.find_fit("r");
    const bool exact = r.diagnostics.at("recompute_identical") == 1.0;
    report(6, slope_in(fd, 0.7, 1.3) && slope_in(fr, 2.0, 4.0) && exact,
           series_text(r, "delta") + "; delta " + fit_text(fd) + "; " + series_text(r, "r") + "; r cubic " +
               fit_text(fr) + "; recompute identical: " + (exact ? "yes" : "no") + "; " + num(*r.elapsed_s, 4) + " s");
}

void criterion7() {
    RunParams p = desk();
    p.timing = true;
    const auto r = run_tv(p);
    const NamedFit* f = r.find_fit("delta");
    double realized = 0, literal = 0, late = 0;
    for (const auto& [k, v] : r.diagnostics) {
        if (k.rfind("coupling_violations_realized", 0) == 0) realized += v;
        if (k.rfind("coupling_violations_vs_noncoalescence", 0) == 0) literal += v;
        if (k.rfind("late_boundary_merges", 0) == 0) late += v;
    }
    const double cases = static_cast<double>(p.env_replicas) * (p.delta_grid.size() + p.r_grid.size());
    report(7, slope_in(f, 0.7, 1.3) && realized == 0.0,
           series_text(r, "delta") + "; " + fit_text(f) + "; " + series_text(r, "r") + "; coupling inequality held in " +
               num(100.0 * (cases - realized) / cases, 6) + "% of " + num(cases, 6) +
               " replica-grid cases (against the non-coalescence fraction: " + num(literal, 6) +
               " violations, " + num(late, 6) + " merges on the northeast boundary); " + num(*r.elapsed_s, 4) + " s");
}

void criterion8() {
    RunParams p = desk();
    p.timing = true;
    const auto r = run_transversal(p);
    const NamedFit* f = r.find_fit("delta");
    report(8, slope_in(f, 0.7, 1.3),
           series_text(r, "delta") + "; " + fit_text(f) + "; " + num(*r.elapsed_s, 4) + " s");
}

void criterion9() {
    namespace sf = special_functions;
    std::string detail;
    bool pass = true;
    // log-gamma MGF: E[exp(lambda (log G - psi0(alpha)))], G ~ Gamma(alpha)
    {
        std::mt19937_64 rng(777);
        for (const auto& [alpha, lambda] : {std::pair{2.0, 0.1}, std::pair{0.7, -0.2}, std::pair{3.0, 0.8}}) {
            std::gamma_distribution<double> ga(alpha, 1.0);
            const double psi = sf::digamma(alpha);
            const int n = 1000000;
            double s = 0, s2 = 0;
            for (int i = 0; i < n; ++i) {
                const double f = std::exp(lambda * (std::log(ga(rng)) - psi));
                s += f;
                s2 += f * f;
            }
            const double m = s / n, se = std::sqrt((s2 / n - m * m) / n);
            const double z = (m - sf::log_gamma_mgf(alpha, lambda)) / se;
            pass = pass && std::fabs(z) < 3.0;
            detail += "mgf(" + num(alpha, 2) + "," + num(lambda, 2) + ") z=" + num(z, 2) + "; ";
        }
    }
    // Radon-Nikodym second moment: product density ratio of Ga^{-1}(lambda) to Ga^{-1}(rho)
    // over floor(a N^{2/3}) coordinates, lambda = rho + b N^{-1/3}
    {
        std::mt19937_64 rng(778);
        for (const auto& [rho, b, a] : {std::tuple{1.0, 0.5, 0.2}, std::tuple{2.0, -0.4, 0.1}}) {
            const long long N = 1000;
            const double lambda = rho + b / std::cbrt(double(N));
            const int coords = mesoscale(a, N);
            std::gamma_distribution<double> ga(rho, 1.0);
            const double c = std::lgamma(rho) - std::lgamma(lambda);
            const int n = 200000;
            double s = 0, s2 = 0;
            for (int i = 0; i < n; ++i) {
                double lf = 0;
                for (int j = 0; j < coords; ++j) lf += c - (lambda - rho) * std::log(1.0 / ga(rng));
                const double f2 = std::exp(2 * lf);
                s += f2;
                s2 += f2 * f2;
            }
            const double m = s / n, se = std::sqrt((s2 / n - m * m) / n);
            const double z = (m - sf::rn_second_moment(rho, b, N, a)) / se;
            pass = pass && std::fabs(z) < 3.0;
            detail += "rn(" + num(rho, 2) + "," + num(b, 2) + "," + num(a, 2) + ") z=" + num(z, 2) + "; ";
        }
    }
    // shape loss: nonpositive, quadratic growth in s, and |loss| / N^{1/3} bounded for s <= 3
    {
        const sf::ModelParams mp{2.0, 1.0};
        bool nonpos = true;
        double band_small = 0, band_large = 0;
        for (const long long N : {1000LL, 1000000LL})
            for (double s = 0.0; s <= 3.0; s += 0.25) {
                const double l = sf::shape_loss(mp, N, s);
                nonpos = nonpos && l <= 1e-9 * std::max(1.0, double(N));
                const double ratio = std::fabs(l) / std::cbrt(double(N));
                (N == 1000 ? band_small : band_large) = std::max(N == 1000 ? band_small : band_large, ratio);
            }
        const double q = sf::shape_loss(mp, 1000000, 2.0) / sf::shape_loss(mp, 1000000, 1.0);
        const bool quad = std::fabs(q - 4.0) < 1.0;
        pass = pass && nonpos && quad;
        detail += "shape loss <= 0: " + std::string(nonpos ? "yes" : "no") + ", loss(2)/loss(1) = " + num(q, 4) +
                  ", max |loss|/N^{1/3} over s<=3: " + num(band_small, 3) + " (N=1e3), " + num(band_large, 3) +
                  " (N=1e6)";
    }
    report(9, pass, detail);
}

void criterion10() {
    RunParams p = desk();
    p.env_replicas = 12;
    p.theta_replicas = 20;
    bool same = true;
    std::string which;
    const std::vector<std::pair<std::string, std::function<ExperimentReport()>>> runs{
        {"coalesce-slow", [&] { return run_coalescence_slow(p); }},
        {"coalesce-fast", [&] { return run_coalescence_fast(p); }},
        {"exit-tail", [&] { return run_exit_tail(p); }},
        {"tv", [&] { return run_tv(p); }},
        {"transversal", [&] { return run_transversal(p); }},
        {"stationarity", [&] {
             RunParams q = p;
             q.env_replicas = 50;
             return stationarity_suite(q);
         }},
        {"verify", [&] {
             IdentityOptions o;
             o.seed_count = 5;
             return identity_suite(o);
         }}};
    for (const auto& [name, f] : runs) {
        auto bytes = [&] {
            const auto r = f();
            std::ostringstream csv;
            r.write_csv(csv);
            return r.to_json().dump(2) + "\n" + csv.str();
        };
        const bool eq = bytes() == bytes();
        same = same && eq;
        which += name + (eq ? " identical" : " DIFFERENT") + "; ";
    }
    report(10, same, which + "(" + std::to_string(worker_count()) + " worker(s))");
}

}  // namespace

int main(int argc, char** argv) {
    // optional list of criterion numbers to run
    std::vector<int> only;
    for (int i = 1; i < argc; ++i) only.push_back(std::atoi(argv[i]));
    const std::vector<std::function<void()>> all{criterion1, criterion2, criterion3, criterion4, criterion5,
                                                 criterion6, criterion7, criterion8, criterion9, criterion10};
    for (int i = 1; i <= 10; ++i)
        if (only.empty() || std::find(only.begin(), only.end(), i) != only.end()) all[i - 1]();
    return std::min(failed, 100);
}
