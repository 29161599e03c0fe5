#ifndef GPL_EXPERIMENTS_HPP
#define GPL_EXPERIMENTS_HPP

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gpl/stats.hpp"

namespace gpl::experiments {

using stats::Estimate;
using stats::fit_power_law;
using stats::ScalingFit;

// One estimate per grid point. `series` separates the delta and r branches of an experiment.
struct GridEstimate {
    std::string series;
    double x = 0.0;
    Estimate estimate;
};

struct NamedFit {
    std::string name;
    // "loglog": log y vs log x; "cubic": log(-log y) vs log x
    std::string kind;
    std::optional<ScalingFit> fit;
    std::string note;
};

struct ExperimentReport {
    std::string name;
    nlohmann::json params;
    std::uint64_t seed = 0;
    // environment replicas are indexed 0..replicas-1 under the base seed
    std::size_t replicas = 0;
    std::vector<GridEstimate> estimates;
    std::vector<NamedFit> fits;
    std::map<std::string, double> diagnostics;
    std::vector<std::string> warnings;
    std::vector<std::string> failures;
    std::optional<double> elapsed_s;

    std::vector<GridEstimate> series(const std::string& s) const;
    const NamedFit* find_fit(const std::string& name) const;

    nlohmann::json to_json() const;
    // columns x, mean, stderr, n, series
    void write_csv(std::ostream& os) const;
};

struct RunParams {
    double mu = 2.0;
    double rho = 1.0;
    long long N = 2000;
    std::vector<double> delta_grid;
    std::vector<double> r_grid;
    int env_replicas = 1000;
    int theta_replicas = 100;
    std::uint64_t seed = 1;
    // side of the stationarity box
    int box = 30;
    // thresholds t for the quenched tail fractions P(H >= t) of the fast-coalescence run
    std::vector<double> tail_thresholds{0.5, 0.9, 0.99};
    bool timing = false;
};

nlohmann::json params_json(const RunParams& p);

// seed of environment replica i
std::uint64_t replica_seed(std::uint64_t seed, std::size_t i);

// worker count: GPL_THREADS if set and positive, else hardware concurrency
unsigned worker_count();
// runs f(i) for i in [0, n); results must be written to index-addressed storage
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& f);

// floor(a N^{2/3})
int mesoscale(double a, long long N);

ExperimentReport run_coalescence_slow(const RunParams& p);
ExperimentReport run_coalescence_fast(const RunParams& p);
ExperimentReport run_exit_tail(const RunParams& p);
ExperimentReport run_tv(const RunParams& p);
ExperimentReport run_transversal(const RunParams& p);
ExperimentReport stationarity_suite(const RunParams& p);

struct IdentityOptions {
    int seed_count = 50;
    std::uint64_t seed = 1;
    double tolerance = 1e-9;
    // shape parameters to sweep; 0.3 is the heavy-tailed stress case
    std::vector<double> mus{2.0, 0.3};
};

ExperimentReport identity_suite(const IdentityOptions& opt);

}  // namespace gpl::experiments

#endif
