#include "gpl/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>

#include "gpl/errors.hpp"

namespace gpl::cli {

namespace {

using nlohmann::json;

// flag values as parsed; unset means "not given"
struct Flags {
    std::optional<double> mu, rho;
    std::optional<long long> N;
    std::optional<std::vector<double>> delta, r, tail;
    std::optional<int> env_replicas, theta_replicas, seeds, box;
    std::optional<std::uint64_t> seed;
    std::optional<double> tolerance;
    std::optional<std::string> output, format;
    bool timing = false;
};

std::vector<double> parse_list(const std::string& key, const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        double v = 0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != item.size()) throw UsageError("malformed number in " + key + ": '" + item + "'");
        out.push_back(v);
    }
    if (out.empty()) throw UsageError(key + " must not be empty");
    return out;
}

// values from the config file, in the same shape as the flags
Flags from_file(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw UsageError(std::string("config file is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw UsageError("config file must be a flat JSON object");
    Flags f;
    auto number = [&](const std::string& k) -> double {
        if (!j[k].is_number()) throw UsageError("config key " + k + " must be a number");
        return j[k].get<double>();
    };
    auto integer = [&](const std::string& k) -> long long {
        const double v = number(k);
        if (v != std::floor(v)) throw UsageError("config key " + k + " must be an integer");
        return static_cast<long long>(v);
    };
    auto list = [&](const std::string& k) {
        if (j[k].is_string()) return parse_list(k, j[k].get<std::string>());
        if (j[k].is_number()) return std::vector<double>{j[k].get<double>()};
        if (!j[k].is_array()) throw UsageError("config key " + k + " must be a list of numbers");
        std::vector<double> v;
        for (const auto& x : j[k]) {
            if (!x.is_number()) throw UsageError("config key " + k + " must be a list of numbers");
            v.push_back(x.get<double>());
        }
        return v;
    };
    auto text_of = [&](const std::string& k) {
        if (!j[k].is_string()) throw UsageError("config key " + k + " must be a string");
        return j[k].get<std::string>();
    };
    for (const auto& [k, v] : j.items()) {
        if (k == "mu") f.mu = number(k);
        else if (k == "rho") f.rho = number(k);
        else if (k == "N") f.N = integer(k);
        else if (k == "delta") f.delta = list(k);
        else if (k == "r") f.r = list(k);
        else if (k == "tail") f.tail = list(k);
        else if (k == "env_replicas") f.env_replicas = static_cast<int>(integer(k));
        else if (k == "theta_replicas") f.theta_replicas = static_cast<int>(integer(k));
        else if (k == "seeds") f.seeds = static_cast<int>(integer(k));
        else if (k == "box") f.box = static_cast<int>(integer(k));
        else if (k == "seed") {
            const long long s = integer(k);
            if (s < 0) throw UsageError("seed must be nonnegative");
            f.seed = static_cast<std::uint64_t>(s);
        } else if (k == "tolerance") f.tolerance = number(k);
        else if (k == "output") f.output = text_of(k);
        else if (k == "format") f.format = text_of(k);
        else if (k == "timing") {
            if (!v.is_boolean()) throw UsageError("config key timing must be a boolean");
            f.timing = v.get<bool>();
        } else
            throw UsageError("unknown config key: " + k);
    }
    return f;
}

template <class T>
void overlay(std::optional<T>& base, const std::optional<T>& top) {
    if (top) base = top;
}

RunConfig build(const std::string& experiment, const Flags& f) {
    RunConfig c;
    c.experiment = experiment;
    auto& p = c.params;
    // desk-scale defaults
    p.delta_grid = {0.05, 0.1, 0.2, 0.4};
    p.r_grid = {0.8, 1.2, 1.8, 2.6};
    if (experiment == "stationarity") p.env_replicas = 2000;
    if (f.mu) p.mu = *f.mu;
    if (f.rho) p.rho = *f.rho;
    if (f.N) p.N = *f.N;
    if (f.delta) p.delta_grid = *f.delta;
    if (f.r) p.r_grid = *f.r;
    if (f.tail) p.tail_thresholds = *f.tail;
    if (f.env_replicas) p.env_replicas = *f.env_replicas;
    if (f.theta_replicas) p.theta_replicas = *f.theta_replicas;
    if (f.box) p.box = *f.box;
    if (f.seed) p.seed = *f.seed;
    p.timing = f.timing;
    if (f.seeds) c.identity.seed_count = *f.seeds;
    if (f.seed) c.identity.seed = *f.seed;
    if (f.tolerance) c.identity.tolerance = *f.tolerance;
    if (f.output) c.output = *f.output;
    if (f.format) {
        if (*f.format == "json") c.format = Format::json;
        else if (*f.format == "csv") c.format = Format::csv;
        else throw UsageError("format must be csv or json");
    }
    return c;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot read config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void emit(const RunConfig& c, const experiments::ExperimentReport& r) {
    std::ostringstream body;
    if (c.format == Format::csv) r.write_csv(body);
    else body << r.to_json().dump(2) << '\n';
    if (c.output == "-") {
        std::cout << body.str();
        std::cout.flush();
        if (!std::cout) throw IoError("failed writing to standard output");
        return;
    }
    std::ofstream out(c.output, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open output file " + c.output);
    out << body.str();
    out.close();
    if (!out) throw IoError("failed writing output file " + c.output);
}

}  // namespace

RunConfig parse_config(const std::vector<std::string>& args) { return parse_config(args, std::nullopt); }

RunConfig parse_config(const std::vector<std::string>& args, const std::optional<std::string>& config_text) {
    CLI::App app{"gpl: inverse-gamma directed polymer experiments"};
    app.set_help_flag("-h,--help", "print help");
    std::string experiment;
    app.add_option("experiment", experiment, "one of: coalesce-slow coalesce-fast exit-tail tv transversal stationarity verify")
        ->required();
    Flags f;
    std::string config_path;
    std::string delta, r, tail;
    double mu = 0, rho = 0, tolerance = 0;
    long long N = 0;
    int env = 0, theta = 0, seeds = 0, box = 0;
    std::uint64_t seed = 0;
    std::string output, format;
    auto* o_config = app.add_option("--config", config_path, "flat JSON config file; flags override its values");
    auto* o_mu = app.add_option("--mu", mu, "inverse-gamma shape of the bulk weights");
    auto* o_rho = app.add_option("--rho", rho, "boundary parameter, 0 < rho < mu");
    auto* o_N = app.add_option("--N", N, "scale parameter");
    auto* o_delta = app.add_option("--delta", delta, "comma-separated delta grid");
    auto* o_r = app.add_option("--r", r, "comma-separated r grid");
    auto* o_tail = app.add_option("--tail", tail, "comma-separated tail thresholds (coalesce-fast)");
    auto* o_env = app.add_option("--env-replicas", env, "environment replicas");
    auto* o_theta = app.add_option("--theta-replicas", theta, "uniform-field replicas per environment");
    auto* o_seeds = app.add_option("--seeds", seeds, "number of seeds (verify)");
    auto* o_box = app.add_option("--box", box, "box side (stationarity)");
    auto* o_seed = app.add_option("--seed", seed, "master seed");
    auto* o_tol = app.add_option("--tolerance", tolerance, "log-domain tolerance (verify)");
    auto* o_out = app.add_option("--output,-o", output, "output path, - for standard output");
    auto* o_fmt = app.add_option("--format", format, "csv or json");
    bool timing = false;
    app.add_flag("--timing", timing, "record elapsed_s in the report (breaks byte-identical reruns)");

    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
        app.parse(rev);
    } catch (const CLI::CallForHelp&) {
        throw HelpRequested{app.help()};
    } catch (const CLI::ParseError& e) {
        throw UsageError(e.what());
    }
    if (std::find(kExperiments.begin(), kExperiments.end(), experiment) == kExperiments.end())
        throw UsageError("unknown experiment: " + experiment);

    if (o_config->count()) f = from_file(config_text ? *config_text : read_file(config_path));
    else if (config_text) f = from_file(*config_text);

    if (o_mu->count()) f.mu = mu;
    if (o_rho->count()) f.rho = rho;
    if (o_N->count()) f.N = N;
    if (o_delta->count()) f.delta = parse_list("--delta", delta);
    if (o_r->count()) f.r = parse_list("--r", r);
    if (o_tail->count()) f.tail = parse_list("--tail", tail);
    if (o_env->count()) f.env_replicas = env;
    if (o_theta->count()) f.theta_replicas = theta;
    if (o_seeds->count()) f.seeds = seeds;
    if (o_box->count()) f.box = box;
    if (o_seed->count()) f.seed = seed;
    if (o_tol->count()) f.tolerance = tolerance;
    if (o_out->count()) f.output = output;
    if (o_fmt->count()) f.format = format;
    if (timing) f.timing = true;
    RunConfig c = build(experiment, f);
    validate(c);
    return c;
}

void validate(const RunConfig& c) {
    const auto& p = c.params;
    if (!(std::isfinite(p.mu) && std::isfinite(p.rho) && p.rho > 0.0 && p.rho < p.mu))
        throw UsageError("parameters must satisfy 0 < rho < mu");
    if (c.experiment == "verify") {
        if (c.identity.seed_count < 1) throw UsageError("seeds must be positive");
        if (!(c.identity.tolerance > 0.0)) throw UsageError("tolerance must be positive");
        return;
    }
    if (p.env_replicas < 1) throw UsageError("env-replicas must be positive");
    if (c.experiment == "stationarity") {
        if (p.box < 20) throw UsageError("stationarity box must be at least 20");
        if (p.env_replicas < 2) throw UsageError("stationarity needs at least 2 env-replicas");
        return;
    }
    if (p.N < 1) throw UsageError("N must be positive");
    if (p.theta_replicas < 1) throw UsageError("theta-replicas must be positive");
    auto positive = [](const std::vector<double>& g, const char* name) {
        for (const double x : g)
            if (!(x > 0.0 && std::isfinite(x))) throw UsageError(std::string(name) + " grid values must be positive");
    };
    const bool uses_delta = c.experiment != "coalesce-fast";
    const bool uses_r = c.experiment == "coalesce-fast" || c.experiment == "exit-tail" || c.experiment == "tv";
    if (uses_delta) positive(p.delta_grid, "delta");
    if (uses_r) positive(p.r_grid, "r");
    for (const double t : p.tail_thresholds)
        if (!(t >= 0.0 && t <= 1.0)) throw UsageError("tail thresholds must lie in [0, 1]");
}

int dispatch(const RunConfig& c, std::ostream& err) {
    using namespace experiments;
    err << "gpl: running " << c.experiment << " with " << worker_count() << " worker(s)\n";
    ExperimentReport r;
    if (c.experiment == "coalesce-slow") r = run_coalescence_slow(c.params);
    else if (c.experiment == "coalesce-fast") r = run_coalescence_fast(c.params);
    else if (c.experiment == "exit-tail") r = run_exit_tail(c.params);
    else if (c.experiment == "tv") r = run_tv(c.params);
    else if (c.experiment == "transversal") r = run_transversal(c.params);
    else if (c.experiment == "stationarity") r = stationarity_suite(c.params);
    else if (c.experiment == "verify") {
        r = identity_suite(c.identity);
        if (c.params.timing) r.elapsed_s.reset();
    } else
        throw UsageError("unknown experiment: " + c.experiment);
    for (const auto& w : r.warnings) err << "gpl: warning: " << w << '\n';
    try {
        emit(c, r);
    } catch (const IoError& e) {
        err << "gpl: " << e.what() << '\n';
        return kIo;
    }
    if (c.experiment == "verify" && !r.failures.empty()) {
        err << "gpl: " << r.failures.size() << " identity failure(s)\n";
        for (std::size_t i = 0; i < std::min<std::size_t>(r.failures.size(), 20); ++i) err << "  " << r.failures[i] << '\n';
        return kIdentityFailure;
    }
    return kOk;
}

int run(const std::vector<std::string>& args, std::ostream& err) {
    RunConfig c;
    try {
        c = parse_config(args);
    } catch (const HelpRequested& h) {
        std::cout << h.text;
        return kOk;
    } catch (const UsageError& e) {
        err << "gpl: " << e.what() << '\n';
        return kUsage;
    }
    try {
        return dispatch(c, err);
    } catch (const UsageError& e) {
        err << "gpl: " << e.what() << '\n';
        return kUsage;
    } catch (const DomainError& e) {
        err << "gpl: " << e.what() << '\n';
        return kUsage;
    }
}

}  // namespace gpl::cli
