#include "gpl/environment.hpp"

#include <bit>
#include <cmath>

#include "gpl/errors.hpp"

namespace gpl {

namespace {

enum Channel : std::uint64_t { kBulk = 1, kHorizontal = 2, kVertical = 3, kTheta = 4 };

PhiloxKey derive_key(std::uint64_t seed, Channel channel, double shape) {
    const std::uint64_t h =
        splitmix64(seed ^ splitmix64((static_cast<std::uint64_t>(channel) << 56) ^
                                     std::bit_cast<std::uint64_t>(shape)));
    return {static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32)};
}

Stream site_stream(const PhiloxKey& key, LatticePoint z, std::uint32_t replica) {
    return Stream(key, static_cast<std::uint32_t>(z.x), static_cast<std::uint32_t>(z.y), replica);
}

}  // namespace

std::string to_string(BoundaryKind k) {
    switch (k) {
        case BoundaryKind::none: return "none";
        case BoundaryKind::southwest: return "southwest";
        case BoundaryKind::northeast: return "northeast";
        case BoundaryKind::antidiagonal: return "antidiagonal";
    }
    return "none";
}

BoundaryKind boundary_kind_from_string(const std::string& s) {
    if (s == "none") return BoundaryKind::none;
    if (s == "southwest") return BoundaryKind::southwest;
    if (s == "northeast") return BoundaryKind::northeast;
    if (s == "antidiagonal") return BoundaryKind::antidiagonal;
    throw UsageError("unknown boundary kind '" + s + "'");
}

void to_json(nlohmann::json& j, const EnvironmentSpec& spec) {
    nlohmann::json b = {{"kind", to_string(spec.boundary.kind)},
                        {"anchor", {spec.boundary.anchor.x, spec.boundary.anchor.y}}};
    if (spec.boundary.kind != BoundaryKind::none) b["rho"] = spec.boundary.rho;
    j = {{"mu", spec.mu}, {"seed", spec.seed}, {"boundary", b}};
}

void from_json(const nlohmann::json& j, EnvironmentSpec& spec) {
    spec.mu = j.at("mu").get<double>();
    spec.seed = j.at("seed").get<std::uint64_t>();
    spec.boundary = BoundarySpec{};
    if (j.contains("boundary")) {
        const auto& b = j.at("boundary");
        spec.boundary.kind = boundary_kind_from_string(b.at("kind").get<std::string>());
        if (b.contains("rho")) spec.boundary.rho = b.at("rho").get<double>();
        if (b.contains("anchor")) {
            const auto& a = b.at("anchor");
            spec.boundary.anchor = {a.at(0).get<int>(), a.at(1).get<int>()};
        }
    }
}

double sample_log_gamma(double shape, Stream& stream) {
    if (!(shape > 0.0) || !std::isfinite(shape)) throw DomainError("sample_gamma: shape must be positive");
    if (shape < 1.0) {
        // G(a) = G(a+1) U^{1/a}
        const double boosted = sample_log_gamma(shape + 1.0, stream);
        return boosted + std::log(stream.open_uniform()) / shape;
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        const double x = stream.normal();
        double v = 1.0 + c * x;
        if (v <= 0.0) continue;
        v = v * v * v;
        const double u = stream.open_uniform();
        const double x2 = x * x;
        if (u < 1.0 - 0.0331 * x2 * x2) return std::log(d * v);
        const double logv = std::log(v);
        if (std::log(u) < 0.5 * x2 + d * (1.0 - v + logv)) return std::log(d) + logv;
    }
}

double sample_gamma(double shape, Stream& stream) { return std::exp(sample_log_gamma(shape, stream)); }

bool canonical_edge(LatticePoint& a, LatticePoint& b) {
    LatticePoint d = b - a;
    if (d == e1 || d == e2) return true;
    if (d == -e1 || d == -e2) {
        std::swap(a, b);
        return true;
    }
    return false;
}

bool WeightField::on_boundary(LatticePoint z) const {
    const BoundarySpec& b = boundary();
    const LatticePoint r = z - b.anchor;
    switch (b.kind) {
        case BoundaryKind::none: return false;
        case BoundaryKind::southwest: return (r.x == 0 && r.y >= 0) || (r.y == 0 && r.x >= 0);
        case BoundaryKind::northeast: return (r.x == 0 && r.y <= 0) || (r.y == 0 && r.x <= 0);
        case BoundaryKind::antidiagonal: return r.x + r.y == 0 || r.x + r.y == -1;
    }
    return false;
}

bool WeightField::is_boundary_edge(LatticePoint a, LatticePoint b) const {
    if (!canonical_edge(a, b)) return false;
    const BoundarySpec& bs = boundary();
    const LatticePoint ra = a - bs.anchor;
    const LatticePoint rb = b - bs.anchor;
    const bool horizontal = (b - a) == e1;
    switch (bs.kind) {
        case BoundaryKind::none: return false;
        case BoundaryKind::southwest:
            return horizontal ? (ra.y == 0 && ra.x >= 0) : (ra.x == 0 && ra.y >= 0);
        case BoundaryKind::northeast:
            return horizontal ? (rb.y == 0 && rb.x <= 0) : (rb.x == 0 && rb.y <= 0);
        case BoundaryKind::antidiagonal: return ra.x + ra.y == -1;
    }
    return false;
}

Environment::Environment(const EnvironmentSpec& spec) : spec_(spec) {
    if (!(spec.mu > 0.0) || !std::isfinite(spec.mu)) throw DomainError("environment: mu must be positive");
    const BoundarySpec& b = spec.boundary;
    if (b.kind != BoundaryKind::none && !(b.rho > 0.0 && b.rho < spec.mu))
        throw DomainError("environment: boundary requires 0 < rho < mu");
    bulk_key_ = derive_key(spec.seed, kBulk, spec.mu);
    theta_key_ = derive_key(spec.seed, kTheta, 0.0);
    if (b.kind != BoundaryKind::none) {
        horizontal_key_ = derive_key(spec.seed ^ (static_cast<std::uint64_t>(b.kind) << 48), kHorizontal,
                                     spec.mu - b.rho);
        vertical_key_ =
            derive_key(spec.seed ^ (static_cast<std::uint64_t>(b.kind) << 48), kVertical, b.rho);
    }
}

double Environment::log_bulk_weight(LatticePoint z) const {
    if (on_boundary(z)) throw UsageError("bulk weight queried on a boundary site");
    Stream s = site_stream(bulk_key_, z, 0);
    return -sample_log_gamma(spec_.mu, s);
}

double Environment::bulk_weight(LatticePoint z) const { return std::exp(log_bulk_weight(z)); }

double Environment::log_boundary_ratio(LatticePoint a, LatticePoint b) const {
    if (!is_boundary_edge(a, b)) throw UsageError("edge is not on the declared boundary");
    canonical_edge(a, b);
    const bool horizontal = (b - a) == e1;
    // keyed by the edge's lower-left endpoint
    if (horizontal) {
        Stream s = site_stream(horizontal_key_, a, 0);
        return -sample_log_gamma(spec_.mu - spec_.boundary.rho, s);
    }
    Stream s = site_stream(vertical_key_, a, 0);
    return -sample_log_gamma(spec_.boundary.rho, s);
}

double Environment::boundary_weight(LatticePoint a, LatticePoint b) const {
    const double log_s = log_boundary_ratio(a, b);
    if (spec_.boundary.kind != BoundaryKind::antidiagonal) return std::exp(log_s);
    canonical_edge(a, b);
    const bool horizontal = (b - a) == e1;
    const bool right = (a - spec_.boundary.anchor).x >= 0;
    return std::exp((horizontal == right) ? log_s : -log_s);
}

double Environment::uniform_theta(LatticePoint z, std::uint32_t replica) const {
    return site_stream(theta_key_, z, replica).uniform();
}

ReflectedField::ReflectedField(const WeightField& inner) : inner_(inner), boundary_(inner.boundary()) {
    switch (boundary_.kind) {
        case BoundaryKind::southwest: boundary_.kind = BoundaryKind::northeast; break;
        case BoundaryKind::northeast: boundary_.kind = BoundaryKind::southwest; break;
        case BoundaryKind::antidiagonal: throw UsageError("reflection of a staircase boundary is not supported");
        case BoundaryKind::none: break;
    }
    boundary_.anchor = -boundary_.anchor;
}

}  // namespace gpl
