#ifndef GPL_ENVIRONMENT_HPP
#define GPL_ENVIRONMENT_HPP

#include <cstdint>
#include <string>

#include <json.hpp>

#include "gpl/lattice.hpp"
#include "gpl/philox.hpp"

namespace gpl {

enum class BoundaryKind { none, southwest, northeast, antidiagonal };

std::string to_string(BoundaryKind k);
BoundaryKind boundary_kind_from_string(const std::string& s);

// anchor is the base vertex (southwest), the corner (northeast) or the staircase anchor
struct BoundarySpec {
    BoundaryKind kind = BoundaryKind::none;
    double rho = 0.0;
    LatticePoint anchor{};
};

struct EnvironmentSpec {
    double mu = 2.0;
    std::uint64_t seed = 0;
    BoundarySpec boundary{};
};

void to_json(nlohmann::json& j, const EnvironmentSpec& spec);
void from_json(const nlohmann::json& j, EnvironmentSpec& spec);

double sample_gamma(double shape, Stream& stream);
// log of a Ga(shape) draw; does not underflow for small shapes
double sample_log_gamma(double shape, Stream& stream);

// Read-only view of a realized random field. Boundary edges carry ratio weights S:
// horizontal S ~ Ga^{-1}(mu - rho), vertical S ~ Ga^{-1}(rho), for every boundary kind.
class WeightField {
public:
    virtual ~WeightField() = default;
    virtual double mu() const = 0;
    virtual const BoundarySpec& boundary() const = 0;
    virtual double log_bulk_weight(LatticePoint z) const = 0;
    virtual double log_boundary_ratio(LatticePoint a, LatticePoint b) const = 0;
    virtual double uniform_theta(LatticePoint z, std::uint32_t replica = 0) const = 0;

    bool on_boundary(LatticePoint z) const;
    bool is_boundary_edge(LatticePoint a, LatticePoint b) const;
};

class Environment final : public WeightField {
public:
    explicit Environment(const EnvironmentSpec& spec);

    const EnvironmentSpec& spec() const { return spec_; }
    double mu() const override { return spec_.mu; }
    const BoundarySpec& boundary() const override { return spec_.boundary; }

    double bulk_weight(LatticePoint z) const;
    double log_bulk_weight(LatticePoint z) const override;
    // the edge's factor in the boundary products: S for the SW/NE kinds; for the staircase the
    // factor entering H_k (S right of the anchor on horizontal edges, 1/S on vertical ones,
    // and the reverse left of the anchor)
    double boundary_weight(LatticePoint a, LatticePoint b) const;
    double log_boundary_ratio(LatticePoint a, LatticePoint b) const override;
    double uniform_theta(LatticePoint z, std::uint32_t replica = 0) const override;

private:
    EnvironmentSpec spec_;
    PhiloxKey bulk_key_{};
    PhiloxKey horizontal_key_{};
    PhiloxKey vertical_key_{};
    PhiloxKey theta_key_{};
};

// Point reflection z -> -z; swaps southwest and northeast boundaries.
class ReflectedField final : public WeightField {
public:
    explicit ReflectedField(const WeightField& inner);
    double mu() const override { return inner_.mu(); }
    const BoundarySpec& boundary() const override { return boundary_; }
    double log_bulk_weight(LatticePoint z) const override { return inner_.log_bulk_weight(-z); }
    double log_boundary_ratio(LatticePoint a, LatticePoint b) const override {
        return inner_.log_boundary_ratio(-b, -a);
    }
    double uniform_theta(LatticePoint z, std::uint32_t replica = 0) const override {
        return inner_.uniform_theta(-z, replica);
    }

private:
    const WeightField& inner_;
    BoundarySpec boundary_;
};

// canonical orientation of an edge: b = a + e1 or a + e2
bool canonical_edge(LatticePoint& a, LatticePoint& b);

}  // namespace gpl

#endif
