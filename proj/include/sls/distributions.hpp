#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "json.hpp"

namespace sls {

struct UniformCost {
    double lo = 0.0;
    double hi = 1.0;
    friend bool operator==(const UniformCost&, const UniformCost&) = default;
};

// Degenerate prior at `point` whose virtual cost is the bid itself.
struct IdentityVirtualCost {
    double point = 0.0;
    friend bool operator==(const IdentityVirtualCost&, const IdentityVirtualCost&) = default;
};

// lambda(x) = 0 everywhere. Only meaningful for allocation experiments.
struct ZeroVirtualCost {
    friend bool operator==(const ZeroVirtualCost&, const ZeroVirtualCost&) = default;
};

// Piecewise-linear cumulative distribution through (x, F(x)) knots.
struct PiecewiseCdfCost {
    std::vector<std::pair<double, double>> knots;
    friend bool operator==(const PiecewiseCdfCost&, const PiecewiseCdfCost&) = default;
};

/// Prior over one agent's unit cost, together with its virtual cost
/// lambda(x) = x + F(x)/f(x).
///
/// Past the support bound the virtual cost continues linearly with its
/// left-limit slope at the bound, so lambda stays strictly increasing on
/// [0, +inf) for every regular kind.
class CostDistribution {
public:
    using Params = std::variant<UniformCost, IdentityVirtualCost, ZeroVirtualCost, PiecewiseCdfCost>;

    static CostDistribution uniform(double lo, double hi);
    static CostDistribution identity_virtual(double point);
    static CostDistribution zero_virtual();
    static CostDistribution piecewise_cdf(std::vector<std::pair<double, double>> knots);

    std::string_view kind() const;
    const Params& params() const { return params_; }

    // Proper kinds carry a genuine density: uniform and piecewise_cdf.
    bool is_proper() const;
    bool has_sampler() const;

    double density(double x) const;
    double cdf(double x) const;
    double support_upper() const;

    double virtual_cost(double x) const;

    /// Smallest x >= 0 with virtual_cost(x) >= y. Negative y within 1e-9 of
    /// zero is treated as zero.
    double inverse_virtual_cost(double y) const;

    double sample(std::mt19937_64& rng) const;

    friend bool operator==(const CostDistribution&, const CostDistribution&) = default;

private:
    explicit CostDistribution(Params params) : params_(std::move(params)) {}

    Params params_;
};

inline constexpr std::size_t default_regularity_grid = 10001;

/// True iff the virtual cost is nondecreasing on [0, omega]: closed form for
/// the built-in kinds plus a uniform grid scan for piecewise priors.
bool check_regularity(const CostDistribution& d, std::size_t grid_points = default_regularity_grid);

CostDistribution distribution_from_json(const nlohmann::json& j);
nlohmann::json distribution_to_json(const CostDistribution& d);

// Uniform double in [0, 1) from the top 53 bits, identical on every platform.
inline double unit_uniform(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace sls
