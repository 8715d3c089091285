#include "sls/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "sls/error.hpp"

namespace sls {

namespace {

constexpr double negative_slack = 1e-9;

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void require_nonnegative(double x) {
    if (!(x >= 0.0)) {
        throw DomainError("cost argument must be nonnegative, got " + std::to_string(x));
    }
}

double segment_slope(const PiecewiseCdfCost& p, std::size_t k) {
    const auto& [x0, f0] = p.knots[k];
    const auto& [x1, f1] = p.knots[k + 1];
    return (f1 - f0) / (x1 - x0);
}

// Segment whose half-open interval [x_k, x_{k+1}) holds x; the last segment
// also owns the right end point.
std::size_t segment_of(const PiecewiseCdfCost& p, double x) {
    const std::size_t segments = p.knots.size() - 1;
    for (std::size_t k = 0; k + 1 < segments; ++k) {
        if (x < p.knots[k + 1].first) {
            return k;
        }
    }
    return segments - 1;
}

double piecewise_cdf_at(const PiecewiseCdfCost& p, double x) {
    if (x <= p.knots.front().first) {
        return 0.0;
    }
    if (x >= p.knots.back().first) {
        return 1.0;
    }
    const std::size_t k = segment_of(p, x);
    return p.knots[k].second + segment_slope(p, k) * (x - p.knots[k].first);
}

// lambda on segment k, evaluated at x (which need not lie in the segment).
double piecewise_lambda_on(const PiecewiseCdfCost& p, std::size_t k, double x) {
    const double slope = segment_slope(p, k);
    const auto& [xk, fk] = p.knots[k];
    return x + (fk + slope * (x - xk)) / slope;
}

double piecewise_lambda(const PiecewiseCdfCost& p, double x) {
    const double omega = p.knots.back().first;
    if (x > omega) {
        const std::size_t last = p.knots.size() - 2;
        return piecewise_lambda_on(p, last, omega) + 2.0 * (x - omega);
    }
    const std::size_t k = segment_of(p, x);
    if (segment_slope(p, k) <= 0.0) {
        throw DomainError("density vanishes at x=" + std::to_string(x) + " inside the support");
    }
    return piecewise_lambda_on(p, k, x);
}

bool piecewise_regular_closed_form(const PiecewiseCdfCost& p) {
    const std::size_t segments = p.knots.size() - 1;
    for (std::size_t k = 0; k < segments; ++k) {
        if (segment_slope(p, k) <= 0.0) {
            return false;
        }
    }
    // Inside a segment lambda has slope 2; at an interior knot it jumps by
    // F_k (1/s_k - 1/s_{k-1}), which must not be negative.
    for (std::size_t k = 1; k < segments; ++k) {
        const double fk = p.knots[k].second;
        if (fk > 0.0 && segment_slope(p, k) > segment_slope(p, k - 1)) {
            return false;
        }
    }
    return true;
}

double piecewise_inverse(const PiecewiseCdfCost& p, double y) {
    const std::size_t segments = p.knots.size() - 1;
    for (std::size_t k = 0; k < segments; ++k) {
        const double left = p.knots[k].first;
        const double right = p.knots[k + 1].first;
        const double at_left = piecewise_lambda_on(p, k, left);
        if (y <= at_left) {
            return left;
        }
        if (y < piecewise_lambda_on(p, k, right)) {
            const double offset = p.knots[k].second / segment_slope(p, k);
            return (y + left - offset) / 2.0;
        }
    }
    const double omega = p.knots.back().first;
    return omega + (y - piecewise_lambda(p, omega)) / 2.0;
}

void validate_knots(const std::vector<std::pair<double, double>>& knots) {
    if (knots.size() < 2) {
        throw InputError("piecewise_cdf needs at least two knots");
    }
    if (knots.front().first != 0.0 || knots.front().second != 0.0) {
        throw InputError("piecewise_cdf must start at knot (0, 0)");
    }
    if (knots.back().second != 1.0) {
        throw InputError("piecewise_cdf must end with F = 1");
    }
    for (std::size_t k = 0; k + 1 < knots.size(); ++k) {
        if (!(knots[k + 1].first > knots[k].first)) {
            throw InputError("piecewise_cdf knot abscissae must be strictly increasing");
        }
        if (knots[k + 1].second < knots[k].second) {
            throw InputError("piecewise_cdf must be nondecreasing");
        }
    }
    const auto& a = knots[knots.size() - 2];
    const auto& b = knots.back();
    if (!(b.second > a.second)) {
        throw InputError("piecewise_cdf needs positive density on its last segment");
    }
}

}  // namespace

CostDistribution CostDistribution::uniform(double lo, double hi) {
    if (!(lo >= 0.0) || !(hi > lo) || !std::isfinite(hi)) {
        throw InputError("uniform cost prior needs 0 <= lo < hi < inf");
    }
    return CostDistribution(UniformCost{lo, hi});
}

CostDistribution CostDistribution::identity_virtual(double point) {
    if (!(point >= 0.0) || !std::isfinite(point)) {
        throw InputError("identity_virtual point must be a finite nonnegative number");
    }
    return CostDistribution(IdentityVirtualCost{point});
}

CostDistribution CostDistribution::zero_virtual() { return CostDistribution(ZeroVirtualCost{}); }

CostDistribution CostDistribution::piecewise_cdf(std::vector<std::pair<double, double>> knots) {
    validate_knots(knots);
    return CostDistribution(PiecewiseCdfCost{std::move(knots)});
}

std::string_view CostDistribution::kind() const {
    return std::visit(overloaded{
                          [](const UniformCost&) { return std::string_view("uniform"); },
                          [](const IdentityVirtualCost&) { return std::string_view("identity_virtual"); },
                          [](const ZeroVirtualCost&) { return std::string_view("zero_virtual"); },
                          [](const PiecewiseCdfCost&) { return std::string_view("piecewise_cdf"); },
                      },
                      params_);
}

bool CostDistribution::is_proper() const {
    return std::holds_alternative<UniformCost>(params_) || std::holds_alternative<PiecewiseCdfCost>(params_);
}

bool CostDistribution::has_sampler() const { return !std::holds_alternative<ZeroVirtualCost>(params_); }

double CostDistribution::density(double x) const {
    return std::visit(overloaded{
                          [x](const UniformCost& u) { return (x >= u.lo && x <= u.hi) ? 1.0 / (u.hi - u.lo) : 0.0; },
                          [](const IdentityVirtualCost&) { return 0.0; },
                          [](const ZeroVirtualCost&) { return 0.0; },
                          [x](const PiecewiseCdfCost& p) {
                              if (x < 0.0 || x > p.knots.back().first) {
                                  return 0.0;
                              }
                              return segment_slope(p, segment_of(p, x));
                          },
                      },
                      params_);
}

double CostDistribution::cdf(double x) const {
    return std::visit(overloaded{
                          [x](const UniformCost& u) { return std::clamp((x - u.lo) / (u.hi - u.lo), 0.0, 1.0); },
                          [x](const IdentityVirtualCost& c) { return x >= c.point ? 1.0 : 0.0; },
                          [](const ZeroVirtualCost&) { return 0.0; },
                          [x](const PiecewiseCdfCost& p) { return piecewise_cdf_at(p, x); },
                      },
                      params_);
}

double CostDistribution::support_upper() const {
    return std::visit(overloaded{
                          [](const UniformCost& u) { return u.hi; },
                          [](const IdentityVirtualCost& c) { return c.point; },
                          [](const ZeroVirtualCost&) { return std::numeric_limits<double>::infinity(); },
                          [](const PiecewiseCdfCost& p) { return p.knots.back().first; },
                      },
                      params_);
}

double CostDistribution::virtual_cost(double x) const {
    require_nonnegative(x);
    return std::visit(overloaded{
                          // Below lo both F and f vanish; lambda(x) = x joins 2x - lo continuously.
                          [x](const UniformCost& u) { return x < u.lo ? x : 2.0 * x - u.lo; },
                          [x](const IdentityVirtualCost&) { return x; },
                          [](const ZeroVirtualCost&) { return 0.0; },
                          [x](const PiecewiseCdfCost& p) { return piecewise_lambda(p, x); },
                      },
                      params_);
}

double CostDistribution::inverse_virtual_cost(double y) const {
    if (y < 0.0) {
        if (y < -negative_slack) {
            throw DomainError("inverse virtual cost needs a nonnegative argument, got " + std::to_string(y));
        }
        y = 0.0;
    }
    return std::visit(overloaded{
                          [y](const UniformCost& u) { return y < u.lo ? y : (y + u.lo) / 2.0; },
                          [y](const IdentityVirtualCost&) { return y; },
                          [](const ZeroVirtualCost&) -> double {
                              throw DomainError("zero_virtual has no inverse virtual cost; it cannot be used for payments");
                          },
                          [y](const PiecewiseCdfCost& p) {
                              if (!piecewise_regular_closed_form(p)) {
                                  throw DomainError("virtual cost is not regular; see check_regularity");
                              }
                              return piecewise_inverse(p, y);
                          },
                      },
                      params_);
}

double CostDistribution::sample(std::mt19937_64& rng) const {
    return std::visit(overloaded{
                          [&rng](const UniformCost& u) { return u.lo + (u.hi - u.lo) * unit_uniform(rng); },
                          [](const IdentityVirtualCost& c) { return c.point; },
                          [](const ZeroVirtualCost&) -> double {
                              throw InputError("zero_virtual has no sampler");
                          },
                          [&rng](const PiecewiseCdfCost& p) {
                              const double u = unit_uniform(rng);
                              for (std::size_t k = 0; k + 1 < p.knots.size(); ++k) {
                                  const auto& [x0, f0] = p.knots[k];
                                  const auto& [x1, f1] = p.knots[k + 1];
                                  if (u < f1 && f1 > f0) {
                                      return x0 + (u - f0) / (f1 - f0) * (x1 - x0);
                                  }
                              }
                              return p.knots.back().first;
                          },
                      },
                      params_);
}

bool check_regularity(const CostDistribution& d, std::size_t grid_points) {
    if (grid_points < 2) {
        throw InputError("regularity grid needs at least two points");
    }
    const auto* piecewise = std::get_if<PiecewiseCdfCost>(&d.params());
    if (piecewise == nullptr) {
        return true;  // uniform: 2x - lo; identity: x; zero: constant
    }
    if (!piecewise_regular_closed_form(*piecewise)) {
        return false;
    }
    const double omega = d.support_upper();
    double previous = -std::numeric_limits<double>::infinity();
    for (std::size_t g = 0; g < grid_points; ++g) {
        const double x = omega * static_cast<double>(g) / static_cast<double>(grid_points - 1);
        double lambda = 0.0;
        try {
            lambda = d.virtual_cost(x);
        } catch (const DomainError&) {
            return false;
        }
        if (lambda < previous) {
            return false;
        }
        previous = lambda;
    }
    return true;
}

CostDistribution distribution_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("dist") || !j["dist"].is_string()) {
        throw InputError("malformed distribution: expected an object with a \"dist\" string");
    }
    const auto kind = j["dist"].get<std::string>();
    auto number = [&j](const char* key, std::optional<double> fallback = std::nullopt) {
        if (!j.contains(key)) {
            if (fallback) {
                return *fallback;
            }
            throw InputError(std::string("malformed distribution: missing \"") + key + "\"");
        }
        if (!j[key].is_number()) {
            throw InputError(std::string("malformed distribution: \"") + key + "\" must be a number");
        }
        return j[key].get<double>();
    };
    if (kind == "uniform") {
        return CostDistribution::uniform(number("lo", 0.0), number("hi"));
    }
    if (kind == "identity_virtual") {
        return CostDistribution::identity_virtual(number("point"));
    }
    if (kind == "zero_virtual") {
        return CostDistribution::zero_virtual();
    }
    if (kind == "piecewise_cdf") {
        if (!j.contains("knots") || !j["knots"].is_array()) {
            throw InputError("malformed distribution: piecewise_cdf needs a \"knots\" array");
        }
        std::vector<std::pair<double, double>> knots;
        for (const auto& knot : j["knots"]) {
            if (!knot.is_array() || knot.size() != 2 || !knot[0].is_number() || !knot[1].is_number()) {
                throw InputError("malformed distribution: each knot must be [x, F]");
            }
            knots.emplace_back(knot[0].get<double>(), knot[1].get<double>());
        }
        return CostDistribution::piecewise_cdf(std::move(knots));
    }
    throw InputError("malformed distribution: unknown kind \"" + kind + "\"");
}

nlohmann::json distribution_to_json(const CostDistribution& d) {
    return std::visit(overloaded{
                          [](const UniformCost& u) { return nlohmann::json{{"dist", "uniform"}, {"lo", u.lo}, {"hi", u.hi}}; },
                          [](const IdentityVirtualCost& c) { return nlohmann::json{{"dist", "identity_virtual"}, {"point", c.point}}; },
                          [](const ZeroVirtualCost&) { return nlohmann::json{{"dist", "zero_virtual"}}; },
                          [](const PiecewiseCdfCost& p) {
                              auto knots = nlohmann::json::array();
                              for (const auto& [x, f] : p.knots) {
                                  knots.push_back({x, f});
                              }
                              return nlohmann::json{{"dist", "piecewise_cdf"}, {"knots", knots}};
                          },
                      },
                      d.params());
}

}  // namespace sls
