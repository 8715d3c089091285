#pragma once

// Profit-optimal allocation of social laws with threshold payments.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "sls/model.hpp"
#include "sls/valuation.hpp"

namespace sls {

enum class Backend { ilp, brute };

Backend parse_backend(std::string_view name);
std::string_view backend_name(Backend b);

/// v_F(S + eta) - sum_i lambda_i(x_i) |eta_i|.
double objective_g(const Ccgs& s, const FeatureSet& f, const BidProfile& bids, const SocialLaw& law);

struct Allocation {
    SocialLaw law;
    std::vector<std::size_t> counts;  // restricted actions per agent
    double valuation = 0.0;
    double g = 0.0;  // virtual objective at the bids the allocation was computed for
};

// Every valid law with its valuation, counts and canonical bit vector.
// Makes repeated allocations over one structure cheap.
class LawTable {
public:
    static constexpr std::uint64_t default_limit = 1u << 20;

    LawTable(const Ccgs& s, const FeatureSet& f, std::uint64_t limit = default_limit);

    std::size_t size() const { return entries_.size(); }
    const SocialLaw& law(std::size_t k) const { return entries_[k].law; }
    double value(std::size_t k) const { return entries_[k].value; }
    const std::vector<std::size_t>& counts(std::size_t k) const { return entries_[k].counts; }

    /// Best law under the shared tie-break; with `fixed` only laws that
    /// restrict exactly fixed->second actions of agent fixed->first count.
    std::optional<std::size_t> best(const std::vector<double>& lambdas,
                                    std::optional<std::pair<std::size_t, std::size_t>> fixed = std::nullopt) const;

private:
    struct Entry {
        SocialLaw law;
        std::vector<std::uint8_t> bits;
        std::vector<std::size_t> counts;
        std::size_t total = 0;
        double value = 0.0;
    };
    std::vector<Entry> entries_;
};

struct TurningPoint {
    double threshold;  // p_j
    std::size_t count;  // n_j
};

struct TurningPoints {
    std::size_t agent = 0;
    double anchor_bid = 0.0;     // p_0 = x_i
    std::size_t anchor_count = 0;  // n_0
    std::vector<double> levels;  // v_n for n = 0..n_0; -inf where no law restricts exactly n
    std::vector<TurningPoint> points;
};

struct MechanismReport {
    SocialLaw law;
    std::vector<std::size_t> restricted_counts;
    std::vector<double> payments;
    double valuation = 0.0;
    double virtual_objective = 0.0;
    double profit = 0.0;
    std::vector<TurningPoints> turning_points;  // filled on request
};

enum class PaymentRule {
    threshold,    // the mechanism's own payments
    pay_your_bid  // bid times restricted count; a deliberately untruthful baseline
};

struct TruthfulnessReport {
    bool truthful = true;
    double truthful_utility = 0.0;
    double worst_violation = 0.0;  // max over the grid of u(b) - u(true cost), clipped at 0
    double worst_bid = 0.0;
};

struct Estimate {
    double mean = 0.0;
    double std_error = 0.0;
};

struct InterimEstimate {
    Estimate restricted;  // r_i
    Estimate payment;     // p_i
    Estimate utility;     // p_i - r_i x_i
    std::size_t samples = 0;
};

class Mechanism {
public:
    Mechanism(Ccgs s, FeatureSet f, Backend backend = Backend::ilp);

    const Ccgs& structure() const { return s_; }
    const FeatureSet& features() const { return f_; }
    Backend backend() const { return backend_; }

    Allocation allocate(const BidProfile& bids) const;
    /// Dominant law among those restricting exactly n actions of `agent`,
    /// computed with the agent's bid set to 0. nullopt when no such law exists.
    std::optional<Allocation> allocate_fixed(const BidProfile& bids, std::size_t agent, std::size_t n) const;

    TurningPoints turning_points(const BidProfile& bids, std::size_t agent) const;
    double payment(const BidProfile& bids, std::size_t agent) const;
    MechanismReport run(const BidProfile& bids, bool with_turning_points = false) const;

    /// R_i(x) x_i + integral of R_i(t, x_-i) over [x_i, t_max], sampling the
    /// allocation on a grid of width `step` and bisecting every bracket in which it changes.
    double payment_oracle(const BidProfile& bids, std::size_t agent, double t_max, double step) const;
    /// A bid beyond which the agent is never restricted (found by doubling).
    double exit_bid(const BidProfile& bids, std::size_t agent) const;

    double utility(const BidProfile& bids, std::size_t agent, double true_cost,
                   PaymentRule rule = PaymentRule::threshold) const;

    TruthfulnessReport verify_truthfulness(std::size_t agent, double true_cost, const BidProfile& others,
                                           const std::vector<double>& bid_grid,
                                           PaymentRule rule = PaymentRule::threshold) const;
    bool verify_ir(std::size_t agent, double true_cost, const BidProfile& others) const;

    InterimEstimate estimate_interim(std::size_t agent, double bid, std::size_t samples, std::mt19937_64& rng) const;
    Estimate estimate_expected_profit(std::size_t samples, std::mt19937_64& rng) const;

private:
    std::vector<double> lambdas(const BidProfile& bids) const;
    std::optional<Allocation> solve(const BidProfile& bids,
                                    std::optional<std::pair<std::size_t, std::size_t>> fixed) const;
    const LawTable& table() const;
    TurningPoints turning_points_for(const BidProfile& bids, std::size_t agent, std::size_t n0) const;

    Ccgs s_;
    FeatureSet f_;
    Backend backend_;
    mutable std::optional<LawTable> table_;
};

inline constexpr double tp_clamp_tolerance = 1e-9;
inline constexpr double truthfulness_tolerance = 1e-9;

/// Evenly spaced points on [lo, hi], both ends included.
std::vector<double> linear_grid(double lo, double hi, std::size_t points);
/// [0, omega_i] for the agent's prior; error when it has no finite upper end.
std::vector<double> bid_grid(const Ccgs& s, std::size_t agent, std::size_t points);

// Free-standing forms; each builds a throwaway Mechanism.
Allocation allocate(const Ccgs& s, const FeatureSet& f, const BidProfile& bids, Backend backend = Backend::ilp);
std::optional<Allocation> allocate_fixed(const Ccgs& s, const FeatureSet& f, const BidProfile& bids,
                                         std::size_t agent, std::size_t n, Backend backend = Backend::ilp);
TurningPoints turning_points(const Ccgs& s, const FeatureSet& f, const BidProfile& bids, std::size_t agent,
                             Backend backend = Backend::ilp);
double payment(const Ccgs& s, const FeatureSet& f, const BidProfile& bids, std::size_t agent,
               Backend backend = Backend::ilp);
MechanismReport run_mechanism(const Ccgs& s, const FeatureSet& f, const BidProfile& bids,
                              Backend backend = Backend::ilp, bool with_turning_points = false);

nlohmann::json to_json(const TurningPoints& tp);
nlohmann::json to_json(const Ccgs& s, const MechanismReport& r);

}  // namespace sls
