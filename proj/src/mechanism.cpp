#include "sls/mechanism.hpp"

#include <algorithm>
#include <cmath>

#include "sls/error.hpp"
#include "sls/ilp.hpp"

namespace sls {

namespace {

constexpr double neg_inf = -std::numeric_limits<double>::infinity();

void require_agent(const Ccgs& s, std::size_t agent) {
    if (agent >= s.agent_count()) {
        throw InputError("agent " + std::to_string(agent + 1) + " out of range (model has " +
                         std::to_string(s.agent_count()) + ")");
    }
}

std::vector<std::size_t> counts_of(const Ccgs& s, const SocialLaw& law) {
    std::vector<std::size_t> out(s.agent_count());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = law.size_for(i);
    }
    return out;
}

// Running mean and standard error.
class Welford {
public:
    void add(double x) {
        ++n_;
        const double d = x - mean_;
        mean_ += d / static_cast<double>(n_);
        m2_ += d * (x - mean_);
    }
    Estimate estimate() const {
        Estimate e;
        e.mean = mean_;
        e.std_error = n_ > 1 ? std::sqrt(m2_ / static_cast<double>(n_ - 1) / static_cast<double>(n_)) : 0.0;
        return e;
    }

private:
    std::size_t n_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

}  // namespace

Backend parse_backend(std::string_view name) {
    if (name == "ilp") {
        return Backend::ilp;
    }
    if (name == "brute") {
        return Backend::brute;
    }
    throw InputError("unknown backend \"" + std::string(name) + "\" (expected ilp or brute)");
}

std::string_view backend_name(Backend b) { return b == Backend::ilp ? "ilp" : "brute"; }

double objective_g(const Ccgs& s, const FeatureSet& f, const BidProfile& bids, const SocialLaw& law) {
    const auto lambdas = virtual_costs(s, bids);
    validate_law(s, law);
    double g = valuate(apply_law(s, law), f);
    for (std::size_t i = 0; i < s.agent_count(); ++i) {
        g -= lambdas[i] * static_cast<double>(law.size_for(i));
    }
    return g;
}

// ---------------------------------------------------------------- LawTable

LawTable::LawTable(const Ccgs& s, const FeatureSet& f, std::uint64_t limit) {
    const auto n = count_social_laws(s);
    if (!n || *n > limit) {
        throw InputError("brute backend: the structure has more than " + std::to_string(limit) + " social laws");
    }
    entries_.reserve(static_cast<std::size_t>(*n));
    for (const auto& law : enumerate_social_laws(s)) {
        Entry e;
        e.law = law;
        e.bits = law_bits(s, law);
        e.counts = counts_of(s, law);
        e.total = law.total_size();
        e.value = valuate(apply_law(s, law), f);
        entries_.push_back(std::move(e));
    }
}

std::optional<std::size_t> LawTable::best(const std::vector<double>& lambdas,
                                          std::optional<std::pair<std::size_t, std::size_t>> fixed) const {
    std::optional<std::size_t> best;
    double best_g = 0.0;
    for (std::size_t k = 0; k < entries_.size(); ++k) {
        const auto& e = entries_[k];
        if (fixed && e.counts[fixed->first] != fixed->second) {
            continue;
        }
        double g = e.value;
        for (std::size_t i = 0; i < lambdas.size(); ++i) {
            g -= lambdas[i] * static_cast<double>(e.counts[i]);
        }
        if (!best || prefer_candidate(g, e.total, e.bits, best_g, entries_[*best].total, entries_[*best].bits)) {
            best = k;
            best_g = g;
        }
    }
    return best;
}

// --------------------------------------------------------------- Mechanism

Mechanism::Mechanism(Ccgs s, FeatureSet f, Backend backend)
    : s_(std::move(s)), f_(std::move(f)), backend_(backend) {}

std::vector<double> Mechanism::lambdas(const BidProfile& bids) const { return virtual_costs(s_, bids); }

const LawTable& Mechanism::table() const {
    if (!table_) {
        table_.emplace(s_, f_);
    }
    return *table_;
}

std::optional<Allocation> Mechanism::solve(const BidProfile& bids,
                                           std::optional<std::pair<std::size_t, std::size_t>> fixed) const {
    const auto lam = lambdas(bids);
    Allocation a;
    if (backend_ == Backend::brute) {
        const auto k = table().best(lam, fixed);
        if (!k) {
            return std::nullopt;
        }
        a.law = table().law(*k);
        a.counts = table().counts(*k);
        a.valuation = table().value(*k);
    } else {
        IlpModel m = build_dom_sl_virtual(s_, f_, lam);
        if (fixed) {
            add_fixed_count(m, fixed->first, fixed->second);
        }
        const auto solution = solve_exact(m);
        if (!solution) {
            return std::nullopt;
        }
        a.law = decode_law(m, *solution, s_);
        a.counts = counts_of(s_, a.law);
        a.valuation = valuate(apply_law(s_, a.law), f_);
    }
    a.g = a.valuation;
    for (std::size_t i = 0; i < lam.size(); ++i) {
        a.g -= lam[i] * static_cast<double>(a.counts[i]);
    }
    return a;
}

Allocation Mechanism::allocate(const BidProfile& bids) const {
    auto a = solve(bids, std::nullopt);
    if (!a) {
        throw InternalError("no optimal law found although the empty law is always valid");
    }
    return *a;
}

std::optional<Allocation> Mechanism::allocate_fixed(const BidProfile& bids, std::size_t agent, std::size_t n) const {
    require_agent(s_, agent);
    validate_bids(s_, bids);
    BidProfile zero = bids;
    zero[agent] = 0.0;
    return solve(zero, std::make_pair(agent, n));
}

TurningPoints Mechanism::turning_points(const BidProfile& bids, std::size_t agent) const {
    require_agent(s_, agent);
    const Allocation a = allocate(bids);
    return turning_points_for(bids, agent, a.counts[agent]);
}

TurningPoints Mechanism::turning_points_for(const BidProfile& bids, std::size_t agent, std::size_t n0) const {
    TurningPoints tp;
    tp.agent = agent;
    tp.anchor_bid = bids[agent];
    tp.anchor_count = n0;
    if (n0 == 0) {
        return tp;
    }
    const CostDistribution& dist = *s_.cost_model(agent);
    // Intercepts of the lines v_n - n * lambda_i(t); the agent's own term is
    // added back so the lines stay exact even if lambda_i(0) != 0.
    const double lambda0 = dist.virtual_cost(0.0);
    tp.levels.assign(n0 + 1, neg_inf);
    for (std::size_t n = 0; n <= n0; ++n) {
        if (const auto fixed = allocate_fixed(bids, agent, n)) {
            tp.levels[n] = fixed->g + static_cast<double>(n) * lambda0;
        }
    }
    if (tp.levels[n0] == neg_inf) {
        throw InternalError("allocated restriction count has no feasible fixed-count law");
    }

    std::size_t current = n0;
    double previous = bids[agent];
    while (current > 0) {
        double best_p = std::numeric_limits<double>::infinity();
        std::size_t best_m = current;
        for (std::size_t m = 0; m < current; ++m) {
            if (tp.levels[m] == neg_inf) {
                continue;
            }
            const double slope = (tp.levels[current] - tp.levels[m]) / static_cast<double>(current - m);
            const double p = dist.inverse_virtual_cost(slope);
            if (best_m == current || (p < best_p && !objective_ties(p, best_p))) {
                best_p = p;
                best_m = m;
            }
        }
        if (best_m == current) {
            throw InternalError("no lower restriction level is reachable");
        }
        if (best_p < previous) {
            if (previous - best_p > tp_clamp_tolerance * (1.0 + std::abs(previous))) {
                throw InternalError("turning point " + std::to_string(best_p) + " lies below the previous one " +
                                    std::to_string(previous));
            }
            best_p = previous;
        }
        tp.points.push_back({best_p, best_m});
        previous = best_p;
        current = best_m;
    }
    return tp;
}

namespace {

double payment_from(const TurningPoints& tp) {
    double pay = 0.0;
    std::size_t before = tp.anchor_count;
    for (const auto& pt : tp.points) {
        pay += static_cast<double>(before - pt.count) * pt.threshold;
        before = pt.count;
    }
    return pay;
}

}  // namespace

double Mechanism::payment(const BidProfile& bids, std::size_t agent) const {
    return payment_from(turning_points(bids, agent));
}

MechanismReport Mechanism::run(const BidProfile& bids, bool with_turning_points) const {
    const Allocation a = allocate(bids);
    MechanismReport r;
    r.law = a.law;
    r.restricted_counts = a.counts;
    r.valuation = a.valuation;
    r.virtual_objective = a.g;
    double paid = 0.0;
    for (std::size_t i = 0; i < s_.agent_count(); ++i) {
        auto tp = turning_points_for(bids, i, a.counts[i]);
        r.payments.push_back(payment_from(tp));
        paid += r.payments.back();
        if (with_turning_points) {
            r.turning_points.push_back(std::move(tp));
        }
    }
    r.profit = r.valuation - paid;
    return r;
}

double Mechanism::payment_oracle(const BidProfile& bids, std::size_t agent, double t_max, double step) const {
    require_agent(s_, agent);
    validate_bids(s_, bids);
    if (!(step > 0.0) || !std::isfinite(step)) {
        throw InputError("oracle step must be positive");
    }
    BidProfile probe = bids;
    auto restricted = [&](double t) {
        probe[agent] = t;
        return static_cast<double>(allocate(probe).counts[agent]);
    };
    const double x = bids[agent];
    const double r0 = restricted(x);
    if (r0 == 0.0) {
        return 0.0;
    }
    if (!(t_max > x) || restricted(t_max) != 0.0) {
        throw InputError("allocation is still positive at the oracle bound " + std::to_string(t_max) +
                         "; use a larger bound");
    }
    // The allocation is monotone, so equal ends of a bracket mean it is flat
    // inside; otherwise bisect down to the jump.
    constexpr double width = 1e-12;
    double integral = 0.0;
    auto refine = [&](auto&& self, double a, double ra, double b, double rb) -> void {
        if (ra == rb) {
            integral += ra * (b - a);
            return;
        }
        if (b - a <= width * (1.0 + std::abs(b))) {
            integral += 0.5 * (ra + rb) * (b - a);
            return;
        }
        const double mid = 0.5 * (a + b);
        const double rm = restricted(mid);
        self(self, a, ra, mid, rm);
        self(self, mid, rm, b, rb);
    };
    double a = x;
    double ra = r0;
    for (std::size_t k = 1; a < t_max; ++k) {
        const double b = std::min(t_max, x + static_cast<double>(k) * step);
        const double rb = restricted(b);
        refine(refine, a, ra, b, rb);
        a = b;
        ra = rb;
    }
    return r0 * x + integral;
}

double Mechanism::exit_bid(const BidProfile& bids, std::size_t agent) const {
    require_agent(s_, agent);
    validate_bids(s_, bids);
    BidProfile probe = bids;
    double t = std::max(1.0, bids[agent]);
    const double omega = s_.cost_model(agent)->support_upper();
    if (std::isfinite(omega)) {
        t = std::max(t, omega);
    }
    for (int doubling = 0; doubling < 64; ++doubling) {
        probe[agent] = t;
        if (allocate(probe).counts[agent] == 0) {
            return t;
        }
        t *= 2.0;
    }
    throw DomainError("agent " + std::to_string(agent + 1) + " stays restricted at every bid");
}

double Mechanism::utility(const BidProfile& bids, std::size_t agent, double true_cost, PaymentRule rule) const {
    require_agent(s_, agent);
    const Allocation a = allocate(bids);
    const auto r = static_cast<double>(a.counts[agent]);
    const double pay = rule == PaymentRule::threshold ? payment_from(turning_points_for(bids, agent, a.counts[agent]))
                                                      : bids[agent] * r;
    return pay - true_cost * r;
}

TruthfulnessReport Mechanism::verify_truthfulness(std::size_t agent, double true_cost, const BidProfile& others,
                                                  const std::vector<double>& bid_grid, PaymentRule rule) const {
    require_agent(s_, agent);
    BidProfile bids = others;
    if (bids.size() != s_.agent_count()) {
        throw InputError("expected " + std::to_string(s_.agent_count()) + " bids, got " + std::to_string(bids.size()));
    }
    bids[agent] = true_cost;
    TruthfulnessReport report;
    report.truthful_utility = utility(bids, agent, true_cost, rule);
    report.worst_bid = true_cost;
    for (const double b : bid_grid) {
        bids[agent] = b;
        const double gain = utility(bids, agent, true_cost, rule) - report.truthful_utility;
        if (gain > report.worst_violation) {
            report.worst_violation = gain;
            report.worst_bid = b;
        }
    }
    report.truthful = report.worst_violation <= truthfulness_tolerance;
    return report;
}

bool Mechanism::verify_ir(std::size_t agent, double true_cost, const BidProfile& others) const {
    BidProfile bids = others;
    validate_bids(s_, bids);
    require_agent(s_, agent);
    bids[agent] = true_cost;
    return utility(bids, agent, true_cost) >= -truthfulness_tolerance;
}

InterimEstimate Mechanism::estimate_interim(std::size_t agent, double bid, std::size_t samples,
                                            std::mt19937_64& rng) const {
    require_agent(s_, agent);
    if (samples == 0) {
        throw InputError("at least one sample is required");
    }
    const auto models = s_.cost_models();
    for (std::size_t j = 0; j < models.size(); ++j) {
        if (j != agent && !models[j].has_sampler()) {
            throw InputError("agent " + std::to_string(j + 1) + "'s cost model cannot be sampled");
        }
    }
    Welford r;
    Welford p;
    Welford u;
    BidProfile bids(s_.agent_count());
    for (std::size_t k = 0; k < samples; ++k) {
        for (std::size_t j = 0; j < bids.size(); ++j) {
            bids[j] = j == agent ? bid : models[j].sample(rng);
        }
        const Allocation a = allocate(bids);
        const double count = static_cast<double>(a.counts[agent]);
        const double pay = payment_from(turning_points_for(bids, agent, a.counts[agent]));
        r.add(count);
        p.add(pay);
        u.add(pay - count * bid);
    }
    return {r.estimate(), p.estimate(), u.estimate(), samples};
}

Estimate Mechanism::estimate_expected_profit(std::size_t samples, std::mt19937_64& rng) const {
    if (samples == 0) {
        throw InputError("at least one sample is required");
    }
    const auto models = s_.cost_models();
    for (std::size_t j = 0; j < models.size(); ++j) {
        if (!models[j].has_sampler()) {
            throw InputError("agent " + std::to_string(j + 1) + "'s cost model cannot be sampled");
        }
    }
    Welford profit;
    BidProfile bids(s_.agent_count());
    for (std::size_t k = 0; k < samples; ++k) {
        for (std::size_t j = 0; j < bids.size(); ++j) {
            bids[j] = models[j].sample(rng);
        }
        profit.add(run(bids).profit);
    }
    return profit.estimate();
}

// -------------------------------------------------------------- utilities

std::vector<double> linear_grid(double lo, double hi, std::size_t points) {
    if (points == 0 || !std::isfinite(lo) || !std::isfinite(hi) || hi < lo) {
        throw InputError("grid needs at least one point and finite bounds lo <= hi");
    }
    if (points == 1) {
        return {lo};
    }
    std::vector<double> out(points);
    for (std::size_t k = 0; k < points; ++k) {
        out[k] = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(points - 1);
    }
    out.back() = hi;
    return out;
}

std::vector<double> bid_grid(const Ccgs& s, std::size_t agent, std::size_t points) {
    require_agent(s, agent);
    const auto& d = s.cost_model(agent);
    if (!d) {
        throw InputError("agent " + std::to_string(agent + 1) + " has no cost model");
    }
    const double omega = d->support_upper();
    if (!std::isfinite(omega)) {
        throw InputError("agent " + std::to_string(agent + 1) + "'s prior has no finite upper end; give a bound");
    }
    return linear_grid(0.0, omega, points);
}

Allocation allocate(const Ccgs& s, const FeatureSet& f, const BidProfile& bids, Backend backend) {
    return Mechanism(s, f, backend).allocate(bids);
}

std::optional<Allocation> allocate_fixed(const Ccgs& s, const FeatureSet& f, const BidProfile& bids,
                                         std::size_t agent, std::size_t n, Backend backend) {
    return Mechanism(s, f, backend).allocate_fixed(bids, agent, n);
}

TurningPoints turning_points(const Ccgs& s, const FeatureSet& f, const BidProfile& bids, std::size_t agent,
                             Backend backend) {
    return Mechanism(s, f, backend).turning_points(bids, agent);
}

double payment(const Ccgs& s, const FeatureSet& f, const BidProfile& bids, std::size_t agent, Backend backend) {
    return Mechanism(s, f, backend).payment(bids, agent);
}

MechanismReport run_mechanism(const Ccgs& s, const FeatureSet& f, const BidProfile& bids, Backend backend,
                              bool with_turning_points) {
    return Mechanism(s, f, backend).run(bids, with_turning_points);
}

nlohmann::json to_json(const TurningPoints& tp) {
    auto levels = nlohmann::json::array();
    for (const double v : tp.levels) {
        levels.push_back(v == neg_inf ? nlohmann::json(nullptr) : nlohmann::json(v));
    }
    auto points = nlohmann::json::array();
    for (const auto& p : tp.points) {
        points.push_back({{"threshold", p.threshold}, {"count", p.count}});
    }
    return {{"agent", tp.agent + 1},
            {"anchor", {{"bid", tp.anchor_bid}, {"count", tp.anchor_count}}},
            {"levels", levels},
            {"points", points}};
}

nlohmann::json to_json(const Ccgs& s, const MechanismReport& r) {
    nlohmann::json out{{"law", save_law(s, r.law)},
                       {"payments", r.payments},
                       {"restricted_counts", r.restricted_counts},
                       {"valuation", r.valuation},
                       {"virtual_objective", r.virtual_objective},
                       {"profit", r.profit}};
    if (!r.turning_points.empty()) {
        auto tps = nlohmann::json::array();
        for (const auto& tp : r.turning_points) {
            tps.push_back(to_json(tp));
        }
        out["turning_points"] = tps;
    }
    return out;
}

}  // namespace sls
