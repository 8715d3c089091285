#pragma once

// Shared fixtures and independent reference implementations for the tests.
// Nothing here calls the library's model checker, ILP or mechanism code.

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "sls/logic.hpp"
#include "sls/model.hpp"
#include "sls/valuation.hpp"

namespace fixture {

inline std::string data(const std::string& rel) { return std::string(SLS_DATA_DIR) + "/" + rel; }

inline sls::Ccgs example_uniform() { return sls::load_model_file(data("example1/model_uniform.json")); }
inline sls::Ccgs example_identity() { return sls::load_model_file(data("example1/model_identity.json")); }
inline sls::FeatureSet example_features() { return sls::load_features_file(data("example1/features.json")); }
inline sls::SocialLaw example_law(const sls::Ccgs& s, int i) {
    return sls::load_law_file(s, data("example1/eta" + std::to_string(i) + ".json"));
}

inline const std::vector<double> table_values{32, 74, 86, 90, 86, 98, 62, 106};
inline const std::vector<double> table_profits{32, 49, 56, 65, 41, 58, 37, 56};
inline const std::vector<std::string> table_signs{
    "-++----++--", "+-+++---+++", "+-+++-++-++", "+++++--++++",
    "++-+++--+++", "++++++-+++-", "+++----++--", "+++++++++--",
};

// Single agent, q0 -> {qa, qb, qc}; v_0 = 70, v_1 = 90, v_2 = 100.
inline sls::Ccgs synthetic() { return sls::load_model_file(data("synthetic/model.json")); }
inline sls::FeatureSet synthetic_features() { return sls::load_features_file(data("synthetic/features.json")); }

// ------------------------------------------------------------ random models

struct RandomModelOptions {
    std::size_t max_agents = 2;
    std::size_t max_states = 4;
    std::size_t max_actions = 3;
    std::size_t propositions = 2;
    std::uint64_t max_laws = 10000;
    bool uniform_costs = false;
};

inline sls::Ccgs random_model(std::mt19937_64& rng, const RandomModelOptions& o = {}) {
    auto pick = [&](std::size_t lo, std::size_t hi) {
        return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
    };
    while (true) {
        const std::size_t k = pick(1, o.max_agents);
        const std::size_t n = pick(1, o.max_states);
        sls::CcgsBuilder b(k);
        for (std::size_t q = 0; q < n; ++q) {
            b.add_state("s" + std::to_string(q));
        }
        b.set_initial("s0");
        for (std::size_t p = 0; p < o.propositions; ++p) {
            b.add_proposition("p" + std::to_string(p));
        }
        std::vector<std::vector<std::size_t>> sizes(n, std::vector<std::size_t>(k));
        for (std::size_t q = 0; q < n; ++q) {
            for (std::size_t p = 0; p < o.propositions; ++p) {
                if (pick(0, 1)) {
                    b.add_label("s" + std::to_string(q), "p" + std::to_string(p));
                }
            }
            for (std::size_t i = 0; i < k; ++i) {
                sizes[q][i] = pick(1, o.max_actions);
                std::vector<std::string> acts;
                for (std::size_t a = 0; a < sizes[q][i]; ++a) {
                    acts.push_back("a" + std::to_string(a));
                }
                b.set_actions("s" + std::to_string(q), i, acts);
            }
            std::vector<std::size_t> joint(k, 0);
            while (true) {
                std::vector<std::string> names;
                for (std::size_t i = 0; i < k; ++i) {
                    names.push_back("a" + std::to_string(joint[i]));
                }
                b.add_transition("s" + std::to_string(q), names, "s" + std::to_string(pick(0, n - 1)));
                std::size_t i = k;
                while (i-- > 0) {
                    if (++joint[i] < sizes[q][i]) {
                        break;
                    }
                    joint[i] = 0;
                }
                if (i == static_cast<std::size_t>(-1)) {
                    break;
                }
            }
        }
        for (std::size_t i = 0; i < k; ++i) {
            if (o.uniform_costs) {
                b.set_cost_model(i, sls::CostDistribution::uniform(0, 10.0 + 10.0 * static_cast<double>(pick(0, 3))));
            } else {
                b.set_cost_model(i, sls::CostDistribution::identity_virtual(1.0));
            }
        }
        sls::Ccgs s = b.build();
        const auto laws = sls::count_social_laws(s);
        if (laws && *laws <= o.max_laws) {
            return s;
        }
    }
}

inline sls::Coalition random_coalition(std::mt19937_64& rng, std::size_t k) {
    sls::Coalition c;
    for (std::size_t i = 1; i <= k; ++i) {
        if (rng() & 1U) {
            c.push_back(i);
        }
    }
    return c;
}

inline sls::Formula random_formula(std::mt19937_64& rng, std::size_t k, std::size_t props, int depth) {
    using sls::Formula;
    const auto roll = std::uniform_int_distribution<int>(0, depth <= 0 ? 1 : 9)(rng);
    auto leaf = [&] {
        const auto p = std::uniform_int_distribution<std::size_t>(0, props)(rng);
        return p == props ? Formula::truth() : Formula::prop("p" + std::to_string(p));
    };
    switch (roll) {
        case 0:
        case 1: return leaf();
        case 2: return Formula::neg(random_formula(rng, k, props, depth - 1));
        case 3: return Formula::disj(random_formula(rng, k, props, depth - 1), random_formula(rng, k, props, depth - 1));
        case 4: return Formula::conj(random_formula(rng, k, props, depth - 1), random_formula(rng, k, props, depth - 1));
        case 5: return Formula::next(random_coalition(rng, k), random_formula(rng, k, props, depth - 1));
        case 6: return Formula::always(random_coalition(rng, k), random_formula(rng, k, props, depth - 1));
        case 7: return Formula::eventually(random_coalition(rng, k), random_formula(rng, k, props, depth - 1));
        case 8:
            return Formula::until(random_coalition(rng, k), random_formula(rng, k, props, depth - 1),
                                  random_formula(rng, k, props, depth - 1));
        default: return Formula::imp(random_formula(rng, k, props, depth - 1), random_formula(rng, k, props, depth - 1));
    }
}

inline sls::FeatureSet random_features(std::mt19937_64& rng, std::size_t k, std::size_t props, std::size_t count) {
    sls::FeatureSet f;
    for (std::size_t j = 0; j < count; ++j) {
        f.add(random_formula(rng, k, props, 3), static_cast<double>(std::uniform_int_distribution<int>(0, 20)(rng)));
    }
    return f;
}

// --------------------------------------------------------- reference ATL

// Satisfaction by explicit strategy enumeration: for every A-move, scan all
// joint actions that agree with it on A.
class NaiveChecker {
public:
    explicit NaiveChecker(const sls::Ccgs& s) : s_(s) {}

    std::vector<bool> sat(const sls::Formula& f) const {
        using K = sls::Formula::Kind;
        const std::size_t n = s_.state_count();
        switch (f.kind()) {
            case K::prop: {
                std::vector<bool> out(n, false);
                const auto p = s_.find_proposition(f.name());
                for (std::size_t q = 0; q < n && p; ++q) {
                    out[q] = s_.has_label(q, *p);
                }
                return out;
            }
            case K::truth: return std::vector<bool>(n, true);
            case K::neg: {
                auto v = sat(f.child(0));
                v.flip();
                return v;
            }
            case K::disj: {
                auto a = sat(f.child(0));
                const auto b = sat(f.child(1));
                for (std::size_t q = 0; q < n; ++q) {
                    a[q] = a[q] || b[q];
                }
                return a;
            }
            case K::conj: {
                auto a = sat(f.child(0));
                const auto b = sat(f.child(1));
                for (std::size_t q = 0; q < n; ++q) {
                    a[q] = a[q] && b[q];
                }
                return a;
            }
            case K::imp: return sat(sls::Formula::disj(sls::Formula::neg(f.child(0)), f.child(1)));
            case K::eventually: return sat(sls::Formula::until(f.coalition(), sls::Formula::truth(), f.child(0)));
            case K::next: return enforce(f.coalition(), sat(f.child(0)));
            case K::always: {
                const auto body = sat(f.child(0));
                std::vector<bool> x(n, true);
                for (std::size_t it = 0; it <= n; ++it) {
                    const auto p = enforce(f.coalition(), x);
                    for (std::size_t q = 0; q < n; ++q) {
                        x[q] = body[q] && p[q];
                    }
                }
                return x;
            }
            case K::until: {
                const auto hold = sat(f.child(0));
                const auto goal = sat(f.child(1));
                std::vector<bool> x(n, false);
                for (std::size_t it = 0; it <= n; ++it) {
                    const auto p = enforce(f.coalition(), x);
                    for (std::size_t q = 0; q < n; ++q) {
                        x[q] = goal[q] || (hold[q] && p[q]);
                    }
                }
                return x;
            }
        }
        return {};
    }

    // q such that some assignment of actions to A forces a successor in x.
    std::vector<bool> enforce(const sls::Coalition& a, const std::vector<bool>& x) const {
        std::vector<bool> out(s_.state_count(), false);
        for (std::size_t q = 0; q < s_.state_count(); ++q) {
            std::vector<std::size_t> choice(s_.agent_count(), 0);
            std::function<bool(std::size_t)> try_moves = [&](std::size_t pos) -> bool {
                if (pos == a.size()) {
                    for (std::size_t j = 0; j < s_.joint_count(q); ++j) {
                        bool agrees = true;
                        for (const auto member : a) {
                            agrees = agrees && s_.action_of(q, j, member - 1) == choice[member - 1];
                        }
                        if (agrees && !x[s_.successor(q, j)]) {
                            return false;
                        }
                    }
                    return true;
                }
                const auto agent = a[pos] - 1;
                for (std::size_t m = 0; m < s_.actions(agent, q).size(); ++m) {
                    choice[agent] = m;
                    if (try_moves(pos + 1)) {
                        return true;
                    }
                }
                return false;
            };
            out[q] = try_moves(0);
        }
        return out;
    }

private:
    const sls::Ccgs& s_;
};

inline double naive_value(const sls::Ccgs& s, const sls::FeatureSet& f) {
    NaiveChecker nc(s);
    double sum = 0;
    for (const auto& feature : f.features()) {
        if (nc.sat(feature.formula)[s.initial()]) {
            sum += feature.value;
        }
    }
    return sum;
}

// Every valid law, by recursion over (state, agent) slots.
inline void for_each_law(const sls::Ccgs& s, const std::function<void(const sls::SocialLaw&)>& visit) {
    std::vector<std::pair<std::size_t, std::size_t>> slots;
    for (std::size_t q = 0; q < s.state_count(); ++q) {
        for (std::size_t i = 0; i < s.agent_count(); ++i) {
            slots.emplace_back(q, i);
        }
    }
    sls::SocialLaw law;
    std::function<void(std::size_t)> rec = [&](std::size_t pos) {
        if (pos == slots.size()) {
            visit(law);
            return;
        }
        const auto [q, i] = slots[pos];
        const std::uint64_t full = (std::uint64_t{1} << s.actions(i, q).size()) - 1;
        for (std::uint64_t m = 0; m < full; ++m) {
            law.set_mask(i, q, m);
            rec(pos + 1);
        }
        law.set_mask(i, q, 0);
    };
    rec(0);
}

// Brute-force max over all laws of value - sum_i lambda_i * |eta_i|.
inline double brute_force_optimum(const sls::Ccgs& s, const sls::FeatureSet& f, const std::vector<double>& lambdas) {
    double best = -1e300;
    for_each_law(s, [&](const sls::SocialLaw& law) {
        double g = naive_value(sls::apply_law(s, law), f);
        for (std::size_t i = 0; i < s.agent_count(); ++i) {
            g -= lambdas[i] * static_cast<double>(law.size_for(i));
        }
        best = std::max(best, g);
    });
    return best;
}

}  // namespace fixture
