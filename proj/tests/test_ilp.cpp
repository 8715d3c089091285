#include <algorithm>
#include <set>

#include "doctest.h"
#include "sls/error.hpp"
#include "sls/ilp.hpp"
#include "support.hpp"

using namespace sls;

namespace {

struct BruteBest {
    double g = -1e300;
    std::size_t count = 0;
    std::vector<std::uint8_t> bits;
};

// Optimal law by enumeration with the naive checker, ties resolved by fewer
// restrictions and then the smaller bit vector.
BruteBest brute_best(const Ccgs& s, const FeatureSet& f, const std::vector<double>& lambdas,
                     std::optional<std::pair<std::size_t, std::size_t>> fixed = std::nullopt) {
    BruteBest best;
    bool any = false;
    fixture::for_each_law(s, [&](const SocialLaw& law) {
        if (fixed && law.size_for(fixed->first) != fixed->second) {
            return;
        }
        double g = fixture::naive_value(apply_law(s, law), f);
        for (std::size_t i = 0; i < s.agent_count(); ++i) {
            g -= lambdas[i] * static_cast<double>(law.size_for(i));
        }
        const auto bits = law_bits(s, law);
        const std::size_t count = law.total_size();
        const double tol = 1e-9 * (1 + std::max(std::abs(g), std::abs(best.g)));
        bool better = !any || g > best.g + tol;
        if (any && std::abs(g - best.g) <= tol) {
            better = count < best.count || (count == best.count && bits < best.bits);
        }
        if (better) {
            best = {g, count, bits};
            any = true;
        }
    });
    return best;
}

std::vector<std::uint8_t> y_bits(const IlpModel& m, const Assignment& a) {
    std::vector<std::uint8_t> out;
    for (const auto v : m.layout().y_vars) {
        out.push_back(a.values[v]);
    }
    return out;
}

bool has_row(const IlpModel& m, int family, std::vector<std::pair<std::string, long long>> terms, Sense sense,
             long long rhs) {
    std::sort(terms.begin(), terms.end());
    for (const auto& c : m.constraints()) {
        if (c.family != family || c.sense != sense || c.rhs != rhs) {
            continue;
        }
        std::vector<std::pair<std::string, long long>> got;
        for (const auto& t : c.terms) {
            got.emplace_back(m.variables()[t.var].name, t.coef);
        }
        std::sort(got.begin(), got.end());
        if (got == terms) {
            return true;
        }
    }
    return false;
}

// q --a--> good (p), q --b--> bad; both sinks.
Ccgs fork_model() {
    CcgsBuilder b(1);
    b.add_state("q").add_state("good").add_state("bad").set_initial("q").add_proposition("p").add_label("good", "p");
    b.set_actions("q", 0, {"a", "b"}).add_transition("q", {"a"}, "good").add_transition("q", {"b"}, "bad");
    for (const auto* sink : {"good", "bad"}) {
        b.set_actions(sink, 0, {"s"}).add_transition(sink, {"s"}, sink);
    }
    b.set_cost_model(0, CostDistribution::identity_virtual(1));
    return b.build();
}

}  // namespace

TEST_CASE("variable naming and the row families on a small structure") {
    const Ccgs s = fork_model();
    FeatureSet f;
    f.add(parse_formula("<<1>> X p"), 10);
    f.add(parse_formula("<<>> X p"), 5);
    f.add(parse_formula("<<>> G !p"), 1);
    const double lambdas[] = {3};
    const IlpModel m = build_dom_sl_virtual(s, f, lambdas);
    const auto& L = m.layout();
    REQUIRE(L.closure.size() == 5);  // p, !p, <<1>> X p, <<>> X p, <<>> G !p
    CHECK(L.coalitions == std::vector<std::uint32_t>{0, 1});

    CHECK(m.find("x__q__0"));
    CHECK(m.find("y__q__1__a"));
    CHECK(m.find("y__q__1__b"));
    CHECK(m.find("yA__q__1__a"));
    CHECK(m.find("yA__q____"));
    CHECK(m.find("s__q__0__1__b__"));
    CHECK(m.find("s__q__0______a"));  // empty coalition, empty move
    CHECK(m.find("e__good__3__1__s"));
    CHECK_FALSE(m.find("r__q__0"));

    CHECK(has_row(m, 27, {{"y__q__1__a", 1}, {"y__q__1__b", 1}}, Sense::le, 1));
    CHECK(has_row(m, 27, {{"y__good__1__s", 1}}, Sense::le, 0));
    CHECK(has_row(m, 29, {{"yA__q__1__a", 1}, {"y__q__1__a", -1}}, Sense::ge, 0));
    CHECK(has_row(m, 30, {{"yA__q__1__a", 1}, {"y__q__1__a", -1}}, Sense::le, 0));
    CHECK(has_row(m, 32, {{"s__q__0__1__a__", 1}, {"yA__q____", -1}}, Sense::ge, 0));
    CHECK(has_row(m, 33, {{"s__q__0__1__a__", 1}, {"x__good__0", -1}}, Sense::ge, 0));
    CHECK(has_row(m, 34, {{"s__q__0__1__a__", 1}, {"yA__q____", -1}, {"x__good__0", -1}}, Sense::le, 0));
    CHECK(has_row(m, 38, {{"x__good__0", 1}}, Sense::eq, 1));
    CHECK(has_row(m, 39, {{"x__q__0", 1}}, Sense::eq, 0));
    CHECK(has_row(m, 40, {{"x__q__1", 1}, {"x__q__0", 1}}, Sense::eq, 1));
    CHECK(has_row(m, 47, {{"e__q__0__1__a", 1}, {"yA__q__1__a", 1}}, Sense::le, 1));
    CHECK(has_row(m, 48, {{"x__q__2", 1}, {"e__q__0__1__b", -1}}, Sense::ge, 0));
    CHECK(has_row(m, 49, {{"x__q__2", 1}, {"e__q__0__1__a", -1}, {"e__q__0__1__b", -1}}, Sense::le, 0));
    CHECK(has_row(m, 57, {{"x__q__4", 1}, {"x__q__1", -1}}, Sense::le, 0));
    CHECK(has_row(m, 58, {{"x__q__4", 1}, {"e__q__4____", -1}}, Sense::le, 0));
    CHECK(has_row(m, 59, {{"x__q__4", 1}, {"x__q__1", -1}, {"e__q__4____", -1}}, Sense::ge, -1));

    std::map<std::string, double> obj;
    for (const auto& [v, c] : m.objective()) {
        obj[m.variables()[v].name] = c;
    }
    CHECK(obj.size() == 3 + 4);
    CHECK(obj["x__q__2"] == 10);
    CHECK(obj["x__q__3"] == 5);
    CHECK(obj["x__q__4"] == 1);
    CHECK(obj["y__q__1__b"] == -3);

    // forbidding b makes p unavoidable: 10 + 5 - 3 beats 10
    const auto a = solve_exact(m);
    REQUIRE(a);
    CHECK(a->objective == doctest::Approx(12));
    CHECK(a->value(m, "y__q__1__b") == 1);
    CHECK(a->value(m, "y__q__1__a") == 0);
    CHECK(verify_assignment(m, *a, s, f).ok);
    CHECK(m.constraint_count() == m.constraints().size() + m.variables().size());
}

TEST_CASE("until introduces r variables and its families") {
    const Ccgs s = fork_model();
    FeatureSet f;
    f.add(parse_formula("<<1>> F p"), 4);
    const double lambdas[] = {1};
    const IlpModel m = build_dom_sl_virtual(s, f, lambdas);
    CHECK(m.find("r__q__2"));
    // fids: p, true, the until
    CHECK(has_row(m, 51, {{"r__q__2", 1}, {"x__q__1", -1}}, Sense::le, 0));
    CHECK(has_row(m, 54, {{"x__q__2", 1}, {"x__q__0", -1}}, Sense::ge, 0));
    CHECK(has_row(m, 55, {{"x__q__2", 1}, {"r__q__2", -1}}, Sense::ge, 0));
    CHECK(has_row(m, 56, {{"x__q__2", 1}, {"x__q__0", -1}, {"r__q__2", -1}}, Sense::le, 0));
    // agent 1 can already steer to p, no restriction needed
    const auto a = solve_exact(m);
    REQUIRE(a);
    CHECK(a->objective == doctest::Approx(4));
    CHECK(verify_assignment(m, *a, s, f).ok);
}

TEST_CASE("joint-action name collisions are rejected") {
    CcgsBuilder b(2);
    b.add_state("q").set_initial("q").add_proposition("p");
    b.set_actions("q", 0, {"a", "a_b"}).set_actions("q", 1, {"b_c", "c"});
    for (const auto* x : {"a", "a_b"}) {
        for (const auto* y : {"b_c", "c"}) {
            b.add_transition("q", {x, y}, "q");
        }
    }
    const Ccgs s = b.build();
    FeatureSet f;
    f.add(parse_formula("<<>> X p"), 1);
    const double lambdas[] = {0, 0};
    CHECK_THROWS_WITH_AS(build_dom_sl_virtual(s, f, lambdas), doctest::Contains("collision"), InputError);
}

TEST_CASE("builder input errors") {
    const Ccgs s = fixture::example_uniform();
    FeatureSet f;
    f.add(parse_formula("<<3>> X a1"), 1);
    CHECK_THROWS_AS(build_dom_sl(s, f, {10, 15}), InputError);
    CHECK_THROWS_AS(build_dom_sl(s, fixture::example_features(), {10}), InputError);
    CHECK_THROWS_AS(build_dom_sl(s, fixture::example_features(), {10, -1}), InputError);
    FeatureSet g;
    g.add(parse_formula("nope"), 1);
    CHECK_THROWS_AS(build_dom_sl(s, g, {10, 15}), InputError);
}

TEST_CASE("running-example optimum matches enumeration") {
    const Ccgs s = fixture::example_uniform();
    const FeatureSet f = fixture::example_features();
    for (const auto& bids : std::vector<BidProfile>{{10, 15}, {0, 0}, {3, 28}, {30, 30}}) {
        const IlpModel m = build_dom_sl(s, f, bids);
        const auto lambdas = virtual_costs(s, bids);
        SolveStats stats;
        const auto a = solve_exact(m, &stats);
        REQUIRE(a);
        const auto best = brute_best(s, f, lambdas);
        CAPTURE(bids[0]);
        CAPTURE(bids[1]);
        CHECK(a->objective == doctest::Approx(best.g).epsilon(1e-9));
        CHECK(y_bits(m, *a) == best.bits);
        CHECK(verify_assignment(m, *a, s, f).ok);
        CHECK(stats.leaves <= 6561);
        CHECK(m.constraint_count() <= size_bound(m.layout()));
    }
}

TEST_CASE("random models: optimum, tie-break and consistency") {
    std::mt19937_64 rng(404);
    for (int round = 0; round < 30; ++round) {
        const Ccgs s = fixture::random_model(rng, {.max_laws = 3000});
        const FeatureSet f = fixture::random_features(rng, s.agent_count(), 2, 1 + rng() % 4);
        std::vector<double> lambdas;
        for (std::size_t i = 0; i < s.agent_count(); ++i) {
            lambdas.push_back(static_cast<double>(rng() % 8));
        }
        const IlpModel m = build_dom_sl_virtual(s, f, lambdas);
        const auto a = solve_exact(m);
        REQUIRE(a);
        const auto best = brute_best(s, f, lambdas);
        CAPTURE(round);
        CHECK(a->objective == doctest::Approx(best.g));
        CHECK(y_bits(m, *a) == best.bits);
        const auto check = verify_assignment(m, *a, s, f);
        CHECK_MESSAGE(check.ok, check.problem);
        CHECK(m.constraint_count() <= size_bound(m.layout()));

        const SocialLaw law = decode_law(m, *a, s);
        double g = valuate(apply_law(s, law), f);
        for (std::size_t i = 0; i < s.agent_count(); ++i) {
            g -= lambdas[i] * static_cast<double>(law.size_for(i));
        }
        CHECK(g == doctest::Approx(a->objective));
    }
}

TEST_CASE("every derived assignment satisfies the rows") {
    std::mt19937_64 rng(8);
    for (int round = 0; round < 15; ++round) {
        const Ccgs s = fixture::random_model(rng, {.max_agents = 3, .max_laws = 500});
        const FeatureSet f = fixture::random_features(rng, s.agent_count(), 2, 3);
        std::vector<double> lambdas(s.agent_count(), 1.0);
        const IlpModel m = build_dom_sl_virtual(s, f, lambdas);
        fixture::for_each_law(s, [&](const SocialLaw& law) {
            const Assignment a = derive_assignment(m, law_bits(s, law));
            const auto bad = first_violation(m, a);
            CHECK_FALSE(bad.has_value());
        });
    }
}

TEST_CASE("verify_assignment catches tampering") {
    const Ccgs s = fixture::example_uniform();
    const FeatureSet f = fixture::example_features();
    const IlpModel m = build_dom_sl(s, f, {10, 15});
    const auto a = solve_exact(m);
    REQUIRE(a);
    REQUIRE(verify_assignment(m, *a, s, f).ok);
    std::mt19937_64 rng(1);
    int caught = 0;
    for (int i = 0; i < 200; ++i) {
        Assignment b = *a;
        const auto v = rng() % b.values.size();
        b.values[v] ^= 1U;
        caught += verify_assignment(m, b, s, f).ok ? 0 : 1;
    }
    CHECK(caught == 200);
}

TEST_CASE("fixed restriction counts") {
    const Ccgs s = fixture::example_uniform();
    const FeatureSet f = fixture::example_features();
    const BidProfile bids{10, 15};
    const auto lambdas = virtual_costs(s, bids);
    for (std::size_t agent = 0; agent < 2; ++agent) {
        std::size_t slots = 0;  // states where the agent has a choice
        for (std::size_t q = 0; q < s.state_count(); ++q) {
            slots += s.actions(agent, q).size() > 1 ? 1 : 0;
        }
        for (std::size_t n = 0; n <= slots; ++n) {
            const IlpModel m = build_dom_in_sl(s, f, bids, agent, n);
            const auto a = solve_exact(m);
            REQUIRE(a);
            const auto best = brute_best(s, f, lambdas, std::make_pair(agent, n));
            CHECK(a->objective == doctest::Approx(best.g));
            CHECK(decode_law(m, *a, s).size_for(agent) == n);
            CHECK(verify_assignment(m, *a, s, f).ok);
        }
        CHECK_FALSE(solve_exact(build_dom_in_sl(s, f, bids, agent, slots + 1)).has_value());
    }
    IlpModel m = build_dom_sl(s, f, bids);
    CHECK_THROWS_AS(add_fixed_count(m, 2, 0), InputError);
}

TEST_CASE("LP text is deterministic") {
    const Ccgs s = fixture::example_uniform();
    const FeatureSet f = fixture::example_features();
    const auto one = emit_lp_string(build_dom_sl(s, f, {10, 15}));
    const auto two = emit_lp_string(build_dom_sl(s, f, {10, 15}));
    CHECK(one == two);
    CHECK(one.find("Maximize") != std::string::npos);
    CHECK(one.find("Binary") != std::string::npos);
    CHECK(one.substr(one.size() - 4) == "End\n");
    const auto tagged = emit_lp_string(build_dom_sl(s, f, {10, 15}), true);
    CHECK(tagged.find("\\ family (27)") != std::string::npos);
    CHECK(tagged.find("\\ family (59)") != std::string::npos);
    CHECK(one != emit_lp_string(build_dom_sl(s, f, {10, 16})));

    FeatureSet empty;
    const double zero[] = {0, 0};
    const auto bare = emit_lp_string(build_dom_sl_virtual(s, empty, zero));
    CHECK(bare.find("obj: 0 ") != std::string::npos);
}

TEST_CASE("weighted MAX-SAT reduction") {
    std::mt19937_64 rng(31);
    for (int round = 0; round < 25; ++round) {
        MaxWSatInstance inst;
        const std::size_t n = 1 + rng() % 5;
        for (std::size_t j = 0; j < n; ++j) {
            inst.vars.push_back("v" + std::to_string(j + 1));
        }
        const std::size_t clauses = 1 + rng() % 5;
        for (std::size_t c = 0; c < clauses; ++c) {
            // random clause of up to three literals
            Formula clause = Formula::prop(inst.vars[rng() % n]);
            if (rng() & 1U) {
                clause = Formula::neg(clause);
            }
            for (std::size_t lit = rng() % 3; lit > 0; --lit) {
                Formula l = Formula::prop(inst.vars[rng() % n]);
                clause = Formula::disj(clause, (rng() & 1U) ? Formula::neg(l) : l);
            }
            inst.clauses.push_back({clause, static_cast<double>(1 + rng() % 9)});
        }
        const auto [s, f] = gen_maxwsat_instance(inst);
        const IlpModel m = build_dom_sl(s, f, {0});
        const auto a = solve_exact(m);
        REQUIRE(a);
        CHECK(a->objective == doctest::Approx(maxwsat_optimum(inst)));
        CHECK(verify_assignment(m, *a, s, f).ok);
        const auto again = load_maxwsat(save_maxwsat(inst));
        CHECK(maxwsat_optimum(again) == maxwsat_optimum(inst));
    }
}

TEST_CASE("MAX-SAT documents are validated") {
    CHECK_THROWS_AS(load_maxwsat(nlohmann::json{{"vars", {"x"}}, {"clauses", {{{"formula", "y"}, {"weight", 1}}}}}),
                    InputError);
    CHECK_THROWS_AS(
        load_maxwsat(nlohmann::json{{"vars", {"x"}}, {"clauses", {{{"formula", "<<1>> X x"}, {"weight", 1}}}}}),
        InputError);
    CHECK_THROWS_AS(load_maxwsat(nlohmann::json{{"vars", {"x"}}, {"clauses", {{{"formula", "x"}, {"weight", -1}}}}}),
                    InputError);
    std::vector<std::string> many;
    for (int j = 0; j < 21; ++j) {
        many.push_back("v" + std::to_string(j));
    }
    CHECK_THROWS_WITH_AS(load_maxwsat(nlohmann::json{{"vars", many}, {"clauses", nlohmann::json::array()}}),
                         doctest::Contains("at most 20"), InputError);
}

TEST_CASE("zero restrictions for every agent leaves the base valuation") {
    const Ccgs s = fixture::example_uniform();
    const FeatureSet f = fixture::example_features();
    IlpModel m = build_dom_sl(s, f, {10, 15});
    add_fixed_count(m, 0, 0);
    add_fixed_count(m, 1, 0);
    const auto a = solve_exact(m);
    REQUIRE(a);
    CHECK(a->objective == 32);
    CHECK(decode_law(m, *a, s).empty());
}

TEST_CASE("a row-feasible assignment with a non-least until fixpoint is rejected") {
    CcgsBuilder b(1);
    b.add_state("q").set_initial("q").add_proposition("p").set_actions("q", 0, {"a"}).add_transition("q", {"a"}, "q");
    const Ccgs s = b.build();
    FeatureSet f;
    f.add(parse_formula("<<1>> F p"), 1);
    const double lambdas[] = {0};
    const IlpModel m = build_dom_sl_virtual(s, f, lambdas);
    Assignment a = derive_assignment(m, {0});
    CHECK(a.value(m, "x__q__2") == 0);
    CHECK(verify_assignment(m, a, s, f).ok);
    // claim the until holds by supporting it with itself
    for (const auto* name : {"x__q__2", "r__q__2", "s__q__2__1__a__", "z__q__2__1__a", "e__q__2__1__a"}) {
        a.values[*m.find(name)] = 1;
    }
    CHECK(is_satisfied_by(m, a));
    CHECK_FALSE(verify_assignment(m, a, s, f).ok);
}
