#include <set>

#include "doctest.h"
#include "sls/error.hpp"
#include "sls/model.hpp"
#include "support.hpp"

using namespace sls;

namespace {

nlohmann::json example_doc() { return read_json_file(fixture::data("example1/model_uniform.json")); }

Ccgs one_state(std::vector<std::string> actions) {
    CcgsBuilder b(1);
    b.add_state("q").set_initial("q");
    b.set_actions("q", 0, actions);
    for (const auto& a : actions) {
        b.add_transition("q", {a}, "q");
    }
    return b.build();
}

}  // namespace

TEST_CASE("example model loads with document order") {
    const Ccgs s = fixture::example_uniform();
    CHECK(s.agent_count() == 2);
    CHECK(s.state_count() == 5);
    CHECK(s.state_name(s.initial()) == "q0");
    CHECK(s.actions(0, 0) == std::vector<std::string>{"r", "a"});
    CHECK(s.transition_count() == 17);
    CHECK(s.cost_model(0)->kind() == "uniform");
    const auto j = s.find_action(0, 0, "a");
    const auto k = s.find_action(1, 0, "r");
    const std::size_t joint[] = {*j, *k};
    CHECK(s.state_name(s.successor(0, s.joint_index(0, joint))) == "q2");
}

TEST_CASE("load_model rejects broken documents") {
    SUBCASE("non-total transitions") {
        auto doc = example_doc();
        auto& t = doc["transitions"];
        for (auto it = t.begin(); it != t.end(); ++it) {
            if ((*it)["from"] == "q4") {
                t.erase(it);
                break;
            }
        }
        CHECK_THROWS_WITH_AS(load_model(doc), doctest::Contains("non-total transition function"), InputError);
    }
    SUBCASE("empty action set") {
        auto doc = example_doc();
        doc["actions"]["q4"]["1"] = nlohmann::json::array();
        CHECK_THROWS_WITH_AS(load_model(doc), doctest::Contains("empty action set"), InputError);
    }
    SUBCASE("unknown proposition in labels") {
        auto doc = example_doc();
        doc["labels"]["q0"].push_back("zz");
        CHECK_THROWS_AS(load_model(doc), InputError);
    }
    SUBCASE("unknown action in a transition") {
        auto doc = example_doc();
        doc["transitions"][0]["joint"][0] = "fly";
        CHECK_THROWS_AS(load_model(doc), InputError);
    }
    SUBCASE("unknown initial state") {
        auto doc = example_doc();
        doc["initial"] = "q9";
        CHECK_THROWS_AS(load_model(doc), InputError);
    }
    SUBCASE("malformed distribution") {
        auto doc = example_doc();
        doc["costs"]["1"] = {{"dist", "uniform"}, {"hi", "thirty"}};
        CHECK_THROWS_WITH_AS(load_model(doc), doctest::Contains("malformed distribution"), InputError);
    }
    SUBCASE("duplicate transition") {
        auto doc = example_doc();
        doc["transitions"].push_back(doc["transitions"][0]);
        CHECK_THROWS_AS(load_model(doc), InputError);
    }
}

TEST_CASE("apply_law removes forbidden actions") {
    const Ccgs s = fixture::example_uniform();
    const SocialLaw eta3 = fixture::example_law(s, 3);
    const Ccgs r = apply_law(s, eta3);
    const auto q2 = *s.find_state("q2");
    const auto q3 = *s.find_state("q3");
    CHECK(r.actions(1, q2) == std::vector<std::string>{"r"});
    CHECK(r.actions(0, q3) == std::vector<std::string>{"r"});
    CHECK(r.actions(0, q2) == s.actions(0, q2));
    CHECK(r.joint_count(q2) == 2);
    // surviving joints keep their successors
    for (std::size_t j = 0; j < r.joint_count(q2); ++j) {
        const std::size_t per[] = {*s.find_action(0, q2, r.actions(0, q2)[r.action_of(q2, j, 0)]),
                                   *s.find_action(1, q2, r.actions(1, q2)[r.action_of(q2, j, 1)])};
        CHECK(r.successor(q2, j) == s.successor(q2, s.joint_index(q2, per)));
    }
    CHECK(law_size(eta3, 0) == 1);
    CHECK(law_size(eta3, 1) == 1);
    CHECK(law_size(fixture::example_law(s, 7), 1) == 2);
    CHECK(law_size(SocialLaw{}, 0) == 0);
}

TEST_CASE("apply_law identity and composition") {
    const Ccgs s = fixture::example_uniform();
    CHECK(apply_law(s, SocialLaw{}) == s);

    SocialLaw both;
    both.forbid(0, 0, 0);
    both.forbid(0, 0, 1);
    CHECK_THROWS_WITH_AS(apply_law(s, both), doctest::Contains("agent 1"), InputError);

    // (S + eta) + eta' == S + (eta u eta'), with eta' expressed on the restricted structure.
    std::mt19937_64 rng(11);
    for (int round = 0; round < 30; ++round) {
        const Ccgs m = fixture::random_model(rng);
        std::vector<SocialLaw> laws;
        fixture::for_each_law(m, [&](const SocialLaw& l) { laws.push_back(l); });
        const auto& a = laws[rng() % laws.size()];
        const auto& b = laws[rng() % laws.size()];
        const SocialLaw u = a.united(b);
        bool valid = true;
        try {
            validate_law(m, u);
        } catch (const InputError&) {
            valid = false;
        }
        if (!valid) {
            continue;
        }
        const Ccgs first = apply_law(m, a);
        SocialLaw rest;
        for (std::size_t q = 0; q < m.state_count(); ++q) {
            for (std::size_t i = 0; i < m.agent_count(); ++i) {
                for (std::size_t x = 0; x < m.actions(i, q).size(); ++x) {
                    if (b.restricts(i, q, x) && !a.restricts(i, q, x)) {
                        rest.forbid(i, q, *first.find_action(i, q, m.actions(i, q)[x]));
                    }
                }
            }
        }
        CHECK(apply_law(first, rest) == apply_law(m, u));
    }
}

TEST_CASE("enumerate_social_laws counts and uniqueness") {
    const Ccgs s = fixture::example_uniform();
    std::set<std::vector<std::uint8_t>> seen;
    std::size_t count = 0;
    for (const auto& law : enumerate_social_laws(s)) {
        validate_law(s, law);
        seen.insert(law_bits(s, law));
        ++count;
    }
    CHECK(count == 6561);
    CHECK(seen.size() == 6561);
    CHECK(*count_social_laws(s) == 6561);

    std::size_t n1 = 0;
    const Ccgs s1 = one_state({"a"});
    for (const auto& law : enumerate_social_laws(s1)) {
        CHECK(law.empty());
        ++n1;
    }
    CHECK(n1 == 1);

    std::vector<std::vector<std::uint8_t>> two;
    const Ccgs s2 = one_state({"a", "b"});
    for (const auto& law : enumerate_social_laws(s2)) {
        two.push_back(law_bits(s2, law));
    }
    CHECK(two == std::vector<std::vector<std::uint8_t>>{{0, 0}, {1, 0}, {0, 1}});
}

TEST_CASE("enumeration agrees with the recursive reference on random models") {
    std::mt19937_64 rng(5);
    for (int round = 0; round < 20; ++round) {
        const Ccgs m = fixture::random_model(rng);
        std::set<std::vector<std::uint8_t>> a;
        std::set<std::vector<std::uint8_t>> b;
        for (const auto& law : enumerate_social_laws(m)) {
            a.insert(law_bits(m, law));
        }
        fixture::for_each_law(m, [&](const SocialLaw& l) { b.insert(law_bits(m, l)); });
        CHECK(a == b);
        CHECK(a.size() == *count_social_laws(m));
    }
}

TEST_CASE("model and law documents round-trip") {
    const Ccgs s = fixture::example_uniform();
    CHECK(load_model(save_model(s)) == s);
    std::mt19937_64 rng(3);
    for (int round = 0; round < 10; ++round) {
        const Ccgs m = fixture::random_model(rng, {.uniform_costs = true});
        CHECK(load_model(save_model(m)) == m);
    }
    for (int i = 0; i < 8; ++i) {
        const auto law = fixture::example_law(s, i);
        CHECK(load_law(s, save_law(s, law)) == law);
    }
    CHECK_THROWS_AS(load_law(s, nlohmann::json{{"restrict", {{{"agent", 3}, {"state", "q0"}, {"action", "a"}}}}}),
                    InputError);
    CHECK_THROWS_AS(load_law(s, nlohmann::json{{"restrict", {{{"agent", 1}, {"state", "q4"}, {"action", "r"}}}}}),
                    InputError);
}
