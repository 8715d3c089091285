#pragma once

// Cost-aware concurrent game structures and social laws.
//
// Agents are addressed by 0-based index in the library API; files and the
// command line use the 1-based numbering of the formula syntax.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iterator>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "sls/distributions.hpp"

namespace sls {

class StateSet {
public:
    StateSet() = default;
    explicit StateSet(std::size_t universe, bool full = false) : bits_(universe, full ? 1 : 0) {}

    std::size_t universe() const { return bits_.size(); }
    bool contains(std::size_t q) const { return bits_[q] != 0; }
    void insert(std::size_t q) { bits_[q] = 1; }
    void erase(std::size_t q) { bits_[q] = 0; }
    std::size_t count() const;
    std::vector<std::size_t> members() const;

    StateSet complement() const;
    StateSet& operator|=(const StateSet& other);
    StateSet& operator&=(const StateSet& other);

    friend bool operator==(const StateSet&, const StateSet&) = default;

private:
    std::vector<std::uint8_t> bits_;
};

class CcgsBuilder;
class SocialLaw;

class Ccgs {
public:
    std::size_t agent_count() const { return agents_; }
    std::size_t state_count() const { return states_.size(); }
    const std::vector<std::string>& states() const { return states_; }
    const std::string& state_name(std::size_t q) const { return states_[q]; }
    std::optional<std::size_t> find_state(std::string_view name) const;
    std::size_t initial() const { return initial_; }

    const std::vector<std::string>& propositions() const { return propositions_; }
    std::optional<std::size_t> find_proposition(std::string_view name) const;
    const std::vector<std::size_t>& labels(std::size_t q) const { return labels_[q]; }
    bool has_label(std::size_t q, std::size_t proposition) const;

    const std::vector<std::string>& actions(std::size_t agent, std::size_t q) const { return actions_[q][agent]; }
    std::optional<std::size_t> find_action(std::size_t agent, std::size_t q, std::string_view name) const;

    // Joint actions at q are numbered in mixed radix, agent 0 most significant.
    std::size_t joint_count(std::size_t q) const { return successors_[q].size(); }
    std::size_t successor(std::size_t q, std::size_t joint) const { return successors_[q][joint]; }
    std::size_t action_of(std::size_t q, std::size_t joint, std::size_t agent) const;
    std::size_t joint_index(std::size_t q, std::span<const std::size_t> per_agent) const;
    // Number of transitions t = sum over states of |D(q)|.
    std::size_t transition_count() const;

    const std::optional<CostDistribution>& cost_model(std::size_t agent) const { return costs_[agent]; }
    std::vector<CostDistribution> cost_models() const;  // throws if any agent lacks one
    void set_cost_model(std::size_t agent, CostDistribution d) { costs_[agent] = std::move(d); }

    friend bool operator==(const Ccgs&, const Ccgs&);

private:
    friend class CcgsBuilder;
    friend class SocialLaw;
    friend Ccgs apply_law(const Ccgs&, const SocialLaw&);

    void index_names();

    std::size_t agents_ = 0;
    std::vector<std::string> states_;
    std::unordered_map<std::string, std::size_t> state_index_;
    std::size_t initial_ = 0;
    std::vector<std::string> propositions_;
    std::unordered_map<std::string, std::size_t> proposition_index_;
    std::vector<std::vector<std::size_t>> labels_;                 // [q] sorted proposition ids
    std::vector<std::vector<std::vector<std::string>>> actions_;   // [q][agent]
    std::vector<std::vector<std::size_t>> strides_;                // [q][agent]
    std::vector<std::vector<std::size_t>> successors_;             // [q][joint]
    std::vector<std::optional<CostDistribution>> costs_;
};

/// Incremental construction with full validation in build().
class CcgsBuilder {
public:
    explicit CcgsBuilder(std::size_t agents);

    CcgsBuilder& add_state(std::string name);
    CcgsBuilder& set_initial(std::string name);
    CcgsBuilder& add_proposition(std::string name);
    CcgsBuilder& add_label(const std::string& state, const std::string& proposition);
    CcgsBuilder& set_actions(const std::string& state, std::size_t agent, std::vector<std::string> actions);
    CcgsBuilder& add_transition(const std::string& from, const std::vector<std::string>& joint, const std::string& to);
    CcgsBuilder& set_cost_model(std::size_t agent, CostDistribution d);

    Ccgs build() const;

private:
    struct PendingTransition {
        std::string from;
        std::vector<std::string> joint;
        std::string to;
    };

    std::size_t agents_;
    std::optional<std::string> initial_;
    std::vector<std::string> states_;
    std::vector<std::string> propositions_;
    std::vector<std::pair<std::string, std::string>> labels_;
    std::unordered_map<std::string, std::vector<std::vector<std::string>>> actions_;
    std::vector<PendingTransition> transitions_;
    std::vector<std::optional<CostDistribution>> costs_;
};

/// Forbidden actions per (agent, state), stored as bitmasks over the
/// action lists of the structure the law was built for. Bit j stands for
/// the j-th action of epsilon_i(q). Missing entries are empty sets.
class SocialLaw {
public:
    SocialLaw() = default;

    bool restricts(std::size_t agent, std::size_t q, std::size_t action) const;
    std::uint64_t mask(std::size_t agent, std::size_t q) const;
    void forbid(std::size_t agent, std::size_t q, std::size_t action);
    void set_mask(std::size_t agent, std::size_t q, std::uint64_t mask);

    bool empty() const;
    // Total number of forbidden actions of one agent.
    std::size_t size_for(std::size_t agent) const;
    std::size_t total_size() const;
    // Upper bounds of the stored (agent, state) entries; may exceed the model.
    std::size_t agent_extent() const { return masks_.size(); }
    std::size_t state_extent(std::size_t agent) const { return agent < masks_.size() ? masks_[agent].size() : 0; }

    SocialLaw united(const SocialLaw& other) const;

    friend bool operator==(const SocialLaw& a, const SocialLaw& b);

private:
    // masks_[agent][q]
    std::vector<std::vector<std::uint64_t>> masks_;
};

/// Throws InputError naming the first (agent, state) whose action set the
/// law would empty, or any out-of-range action.
void validate_law(const Ccgs& s, const SocialLaw& law);

Ccgs apply_law(const Ccgs& s, const SocialLaw& law);

inline std::size_t law_size(const SocialLaw& law, std::size_t agent) { return law.size_for(agent); }

/// Forbidden-action vector in the canonical (state, agent, action) order.
std::vector<std::uint8_t> law_bits(const Ccgs& s, const SocialLaw& law);

/// Number of valid social laws: the product of 2^|eps_i(q)| - 1.
/// Returns nullopt when the count does not fit in 64 bits.
std::optional<std::uint64_t> count_social_laws(const Ccgs& s);

/// All valid laws, each once. Slots are visited in (state, agent) order with
/// the last slot advancing fastest; inside a slot the subsets follow the
/// binary counter 0, {a0}, {a1}, {a0,a1}, ... excluding the full set.
class SocialLawStream {
public:
    class iterator {
    public:
        using value_type = SocialLaw;
        using difference_type = std::ptrdiff_t;

        iterator() = default;
        const SocialLaw& operator*() const { return current_; }
        const SocialLaw* operator->() const { return &current_; }
        iterator& operator++();
        void operator++(int) { ++*this; }
        friend bool operator==(const iterator& it, std::default_sentinel_t) { return it.done_; }

    private:
        friend class SocialLawStream;
        explicit iterator(const Ccgs* s);

        const Ccgs* s_ = nullptr;
        std::vector<std::uint64_t> counters_;  // per slot
        std::vector<std::uint64_t> limits_;
        SocialLaw current_;
        bool done_ = true;
    };

    explicit SocialLawStream(const Ccgs& s) : s_(&s) {}
    iterator begin() const { return iterator(s_); }
    std::default_sentinel_t end() const { return {}; }

private:
    const Ccgs* s_;
};

inline SocialLawStream enumerate_social_laws(const Ccgs& s) { return SocialLawStream(s); }

// ------------------------------------------------------------------- bids

// One reported unit cost per agent, in agent order.
using BidProfile = std::vector<double>;

// Throws InputError unless there is one finite, nonnegative bid per agent.
void validate_bids(const Ccgs& s, const BidProfile& bids);
// lambda_i(x_i) for every agent; needs a cost model for each agent.
std::vector<double> virtual_costs(const Ccgs& s, const BidProfile& bids);
// "10,15" -> {10, 15}
BidProfile parse_bid_list(std::string_view text);

// ---------------------------------------------------------------- file I/O

Ccgs load_model(const nlohmann::json& document);
Ccgs load_model_file(const std::filesystem::path& path);
nlohmann::json save_model(const Ccgs& s);

SocialLaw load_law(const Ccgs& s, const nlohmann::json& document);
SocialLaw load_law_file(const Ccgs& s, const std::filesystem::path& path);
nlohmann::json save_law(const Ccgs& s, const SocialLaw& law);

nlohmann::json read_json_file(const std::filesystem::path& path);

}  // namespace sls
