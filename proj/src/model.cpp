#include "sls/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "sls/error.hpp"

namespace sls {

namespace {

constexpr std::size_t max_actions_per_slot = 63;

bool is_identifier(std::string_view name) {
    if (name.empty()) {
        return false;
    }
    return std::all_of(name.begin(), name.end(), [](char c) {
        return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
    });
}

void require_identifier(std::string_view what, std::string_view name) {
    if (!is_identifier(name)) {
        throw InputError(std::string(what) + " \"" + std::string(name) + "\" must match [A-Za-z0-9_]+");
    }
}

std::string agent_key(std::size_t agent) { return std::to_string(agent + 1); }

}  // namespace

// ---------------------------------------------------------------- StateSet

std::size_t StateSet::count() const { return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), 1)); }

std::vector<std::size_t> StateSet::members() const {
    std::vector<std::size_t> out;
    for (std::size_t q = 0; q < bits_.size(); ++q) {
        if (bits_[q] != 0) {
            out.push_back(q);
        }
    }
    return out;
}

StateSet StateSet::complement() const {
    StateSet out(bits_.size());
    for (std::size_t q = 0; q < bits_.size(); ++q) {
        out.bits_[q] = bits_[q] != 0 ? 0 : 1;
    }
    return out;
}

StateSet& StateSet::operator|=(const StateSet& other) {
    for (std::size_t q = 0; q < bits_.size(); ++q) {
        bits_[q] = static_cast<std::uint8_t>(bits_[q] | other.bits_[q]);
    }
    return *this;
}

StateSet& StateSet::operator&=(const StateSet& other) {
    for (std::size_t q = 0; q < bits_.size(); ++q) {
        bits_[q] = static_cast<std::uint8_t>(bits_[q] & other.bits_[q]);
    }
    return *this;
}

// -------------------------------------------------------------------- Ccgs

std::optional<std::size_t> Ccgs::find_state(std::string_view name) const {
    const auto it = state_index_.find(std::string(name));
    if (it == state_index_.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::optional<std::size_t> Ccgs::find_proposition(std::string_view name) const {
    const auto it = proposition_index_.find(std::string(name));
    if (it == proposition_index_.end()) {
        return std::nullopt;
    }
    return it->second;
}

bool Ccgs::has_label(std::size_t q, std::size_t proposition) const {
    return std::binary_search(labels_[q].begin(), labels_[q].end(), proposition);
}

std::optional<std::size_t> Ccgs::find_action(std::size_t agent, std::size_t q, std::string_view name) const {
    const auto& list = actions_[q][agent];
    const auto it = std::find(list.begin(), list.end(), name);
    if (it == list.end()) {
        return std::nullopt;
    }
    return static_cast<std::size_t>(it - list.begin());
}

std::size_t Ccgs::action_of(std::size_t q, std::size_t joint, std::size_t agent) const {
    return (joint / strides_[q][agent]) % actions_[q][agent].size();
}

std::size_t Ccgs::joint_index(std::size_t q, std::span<const std::size_t> per_agent) const {
    std::size_t index = 0;
    for (std::size_t i = 0; i < agents_; ++i) {
        index += per_agent[i] * strides_[q][i];
    }
    return index;
}

std::size_t Ccgs::transition_count() const {
    std::size_t t = 0;
    for (const auto& row : successors_) {
        t += row.size();
    }
    return t;
}

std::vector<CostDistribution> Ccgs::cost_models() const {
    std::vector<CostDistribution> out;
    out.reserve(agents_);
    for (std::size_t i = 0; i < agents_; ++i) {
        if (!costs_[i]) {
            throw InputError("agent " + agent_key(i) + " has no cost distribution");
        }
        out.push_back(*costs_[i]);
    }
    return out;
}

void Ccgs::index_names() {
    state_index_.clear();
    for (std::size_t q = 0; q < states_.size(); ++q) {
        state_index_.emplace(states_[q], q);
    }
    proposition_index_.clear();
    for (std::size_t p = 0; p < propositions_.size(); ++p) {
        proposition_index_.emplace(propositions_[p], p);
    }
}

bool operator==(const Ccgs& a, const Ccgs& b) {
    return a.agents_ == b.agents_ && a.states_ == b.states_ && a.initial_ == b.initial_ &&
           a.propositions_ == b.propositions_ && a.labels_ == b.labels_ && a.actions_ == b.actions_ &&
           a.successors_ == b.successors_ && a.costs_ == b.costs_;
}

// ------------------------------------------------------------- CcgsBuilder

CcgsBuilder::CcgsBuilder(std::size_t agents) : agents_(agents), costs_(agents) {
    if (agents == 0) {
        throw InputError("a structure needs at least one agent");
    }
}

CcgsBuilder& CcgsBuilder::add_state(std::string name) {
    require_identifier("state", name);
    if (std::find(states_.begin(), states_.end(), name) != states_.end()) {
        throw InputError("duplicate state \"" + name + "\"");
    }
    states_.push_back(std::move(name));
    return *this;
}

CcgsBuilder& CcgsBuilder::set_initial(std::string name) {
    initial_ = std::move(name);
    return *this;
}

CcgsBuilder& CcgsBuilder::add_proposition(std::string name) {
    require_identifier("proposition", name);
    if (std::find(propositions_.begin(), propositions_.end(), name) != propositions_.end()) {
        throw InputError("duplicate proposition \"" + name + "\"");
    }
    propositions_.push_back(std::move(name));
    return *this;
}

CcgsBuilder& CcgsBuilder::add_label(const std::string& state, const std::string& proposition) {
    labels_.emplace_back(state, proposition);
    return *this;
}

CcgsBuilder& CcgsBuilder::set_actions(const std::string& state, std::size_t agent, std::vector<std::string> actions) {
    if (agent >= agents_) {
        throw InputError("agent " + agent_key(agent) + " out of range");
    }
    auto& row = actions_[state];
    row.resize(agents_);
    row[agent] = std::move(actions);
    return *this;
}

CcgsBuilder& CcgsBuilder::add_transition(const std::string& from, const std::vector<std::string>& joint,
                                         const std::string& to) {
    transitions_.push_back({from, joint, to});
    return *this;
}

CcgsBuilder& CcgsBuilder::set_cost_model(std::size_t agent, CostDistribution d) {
    if (agent >= agents_) {
        throw InputError("agent " + agent_key(agent) + " out of range");
    }
    costs_[agent] = std::move(d);
    return *this;
}

Ccgs CcgsBuilder::build() const {
    Ccgs s;
    s.agents_ = agents_;
    s.states_ = states_;
    s.propositions_ = propositions_;
    s.costs_ = costs_;
    s.index_names();
    if (s.states_.empty()) {
        throw InputError("a structure needs at least one state");
    }
    if (!initial_) {
        throw InputError("missing initial state");
    }
    const auto init = s.find_state(*initial_);
    if (!init) {
        throw InputError("unknown initial state \"" + *initial_ + "\"");
    }
    s.initial_ = *init;

    const std::size_t n = s.states_.size();
    s.labels_.assign(n, {});
    for (const auto& [state, prop] : labels_) {
        const auto q = s.find_state(state);
        if (!q) {
            throw InputError("label for unknown state \"" + state + "\"");
        }
        const auto p = s.find_proposition(prop);
        if (!p) {
            throw InputError("unknown proposition \"" + prop + "\" labelled at state \"" + state + "\"");
        }
        s.labels_[*q].push_back(*p);
    }
    for (auto& row : s.labels_) {
        std::sort(row.begin(), row.end());
        row.erase(std::unique(row.begin(), row.end()), row.end());
    }

    for (const auto& [state, rows] : actions_) {
        if (!s.find_state(state)) {
            throw InputError("actions for unknown state \"" + state + "\"");
        }
    }
    s.actions_.assign(n, std::vector<std::vector<std::string>>(agents_));
    s.strides_.assign(n, std::vector<std::size_t>(agents_, 1));
    s.successors_.assign(n, {});
    for (std::size_t q = 0; q < n; ++q) {
        const auto it = actions_.find(s.states_[q]);
        for (std::size_t i = 0; i < agents_; ++i) {
            if (it == actions_.end() || it->second[i].empty()) {
                throw InputError("empty action set for agent " + agent_key(i) + " at state \"" + s.states_[q] + "\"");
            }
            const auto& list = it->second[i];
            if (list.size() > max_actions_per_slot) {
                throw InputError("too many actions for agent " + agent_key(i) + " at state \"" + s.states_[q] + "\"");
            }
            std::set<std::string> seen;
            for (const auto& a : list) {
                require_identifier("action", a);
                if (!seen.insert(a).second) {
                    throw InputError("duplicate action \"" + a + "\" at state \"" + s.states_[q] + "\"");
                }
            }
            s.actions_[q][i] = list;
        }
        std::size_t stride = 1;
        for (std::size_t i = agents_; i-- > 0;) {
            s.strides_[q][i] = stride;
            stride *= s.actions_[q][i].size();
        }
        s.successors_[q].assign(stride, std::numeric_limits<std::size_t>::max());
    }

    for (const auto& t : transitions_) {
        const auto from = s.find_state(t.from);
        if (!from) {
            throw InputError("transition from unknown state \"" + t.from + "\"");
        }
        const auto to = s.find_state(t.to);
        if (!to) {
            throw InputError("transition to unknown state \"" + t.to + "\"");
        }
        if (t.joint.size() != agents_) {
            throw InputError("joint action at state \"" + t.from + "\" must list " + std::to_string(agents_) +
                             " actions");
        }
        std::vector<std::size_t> per_agent(agents_);
        for (std::size_t i = 0; i < agents_; ++i) {
            const auto a = s.find_action(i, *from, t.joint[i]);
            if (!a) {
                throw InputError("unknown action \"" + t.joint[i] + "\" for agent " + agent_key(i) + " at state \"" +
                                 t.from + "\"");
            }
            per_agent[i] = *a;
        }
        auto& slot = s.successors_[*from][s.joint_index(*from, per_agent)];
        if (slot != std::numeric_limits<std::size_t>::max()) {
            throw InputError("duplicate transition at state \"" + t.from + "\"");
        }
        slot = *to;
    }
    for (std::size_t q = 0; q < n; ++q) {
        for (std::size_t j = 0; j < s.successors_[q].size(); ++j) {
            if (s.successors_[q][j] == std::numeric_limits<std::size_t>::max()) {
                std::ostringstream joint;
                for (std::size_t i = 0; i < agents_; ++i) {
                    joint << (i ? "," : "") << s.actions_[q][i][s.action_of(q, j, i)];
                }
                throw InputError("non-total transition function: no successor for (" + joint.str() + ") at state \"" +
                                 s.states_[q] + "\"");
            }
        }
    }
    return s;
}

// --------------------------------------------------------------- SocialLaw

bool SocialLaw::restricts(std::size_t agent, std::size_t q, std::size_t action) const {
    return ((mask(agent, q) >> action) & 1U) != 0;
}

std::uint64_t SocialLaw::mask(std::size_t agent, std::size_t q) const {
    if (agent >= masks_.size() || q >= masks_[agent].size()) {
        return 0;
    }
    return masks_[agent][q];
}

void SocialLaw::forbid(std::size_t agent, std::size_t q, std::size_t action) {
    set_mask(agent, q, mask(agent, q) | (std::uint64_t{1} << action));
}

void SocialLaw::set_mask(std::size_t agent, std::size_t q, std::uint64_t mask) {
    if (masks_.size() <= agent) {
        masks_.resize(agent + 1);
    }
    if (masks_[agent].size() <= q) {
        masks_[agent].resize(q + 1, 0);
    }
    masks_[agent][q] = mask;
}

bool SocialLaw::empty() const { return total_size() == 0; }

std::size_t SocialLaw::size_for(std::size_t agent) const {
    if (agent >= masks_.size()) {
        return 0;
    }
    std::size_t n = 0;
    for (const auto m : masks_[agent]) {
        n += static_cast<std::size_t>(std::popcount(m));
    }
    return n;
}

std::size_t SocialLaw::total_size() const {
    std::size_t n = 0;
    for (std::size_t i = 0; i < masks_.size(); ++i) {
        n += size_for(i);
    }
    return n;
}

SocialLaw SocialLaw::united(const SocialLaw& other) const {
    SocialLaw out = *this;
    for (std::size_t i = 0; i < other.masks_.size(); ++i) {
        for (std::size_t q = 0; q < other.masks_[i].size(); ++q) {
            if (other.masks_[i][q] != 0) {
                out.set_mask(i, q, out.mask(i, q) | other.masks_[i][q]);
            }
        }
    }
    return out;
}

bool operator==(const SocialLaw& a, const SocialLaw& b) {
    const std::size_t agents = std::max(a.masks_.size(), b.masks_.size());
    for (std::size_t i = 0; i < agents; ++i) {
        const std::size_t na = i < a.masks_.size() ? a.masks_[i].size() : 0;
        const std::size_t nb = i < b.masks_.size() ? b.masks_[i].size() : 0;
        for (std::size_t q = 0; q < std::max(na, nb); ++q) {
            if (a.mask(i, q) != b.mask(i, q)) {
                return false;
            }
        }
    }
    return true;
}

void validate_law(const Ccgs& s, const SocialLaw& law) {
    for (std::size_t q = 0; q < s.state_count(); ++q) {
        for (std::size_t i = 0; i < s.agent_count(); ++i) {
            const std::size_t n = s.actions(i, q).size();
            const std::uint64_t full = (std::uint64_t{1} << n) - 1;
            const std::uint64_t m = law.mask(i, q);
            if ((m & ~full) != 0) {
                throw InputError("law restricts an unknown action of agent " + agent_key(i) + " at state \"" +
                                 s.state_name(q) + "\"");
            }
            if (m == full) {
                throw InputError("law would leave agent " + agent_key(i) + " without actions at state \"" +
                                 s.state_name(q) + "\"");
            }
        }
    }
    for (std::size_t i = 0; i < law.agent_extent(); ++i) {
        for (std::size_t q = 0; q < law.state_extent(i); ++q) {
            if (law.mask(i, q) != 0 && (i >= s.agent_count() || q >= s.state_count())) {
                throw InputError("law restricts an agent or state outside the structure");
            }
        }
    }
}

Ccgs apply_law(const Ccgs& s, const SocialLaw& law) {
    validate_law(s, law);
    Ccgs out = s;
    const std::size_t k = s.agent_count();
    for (std::size_t q = 0; q < s.state_count(); ++q) {
        std::vector<std::vector<std::size_t>> kept(k);  // surviving old action ids
        for (std::size_t i = 0; i < k; ++i) {
            out.actions_[q][i].clear();
            for (std::size_t a = 0; a < s.actions(i, q).size(); ++a) {
                if (!law.restricts(i, q, a)) {
                    kept[i].push_back(a);
                    out.actions_[q][i].push_back(s.actions(i, q)[a]);
                }
            }
        }
        std::size_t stride = 1;
        for (std::size_t i = k; i-- > 0;) {
            out.strides_[q][i] = stride;
            stride *= kept[i].size();
        }
        out.successors_[q].assign(stride, 0);
        std::vector<std::size_t> old_joint(k);
        for (std::size_t j = 0; j < stride; ++j) {
            for (std::size_t i = 0; i < k; ++i) {
                old_joint[i] = kept[i][(j / out.strides_[q][i]) % kept[i].size()];
            }
            out.successors_[q][j] = s.successor(q, s.joint_index(q, old_joint));
        }
    }
    return out;
}

std::vector<std::uint8_t> law_bits(const Ccgs& s, const SocialLaw& law) {
    std::vector<std::uint8_t> bits;
    for (std::size_t q = 0; q < s.state_count(); ++q) {
        for (std::size_t i = 0; i < s.agent_count(); ++i) {
            for (std::size_t a = 0; a < s.actions(i, q).size(); ++a) {
                bits.push_back(law.restricts(i, q, a) ? 1 : 0);
            }
        }
    }
    return bits;
}

std::optional<std::uint64_t> count_social_laws(const Ccgs& s) {
    std::uint64_t total = 1;
    for (std::size_t q = 0; q < s.state_count(); ++q) {
        for (std::size_t i = 0; i < s.agent_count(); ++i) {
            const std::size_t n = s.actions(i, q).size();
            if (n >= 63) {
                return std::nullopt;
            }
            const std::uint64_t choices = (std::uint64_t{1} << n) - 1;
            if (total > std::numeric_limits<std::uint64_t>::max() / choices) {
                return std::nullopt;
            }
            total *= choices;
        }
    }
    return total;
}

SocialLawStream::iterator::iterator(const Ccgs* s) : s_(s), done_(false) {
    for (std::size_t q = 0; q < s->state_count(); ++q) {
        for (std::size_t i = 0; i < s->agent_count(); ++i) {
            counters_.push_back(0);
            limits_.push_back((std::uint64_t{1} << s->actions(i, q).size()) - 1);
        }
    }
}

SocialLawStream::iterator& SocialLawStream::iterator::operator++() {
    const std::size_t k = s_->agent_count();
    for (std::size_t slot = counters_.size(); slot-- > 0;) {
        const std::size_t q = slot / k;
        const std::size_t i = slot % k;
        if (counters_[slot] + 1 < limits_[slot]) {
            ++counters_[slot];
            current_.set_mask(i, q, counters_[slot]);
            return *this;
        }
        counters_[slot] = 0;
        current_.set_mask(i, q, 0);
    }
    done_ = true;
    return *this;
}

// --------------------------------------------------------------------- bids

void validate_bids(const Ccgs& s, const BidProfile& bids) {
    if (bids.size() != s.agent_count()) {
        throw InputError("expected " + std::to_string(s.agent_count()) + " bids, got " + std::to_string(bids.size()));
    }
    for (std::size_t i = 0; i < bids.size(); ++i) {
        if (!std::isfinite(bids[i]) || bids[i] < 0.0) {
            throw InputError("bid of agent " + agent_key(i) + " must be a finite nonnegative number");
        }
    }
}

std::vector<double> virtual_costs(const Ccgs& s, const BidProfile& bids) {
    validate_bids(s, bids);
    const auto models = s.cost_models();
    std::vector<double> out(bids.size());
    for (std::size_t i = 0; i < bids.size(); ++i) {
        out[i] = models[i].virtual_cost(bids[i]);
    }
    return out;
}

BidProfile parse_bid_list(std::string_view text) {
    BidProfile out;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto comma = std::min(text.find(',', start), text.size());
        const std::string item(text.substr(start, comma - start));
        std::size_t used = 0;
        double value = 0.0;
        try {
            value = std::stod(item, &used);
        } catch (const std::exception&) {
            throw InputError("bid \"" + item + "\" is not a number");
        }
        if (used != item.size()) {
            throw InputError("bid \"" + item + "\" is not a number");
        }
        out.push_back(value);
        start = comma + 1;
    }
    return out;
}

// ----------------------------------------------------------------- file I/O

nlohmann::json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw InputError("cannot open \"" + path.string() + "\"");
    }
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw InputError("\"" + path.string() + "\" is not valid JSON: " + e.what());
    }
}

namespace {

const nlohmann::json& require_key(const nlohmann::json& doc, const char* key) {
    if (!doc.contains(key)) {
        throw InputError(std::string("model document is missing \"") + key + "\"");
    }
    return doc[key];
}

std::vector<std::string> string_array(const nlohmann::json& j, const std::string& what) {
    if (!j.is_array()) {
        throw InputError(what + " must be an array of strings");
    }
    std::vector<std::string> out;
    for (const auto& e : j) {
        if (!e.is_string()) {
            throw InputError(what + " must be an array of strings");
        }
        out.push_back(e.get<std::string>());
    }
    return out;
}

std::size_t parse_agent_key(const std::string& key, std::size_t agents) {
    std::size_t pos = 0;
    unsigned long value = 0;
    try {
        value = std::stoul(key, &pos);
    } catch (const std::exception&) {
        throw InputError("agent key \"" + key + "\" is not an integer");
    }
    if (pos != key.size() || value < 1 || value > agents) {
        throw InputError("agent key \"" + key + "\" out of range 1.." + std::to_string(agents));
    }
    return value - 1;
}

}  // namespace

Ccgs load_model(const nlohmann::json& doc) {
    if (!doc.is_object()) {
        throw InputError("model document must be a JSON object");
    }
    const auto& agents_json = require_key(doc, "agents");
    if (!agents_json.is_number_integer() || agents_json.get<long long>() < 1) {
        throw InputError("\"agents\" must be a positive integer");
    }
    const auto k = static_cast<std::size_t>(agents_json.get<long long>());
    CcgsBuilder b(k);
    for (auto& name : string_array(require_key(doc, "states"), "\"states\"")) {
        b.add_state(std::move(name));
    }
    const auto& init = require_key(doc, "initial");
    if (!init.is_string()) {
        throw InputError("\"initial\" must be a string");
    }
    b.set_initial(init.get<std::string>());
    if (doc.contains("propositions")) {
        for (auto& p : string_array(doc["propositions"], "\"propositions\"")) {
            b.add_proposition(std::move(p));
        }
    }
    if (doc.contains("labels")) {
        const auto& labels = doc["labels"];
        if (!labels.is_object()) {
            throw InputError("\"labels\" must map states to arrays");
        }
        for (const auto& [state, props] : labels.items()) {
            for (const auto& p : string_array(props, "labels of \"" + state + "\"")) {
                b.add_label(state, p);
            }
        }
    }
    const auto& actions = require_key(doc, "actions");
    if (!actions.is_object()) {
        throw InputError("\"actions\" must map states to per-agent arrays");
    }
    for (const auto& [state, per_agent] : actions.items()) {
        if (!per_agent.is_object()) {
            throw InputError("actions of \"" + state + "\" must map agent indices to arrays");
        }
        for (const auto& [agent, list] : per_agent.items()) {
            b.set_actions(state, parse_agent_key(agent, k), string_array(list, "actions of \"" + state + "\""));
        }
    }
    const auto& transitions = require_key(doc, "transitions");
    if (!transitions.is_array()) {
        throw InputError("\"transitions\" must be an array");
    }
    for (const auto& t : transitions) {
        if (!t.is_object() || !t.contains("from") || !t.contains("joint") || !t.contains("to") ||
            !t["from"].is_string() || !t["to"].is_string()) {
            throw InputError("each transition needs \"from\", \"joint\" and \"to\"");
        }
        b.add_transition(t["from"].get<std::string>(), string_array(t["joint"], "\"joint\""), t["to"].get<std::string>());
    }
    if (doc.contains("costs")) {
        const auto& costs = doc["costs"];
        if (!costs.is_object()) {
            throw InputError("\"costs\" must map agent indices to distributions");
        }
        for (const auto& [agent, d] : costs.items()) {
            b.set_cost_model(parse_agent_key(agent, k), distribution_from_json(d));
        }
    }
    return b.build();
}

Ccgs load_model_file(const std::filesystem::path& path) { return load_model(read_json_file(path)); }

nlohmann::json save_model(const Ccgs& s) {
    nlohmann::json doc;
    doc["agents"] = s.agent_count();
    doc["states"] = s.states();
    doc["initial"] = s.state_name(s.initial());
    doc["propositions"] = s.propositions();
    auto labels = nlohmann::json::object();
    auto actions = nlohmann::json::object();
    auto transitions = nlohmann::json::array();
    for (std::size_t q = 0; q < s.state_count(); ++q) {
        auto props = nlohmann::json::array();
        for (const auto p : s.labels(q)) {
            props.push_back(s.propositions()[p]);
        }
        labels[s.state_name(q)] = props;
        auto per_agent = nlohmann::json::object();
        for (std::size_t i = 0; i < s.agent_count(); ++i) {
            per_agent[agent_key(i)] = s.actions(i, q);
        }
        actions[s.state_name(q)] = per_agent;
        for (std::size_t j = 0; j < s.joint_count(q); ++j) {
            auto joint = nlohmann::json::array();
            for (std::size_t i = 0; i < s.agent_count(); ++i) {
                joint.push_back(s.actions(i, q)[s.action_of(q, j, i)]);
            }
            transitions.push_back({{"from", s.state_name(q)}, {"joint", joint}, {"to", s.state_name(s.successor(q, j))}});
        }
    }
    doc["labels"] = labels;
    doc["actions"] = actions;
    doc["transitions"] = transitions;
    auto costs = nlohmann::json::object();
    for (std::size_t i = 0; i < s.agent_count(); ++i) {
        if (s.cost_model(i)) {
            costs[agent_key(i)] = distribution_to_json(*s.cost_model(i));
        }
    }
    if (!costs.empty()) {
        doc["costs"] = costs;
    }
    return doc;
}

SocialLaw load_law(const Ccgs& s, const nlohmann::json& doc) {
    if (!doc.is_object() || !doc.contains("restrict") || !doc["restrict"].is_array()) {
        throw InputError("law document needs a \"restrict\" array");
    }
    SocialLaw law;
    for (const auto& r : doc["restrict"]) {
        if (!r.is_object() || !r.contains("agent") || !r.contains("state") || !r.contains("action") ||
            !r["agent"].is_number_integer() || !r["state"].is_string() || !r["action"].is_string()) {
            throw InputError("each restriction needs integer \"agent\", string \"state\" and string \"action\"");
        }
        const auto agent_no = r["agent"].get<long long>();
        if (agent_no < 1 || static_cast<std::size_t>(agent_no) > s.agent_count()) {
            throw InputError("restriction names unknown agent " + std::to_string(agent_no));
        }
        const auto agent = static_cast<std::size_t>(agent_no - 1);
        const auto state_name = r["state"].get<std::string>();
        const auto q = s.find_state(state_name);
        if (!q) {
            throw InputError("restriction names unknown state \"" + state_name + "\"");
        }
        const auto action_name = r["action"].get<std::string>();
        const auto a = s.find_action(agent, *q, action_name);
        if (!a) {
            throw InputError("restriction names unknown action \"" + action_name + "\" of agent " +
                             std::to_string(agent_no) + " at \"" + state_name + "\"");
        }
        law.forbid(agent, *q, *a);
    }
    validate_law(s, law);
    return law;
}

SocialLaw load_law_file(const Ccgs& s, const std::filesystem::path& path) { return load_law(s, read_json_file(path)); }

nlohmann::json save_law(const Ccgs& s, const SocialLaw& law) {
    auto restrict = nlohmann::json::array();
    for (std::size_t q = 0; q < s.state_count(); ++q) {
        for (std::size_t i = 0; i < s.agent_count(); ++i) {
            for (std::size_t a = 0; a < s.actions(i, q).size(); ++a) {
                if (law.restricts(i, q, a)) {
                    restrict.push_back({{"agent", i + 1}, {"state", s.state_name(q)}, {"action", s.actions(i, q)[a]}});
                }
            }
        }
    }
    return nlohmann::json{{"restrict", restrict}};
}

}  // namespace sls
