#pragma once

// ATL formulas, closure, fixpoint model checking and alternating bisimulation.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "sls/model.hpp"

namespace sls {

// Sorted, duplicate-free, 1-based agent numbers.
using Coalition = std::vector<std::size_t>;

std::string coalition_string(const Coalition& c, char sep = ',');
// Bit (i-1) set for agent i.
std::uint32_t coalition_mask(const Coalition& c);

class Formula {
public:
    enum class Kind { prop, truth, neg, disj, next, always, until, conj, imp, eventually };

    static Formula prop(std::string name);
    static Formula truth();
    static Formula falsity();  // !true
    static Formula neg(Formula f);
    static Formula disj(Formula a, Formula b);
    static Formula conj(Formula a, Formula b);
    static Formula imp(Formula a, Formula b);
    static Formula next(Coalition c, Formula f);
    static Formula always(Coalition c, Formula f);
    static Formula eventually(Coalition c, Formula f);
    static Formula until(Coalition c, Formula a, Formula b);

    Kind kind() const { return node_->kind; }
    const std::string& name() const { return node_->name; }
    const Coalition& coalition() const { return node_->coalition; }
    std::size_t arity() const { return node_->children.size(); }
    const Formula& child(std::size_t i) const { return node_->children[i]; }

    // Canonical, fully parenthesised text; injective up to structure.
    const std::string& str() const { return node_->text; }
    bool is_core() const { return node_->core; }
    bool is_quantified() const { return kind() == Kind::next || kind() == Kind::always || kind() == Kind::until ||
                                        kind() == Kind::eventually; }

    friend bool operator==(const Formula& a, const Formula& b) { return a.node_ == b.node_ || a.str() == b.str(); }

private:
    struct Node {
        Kind kind;
        std::string name;
        Coalition coalition;
        std::vector<Formula> children;
        std::string text;
        bool core = true;
    };

    explicit Formula(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
    static Formula make(Kind kind, std::string name, Coalition c, std::vector<Formula> children);

    std::shared_ptr<const Node> node_;
};

/// Throws InputError with a 1-based column, or "at end of input".
Formula parse_formula(std::string_view text);

Formula desugar(const Formula& f);

/// {f} together with all its subformulas, deduplicated and ordered by
/// (closure size, canonical text). f must be desugared.
std::vector<Formula> closure(const Formula& f);

/// Orders a formula set by (closure size, canonical text) and removes duplicates.
void sort_canonical(std::vector<Formula>& formulas);

class ModelChecker {
public:
    explicit ModelChecker(const Ccgs& s);

    /// Satisfaction set. Sugar is desugared on the fly; results are memoised
    /// by canonical text.
    const StateSet& check(const Formula& f);
    bool holds_at(const Formula& f, std::size_t q) { return check(f).contains(q); }

    // q is in Pre_A(X) iff some A-move at q forces every successor into X.
    StateSet pre(std::uint32_t mask, const StateSet& x);

    const Ccgs& structure() const { return *s_; }

private:
    const std::vector<std::vector<std::uint32_t>>& projection(std::uint32_t mask);
    std::uint32_t validate_coalition(const Coalition& c) const;

    const Ccgs* s_;
    std::unordered_map<std::string, StateSet> memo_;
    // projection_[mask][q][joint] = index of the A-part of the joint action
    std::unordered_map<std::uint32_t, std::vector<std::vector<std::uint32_t>>> projection_;
};

StateSet model_check(const Ccgs& s, const Formula& f);

/// Greatest alternating bisimulation between s and t; nullopt when the
/// initial states are not related. relation[q][q'] is 1 for related pairs.
using BisimRelation = std::vector<std::vector<std::uint8_t>>;
std::optional<BisimRelation> check_bisimulation(const Ccgs& s, const Ccgs& t);

}  // namespace sls
