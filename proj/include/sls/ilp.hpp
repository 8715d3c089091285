#pragma once

// 0/1 integer programs for the dominant-law allocation problem, an exact
// desk-scale solver, LP-format emission, and assignment checking.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "sls/logic.hpp"
#include "sls/model.hpp"
#include "sls/valuation.hpp"

namespace sls {

enum class VarClass { x, y, yA, s, z, e, r };

struct Variable {
    VarClass cls;
    std::string name;
};

struct Term {
    std::size_t var;
    long long coef;
};

enum class Sense { le, ge, eq };

struct Constraint {
    std::vector<Term> terms;  // merged, one entry per variable
    Sense sense;
    long long rhs;
    int family;  // 25..60
};

inline constexpr std::size_t no_var = static_cast<std::size_t>(-1);

// Structural tables that let the solver and the checker recompute every
// non-y variable from the y's.
struct IlpLayout {
    struct Node {
        Formula::Kind kind;
        std::size_t lhs = no_var;  // child fids
        std::size_t rhs = no_var;
        std::size_t coalition = no_var;  // index into coalitions
        std::optional<std::size_t> proposition;
    };

    // The split of D(q) into an A-part and an (Ag \ A)-part.
    struct Split {
        std::size_t moves = 0;
        std::size_t comoves = 0;
        std::vector<std::vector<std::size_t>> successor;  // [move][comove]
    };

    struct StateTables {
        std::vector<std::vector<std::size_t>> y;          // [agent][action]
        std::vector<std::vector<std::size_t>> joint;      // [joint][agent] action index
        std::vector<std::size_t> successor;               // [joint]
        std::vector<std::vector<std::uint32_t>> move_of;  // [coalition][joint]
        std::vector<std::vector<std::size_t>> yA;         // [coalition][move]
        std::vector<std::vector<std::vector<std::size_t>>> yA_members;  // [coalition][move] -> y vars
        std::vector<Split> split;                         // [coalition], quantifier coalitions only
        std::vector<std::size_t> x;                       // [fid]
        std::vector<std::size_t> r;                       // [fid], until formulas only
        // [fid][coalition][move](...[comove]); empty for non-quantifier coalitions
        std::vector<std::vector<std::vector<std::vector<std::size_t>>>> s;
        std::vector<std::vector<std::vector<std::size_t>>> z;
        std::vector<std::vector<std::vector<std::size_t>>> e;
    };

    std::size_t agents = 0;
    std::size_t states = 0;
    std::size_t initial = 0;
    std::size_t transitions = 0;
    std::vector<Formula> closure;
    std::vector<Node> nodes;                   // parallel to closure
    std::vector<std::uint32_t> coalitions;     // ascending masks
    std::vector<std::uint8_t> quantified;      // per coalition: appears in a path quantifier
    std::vector<std::size_t> complement;       // per quantifier coalition
    std::vector<std::vector<std::uint8_t>> labelled;  // [q][proposition]
    std::vector<StateTables> at;               // [q]
    std::vector<std::size_t> y_vars;           // canonical (state, agent, action) order
};

class IlpModel {
public:
    const std::vector<Variable>& variables() const { return variables_; }
    const std::vector<std::pair<std::size_t, double>>& objective() const { return objective_; }
    const std::vector<Constraint>& constraints() const { return constraints_; }
    const IlpLayout& layout() const { return layout_; }

    std::optional<std::size_t> find(std::string_view name) const;

    // Linear rows plus one domain restriction per binary variable.
    std::size_t constraint_count() const { return constraints_.size() + variables_.size(); }

    std::size_t add_variable(VarClass cls, std::string name);
    void add_constraint(std::vector<Term> terms, Sense sense, long long rhs, int family);
    void add_objective(std::size_t var, double coef);

private:
    std::vector<Variable> variables_;
    std::unordered_map<std::string, std::size_t> index_;
    std::vector<std::pair<std::size_t, double>> objective_;
    std::unordered_map<std::size_t, std::size_t> objective_slot_;
    std::vector<Constraint> constraints_;
    IlpLayout layout_;

    friend IlpModel build_dom_sl_virtual(const Ccgs&, const FeatureSet&, std::span<const double>);
};

/// Objective: sum c_j x[q_s, phi_j] - sum lambda_i(x_i) y[q, i, a].
IlpModel build_dom_sl(const Ccgs& s, const FeatureSet& f, const BidProfile& bids);
/// Same, with the per-agent virtual costs given directly.
IlpModel build_dom_sl_virtual(const Ccgs& s, const FeatureSet& f, std::span<const double> lambdas);
/// Appends sum_{q,a} y[q, agent, a] = n. Several may be stacked.
void add_fixed_count(IlpModel& m, std::size_t agent, std::size_t n);
IlpModel build_dom_in_sl(const Ccgs& s, const FeatureSet& f, const BidProfile& bids, std::size_t agent, std::size_t n);

/// Upper bound 39 k t |Q| |cl(F)|^2 on the number of generated constraints.
std::uint64_t size_bound(const IlpLayout& layout);

/// CPLEX-style LP text; byte-identical for identical models. With
/// `families` each row is preceded by a "\ family (N)" comment.
void emit_lp(const IlpModel& m, std::ostream& out, bool families = false);
std::string emit_lp_string(const IlpModel& m, bool families = false);

struct Assignment {
    std::vector<std::uint8_t> values;  // parallel to IlpModel::variables()
    double objective = 0.0;

    int value(const IlpModel& m, std::string_view name) const;
};

// Tie tolerance shared by every argmax in the library.
bool objective_ties(double a, double b);
/// True when (g, restricted count, y bits) should replace the incumbent:
/// higher objective, then fewer restrictions, then lexicographically smaller y.
bool prefer_candidate(double g, std::size_t count, const std::vector<std::uint8_t>& bits, double best_g,
                      std::size_t best_count, const std::vector<std::uint8_t>& best_bits);

struct SolveStats {
    std::uint64_t nodes = 0;
    std::uint64_t leaves = 0;
};

/// Exact optimum by depth-first search over the y variables; every other
/// variable is recomputed from the y's. nullopt when infeasible.
std::optional<Assignment> solve_exact(const IlpModel& m, SolveStats* stats = nullptr);

/// Recomputes all variables from the given y values (indexed like
/// IlpLayout::y_vars) and evaluates the objective.
Assignment derive_assignment(const IlpModel& m, const std::vector<std::uint8_t>& y);

/// Index of the first constraint the assignment violates.
std::optional<std::size_t> first_violation(const IlpModel& m, const Assignment& a);
inline bool is_satisfied_by(const IlpModel& m, const Assignment& a) { return !first_violation(m, a); }

/// eta(i, q) = { a | y[q, i, a] = 1 }.
SocialLaw decode_law(const IlpModel& m, const Assignment& a, const Ccgs& s);

struct AssignmentCheck {
    bool ok = true;
    std::string problem;  // first failure, empty when ok
};

/// Constraint satisfaction, x[q, phi] = 1 exactly when q satisfies phi in
/// the restricted structure, and the y/yA/s/z/e/r consistency conditions.
AssignmentCheck verify_assignment(const IlpModel& m, const Assignment& a, const Ccgs& s, const FeatureSet& f);

// ------------------------------------------------------ weighted MAX-SAT

struct WeightedClause {
    Formula formula;  // propositional, over the instance variables
    double weight = 0.0;
};

struct MaxWSatInstance {
    std::vector<std::string> vars;
    std::vector<WeightedClause> clauses;
};

inline constexpr std::size_t maxwsat_var_limit = 20;

MaxWSatInstance load_maxwsat(const nlohmann::json& document);
nlohmann::json save_maxwsat(const MaxWSatInstance& instance);

/// Single-agent structure: an idle self-loop a0 at q_s plus one action per
/// variable leading to a state labelled with it. Each clause becomes a
/// feature with every variable v replaced by <<1>> X v. The agent's prior is
/// zero_virtual, so the optimum equals the best satisfiable weight.
std::pair<Ccgs, FeatureSet> gen_maxwsat_instance(const MaxWSatInstance& instance);

/// Best total weight over all 2^n truth assignments.
double maxwsat_optimum(const MaxWSatInstance& instance);

}  // namespace sls
