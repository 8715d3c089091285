#include "sls/ilp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <tuple>
#include <cctype>

#include "sls/error.hpp"

namespace sls {

namespace {

std::vector<Term> merged(std::vector<Term> terms) {
    std::vector<Term> out;
    for (const auto& t : terms) {
        auto it = std::find_if(out.begin(), out.end(), [&](const Term& o) { return o.var == t.var; });
        if (it == out.end()) {
            out.push_back(t);
        } else {
            it->coef += t.coef;
        }
    }
    out.erase(std::remove_if(out.begin(), out.end(), [](const Term& t) { return t.coef == 0; }), out.end());
    return out;
}

std::string join(const std::vector<std::string>& parts, char sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) {
            out += sep;
        }
        out += parts[i];
    }
    return out;
}

std::vector<std::size_t> members_of(std::uint32_t mask, std::size_t k) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < k; ++i) {
        if ((mask >> i) & 1U) {
            out.push_back(i);
        }
    }
    return out;
}

std::string mask_string(std::uint32_t mask, std::size_t k) {
    std::vector<std::string> parts;
    for (const auto i : members_of(mask, k)) {
        parts.push_back(std::to_string(i + 1));
    }
    return join(parts, '_');
}

}  // namespace

// ----------------------------------------------------------------- IlpModel

std::optional<std::size_t> IlpModel::find(std::string_view name) const {
    const auto it = index_.find(std::string(name));
    if (it == index_.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::size_t IlpModel::add_variable(VarClass cls, std::string name) {
    const std::size_t id = variables_.size();
    if (!index_.emplace(name, id).second) {
        throw InputError("variable name collision on \"" + name +
                         "\"; action names containing '_' can make joint-action names ambiguous");
    }
    variables_.push_back({cls, std::move(name)});
    return id;
}

void IlpModel::add_constraint(std::vector<Term> terms, Sense sense, long long rhs, int family) {
    for (const auto& t : terms) {
        if (t.var >= variables_.size()) {
            throw InternalError("constraint references an undeclared variable");
        }
    }
    constraints_.push_back({merged(std::move(terms)), sense, rhs, family});
}

void IlpModel::add_objective(std::size_t var, double coef) {
    if (coef == 0.0) {
        return;
    }
    const auto it = objective_slot_.find(var);
    if (it == objective_slot_.end()) {
        objective_slot_.emplace(var, objective_.size());
        objective_.emplace_back(var, coef);
    } else {
        objective_[it->second].second += coef;
    }
}

// ------------------------------------------------------------------ builder

IlpModel build_dom_sl_virtual(const Ccgs& s, const FeatureSet& f, std::span<const double> lambdas) {
    const std::size_t k = s.agent_count();
    const std::size_t n = s.state_count();
    if (lambdas.size() != k) {
        throw InputError("expected " + std::to_string(k) + " virtual costs, got " + std::to_string(lambdas.size()));
    }
    for (const double l : lambdas) {
        if (!std::isfinite(l)) {
            throw InputError("virtual costs must be finite");
        }
    }
    if (k > 31) {
        throw InputError("at most 31 agents are supported");
    }

    IlpModel m;
    IlpLayout& L = m.layout_;
    L.agents = k;
    L.states = n;
    L.initial = s.initial();
    L.transitions = s.transition_count();
    L.closure = union_closure(f);

    std::unordered_map<std::string, std::size_t> fid_of;
    for (std::size_t fid = 0; fid < L.closure.size(); ++fid) {
        fid_of.emplace(L.closure[fid].str(), fid);
    }

    // Quantifier coalitions and their complements.
    const std::uint32_t everyone = (std::uint32_t{1} << k) - 1;
    std::set<std::uint32_t> quantifier_masks;
    for (const auto& phi : L.closure) {
        if (phi.is_quantified()) {
            for (const auto a : phi.coalition()) {
                if (a > k) {
                    throw InputError("formula " + phi.str() + " names agent " + std::to_string(a) + " but the model has " +
                                     std::to_string(k));
                }
            }
            quantifier_masks.insert(coalition_mask(phi.coalition()));
        }
    }
    std::set<std::uint32_t> all_masks = quantifier_masks;
    for (const auto mask : quantifier_masks) {
        all_masks.insert(everyone & ~mask);
    }
    L.coalitions.assign(all_masks.begin(), all_masks.end());
    auto coalition_index = [&](std::uint32_t mask) {
        return static_cast<std::size_t>(std::lower_bound(L.coalitions.begin(), L.coalitions.end(), mask) -
                                        L.coalitions.begin());
    };
    L.quantified.assign(L.coalitions.size(), 0);
    L.complement.assign(L.coalitions.size(), no_var);
    for (std::size_t c = 0; c < L.coalitions.size(); ++c) {
        if (quantifier_masks.count(L.coalitions[c])) {
            L.quantified[c] = 1;
            L.complement[c] = coalition_index(everyone & ~L.coalitions[c]);
        }
    }

    L.nodes.resize(L.closure.size());
    for (std::size_t fid = 0; fid < L.closure.size(); ++fid) {
        const Formula& phi = L.closure[fid];
        auto& node = L.nodes[fid];
        node.kind = phi.kind();
        if (phi.arity() > 0) {
            node.lhs = fid_of.at(phi.child(0).str());
        }
        if (phi.arity() > 1) {
            node.rhs = fid_of.at(phi.child(1).str());
        }
        if (phi.is_quantified()) {
            node.coalition = coalition_index(coalition_mask(phi.coalition()));
        }
        if (phi.kind() == Formula::Kind::prop) {
            node.proposition = s.find_proposition(phi.name());
            if (!node.proposition) {
                throw InputError("feature proposition \"" + phi.name() + "\" is not declared by the model");
            }
        }
    }
    L.labelled.assign(n, std::vector<std::uint8_t>(s.propositions().size(), 0));
    for (std::size_t q = 0; q < n; ++q) {
        for (const auto p : s.labels(q)) {
            L.labelled[q][p] = 1;
        }
    }

    // ---- variables, in class order x, y, yA, s, z, e, r
    L.at.resize(n);
    for (std::size_t q = 0; q < n; ++q) {
        auto& T = L.at[q];
        T.x.resize(L.closure.size());
        for (std::size_t fid = 0; fid < L.closure.size(); ++fid) {
            T.x[fid] = m.add_variable(VarClass::x, "x__" + s.state_name(q) + "__" + std::to_string(fid));
        }
    }
    for (std::size_t q = 0; q < n; ++q) {
        auto& T = L.at[q];
        T.y.resize(k);
        for (std::size_t i = 0; i < k; ++i) {
            for (const auto& a : s.actions(i, q)) {
                T.y[i].push_back(m.add_variable(VarClass::y, "y__" + s.state_name(q) + "__" + std::to_string(i + 1) +
                                                                   "__" + a));
                L.y_vars.push_back(T.y[i].back());
            }
        }
        T.successor.resize(s.joint_count(q));
        T.joint.resize(s.joint_count(q));
        for (std::size_t j = 0; j < s.joint_count(q); ++j) {
            T.successor[j] = s.successor(q, j);
            T.joint[j].resize(k);
            for (std::size_t i = 0; i < k; ++i) {
                T.joint[j][i] = s.action_of(q, j, i);
            }
        }
    }
    // Moves of each coalition: members in agent order, first member most significant.
    std::vector<std::vector<std::vector<std::string>>> move_names(n);  // [q][c][move]
    for (std::size_t q = 0; q < n; ++q) {
        auto& T = L.at[q];
        T.move_of.resize(L.coalitions.size());
        T.yA.resize(L.coalitions.size());
        T.yA_members.resize(L.coalitions.size());
        move_names[q].resize(L.coalitions.size());
        for (std::size_t c = 0; c < L.coalitions.size(); ++c) {
            const auto members = members_of(L.coalitions[c], k);
            std::size_t moves = 1;
            for (const auto i : members) {
                moves *= s.actions(i, q).size();
            }
            move_names[q][c].resize(moves);
            T.yA_members[c].resize(moves);
            T.move_of[c].resize(s.joint_count(q));
            for (std::size_t j = 0; j < s.joint_count(q); ++j) {
                std::size_t move = 0;
                for (const auto i : members) {
                    move = move * s.actions(i, q).size() + T.joint[j][i];
                }
                T.move_of[c][j] = static_cast<std::uint32_t>(move);
                if (move_names[q][c][move].empty() && T.yA_members[c][move].empty()) {
                    std::vector<std::string> names;
                    for (const auto i : members) {
                        names.push_back(s.actions(i, q)[T.joint[j][i]]);
                        T.yA_members[c][move].push_back(T.y[i][T.joint[j][i]]);
                    }
                    move_names[q][c][move] = join(names, '_');
                }
            }
            const auto coal = mask_string(L.coalitions[c], k);
            for (std::size_t move = 0; move < moves; ++move) {
                T.yA[c].push_back(
                    m.add_variable(VarClass::yA, "yA__" + s.state_name(q) + "__" + coal + "__" + move_names[q][c][move]));
            }
        }
        T.split.resize(L.coalitions.size());
        for (std::size_t c = 0; c < L.coalitions.size(); ++c) {
            if (!L.quantified[c]) {
                continue;
            }
            const std::size_t comp = L.complement[c];
            auto& sp = T.split[c];
            sp.moves = T.yA[c].size();
            sp.comoves = T.yA[comp].size();
            sp.successor.assign(sp.moves, std::vector<std::size_t>(sp.comoves, no_var));
            for (std::size_t j = 0; j < s.joint_count(q); ++j) {
                sp.successor[T.move_of[c][j]][T.move_of[comp][j]] = T.successor[j];
            }
        }
    }
    const std::size_t F = L.closure.size();
    for (const VarClass cls : {VarClass::s, VarClass::z, VarClass::e}) {
        for (std::size_t q = 0; q < n; ++q) {
            auto& T = L.at[q];
            auto& table = cls == VarClass::z ? T.z : T.e;
            if (cls == VarClass::s) {
                T.s.assign(F, std::vector<std::vector<std::vector<std::size_t>>>(L.coalitions.size()));
            } else {
                table.assign(F, std::vector<std::vector<std::size_t>>(L.coalitions.size()));
            }
            const char* prefix = cls == VarClass::s ? "s__" : cls == VarClass::z ? "z__" : "e__";
            for (std::size_t fid = 0; fid < F; ++fid) {
                for (std::size_t c = 0; c < L.coalitions.size(); ++c) {
                    if (!L.quantified[c]) {
                        continue;
                    }
                    const auto& sp = T.split[c];
                    const std::string stem =
                        prefix + s.state_name(q) + "__" + std::to_string(fid) + "__" + mask_string(L.coalitions[c], k);
                    for (std::size_t mv = 0; mv < sp.moves; ++mv) {
                        if (cls == VarClass::s) {
                            T.s[fid][c].emplace_back();
                            for (std::size_t co = 0; co < sp.comoves; ++co) {
                                T.s[fid][c][mv].push_back(m.add_variable(
                                    cls, stem + "__" + move_names[q][c][mv] + "__" + move_names[q][L.complement[c]][co]));
                            }
                        } else {
                            table[fid][c].push_back(m.add_variable(cls, stem + "__" + move_names[q][c][mv]));
                        }
                    }
                }
            }
        }
    }
    for (std::size_t q = 0; q < n; ++q) {
        auto& T = L.at[q];
        T.r.assign(F, no_var);
        for (std::size_t fid = 0; fid < F; ++fid) {
            if (L.nodes[fid].kind == Formula::Kind::until) {
                T.r[fid] = m.add_variable(VarClass::r, "r__" + s.state_name(q) + "__" + std::to_string(fid));
            }
        }
    }

    // ---- objective
    for (const auto& feature : f.features()) {
        m.add_objective(L.at[L.initial].x[fid_of.at(feature.formula.str())], feature.value);
    }
    for (std::size_t q = 0; q < n; ++q) {
        for (std::size_t i = 0; i < k; ++i) {
            for (const auto v : L.at[q].y[i]) {
                m.add_objective(v, -lambdas[i]);
            }
        }
    }

    // ---- constraints
    using S = Sense;
    for (std::size_t q = 0; q < n; ++q) {
        const auto& T = L.at[q];
        for (std::size_t i = 0; i < k; ++i) {
            std::vector<Term> t;
            for (const auto v : T.y[i]) {
                t.push_back({v, 1});
            }
            m.add_constraint(t, S::le, static_cast<long long>(T.y[i].size()) - 1, 27);
        }
    }
    for (std::size_t q = 0; q < n; ++q) {
        const auto& T = L.at[q];
        for (std::size_t c = 0; c < L.coalitions.size(); ++c) {
            for (std::size_t mv = 0; mv < T.yA[c].size(); ++mv) {
                for (const auto yi : T.yA_members[c][mv]) {
                    m.add_constraint({{T.yA[c][mv], 1}, {yi, -1}}, S::ge, 0, 29);
                }
                std::vector<Term> t{{T.yA[c][mv], 1}};
                for (const auto yi : T.yA_members[c][mv]) {
                    t.push_back({yi, -1});
                }
                m.add_constraint(t, S::le, 0, 30);
            }
        }
    }
    for (std::size_t q = 0; q < n; ++q) {
        const auto& T = L.at[q];
        for (std::size_t fid = 0; fid < F; ++fid) {
            for (std::size_t c = 0; c < L.coalitions.size(); ++c) {
                if (!L.quantified[c]) {
                    continue;
                }
                const auto& sp = T.split[c];
                const auto& ybar = T.yA[L.complement[c]];
                for (std::size_t mv = 0; mv < sp.moves; ++mv) {
                    for (std::size_t co = 0; co < sp.comoves; ++co) {
                        const auto sv = T.s[fid][c][mv][co];
                        const auto xv = L.at[sp.successor[mv][co]].x[fid];
                        m.add_constraint({{sv, 1}, {ybar[co], -1}}, S::ge, 0, 32);
                        m.add_constraint({{sv, 1}, {xv, -1}}, S::ge, 0, 33);
                        m.add_constraint({{sv, 1}, {ybar[co], -1}, {xv, -1}}, S::le, 0, 34);
                    }
                }
            }
        }
    }
    for (std::size_t q = 0; q < n; ++q) {
        const auto& T = L.at[q];
        for (std::size_t fid = 0; fid < F; ++fid) {
            for (std::size_t c = 0; c < L.coalitions.size(); ++c) {
                if (!L.quantified[c]) {
                    continue;
                }
                const auto& sp = T.split[c];
                for (std::size_t mv = 0; mv < sp.moves; ++mv) {
                    const auto zv = T.z[fid][c][mv];
                    std::vector<Term> all{{zv, 1}};
                    for (std::size_t co = 0; co < sp.comoves; ++co) {
                        m.add_constraint({{zv, 1}, {T.s[fid][c][mv][co], -1}}, S::le, 0, 36);
                        all.push_back({T.s[fid][c][mv][co], -1});
                    }
                    m.add_constraint(all, S::ge, 1 - static_cast<long long>(sp.comoves), 37);
                }
            }
        }
    }
    for (std::size_t q = 0; q < n; ++q) {
        const auto& T = L.at[q];
        for (std::size_t fid = 0; fid < F; ++fid) {
            const auto& node = L.nodes[fid];
            if (node.kind == Formula::Kind::prop) {
                const bool on = L.labelled[q][*node.proposition] != 0;
                m.add_constraint({{T.x[fid], 1}}, S::eq, on ? 1 : 0, on ? 38 : 39);
            } else if (node.kind == Formula::Kind::truth) {
                m.add_constraint({{T.x[fid], 1}}, S::eq, 1, 38);
            }
        }
    }
    for (std::size_t q = 0; q < n; ++q) {
        const auto& T = L.at[q];
        for (std::size_t fid = 0; fid < F; ++fid) {
            const auto& node = L.nodes[fid];
            if (node.kind == Formula::Kind::neg) {
                m.add_constraint({{T.x[fid], 1}, {T.x[node.lhs], 1}}, S::eq, 1, 40);
            } else if (node.kind == Formula::Kind::disj) {
                m.add_constraint({{T.x[fid], 1}, {T.x[node.lhs], -1}}, S::ge, 0, 41);
                m.add_constraint({{T.x[fid], 1}, {T.x[node.rhs], -1}}, S::ge, 0, 42);
                m.add_constraint({{T.x[fid], 1}, {T.x[node.lhs], -1}, {T.x[node.rhs], -1}}, S::le, 0, 43);
            }
        }
    }
    for (std::size_t q = 0; q < n; ++q) {
        const auto& T = L.at[q];
        for (std::size_t fid = 0; fid < F; ++fid) {
            for (std::size_t c = 0; c < L.coalitions.size(); ++c) {
                if (!L.quantified[c]) {
                    continue;
                }
                for (std::size_t mv = 0; mv < T.split[c].moves; ++mv) {
                    const auto ev = T.e[fid][c][mv];
                    const auto zv = T.z[fid][c][mv];
                    const auto ya = T.yA[c][mv];
                    m.add_constraint({{ev, 1}, {zv, -1}, {ya, 1}}, S::ge, 0, 45);
                    m.add_constraint({{ev, 1}, {zv, -1}}, S::le, 0, 46);
                    m.add_constraint({{ev, 1}, {ya, 1}}, S::le, 1, 47);
                }
            }
        }
    }
    for (std::size_t q = 0; q < n; ++q) {
        const auto& T = L.at[q];
        for (std::size_t fid = 0; fid < F; ++fid) {
            const auto& node = L.nodes[fid];
            const auto xv = T.x[fid];
            if (node.kind == Formula::Kind::next) {
                const auto& es = T.e[node.lhs][node.coalition];
                std::vector<Term> sum{{xv, 1}};
                for (const auto ev : es) {
                    m.add_constraint({{xv, 1}, {ev, -1}}, S::ge, 0, 48);
                    sum.push_back({ev, -1});
                }
                m.add_constraint(sum, S::le, 0, 49);
            } else if (node.kind == Formula::Kind::until) {
                const auto rv = T.r[fid];
                const auto& es = T.e[fid][node.coalition];
                m.add_constraint({{rv, 1}, {T.x[node.lhs], -1}}, S::le, 0, 51);
                std::vector<Term> sum{{rv, 1}};
                for (const auto ev : es) {
                    sum.push_back({ev, -1});
                }
                m.add_constraint(sum, S::le, 0, 52);
                for (const auto ev : es) {
                    m.add_constraint({{rv, 1}, {T.x[node.lhs], -1}, {ev, -1}}, S::ge, -1, 53);
                }
                m.add_constraint({{xv, 1}, {T.x[node.rhs], -1}}, S::ge, 0, 54);
                m.add_constraint({{xv, 1}, {rv, -1}}, S::ge, 0, 55);
                m.add_constraint({{xv, 1}, {T.x[node.rhs], -1}, {rv, -1}}, S::le, 0, 56);
            } else if (node.kind == Formula::Kind::always) {
                const auto& es = T.e[fid][node.coalition];
                m.add_constraint({{xv, 1}, {T.x[node.lhs], -1}}, S::le, 0, 57);
                std::vector<Term> sum{{xv, 1}};
                for (const auto ev : es) {
                    sum.push_back({ev, -1});
                }
                m.add_constraint(sum, S::le, 0, 58);
                for (const auto ev : es) {
                    m.add_constraint({{xv, 1}, {T.x[node.lhs], -1}, {ev, -1}}, S::ge, -1, 59);
                }
            }
        }
    }
    return m;
}

IlpModel build_dom_sl(const Ccgs& s, const FeatureSet& f, const BidProfile& bids) {
    const auto lambdas = virtual_costs(s, bids);
    return build_dom_sl_virtual(s, f, lambdas);
}

void add_fixed_count(IlpModel& m, std::size_t agent, std::size_t n) {
    const auto& L = m.layout();
    if (agent >= L.agents) {
        throw InputError("agent " + std::to_string(agent + 1) + " out of range");
    }
    std::vector<Term> t;
    for (const auto& T : L.at) {
        for (const auto v : T.y[agent]) {
            t.push_back({v, 1});
        }
    }
    m.add_constraint(t, Sense::eq, static_cast<long long>(n), 60);
}

IlpModel build_dom_in_sl(const Ccgs& s, const FeatureSet& f, const BidProfile& bids, std::size_t agent,
                         std::size_t n) {
    IlpModel m = build_dom_sl(s, f, bids);
    add_fixed_count(m, agent, n);
    return m;
}

std::uint64_t size_bound(const IlpLayout& L) {
    const std::uint64_t cl = L.closure.size();
    return 39ULL * L.agents * L.transitions * L.states * cl * cl;
}

// ----------------------------------------------------------------- emit_lp

namespace {

std::string number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

template <typename Coef>
void write_terms(std::ostream& out, const IlpModel& m, const std::vector<std::pair<std::size_t, Coef>>& terms) {
    std::size_t on_line = 0;
    for (std::size_t t = 0; t < terms.size(); ++t) {
        const auto [var, coef] = terms[t];
        const bool negative = coef < 0;
        const auto magnitude = negative ? -coef : coef;
        if (on_line == 8) {
            out << "\n   ";
            on_line = 0;
        }
        if (t == 0) {
            out << (negative ? "- " : "");
        } else {
            out << (negative ? " - " : " + ");
        }
        if (magnitude != 1) {
            if constexpr (std::is_same_v<Coef, double>) {
                out << number(magnitude) << ' ';
            } else {
                out << magnitude << ' ';
            }
        }
        out << m.variables()[var].name;
        ++on_line;
    }
}

}  // namespace

void emit_lp(const IlpModel& m, std::ostream& out, bool families) {
    out << "\\ dominant social law\n";
    out << "Maximize\n obj: ";
    if (m.objective().empty()) {
        if (!m.variables().empty()) {
            out << "0 " << m.variables().front().name;
        } else {
            out << "0";
        }
    } else {
        write_terms<double>(out, m, m.objective());
    }
    out << "\nSubject To\n";
    std::size_t row = 0;
    for (const auto& c : m.constraints()) {
        ++row;
        if (families) {
            out << "\\ family (" << c.family << ")\n";
        }
        out << " c" << row << ": ";
        std::vector<std::pair<std::size_t, long long>> terms;
        for (const auto& t : c.terms) {
            terms.emplace_back(t.var, t.coef);
        }
        if (terms.empty()) {
            // keep the row well-formed; an empty left side is 0
            out << "0 " << m.variables().front().name;
        } else {
            write_terms<long long>(out, m, terms);
        }
        out << (c.sense == Sense::le ? " <= " : c.sense == Sense::ge ? " >= " : " = ") << c.rhs << '\n';
    }
    out << "Binary\n";
    for (const auto& v : m.variables()) {
        out << ' ' << v.name << '\n';
    }
    out << "End\n";
}

std::string emit_lp_string(const IlpModel& m, bool families) {
    std::ostringstream out;
    emit_lp(m, out, families);
    return out.str();
}

// ---------------------------------------------------------------- solving

bool objective_ties(double a, double b) {
    return std::abs(a - b) <= 1e-9 * (1.0 + std::max(std::abs(a), std::abs(b)));
}

bool prefer_candidate(double g, std::size_t count, const std::vector<std::uint8_t>& bits, double best_g,
                      std::size_t best_count, const std::vector<std::uint8_t>& best_bits) {
    if (!objective_ties(g, best_g)) {
        return g > best_g;
    }
    if (count != best_count) {
        return count < best_count;
    }
    return bits < best_bits;
}

int Assignment::value(const IlpModel& m, std::string_view name) const {
    const auto v = m.find(name);
    if (!v) {
        throw InputError("no variable named \"" + std::string(name) + "\"");
    }
    return values[*v];
}

namespace {

// Recomputes x from the y's by fixpoint iteration over the restricted structure.
class Deriver {
public:
    explicit Deriver(const IlpLayout& L) : L_(L) {
        alive_.resize(L.states);
        for (std::size_t q = 0; q < L.states; ++q) {
            alive_[q].assign(L.at[q].successor.size(), 1);
        }
        x_.assign(L.closure.size(), std::vector<std::uint8_t>(L.states, 0));
        next_.assign(L.states, 0);
    }

    // forbidden(var) tells whether a y variable is set.
    template <typename Forbidden>
    void set_law(Forbidden&& forbidden) {
        for (std::size_t q = 0; q < L_.states; ++q) {
            const auto& T = L_.at[q];
            for (std::size_t j = 0; j < T.successor.size(); ++j) {
                bool ok = true;
                for (std::size_t i = 0; i < L_.agents && ok; ++i) {
                    ok = !forbidden(T.y[i][T.joint[j][i]]);
                }
                alive_[q][j] = ok ? 1 : 0;
            }
        }
    }

    const std::vector<std::vector<std::uint8_t>>& derive() {
        using K = Formula::Kind;
        for (std::size_t fid = 0; fid < L_.closure.size(); ++fid) {
            const auto& node = L_.nodes[fid];
            auto& out = x_[fid];
            switch (node.kind) {
                case K::prop:
                    for (std::size_t q = 0; q < L_.states; ++q) {
                        out[q] = L_.labelled[q][*node.proposition];
                    }
                    break;
                case K::truth: std::fill(out.begin(), out.end(), 1); break;
                case K::neg:
                    for (std::size_t q = 0; q < L_.states; ++q) {
                        out[q] = x_[node.lhs][q] ? 0 : 1;
                    }
                    break;
                case K::disj:
                    for (std::size_t q = 0; q < L_.states; ++q) {
                        out[q] = (x_[node.lhs][q] || x_[node.rhs][q]) ? 1 : 0;
                    }
                    break;
                case K::next:
                    for (std::size_t q = 0; q < L_.states; ++q) {
                        out[q] = pre(q, node.coalition, x_[node.lhs]);
                    }
                    break;
                case K::always: {
                    out = x_[node.lhs];
                    bool changed = true;
                    while (changed) {
                        changed = false;
                        for (std::size_t q = 0; q < L_.states; ++q) {
                            next_[q] = (x_[node.lhs][q] && pre(q, node.coalition, out)) ? 1 : 0;
                        }
                        changed = next_ != out;
                        out = next_;
                    }
                    break;
                }
                case K::until: {
                    out = x_[node.rhs];
                    bool changed = true;
                    while (changed) {
                        changed = false;
                        for (std::size_t q = 0; q < L_.states; ++q) {
                            next_[q] =
                                (x_[node.rhs][q] || (x_[node.lhs][q] && pre(q, node.coalition, out))) ? 1 : 0;
                        }
                        changed = next_ != out;
                        out = next_;
                    }
                    break;
                }
                default: throw InternalError("sugar in a layout closure");
            }
        }
        return x_;
    }

private:
    std::uint8_t pre(std::size_t q, std::size_t c, const std::vector<std::uint8_t>& target) {
        const auto& T = L_.at[q];
        const std::size_t moves = T.yA[c].size();
        seen_.assign(moves, 0);
        bad_.assign(moves, 0);
        for (std::size_t j = 0; j < T.successor.size(); ++j) {
            if (!alive_[q][j]) {
                continue;
            }
            const auto mv = T.move_of[c][j];
            seen_[mv] = 1;
            if (!target[T.successor[j]]) {
                bad_[mv] = 1;
            }
        }
        for (std::size_t mv = 0; mv < moves; ++mv) {
            if (seen_[mv] && !bad_[mv]) {
                return 1;
            }
        }
        return 0;
    }

    const IlpLayout& L_;
    std::vector<std::vector<std::uint8_t>> alive_;
    std::vector<std::vector<std::uint8_t>> x_;
    std::vector<std::uint8_t> next_;
    std::vector<std::uint8_t> seen_;
    std::vector<std::uint8_t> bad_;
};

double evaluate_objective(const IlpModel& m, const std::vector<std::uint8_t>& values) {
    double g = 0.0;
    for (const auto& [var, coef] : m.objective()) {
        if (values[var]) {
            g += coef;
        }
    }
    return g;
}

}  // namespace

Assignment derive_assignment(const IlpModel& m, const std::vector<std::uint8_t>& y) {
    const auto& L = m.layout();
    if (y.size() != L.y_vars.size()) {
        throw InputError("expected " + std::to_string(L.y_vars.size()) + " y values");
    }
    Assignment a;
    a.values.assign(m.variables().size(), 0);
    for (std::size_t p = 0; p < y.size(); ++p) {
        a.values[L.y_vars[p]] = y[p] ? 1 : 0;
    }
    auto& v = a.values;
    Deriver d(L);
    d.set_law([&](std::size_t var) { return v[var] != 0; });
    const auto& x = d.derive();
    for (std::size_t q = 0; q < L.states; ++q) {
        const auto& T = L.at[q];
        for (std::size_t fid = 0; fid < L.closure.size(); ++fid) {
            v[T.x[fid]] = x[fid][q];
        }
        for (std::size_t c = 0; c < L.coalitions.size(); ++c) {
            for (std::size_t mv = 0; mv < T.yA[c].size(); ++mv) {
                std::uint8_t any = 0;
                for (const auto yi : T.yA_members[c][mv]) {
                    any = any || v[yi];
                }
                v[T.yA[c][mv]] = any;
            }
        }
    }
    for (std::size_t q = 0; q < L.states; ++q) {
        const auto& T = L.at[q];
        for (std::size_t fid = 0; fid < L.closure.size(); ++fid) {
            for (std::size_t c = 0; c < L.coalitions.size(); ++c) {
                if (!L.quantified[c]) {
                    continue;
                }
                const auto& sp = T.split[c];
                const auto& ybar = T.yA[L.complement[c]];
                for (std::size_t mv = 0; mv < sp.moves; ++mv) {
                    std::uint8_t all = 1;
                    for (std::size_t co = 0; co < sp.comoves; ++co) {
                        const std::uint8_t sv = (v[ybar[co]] || x[fid][sp.successor[mv][co]]) ? 1 : 0;
                        v[T.s[fid][c][mv][co]] = sv;
                        all = all && sv;
                    }
                    v[T.z[fid][c][mv]] = all;
                    v[T.e[fid][c][mv]] = (all && !v[T.yA[c][mv]]) ? 1 : 0;
                }
            }
            if (T.r[fid] != no_var) {
                const auto& node = L.nodes[fid];
                std::uint8_t any = 0;
                for (const auto ev : T.e[fid][node.coalition]) {
                    any = any || v[ev];
                }
                v[T.r[fid]] = (x[node.lhs][q] && any) ? 1 : 0;
            }
        }
    }
    a.objective = evaluate_objective(m, v);
    return a;
}

std::optional<Assignment> solve_exact(const IlpModel& m, SolveStats* stats) {
    const auto& L = m.layout();
    const std::size_t Y = L.y_vars.size();
    const std::size_t V = m.variables().size();

    std::vector<std::size_t> y_pos(V, no_var);
    for (std::size_t p = 0; p < Y; ++p) {
        y_pos[L.y_vars[p]] = p;
    }

    // Constraints over y alone are enforced during the search; the rest are
    // implied by the derivation and checked on the winner.
    struct Row {
        Sense sense;
        long long rhs;
        long long lhs = 0;
        long long min_rest = 0;  // sum of negative coefficients still open
        long long max_rest = 0;
    };
    std::vector<Row> rows;
    std::vector<std::vector<std::pair<std::size_t, long long>>> touches(Y);  // per y position: (row, coef)
    for (const auto& c : m.constraints()) {
        const bool y_only = std::all_of(c.terms.begin(), c.terms.end(),
                                        [&](const Term& t) { return y_pos[t.var] != no_var; });
        if (!y_only) {
            continue;
        }
        Row r{c.sense, c.rhs};
        for (const auto& t : c.terms) {
            (t.coef < 0 ? r.min_rest : r.max_rest) += t.coef;
            touches[y_pos[t.var]].emplace_back(rows.size(), t.coef);
        }
        rows.push_back(r);
    }
    auto row_ok = [](const Row& r) {
        const bool below = r.lhs + r.min_rest <= r.rhs;  // can still reach <= rhs
        const bool above = r.lhs + r.max_rest >= r.rhs;
        switch (r.sense) {
            case Sense::le: return below;
            case Sense::ge: return above;
            case Sense::eq: return below && above;
        }
        return false;
    };
    for (const auto& r : rows) {
        if (!row_ok(r)) {
            return std::nullopt;
        }
    }

    // Objective pieces.
    std::vector<double> y_coef(Y, 0.0);
    std::vector<std::tuple<std::size_t, std::size_t, double>> x_terms;  // (fid, q, coef)
    std::vector<std::pair<std::size_t, std::size_t>> x_where(V, {no_var, no_var});
    for (std::size_t q = 0; q < L.states; ++q) {
        for (std::size_t fid = 0; fid < L.closure.size(); ++fid) {
            x_where[L.at[q].x[fid]] = {fid, q};
        }
    }
    bool other_terms = false;
    double x_ceiling = 0.0;
    for (const auto& [var, coef] : m.objective()) {
        if (y_pos[var] != no_var) {
            y_coef[y_pos[var]] += coef;
        } else if (x_where[var].first != no_var) {
            x_terms.emplace_back(x_where[var].first, x_where[var].second, coef);
            x_ceiling += std::max(coef, 0.0);
        } else {
            other_terms = true;
            x_ceiling += std::max(coef, 0.0);
        }
    }
    // suffix_gain[p] = best possible contribution of y positions p..Y-1
    std::vector<double> suffix_gain(Y + 1, 0.0);
    for (std::size_t p = Y; p-- > 0;) {
        suffix_gain[p] = suffix_gain[p + 1] + std::max(y_coef[p], 0.0);
    }

    Deriver deriver(L);
    std::vector<std::uint8_t> y(Y, 0);
    std::vector<std::uint8_t> best_y;
    double best_g = 0.0;
    std::size_t best_count = 0;
    bool found = false;
    SolveStats local;

    auto leaf_value = [&]() -> double {
        if (other_terms) {
            return derive_assignment(m, y).objective;
        }
        deriver.set_law([&](std::size_t var) { return y[y_pos[var]] != 0; });
        const auto& x = deriver.derive();
        double g = 0.0;
        for (const auto& [fid, q, coef] : x_terms) {
            if (x[fid][q]) {
                g += coef;
            }
        }
        for (std::size_t p = 0; p < Y; ++p) {
            if (y[p]) {
                g += y_coef[p];
            }
        }
        return g;
    };

    double committed = 0.0;
    std::size_t count = 0;
    auto search = [&](auto&& self, std::size_t p) -> void {
        ++local.nodes;
        if (found) {
            const double bound = committed + suffix_gain[p] + x_ceiling;
            if (bound < best_g && !objective_ties(bound, best_g)) {
                return;
            }
        }
        if (p == Y) {
            ++local.leaves;
            const double g = leaf_value();
            if (!found || prefer_candidate(g, count, y, best_g, best_count, best_y)) {
                found = true;
                best_g = g;
                best_count = count;
                best_y = y;
            }
            return;
        }
        for (const std::uint8_t bit : {std::uint8_t{0}, std::uint8_t{1}}) {
            y[p] = bit;
            bool ok = true;
            for (const auto& [row, coef] : touches[p]) {
                auto& r = rows[row];
                (coef < 0 ? r.min_rest : r.max_rest) -= coef;
                r.lhs += bit * coef;
                ok = ok && row_ok(r);
            }
            if (ok) {
                committed += bit * y_coef[p];
                count += bit;
                self(self, p + 1);
                committed -= bit * y_coef[p];
                count -= bit;
            }
            for (const auto& [row, coef] : touches[p]) {
                auto& r = rows[row];
                (coef < 0 ? r.min_rest : r.max_rest) += coef;
                r.lhs -= bit * coef;
            }
        }
        y[p] = 0;
    };
    search(search, 0);
    if (stats) {
        *stats = local;
    }
    if (!found) {
        return std::nullopt;
    }
    Assignment a = derive_assignment(m, best_y);
    if (const auto bad = first_violation(m, a)) {
        throw InternalError("derived assignment violates constraint c" + std::to_string(*bad + 1) + " of family (" +
                            std::to_string(m.constraints()[*bad].family) + ")");
    }
    return a;
}

std::optional<std::size_t> first_violation(const IlpModel& m, const Assignment& a) {
    if (a.values.size() != m.variables().size()) {
        throw InputError("assignment size does not match the model");
    }
    for (std::size_t i = 0; i < m.constraints().size(); ++i) {
        const auto& c = m.constraints()[i];
        long long lhs = 0;
        for (const auto& t : c.terms) {
            lhs += t.coef * (a.values[t.var] ? 1 : 0);
        }
        const bool ok = c.sense == Sense::le ? lhs <= c.rhs : c.sense == Sense::ge ? lhs >= c.rhs : lhs == c.rhs;
        if (!ok) {
            return i;
        }
    }
    for (std::size_t v = 0; v < a.values.size(); ++v) {
        if (a.values[v] > 1) {
            return m.constraints().size();  // domain restriction
        }
    }
    return std::nullopt;
}

SocialLaw decode_law(const IlpModel& m, const Assignment& a, const Ccgs& s) {
    const auto& L = m.layout();
    if (L.states != s.state_count() || L.agents != s.agent_count()) {
        throw InputError("assignment was built for a different structure");
    }
    SocialLaw law;
    for (std::size_t q = 0; q < L.states; ++q) {
        for (std::size_t i = 0; i < L.agents; ++i) {
            if (L.at[q].y[i].size() != s.actions(i, q).size()) {
                throw InputError("assignment was built for a different structure");
            }
            for (std::size_t x = 0; x < L.at[q].y[i].size(); ++x) {
                if (a.values[L.at[q].y[i][x]]) {
                    law.forbid(i, q, x);
                }
            }
        }
    }
    return law;
}

AssignmentCheck verify_assignment(const IlpModel& m, const Assignment& a, const Ccgs& s, const FeatureSet& f) {
    auto fail = [](std::string why) { return AssignmentCheck{false, std::move(why)}; };
    const auto& L = m.layout();
    if (const auto bad = first_violation(m, a)) {
        if (*bad >= m.constraints().size()) {
            return fail("a variable is not binary");
        }
        return fail("constraint c" + std::to_string(*bad + 1) + " of family (" +
                    std::to_string(m.constraints()[*bad].family) + ") is violated");
    }
    const auto closure = union_closure(f);
    if (closure.size() != L.closure.size() ||
        !std::equal(closure.begin(), closure.end(), L.closure.begin())) {
        return fail("the model was built for a different feature set");
    }
    SocialLaw law;
    try {
        law = decode_law(m, a, s);
        validate_law(s, law);
    } catch (const InputError& e) {
        return fail(std::string("decoded law is invalid: ") + e.what());
    }
    const Ccgs restricted = apply_law(s, law);
    ModelChecker mc(restricted);
    const auto& v = a.values;
    for (std::size_t fid = 0; fid < L.closure.size(); ++fid) {
        const StateSet& sat = mc.check(L.closure[fid]);
        for (std::size_t q = 0; q < L.states; ++q) {
            if ((v[L.at[q].x[fid]] != 0) != sat.contains(q)) {
                return fail("x at state " + s.state_name(q) + " disagrees with the semantics of " + L.closure[fid].str());
            }
        }
    }
    for (std::size_t q = 0; q < L.states; ++q) {
        const auto& T = L.at[q];
        for (std::size_t c = 0; c < L.coalitions.size(); ++c) {
            for (std::size_t mv = 0; mv < T.yA[c].size(); ++mv) {
                bool any = false;
                for (const auto yi : T.yA_members[c][mv]) {
                    any = any || v[yi];
                }
                if ((v[T.yA[c][mv]] != 0) != any) {
                    return fail("coalition move variable " + m.variables()[T.yA[c][mv]].name + " is inconsistent");
                }
            }
        }
        for (std::size_t fid = 0; fid < L.closure.size(); ++fid) {
            for (std::size_t c = 0; c < L.coalitions.size(); ++c) {
                if (!L.quantified[c]) {
                    continue;
                }
                const auto& sp = T.split[c];
                const auto& ybar = T.yA[L.complement[c]];
                for (std::size_t mv = 0; mv < sp.moves; ++mv) {
                    bool all = true;
                    for (std::size_t co = 0; co < sp.comoves; ++co) {
                        const bool expect = v[ybar[co]] || v[L.at[sp.successor[mv][co]].x[fid]];
                        const bool got = v[T.s[fid][c][mv][co]] != 0;
                        if (expect != got) {
                            return fail("s variable " + m.variables()[T.s[fid][c][mv][co]].name + " is inconsistent");
                        }
                        all = all && got;
                    }
                    if ((v[T.z[fid][c][mv]] != 0) != all) {
                        return fail("z variable " + m.variables()[T.z[fid][c][mv]].name + " is inconsistent");
                    }
                    const bool e = !v[T.yA[c][mv]] && v[T.z[fid][c][mv]];
                    if ((v[T.e[fid][c][mv]] != 0) != e) {
                        return fail("e variable " + m.variables()[T.e[fid][c][mv]].name + " is inconsistent");
                    }
                }
            }
            if (T.r[fid] != no_var) {
                const auto& node = L.nodes[fid];
                bool any = false;
                for (std::size_t mv = 0; mv < T.yA[node.coalition].size(); ++mv) {
                    any = any || (!v[T.yA[node.coalition][mv]] && v[T.z[fid][node.coalition][mv]]);
                }
                if ((v[T.r[fid]] != 0) != (v[T.x[node.lhs]] && any)) {
                    return fail("r variable " + m.variables()[T.r[fid]].name + " is inconsistent");
                }
            }
        }
    }
    return {};
}

// ------------------------------------------------------- weighted MAX-SAT

namespace {

void require_propositional(const Formula& f, const std::set<std::string>& vars) {
    using K = Formula::Kind;
    switch (f.kind()) {
        case K::prop:
            if (!vars.count(f.name())) {
                throw InputError("clause mentions undeclared variable \"" + f.name() + "\"");
            }
            return;
        case K::truth: return;
        case K::neg:
        case K::disj:
        case K::conj:
        case K::imp:
            for (std::size_t i = 0; i < f.arity(); ++i) {
                require_propositional(f.child(i), vars);
            }
            return;
        default: throw InputError("clauses must be propositional");
    }
}

bool holds(const Formula& f, const std::map<std::string, bool>& value) {
    using K = Formula::Kind;
    switch (f.kind()) {
        case K::prop: return value.at(f.name());
        case K::truth: return true;
        case K::neg: return !holds(f.child(0), value);
        case K::disj: return holds(f.child(0), value) || holds(f.child(1), value);
        case K::conj: return holds(f.child(0), value) && holds(f.child(1), value);
        case K::imp: return !holds(f.child(0), value) || holds(f.child(1), value);
        default: throw InputError("clauses must be propositional");
    }
}

Formula lift(const Formula& f) {
    using K = Formula::Kind;
    switch (f.kind()) {
        case K::prop: return Formula::next({1}, f);
        case K::truth: return f;
        case K::neg: return Formula::neg(lift(f.child(0)));
        case K::disj: return Formula::disj(lift(f.child(0)), lift(f.child(1)));
        case K::conj: return Formula::conj(lift(f.child(0)), lift(f.child(1)));
        case K::imp: return Formula::imp(lift(f.child(0)), lift(f.child(1)));
        default: throw InputError("clauses must be propositional");
    }
}

void check_instance(const MaxWSatInstance& inst) {
    if (inst.vars.size() > maxwsat_var_limit) {
        throw InputError("at most " + std::to_string(maxwsat_var_limit) + " variables are supported, got " +
                         std::to_string(inst.vars.size()));
    }
    const std::set<std::string> vars(inst.vars.begin(), inst.vars.end());
    if (vars.size() != inst.vars.size()) {
        throw InputError("duplicate variable name");
    }
    for (const auto& v : inst.vars) {
        if (v == "true" || v == "false" || v == "X" || v == "G" || v == "F" || v == "U" || v.empty() ||
            !std::all_of(v.begin(), v.end(), [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; })) {
            throw InputError("\"" + v + "\" is not a valid variable name");
        }
    }
    for (const auto& c : inst.clauses) {
        require_propositional(c.formula, vars);
        if (!std::isfinite(c.weight) || c.weight < 0) {
            throw InputError("clause weights must be nonnegative");
        }
    }
}

}  // namespace

MaxWSatInstance load_maxwsat(const nlohmann::json& doc) {
    if (!doc.is_object()) {
        throw InputError("clause document must be an object");
    }
    MaxWSatInstance inst;
    if (doc.contains("vars")) {
        if (!doc["vars"].is_array()) {
            throw InputError("\"vars\" must be an array of names");
        }
        for (const auto& v : doc["vars"]) {
            if (!v.is_string()) {
                throw InputError("\"vars\" must be an array of names");
            }
            inst.vars.push_back(v.get<std::string>());
        }
    }
    if (inst.vars.size() > maxwsat_var_limit) {
        throw InputError("at most " + std::to_string(maxwsat_var_limit) + " variables are supported, got " +
                         std::to_string(inst.vars.size()));
    }
    if (doc.contains("clauses")) {
        if (!doc["clauses"].is_array()) {
            throw InputError("\"clauses\" must be an array");
        }
        std::size_t index = 0;
        for (const auto& c : doc["clauses"]) {
            if (!c.is_object() || !c.contains("formula") || !c["formula"].is_string() || !c.contains("weight") ||
                !c["weight"].is_number()) {
                throw InputError("clause " + std::to_string(index) + " needs \"formula\" and numeric \"weight\"");
            }
            try {
                inst.clauses.push_back({parse_formula(c["formula"].get<std::string>()), c["weight"].get<double>()});
            } catch (const InputError& e) {
                throw InputError("clause " + std::to_string(index) + ": " + e.what());
            }
            ++index;
        }
    }
    check_instance(inst);
    return inst;
}

nlohmann::json save_maxwsat(const MaxWSatInstance& inst) {
    auto clauses = nlohmann::json::array();
    for (const auto& c : inst.clauses) {
        clauses.push_back({{"formula", c.formula.str()}, {"weight", c.weight}});
    }
    return nlohmann::json{{"vars", inst.vars}, {"clauses", clauses}};
}

std::pair<Ccgs, FeatureSet> gen_maxwsat_instance(const MaxWSatInstance& inst) {
    check_instance(inst);
    CcgsBuilder b(1);
    b.add_state("qs").set_initial("qs");
    std::vector<std::string> actions{"a0"};
    for (std::size_t j = 0; j < inst.vars.size(); ++j) {
        const auto state = "q" + std::to_string(j + 1);
        b.add_state(state);
        b.add_proposition(inst.vars[j]);
        b.add_label(state, inst.vars[j]);
        b.set_actions(state, 0, {"a0"});
        b.add_transition(state, {"a0"}, state);
        actions.push_back("a" + std::to_string(j + 1));
        b.add_transition("qs", {actions.back()}, state);
    }
    b.set_actions("qs", 0, actions);
    b.add_transition("qs", {"a0"}, "qs");
    b.set_cost_model(0, CostDistribution::zero_virtual());
    FeatureSet f;
    for (const auto& c : inst.clauses) {
        f.add(lift(c.formula), c.weight);
    }
    return {b.build(), f};
}

double maxwsat_optimum(const MaxWSatInstance& inst) {
    check_instance(inst);
    const std::size_t n = inst.vars.size();
    double best = 0.0;
    std::map<std::string, bool> value;
    for (std::uint64_t bits = 0; bits < (std::uint64_t{1} << n); ++bits) {
        for (std::size_t j = 0; j < n; ++j) {
            value[inst.vars[j]] = ((bits >> j) & 1U) != 0;
        }
        double w = 0.0;
        for (const auto& c : inst.clauses) {
            if (holds(c.formula, value)) {
                w += c.weight;
            }
        }
        best = std::max(best, w);
    }
    return best;
}

}  // namespace sls
