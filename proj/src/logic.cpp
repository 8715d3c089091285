#include "sls/logic.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "sls/error.hpp"

namespace sls {

std::string coalition_string(const Coalition& c, char sep) {
    std::string out;
    for (std::size_t i = 0; i < c.size(); ++i) {
        if (i) {
            out += sep;
        }
        out += std::to_string(c[i]);
    }
    return out;
}

std::uint32_t coalition_mask(const Coalition& c) {
    std::uint32_t m = 0;
    for (const auto a : c) {
        m |= std::uint32_t{1} << (a - 1);
    }
    return m;
}

// ------------------------------------------------------------------ Formula

Formula Formula::make(Kind kind, std::string name, Coalition c, std::vector<Formula> children) {
    auto n = std::make_shared<Node>();
    n->kind = kind;
    n->name = std::move(name);
    std::sort(c.begin(), c.end());
    c.erase(std::unique(c.begin(), c.end()), c.end());
    for (const auto a : c) {
        if (a == 0 || a > 32) {
            throw InputError("coalition member " + std::to_string(a) + " out of range");
        }
    }
    n->coalition = std::move(c);
    n->children = std::move(children);
    n->core = kind != Kind::conj && kind != Kind::imp && kind != Kind::eventually;
    for (const auto& ch : n->children) {
        n->core = n->core && ch.is_core();
    }
    const auto q = "<<" + coalition_string(n->coalition) + ">> ";
    const auto& ch = n->children;
    switch (kind) {
        case Kind::prop: n->text = n->name; break;
        case Kind::truth: n->text = "true"; break;
        case Kind::neg: n->text = "(!" + ch[0].str() + ")"; break;
        case Kind::disj: n->text = "(" + ch[0].str() + " | " + ch[1].str() + ")"; break;
        case Kind::conj: n->text = "(" + ch[0].str() + " & " + ch[1].str() + ")"; break;
        case Kind::imp: n->text = "(" + ch[0].str() + " -> " + ch[1].str() + ")"; break;
        case Kind::next: n->text = "(" + q + "X " + ch[0].str() + ")"; break;
        case Kind::always: n->text = "(" + q + "G " + ch[0].str() + ")"; break;
        case Kind::eventually: n->text = "(" + q + "F " + ch[0].str() + ")"; break;
        case Kind::until: n->text = "(" + q + "(" + ch[0].str() + " U " + ch[1].str() + "))"; break;
    }
    return Formula(std::move(n));
}

Formula Formula::prop(std::string name) { return make(Kind::prop, std::move(name), {}, {}); }
Formula Formula::truth() { return make(Kind::truth, {}, {}, {}); }
Formula Formula::falsity() { return neg(truth()); }
Formula Formula::neg(Formula f) { return make(Kind::neg, {}, {}, {std::move(f)}); }
Formula Formula::disj(Formula a, Formula b) { return make(Kind::disj, {}, {}, {std::move(a), std::move(b)}); }
Formula Formula::conj(Formula a, Formula b) { return make(Kind::conj, {}, {}, {std::move(a), std::move(b)}); }
Formula Formula::imp(Formula a, Formula b) { return make(Kind::imp, {}, {}, {std::move(a), std::move(b)}); }
Formula Formula::next(Coalition c, Formula f) { return make(Kind::next, {}, std::move(c), {std::move(f)}); }
Formula Formula::always(Coalition c, Formula f) { return make(Kind::always, {}, std::move(c), {std::move(f)}); }
Formula Formula::eventually(Coalition c, Formula f) {
    return make(Kind::eventually, {}, std::move(c), {std::move(f)});
}
Formula Formula::until(Coalition c, Formula a, Formula b) {
    return make(Kind::until, {}, std::move(c), {std::move(a), std::move(b)});
}

// ------------------------------------------------------------------- parser

namespace {

bool word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_'; }

class Parser {
public:
    explicit Parser(std::string_view text) : text_(text) {}

    Formula parse() {
        Formula f = implication();
        skip();
        if (pos_ < text_.size()) {
            fail("unexpected '" + std::string(1, text_[pos_]) + "'");
        }
        return f;
    }

private:
    [[noreturn]] void fail(const std::string& what) const {
        if (pos_ >= text_.size()) {
            throw InputError("syntax error at end of input: " + what);
        }
        throw InputError("syntax error at column " + std::to_string(pos_ + 1) + ": " + what);
    }

    void skip() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_])) != 0) {
            ++pos_;
        }
    }

    bool accept(std::string_view tok) {
        skip();
        if (text_.substr(pos_, tok.size()) == tok) {
            pos_ += tok.size();
            return true;
        }
        return false;
    }

    void expect(std::string_view tok) {
        if (!accept(tok)) {
            fail("expected '" + std::string(tok) + "'");
        }
    }

    std::string_view peek_word() {
        skip();
        std::size_t end = pos_;
        while (end < text_.size() && word_char(text_[end])) {
            ++end;
        }
        return text_.substr(pos_, end - pos_);
    }

    Formula implication() {
        Formula lhs = disjunction();
        if (accept("->")) {
            return Formula::imp(std::move(lhs), implication());
        }
        return lhs;
    }

    Formula disjunction() {
        Formula f = conjunction();
        while (accept("|")) {
            f = Formula::disj(std::move(f), conjunction());
        }
        return f;
    }

    Formula conjunction() {
        Formula f = unary();
        while (accept("&")) {
            f = Formula::conj(std::move(f), unary());
        }
        return f;
    }

    Coalition coalition() {
        Coalition c;
        skip();
        if (accept(">>")) {
            return c;
        }
        while (true) {
            const auto w = peek_word();
            if (w.empty() || !std::all_of(w.begin(), w.end(), [](char ch) { return ch >= '0' && ch <= '9'; })) {
                fail("expected agent number");
            }
            if (w.size() > 2 || std::stoul(std::string(w)) == 0 || std::stoul(std::string(w)) > 32) {
                fail("agent number out of range");
            }
            c.push_back(std::stoul(std::string(w)));
            pos_ += w.size();
            if (accept(">>")) {
                return c;
            }
            expect(",");
        }
    }

    Formula unary() {
        skip();
        if (pos_ >= text_.size()) {
            fail("expected formula");
        }
        if (accept("!")) {
            return Formula::neg(unary());
        }
        if (accept("<<")) {
            Coalition c = coalition();
            if (accept("(")) {
                Formula lhs = implication();
                const auto w = peek_word();
                if (w != "U") {
                    fail("expected 'U'");
                }
                pos_ += 1;
                Formula rhs = implication();
                expect(")");
                return Formula::until(std::move(c), std::move(lhs), std::move(rhs));
            }
            const auto op = peek_word();
            if (op == "X" || op == "G" || op == "F") {
                pos_ += 1;
                Formula body = unary();
                if (op == "X") {
                    return Formula::next(std::move(c), std::move(body));
                }
                if (op == "G") {
                    return Formula::always(std::move(c), std::move(body));
                }
                return Formula::eventually(std::move(c), std::move(body));
            }
            fail("expected 'X', 'G', 'F' or '('");
        }
        if (accept("(")) {
            Formula f = implication();
            expect(")");
            return f;
        }
        const auto w = peek_word();
        if (w.empty()) {
            fail("unknown token '" + std::string(1, text_[pos_]) + "'");
        }
        if (w == "X" || w == "G" || w == "F" || w == "U") {
            fail("keyword '" + std::string(w) + "' needs a path quantifier");
        }
        pos_ += w.size();
        if (w == "true") {
            return Formula::truth();
        }
        if (w == "false") {
            return Formula::falsity();
        }
        return Formula::prop(std::string(w));
    }

    std::string_view text_;
    std::size_t pos_ = 0;
};

}  // namespace

Formula parse_formula(std::string_view text) { return Parser(text).parse(); }

Formula desugar(const Formula& f) {
    if (f.is_core()) {
        return f;
    }
    using K = Formula::Kind;
    switch (f.kind()) {
        case K::neg: return Formula::neg(desugar(f.child(0)));
        case K::disj: return Formula::disj(desugar(f.child(0)), desugar(f.child(1)));
        case K::conj:
            return Formula::neg(Formula::disj(Formula::neg(desugar(f.child(0))), Formula::neg(desugar(f.child(1)))));
        case K::imp: return Formula::disj(Formula::neg(desugar(f.child(0))), desugar(f.child(1)));
        case K::next: return Formula::next(f.coalition(), desugar(f.child(0)));
        case K::always: return Formula::always(f.coalition(), desugar(f.child(0)));
        case K::eventually: return Formula::until(f.coalition(), Formula::truth(), desugar(f.child(0)));
        case K::until: return Formula::until(f.coalition(), desugar(f.child(0)), desugar(f.child(1)));
        default: return f;
    }
}

// ------------------------------------------------------------------ closure

namespace {

void collect(const Formula& f, std::unordered_map<std::string, Formula>& out) {
    if (!out.emplace(f.str(), f).second) {
        return;
    }
    for (std::size_t i = 0; i < f.arity(); ++i) {
        collect(f.child(i), out);
    }
}

std::size_t closure_size(const Formula& f, std::unordered_map<std::string, std::size_t>& memo) {
    if (const auto it = memo.find(f.str()); it != memo.end()) {
        return it->second;
    }
    std::unordered_map<std::string, Formula> sub;
    collect(f, sub);
    memo.emplace(f.str(), sub.size());
    return sub.size();
}

}  // namespace

void sort_canonical(std::vector<Formula>& formulas) {
    std::unordered_map<std::string, std::size_t> memo;
    std::vector<std::pair<std::size_t, Formula>> keyed;
    for (const auto& f : formulas) {
        keyed.emplace_back(closure_size(f, memo), f);
    }
    std::sort(keyed.begin(), keyed.end(), [](const auto& a, const auto& b) {
        return a.first != b.first ? a.first < b.first : a.second.str() < b.second.str();
    });
    keyed.erase(std::unique(keyed.begin(), keyed.end(),
                            [](const auto& a, const auto& b) { return a.second.str() == b.second.str(); }),
                keyed.end());
    formulas.clear();
    for (auto& [size, f] : keyed) {
        formulas.push_back(std::move(f));
    }
}

std::vector<Formula> closure(const Formula& f) {
    std::unordered_map<std::string, Formula> all;
    collect(f, all);
    std::vector<Formula> out;
    out.reserve(all.size());
    for (auto& [text, g] : all) {
        out.push_back(g);
    }
    sort_canonical(out);
    return out;
}

// ------------------------------------------------------------ ModelChecker

ModelChecker::ModelChecker(const Ccgs& s) : s_(&s) {}

std::uint32_t ModelChecker::validate_coalition(const Coalition& c) const {
    for (const auto a : c) {
        if (a < 1 || a > s_->agent_count()) {
            throw InputError("coalition member " + std::to_string(a) + " out of range 1.." +
                             std::to_string(s_->agent_count()));
        }
    }
    return coalition_mask(c);
}

const std::vector<std::vector<std::uint32_t>>& ModelChecker::projection(std::uint32_t mask) {
    if (const auto it = projection_.find(mask); it != projection_.end()) {
        return it->second;
    }
    std::vector<std::vector<std::uint32_t>> table(s_->state_count());
    for (std::size_t q = 0; q < s_->state_count(); ++q) {
        table[q].resize(s_->joint_count(q));
        for (std::size_t j = 0; j < s_->joint_count(q); ++j) {
            std::uint32_t index = 0;
            for (std::size_t i = 0; i < s_->agent_count(); ++i) {
                if ((mask >> i) & 1U) {
                    index = index * static_cast<std::uint32_t>(s_->actions(i, q).size()) +
                            static_cast<std::uint32_t>(s_->action_of(q, j, i));
                }
            }
            table[q][j] = index;
        }
    }
    return projection_.emplace(mask, std::move(table)).first->second;
}

StateSet ModelChecker::pre(std::uint32_t mask, const StateSet& x) {
    const auto& proj = projection(mask);
    StateSet out(s_->state_count());
    std::vector<std::uint8_t> blocked;
    for (std::size_t q = 0; q < s_->state_count(); ++q) {
        std::size_t moves = 1;
        for (std::size_t i = 0; i < s_->agent_count(); ++i) {
            if ((mask >> i) & 1U) {
                moves *= s_->actions(i, q).size();
            }
        }
        blocked.assign(moves, 0);
        for (std::size_t j = 0; j < s_->joint_count(q); ++j) {
            if (!x.contains(s_->successor(q, j))) {
                blocked[proj[q][j]] = 1;
            }
        }
        if (std::find(blocked.begin(), blocked.end(), 0) != blocked.end()) {
            out.insert(q);
        }
    }
    return out;
}

const StateSet& ModelChecker::check(const Formula& f) {
    if (const auto it = memo_.find(f.str()); it != memo_.end()) {
        return it->second;
    }
    if (!f.is_core()) {
        StateSet result = check(desugar(f));
        return memo_.emplace(f.str(), std::move(result)).first->second;
    }
    const std::size_t n = s_->state_count();
    StateSet result(n);
    using K = Formula::Kind;
    switch (f.kind()) {
        case K::prop: {
            const auto p = s_->find_proposition(f.name());
            if (!p) {
                throw InputError("unknown proposition \"" + f.name() + "\"");
            }
            for (std::size_t q = 0; q < n; ++q) {
                if (s_->has_label(q, *p)) {
                    result.insert(q);
                }
            }
            break;
        }
        case K::truth: result = StateSet(n, true); break;
        case K::neg: result = check(f.child(0)).complement(); break;
        case K::disj:
            result = check(f.child(0));
            result |= check(f.child(1));
            break;
        case K::next: {
            const auto mask = validate_coalition(f.coalition());
            result = pre(mask, check(f.child(0)));
            break;
        }
        case K::always: {
            const auto mask = validate_coalition(f.coalition());
            const StateSet body = check(f.child(0));
            result = body;
            while (true) {
                StateSet next = pre(mask, result);
                next &= body;
                if (next == result) {
                    break;
                }
                result = std::move(next);
            }
            break;
        }
        case K::until: {
            const auto mask = validate_coalition(f.coalition());
            const StateSet hold = check(f.child(0));
            const StateSet goal = check(f.child(1));
            result = goal;
            while (true) {
                StateSet next = pre(mask, result);
                next &= hold;
                next |= goal;
                if (next == result) {
                    break;
                }
                result = std::move(next);
            }
            break;
        }
        default: throw InternalError("sugar reached the core checker");
    }
    return memo_.emplace(f.str(), std::move(result)).first->second;
}

StateSet model_check(const Ccgs& s, const Formula& f) {
    ModelChecker mc(s);
    return mc.check(f);
}

// ------------------------------------------------------------ bisimulation

namespace {

// out_sets[q][m_A] = sorted successor states reachable when A plays m_A.
std::vector<std::vector<std::vector<std::size_t>>> out_sets(const Ccgs& s, std::uint32_t mask) {
    std::vector<std::vector<std::vector<std::size_t>>> out(s.state_count());
    for (std::size_t q = 0; q < s.state_count(); ++q) {
        std::size_t moves = 1;
        for (std::size_t i = 0; i < s.agent_count(); ++i) {
            if ((mask >> i) & 1U) {
                moves *= s.actions(i, q).size();
            }
        }
        out[q].resize(moves);
        for (std::size_t j = 0; j < s.joint_count(q); ++j) {
            std::size_t index = 0;
            for (std::size_t i = 0; i < s.agent_count(); ++i) {
                if ((mask >> i) & 1U) {
                    index = index * s.actions(i, q).size() + s.action_of(q, j, i);
                }
            }
            out[q][index].push_back(s.successor(q, j));
        }
        for (auto& v : out[q]) {
            std::sort(v.begin(), v.end());
            v.erase(std::unique(v.begin(), v.end()), v.end());
        }
    }
    return out;
}

std::vector<std::string> label_names(const Ccgs& s, std::size_t q) {
    std::vector<std::string> names;
    for (const auto p : s.labels(q)) {
        names.push_back(s.propositions()[p]);
    }
    std::sort(names.begin(), names.end());
    return names;
}

}  // namespace

std::optional<BisimRelation> check_bisimulation(const Ccgs& s, const Ccgs& t) {
    if (s.agent_count() != t.agent_count()) {
        throw InputError("bisimulation needs the same agent set on both sides");
    }
    const std::size_t k = s.agent_count();
    if (k > 16) {
        throw InputError("bisimulation over more than 16 agents is not supported");
    }
    BisimRelation z(s.state_count(), std::vector<std::uint8_t>(t.state_count(), 0));
    for (std::size_t q = 0; q < s.state_count(); ++q) {
        const auto lq = label_names(s, q);
        for (std::size_t r = 0; r < t.state_count(); ++r) {
            z[q][r] = lq == label_names(t, r) ? 1 : 0;
        }
    }
    const std::uint32_t masks = std::uint32_t{1} << k;
    std::vector<std::vector<std::vector<std::vector<std::size_t>>>> outs_s;
    std::vector<std::vector<std::vector<std::vector<std::size_t>>>> outs_t;
    for (std::uint32_t m = 0; m < masks; ++m) {
        outs_s.push_back(out_sets(s, m));
        outs_t.push_back(out_sets(t, m));
    }
    // Every element of `b` is matched by some related element of `a`.
    auto covered = [&](const std::vector<std::size_t>& a, const std::vector<std::size_t>& b, bool a_is_left) {
        return std::all_of(b.begin(), b.end(), [&](std::size_t y) {
            return std::any_of(a.begin(), a.end(), [&](std::size_t x) { return a_is_left ? z[x][y] : z[y][x]; });
        });
    };
    bool changed = true;
    while (changed) {
        changed = false;
        for (std::size_t q = 0; q < s.state_count(); ++q) {
            for (std::size_t r = 0; r < t.state_count(); ++r) {
                if (!z[q][r]) {
                    continue;
                }
                bool ok = true;
                for (std::uint32_t m = 0; m < masks && ok; ++m) {
                    const auto& mine = outs_s[m][q];
                    const auto& theirs = outs_t[m][r];
                    for (const auto& ms : mine) {
                        if (!std::any_of(theirs.begin(), theirs.end(),
                                         [&](const auto& mt) { return covered(ms, mt, true); })) {
                            ok = false;
                            break;
                        }
                    }
                    for (const auto& mt : theirs) {
                        if (!ok) {
                            break;
                        }
                        if (!std::any_of(mine.begin(), mine.end(),
                                         [&](const auto& ms) { return covered(mt, ms, false); })) {
                            ok = false;
                        }
                    }
                }
                if (!ok) {
                    z[q][r] = 0;
                    changed = true;
                }
            }
        }
    }
    if (!z[s.initial()][t.initial()]) {
        return std::nullopt;
    }
    return z;
}

}  // namespace sls
