#include "sls/cli.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <ostream>
#include <random>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "sls/error.hpp"
#include "sls/ilp.hpp"
#include "sls/logic.hpp"
#include "sls/mechanism.hpp"
#include "sls/model.hpp"
#include "sls/valuation.hpp"

namespace sls {

namespace {

using json = nlohmann::json;

// Thrown by handlers when a checked property fails; carries the report.
struct PropertyViolation {
    int code = exit_violation;
};

std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

struct Inputs {
    std::string model;
    std::string features;
    std::string law;
    std::string bids;
    std::string backend = "ilp";
    std::string format = "human";
    int agent = 0;  // 1-based; 0 = not given
};

class Runner {
public:
    Runner(std::ostream& out, std::ostream& err) : out_(out), err_(err) {}

    bool json_out() const { return in.format == "json"; }

    Ccgs model() const {
        Ccgs s = load_model_file(in.model);
        if (!in.law.empty()) {
            s = apply_law(s, load_law_file(s, in.law));
        }
        return s;
    }
    Ccgs base_model() const { return load_model_file(in.model); }
    FeatureSet features() const { return load_features_file(in.features); }
    Backend backend() const { return parse_backend(in.backend); }

    BidProfile bids(const Ccgs& s) const {
        if (in.bids.empty()) {
            throw InputError("--bids is required");
        }
        BidProfile b = parse_bid_list(in.bids);
        validate_bids(s, b);
        return b;
    }

    std::size_t agent(const Ccgs& s) const {
        if (in.agent < 1 || static_cast<std::size_t>(in.agent) > s.agent_count()) {
            throw InputError("--agent must be between 1 and " + std::to_string(s.agent_count()));
        }
        return static_cast<std::size_t>(in.agent - 1);
    }

    void emit(const json& doc) const { out_ << doc.dump(2) << '\n'; }

    void write_file(const std::string& path, const std::string& text) const {
        std::ofstream f(path, std::ios::binary);
        if (!f || !(f << text) || !f.flush()) {
            throw InputError("cannot write \"" + path + "\"");
        }
    }

    void print_law(const Ccgs& s, const SocialLaw& law) const {
        const auto doc = save_law(s, law);
        if (doc["restrict"].empty()) {
            out_ << "law: (no restrictions)\n";
            return;
        }
        out_ << "law:\n";
        for (const auto& r : doc["restrict"]) {
            out_ << "  forbid agent " << r["agent"].get<std::size_t>() << " action " << r["action"].get<std::string>()
                 << " at " << r["state"].get<std::string>() << '\n';
        }
    }

    Inputs in;
    std::ostream& out_;
    std::ostream& err_;
};

void add_format(CLI::App* sub, Inputs& in) {
    sub->add_option("--format", in.format, "Output format")->check(CLI::IsMember({"human", "json"}));
}

void add_model(CLI::App* sub, Inputs& in) { sub->add_option("-m,--model", in.model, "Model file")->required(); }
void add_features(CLI::App* sub, Inputs& in) {
    sub->add_option("-F,--features", in.features, "Feature file")->required();
}
void add_bids(CLI::App* sub, Inputs& in) { sub->add_option("--bids", in.bids, "Bids, e.g. 10,15")->required(); }
void add_backend(CLI::App* sub, Inputs& in) {
    sub->add_option("--backend", in.backend, "Allocation backend")->check(CLI::IsMember({"ilp", "brute"}));
}

json report_allocation(const Ccgs& s, const Allocation& a) {
    return {{"law", save_law(s, a.law)},
            {"restricted_counts", a.counts},
            {"valuation", a.valuation},
            {"virtual_objective", a.g}};
}

void print_allocation(const Runner& r, const Ccgs& s, const Allocation& a) {
    r.print_law(s, a.law);
    for (std::size_t i = 0; i < a.counts.size(); ++i) {
        r.out_ << "agent " << i + 1 << ": " << a.counts[i] << " restricted\n";
    }
    r.out_ << "valuation: " << num(a.valuation) << "\nvirtual objective: " << num(a.g) << '\n';
}

void print_turning_points(const Runner& r, const TurningPoints& tp) {
    r.out_ << "agent " << tp.agent + 1 << " turning points from (" << num(tp.anchor_bid) << ", " << tp.anchor_count
           << "):";
    if (tp.points.empty()) {
        r.out_ << " none";
    }
    for (const auto& p : tp.points) {
        r.out_ << " (" << num(p.threshold) << ", " << p.count << ")";
    }
    r.out_ << '\n';
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    Runner r(out, err);
    Inputs& in = r.in;
    std::function<void()> action;

    CLI::App app{"Profit-optimal social laws for cost-aware concurrent game structures", "sls-tool"};
    app.require_subcommand(1);

    // ---- check
    std::string formula_text;
    auto* check = app.add_subcommand("check", "Model-check a formula at every state");
    add_model(check, in);
    check->add_option("-f,--formula", formula_text, "Formula")->required();
    check->add_option("-l,--law", in.law, "Apply this social law first");
    add_format(check, in);
    check->callback([&] {
        action = [&] {
            const Ccgs s = r.model();
            const Formula f = parse_formula(formula_text);
            const StateSet sat = model_check(s, f);
            if (r.json_out()) {
                json states = json::object();
                for (std::size_t q = 0; q < s.state_count(); ++q) {
                    states[s.state_name(q)] = sat.contains(q);
                }
                r.emit({{"formula", f.str()},
                        {"states", states},
                        {"initial", s.state_name(s.initial())},
                        {"holds_initially", sat.contains(s.initial())}});
                return;
            }
            out << f.str() << '\n';
            for (std::size_t q = 0; q < s.state_count(); ++q) {
                out << "  " << s.state_name(q) << (q == s.initial() ? " (initial)" : "") << ": "
                    << (sat.contains(q) ? "true" : "false") << '\n';
            }
        };
    });

    // ---- value
    auto* value = app.add_subcommand("value", "Valuation of a (restricted) structure");
    add_model(value, in);
    add_features(value, in);
    value->add_option("-l,--law", in.law, "Apply this social law first");
    add_format(value, in);
    value->callback([&] {
        action = [&] {
            const Ccgs s = r.model();
            const FeatureSet f = r.features();
            ModelChecker mc(s);
            json items = json::array();
            double total = 0;
            for (const auto& feat : f.features()) {
                const bool holds = mc.holds_at(feat.formula, s.initial());
                total += holds ? feat.value : 0.0;
                items.push_back({{"formula", feat.formula.str()}, {"value", feat.value}, {"holds", holds}});
            }
            if (r.json_out()) {
                r.emit({{"valuation", total}, {"features", items}});
                return;
            }
            for (const auto& it : items) {
                out << (it["holds"].get<bool>() ? "+ " : "- ") << num(it["value"].get<double>()) << "  "
                    << it["formula"].get<std::string>() << '\n';
            }
            out << "valuation: " << num(total) << '\n';
        };
    });

    // ---- apply
    std::string output;
    auto* apply = app.add_subcommand("apply", "Write the structure with a social law applied");
    add_model(apply, in);
    apply->add_option("-l,--law", in.law, "Social law")->required();
    apply->add_option("-o,--output", output, "Output file (default: standard output)");
    add_format(apply, in);
    apply->callback([&] {
        action = [&] {
            const json doc = save_model(r.model());
            if (output.empty()) {
                r.emit(doc);
                return;
            }
            r.write_file(output, doc.dump(2) + "\n");
            if (r.json_out()) {
                r.emit({{"output", output}});
            } else {
                out << "wrote " << output << '\n';
            }
        };
    });

    // ---- mechanism
    std::string emit_path;
    bool with_tps = false;
    auto* mechanism = app.add_subcommand("mechanism", "Allocation, payments and profit");
    add_model(mechanism, in);
    add_features(mechanism, in);
    add_bids(mechanism, in);
    add_backend(mechanism, in);
    mechanism->add_option("--emit-ilp", emit_path, "Also write the allocation program in LP format");
    mechanism->add_flag("--turning-points", with_tps, "Include per-agent turning points");
    add_format(mechanism, in);
    mechanism->callback([&] {
        action = [&] {
            const Ccgs s = r.base_model();
            const FeatureSet f = r.features();
            const BidProfile bids = r.bids(s);
            const MechanismReport rep = Mechanism(s, f, r.backend()).run(bids, with_tps);
            if (!emit_path.empty()) {
                r.write_file(emit_path, emit_lp_string(build_dom_sl(s, f, bids)));
            }
            if (r.json_out()) {
                r.emit(to_json(s, rep));
                return;
            }
            r.print_law(s, rep.law);
            for (std::size_t i = 0; i < s.agent_count(); ++i) {
                out << "agent " << i + 1 << ": " << rep.restricted_counts[i] << " restricted, paid "
                    << num(rep.payments[i]) << '\n';
            }
            out << "valuation: " << num(rep.valuation) << "\nvirtual objective: " << num(rep.virtual_objective)
                << "\nprofit: " << num(rep.profit) << '\n';
            for (const auto& tp : rep.turning_points) {
                print_turning_points(r, tp);
            }
        };
    });

    // ---- allocate
    int count = -1;
    auto* alloc = app.add_subcommand("allocate", "Dominant social law for the bids");
    add_model(alloc, in);
    add_features(alloc, in);
    add_bids(alloc, in);
    add_backend(alloc, in);
    alloc->add_option("--agent", in.agent, "With --count: fix this agent's restriction count");
    alloc->add_option("--count", count, "Number of restricted actions for --agent");
    add_format(alloc, in);
    alloc->callback([&] {
        action = [&] {
            const Ccgs s = r.base_model();
            const FeatureSet f = r.features();
            const BidProfile bids = r.bids(s);
            const Mechanism mech(s, f, r.backend());
            Allocation a;
            if (count >= 0) {
                const auto fixed = mech.allocate_fixed(bids, r.agent(s), static_cast<std::size_t>(count));
                if (!fixed) {
                    throw InputError("infeasible: no valid law restricts exactly " + std::to_string(count) +
                                     " actions of agent " + std::to_string(in.agent));
                }
                a = *fixed;
            } else {
                a = mech.allocate(bids);
            }
            if (r.json_out()) {
                r.emit(report_allocation(s, a));
            } else {
                print_allocation(r, s, a);
            }
        };
    });

    // ---- payment
    auto* pay = app.add_subcommand("payment", "Payment to one agent with its turning points");
    add_model(pay, in);
    add_features(pay, in);
    add_bids(pay, in);
    add_backend(pay, in);
    pay->add_option("--agent", in.agent, "Agent (1-based)")->required();
    add_format(pay, in);
    pay->callback([&] {
        action = [&] {
            const Ccgs s = r.base_model();
            const FeatureSet f = r.features();
            const BidProfile bids = r.bids(s);
            const auto i = r.agent(s);
            const Mechanism mech(s, f, r.backend());
            const TurningPoints tp = mech.turning_points(bids, i);
            double p = 0;
            std::size_t before = tp.anchor_count;
            for (const auto& pt : tp.points) {
                p += static_cast<double>(before - pt.count) * pt.threshold;
                before = pt.count;
            }
            if (r.json_out()) {
                r.emit({{"agent", i + 1}, {"payment", p}, {"turning_points", to_json(tp)}});
                return;
            }
            print_turning_points(r, tp);
            out << "payment: " << num(p) << '\n';
        };
    });

    // ---- emit-ilp
    bool families = false;
    auto* emit = app.add_subcommand("emit-ilp", "Write the allocation program in LP format");
    add_model(emit, in);
    add_features(emit, in);
    add_bids(emit, in);
    emit->add_option("--agent", in.agent, "With --count: add the fixed-count row for this agent");
    emit->add_option("--count", count, "Number of restricted actions for --agent");
    emit->add_flag("--families", families, "Precede each row with its constraint family");
    emit->add_option("-o,--output", output, "Output file (default: standard output)");
    add_format(emit, in);
    emit->callback([&] {
        action = [&] {
            const Ccgs s = r.base_model();
            const FeatureSet f = r.features();
            IlpModel m = build_dom_sl(s, f, r.bids(s));
            if (count >= 0) {
                add_fixed_count(m, r.agent(s), static_cast<std::size_t>(count));
            }
            const std::string text = emit_lp_string(m, families);
            if (!output.empty()) {
                r.write_file(output, text);
            }
            const json summary{{"variables", m.variables().size()},
                               {"rows", m.constraints().size()},
                               {"constraints", m.constraint_count()},
                               {"size_bound", size_bound(m.layout())}};
            if (r.json_out()) {
                json doc = summary;
                if (output.empty()) {
                    doc["lp"] = text;
                } else {
                    doc["output"] = output;
                }
                r.emit(doc);
            } else if (output.empty()) {
                out << text;
            } else {
                out << "wrote " << output << " (" << m.variables().size() << " variables, " << m.constraint_count()
                    << " constraints, bound " << size_bound(m.layout()) << ")\n";
            }
        };
    });

    // ---- verify
    auto* verify = app.add_subcommand("verify", "Check a property; exit 4 when it fails");
    verify->require_subcommand(1);
    double true_cost = 0;
    double bid = 0;
    std::size_t grid = 101;
    double grid_max = -1;
    bool stub = false;
    std::size_t samples = 1000;
    std::uint64_t seed = 1;
    std::string other_model;

    auto* truthful = verify->add_subcommand("truthful", "No misreport on a bid grid beats the true cost");
    add_model(truthful, in);
    add_features(truthful, in);
    add_bids(truthful, in);
    add_backend(truthful, in);
    truthful->add_option("--agent", in.agent, "Agent (1-based)")->required();
    truthful->add_option("--true-cost", true_cost, "The agent's true unit cost")->required();
    truthful->add_option("--grid", grid, "Number of grid points on [0, upper]");
    truthful->add_option("--grid-max", grid_max, "Grid upper end (default: top of the agent's prior)");
    truthful->add_flag("--pay-your-bid", stub, "Check the pay-your-bid baseline instead");
    add_format(truthful, in);
    truthful->callback([&] {
        action = [&] {
            const Ccgs s = r.base_model();
            const FeatureSet f = r.features();
            const BidProfile bids = r.bids(s);
            const auto i = r.agent(s);
            const auto points = grid_max >= 0 ? linear_grid(0, grid_max, grid) : bid_grid(s, i, grid);
            const auto rep = Mechanism(s, f, r.backend())
                                 .verify_truthfulness(i, true_cost, bids, points,
                                                      stub ? PaymentRule::pay_your_bid : PaymentRule::threshold);
            if (r.json_out()) {
                r.emit({{"property", "truthful"},
                        {"agent", i + 1},
                        {"holds", rep.truthful},
                        {"truthful_utility", rep.truthful_utility},
                        {"worst_violation", rep.worst_violation},
                        {"worst_bid", rep.worst_bid},
                        {"grid_points", points.size()}});
            } else {
                out << (rep.truthful ? "truthful" : "NOT truthful") << ": utility at true cost "
                    << num(rep.truthful_utility) << ", worst gain from misreporting " << num(rep.worst_violation)
                    << " at bid " << num(rep.worst_bid) << '\n';
            }
            if (!rep.truthful) {
                throw PropertyViolation{};
            }
        };
    });

    auto* ir = verify->add_subcommand("ir", "Truthful utility is nonnegative");
    add_model(ir, in);
    add_features(ir, in);
    add_bids(ir, in);
    add_backend(ir, in);
    ir->add_option("--agent", in.agent, "Agent (1-based)")->required();
    ir->add_option("--true-cost", true_cost, "The agent's true unit cost")->required();
    add_format(ir, in);
    ir->callback([&] {
        action = [&] {
            const Ccgs s = r.base_model();
            const FeatureSet f = r.features();
            BidProfile bids = r.bids(s);
            const auto i = r.agent(s);
            const Mechanism mech(s, f, r.backend());
            bids[i] = true_cost;
            const double u = mech.utility(bids, i, true_cost);
            const bool ok = u >= -truthfulness_tolerance;
            if (r.json_out()) {
                r.emit({{"property", "ir"}, {"agent", i + 1}, {"holds", ok}, {"utility", u}});
            } else {
                out << (ok ? "individually rational" : "NOT individually rational") << ": utility " << num(u)
                    << '\n';
            }
            if (!ok) {
                throw PropertyViolation{};
            }
        };
    });

    auto* interim = verify->add_subcommand("interim", "Monte-Carlo interim allocation, payment and utility");
    add_model(interim, in);
    add_features(interim, in);
    add_backend(interim, in);
    interim->add_option("--agent", in.agent, "Agent (1-based)")->required();
    interim->add_option("--bid", bid, "The agent's bid")->required();
    interim->add_option("--samples", samples, "Samples of the other agents' costs");
    interim->add_option("--seed", seed, "Random seed");
    add_format(interim, in);
    interim->callback([&] {
        action = [&] {
            const Ccgs s = r.base_model();
            const auto i = r.agent(s);
            std::mt19937_64 rng(seed);
            const auto e = Mechanism(s, r.features(), r.backend()).estimate_interim(i, bid, samples, rng);
            const bool ok = e.utility.mean >= -3 * e.utility.std_error - truthfulness_tolerance;
            auto est = [](const Estimate& x) { return json{{"mean", x.mean}, {"std_error", x.std_error}}; };
            if (r.json_out()) {
                r.emit({{"property", "interim"},
                        {"agent", i + 1},
                        {"bid", bid},
                        {"samples", e.samples},
                        {"seed", seed},
                        {"restricted", est(e.restricted)},
                        {"payment", est(e.payment)},
                        {"utility", est(e.utility)},
                        {"holds", ok}});
            } else {
                out << "r = " << num(e.restricted.mean) << " +- " << num(e.restricted.std_error) << "\np = "
                    << num(e.payment.mean) << " +- " << num(e.payment.std_error) << "\nu = " << num(e.utility.mean)
                    << " +- " << num(e.utility.std_error) << '\n';
            }
            if (!ok) {
                throw PropertyViolation{};
            }
        };
    });

    auto* profit = verify->add_subcommand("profit", "Monte-Carlo expected profit against never restricting");
    add_model(profit, in);
    add_features(profit, in);
    add_backend(profit, in);
    profit->add_option("--samples", samples, "Sampled cost profiles");
    profit->add_option("--seed", seed, "Random seed");
    add_format(profit, in);
    profit->callback([&] {
        action = [&] {
            const Ccgs s = r.base_model();
            const FeatureSet f = r.features();
            std::mt19937_64 rng(seed);
            const auto e = Mechanism(s, f, r.backend()).estimate_expected_profit(samples, rng);
            // never restricting pays nothing and earns the base valuation
            const double baseline = valuate(s, f);
            const double cap = f.total_value();
            const bool ok = e.mean >= baseline - 3 * e.std_error && e.mean <= cap + 1e-9;
            if (r.json_out()) {
                r.emit({{"property", "profit"},
                        {"samples", samples},
                        {"seed", seed},
                        {"profit", {{"mean", e.mean}, {"std_error", e.std_error}}},
                        {"baseline", baseline},
                        {"cap", cap},
                        {"holds", ok}});
            } else {
                out << "expected profit " << num(e.mean) << " +- " << num(e.std_error) << " (never restricting: "
                    << num(baseline) << ", cap " << num(cap) << ")\n";
            }
            if (!ok) {
                throw PropertyViolation{};
            }
        };
    });

    auto bisim_body = [&](bool as_property) {
        const Ccgs a = load_model_file(in.model);
        const Ccgs b = load_model_file(other_model);
        const auto rel = check_bisimulation(a, b);
        json pairs = json::array();
        if (rel) {
            for (std::size_t q = 0; q < a.state_count(); ++q) {
                for (std::size_t t = 0; t < b.state_count(); ++t) {
                    if ((*rel)[q][t]) {
                        pairs.push_back({a.state_name(q), b.state_name(t)});
                    }
                }
            }
        }
        if (r.json_out()) {
            json doc{{"bisimilar", rel.has_value()}, {"pairs", pairs}};
            if (as_property) {
                doc["property"] = "bisim";
                doc["holds"] = rel.has_value();
            }
            r.emit(doc);
        } else if (!rel) {
            out << "not bisimilar\n";
        } else {
            out << "bisimilar\n";
            for (const auto& p : pairs) {
                out << "  " << p[0].get<std::string>() << " ~ " << p[1].get<std::string>() << '\n';
            }
        }
        if (as_property && !rel) {
            throw PropertyViolation{};
        }
    };

    auto* vbisim = verify->add_subcommand("bisim", "The initial states are alternating-bisimilar");
    add_model(vbisim, in);
    vbisim->add_option("-M,--other", other_model, "Second model file")->required();
    add_format(vbisim, in);
    vbisim->callback([&] { action = [&] { bisim_body(true); }; });

    auto* vassign = verify->add_subcommand("assignment", "Solve the program and check the optimal assignment");
    add_model(vassign, in);
    add_features(vassign, in);
    add_bids(vassign, in);
    add_format(vassign, in);
    vassign->callback([&] {
        action = [&] {
            const Ccgs s = r.base_model();
            const FeatureSet f = r.features();
            const IlpModel m = build_dom_sl(s, f, r.bids(s));
            const auto a = solve_exact(m);
            if (!a) {
                throw InternalError("the allocation program has no solution");
            }
            const auto check = verify_assignment(m, *a, s, f);
            if (r.json_out()) {
                r.emit({{"property", "assignment"},
                        {"holds", check.ok},
                        {"problem", check.problem},
                        {"objective", a->objective},
                        {"variables", m.variables().size()},
                        {"constraints", m.constraint_count()}});
            } else {
                out << (check.ok ? "assignment consistent" : "assignment inconsistent: " + check.problem)
                    << " (objective " << num(a->objective) << ")\n";
            }
            if (!check.ok) {
                throw PropertyViolation{};
            }
        };
    });

    // ---- oracle
    auto* oracle = app.add_subcommand("oracle", "Brute-force reference computations");
    oracle->require_subcommand(1);
    auto* oalloc = oracle->add_subcommand("allocate", "Best law by enumerating every social law");
    add_model(oalloc, in);
    add_features(oalloc, in);
    add_bids(oalloc, in);
    add_format(oalloc, in);
    oalloc->callback([&] {
        action = [&] {
            const Ccgs s = r.base_model();
            const auto a = Mechanism(s, r.features(), Backend::brute).allocate(r.bids(s));
            if (r.json_out()) {
                r.emit(report_allocation(s, a));
            } else {
                print_allocation(r, s, a);
            }
        };
    });
    double t_max = -1;
    double step = -1;
    auto* opay = oracle->add_subcommand("payment", "Payment by sweeping the agent's bid");
    add_model(opay, in);
    add_features(opay, in);
    add_bids(opay, in);
    add_backend(opay, in);
    opay->add_option("--agent", in.agent, "Agent (1-based)")->required();
    opay->add_option("--t-max", t_max, "Upper end of the sweep (default: found by doubling)");
    opay->add_option("--step", step, "Sweep step (default: 1/200 of the range)");
    add_format(opay, in);
    opay->callback([&] {
        action = [&] {
            const Ccgs s = r.base_model();
            const BidProfile bids = r.bids(s);
            const auto i = r.agent(s);
            const Mechanism mech(s, r.features(), r.backend());
            const double top = t_max > 0 ? t_max : mech.exit_bid(bids, i);
            const double h = step > 0 ? step : std::max(top - bids[i], 1e-6) / 200.0;
            const double p = mech.payment_oracle(bids, i, top, h);
            if (r.json_out()) {
                r.emit({{"agent", i + 1}, {"payment", p}, {"t_max", top}, {"step", h}});
            } else {
                out << "payment: " << num(p) << " (sweep to " << num(top) << ", step " << num(h) << ")\n";
            }
        };
    });

    // ---- gen
    auto* gen = app.add_subcommand("gen", "Instance generators");
    gen->require_subcommand(1);
    std::string clause_file;
    std::string out_dir = ".";
    auto* gmax = gen->add_subcommand("maxwsat", "Single-agent structure from weighted clauses");
    gmax->add_option("-i,--input", clause_file, "Clause file")->required();
    gmax->add_option("-o,--output-dir", out_dir, "Directory for model.json and features.json");
    add_format(gmax, in);
    gmax->callback([&] {
        action = [&] {
            const MaxWSatInstance inst = load_maxwsat(read_json_file(clause_file));
            const auto [s, f] = gen_maxwsat_instance(inst);
            std::error_code ec;
            std::filesystem::create_directories(out_dir, ec);
            const auto model_path = (std::filesystem::path(out_dir) / "model.json").string();
            const auto features_path = (std::filesystem::path(out_dir) / "features.json").string();
            r.write_file(model_path, save_model(s).dump(2) + "\n");
            r.write_file(features_path, save_features(f).dump(2) + "\n");
            const double best = maxwsat_optimum(inst);
            if (r.json_out()) {
                r.emit({{"model", model_path},
                        {"features", features_path},
                        {"vars", inst.vars.size()},
                        {"clauses", inst.clauses.size()},
                        {"optimum", best}});
            } else {
                out << "wrote " << model_path << " and " << features_path << "\nbest satisfiable weight: "
                    << num(best) << '\n';
            }
        };
    });

    // ---- bisim
    auto* bisim = app.add_subcommand("bisim", "Largest alternating bisimulation between two models");
    add_model(bisim, in);
    bisim->add_option("-M,--other", other_model, "Second model file")->required();
    add_format(bisim, in);
    bisim->callback([&] { action = [&] { bisim_body(false); }; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return exit_input;
    }
    if (!action) {
        err << "error: no command given\n";
        return exit_input;
    }
    try {
        action();
        return exit_ok;
    } catch (const PropertyViolation& v) {
        return v.code;
    } catch (const InputError& e) {
        err << "error: " << e.what() << '\n';
        return exit_input;
    } catch (const DomainError& e) {
        err << "error: " << e.what() << '\n';
        return exit_input;
    } catch (const InternalError& e) {
        err << "internal error: " << e.what() << '\n';
        return exit_internal;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << '\n';
        return exit_internal;
    }
}

}  // namespace sls
