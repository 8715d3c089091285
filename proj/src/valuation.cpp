#include "sls/valuation.hpp"

#include <cmath>

#include "sls/error.hpp"

namespace sls {

void FeatureSet::add(const Formula& formula, double value) {
    if (!std::isfinite(value) || value < 0.0) {
        throw InputError("feature value must be a nonnegative number");
    }
    features_.push_back({desugar(formula), value});
}

double FeatureSet::total_value() const {
    double sum = 0.0;
    for (const auto& f : features_) {
        sum += f.value;
    }
    return sum;
}

FeatureSet load_features(const nlohmann::json& doc) {
    if (!doc.is_object() || !doc.contains("features") || !doc["features"].is_array()) {
        throw InputError("feature document needs a \"features\" array");
    }
    FeatureSet out;
    std::size_t index = 0;
    for (const auto& item : doc["features"]) {
        const auto where = "feature " + std::to_string(index) + ": ";
        if (!item.is_object() || !item.contains("formula") || !item["formula"].is_string() ||
            !item.contains("value") || !item["value"].is_number()) {
            throw InputError(where + "needs a string \"formula\" and a numeric \"value\"");
        }
        try {
            out.add(parse_formula(item["formula"].get<std::string>()), item["value"].get<double>());
        } catch (const InputError& e) {
            throw InputError(where + e.what());
        }
        ++index;
    }
    return out;
}

FeatureSet load_features_file(const std::filesystem::path& path) { return load_features(read_json_file(path)); }

nlohmann::json save_features(const FeatureSet& f) {
    auto items = nlohmann::json::array();
    for (const auto& feature : f.features()) {
        items.push_back({{"formula", feature.formula.str()}, {"value", feature.value}});
    }
    return nlohmann::json{{"features", items}};
}

double valuate(ModelChecker& mc, const FeatureSet& f) {
    double sum = 0.0;
    const auto q0 = mc.structure().initial();
    for (const auto& feature : f.features()) {
        if (mc.holds_at(feature.formula, q0)) {
            sum += feature.value;
        }
    }
    return sum;
}

double valuate(const Ccgs& s, const FeatureSet& f) {
    ModelChecker mc(s);
    return valuate(mc, f);
}

std::vector<Formula> union_closure(const FeatureSet& f) {
    std::vector<Formula> all;
    for (const auto& feature : f.features()) {
        const auto cl = closure(feature.formula);
        all.insert(all.end(), cl.begin(), cl.end());
    }
    sort_canonical(all);
    return all;
}

}  // namespace sls
