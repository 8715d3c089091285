#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

#include "json.hpp"
#include "sls/logic.hpp"
#include "sls/model.hpp"

namespace sls {

struct Feature {
    Formula formula;  // desugared
    double value = 0.0;
};

class FeatureSet {
public:
    FeatureSet() = default;

    // Desugars the formula; rejects negative or non-finite values.
    void add(const Formula& formula, double value);

    const std::vector<Feature>& features() const { return features_; }
    std::size_t size() const { return features_.size(); }
    bool empty() const { return features_.empty(); }
    double total_value() const;

private:
    std::vector<Feature> features_;
};

FeatureSet load_features(const nlohmann::json& document);
FeatureSet load_features_file(const std::filesystem::path& path);
nlohmann::json save_features(const FeatureSet& f);

/// Sum of the values of features that hold at the initial state.
double valuate(const Ccgs& s, const FeatureSet& f);
double valuate(ModelChecker& mc, const FeatureSet& f);

/// Union of the closures of all feature formulas, canonical order.
std::vector<Formula> union_closure(const FeatureSet& f);

}  // namespace sls
