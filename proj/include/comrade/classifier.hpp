#pragma once

// Small from-scratch classifiers over state vectors with integer labels.
//
// All classifiers read full state vectors and look only at the features
// selected by their FeatureConfig. Training is deterministic: the same
// (samples, labels, params, features) always yields the same model.

#include "comrade/features.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace comrade {

struct DecisionTreeParams {
    int max_depth = 8;
    int min_samples_split = 2;
    friend bool operator==(const DecisionTreeParams&, const DecisionTreeParams&) = default;
};

struct KNearestParams {
    int k = 5;
    friend bool operator==(const KNearestParams&, const KNearestParams&) = default;
};

struct MajorityParams {
    friend bool operator==(const MajorityParams&, const MajorityParams&) = default;
};

using ClassifierKind = std::variant<DecisionTreeParams, KNearestParams, MajorityParams>;

std::string describe(const ClassifierKind& kind);
void validate(const ClassifierKind& kind);

class Classifier {
public:
    // Throws InsufficientData on empty input.
    static Classifier fit(const ClassifierKind& kind, const FeatureConfig& features,
                          const std::vector<StateVector>& samples, const std::vector<int>& labels);

    int predict(const StateVector& full) const;

    const ClassifierKind& kind() const { return kind_; }
    const FeatureConfig& features() const { return features_; }

    // Versioned dump; decision trees are nested node objects.
    nlohmann::json to_json() const;

    // Decision-tree structure, exposed for validity checks.
    struct Node {
        bool leaf = true;
        int label = 0;
        std::size_t feature = 0;  // index into the full state vector
        double threshold = 0.0;   // x[feature] <= threshold goes left
        std::int32_t left = -1;
        std::int32_t right = -1;
    };
    const std::vector<Node>& nodes() const { return nodes_; }
    int depth() const;

private:
    Classifier(ClassifierKind kind, FeatureConfig features)
        : kind_(std::move(kind)), features_(std::move(features)) {}

    int predict_tree(const StateVector& full) const;
    int predict_knn(const StateVector& full) const;

    ClassifierKind kind_;
    FeatureConfig features_;

    std::vector<Node> nodes_;  // tree; nodes_[0] is the root

    // k-nearest: min-max normalized projected samples
    std::vector<StateVector> points_;
    std::vector<int> point_labels_;
    StateVector lo_;
    StateVector hi_;

    int majority_ = 0;
};

// The majority label; ties go to the label whose last occurrence is latest.
int majority_label(const std::vector<int>& labels);

}  // namespace comrade
