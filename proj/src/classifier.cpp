#include "comrade/classifier.hpp"

#include "comrade/errors.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace comrade {

std::string describe(const ClassifierKind& kind) {
    struct Visitor {
        std::string operator()(const DecisionTreeParams& p) const {
            return "DecisionTree(" + std::to_string(p.max_depth) + "," +
                   std::to_string(p.min_samples_split) + ")";
        }
        std::string operator()(const KNearestParams& p) const {
            return "KNearest(" + std::to_string(p.k) + ")";
        }
        std::string operator()(const MajorityParams&) const { return "MajorityClass"; }
    };
    return std::visit(Visitor{}, kind);
}

void validate(const ClassifierKind& kind) {
    if (const auto* t = std::get_if<DecisionTreeParams>(&kind)) {
        if (t->max_depth < 1) throw ConfigError("max_depth must be >= 1");
        if (t->min_samples_split < 2) throw ConfigError("min_samples_split must be >= 2");
    } else if (const auto* k = std::get_if<KNearestParams>(&kind)) {
        if (k->k < 1) throw ConfigError("k must be >= 1");
    }
}

int majority_label(const std::vector<int>& labels) {
    if (labels.empty()) throw InsufficientData("no labels");
    std::map<int, std::pair<int, std::size_t>> stats;  // label -> (count, last index)
    for (std::size_t i = 0; i < labels.size(); ++i) {
        auto& s = stats[labels[i]];
        ++s.first;
        s.second = i;
    }
    auto best = stats.begin();
    for (auto it = stats.begin(); it != stats.end(); ++it) {
        if (it->second.first > best->second.first ||
            (it->second.first == best->second.first && it->second.second > best->second.second)) {
            best = it;
        }
    }
    return best->first;
}

namespace {

struct TreeBuilder {
    const DecisionTreeParams& params;
    const FeatureConfig& features;
    const std::vector<StateVector>& x;
    const std::vector<int>& y;
    std::vector<Classifier::Node>& nodes;

    static double gini(const std::map<int, int>& counts, int n) {
        if (n == 0) return 0.0;
        double sum = 0.0;
        for (const auto& [label, c] : counts) {
            const double p = static_cast<double>(c) / n;
            sum += p * p;
        }
        return 1.0 - sum;
    }

    int leaf_label(const std::vector<std::size_t>& idx) const {
        // idx is in training order, so recency follows position.
        std::vector<int> labels;
        labels.reserve(idx.size());
        for (auto i : idx) labels.push_back(y[i]);
        return majority_label(labels);
    }

    std::int32_t build(std::vector<std::size_t> idx, int depth) {
        const auto node_id = static_cast<std::int32_t>(nodes.size());
        nodes.push_back({});

        std::map<int, int> counts;
        for (auto i : idx) ++counts[y[i]];
        const int n = static_cast<int>(idx.size());
        const double parent = gini(counts, n);

        auto make_leaf = [&] {
            nodes[static_cast<std::size_t>(node_id)].leaf = true;
            nodes[static_cast<std::size_t>(node_id)].label = leaf_label(idx);
            return node_id;
        };
        if (counts.size() <= 1 || depth >= params.max_depth || n < params.min_samples_split) {
            return make_leaf();
        }

        double best_impurity = parent;
        std::size_t best_feature = 0;
        double best_threshold = 0.0;
        bool found = false;

        std::vector<std::size_t> order = idx;
        for (auto f : features.indices()) {
            std::stable_sort(order.begin(), order.end(),
                             [&](std::size_t a, std::size_t b) { return x[a][f] < x[b][f]; });
            std::map<int, int> left;
            std::map<int, int> right = counts;
            for (int k = 0; k + 1 < n; ++k) {
                const int label = y[order[static_cast<std::size_t>(k)]];
                ++left[label];
                if (--right[label] == 0) right.erase(label);
                const double a = x[order[static_cast<std::size_t>(k)]][f];
                const double b = x[order[static_cast<std::size_t>(k + 1)]][f];
                if (!(a < b)) continue;
                const int nl = k + 1;
                const int nr = n - nl;
                const double impurity = (nl * gini(left, nl) + nr * gini(right, nr)) / n;
                if (impurity < best_impurity - 1e-12) {
                    best_impurity = impurity;
                    best_feature = f;
                    double t = a + (b - a) / 2.0;
                    if (!(t < b)) t = a;
                    best_threshold = t;
                    found = true;
                }
            }
        }
        if (!found) return make_leaf();

        std::vector<std::size_t> li;
        std::vector<std::size_t> ri;
        for (auto i : idx) (x[i][best_feature] <= best_threshold ? li : ri).push_back(i);
        const auto l = build(std::move(li), depth + 1);
        const auto r = build(std::move(ri), depth + 1);
        auto& node = nodes[static_cast<std::size_t>(node_id)];
        node.leaf = false;
        node.feature = best_feature;
        node.threshold = best_threshold;
        node.left = l;
        node.right = r;
        return node_id;
    }
};

nlohmann::json node_json(const std::vector<Classifier::Node>& nodes, std::int32_t id) {
    const auto& n = nodes[static_cast<std::size_t>(id)];
    if (n.leaf) return {{"label", n.label}};
    return {{"feature", n.feature},
            {"threshold", n.threshold},
            {"left", node_json(nodes, n.left)},
            {"right", node_json(nodes, n.right)}};
}

int node_depth(const std::vector<Classifier::Node>& nodes, std::int32_t id) {
    const auto& n = nodes[static_cast<std::size_t>(id)];
    if (n.leaf) return 0;
    return 1 + std::max(node_depth(nodes, n.left), node_depth(nodes, n.right));
}

}  // namespace

Classifier Classifier::fit(const ClassifierKind& kind, const FeatureConfig& features,
                           const std::vector<StateVector>& samples, const std::vector<int>& labels) {
    validate(kind);
    if (samples.empty()) throw InsufficientData("cannot train on an empty sample set");
    if (samples.size() != labels.size()) throw DomainError("sample/label count mismatch");
    for (const auto& s : samples) {
        for (auto f : features.indices()) {
            if (f >= s.size()) throw DomainError("state vector shorter than feature index");
        }
    }

    Classifier c(kind, features);
    c.majority_ = majority_label(labels);

    if (const auto* tree = std::get_if<DecisionTreeParams>(&kind)) {
        std::vector<std::size_t> idx(samples.size());
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        TreeBuilder{*tree, features, samples, labels, c.nodes_}.build(std::move(idx), 0);
    } else if (std::holds_alternative<KNearestParams>(kind)) {
        const auto dims = features.size();
        c.lo_.assign(dims, 0.0);
        c.hi_.assign(dims, 0.0);
        for (std::size_t d = 0; d < dims; ++d) {
            const auto f = features.indices()[d];
            c.lo_[d] = c.hi_[d] = samples.front()[f];
            for (const auto& s : samples) {
                c.lo_[d] = std::min(c.lo_[d], s[f]);
                c.hi_[d] = std::max(c.hi_[d], s[f]);
            }
        }
        for (const auto& s : samples) {
            StateVector p(dims);
            for (std::size_t d = 0; d < dims; ++d) {
                const double span = c.hi_[d] - c.lo_[d];
                p[d] = span > 0 ? (s[features.indices()[d]] - c.lo_[d]) / span : 0.0;
            }
            c.points_.push_back(std::move(p));
        }
        c.point_labels_ = labels;
    }
    return c;
}

int Classifier::predict_tree(const StateVector& full) const {
    std::int32_t id = 0;
    for (;;) {
        const auto& n = nodes_[static_cast<std::size_t>(id)];
        if (n.leaf) return n.label;
        id = full.at(n.feature) <= n.threshold ? n.left : n.right;
    }
}

int Classifier::predict_knn(const StateVector& full) const {
    const auto dims = features_.size();
    StateVector q(dims);
    for (std::size_t d = 0; d < dims; ++d) {
        const double span = hi_[d] - lo_[d];
        q[d] = span > 0 ? (full.at(features_.indices()[d]) - lo_[d]) / span : 0.0;
    }
    std::vector<std::pair<double, std::size_t>> dist;
    dist.reserve(points_.size());
    for (std::size_t i = 0; i < points_.size(); ++i) {
        double sum = 0.0;
        for (std::size_t d = 0; d < dims; ++d) {
            const double diff = points_[i][d] - q[d];
            sum += diff * diff;
        }
        dist.emplace_back(sum, i);
    }
    const auto k = std::min(points_.size(),
                            static_cast<std::size_t>(std::get<KNearestParams>(kind_).k));
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());

    // Vote; ties go to the tied label seen first among the sorted neighbours.
    std::map<int, int> votes;
    for (std::size_t i = 0; i < k; ++i) ++votes[point_labels_[dist[i].second]];
    int best_votes = 0;
    for (const auto& [label, v] : votes) best_votes = std::max(best_votes, v);
    for (std::size_t i = 0; i < k; ++i) {
        const int label = point_labels_[dist[i].second];
        if (votes[label] == best_votes) return label;
    }
    return majority_;
}

int Classifier::predict(const StateVector& full) const {
    if (std::holds_alternative<DecisionTreeParams>(kind_)) return predict_tree(full);
    if (std::holds_alternative<KNearestParams>(kind_)) return predict_knn(full);
    return majority_;
}

int Classifier::depth() const { return nodes_.empty() ? 0 : node_depth(nodes_, 0); }

nlohmann::json Classifier::to_json() const {
    nlohmann::json j;
    j["version"] = 1;
    j["features"] = features_.indices();
    if (const auto* t = std::get_if<DecisionTreeParams>(&kind_)) {
        j["type"] = "decision_tree";
        j["max_depth"] = t->max_depth;
        j["min_samples_split"] = t->min_samples_split;
        j["root"] = node_json(nodes_, 0);
    } else if (const auto* k = std::get_if<KNearestParams>(&kind_)) {
        j["type"] = "k_nearest";
        j["k"] = k->k;
        j["lo"] = lo_;
        j["hi"] = hi_;
        j["points"] = points_;
        j["labels"] = point_labels_;
    } else {
        j["type"] = "majority";
        j["label"] = majority_;
    }
    return j;
}

}  // namespace comrade
