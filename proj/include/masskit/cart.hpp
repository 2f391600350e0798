#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "masskit/dataset.hpp"

namespace masskit {

struct CartParams {
    int max_depth = 5;
    std::size_t min_leaf = 5;
    double min_impurity_decrease = 1e-7;
};

// Gini impurity 1 - sum p_k^2 of a class-count vector.
inline double gini_impurity(std::span<const double> counts) {
    double total = 0.0;
    for (double c : counts) {
        if (c < 0.0) throw std::invalid_argument("gini_impurity: negative count");
        total += c;
    }
    if (total <= 0.0) throw std::invalid_argument("gini_impurity: all counts are zero");
    double sq = 0.0;
    for (double c : counts) {
        double p = c / total;
        sq += p * p;
    }
    return 1.0 - sq;
}

inline double gini_impurity(std::initializer_list<double> counts) {
    return gini_impurity(std::span<const double>(counts.begin(), counts.size()));
}

// Binary split test. `attr` indexes the schema; attr == schema.size() stands
// for the severity label when the tree was trained with use_label. Records
// whose split attribute is missing follow missing_to_left, the direction the
// majority of training records took.
struct CartSplit {
    std::size_t attr = 0;
    bool is_threshold = false;
    double threshold = 0.0;
    std::vector<int> left_categories;  // sorted; categorical splits only
    bool missing_to_left = true;

    bool goes_left(double value) const {
        if (is_threshold) return value <= threshold;
        int code = static_cast<int>(value);
        return std::binary_search(left_categories.begin(), left_categories.end(), code);
    }
};

struct CartNode {
    int left = -1;  // node indices; -1 on both means leaf
    int right = -1;
    CartSplit split;
    double prediction = 0.0;
    std::size_t count = 0;

    bool is_leaf() const { return left < 0; }
};

class CartTree {
public:
    std::string target_name;
    std::size_t target_attr = 0;
    bool target_categorical = true;
    std::vector<CartNode> nodes;  // nodes[0] is the root

    double predict(const Record& rec, std::size_t arity) const {
        const CartNode* node = &nodes.front();
        while (!node->is_leaf()) {
            const CartSplit& s = node->split;
            bool left;
            if (s.attr == arity) {
                left = s.goes_left(static_cast<double>(static_cast<int>(rec.label)));
            } else {
                const Cell& c = rec.values[s.attr];
                left = c.is_missing() ? s.missing_to_left : s.goes_left(c.value);
            }
            node = &nodes[static_cast<std::size_t>(left ? node->left : node->right)];
        }
        return node->prediction;
    }
};

namespace detail {

struct CartCandidate {
    CartSplit split;
    double decrease = 0.0;
    std::vector<std::size_t> left_rows, right_rows;
};

// Transposed access used during training: value of predictor `attr` for
// record `row`, where attr == arity selects the label.
struct CartView {
    const Dataset* ds;
    std::size_t target;
    bool use_label;

    std::size_t arity() const { return ds->arity(); }

    bool missing(std::size_t row, std::size_t attr) const {
        if (attr == arity()) return false;
        return ds->records[row].values[attr].is_missing();
    }
    double value(std::size_t row, std::size_t attr) const {
        if (attr == arity()) return static_cast<double>(static_cast<int>(ds->records[row].label));
        return ds->records[row].values[attr].value;
    }
    double target_value(std::size_t row) const { return ds->records[row].values[target].value; }

    std::vector<std::size_t> predictors() const {
        std::vector<std::size_t> out;
        for (std::size_t a = 0; a < arity(); ++a) {
            if (a == target || !ds->schema[a].predictive) continue;
            out.push_back(a);
        }
        if (use_label) out.push_back(arity());
        return out;
    }

    bool predictor_categorical(std::size_t attr) const {
        return attr == arity() || ds->schema[attr].categorical();
    }
};

struct CartImpurity {
    bool categorical;
    std::vector<int> domain;  // categorical targets

    double operator()(const CartView& v, std::span<const std::size_t> rows) const {
        if (categorical) {
            std::vector<double> counts(domain.size(), 0.0);
            for (std::size_t r : rows) {
                int code = static_cast<int>(v.target_value(r));
                auto it = std::find(domain.begin(), domain.end(), code);
                counts[static_cast<std::size_t>(it - domain.begin())] += 1.0;
            }
            return gini_impurity(counts);
        }
        double mean = 0.0;
        for (std::size_t r : rows) mean += v.target_value(r);
        mean /= static_cast<double>(rows.size());
        double var = 0.0;
        for (std::size_t r : rows) {
            double d = v.target_value(r) - mean;
            var += d * d;
        }
        return var / static_cast<double>(rows.size());
    }
};

inline double cart_leaf_prediction(const CartView& v, const std::vector<std::size_t>& rows,
                                   const CartImpurity& imp) {
    if (imp.categorical) {
        std::map<int, std::size_t> counts;
        for (std::size_t r : rows) ++counts[static_cast<int>(v.target_value(r))];
        int best = 0;
        std::size_t best_n = 0;
        for (auto [code, n] : counts) {
            if (n > best_n) {  // std::map order makes ties pick the smallest code
                best = code;
                best_n = n;
            }
        }
        return static_cast<double>(best);
    }
    double mean = 0.0;
    for (std::size_t r : rows) mean += v.target_value(r);
    return mean / static_cast<double>(rows.size());
}

// true when a beats b under the deterministic ordering: larger decrease,
// then lower attribute index, then lexicographically smaller left subset /
// smaller threshold.
inline bool cart_candidate_better(const CartCandidate& a, const CartCandidate& b) {
    if (a.decrease != b.decrease) return a.decrease > b.decrease;
    if (a.split.attr != b.split.attr) return a.split.attr < b.split.attr;
    if (a.split.is_threshold) return a.split.threshold < b.split.threshold;
    return a.split.left_categories < b.split.left_categories;
}

inline void cart_route(const CartView& v, const std::vector<std::size_t>& rows, CartSplit& split,
                       std::vector<std::size_t>& left, std::vector<std::size_t>& right) {
    left.clear();
    right.clear();
    std::vector<std::size_t> missing_rows;
    for (std::size_t r : rows) {
        if (v.missing(r, split.attr)) {
            missing_rows.push_back(r);
        } else if (split.goes_left(v.value(r, split.attr))) {
            left.push_back(r);
        } else {
            right.push_back(r);
        }
    }
    split.missing_to_left = left.size() >= right.size();
    auto& dest = split.missing_to_left ? left : right;
    dest.insert(dest.end(), missing_rows.begin(), missing_rows.end());
    std::sort(left.begin(), left.end());
    std::sort(right.begin(), right.end());
}

inline std::vector<CartCandidate> cart_candidates(const CartView& v, const std::vector<std::size_t>& rows,
                                                  std::size_t attr) {
    std::vector<CartCandidate> out;
    if (v.predictor_categorical(attr)) {
        std::vector<int> present;
        for (std::size_t r : rows) {
            if (v.missing(r, attr)) continue;
            int code = static_cast<int>(v.value(r, attr));
            if (std::find(present.begin(), present.end(), code) == present.end()) present.push_back(code);
        }
        std::sort(present.begin(), present.end());
        if (present.size() < 2) return out;
        const std::size_t k = present.size();
        // all proper nonempty subsets as the left side; both orientations of
        // a partition are distinct candidates because missing rows follow the
        // left side on an observed-size tie
        for (std::uint32_t mask = 1; mask + 1 < (1u << k); ++mask) {
            CartCandidate cand;
            cand.split.attr = attr;
            cand.split.is_threshold = false;
            for (std::size_t i = 0; i < k; ++i) {
                if (mask & (1u << i)) cand.split.left_categories.push_back(present[i]);
            }
            out.push_back(std::move(cand));
        }
    } else {
        std::vector<double> values;
        for (std::size_t r : rows) {
            if (!v.missing(r, attr)) values.push_back(v.value(r, attr));
        }
        std::sort(values.begin(), values.end());
        values.erase(std::unique(values.begin(), values.end()), values.end());
        for (std::size_t i = 0; i + 1 < values.size(); ++i) {
            CartCandidate cand;
            cand.split.attr = attr;
            cand.split.is_threshold = true;
            cand.split.threshold = 0.5 * (values[i] + values[i + 1]);
            out.push_back(std::move(cand));
        }
    }
    return out;
}

inline bool cart_find_split(const CartView& v, const std::vector<std::size_t>& rows, const CartParams& params,
                            const CartImpurity& imp, CartCandidate& best) {
    const double parent_impurity = imp(v, rows);
    if (parent_impurity <= 0.0) return false;
    bool found = false;
    for (std::size_t attr : v.predictors()) {
        for (CartCandidate& cand : cart_candidates(v, rows, attr)) {
            cart_route(v, rows, cand.split, cand.left_rows, cand.right_rows);
            if (cand.left_rows.size() < params.min_leaf || cand.right_rows.size() < params.min_leaf) continue;
            if (cand.left_rows.empty() || cand.right_rows.empty()) continue;
            const double n = static_cast<double>(rows.size());
            cand.decrease = parent_impurity -
                            (static_cast<double>(cand.left_rows.size()) / n) * imp(v, cand.left_rows) -
                            (static_cast<double>(cand.right_rows.size()) / n) * imp(v, cand.right_rows);
            if (cand.decrease <= 0.0 || cand.decrease < params.min_impurity_decrease) continue;
            if (!found || cart_candidate_better(cand, best)) {
                best = std::move(cand);
                found = true;
            }
        }
    }
    return found;
}

}  // namespace detail

// Fits a binary tree predicting `target_attr` from the other predictive
// attributes (optionally the severity label too), on the records where the
// target is present. Splits maximize Gini decrease for categorical targets
// and variance reduction for continuous ones.
inline CartTree train_cart(const Dataset& ds, std::size_t target_attr, const CartParams& params = {},
                           bool use_label = false) {
    if (target_attr >= ds.arity()) throw std::invalid_argument("train_cart: bad target attribute");
    detail::CartView view{&ds, target_attr, use_label};
    detail::CartImpurity imp{ds.schema[target_attr].categorical(), ds.schema[target_attr].domain};

    CartTree tree;
    tree.target_name = ds.schema[target_attr].name;
    tree.target_attr = target_attr;
    tree.target_categorical = imp.categorical;

    std::vector<std::size_t> root_rows;
    for (std::size_t r = 0; r < ds.size(); ++r) {
        if (!ds.records[r].values[target_attr].is_missing()) root_rows.push_back(r);
    }
    if (root_rows.size() < params.min_leaf || root_rows.empty()) {
        throw std::invalid_argument("train_cart: fewer than min_leaf records with observed target");
    }

    struct Pending {
        int node;
        std::vector<std::size_t> rows;
        int depth;
    };
    tree.nodes.push_back({});
    std::vector<Pending> stack;
    stack.push_back({0, std::move(root_rows), 0});
    while (!stack.empty()) {
        Pending p = std::move(stack.back());
        stack.pop_back();
        CartNode& placeholder = tree.nodes[static_cast<std::size_t>(p.node)];
        placeholder.count = p.rows.size();
        placeholder.prediction = detail::cart_leaf_prediction(view, p.rows, imp);

        detail::CartCandidate best;
        if (p.depth >= params.max_depth || !detail::cart_find_split(view, p.rows, params, imp, best)) {
            continue;  // stays a leaf
        }
        const int left_id = static_cast<int>(tree.nodes.size());
        const int right_id = left_id + 1;
        {
            CartNode& node = tree.nodes[static_cast<std::size_t>(p.node)];
            node.split = best.split;
            node.left = left_id;
            node.right = right_id;
        }
        tree.nodes.push_back({});
        tree.nodes.push_back({});
        stack.push_back({right_id, std::move(best.right_rows), p.depth + 1});
        stack.push_back({left_id, std::move(best.left_rows), p.depth + 1});
    }
    return tree;
}

inline CartTree train_cart(const Dataset& ds, const std::string& target_name, const CartParams& params = {},
                           bool use_label = false) {
    for (std::size_t a = 0; a < ds.arity(); ++a) {
        if (ds.schema[a].name == target_name) return train_cart(ds, a, params, use_label);
    }
    throw std::invalid_argument("train_cart: unknown attribute " + target_name);
}

inline double cart_predict(const CartTree& tree, const Record& rec, const Dataset& ds) {
    return tree.predict(rec, ds.arity());
}

}  // namespace masskit
