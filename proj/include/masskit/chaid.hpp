#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "masskit/dataset.hpp"
#include "masskit/stats.hpp"

namespace masskit {

struct ChaidParams {
    double alpha_merge = 0.1;
    double alpha_split = 0.1;
    int max_depth = 5;
    std::size_t min_parent = 2;
    std::size_t min_child = 2;
    int bin_count = 10;
};

// ---------------------------------------------------------------------------
// Continuous-attribute binning (equal frequency)

struct BinBoundaries {
    std::vector<double> upper;  // bin i holds v <= upper[i]; values beyond the last fall into the last bin

    std::size_t count() const { return upper.size(); }

    std::size_t bin_for(double v) const {
        for (std::size_t i = 0; i < upper.size(); ++i) {
            if (v <= upper[i]) return i;
        }
        return upper.empty() ? 0 : upper.size() - 1;
    }
};

struct BinAssignment {
    BinBoundaries boundaries;
    std::vector<std::size_t> bins;  // per input value, original order
};

// Equal-frequency bins over the sorted values; boundary ties go to the lower
// bin. Fewer distinct values than bins degenerates to one bin per value.
inline BinAssignment bin_continuous(const std::vector<double>& values, int bin_count) {
    if (values.empty()) throw std::invalid_argument("bin_continuous: empty input");
    if (bin_count < 1) throw std::invalid_argument("bin_continuous: bin_count must be >= 1");
    std::vector<double> sorted = values;
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> distinct = sorted;
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

    BinAssignment out;
    if (distinct.size() <= static_cast<std::size_t>(bin_count)) {
        out.boundaries.upper = distinct;
    } else {
        const std::size_t n = sorted.size();
        for (int j = 1; j <= bin_count; ++j) {
            std::size_t cut = n * static_cast<std::size_t>(j) / static_cast<std::size_t>(bin_count);
            if (cut == 0) cut = 1;
            double boundary = sorted[cut - 1];
            if (out.boundaries.upper.empty() || boundary > out.boundaries.upper.back()) {
                out.boundaries.upper.push_back(boundary);
            }
        }
        if (out.boundaries.upper.back() < sorted.back()) out.boundaries.upper.push_back(sorted.back());
    }
    out.bins.reserve(values.size());
    for (double v : values) out.bins.push_back(out.boundaries.bin_for(v));
    return out;
}

// ---------------------------------------------------------------------------
// Category merging and the Bonferroni adjustment

struct CategoryCounts {
    int code = 0;
    std::array<double, 2> counts{0.0, 0.0};  // [benign, malignant]
};

struct CategoryGroup {
    std::vector<int> codes;
    std::array<double, 2> counts{0.0, 0.0};

    double total() const { return counts[0] + counts[1]; }
    bool contains(int code) const {
        return std::find(codes.begin(), codes.end(), code) != codes.end();
    }
};

namespace detail {

// p-value of the 2xJ homogeneity test between two groups. A table that
// degenerates after zero-column removal means the two class distributions
// are identical over the surviving class, i.e. perfectly homogeneous.
inline double pairwise_merge_pvalue(const CategoryGroup& a, const CategoryGroup& b) {
    ContingencyTable t = ContingencyTable::from_counts({{a.counts[0], a.counts[1]}, {b.counts[0], b.counts[1]}});
    if (t.degenerate()) return 1.0;
    return chi2_pvalue(g2_statistic(t), t.dof());
}

}  // namespace detail

// Greedy bottom-up merge: repeatedly fuse the pair of groups that is most
// homogeneous (largest pairwise p-value) while that p exceeds alpha_merge.
// Ordinal attributes may only fuse adjacent groups, so runs stay contiguous.
// alpha_merge = 1 keeps every category separate.
inline std::vector<CategoryGroup> merge_categories(const std::vector<CategoryCounts>& categories,
                                                   AttributeKind kind, double alpha_merge) {
    if (categories.size() < 2) throw std::invalid_argument("merge_categories: need at least two categories");
    std::vector<CategoryGroup> groups;
    groups.reserve(categories.size());
    for (const auto& c : categories) groups.push_back({{c.code}, c.counts});

    const bool adjacent_only = kind != AttributeKind::nominal;
    while (groups.size() >= 2) {
        double best_p = -1.0;
        std::size_t bi = 0, bj = 0;
        for (std::size_t i = 0; i + 1 < groups.size(); ++i) {
            const std::size_t jmax = adjacent_only ? i + 2 : groups.size();
            for (std::size_t j = i + 1; j < jmax; ++j) {
                double p = detail::pairwise_merge_pvalue(groups[i], groups[j]);
                if (p > best_p) {
                    best_p = p;
                    bi = i;
                    bj = j;
                }
            }
        }
        if (best_p <= alpha_merge) break;
        groups[bi].codes.insert(groups[bi].codes.end(), groups[bj].codes.begin(), groups[bj].codes.end());
        groups[bi].counts[0] += groups[bj].counts[0];
        groups[bi].counts[1] += groups[bj].counts[1];
        groups.erase(groups.begin() + static_cast<std::ptrdiff_t>(bj));
    }
    return groups;
}

// Multiplier correcting the split p-value for the number of ways c original
// categories can collapse into r groups: C(c-1, r-1) for ordered categories;
// for unordered ones the count of set partitions into r nonempty groups
// (the closed form is the alternating sum sum_i (-1)^i (r-i)^c / (i!(r-i)!);
// the recurrence below evaluates it without its catastrophic cancellation).
inline double bonferroni_multiplier(std::size_t c, std::size_t r, AttributeKind kind) {
    if (r < 1 || r > c) throw std::invalid_argument("bonferroni_multiplier: need 1 <= r <= c");
    if (kind != AttributeKind::nominal) {
        double b = 1.0;
        for (std::size_t i = 1; i <= r - 1; ++i) {
            b *= static_cast<double>(c - r + i);
            b /= static_cast<double>(i);
        }
        return b;
    }
    std::vector<double> row(r + 1, 0.0);  // row[k] = partitions of a j-set into k groups
    row[1] = 1.0;                         // j = 1
    for (std::size_t j = 2; j <= c; ++j) {
        for (std::size_t k = std::min(j, r); k >= 1; --k) {
            row[k] = static_cast<double>(k) * row[k] + row[k - 1];
        }
    }
    return row[r];
}

// ---------------------------------------------------------------------------
// Split selection

struct AttrCandidate {
    std::size_t attribute = 0;  // schema index
    AttributeKind kind = AttributeKind::nominal;
    std::vector<CategoryCounts> categories;  // rank order (ordinal) / code order (nominal)
};

struct SplitChoice {
    std::size_t attribute = 0;
    std::vector<CategoryGroup> groups;
    double adjusted_p = 1.0;
};

// Merges each candidate's categories, scores the merged table with the
// likelihood-ratio test, Bonferroni-adjusts, and returns the attribute with
// the smallest adjusted p -- provided it clears alpha_split and every child
// group would hold at least min_child records.
inline std::optional<SplitChoice> select_split(const std::vector<AttrCandidate>& candidates,
                                               const ChaidParams& params) {
    std::optional<SplitChoice> best;
    for (const auto& cand : candidates) {
        if (cand.categories.size() < 2) continue;
        std::vector<CategoryGroup> groups = merge_categories(cand.categories, cand.kind, params.alpha_merge);
        if (groups.size() < 2) continue;
        std::vector<std::vector<double>> counts;
        counts.reserve(groups.size());
        for (const auto& g : groups) counts.push_back({g.counts[0], g.counts[1]});
        ContingencyTable table = ContingencyTable::from_counts(counts);
        if (table.degenerate()) continue;
        double p = chi2_pvalue(g2_statistic(table), table.dof());
        double adjusted =
            std::min(1.0, p * bonferroni_multiplier(cand.categories.size(), groups.size(), cand.kind));
        if (!best || adjusted < best->adjusted_p) {
            best = SplitChoice{cand.attribute, std::move(groups), adjusted};
        }
    }
    if (!best) return std::nullopt;
    if (best->adjusted_p > params.alpha_split) return std::nullopt;
    for (const auto& g : best->groups) {
        if (g.total() < static_cast<double>(params.min_child)) return std::nullopt;
    }
    return best;
}

// ---------------------------------------------------------------------------
// Tree

struct ChaidNode {
    // decision fields (children non-empty)
    std::size_t attribute = 0;
    double adjusted_p = 1.0;
    std::vector<CategoryGroup> groups;
    std::vector<int> children;
    // leaf fields (always populated)
    std::array<std::size_t, 2> class_counts{0, 0};

    bool is_leaf() const { return children.empty(); }
    Severity majority() const {
        return class_counts[1] > class_counts[0] ? Severity::malignant : Severity::benign;
    }
    double score() const {
        std::size_t total = class_counts[0] + class_counts[1];
        return total == 0 ? 0.0 : static_cast<double>(class_counts[1]) / static_cast<double>(total);
    }
};

class ChaidTree {
public:
    ChaidParams params;
    std::vector<ChaidNode> nodes;  // nodes[0] is the root
    std::map<std::size_t, BinBoundaries> bins;  // continuous attribute -> fitted bins
    std::vector<std::string> attribute_names;
    int depth = 0;

    std::size_t node_count() const { return nodes.size(); }

    const ChaidNode& route(const Record& rec) const {
        const ChaidNode* node = &nodes.front();
        while (!node->is_leaf()) {
            const Cell& cell = rec.values[node->attribute];
            if (cell.is_missing()) {
                throw std::invalid_argument("chaid_predict: missing value for attribute " +
                                            attribute_names[node->attribute]);
            }
            auto bin_it = bins.find(node->attribute);
            int code = bin_it != bins.end() ? static_cast<int>(bin_it->second.bin_for(cell.value))
                                            : cell.code();
            std::size_t chosen = node->groups.size();
            for (std::size_t g = 0; g < node->groups.size(); ++g) {
                if (node->groups[g].contains(code)) {
                    chosen = g;
                    break;
                }
            }
            if (chosen == node->groups.size()) {
                // code unseen at this node during training: follow the most
                // populated branch
                double best_total = -1.0;
                for (std::size_t g = 0; g < node->groups.size(); ++g) {
                    if (node->groups[g].total() > best_total) {
                        best_total = node->groups[g].total();
                        chosen = g;
                    }
                }
            }
            node = &nodes[static_cast<std::size_t>(node->children[chosen])];
        }
        return *node;
    }
};

struct ChaidPrediction {
    Severity label;
    double score;  // malignant proportion of the leaf
};

inline ChaidPrediction chaid_predict(const ChaidTree& tree, const Record& rec) {
    const ChaidNode& leaf = tree.route(rec);
    return {leaf.majority(), leaf.score()};
}

namespace detail {

struct ChaidBuilder {
    const Dataset& train;
    ChaidParams params;
    std::vector<std::size_t> predictors;              // schema indices
    std::vector<std::vector<int>> codes;              // [predictor][row]
    std::vector<AttributeKind> kinds;                 // effective kind (binned age is ordinal)
    std::vector<std::vector<int>> rank_order;         // category codes in merge order
    ChaidTree tree;

    int build(std::vector<std::size_t> rows, int depth_now) {
        const int id = static_cast<int>(tree.nodes.size());
        tree.nodes.push_back({});
        std::array<std::size_t, 2> counts{0, 0};
        for (std::size_t r : rows) ++counts[static_cast<std::size_t>(train.records[r].label)];
        tree.nodes[static_cast<std::size_t>(id)].class_counts = counts;
        tree.depth = std::max(tree.depth, depth_now);

        const bool pure = counts[0] == 0 || counts[1] == 0;
        if (pure || depth_now >= params.max_depth || rows.size() < params.min_parent) return id;

        std::vector<AttrCandidate> candidates;
        for (std::size_t p = 0; p < predictors.size(); ++p) {
            AttrCandidate cand;
            cand.attribute = predictors[p];
            cand.kind = kinds[p];
            std::map<int, std::array<double, 2>> by_code;
            for (std::size_t r : rows) {
                by_code[codes[p][r]][static_cast<std::size_t>(train.records[r].label)] += 1.0;
            }
            for (int code : rank_order[p]) {
                auto it = by_code.find(code);
                if (it != by_code.end()) cand.categories.push_back({code, it->second});
            }
            candidates.push_back(std::move(cand));
        }

        std::optional<SplitChoice> choice = select_split(candidates, params);
        if (!choice) return id;

        std::size_t pred_idx = 0;
        while (predictors[pred_idx] != choice->attribute) ++pred_idx;
        std::vector<std::vector<std::size_t>> child_rows(choice->groups.size());
        for (std::size_t r : rows) {
            int code = codes[pred_idx][r];
            for (std::size_t g = 0; g < choice->groups.size(); ++g) {
                if (choice->groups[g].contains(code)) {
                    child_rows[g].push_back(r);
                    break;
                }
            }
        }
        rows.clear();
        rows.shrink_to_fit();

        std::vector<int> children;
        children.reserve(choice->groups.size());
        for (auto& rs : child_rows) children.push_back(build(std::move(rs), depth_now + 1));

        ChaidNode& node = tree.nodes[static_cast<std::size_t>(id)];
        node.attribute = choice->attribute;
        node.adjusted_p = choice->adjusted_p;
        node.groups = std::move(choice->groups);
        node.children = std::move(children);
        return id;
    }
};

}  // namespace detail

// Grows a multiway tree on a complete (imputed) training set. Continuous
// predictors are first binned into params.bin_count equal-frequency ordinal
// categories using the training values; the fitted boundaries travel with
// the tree for prediction.
inline ChaidTree grow_tree(const Dataset& train, const ChaidParams& params,
                           bool include_nonpredictive = false) {
    if (train.records.empty()) throw std::invalid_argument("grow_tree: empty training set");

    detail::ChaidBuilder b{train, params, {}, {}, {}, {}, {}};
    b.tree.params = params;
    for (const auto& attr : train.schema) b.tree.attribute_names.push_back(attr.name);

    for (std::size_t a = 0; a < train.arity(); ++a) {
        const auto& attr = train.schema[a];
        if (!attr.predictive && !include_nonpredictive) continue;
        for (std::size_t r = 0; r < train.size(); ++r) {
            if (train.records[r].values[a].is_missing()) {
                throw std::invalid_argument("grow_tree: missing value for attribute " + attr.name +
                                            "; impute before training");
            }
        }
        b.predictors.push_back(a);
        std::vector<int> col(train.size());
        if (attr.kind == AttributeKind::continuous) {
            std::vector<double> values;
            values.reserve(train.size());
            for (const auto& rec : train.records) values.push_back(rec.values[a].value);
            BinAssignment ba = bin_continuous(values, params.bin_count);
            for (std::size_t r = 0; r < train.size(); ++r) col[r] = static_cast<int>(ba.bins[r]);
            std::vector<int> order(ba.boundaries.count());
            for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
            b.kinds.push_back(AttributeKind::ordinal);
            b.rank_order.push_back(std::move(order));
            b.tree.bins[a] = ba.boundaries;
        } else {
            for (std::size_t r = 0; r < train.size(); ++r) col[r] = train.records[r].values[a].code();
            b.kinds.push_back(attr.kind);
            std::vector<int> order = attr.domain;  // rank order; nominal domains are declared sorted
            b.rank_order.push_back(std::move(order));
        }
        b.codes.push_back(std::move(col));
    }

    std::vector<std::size_t> all(train.size());
    for (std::size_t r = 0; r < all.size(); ++r) all[r] = r;
    b.build(std::move(all), 0);
    return std::move(b.tree);
}

// ---------------------------------------------------------------------------
// Serialization / rendering

inline nlohmann::json chaid_to_json(const ChaidTree& tree) {
    nlohmann::json j;
    j["format"] = "masskit/chaid";
    j["version"] = 1;
    j["params"] = {{"alpha_merge", tree.params.alpha_merge}, {"alpha_split", tree.params.alpha_split},
                   {"max_depth", tree.params.max_depth},     {"min_parent", tree.params.min_parent},
                   {"min_child", tree.params.min_child},     {"bin_count", tree.params.bin_count}};
    j["attribute_names"] = tree.attribute_names;
    j["depth"] = tree.depth;
    nlohmann::json bins = nlohmann::json::array();
    for (const auto& [attr, b] : tree.bins) bins.push_back({{"attribute", attr}, {"upper", b.upper}});
    j["bins"] = bins;
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& n : tree.nodes) {
        nlohmann::json jn;
        jn["class_counts"] = n.class_counts;
        if (!n.is_leaf()) {
            jn["attribute"] = n.attribute;
            jn["adjusted_p"] = n.adjusted_p;
            jn["children"] = n.children;
            nlohmann::json groups = nlohmann::json::array();
            for (const auto& g : n.groups) {
                groups.push_back({{"codes", g.codes}, {"counts", g.counts}});
            }
            jn["groups"] = groups;
        }
        nodes.push_back(jn);
    }
    j["nodes"] = nodes;
    return j;
}

inline ChaidTree chaid_from_json(const nlohmann::json& j) {
    if (j.value("format", "") != "masskit/chaid") throw std::runtime_error("not a chaid model file");
    ChaidTree tree;
    const auto& p = j.at("params");
    tree.params.alpha_merge = p.at("alpha_merge").get<double>();
    tree.params.alpha_split = p.at("alpha_split").get<double>();
    tree.params.max_depth = p.at("max_depth").get<int>();
    tree.params.min_parent = p.at("min_parent").get<std::size_t>();
    tree.params.min_child = p.at("min_child").get<std::size_t>();
    tree.params.bin_count = p.at("bin_count").get<int>();
    tree.attribute_names = j.at("attribute_names").get<std::vector<std::string>>();
    tree.depth = j.at("depth").get<int>();
    for (const auto& jb : j.at("bins")) {
        BinBoundaries b;
        b.upper = jb.at("upper").get<std::vector<double>>();
        tree.bins[jb.at("attribute").get<std::size_t>()] = b;
    }
    for (const auto& jn : j.at("nodes")) {
        ChaidNode n;
        n.class_counts = jn.at("class_counts").get<std::array<std::size_t, 2>>();
        if (jn.contains("children")) {
            n.attribute = jn.at("attribute").get<std::size_t>();
            n.adjusted_p = jn.at("adjusted_p").get<double>();
            n.children = jn.at("children").get<std::vector<int>>();
            for (const auto& jg : jn.at("groups")) {
                CategoryGroup g;
                g.codes = jg.at("codes").get<std::vector<int>>();
                g.counts = jg.at("counts").get<std::array<double, 2>>();
                n.groups.push_back(std::move(g));
            }
        }
        tree.nodes.push_back(std::move(n));
    }
    return tree;
}

namespace detail {

inline void render_chaid_node(const ChaidTree& tree, int id, int indent, std::ostringstream& os) {
    const ChaidNode& n = tree.nodes[static_cast<std::size_t>(id)];
    std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
    if (n.is_leaf()) {
        os << pad << "leaf benign=" << n.class_counts[0] << " malignant=" << n.class_counts[1] << " -> "
           << (n.majority() == Severity::malignant ? "malignant" : "benign") << " (score " << n.score()
           << ")\n";
        return;
    }
    os << pad << "split on " << tree.attribute_names[n.attribute] << " (adjusted p = " << n.adjusted_p
       << ")\n";
    for (std::size_t g = 0; g < n.groups.size(); ++g) {
        os << pad << "  in {";
        for (std::size_t i = 0; i < n.groups[g].codes.size(); ++i) {
            if (i) os << ',';
            os << n.groups[g].codes[i];
        }
        os << "}:\n";
        render_chaid_node(tree, n.children[g], indent + 2, os);
    }
}

}  // namespace detail

inline std::string chaid_to_text(const ChaidTree& tree) {
    std::ostringstream os;
    detail::render_chaid_node(tree, 0, 0, os);
    return os.str();
}

}  // namespace masskit
