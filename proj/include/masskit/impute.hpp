#pragma once

#include <cstdint>
#include <vector>

#include <nlohmann/json.hpp>

#include "masskit/cart.hpp"
#include "masskit/dataset.hpp"

namespace masskit {

struct ImputationEntry {
    std::size_t record = 0;
    std::size_t attribute = 0;
    double value = 0.0;
};

struct ImputationResult {
    Dataset data;
    std::vector<ImputationEntry> log;  // one entry per filled cell, record-major
};

// One CART per attribute that has missing cells, each trained on the original
// pre-imputation data; the filler then rewrites only the missing cells, so
// imputations never chain. The seed is part of the contract for
// reproducibility bookkeeping; training itself is deterministic.
inline ImputationResult impute_all(const Dataset& ds, const CartParams& params = {},
                                   std::uint64_t seed = 0, bool use_label = false) {
    (void)seed;
    ImputationResult out;
    out.data = ds;

    std::vector<bool> needs(ds.arity(), false);
    for (const auto& rec : ds.records) {
        for (std::size_t a = 0; a < ds.arity(); ++a) {
            if (rec.values[a].is_missing()) needs[a] = true;
        }
    }

    std::vector<CartTree> trees(ds.arity());
    for (std::size_t a = 0; a < ds.arity(); ++a) {
        if (needs[a]) trees[a] = train_cart(ds, a, params, use_label);
    }

    for (std::size_t r = 0; r < ds.size(); ++r) {
        for (std::size_t a = 0; a < ds.arity(); ++a) {
            if (!ds.records[r].values[a].is_missing()) continue;
            double filled = trees[a].predict(ds.records[r], ds.arity());
            out.data.records[r].values[a] = Cell::valid_cell(filled);
            out.log.push_back({r, a, filled});
        }
    }
    return out;
}

inline nlohmann::json imputation_log_json(const ImputationResult& res, const Dataset& original) {
    nlohmann::json entries = nlohmann::json::array();
    for (const auto& e : res.log) {
        entries.push_back({{"record", e.record},
                           {"attribute", original.schema[e.attribute].name},
                           {"value", e.value}});
    }
    return nlohmann::json{{"filled_cells", res.log.size()}, {"entries", entries}};
}

}  // namespace masskit
