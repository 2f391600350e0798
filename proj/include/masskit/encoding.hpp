#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "masskit/dataset.hpp"

namespace masskit {

struct EncodingConfig {
    // Non-predictive attributes (BI-RADS assessment) are excluded from the
    // feature matrix unless this is set.
    bool include_nonpredictive = false;

    friend bool operator==(const EncodingConfig&, const EncodingConfig&) = default;
};

enum class ColumnRole { one_hot, ordinal_rank, min_max };

struct ColumnDescriptor {
    std::size_t attribute = 0;  // index into the schema
    std::string attribute_name;
    ColumnRole role = ColumnRole::min_max;
    int category = 0;  // one_hot only
};

struct FeatureMatrix {
    std::vector<std::vector<double>> rows;
    std::vector<int> labels;  // 0 = benign, 1 = malignant
    std::vector<ColumnDescriptor> columns;

    std::size_t width() const { return columns.size(); }
    std::size_t size() const { return rows.size(); }
};

// Maps records to fixed-width real vectors: nominal -> one-hot over the full
// declared domain, ordinal -> rank/(|domain|-1), continuous -> min-max using
// the fit dataset's observed range. Fit on the training partition only; rows
// transformed later may fall outside [0,1] by design (no clipping).
class Encoder {
public:
    static Encoder fit(const Dataset& train, EncodingConfig cfg = {}) {
        Encoder enc;
        enc.cfg_ = cfg;
        enc.schema_ = train.schema;
        for (std::size_t a = 0; a < train.schema.size(); ++a) {
            const auto& attr = train.schema[a];
            if (!attr.predictive && !cfg.include_nonpredictive) continue;
            enc.attributes_.push_back(a);
            if (attr.kind == AttributeKind::continuous) {
                double lo = 0.0, hi = 0.0;
                bool seen = false;
                for (const auto& rec : train.records) {
                    const Cell& c = rec.values[a];
                    if (c.is_missing()) continue;
                    if (!seen) {
                        lo = hi = c.value;
                        seen = true;
                    } else {
                        lo = std::min(lo, c.value);
                        hi = std::max(hi, c.value);
                    }
                }
                if (!seen) throw std::runtime_error("cannot fit scaler: no values for attribute " + attr.name);
                enc.fitted_lo_.push_back(lo);
                enc.fitted_hi_.push_back(hi);
            } else {
                enc.fitted_lo_.push_back(0.0);
                enc.fitted_hi_.push_back(0.0);
            }
        }
        return enc;
    }

    std::size_t width() const {
        std::size_t w = 0;
        for (std::size_t a : attributes_) {
            w += schema_[a].kind == AttributeKind::nominal ? schema_[a].domain.size() : 1;
        }
        return w;
    }

    FeatureMatrix transform(const Dataset& ds) const {
        check_schema(ds);
        FeatureMatrix fm;
        fm.columns = columns();
        fm.rows.reserve(ds.size());
        fm.labels.reserve(ds.size());
        for (std::size_t r = 0; r < ds.records.size(); ++r) {
            fm.rows.push_back(encode_row(ds.records[r], r));
            fm.labels.push_back(static_cast<int>(ds.records[r].label));
        }
        return fm;
    }

    std::vector<double> encode_row(const Record& rec, std::size_t record_index = 0) const {
        std::vector<double> row;
        row.reserve(width());
        for (std::size_t k = 0; k < attributes_.size(); ++k) {
            std::size_t a = attributes_[k];
            const auto& attr = schema_[a];
            const Cell& c = rec.values[a];
            if (c.is_missing()) {
                throw std::runtime_error("record " + std::to_string(record_index) + ": attribute " + attr.name +
                                         " is missing; impute before encoding");
            }
            switch (attr.kind) {
                case AttributeKind::nominal: {
                    std::size_t rank = attr.rank_of(c.code());
                    for (std::size_t d = 0; d < attr.domain.size(); ++d) row.push_back(d == rank ? 1.0 : 0.0);
                    break;
                }
                case AttributeKind::ordinal: {
                    std::size_t rank = attr.rank_of(c.code());
                    double denom = attr.domain.size() > 1 ? static_cast<double>(attr.domain.size() - 1) : 1.0;
                    row.push_back(static_cast<double>(rank) / denom);
                    break;
                }
                case AttributeKind::continuous: {
                    double lo = fitted_lo_[k], hi = fitted_hi_[k];
                    row.push_back(hi > lo ? (c.value - lo) / (hi - lo) : 0.0);
                    break;
                }
            }
        }
        return row;
    }

    std::vector<ColumnDescriptor> columns() const {
        std::vector<ColumnDescriptor> cols;
        for (std::size_t a : attributes_) {
            const auto& attr = schema_[a];
            if (attr.kind == AttributeKind::nominal) {
                for (int code : attr.domain) cols.push_back({a, attr.name, ColumnRole::one_hot, code});
            } else if (attr.kind == AttributeKind::ordinal) {
                cols.push_back({a, attr.name, ColumnRole::ordinal_rank, 0});
            } else {
                cols.push_back({a, attr.name, ColumnRole::min_max, 0});
            }
        }
        return cols;
    }

    const EncodingConfig& config() const { return cfg_; }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["include_nonpredictive"] = cfg_.include_nonpredictive;
        nlohmann::json attrs = nlohmann::json::array();
        for (std::size_t k = 0; k < attributes_.size(); ++k) {
            const auto& attr = schema_[attributes_[k]];
            nlohmann::json ja;
            ja["name"] = attr.name;
            ja["kind"] = to_string(attr.kind);
            ja["domain"] = attr.domain;
            if (attr.kind == AttributeKind::continuous) {
                ja["fitted_min"] = fitted_lo_[k];
                ja["fitted_max"] = fitted_hi_[k];
            }
            attrs.push_back(ja);
        }
        j["attributes"] = attrs;
        j["schema"] = schema_to_json(schema_);
        return j;
    }

    static Encoder from_json(const nlohmann::json& j) {
        Encoder enc;
        enc.cfg_.include_nonpredictive = j.at("include_nonpredictive").get<bool>();
        enc.schema_ = schema_from_json(j.at("schema"));
        for (const auto& ja : j.at("attributes")) {
            std::string name = ja.at("name").get<std::string>();
            std::size_t a = 0;
            while (a < enc.schema_.size() && enc.schema_[a].name != name) ++a;
            if (a == enc.schema_.size()) throw std::runtime_error("encoder refers to unknown attribute " + name);
            enc.attributes_.push_back(a);
            enc.fitted_lo_.push_back(ja.value("fitted_min", 0.0));
            enc.fitted_hi_.push_back(ja.value("fitted_max", 0.0));
        }
        return enc;
    }

    const std::vector<AttributeSchema>& schema() const { return schema_; }

private:
    void check_schema(const Dataset& ds) const {
        if (ds.schema.size() != schema_.size()) throw std::runtime_error("dataset schema does not match encoder");
        for (std::size_t a = 0; a < schema_.size(); ++a) {
            if (ds.schema[a].name != schema_[a].name || ds.schema[a].kind != schema_[a].kind ||
                ds.schema[a].domain != schema_[a].domain) {
                throw std::runtime_error("dataset schema does not match encoder at attribute " + schema_[a].name);
            }
        }
    }

    EncodingConfig cfg_;
    std::vector<AttributeSchema> schema_;
    std::vector<std::size_t> attributes_;  // schema indices included, in order
    std::vector<double> fitted_lo_, fitted_hi_;  // parallel to attributes_
};

inline FeatureMatrix encode(const Dataset& ds, EncodingConfig cfg = {}) {
    return Encoder::fit(ds, cfg).transform(ds);
}

}  // namespace masskit
