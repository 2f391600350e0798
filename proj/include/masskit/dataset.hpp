#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace masskit {

enum class AttributeKind { ordinal, nominal, continuous };

inline const char* to_string(AttributeKind k) {
    switch (k) {
        case AttributeKind::ordinal: return "ordinal";
        case AttributeKind::nominal: return "nominal";
        default: return "continuous";
    }
}

// Declared column type. Categorical kinds carry an explicit code domain
// (ordered for ordinal, a plain set for nominal); continuous kinds carry a
// permitted [lo, hi] range. Values outside the domain are coerced to MISSING
// at parse time and reported separately by the audit.
struct AttributeSchema {
    std::string name;
    AttributeKind kind = AttributeKind::nominal;
    std::vector<int> domain;  // categorical codes, rank order for ordinal
    double lo = 0.0;          // continuous range
    double hi = 0.0;
    bool predictive = true;

    bool categorical() const { return kind != AttributeKind::continuous; }

    bool in_domain(double v) const {
        if (categorical()) {
            double r = std::floor(v);
            if (r != v) return false;
            if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) return false;
            int code = static_cast<int>(v);
            return std::find(domain.begin(), domain.end(), code) != domain.end();
        }
        return v >= lo && v <= hi;
    }

    // Rank of a code in an ordinal/nominal domain.
    std::size_t rank_of(int code) const {
        auto it = std::find(domain.begin(), domain.end(), code);
        if (it == domain.end()) throw std::invalid_argument("code " + std::to_string(code) + " not in domain of " + name);
        return static_cast<std::size_t>(it - domain.begin());
    }
};

enum class CellState : std::uint8_t {
    valid,
    missing,        // explicit "?" in the source
    out_of_domain,  // parsed but outside the declared domain; treated as missing
};

struct Cell {
    double value = 0.0;
    CellState state = CellState::missing;

    bool is_missing() const { return state != CellState::valid; }
    int code() const { return static_cast<int>(value); }

    static Cell valid_cell(double v) { return {v, CellState::valid}; }
    static Cell missing_cell() { return {0.0, CellState::missing}; }
    static Cell coerced_cell() { return {0.0, CellState::out_of_domain}; }

    friend bool operator==(const Cell& a, const Cell& b) {
        if (a.state != b.state) return false;
        return a.is_missing() || a.value == b.value;
    }
};

enum class Severity : int { benign = 0, malignant = 1 };

struct Record {
    std::vector<Cell> values;
    Severity label = Severity::benign;

    friend bool operator==(const Record& a, const Record& b) {
        return a.label == b.label && a.values == b.values;
    }
};

struct Dataset {
    std::vector<AttributeSchema> schema;
    std::vector<Record> records;

    std::size_t size() const { return records.size(); }
    std::size_t arity() const { return schema.size(); }
};

// Schema of the UCI mammographic-masses file. BI-RADS is kept but flagged
// non-predictive; the file is known to contain assessment codes outside
// {0..5} (a 55 and a handful of 6s), which parse as out-of-domain.
inline std::vector<AttributeSchema> mammographic_schema() {
    return {
        {"bi_rads", AttributeKind::ordinal, {0, 1, 2, 3, 4, 5}, 0, 0, false},
        {"age", AttributeKind::continuous, {}, 0.0, 120.0, true},
        {"shape", AttributeKind::nominal, {1, 2, 3, 4}, 0, 0, true},
        {"margin", AttributeKind::nominal, {1, 2, 3, 4, 5}, 0, 0, true},
        {"density", AttributeKind::ordinal, {1, 2, 3, 4}, 0, 0, true},
    };
}

inline AttributeKind attribute_kind_from_string(const std::string& s) {
    if (s == "ordinal") return AttributeKind::ordinal;
    if (s == "nominal") return AttributeKind::nominal;
    if (s == "continuous") return AttributeKind::continuous;
    throw std::runtime_error("unknown attribute kind: " + s);
}

inline nlohmann::json schema_to_json(const std::vector<AttributeSchema>& schema) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& attr : schema) {
        out.push_back({{"name", attr.name},
                       {"kind", to_string(attr.kind)},
                       {"domain", attr.domain},
                       {"lo", attr.lo},
                       {"hi", attr.hi},
                       {"predictive", attr.predictive}});
    }
    return out;
}

inline std::vector<AttributeSchema> schema_from_json(const nlohmann::json& j) {
    std::vector<AttributeSchema> schema;
    for (const auto& ja : j) {
        AttributeSchema attr;
        attr.name = ja.at("name").get<std::string>();
        attr.kind = attribute_kind_from_string(ja.at("kind").get<std::string>());
        attr.domain = ja.at("domain").get<std::vector<int>>();
        attr.lo = ja.at("lo").get<double>();
        attr.hi = ja.at("hi").get<double>();
        attr.predictive = ja.at("predictive").get<bool>();
        schema.push_back(std::move(attr));
    }
    return schema;
}

class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t line_no, const std::string& what)
        : std::runtime_error("line " + std::to_string(line_no) + ": " + what), line_no_(line_no) {}
    std::size_t line_no() const { return line_no_; }

private:
    std::size_t line_no_;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline bool parse_number(std::string_view tok, double& out) {
    const char* first = tok.data();
    const char* last = tok.data() + tok.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc{} && ptr == last && std::isfinite(out);
}

}  // namespace detail

// One comma-separated line -> Record. "?" is an explicit missing marker;
// numeric values outside the attribute's declared domain become MISSING with
// the out_of_domain state so the audit can count them. The label is the last
// field and must be 0 or 1.
inline Record parse_record(std::string_view line, const std::vector<AttributeSchema>& schema,
                           std::size_t line_no = 0) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            fields.push_back(detail::trim(line.substr(start)));
            break;
        }
        fields.push_back(detail::trim(line.substr(start, pos - start)));
        start = pos + 1;
    }
    if (fields.size() != schema.size() + 1) {
        throw ParseError(line_no, "expected " + std::to_string(schema.size() + 1) + " fields, got " +
                                      std::to_string(fields.size()));
    }

    Record rec;
    rec.values.reserve(schema.size());
    for (std::size_t i = 0; i < schema.size(); ++i) {
        std::string_view tok = fields[i];
        if (tok == "?") {
            rec.values.push_back(Cell::missing_cell());
            continue;
        }
        double v = 0.0;
        if (!detail::parse_number(tok, v)) {
            throw ParseError(line_no, "non-numeric value '" + std::string(tok) + "' for attribute " + schema[i].name);
        }
        rec.values.push_back(schema[i].in_domain(v) ? Cell::valid_cell(v) : Cell::coerced_cell());
    }

    std::string_view lab = fields.back();
    if (lab == "?" || lab.empty()) throw ParseError(line_no, "missing label");
    if (lab == "0") {
        rec.label = Severity::benign;
    } else if (lab == "1") {
        rec.label = Severity::malignant;
    } else {
        throw ParseError(line_no, "label must be 0 or 1, got '" + std::string(lab) + "'");
    }
    return rec;
}

// Inverse of parse_record. Missing cells (explicit or coerced) render as "?".
inline std::string format_record(const Record& rec, const std::vector<AttributeSchema>& schema) {
    std::string out;
    for (std::size_t i = 0; i < schema.size(); ++i) {
        const Cell& c = rec.values[i];
        if (c.is_missing()) {
            out += '?';
        } else if (schema[i].categorical() || c.value == std::floor(c.value)) {
            out += std::to_string(static_cast<long long>(c.value));
        } else {
            char buf[32];
            auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), c.value);
            out.append(buf, ptr);
        }
        out += ',';
    }
    out += std::to_string(static_cast<int>(rec.label));
    return out;
}

inline Dataset load_dataset(std::istream& in, std::vector<AttributeSchema> schema) {
    Dataset ds;
    ds.schema = std::move(schema);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        ds.records.push_back(parse_record(line, ds.schema, line_no));
    }
    return ds;
}

inline Dataset load_dataset(const std::filesystem::path& path,
                            std::vector<AttributeSchema> schema = mammographic_schema()) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open dataset file: " + path.string());
    return load_dataset(in, std::move(schema));
}

inline void write_dataset(const Dataset& ds, std::ostream& out) {
    for (const auto& rec : ds.records) out << format_record(rec, ds.schema) << '\n';
}

inline void write_dataset(const Dataset& ds, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write dataset file: " + path.string());
    write_dataset(ds, out);
}

// ---------------------------------------------------------------------------
// Audit

struct AttributeAudit {
    std::string name;
    std::size_t valid = 0;
    std::size_t missing = 0;        // explicit "?"
    std::size_t out_of_domain = 0;  // coerced to missing at parse
    std::map<int, std::size_t> histogram;  // categorical only, valid cells
    double min = 0.0, max = 0.0, mean = 0.0;  // continuous only, valid cells

    std::size_t unusable() const { return missing + out_of_domain; }
};

struct AuditReport {
    std::size_t record_count = 0;
    std::vector<AttributeAudit> attributes;
    std::array<std::size_t, 2> class_counts{0, 0};  // [benign, malignant]
    bool empty_warning = false;

    std::size_t total_missing() const {
        std::size_t t = 0;
        for (const auto& a : attributes) t += a.missing;
        return t;
    }
    std::size_t total_unusable() const {
        std::size_t t = 0;
        for (const auto& a : attributes) t += a.unusable();
        return t;
    }
};

inline AuditReport audit(const Dataset& ds) {
    AuditReport rep;
    rep.record_count = ds.size();
    rep.empty_warning = ds.records.empty();
    rep.attributes.resize(ds.arity());
    std::vector<double> sums(ds.arity(), 0.0);
    for (std::size_t a = 0; a < ds.arity(); ++a) {
        rep.attributes[a].name = ds.schema[a].name;
        rep.attributes[a].min = std::numeric_limits<double>::infinity();
        rep.attributes[a].max = -std::numeric_limits<double>::infinity();
    }
    for (const auto& rec : ds.records) {
        ++rep.class_counts[static_cast<std::size_t>(rec.label)];
        for (std::size_t a = 0; a < ds.arity(); ++a) {
            const Cell& c = rec.values[a];
            auto& at = rep.attributes[a];
            switch (c.state) {
                case CellState::valid:
                    ++at.valid;
                    if (ds.schema[a].categorical()) {
                        ++at.histogram[c.code()];
                    } else {
                        at.min = std::min(at.min, c.value);
                        at.max = std::max(at.max, c.value);
                        sums[a] += c.value;
                    }
                    break;
                case CellState::missing: ++at.missing; break;
                case CellState::out_of_domain: ++at.out_of_domain; break;
            }
        }
    }
    for (std::size_t a = 0; a < ds.arity(); ++a) {
        auto& at = rep.attributes[a];
        if (!ds.schema[a].categorical() && at.valid > 0) {
            at.mean = sums[a] / static_cast<double>(at.valid);
        } else if (at.valid == 0) {
            at.min = at.max = 0.0;
        }
    }
    return rep;
}

inline nlohmann::json audit_to_json(const AuditReport& rep) {
    nlohmann::json j;
    j["record_count"] = rep.record_count;
    j["class_counts"] = {{"benign", rep.class_counts[0]}, {"malignant", rep.class_counts[1]}};
    j["total_missing"] = rep.total_missing();
    j["total_unusable"] = rep.total_unusable();
    if (rep.empty_warning) j["warning"] = "dataset is empty";
    nlohmann::json attrs = nlohmann::json::array();
    for (const auto& a : rep.attributes) {
        nlohmann::json ja;
        ja["name"] = a.name;
        ja["valid"] = a.valid;
        ja["missing"] = a.missing;
        ja["out_of_domain"] = a.out_of_domain;
        if (!a.histogram.empty()) {
            nlohmann::json h;
            for (auto [code, count] : a.histogram) h[std::to_string(code)] = count;
            ja["histogram"] = h;
        }
        if (a.valid > 0 && a.histogram.empty()) {
            ja["min"] = a.min;
            ja["max"] = a.max;
            ja["mean"] = a.mean;
        }
        attrs.push_back(ja);
    }
    j["attributes"] = attrs;
    return j;
}

inline std::string audit_to_text(const AuditReport& rep) {
    std::ostringstream os;
    os << "records: " << rep.record_count << "  (benign " << rep.class_counts[0] << ", malignant "
       << rep.class_counts[1] << ")\n";
    if (rep.empty_warning) os << "warning: dataset is empty\n";
    os << "attribute        valid  missing  out_of_domain\n";
    for (const auto& a : rep.attributes) {
        os << a.name;
        for (std::size_t i = a.name.size(); i < 17; ++i) os << ' ';
        std::string v = std::to_string(a.valid), m = std::to_string(a.missing), o = std::to_string(a.out_of_domain);
        os << v;
        for (std::size_t i = v.size(); i < 7; ++i) os << ' ';
        os << m;
        for (std::size_t i = m.size(); i < 9; ++i) os << ' ';
        os << o << '\n';
    }
    os << "total missing: " << rep.total_missing();
    if (rep.total_unusable() != rep.total_missing())
        os << "  (plus " << rep.total_unusable() - rep.total_missing() << " out-of-domain)";
    os << '\n';
    return os.str();
}

}  // namespace masskit
