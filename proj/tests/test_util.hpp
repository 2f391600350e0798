#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "masskit/dataset.hpp"
#include "masskit/rng.hpp"

namespace testutil {

inline std::filesystem::path uci_data_path() {
    if (const char* env = std::getenv("MASSKIT_DATA")) return env;
    return MASSKIT_DATA_FILE;
}

inline bool uci_data_available() { return std::filesystem::exists(uci_data_path()); }

// Builds a record against the mammographic schema; -1 marks a missing cell.
inline masskit::Record make_record(int bi_rads, double age, int shape, int margin, int density, int label) {
    masskit::Record rec;
    auto cell = [](double v) {
        return v < 0 ? masskit::Cell::missing_cell() : masskit::Cell::valid_cell(v);
    };
    rec.values = {cell(bi_rads), cell(age), cell(shape), cell(margin), cell(density)};
    rec.label = label == 1 ? masskit::Severity::malignant : masskit::Severity::benign;
    return rec;
}

// Deterministic synthetic dataset in the mammographic schema with planted
// class structure: malignant masses skew to irregular shapes, ill-defined
// margins, and higher ages. Used where tests need a learnable mid-sized
// dataset without touching the real file.
inline masskit::Dataset synthetic_masses(std::size_t n, std::uint64_t seed, double missing_rate = 0.0) {
    masskit::Dataset ds;
    ds.schema = masskit::mammographic_schema();
    masskit::Rng rng(seed);
    for (std::size_t i = 0; i < n; ++i) {
        int label = rng.uniform() < 0.46 ? 1 : 0;
        double age = label == 1 ? 45.0 + 40.0 * rng.uniform() : 25.0 + 45.0 * rng.uniform();
        int shape, margin, density;
        if (label == 1) {
            shape = rng.uniform() < 0.7 ? 4 : 1 + static_cast<int>(rng.below(3));
            margin = rng.uniform() < 0.6 ? 4 + static_cast<int>(rng.below(2)) : 1 + static_cast<int>(rng.below(3));
            density = 1 + static_cast<int>(rng.below(4));
        } else {
            shape = rng.uniform() < 0.7 ? 1 + static_cast<int>(rng.below(2)) : 3 + static_cast<int>(rng.below(2));
            margin = rng.uniform() < 0.65 ? 1 : 1 + static_cast<int>(rng.below(4));
            density = 1 + static_cast<int>(rng.below(4));
        }
        int bi_rads = label == 1 ? 4 + static_cast<int>(rng.below(2)) : 2 + static_cast<int>(rng.below(3));
        masskit::Record rec = make_record(bi_rads, std::floor(age), shape, margin, density, label);
        if (missing_rate > 0.0) {
            for (auto& cell : rec.values) {
                if (rng.uniform() < missing_rate) cell = masskit::Cell::missing_cell();
            }
        }
        ds.records.push_back(std::move(rec));
    }
    return ds;
}

class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        path_ = std::filesystem::temp_directory_path() /
                ("masskit_" + tag + "_" + std::to_string(::getpid()));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() { std::filesystem::remove_all(path_); }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace testutil
