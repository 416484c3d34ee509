#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

#include "smartsvm/core.hpp"
#include "smartsvm/rng.hpp"

namespace smartsvm {

// Feature matrix plus dense class ids. Ids are assigned in first-appearance
// order of the original label text; class_labels maps id -> original text.
struct LabeledDataset {
    Matrix features;
    std::vector<int> labels;
    std::vector<std::string> class_labels;

    std::size_t n_samples() const { return features.rows; }
    std::size_t n_features() const { return features.cols; }
    int n_classes() const { return static_cast<int>(class_labels.size()); }

    std::vector<std::size_t> class_counts() const {
        std::vector<std::size_t> counts(class_labels.size(), 0);
        for (int y : labels) counts[static_cast<std::size_t>(y)]++;
        return counts;
    }

    std::vector<double> empirical_priors() const {
        const auto counts = class_counts();
        std::vector<double> priors(counts.size());
        for (std::size_t k = 0; k < counts.size(); ++k) {
            priors[k] = static_cast<double>(counts[k]) / static_cast<double>(n_samples());
        }
        return priors;
    }
};

inline void validate_dataset(const LabeledDataset& ds) {
    if (ds.features.rows < 2) throw DataError("dataset needs at least 2 samples");
    if (ds.features.cols < 1) throw DataError("dataset needs at least 1 feature");
    if (ds.labels.size() != ds.features.rows) {
        throw DataError("label count does not match sample count");
    }
    const int k = ds.n_classes();
    if (k < 2) throw DataError("fewer than 2 classes");
    std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
    for (int y : ds.labels) {
        if (y < 0 || y >= k) throw DataError("class id out of range");
        counts[static_cast<std::size_t>(y)]++;
    }
    for (std::size_t c = 0; c < counts.size(); ++c) {
        if (counts[c] == 0) {
            throw DataError("class '" + ds.class_labels[c] + "' has no samples");
        }
    }
    for (double v : ds.features.data) {
        if (!std::isfinite(v)) throw DataError("non-finite feature value");
    }
}

// Rows in ascending order of the given indices' positions; class ids and the
// label table are carried over unchanged, so a subset may omit some classes.
inline LabeledDataset dataset_subset(const LabeledDataset& ds, std::span<const std::size_t> rows) {
    LabeledDataset out;
    out.features = gather_rows(ds.features, rows);
    out.labels.reserve(rows.size());
    for (std::size_t r : rows) out.labels.push_back(ds.labels[r]);
    out.class_labels = ds.class_labels;
    return out;
}

using LabelColumn = std::variant<std::string, std::size_t>;

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

inline bool parse_finite_double(std::string_view s, double& out) {
    s = trim(s);
    if (s.empty()) return false;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    auto res = std::from_chars(first, last, out);
    return res.ec == std::errc{} && res.ptr == last && std::isfinite(out);
}

inline std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
        if (i == line.size() || line[i] == ',') {
            fields.push_back(line.substr(start, i - start));
            start = i + 1;
        }
    }
    return fields;
}

inline std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open file: " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    return lines;
}

struct CsvLayout {
    std::size_t n_cols = 0;
    std::size_t label_index = 0;
    bool has_header = false;
};

// Resolves the label column and decides whether the first line is a header.
// Selection by name requires a header; selection by index treats the first
// line as a header when any non-label cell fails to parse as a number.
inline CsvLayout resolve_layout(const std::vector<std::string>& lines,
                                const LabelColumn& label_column,
                                const std::string& path) {
    if (lines.empty()) throw DataError("empty file: " + path);
    const auto first = split_fields(lines.front());
    CsvLayout layout;
    layout.n_cols = first.size();
    if (std::holds_alternative<std::string>(label_column)) {
        const auto& name = std::get<std::string>(label_column);
        bool found = false;
        for (std::size_t j = 0; j < first.size(); ++j) {
            if (trim(first[j]) == name) {
                layout.label_index = j;
                found = true;
                break;
            }
        }
        if (!found) {
            throw DataError("label column '" + name + "' not found in header of " + path);
        }
        layout.has_header = true;
    } else {
        layout.label_index = std::get<std::size_t>(label_column);
        if (layout.label_index >= layout.n_cols) {
            throw DataError("label column index out of range for " + path);
        }
        double v;
        for (std::size_t j = 0; j < first.size(); ++j) {
            if (j == layout.label_index) continue;
            if (!parse_finite_double(first[j], v)) {
                layout.has_header = true;
                break;
            }
        }
    }
    if (layout.n_cols < 2) {
        throw DataError("need at least one feature column besides the label: " + path);
    }
    return layout;
}

}  // namespace detail

// CSV loader: comma separated, UTF-8, header auto-detected. Errors report
// 1-based file lines and 0-based columns.
inline LabeledDataset load_csv(const std::string& path, const LabelColumn& label_column) {
    const auto lines = detail::read_lines(path);
    const auto layout = detail::resolve_layout(lines, label_column, path);
    const std::size_t first_row = layout.has_header ? 1 : 0;
    const std::size_t n_rows = lines.size() - first_row;
    if (n_rows == 0) throw DataError("no data rows in " + path);

    LabeledDataset ds;
    ds.features = Matrix(n_rows, layout.n_cols - 1);
    ds.labels.reserve(n_rows);
    std::unordered_map<std::string, int> label_ids;
    for (std::size_t r = 0; r < n_rows; ++r) {
        const std::size_t line_no = first_row + r + 1;
        const auto& line = lines[first_row + r];
        if (detail::trim(line).empty()) {
            throw DataError("empty row at line " + std::to_string(line_no) + " of " + path);
        }
        const auto fields = detail::split_fields(line);
        if (fields.size() != layout.n_cols) {
            throw DataError("line " + std::to_string(line_no) + " of " + path + " has " +
                            std::to_string(fields.size()) + " cells, expected " +
                            std::to_string(layout.n_cols));
        }
        std::size_t out_col = 0;
        for (std::size_t j = 0; j < fields.size(); ++j) {
            if (j == layout.label_index) {
                const auto text = detail::trim(fields[j]);
                if (text.empty()) {
                    throw DataError("empty label at line " + std::to_string(line_no) + " of " + path);
                }
                auto [it, inserted] =
                    label_ids.try_emplace(std::string(text), static_cast<int>(ds.class_labels.size()));
                if (inserted) ds.class_labels.emplace_back(text);
                ds.labels.push_back(it->second);
            } else {
                double v;
                if (!detail::parse_finite_double(fields[j], v)) {
                    throw DataError("non-numeric cell at line " + std::to_string(line_no) +
                                    ", column " + std::to_string(j) + " of " + path);
                }
                ds.features(r, out_col++) = v;
            }
        }
    }
    validate_dataset(ds);
    return ds;
}

// Feature-only loader. When drop_column names a header column that is
// present, that column is skipped; an index always drops that position.
inline Matrix load_features_csv(const std::string& path,
                                const std::optional<LabelColumn>& drop_column = std::nullopt) {
    const auto lines = detail::read_lines(path);
    if (lines.empty()) throw DataError("empty file: " + path);
    const auto first = detail::split_fields(lines.front());
    const std::size_t n_cols = first.size();

    std::optional<std::size_t> drop;
    bool has_header = false;
    if (drop_column && std::holds_alternative<std::size_t>(*drop_column)) {
        const std::size_t idx = std::get<std::size_t>(*drop_column);
        if (idx >= n_cols) throw DataError("label column index out of range for " + path);
        drop = idx;
    } else if (drop_column) {
        const auto& name = std::get<std::string>(*drop_column);
        for (std::size_t j = 0; j < first.size(); ++j) {
            if (detail::trim(first[j]) == name) {
                drop = j;
                has_header = true;
                break;
            }
        }
    }
    if (!has_header) {
        double v;
        for (std::size_t j = 0; j < first.size(); ++j) {
            if (drop && j == *drop) continue;
            if (!detail::parse_finite_double(first[j], v)) {
                has_header = true;
                break;
            }
        }
    }
    const std::size_t keep = n_cols - (drop ? 1 : 0);
    if (keep == 0) throw DataError("no feature columns in " + path);
    const std::size_t first_row = has_header ? 1 : 0;
    const std::size_t n_rows = lines.size() - first_row;
    if (n_rows == 0) throw DataError("no data rows in " + path);

    Matrix m(n_rows, keep);
    for (std::size_t r = 0; r < n_rows; ++r) {
        const std::size_t line_no = first_row + r + 1;
        const auto& line = lines[first_row + r];
        if (detail::trim(line).empty()) {
            throw DataError("empty row at line " + std::to_string(line_no) + " of " + path);
        }
        const auto fields = detail::split_fields(line);
        if (fields.size() != n_cols) {
            throw DataError("line " + std::to_string(line_no) + " of " + path + " has " +
                            std::to_string(fields.size()) + " cells, expected " +
                            std::to_string(n_cols));
        }
        std::size_t out_col = 0;
        for (std::size_t j = 0; j < fields.size(); ++j) {
            if (drop && j == *drop) continue;
            double v;
            if (!detail::parse_finite_double(fields[j], v)) {
                throw DataError("non-numeric cell at line " + std::to_string(line_no) +
                                ", column " + std::to_string(j) + " of " + path);
            }
            m(r, out_col++) = v;
        }
    }
    return m;
}

// Features as shortest round-trip decimals, labels as original text. Header
// is x0..x{d-1} plus "label"; load_csv(path, "label") restores the dataset
// exactly.
inline std::string to_csv_string(const LabeledDataset& ds) {
    std::string out;
    for (std::size_t j = 0; j < ds.n_features(); ++j) {
        out += "x" + std::to_string(j) + ",";
    }
    out += "label\n";
    for (std::size_t i = 0; i < ds.n_samples(); ++i) {
        for (std::size_t j = 0; j < ds.n_features(); ++j) {
            out += format_double(ds.features(i, j));
            out += ',';
        }
        out += ds.class_labels[static_cast<std::size_t>(ds.labels[i])];
        out += '\n';
    }
    return out;
}

inline void save_csv(const LabeledDataset& ds, const std::string& path) {
    const std::string out = to_csv_string(ds);
    std::ofstream f(path, std::ios::binary);
    if (!f || !(f << out) || !f.flush()) throw DataError("cannot write file: " + path);
}

// Per-class split at the given fraction. Each class keeps at least one sample
// on each side; row order within each part follows the original dataset.
inline std::pair<LabeledDataset, LabeledDataset> stratified_split(const LabeledDataset& ds,
                                                                  double train_fraction,
                                                                  std::uint64_t seed) {
    validate_dataset(ds);
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw DataError("train fraction must be strictly between 0 and 1");
    }
    const auto counts = ds.class_counts();
    for (std::size_t c = 0; c < counts.size(); ++c) {
        if (counts[c] < 2) {
            throw DataError("class '" + ds.class_labels[c] + "' has fewer than 2 samples");
        }
    }
    Rng rng(seed);
    std::vector<char> in_train(ds.n_samples(), 0);
    for (int c = 0; c < ds.n_classes(); ++c) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < ds.n_samples(); ++i) {
            if (ds.labels[i] == c) idx.push_back(i);
        }
        rng.shuffle(idx);
        const auto n_c = idx.size();
        std::size_t t = static_cast<std::size_t>(
            std::llround(train_fraction * static_cast<double>(n_c)));
        t = std::clamp<std::size_t>(t, 1, n_c - 1);
        for (std::size_t i = 0; i < t; ++i) in_train[idx[i]] = 1;
    }
    std::vector<std::size_t> train_rows, test_rows;
    for (std::size_t i = 0; i < ds.n_samples(); ++i) {
        (in_train[i] ? train_rows : test_rows).push_back(i);
    }
    return {dataset_subset(ds, train_rows), dataset_subset(ds, test_rows)};
}

struct FoldAssignment {
    std::vector<int> fold_of;
    int k = 0;
    std::vector<int> sparse_classes;  // classes with fewer samples than folds
};

// Stratified k-fold: shuffled within each class, dealt in rotation so both
// per-class and overall fold sizes differ by at most one.
inline FoldAssignment kfold(const LabeledDataset& ds, int k, std::uint64_t seed) {
    if (k < 2) throw DataError("fold count must be at least 2");
    if (static_cast<std::size_t>(k) > ds.n_samples()) {
        throw DataError("fold count exceeds sample count");
    }
    FoldAssignment fa;
    fa.k = k;
    fa.fold_of.assign(ds.n_samples(), 0);
    Rng rng(seed);
    std::size_t offset = 0;
    for (int c = 0; c < ds.n_classes(); ++c) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < ds.n_samples(); ++i) {
            if (ds.labels[i] == c) idx.push_back(i);
        }
        rng.shuffle(idx);
        if (!idx.empty() && idx.size() < static_cast<std::size_t>(k)) {
            fa.sparse_classes.push_back(c);
        }
        for (std::size_t i = 0; i < idx.size(); ++i) {
            fa.fold_of[idx[i]] = static_cast<int>((offset + i) % static_cast<std::size_t>(k));
        }
        offset = (offset + idx.size()) % static_cast<std::size_t>(k);
    }
    return fa;
}

}  // namespace smartsvm
