#include "ses/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <set>
#include <sstream>
#include <unordered_set>

#include "ses/errors.hpp"

#include <json.hpp>

namespace ses {

namespace {

constexpr int kCategoricalLevelLimit = 10;

bool is_integer_valued(const std::vector<double>& v) {
    for (double x : v) {
        if (x != std::floor(x)) return false;
    }
    return true;
}

std::vector<double> distinct_sorted(const std::vector<double>& v) {
    std::vector<double> d(v);
    std::sort(d.begin(), d.end());
    d.erase(std::unique(d.begin(), d.end()), d.end());
    return d;
}

// Remaps raw cell values to level indices 0..k-1 in ascending value order.
std::vector<double> to_level_indices(const std::vector<double>& v,
                                     const std::vector<double>& levels) {
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        auto it = std::lower_bound(levels.begin(), levels.end(), v[i]);
        out[i] = static_cast<double>(it - levels.begin());
    }
    return out;
}

} // namespace

Dataset::Dataset(std::vector<std::string> names,
                 std::vector<std::vector<double>> columns,
                 std::vector<ColumnKind> kinds)
    : names_(std::move(names)), columns_(std::move(columns)), kinds_(std::move(kinds)) {
    if (names_.size() != columns_.size() || names_.size() != kinds_.size())
        throw IngestError("dataset: names/columns/kinds size mismatch");
    if (columns_.empty()) throw IngestError("dataset: no columns");
    n_rows_ = static_cast<int>(columns_.front().size());
    if (n_rows_ < 1) throw IngestError("dataset: empty columns");
    std::unordered_set<std::string> seen;
    for (std::size_t j = 0; j < names_.size(); ++j) {
        if (names_[j].empty()) throw IngestError("dataset: empty column name");
        if (!seen.insert(names_[j]).second)
            throw IngestError("dataset: duplicate column name '" + names_[j] + "'");
        if (static_cast<int>(columns_[j].size()) != n_rows_)
            throw IngestError("dataset: ragged column '" + names_[j] + "'");
        if (kinds_[j].is_categorical()) {
            if (kinds_[j].level_count < 2)
                throw IngestError("dataset: categorical column '" + names_[j] +
                                  "' needs >= 2 levels");
            for (double x : columns_[j]) {
                if (x != std::floor(x) || x < 0 || x >= kinds_[j].level_count)
                    throw IngestError("dataset: column '" + names_[j] +
                                      "' has cell outside its level range");
            }
        }
    }
}

std::optional<int> Dataset::find(const std::string& name) const {
    for (std::size_t j = 0; j < names_.size(); ++j)
        if (names_[j] == name) return static_cast<int>(j);
    return std::nullopt;
}

bool Dataset::all_continuous() const {
    return std::none_of(kinds_.begin(), kinds_.end(),
                        [](const ColumnKind& k) { return k.is_categorical(); });
}

bool Dataset::all_categorical() const {
    return std::all_of(kinds_.begin(), kinds_.end(),
                       [](const ColumnKind& k) { return k.is_categorical(); });
}

std::vector<int> Dataset::zero_variance_columns() const {
    std::vector<int> out;
    for (int j = 0; j < n_cols(); ++j) {
        if (kinds_[j].is_categorical()) continue;
        const auto& c = columns_[j];
        bool constant = std::all_of(c.begin(), c.end(),
                                    [&](double x) { return x == c.front(); });
        if (constant) out.push_back(j);
    }
    return out;
}

Dataset Dataset::subset_rows(const std::vector<int>& rows) const {
    std::vector<std::vector<double>> cols(columns_.size());
    for (std::size_t j = 0; j < columns_.size(); ++j) {
        cols[j].reserve(rows.size());
        for (int r : rows) cols[j].push_back(columns_[j].at(r));
    }
    return Dataset(names_, std::move(cols), kinds_);
}

Target Target::subset(const std::vector<int>& rows) const {
    Target t;
    t.kind = kind;
    t.level_count = level_count;
    t.values.reserve(rows.size());
    for (int r : rows) t.values.push_back(values.at(r));
    return t;
}

Target Target::continuous(std::vector<double> v) {
    return Target{Kind::Continuous, std::move(v), 0};
}

Target Target::binary(std::vector<double> labels) {
    bool has0 = false, has1 = false;
    for (double x : labels) {
        if (x == 0.0) has0 = true;
        else if (x == 1.0) has1 = true;
        else throw IngestError("binary target: labels must be 0/1");
    }
    if (!has0 || !has1)
        throw IngestError("binary target: both classes must be present");
    return Target{Kind::Binary, std::move(labels), 2};
}

Target Target::categorical(std::vector<double> labels, int levels) {
    for (double x : labels)
        if (x != std::floor(x) || x < 0 || x >= levels)
            throw IngestError("categorical target: label outside level range");
    return Target{Kind::Categorical, std::move(labels), levels};
}

ColumnSchema parse_schema(std::istream& in) {
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw IngestError(std::string("schema: invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw IngestError("schema: expected a JSON object");
    ColumnSchema schema;
    for (auto it = j.begin(); it != j.end(); ++it) {
        std::string v = it.value().is_string() ? it.value().get<std::string>() : "";
        if (v == "continuous") schema[it.key()] = ColumnKind::Tag::Continuous;
        else if (v == "categorical") schema[it.key()] = ColumnKind::Tag::Categorical;
        else
            throw IngestError("schema: column '" + it.key() +
                              "' must map to \"continuous\" or \"categorical\"");
    }
    return schema;
}

ColumnSchema load_schema(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IngestError("schema: cannot open '" + path + "'");
    return parse_schema(in);
}

namespace {

std::vector<std::string> split_line(const std::string& line, char delim) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, delim)) out.push_back(cell);
    if (!line.empty() && line.back() == delim) out.push_back("");
    return out;
}

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

} // namespace

LoadedTable load_dataset(std::istream& in, const std::string& target_column,
                         const ColumnSchema& schema) {
    std::string header;
    if (!std::getline(in, header)) throw IngestError("load: empty input");
    char delim = header.find('\t') != std::string::npos ? '\t' : ',';

    std::vector<std::string> names = split_line(header, delim);
    for (auto& n : names) n = trim(n);
    if (names.empty()) throw IngestError("load: empty header");
    {
        std::unordered_set<std::string> seen;
        for (const auto& n : names) {
            if (n.empty()) throw IngestError("load: empty header field");
            if (!seen.insert(n).second)
                throw IngestError("load: duplicate header '" + n + "'");
        }
    }

    const int ncols = static_cast<int>(names.size());
    std::vector<std::vector<double>> cols(ncols);
    std::string line;
    int row = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        ++row;
        std::vector<std::string> cells = split_line(line, delim);
        if (static_cast<int>(cells.size()) != ncols)
            throw IngestError("load: row " + std::to_string(row) + " has " +
                              std::to_string(cells.size()) + " cells, expected " +
                              std::to_string(ncols));
        for (int j = 0; j < ncols; ++j) {
            std::string cell = trim(cells[j]);
            if (cell.empty() || cell == "NA")
                throw IngestError("load: missing value at row " + std::to_string(row) +
                                  ", column '" + names[j] + "'");
            char* end = nullptr;
            double v = std::strtod(cell.c_str(), &end);
            if (end == cell.c_str() || *end != '\0')
                throw IngestError("load: nonnumeric cell '" + cell + "' at row " +
                                  std::to_string(row) + ", column '" + names[j] + "'");
            cols[j].push_back(v);
        }
    }
    if (row == 0) throw IngestError("load: no data rows");

    // Resolve the target column by name, falling back to a 0-based index.
    int target_idx = -1;
    for (int j = 0; j < ncols; ++j)
        if (names[j] == target_column) target_idx = j;
    if (target_idx < 0) {
        try {
            std::size_t pos = 0;
            int idx = std::stoi(target_column, &pos);
            if (pos == target_column.size() && idx >= 0 && idx < ncols) target_idx = idx;
        } catch (...) {
        }
    }
    if (target_idx < 0)
        throw IngestError("load: target column '" + target_column + "' not found");

    auto resolve_kind = [&](int j) -> ColumnKind::Tag {
        auto it = schema.find(names[j]);
        if (it != schema.end()) return it->second;
        if (is_integer_valued(cols[j]) &&
            static_cast<int>(distinct_sorted(cols[j]).size()) <= kCategoricalLevelLimit &&
            distinct_sorted(cols[j]).size() >= 2)
            return ColumnKind::Tag::Categorical;
        return ColumnKind::Tag::Continuous;
    };

    // Target first.
    Target target;
    {
        const auto& tv = cols[target_idx];
        ColumnKind::Tag tag = resolve_kind(target_idx);
        if (tag == ColumnKind::Tag::Categorical) {
            auto levels = distinct_sorted(tv);
            if (levels.size() < 2)
                throw IngestError("load: target column '" + names[target_idx] +
                                  "' is constant");
            auto idxs = to_level_indices(tv, levels);
            if (levels.size() == 2) target = Target::binary(std::move(idxs));
            else target = Target::categorical(std::move(idxs), static_cast<int>(levels.size()));
        } else {
            target = Target::continuous(tv);
        }
    }

    std::vector<std::string> pred_names;
    std::vector<std::vector<double>> pred_cols;
    std::vector<ColumnKind> pred_kinds;
    for (int j = 0; j < ncols; ++j) {
        if (j == target_idx) continue;
        ColumnKind::Tag tag = resolve_kind(j);
        if (tag == ColumnKind::Tag::Categorical) {
            auto levels = distinct_sorted(cols[j]);
            if (levels.size() < 2) {
                // Constant integer column: keep it continuous so it is merely
                // flagged as zero-variance rather than rejected.
                pred_kinds.push_back(ColumnKind::continuous());
                pred_cols.push_back(std::move(cols[j]));
            } else {
                pred_kinds.push_back(ColumnKind::categorical(static_cast<int>(levels.size())));
                pred_cols.push_back(to_level_indices(cols[j], levels));
            }
        } else {
            pred_kinds.push_back(ColumnKind::continuous());
            pred_cols.push_back(std::move(cols[j]));
        }
        pred_names.push_back(names[j]);
    }
    if (pred_names.empty()) throw IngestError("load: no predictor columns left");

    LoadedTable out;
    out.dataset = Dataset(std::move(pred_names), std::move(pred_cols), std::move(pred_kinds));
    out.target = std::move(target);
    if (out.target.size() != out.dataset.n_rows())
        throw IngestError("load: target/dataset length mismatch");
    return out;
}

LoadedTable load_dataset_file(const std::string& path, const std::string& target_column,
                              const ColumnSchema& schema) {
    std::ifstream in(path);
    if (!in) throw IngestError("load: cannot open '" + path + "'");
    return load_dataset(in, target_column, schema);
}

void write_csv(std::ostream& out, const Dataset& ds, const Target& target,
               const std::string& target_name) {
    out << std::setprecision(std::numeric_limits<double>::max_digits10);
    for (int j = 0; j < ds.n_cols(); ++j) out << ds.name(j) << ',';
    out << target_name << '\n';
    for (int i = 0; i < ds.n_rows(); ++i) {
        for (int j = 0; j < ds.n_cols(); ++j) out << ds.column(j)[i] << ',';
        out << target.values[i] << '\n';
    }
}

ColumnStats column_stats(const Dataset& ds, int j) {
    const auto& c = ds.column(j);
    const int n = static_cast<int>(c.size());
    ColumnStats s;
    double sum = 0.0;
    for (double x : c) sum += x;
    s.mean = sum / n;
    double ss = 0.0;
    for (double x : c) ss += (x - s.mean) * (x - s.mean);
    s.variance = n > 1 ? ss / (n - 1) : 0.0;
    if (ds.kind(j).is_categorical()) {
        std::map<int, int> hist;
        for (double x : c) hist[static_cast<int>(x)]++;
        s.level_histogram = std::move(hist);
    }
    return s;
}

} // namespace ses
