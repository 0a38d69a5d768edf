#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace ses {

// Per-column type tag. Categorical columns store level indices
// 0..level_count-1 in their value vector.
struct ColumnKind {
    enum class Tag { Continuous, Categorical };
    Tag tag = Tag::Continuous;
    int level_count = 0; // >= 2 when categorical

    bool is_categorical() const { return tag == Tag::Categorical; }
    static ColumnKind continuous() { return {Tag::Continuous, 0}; }
    static ColumnKind categorical(int levels) { return {Tag::Categorical, levels}; }
};

// Immutable column-major numeric matrix. All statistical tests consume whole
// columns, never rows, so each column is a contiguous vector.
class Dataset {
public:
    Dataset() = default;
    Dataset(std::vector<std::string> names,
            std::vector<std::vector<double>> columns,
            std::vector<ColumnKind> kinds);

    int n_rows() const { return n_rows_; }
    int n_cols() const { return static_cast<int>(columns_.size()); }

    const std::vector<double>& column(int j) const { return columns_.at(j); }
    const ColumnKind& kind(int j) const { return kinds_.at(j); }
    const std::string& name(int j) const { return names_.at(j); }
    const std::vector<std::string>& names() const { return names_; }

    // Index of the named column, or nullopt.
    std::optional<int> find(const std::string& name) const;

    bool all_continuous() const;
    bool all_categorical() const;

    // Continuous columns whose sample variance is zero. Downstream tests
    // treat them as degenerate.
    std::vector<int> zero_variance_columns() const;

    // New dataset containing only the given rows (same columns/kinds).
    Dataset subset_rows(const std::vector<int>& rows) const;

private:
    std::vector<std::string> names_;
    std::vector<std::vector<double>> columns_;
    std::vector<ColumnKind> kinds_;
    int n_rows_ = 0;
};

// Outcome variable, length-matched with the dataset it is paired with.
struct Target {
    enum class Kind { Continuous, Binary, Categorical };
    Kind kind = Kind::Continuous;
    std::vector<double> values; // reals, 0/1 labels, or level indices
    int level_count = 0;        // categorical only

    int size() const { return static_cast<int>(values.size()); }
    bool is_binary() const { return kind == Kind::Binary; }
    bool is_continuous() const { return kind == Kind::Continuous; }

    Target subset(const std::vector<int>& rows) const;
    static Target continuous(std::vector<double> v);
    static Target binary(std::vector<double> labels);
    static Target categorical(std::vector<double> labels, int levels);
};

// Optional per-column kind override, parsed from a JSON sidecar of the form
// {"column_name": "continuous" | "categorical", ...}.
using ColumnSchema = std::map<std::string, ColumnKind::Tag>;

ColumnSchema load_schema(const std::string& path);
ColumnSchema parse_schema(std::istream& in);

struct LoadedTable {
    Dataset dataset;
    Target target;
};

// Parses a delimited table (comma or tab, auto-detected from the header
// line), splits off the target column, validates, and infers column kinds:
// integer-valued columns with <= 10 distinct levels become categorical unless
// the schema says otherwise. Missing/nonnumeric cells raise IngestError
// naming the offending row and column.
LoadedTable load_dataset(std::istream& in, const std::string& target_column,
                         const ColumnSchema& schema = {});
LoadedTable load_dataset_file(const std::string& path, const std::string& target_column,
                              const ColumnSchema& schema = {});

// Serializes dataset plus target back to CSV; values round-trip exactly
// (printed with max_digits10 precision).
void write_csv(std::ostream& out, const Dataset& ds, const Target& target,
               const std::string& target_name);

struct ColumnStats {
    double mean = 0.0;
    double variance = 0.0; // n-1 denominator
    std::optional<std::map<int, int>> level_histogram;
};

ColumnStats column_stats(const Dataset& ds, int j);

} // namespace ses
