#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "site/dimension.hpp"

namespace site {

/// One scalar terminal: a named column of values with a dimension vector.
struct ScalarField {
    std::string name;
    std::vector<double> values; // length n_data
    DimVector dim;
};

/// One second-order tensor terminal: n_dim x n_dim components, each a column
/// of values. All components share one dimension vector.
struct TensorField {
    std::string name;
    int n_dim = 0;
    std::vector<std::vector<double>> comp; // n_dim*n_dim entries, row-major
    DimVector dim;
    bool synthetic_identity = false;

    const std::vector<double>& at(int i, int j) const { return comp[i * n_dim + j]; }
    std::vector<double>& at(int i, int j) { return comp[i * n_dim + j]; }
};

/// Immutable collection of candidate terminals plus the regression target.
struct Dataset {
    std::vector<ScalarField> scalars;
    std::vector<TensorField> tensors;
    TensorField target;
    int n_data = 0;
    int n_dim = 0;

    const ScalarField* find_scalar(const std::string& name) const;
    const TensorField* find_tensor(const std::string& name) const;
};

/// Schema entry for one terminal (or the target).
struct SchemaTerminal {
    std::string name;
    bool is_tensor = false;
    bool identity = false;              // tensor synthesized as delta_ij
    std::vector<std::string> columns;   // n_dim^2 names (tensor) or 1 (scalar)
    DimVector dim;
};

/// Parsed schema file: declares n_dim, the target, and every terminal.
struct Schema {
    int n_dim = 0;
    char delimiter = ',';
    SchemaTerminal target;
    std::vector<SchemaTerminal> terminals;
};

Schema load_schema(const std::string& path);
void save_schema(const Schema& schema, const std::string& path);

/// Loads the delimited table at `data_path` against `schema` and validates it.
/// Throws SchemaError for missing columns, DataError for bad cells
/// (naming row and column) or an empty table.
Dataset load_dataset(const std::string& data_path, const Schema& schema);

Dataset load_dataset(const std::string& data_path, const std::string& schema_path);

/// Writes `ds` as a data table + schema pair that load_dataset round-trips
/// bit-exactly (values printed with max precision).
void save_dataset(const Dataset& ds, const std::string& data_path,
                  const std::string& schema_path);

/// Returns a dataset of k rows drawn uniformly without replacement,
/// deterministic for a fixed seed. Row order follows the original table.
/// Throws ArgumentError unless 1 <= k <= ds.n_data.
Dataset subsample(const Dataset& ds, int k, std::uint64_t seed);

} // namespace site
