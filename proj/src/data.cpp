#include "site/data.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "site/errors.hpp"

namespace site {

using nlohmann::json;

namespace {

bool valid_identifier(const std::string& s) {
    if (s.empty()) return false;
    if (!std::isalpha(static_cast<unsigned char>(s[0])) && s[0] != '_') return false;
    return std::all_of(s.begin(), s.end(), [](unsigned char c) {
        return std::isalnum(c) || c == '_';
    });
}

DimVector parse_dim(const json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 7)
        throw SchemaError(where + ": dim must be an array of 7 integers");
    DimVector d;
    for (std::size_t i = 0; i < 7; ++i) {
        if (!j[i].is_number_integer())
            throw SchemaError(where + ": dimension exponents must be integers (got " +
                              j[i].dump() + ")");
        d[i] = j[i].get<int>();
    }
    return d;
}

json dim_to_json(const DimVector& d) {
    json a = json::array();
    for (int e : d.exp) a.push_back(e);
    return a;
}

SchemaTerminal parse_terminal(const json& j, int n_dim, bool is_target) {
    SchemaTerminal t;
    const std::string where = is_target ? "target" : "terminal";
    if (!j.contains("name") || !j["name"].is_string())
        throw SchemaError(where + ": missing name");
    t.name = j["name"].get<std::string>();
    if (!valid_identifier(t.name))
        throw SchemaError(where + " '" + t.name + "': names must be identifiers");

    std::string kind = is_target ? "tensor" : j.value("kind", "");
    if (kind != "tensor" && kind != "scalar")
        throw SchemaError(where + " '" + t.name + "': kind must be tensor or scalar");
    t.is_tensor = kind == "tensor";
    t.identity = j.value("identity", false);
    if (t.identity && !t.is_tensor)
        throw SchemaError(where + " '" + t.name + "': identity applies to tensors only");

    if (!j.contains("dim")) throw SchemaError(where + " '" + t.name + "': missing dim");
    t.dim = parse_dim(j["dim"], where + " '" + t.name + "'");
    if (t.identity && !t.dim.is_dimensionless())
        throw SchemaError(where + " '" + t.name + "': identity tensor must be dimensionless");

    if (t.identity) return t;

    if (t.is_tensor) {
        if (!j.contains("columns") || !j["columns"].is_array() ||
            static_cast<int>(j["columns"].size()) != n_dim * n_dim)
            throw SchemaError(where + " '" + t.name + "': tensor needs " +
                              std::to_string(n_dim * n_dim) + " columns (row-major)");
        for (const auto& c : j["columns"]) t.columns.push_back(c.get<std::string>());
    } else {
        if (!j.contains("column") || !j["column"].is_string())
            throw SchemaError(where + " '" + t.name + "': scalar needs a column");
        t.columns.push_back(j["column"].get<std::string>());
    }
    return t;
}

json terminal_to_json(const SchemaTerminal& t, bool is_target) {
    json j;
    j["name"] = t.name;
    if (!is_target) j["kind"] = t.is_tensor ? "tensor" : "scalar";
    j["dim"] = dim_to_json(t.dim);
    if (t.identity) {
        j["identity"] = true;
    } else if (t.is_tensor) {
        j["columns"] = t.columns;
    } else {
        j["column"] = t.columns[0];
    }
    return j;
}

std::vector<std::string> split_line(const std::string& line, char delim) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == delim) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

double parse_cell(const std::string& cell, int row, const std::string& col) {
    const std::string v = trim(cell);
    if (v.empty())
        throw DataError("row " + std::to_string(row) + ", column '" + col + "': empty cell");
    double x = 0.0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc{} || p != v.data() + v.size())
        throw DataError("row " + std::to_string(row) + ", column '" + col +
                        "': non-numeric cell '" + v + "'");
    if (!std::isfinite(x))
        throw DataError("row " + std::to_string(row) + ", column '" + col +
                        "': non-finite value '" + v + "'");
    return x;
}

} // namespace

const ScalarField* Dataset::find_scalar(const std::string& name) const {
    for (const auto& s : scalars)
        if (s.name == name) return &s;
    return nullptr;
}

const TensorField* Dataset::find_tensor(const std::string& name) const {
    for (const auto& t : tensors)
        if (t.name == name) return &t;
    return nullptr;
}

Schema load_schema(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SchemaError("cannot open schema file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw SchemaError("schema parse error in " + path + ": " + e.what());
    }

    Schema s;
    if (!j.contains("n_dim") || !j["n_dim"].is_number_integer())
        throw SchemaError("schema: missing integer n_dim");
    s.n_dim = j["n_dim"].get<int>();
    if (s.n_dim != 2 && s.n_dim != 3)
        throw SchemaError("schema: n_dim must be 2 or 3, got " + std::to_string(s.n_dim));
    if (j.contains("delimiter")) {
        std::string d = j["delimiter"].get<std::string>();
        if (d.size() != 1) throw SchemaError("schema: delimiter must be one character");
        s.delimiter = d[0];
    }
    if (!j.contains("target")) throw SchemaError("schema: missing target");
    s.target = parse_terminal(j["target"], s.n_dim, true);
    if (s.target.identity) throw SchemaError("schema: target cannot be the identity");

    if (!j.contains("terminals") || !j["terminals"].is_array() || j["terminals"].empty())
        throw SchemaError("schema: missing terminals");
    std::unordered_set<std::string> names;
    for (const auto& tj : j["terminals"]) {
        SchemaTerminal t = parse_terminal(tj, s.n_dim, false);
        if (!names.insert(t.name).second)
            throw SchemaError("schema: duplicate terminal name '" + t.name + "'");
        if (t.name == s.target.name)
            throw SchemaError("schema: target name '" + t.name + "' collides with a terminal");
        s.terminals.push_back(std::move(t));
    }
    return s;
}

void save_schema(const Schema& schema, const std::string& path) {
    json j;
    j["n_dim"] = schema.n_dim;
    j["delimiter"] = std::string(1, schema.delimiter);
    j["target"] = terminal_to_json(schema.target, true);
    j["terminals"] = json::array();
    for (const auto& t : schema.terminals)
        j["terminals"].push_back(terminal_to_json(t, false));
    std::ofstream out(path);
    if (!out) throw DataError("cannot write schema file: " + path);
    out << j.dump(2) << '\n';
}

Dataset load_dataset(const std::string& data_path, const Schema& schema) {
    std::ifstream in(data_path);
    if (!in) throw DataError("cannot open data file: " + data_path);

    std::string header;
    if (!std::getline(in, header) || trim(header).empty())
        throw DataError("empty data file: " + data_path);
    if (!header.empty() && header.back() == '\r') header.pop_back();

    std::unordered_map<std::string, int> col_index;
    auto cols = split_line(header, schema.delimiter);
    for (int i = 0; i < static_cast<int>(cols.size()); ++i) col_index[trim(cols[i])] = i;

    auto require_col = [&](const std::string& name) {
        auto it = col_index.find(name);
        if (it == col_index.end())
            throw SchemaError("column '" + name + "' not found in " + data_path);
        return it->second;
    };

    // Resolve every referenced column up front so schema errors fire before
    // any cell parsing.
    std::vector<std::vector<int>> term_cols;
    for (const auto& t : schema.terminals) {
        std::vector<int> idx;
        for (const auto& c : t.columns) idx.push_back(require_col(c));
        term_cols.push_back(std::move(idx));
    }
    std::vector<int> target_cols;
    for (const auto& c : schema.target.columns) target_cols.push_back(require_col(c));

    std::vector<std::vector<std::string>> rows;
    std::string line;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        auto cells = split_line(line, schema.delimiter);
        if (cells.size() != cols.size())
            throw DataError("row " + std::to_string(lineno - 1) + ": expected " +
                            std::to_string(cols.size()) + " cells, got " +
                            std::to_string(cells.size()));
        rows.push_back(std::move(cells));
    }
    if (rows.empty()) throw DataError("data file has no rows: " + data_path);

    const int n_data = static_cast<int>(rows.size());
    const int nd = schema.n_dim;

    Dataset ds;
    ds.n_data = n_data;
    ds.n_dim = nd;

    auto read_column = [&](int col, const std::string& name) {
        std::vector<double> v(n_data);
        for (int r = 0; r < n_data; ++r) v[r] = parse_cell(rows[r][col], r + 1, name);
        return v;
    };

    for (std::size_t k = 0; k < schema.terminals.size(); ++k) {
        const auto& t = schema.terminals[k];
        if (t.is_tensor) {
            TensorField f;
            f.name = t.name;
            f.n_dim = nd;
            f.dim = t.dim;
            f.synthetic_identity = t.identity;
            f.comp.resize(nd * nd);
            if (t.identity) {
                for (int i = 0; i < nd; ++i)
                    for (int j = 0; j < nd; ++j)
                        f.comp[i * nd + j].assign(n_data, i == j ? 1.0 : 0.0);
            } else {
                for (int c = 0; c < nd * nd; ++c)
                    f.comp[c] = read_column(term_cols[k][c], t.columns[c]);
            }
            ds.tensors.push_back(std::move(f));
        } else {
            ScalarField f;
            f.name = t.name;
            f.dim = t.dim;
            f.values = read_column(term_cols[k][0], t.columns[0]);
            ds.scalars.push_back(std::move(f));
        }
    }

    ds.target.name = schema.target.name;
    ds.target.n_dim = nd;
    ds.target.dim = schema.target.dim;
    ds.target.comp.resize(nd * nd);
    for (int c = 0; c < nd * nd; ++c)
        ds.target.comp[c] = read_column(target_cols[c], schema.target.columns[c]);

    return ds;
}

Dataset load_dataset(const std::string& data_path, const std::string& schema_path) {
    return load_dataset(data_path, load_schema(schema_path));
}

namespace {

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

Schema schema_of(const Dataset& ds) {
    Schema s;
    s.n_dim = ds.n_dim;
    auto tensor_entry = [&](const TensorField& t) {
        SchemaTerminal e;
        e.name = t.name;
        e.is_tensor = true;
        e.dim = t.dim;
        e.identity = t.synthetic_identity;
        if (!e.identity)
            for (int i = 0; i < ds.n_dim; ++i)
                for (int j = 0; j < ds.n_dim; ++j)
                    e.columns.push_back(t.name + "_" + std::to_string(i + 1) +
                                        std::to_string(j + 1));
        return e;
    };
    for (const auto& t : ds.tensors) s.terminals.push_back(tensor_entry(t));
    for (const auto& sc : ds.scalars) {
        SchemaTerminal e;
        e.name = sc.name;
        e.is_tensor = false;
        e.dim = sc.dim;
        e.columns.push_back(sc.name);
        s.terminals.push_back(e);
    }
    s.target = tensor_entry(ds.target);
    return s;
}

} // namespace

void save_dataset(const Dataset& ds, const std::string& data_path,
                  const std::string& schema_path) {
    Schema s = schema_of(ds);
    save_schema(s, schema_path);

    std::ofstream out(data_path);
    if (!out) throw DataError("cannot write data file: " + data_path);

    std::vector<std::string> header;
    std::vector<const std::vector<double>*> columns;
    for (const auto& t : ds.tensors) {
        if (t.synthetic_identity) continue;
        for (int i = 0; i < ds.n_dim; ++i)
            for (int j = 0; j < ds.n_dim; ++j) {
                header.push_back(t.name + "_" + std::to_string(i + 1) + std::to_string(j + 1));
                columns.push_back(&t.at(i, j));
            }
    }
    for (const auto& sc : ds.scalars) {
        header.push_back(sc.name);
        columns.push_back(&sc.values);
    }
    for (int i = 0; i < ds.n_dim; ++i)
        for (int j = 0; j < ds.n_dim; ++j) {
            header.push_back(ds.target.name + "_" + std::to_string(i + 1) +
                             std::to_string(j + 1));
            columns.push_back(&ds.target.at(i, j));
        }

    for (std::size_t c = 0; c < header.size(); ++c) out << (c ? "," : "") << header[c];
    out << '\n';
    for (int r = 0; r < ds.n_data; ++r) {
        for (std::size_t c = 0; c < columns.size(); ++c)
            out << (c ? "," : "") << fmt_double((*columns[c])[r]);
        out << '\n';
    }
}

Dataset subsample(const Dataset& ds, int k, std::uint64_t seed) {
    if (k < 1 || k > ds.n_data)
        throw ArgumentError("subsample: k=" + std::to_string(k) + " out of range [1," +
                            std::to_string(ds.n_data) + "]");

    std::vector<int> idx(ds.n_data);
    std::iota(idx.begin(), idx.end(), 0);
    std::mt19937_64 rng(seed);
    // Partial Fisher-Yates: first k entries become the sample.
    for (int i = 0; i < k; ++i) {
        std::uniform_int_distribution<int> d(i, ds.n_data - 1);
        std::swap(idx[i], idx[d(rng)]);
    }
    idx.resize(k);
    std::sort(idx.begin(), idx.end());

    auto take = [&](const std::vector<double>& v) {
        std::vector<double> out(k);
        for (int i = 0; i < k; ++i) out[i] = v[idx[i]];
        return out;
    };

    Dataset out;
    out.n_data = k;
    out.n_dim = ds.n_dim;
    for (const auto& s : ds.scalars) out.scalars.push_back({s.name, take(s.values), s.dim});
    auto take_tensor = [&](const TensorField& t) {
        TensorField f;
        f.name = t.name;
        f.n_dim = t.n_dim;
        f.dim = t.dim;
        f.synthetic_identity = t.synthetic_identity;
        for (const auto& c : t.comp) f.comp.push_back(take(c));
        return f;
    };
    for (const auto& t : ds.tensors) out.tensors.push_back(take_tensor(t));
    out.target = take_tensor(ds.target);
    return out;
}

} // namespace site
