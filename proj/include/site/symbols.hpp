#pragma once

#include <string>
#include <vector>

#include "site/data.hpp"
#include "site/dimension.hpp"

namespace site {

enum class Realm { tensor, scalar };

/// Operator kinds across both realms. `plasmid` is the arity-1 'p' symbol
/// that multiplies the tensor beneath it by its plasmid's scalar expression;
/// `scalar_mul` is the node it expands into.
enum class OpKind {
    add,
    sub,
    mul,        // scalar multiplication
    div,        // scalar division
    inner,      // tensor inner product A_ik B_kj
    plasmid,    // 'p'
    scalar_mul, // synthetic: (scalar expr) * tensor, produced by expansion
};

struct SymbolDef {
    std::string id;
    bool is_function = false;
    int arity = 0;
    Realm realm = Realm::tensor;
    OpKind op = OpKind::add;  // functions only
    DimVector dim;            // terminals only
    int terminal_index = -1;  // index into Dataset tensors/scalars; -1 for RNC
    bool is_rnc = false;
};

/// Function + terminal library for one realm. Gene elements are codes:
/// [0, functions.size()) are functions, the rest terminals.
struct Library {
    Realm realm = Realm::tensor;
    std::vector<SymbolDef> functions;
    std::vector<SymbolDef> terminals;

    int n_functions() const { return static_cast<int>(functions.size()); }
    int n_terminals() const { return static_cast<int>(terminals.size()); }
    int n_symbols() const { return n_functions() + n_terminals(); }

    bool is_function_code(int code) const { return code < n_functions(); }
    const SymbolDef& symbol(int code) const {
        return is_function_code(code) ? functions[code]
                                      : terminals[code - n_functions()];
    }
    int terminal_code(int terminal_idx) const { return n_functions() + terminal_idx; }

    /// Max arity over the function set (the a_max of the tail-length formula).
    int max_arity() const;

    /// Code of the 'p' function, or -1 if absent.
    int plasmid_code() const;

    /// Code of the RNC terminal, or -1 if absent.
    int rnc_code() const;

    int code_of(const std::string& id) const; // -1 if unknown
};

struct LibraryPair {
    Library tensor;
    Library scalar;

    const Library& of(Realm r) const { return r == Realm::tensor ? tensor : scalar; }
};

/// Builds the tensor/scalar libraries from a dataset's terminals and the
/// requested function names ("add","sub","inner","p" / "add","sub","mul","div").
/// `rnc_mode` appends the dimensionless random-constant terminal to the
/// scalar library. Unknown function names throw ConfigError.
LibraryPair build_libraries(const Dataset& ds,
                            const std::vector<std::string>& tensor_functions,
                            const std::vector<std::string>& scalar_functions,
                            bool rnc_mode);

} // namespace site
