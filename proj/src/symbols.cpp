#include "site/symbols.hpp"

#include <algorithm>

#include "site/errors.hpp"

namespace site {

int Library::max_arity() const {
    int a = 0;
    for (const auto& f : functions) a = std::max(a, f.arity);
    return a;
}

int Library::plasmid_code() const {
    for (int i = 0; i < n_functions(); ++i)
        if (functions[i].op == OpKind::plasmid) return i;
    return -1;
}

int Library::rnc_code() const {
    for (int i = 0; i < n_terminals(); ++i)
        if (terminals[i].is_rnc) return n_functions() + i;
    return -1;
}

int Library::code_of(const std::string& id) const {
    for (int i = 0; i < n_symbols(); ++i)
        if (symbol(i).id == id) return i;
    return -1;
}

namespace {

SymbolDef make_function(const std::string& id, OpKind op, int arity, Realm realm) {
    SymbolDef s;
    s.id = id;
    s.is_function = true;
    s.arity = arity;
    s.realm = realm;
    s.op = op;
    return s;
}

SymbolDef tensor_function(const std::string& name) {
    if (name == "add") return make_function("add", OpKind::add, 2, Realm::tensor);
    if (name == "sub") return make_function("sub", OpKind::sub, 2, Realm::tensor);
    if (name == "inner") return make_function("inner", OpKind::inner, 2, Realm::tensor);
    if (name == "p") return make_function("p", OpKind::plasmid, 1, Realm::tensor);
    throw ConfigError("unknown tensor function '" + name +
                      "' (allowed: add, sub, inner, p)");
}

SymbolDef scalar_function(const std::string& name) {
    if (name == "add") return make_function("add", OpKind::add, 2, Realm::scalar);
    if (name == "sub") return make_function("sub", OpKind::sub, 2, Realm::scalar);
    if (name == "mul") return make_function("mul", OpKind::mul, 2, Realm::scalar);
    if (name == "div") return make_function("div", OpKind::div, 2, Realm::scalar);
    throw ConfigError("unknown scalar function '" + name +
                      "' (allowed: add, sub, mul, div)");
}

} // namespace

LibraryPair build_libraries(const Dataset& ds,
                            const std::vector<std::string>& tensor_functions,
                            const std::vector<std::string>& scalar_functions,
                            bool rnc_mode) {
    LibraryPair libs;
    libs.tensor.realm = Realm::tensor;
    libs.scalar.realm = Realm::scalar;

    for (const auto& name : tensor_functions)
        libs.tensor.functions.push_back(tensor_function(name));
    for (const auto& name : scalar_functions)
        libs.scalar.functions.push_back(scalar_function(name));

    for (int i = 0; i < static_cast<int>(ds.tensors.size()); ++i) {
        SymbolDef s;
        s.id = ds.tensors[i].name;
        s.realm = Realm::tensor;
        s.dim = ds.tensors[i].dim;
        s.terminal_index = i;
        libs.tensor.terminals.push_back(std::move(s));
    }
    for (int i = 0; i < static_cast<int>(ds.scalars.size()); ++i) {
        SymbolDef s;
        s.id = ds.scalars[i].name;
        s.realm = Realm::scalar;
        s.dim = ds.scalars[i].dim;
        s.terminal_index = i;
        libs.scalar.terminals.push_back(std::move(s));
    }
    if (rnc_mode) {
        SymbolDef s;
        s.id = "rnc";
        s.realm = Realm::scalar;
        s.is_rnc = true; // dimensionless by construction
        libs.scalar.terminals.push_back(std::move(s));
    }

    if (libs.tensor.terminals.empty())
        throw ConfigError("tensor terminal library is empty");
    if (libs.scalar.terminals.empty())
        throw ConfigError("scalar terminal library is empty");
    return libs;
}

} // namespace site
