#include "site/genome.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <utility>

#include "site/errors.hpp"

namespace site {

Element::Element(const Element& other)
    : code(other.code),
      rnc_value(other.rnc_value),
      plasmid(other.plasmid ? std::make_unique<PlasmidChromosome>(*other.plasmid) : nullptr) {}

Element& Element::operator=(const Element& other) {
    if (this != &other) {
        code = other.code;
        rnc_value = other.rnc_value;
        plasmid = other.plasmid ? std::make_unique<PlasmidChromosome>(*other.plasmid) : nullptr;
    }
    return *this;
}

Element::~Element() = default;

bool Element::operator==(const Element& other) const {
    if (code != other.code || rnc_value != other.rnc_value) return false;
    if (static_cast<bool>(plasmid) != static_cast<bool>(other.plasmid)) return false;
    return !plasmid || *plasmid == *other.plasmid;
}

bool Gene::operator==(const Gene& other) const {
    return head_len == other.head_len && elems == other.elems;
}

bool PlasmidChromosome::operator==(const PlasmidChromosome& other) const {
    return id == other.id && gene == other.gene;
}

int tail_length(int head_len, int max_arity) { return head_len * (max_arity - 1) + 1; }

namespace {

Element draw_element(const Library& lib, bool head, Rng& rng, PlasmidFactory* factory) {
    int code;
    if (head) {
        std::uniform_int_distribution<int> d(0, lib.n_symbols() - 1);
        code = d(rng);
    } else {
        std::uniform_int_distribution<int> d(0, lib.n_terminals() - 1);
        code = lib.n_functions() + d(rng);
    }
    Element e(code);
    const SymbolDef& sym = lib.symbol(code);
    if (sym.is_function && sym.op == OpKind::plasmid) {
        if (!factory) throw InternalError("'p' drawn without a plasmid factory");
        e.plasmid = std::make_unique<PlasmidChromosome>(factory->make(rng));
    }
    if (sym.is_rnc) {
        std::uniform_real_distribution<double> d(-10.0, 10.0);
        e.rnc_value = d(rng);
    }
    return e;
}

} // namespace

PlasmidChromosome PlasmidFactory::make(Rng& rng) {
    PlasmidChromosome p;
    p.id = fresh_id();
    p.gene = random_gene(Realm::scalar, *scalar_lib, head_len, rng, nullptr);
    return p;
}

Gene random_gene(Realm realm, const Library& lib, int head_len, Rng& rng,
                 PlasmidFactory* factory) {
    if (lib.realm != realm) throw InternalError("library realm mismatch");
    if (lib.n_terminals() == 0) throw InternalError("empty terminal library");
    Gene g;
    g.head_len = head_len;
    const int tail = tail_length(head_len, std::max(lib.max_arity(), 1));
    g.elems.reserve(head_len + tail);
    for (int i = 0; i < head_len; ++i) g.elems.push_back(draw_element(lib, true, rng, factory));
    for (int i = 0; i < tail; ++i) g.elems.push_back(draw_element(lib, false, rng, factory));
    return g;
}

ExprTree decode_gene(const Gene& g, const Library& lib) {
    // Karva breadth-first: element 0 is the root; each function node consumes
    // the next `arity` unread elements, level by level. The tail guarantees
    // completion for structurally valid genes.
    std::size_t pos = 0;
    auto take = [&] {
        if (pos >= g.elems.size())
            throw InternalError("gene exhausted during decoding (invalid gene)");
        const Element& e = g.elems[pos++];
        ExprTree t;
        t.sym = &lib.symbol(e.code);
        t.plasmid = e.plasmid.get();
        t.rnc_value = e.rnc_value;
        return t;
    };

    ExprTree root = take();
    std::vector<ExprTree*> frontier{&root};
    while (!frontier.empty()) {
        // Attach all children of this level first; pointers into `children`
        // vectors stay valid because each vector is filled exactly once.
        for (ExprTree* n : frontier)
            for (int k = 0; k < n->sym->arity; ++k) n->children.push_back(take());
        std::vector<ExprTree*> next;
        for (ExprTree* n : frontier)
            for (auto& c : n->children) next.push_back(&c);
        frontier = std::move(next);
    }
    return root;
}

ExprTree expand_plasmids(const ExprTree& t, const Library& scalar_lib) {
    static const SymbolDef scalar_mul_sym = [] {
        SymbolDef s;
        s.id = "smul";
        s.is_function = true;
        s.arity = 2;
        s.realm = Realm::tensor;
        s.op = OpKind::scalar_mul;
        return s;
    }();

    ExprTree out;
    if (t.sym->is_function && t.sym->op == OpKind::plasmid) {
        if (!t.plasmid) throw InternalError("dangling plasmid link at 'p' node");
        out.sym = &scalar_mul_sym;
        out.children.push_back(decode_gene(t.plasmid->gene, scalar_lib));
        out.children.push_back(expand_plasmids(t.children.at(0), scalar_lib));
    } else {
        out.sym = t.sym;
        out.rnc_value = t.rnc_value;
        for (const auto& c : t.children) out.children.push_back(expand_plasmids(c, scalar_lib));
    }
    return out;
}

ExprTree decode_and_expand(const Gene& g, const LibraryPair& libs) {
    return expand_plasmids(decode_gene(g, libs.tensor), libs.scalar);
}

int count_plasmids(const HostChromosome& c) {
    int n = 0;
    for (const auto& g : c.genes)
        for (const auto& e : g.elems)
            if (e.plasmid) ++n;
    return n;
}

int count_nodes(const ExprTree& t) {
    int n = 1;
    for (const auto& c : t.children) n += count_nodes(c);
    return n;
}

Gene clone_gene_fresh_ids(const Gene& g, PlasmidFactory& factory) {
    Gene out = g;
    for (auto& e : out.elems)
        if (e.plasmid) e.plasmid->id = factory.fresh_id();
    return out;
}

HostChromosome clone_fresh_ids(const HostChromosome& c, PlasmidFactory& factory) {
    HostChromosome out;
    out.genes.reserve(c.genes.size());
    for (const auto& g : c.genes) out.genes.push_back(clone_gene_fresh_ids(g, factory));
    return out;
}

namespace {

std::string validate_gene(const Gene& g, const Library& lib, int head_len,
                          bool allow_plasmids) {
    const int expected_tail = tail_length(head_len, std::max(lib.max_arity(), 1));
    if (g.head_len != head_len)
        return "head length " + std::to_string(g.head_len) + " != " + std::to_string(head_len);
    if (g.size() != head_len + expected_tail)
        return "gene length " + std::to_string(g.size()) + " != " +
               std::to_string(head_len + expected_tail);
    for (int pos = 0; pos < g.size(); ++pos) {
        const Element& e = g.elems[pos];
        if (e.code < 0 || e.code >= lib.n_symbols()) return "element code out of range";
        const SymbolDef& sym = lib.symbol(e.code);
        if (!g.in_head(pos) && sym.is_function)
            return "function '" + sym.id + "' in tail position " + std::to_string(pos);
        const bool is_p = sym.is_function && sym.op == OpKind::plasmid;
        if (is_p && !allow_plasmids) return "'p' inside a plasmid gene";
        if (is_p && !e.plasmid) return "'p' element without a plasmid at " + std::to_string(pos);
        if (!is_p && e.plasmid) return "plasmid attached to non-'p' element";
        if (sym.is_rnc && !std::isfinite(e.rnc_value)) return "non-finite RNC value";
    }
    return "";
}

std::string fmt_rnc(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// Serialization numbers plasmids by first appearance inside the chromosome,
// so the text form is self-contained even when lineage ids collide across
// copied material. `local_ids` maps plasmid object -> local number; pass
// nullptr for genes serialized standalone (internal ids shown instead).
void serialize_gene_into(std::ostringstream& os, const Gene& g, const Library& lib,
                         const std::vector<const PlasmidChromosome*>* locals) {
    os << '[';
    for (int pos = 0; pos < g.size(); ++pos) {
        if (pos) os << (pos == g.head_len ? " | " : " ");
        const Element& e = g.elems[pos];
        const SymbolDef& sym = lib.symbol(e.code);
        if (e.plasmid) {
            std::size_t id = e.plasmid->id;
            if (locals) {
                auto it = std::find(locals->begin(), locals->end(), e.plasmid.get());
                id = static_cast<std::size_t>(it - locals->begin()) + 1;
            }
            os << "p#" << id;
        } else if (sym.is_rnc) {
            os << "rnc(" << fmt_rnc(e.rnc_value) << ')';
        } else {
            os << sym.id;
        }
    }
    os << ']';
}

} // namespace

std::string validate_chromosome(const HostChromosome& c, const LibraryPair& libs,
                                int host_head_len, int plasmid_head_len) {
    if (c.genes.empty()) return "chromosome has no genes";
    for (int gi = 0; gi < c.n_genes(); ++gi) {
        std::string err = validate_gene(c.genes[gi], libs.tensor, host_head_len, true);
        if (!err.empty()) return "gene " + std::to_string(gi) + ": " + err;
        for (const auto& e : c.genes[gi].elems) {
            if (!e.plasmid) continue;
            std::string perr =
                validate_gene(e.plasmid->gene, libs.scalar, plasmid_head_len, false);
            if (!perr.empty())
                return "gene " + std::to_string(gi) + ", plasmid " +
                       std::to_string(e.plasmid->id) + ": " + perr;
        }
    }
    return "";
}

std::string serialize_gene(const Gene& g, const Library& lib) {
    std::ostringstream os;
    serialize_gene_into(os, g, lib, nullptr);
    return os.str();
}

std::string serialize_chromosome(const HostChromosome& c, const LibraryPair& libs) {
    std::vector<const PlasmidChromosome*> locals;
    for (const auto& g : c.genes)
        for (const auto& e : g.elems)
            if (e.plasmid) locals.push_back(e.plasmid.get());

    std::ostringstream os;
    for (int gi = 0; gi < c.n_genes(); ++gi) {
        if (gi) os << ' ';
        serialize_gene_into(os, c.genes[gi], libs.tensor, &locals);
    }
    for (std::size_t i = 0; i < locals.size(); ++i) {
        os << " p" << i + 1 << ':';
        serialize_gene_into(os, locals[i]->gene, libs.scalar, nullptr);
    }
    return os.str();
}

namespace {

struct Tokenizer {
    const std::string& text;
    std::size_t pos = 0;

    void skip_ws() {
        while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    }
    bool eof() {
        skip_ws();
        return pos >= text.size();
    }
    char peek() {
        skip_ws();
        return text[pos];
    }
    void expect(char c) {
        skip_ws();
        if (pos >= text.size() || text[pos] != c)
            throw DataError("chromosome parse: expected '" + std::string(1, c) +
                            "' at offset " + std::to_string(pos));
        ++pos;
    }
    std::string token() {
        skip_ws();
        std::size_t b = pos;
        while (pos < text.size()) {
            char c = text[pos];
            if (std::isspace(static_cast<unsigned char>(c)) || c == '[' || c == ']' ||
                c == ':' || c == '|')
                break;
            if (c == '(') { // rnc(value)
                while (pos < text.size() && text[pos] != ')') ++pos;
                if (pos < text.size()) ++pos;
                break;
            }
            ++pos;
        }
        if (pos == b)
            throw DataError("chromosome parse: empty token at offset " + std::to_string(pos));
        return text.substr(b, pos - b);
    }
};

struct ParsedElement {
    std::string symbol;
    std::uint64_t plasmid_id = 0;
    bool is_plasmid_ref = false;
    double rnc_value = 0.0;
};

std::vector<ParsedElement> parse_gene_tokens(Tokenizer& tk) {
    std::vector<ParsedElement> out;
    tk.expect('[');
    while (true) {
        tk.skip_ws();
        if (tk.pos >= tk.text.size())
            throw DataError("chromosome parse: unterminated gene");
        if (tk.text[tk.pos] == ']') {
            ++tk.pos;
            break;
        }
        if (tk.text[tk.pos] == '|') {
            ++tk.pos; // head|tail separator is cosmetic
            continue;
        }
        std::string t = tk.token();
        ParsedElement e;
        if (t.rfind("p#", 0) == 0) {
            e.is_plasmid_ref = true;
            e.plasmid_id = std::stoull(t.substr(2));
        } else if (t.rfind("rnc(", 0) == 0 && t.back() == ')') {
            e.symbol = "rnc";
            e.rnc_value = std::stod(t.substr(4, t.size() - 5));
        } else {
            e.symbol = t;
        }
        out.push_back(std::move(e));
    }
    return out;
}

int head_len_from_total(int total, const Library& lib) {
    const int a = std::max(lib.max_arity(), 1);
    // total = h + h*(a-1) + 1 = h*a + 1
    if (total < 1 || (total - 1) % a != 0)
        throw DataError("chromosome parse: gene length " + std::to_string(total) +
                        " does not fit the tail-length formula");
    return (total - 1) / a;
}

Gene build_scalar_gene(const std::vector<ParsedElement>& parsed, const Library& lib) {
    Gene g;
    g.head_len = head_len_from_total(static_cast<int>(parsed.size()), lib);
    for (const auto& pe : parsed) {
        if (pe.is_plasmid_ref)
            throw DataError("chromosome parse: nested plasmid reference");
        int code = lib.code_of(pe.symbol);
        if (code < 0)
            throw DataError("chromosome parse: unknown scalar symbol '" + pe.symbol + "'");
        Element e(code);
        e.rnc_value = pe.rnc_value;
        g.elems.push_back(std::move(e));
    }
    return g;
}

} // namespace

HostChromosome parse_chromosome(const std::string& text, const LibraryPair& libs) {
    Tokenizer tk{text};
    std::vector<std::vector<ParsedElement>> gene_tokens;
    std::vector<std::pair<std::uint64_t, std::vector<ParsedElement>>> plasmid_tokens;

    while (!tk.eof()) {
        if (tk.peek() == '[') {
            gene_tokens.push_back(parse_gene_tokens(tk));
        } else {
            std::string t = tk.token();
            if (t.size() < 2 || t[0] != 'p')
                throw DataError("chromosome parse: unexpected token '" + t + "'");
            std::uint64_t id = std::stoull(t.substr(1));
            tk.expect(':');
            plasmid_tokens.emplace_back(id, parse_gene_tokens(tk));
        }
    }
    if (gene_tokens.empty()) throw DataError("chromosome parse: no genes");

    HostChromosome c;
    for (const auto& gt : gene_tokens) {
        Gene g;
        g.head_len = head_len_from_total(static_cast<int>(gt.size()), libs.tensor);
        for (const auto& pe : gt) {
            Element e;
            if (pe.is_plasmid_ref) {
                int code = libs.tensor.plasmid_code();
                if (code < 0) throw DataError("chromosome parse: library lacks 'p'");
                e.code = code;
                auto it = std::find_if(
                    plasmid_tokens.begin(), plasmid_tokens.end(),
                    [&](const auto& kv) { return kv.first == pe.plasmid_id; });
                if (it == plasmid_tokens.end())
                    throw DataError("chromosome parse: missing plasmid table entry p" +
                                    std::to_string(pe.plasmid_id));
                auto plasmid = std::make_unique<PlasmidChromosome>();
                plasmid->id = pe.plasmid_id;
                plasmid->gene = build_scalar_gene(it->second, libs.scalar);
                e.plasmid = std::move(plasmid);
            } else {
                int code = libs.tensor.code_of(pe.symbol);
                if (code < 0)
                    throw DataError("chromosome parse: unknown tensor symbol '" + pe.symbol +
                                    "'");
                e.code = code;
            }
            g.elems.push_back(std::move(e));
        }
        c.genes.push_back(std::move(g));
    }
    return c;
}

std::string expr_to_string(const ExprTree& t) {
    if (!t.sym) return "?";
    if (!t.sym->is_function) {
        if (t.sym->is_rnc) return fmt_rnc(t.rnc_value);
        return t.sym->id;
    }
    switch (t.sym->op) {
        case OpKind::add:
            return "(" + expr_to_string(t.children[0]) + " + " + expr_to_string(t.children[1]) +
                   ")";
        case OpKind::sub:
            return "(" + expr_to_string(t.children[0]) + " - " + expr_to_string(t.children[1]) +
                   ")";
        case OpKind::mul:
            return "(" + expr_to_string(t.children[0]) + " * " + expr_to_string(t.children[1]) +
                   ")";
        case OpKind::div:
            return "(" + expr_to_string(t.children[0]) + " / " + expr_to_string(t.children[1]) +
                   ")";
        case OpKind::inner:
            return "(" + expr_to_string(t.children[0]) + " . " + expr_to_string(t.children[1]) +
                   ")";
        case OpKind::scalar_mul:
            return "(" + expr_to_string(t.children[0]) + ") * " + expr_to_string(t.children[1]);
        case OpKind::plasmid:
            return "p[" + (t.plasmid ? std::to_string(t.plasmid->id) : std::string("?")) +
                   "](" + expr_to_string(t.children[0]) + ")";
    }
    return "?";
}

} // namespace site
