#include "sqlgov/fragmenter.hpp"

#include <algorithm>
#include <functional>
#include <memory>

#include "sqlgov/error.hpp"
#include "sqlgov/sql_lexer.hpp"

namespace sqlgov {

using sql::Span;
using sql::Token;
using sql::TokenKind;

std::string_view to_string(FragmentKind kind) {
    switch (kind) {
        case FragmentKind::MAIN: return "MAIN";
        case FragmentKind::CTE: return "CTE";
        case FragmentKind::SUBQUERY: return "SUBQUERY";
    }
    return "?";
}

std::string_view to_string(ClauseSite site) {
    switch (site) {
        case ClauseSite::FROM: return "FROM";
        case ClauseSite::WHERE: return "WHERE";
        case ClauseSite::HAVING: return "HAVING";
        case ClauseSite::SELECT_LIST: return "SELECT_LIST";
        case ClauseSite::ORDER_BY: return "ORDER_BY";
        case ClauseSite::CTE_BODY: return "CTE_BODY";
        case ClauseSite::NONE: return "NONE";
    }
    return "?";
}

const Fragment& FragmentTree::get(int id) const {
    if (id < 1 || static_cast<std::size_t>(id) > fragments.size()) {
        throw Error(ErrorCode::OUT_OF_RANGE, "no fragment with id " + std::to_string(id));
    }
    return fragments[static_cast<std::size_t>(id - 1)];
}

int FragmentTree::max_depth() const {
    int d = 0;
    for (const auto& f : fragments) d = std::max(d, f.depth);
    return d;
}

namespace {

int clause_priority(ClauseSite site) {
    switch (site) {
        case ClauseSite::FROM: return 0;
        case ClauseSite::WHERE: return 1;
        case ClauseSite::HAVING: return 2;
        case ClauseSite::SELECT_LIST: return 3;
        case ClauseSite::ORDER_BY: return 4;
        case ClauseSite::NONE: return 5;
        case ClauseSite::CTE_BODY: return 6;
    }
    return 7;
}

struct Node {
    FragmentKind kind = FragmentKind::MAIN;
    ClauseSite site = ClauseSite::NONE;
    Span span;
    std::vector<std::unique_ptr<Node>> subqueries;
    std::vector<std::unique_ptr<Node>> ctes;
    int id = 0;
};

class StructureScanner {
public:
    explicit StructureScanner(const std::vector<Token>& tokens) : tokens_(tokens) {}

    void build_region(std::size_t begin, std::size_t end, Node& node) {
        std::size_t i = begin;
        if (i < end && tokens_[i].is_word("WITH")) {
            i = scan_ctes(i + 1, end, node);
        }
        bool clause_seen = false;
        scan(i, end, node, ClauseSite::NONE, true, clause_seen);
        std::stable_sort(node.subqueries.begin(), node.subqueries.end(), [](const auto& a, const auto& b) {
            const int pa = clause_priority(a->site);
            const int pb = clause_priority(b->site);
            if (pa != pb) return pa < pb;
            return a->span.begin < b->span.begin;
        });
    }

private:
    // Index of the matching ')' for the '(' at `open`, or `end` when unbalanced.
    std::size_t match_paren(std::size_t open, std::size_t end) const {
        int depth = 0;
        for (std::size_t i = open; i < end; ++i) {
            if (tokens_[i].is(TokenKind::LParen)) ++depth;
            else if (tokens_[i].is(TokenKind::RParen) && --depth == 0) return i;
        }
        return end;
    }

    bool is_query_start(std::size_t i, std::size_t end) const {
        while (i < end && tokens_[i].is(TokenKind::LParen)) ++i;
        return i < end && (tokens_[i].is_word("SELECT") || tokens_[i].is_word("WITH"));
    }

    std::unique_ptr<Node> make_child(FragmentKind kind, ClauseSite site, std::size_t begin, std::size_t end) {
        auto child = std::make_unique<Node>();
        child->kind = kind;
        child->site = site;
        child->span = Span{tokens_[begin].begin, tokens_[end - 1].end};
        build_region(begin, end, *child);
        return child;
    }

    std::size_t scan_ctes(std::size_t i, std::size_t end, Node& node) {
        if (i < end && tokens_[i].is_word("RECURSIVE")) ++i;
        while (i < end) {
            // name [ (columns) ] AS [NOT] [MATERIALIZED] ( body )
            if (!tokens_[i].is(TokenKind::LParen)) ++i;
            if (i < end && tokens_[i].is(TokenKind::LParen) && !is_query_start(i + 1, end)) {
                i = std::min(match_paren(i, end) + 1, end);
            }
            while (i < end && (tokens_[i].is_word("AS") || tokens_[i].is_word("NOT") ||
                               tokens_[i].is_word("MATERIALIZED"))) {
                ++i;
            }
            if (i >= end || !tokens_[i].is(TokenKind::LParen)) return i;
            const std::size_t close = match_paren(i, end);
            if (close > i + 1) {
                node.ctes.push_back(make_child(FragmentKind::CTE, ClauseSite::CTE_BODY, i + 1, close));
            }
            i = std::min(close + 1, end);
            if (i < end && tokens_[i].is(TokenKind::Comma)) {
                ++i;
                continue;
            }
            return i;
        }
        return i;
    }

    // Walks one nesting level. `top` marks levels where clause keywords count;
    // inside expression parentheses the enclosing clause stays fixed.
    void scan(std::size_t i, std::size_t end, Node& node, ClauseSite clause, bool top, bool& clause_seen) {
        while (i < end) {
            const Token& t = tokens_[i];
            if (t.is(TokenKind::LParen)) {
                const std::size_t close = match_paren(i, end);
                if (is_query_start(i + 1, close)) {
                    if (top && !clause_seen) {
                        // set-operation arm or wrapper parentheses: same fragment
                        bool inner_seen = false;
                        scan(i + 1, close, node, ClauseSite::NONE, true, inner_seen);
                        clause_seen = clause_seen || inner_seen;
                    } else if (close > i + 1) {
                        node.subqueries.push_back(make_child(FragmentKind::SUBQUERY, clause, i + 1, close));
                    }
                } else {
                    bool ignored = true;
                    scan(i + 1, close, node, clause, false, ignored);
                }
                i = close + 1;
                continue;
            }
            if (top && t.kind == TokenKind::Word) {
                if (t.is_word("SELECT")) {
                    clause = ClauseSite::SELECT_LIST;
                    clause_seen = true;
                } else if (t.is_word("FROM")) {
                    clause = ClauseSite::FROM;
                } else if (t.is_word("WHERE")) {
                    clause = ClauseSite::WHERE;
                } else if (t.is_word("HAVING")) {
                    clause = ClauseSite::HAVING;
                } else if (t.is_word("ORDER")) {
                    clause = ClauseSite::ORDER_BY;
                } else if (t.is_word("GROUP") || t.is_word("LIMIT") || t.is_word("OFFSET") || t.is_word("FETCH") ||
                           t.is_word("QUALIFY") || t.is_word("WINDOW")) {
                    clause = ClauseSite::NONE;
                } else if (t.is_word("UNION") || t.is_word("INTERSECT") || t.is_word("EXCEPT") ||
                           t.is_word("MINUS")) {
                    clause = ClauseSite::NONE;
                    clause_seen = false;
                }
            }
            ++i;
        }
    }

    const std::vector<Token>& tokens_;
};

void number(Node& node, int& counter) {
    for (auto& c : node.subqueries) number(*c, counter);
    for (auto& c : node.ctes) number(*c, counter);
    node.id = ++counter;
}

void emit(const Node& node, std::optional<int> parent, int depth, std::string_view source,
          std::vector<Fragment>& out) {
    Fragment f;
    f.id = node.id;
    f.kind = node.kind;
    f.span = node.span;
    f.text = std::string(source.substr(node.span.begin, node.span.size()));
    f.parent_id = parent;
    f.depth = depth;
    f.clause_site = node.site;
    for (const auto& c : node.subqueries) f.children.push_back(c->id);
    for (const auto& c : node.ctes) f.children.push_back(c->id);
    out[static_cast<std::size_t>(node.id - 1)] = std::move(f);
    for (const auto& c : node.subqueries) emit(*c, node.id, depth + 1, source, out);
    for (const auto& c : node.ctes) emit(*c, node.id, depth + 1, source, out);
}

}  // namespace

FragmentTree decompose(std::string_view query) {
    const auto tokens = sql::tokenize(query);
    if (tokens.empty()) throw Error(ErrorCode::EMPTY_QUERY, "query is blank");

    std::size_t end = tokens.size();
    while (end > 0 && tokens[end - 1].is(TokenKind::Semicolon)) --end;

    Node root;
    root.kind = FragmentKind::MAIN;
    root.site = ClauseSite::NONE;
    root.span = Span{0, query.size()};
    StructureScanner(tokens).build_region(0, end, root);

    int counter = 0;
    number(root, counter);

    FragmentTree tree;
    tree.source = std::string(query);
    tree.fragments.resize(static_cast<std::size_t>(counter));
    emit(root, std::nullopt, 1, query, tree.fragments);
    tree.root_id = root.id;

    try {
        sql::parse_query(query);
    } catch (const sql::ParseError& e) {
        const auto lc = sql::line_column(query, e.offset());
        tree.diagnostic = ParseDiagnostic{e.offset(), lc.line, lc.column, e.what()};
    }
    return tree;
}

const Fragment& fragment_at(const FragmentTree& tree, std::size_t offset) {
    if (offset >= tree.source.size()) {
        throw Error(ErrorCode::OUT_OF_RANGE, "offset " + std::to_string(offset) + " outside query of length " +
                                                 std::to_string(tree.source.size()));
    }
    const Fragment* best = nullptr;
    for (const auto& f : tree.fragments) {
        if (f.span.contains(offset) && (best == nullptr || f.depth > best->depth)) best = &f;
    }
    if (best == nullptr) throw Error(ErrorCode::OUT_OF_RANGE, "no fragment covers offset");
    return *best;
}

std::string reassemble(const FragmentTree& tree) {
    std::function<std::string(const Fragment&)> build = [&](const Fragment& f) {
        std::vector<const Fragment*> kids;
        for (int id : f.children) kids.push_back(&tree.get(id));
        std::sort(kids.begin(), kids.end(), [](auto* a, auto* b) { return a->span.begin < b->span.begin; });
        std::string out;
        std::size_t cursor = f.span.begin;
        for (const auto* k : kids) {
            out.append(tree.source, cursor, k->span.begin - cursor);
            out += build(*k);
            cursor = k->span.end;
        }
        out.append(tree.source, cursor, f.span.end - cursor);
        return out;
    };
    return build(tree.root());
}

}  // namespace sqlgov
