#pragma once

#include <random>
#include <string>
#include <vector>

namespace sqlgov::testing {

// Small random SELECT generator for property tests that only need varied,
// valid SQL (not a model of the fragment tree).
class RandomSql {
public:
    explicit RandomSql(unsigned seed) : rng_(seed) {}

    std::string query(int depth = 2) {
        std::string sql = "SELECT " + select_list(depth) + " FROM " + source(depth);
        if (pick(0, 1)) sql += " WHERE " + predicate(depth);
        if (pick(0, 3) == 0) sql += " GROUP BY " + column();
        if (pick(0, 3) == 0) sql += " ORDER BY " + column() + (pick(0, 1) ? " DESC" : "");
        if (pick(0, 4) == 0) sql += " LIMIT " + std::to_string(pick(1, 100));
        return sql;
    }

    std::string table() { return names_[static_cast<std::size_t>(pick(0, 5))]; }
    std::string column() { return cols_[static_cast<std::size_t>(pick(0, 5))]; }
    int pick(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }

private:
    std::string literal() {
        if (pick(0, 1)) return std::to_string(pick(0, 999));
        return "'" + std::string(1, static_cast<char>('a' + pick(0, 25))) + std::to_string(pick(0, 99)) + "'";
    }

    std::string select_list(int depth) {
        std::string out;
        const int n = pick(1, 3);
        for (int i = 0; i < n; ++i) {
            if (i) out += ", ";
            switch (pick(0, 4)) {
                case 0: out += "COUNT(*) AS n" + std::to_string(i); break;
                case 1: out += "t." + column(); break;
                case 2: out += column() + " + " + literal(); break;
                case 3: out += depth > 0 ? "(" + query(depth - 1) + ")" : column(); break;
                default: out += column(); break;
            }
        }
        return out;
    }

    std::string source(int depth) {
        std::string base = pick(0, 2) == 0 && depth > 0 ? "(" + query(depth - 1) + ") t" : table() + " t";
        if (pick(0, 2) == 0) base += " LEFT JOIN " + table() + " u ON t." + column() + " = u." + column();
        return base;
    }

    std::string predicate(int depth) {
        switch (pick(0, 3)) {
            case 0: return column() + " = " + literal();
            case 1: return column() + " IN (" + literal() + ", " + literal() + ")";
            case 2:
                return depth > 0 ? column() + " IN (" + query(depth - 1) + ")" : column() + " IS NOT NULL";
            default: return column() + " > " + literal() + " AND " + column() + " <> " + literal();
        }
    }

    std::mt19937 rng_;
    std::vector<std::string> names_{"orders", "users", "events", "tb0", "tb1", "sales"};
    std::vector<std::string> cols_{"id", "ds", "amount", "c1", "name", "kind"};
};

}  // namespace sqlgov::testing
