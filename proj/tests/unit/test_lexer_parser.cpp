#include <gtest/gtest.h>

#include "sqlgov/sql_ast.hpp"
#include "sqlgov/sql_lexer.hpp"
#include "test_support.hpp"

using namespace sqlgov::sql;

TEST(Lexer, SplitsBasicTokens) {
    auto toks = tokenize("SELECT a.b, 'x''y' FROM t -- note\nWHERE c >= 1.5e3");
    ASSERT_EQ(toks.size(), 12u);
    EXPECT_TRUE(toks[0].is_word("SELECT"));
    EXPECT_EQ(toks[2].kind, TokenKind::Dot);
    EXPECT_EQ(toks[5].kind, TokenKind::String);
    EXPECT_EQ(toks[5].text, "'x''y'");
    EXPECT_TRUE(toks[10].is_op(">="));
    EXPECT_EQ(toks[11].kind, TokenKind::Number);
}

TEST(Lexer, KeepsCommentsOnRequest) {
    auto toks = tokenize("/* a */ SELECT 1 -- b", {.keep_comments = true});
    ASSERT_EQ(toks.size(), 4u);
    EXPECT_EQ(toks[0].kind, TokenKind::Comment);
    EXPECT_EQ(toks[3].kind, TokenKind::Comment);
}

TEST(Lexer, FlagsUnterminatedString) {
    auto toks = tokenize("SELECT 'abc");
    ASSERT_EQ(toks.size(), 2u);
    EXPECT_TRUE(toks[1].unterminated);
}

TEST(Lexer, RecognisesPlaceholders) {
    auto toks = tokenize("SELECT [COL] FROM [TBL] WHERE [my col] = [VAL]");
    EXPECT_EQ(toks[1].kind, TokenKind::Placeholder);
    EXPECT_EQ(toks[3].kind, TokenKind::Placeholder);
    EXPECT_EQ(toks[5].kind, TokenKind::QuotedIdent);
    EXPECT_EQ(identifier_name(toks[5]), "my col");
}

TEST(Lexer, LineColumnRoundTrip) {
    const std::string src = "SELECT a\nFROM t\n  WHERE x";
    const auto off = src.find("WHERE");
    auto lc = line_column(src, off);
    EXPECT_EQ(lc.line, 3u);
    EXPECT_EQ(lc.column, 3u);
    EXPECT_EQ(offset_of(src, 3, 3), off);
}

TEST(Parser, ParsesNestedReport) {
    auto q = parse_query(sqlgov::testing::read_data("nested_report.sql"));
    const SelectCore* core = q->first_core();
    ASSERT_NE(core, nullptr);
    EXPECT_EQ(core->items.size(), 3u);
    ASSERT_EQ(core->from.size(), 1u);
    EXPECT_EQ(core->from[0].kind, TableRef::Kind::Join);
    EXPECT_EQ(core->from[0].join_type, JoinType::Left);
    ASSERT_TRUE(core->where.has_value());
    EXPECT_EQ(core->where->op, "AND");
}

TEST(Parser, ParsesRewrittenReportAndUnionScan) {
    EXPECT_NO_THROW(parse_query(sqlgov::testing::read_data("golden/nested_report_rewritten.sql")));
    EXPECT_NO_THROW(parse_query(sqlgov::testing::read_data("union_scan.sql")));
    EXPECT_NO_THROW(parse_query(sqlgov::testing::read_data("golden/union_scan_rewritten.sql")));
}

TEST(Parser, AcceptsCommonDialectForms) {
    const char* queries[] = {
        "SELECT CAST(a AS DECIMAL(10, 2)), x::int FROM t",
        "SELECT EXTRACT(YEAR FROM d), INTERVAL '1' DAY FROM t",
        "SELECT a FROM t WHERE b NOT IN (SELECT b FROM u) AND c BETWEEN 1 AND 2",
        "SELECT a FROM t WHERE EXISTS (SELECT 1 FROM u WHERE u.a = t.a)",
        "SELECT COUNT(DISTINCT a) FILTER (WHERE b > 0) FROM t GROUP BY c HAVING COUNT(*) > 1",
        "SELECT a, SUM(b) OVER (PARTITION BY a ORDER BY c ROWS BETWEEN UNBOUNDED PRECEDING AND CURRENT ROW) FROM t",
        "(SELECT a FROM t) UNION ALL (SELECT a FROM u) ORDER BY a LIMIT 10",
        "WITH RECURSIVE r(n) AS (SELECT 1 UNION ALL SELECT n + 1 FROM r WHERE n < 5) SELECT n FROM r;",
        "SELECT t.* FROM a AS t NATURAL JOIN b USING (id)",
        "SELECT CASE x WHEN 1 THEN 'a' ELSE 'b' END AS y FROM t",
        "SELECT a FROM t LIMIT 5 OFFSET 10",
        "SELECT DATE '2024-01-01', CURRENT_DATE FROM t",
    };
    for (const char* sql : queries) {
        EXPECT_NO_THROW(parse_query(sql)) << sql;
    }
}

TEST(Parser, RejectsBrokenQueries) {
    const char* queries[] = {
        "SELECT a, FROM t",
        "SELECT tb3.c1 tb3.c2 FROM tb3",
        "SELECT a FROM t WHERE (b = 1",
        "SELECT a FROM t WHERE x = 'open",
        "INSERT INTO t VALUES (1)",
        "SELECT FROM t",
        "SELECT a FROM t t2 t3",
    };
    for (const char* sql : queries) {
        EXPECT_THROW(parse_query(sql), ParseError) << sql;
    }
}

TEST(Parser, ReportsOffsetOfFailure) {
    const std::string sql = "SELECT a b c FROM t";
    try {
        parse_query(sql);
        FAIL() << "expected parse failure";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.offset(), sql.find('c'));
        EXPECT_NE(std::string(e.what()).find("line 1, column 12"), std::string::npos);
    }
}
