#include <gtest/gtest.h>

#include "sql_gen.hpp"
#include "sqlgov/templatize.hpp"
#include "sqlgov/vector_math.hpp"
#include "sqlgov/error.hpp"

#include <cmath>

using namespace sqlgov;

TEST(Templatize, MasksIdentifiersAndLiterals) {
    EXPECT_EQ(templatize("SELECT name FROM users WHERE id = 5"), "SELECT [COL] FROM [TBL] WHERE [COL] = [VAL]");
    EXPECT_EQ(templatize("SELECT 1"), "SELECT [VAL]");
}

TEST(Templatize, QualifiersAliasesAndFunctions) {
    EXPECT_EQ(templatize("select u.name, count(*) as n from users u join orders o on u.id = o.uid group by u.name"),
              "SELECT [TBL].[COL], COUNT(*) AS [COL] FROM [TBL] [TBL] JOIN [TBL] [TBL] ON [TBL].[COL] = "
              "[TBL].[COL] GROUP BY [TBL].[COL]");
    EXPECT_EQ(templatize("SELECT x FROM (SELECT a AS x FROM t) AS s WHERE s.x > 'q'"),
              "SELECT [COL] FROM (SELECT [COL] AS [COL] FROM [TBL]) AS [TBL] WHERE [TBL].[COL] > [VAL]");
    EXPECT_EQ(templatize("WITH c AS (SELECT 1) SELECT * FROM c"), "WITH [TBL] AS (SELECT [VAL]) SELECT * FROM [TBL]");
}

TEST(Templatize, KeepsTypesAndUnits) {
    EXPECT_EQ(templatize("SELECT CAST(a AS varchar) FROM t"), "SELECT CAST([COL] AS VARCHAR) FROM [TBL]");
    EXPECT_EQ(templatize("SELECT a::int FROM t WHERE d > date '2020-01-01' - interval '1' day"),
              "SELECT [COL] :: INT FROM [TBL] WHERE [COL] > DATE [VAL] - INTERVAL [VAL] DAY");
}

TEST(Templatize, IgnoresLayoutAndComments) {
    EXPECT_EQ(templatize("SELECT a\n  -- note\n  FROM   t"), templatize("select a from t"));
}

TEST(Templatize, IdempotentOnGeneratedQueries) {
    for (unsigned seed = 0; seed < 100; ++seed) {
        sqlgov::testing::RandomSql gen(seed);
        const std::string q = gen.query();
        const std::string once = templatize(q);
        EXPECT_EQ(templatize(once), once) << q;
    }
}

TEST(Templatize, TotalOnBrokenInput) {
    EXPECT_EQ(templatize("SELECT a b FROM"), "SELECT [COL] [COL] FROM");
    EXPECT_EQ(templatize("SELECT 'open"), "SELECT [VAL]");
    EXPECT_EQ(templatize(""), "");
}

TEST(NormalizeSql, KeepsNamesDropsLayout) {
    EXPECT_EQ(normalize_sql("select  a ,b from t -- x\n where a=1"), "SELECT a, b FROM t WHERE a = 1");
}

TEST(StripComments, RemovesLineAndBlockComments) {
    EXPECT_EQ(strip_comments("SELECT a -- c\nFROM t /* b */ WHERE x = '--'"), "SELECT a \nFROM t   WHERE x = '--'");
}

TEST(Cosine, ClosedForms) {
    const Vector v{0.3, -1.2, 4.0};
    EXPECT_NEAR(cosine_similarity(v, v), 1.0, 1e-12);
    EXPECT_DOUBLE_EQ(cosine_similarity({1, 0}, {0, 1}), 0.0);
    EXPECT_NEAR(cosine_similarity({1, 0}, {1, 1}), 1.0 / std::sqrt(2.0), 1e-9);
    EXPECT_NEAR(cosine_similarity({1, 0}, {1, 1}), 0.70710678, 1e-8);
}

TEST(Cosine, Errors) {
    try {
        cosine_similarity({1, 0}, {1, 0, 0});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::DIMENSION_MISMATCH);
    }
    try {
        cosine_similarity({0, 0}, {1, 0});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::ZERO_VECTOR);
    }
}
