#include <gtest/gtest.h>

#include <random>

#include "json.hpp"
#include "sql_gen.hpp"
#include "sqlgov/error.hpp"
#include "sqlgov/sql_tables.hpp"
#include "sqlgov/syntax_corrector.hpp"
#include "test_support.hpp"

using namespace sqlgov;

namespace {

const char* kCalciteJoinLog =
    "java.sql.SQLException: Error while executing SQL \"SELECT * FROM a JOIN b\": From line 1, column 15 to line "
    "1, column 22: INNER, LEFT, RIGHT or FULL join requires a condition (NATURAL keyword or ON or USING clause)\n"
    "\tat org.apache.calcite.avatica.Helper.createException(Helper.java:56)\n"
    "Caused by: org.apache.calcite.sql.validate.SqlValidatorException: INNER, LEFT, RIGHT or FULL join requires a "
    "condition (NATURAL keyword or ON or USING clause)\n"
    "\tat sun.reflect.NativeConstructorAccessorImpl.newInstance0(Native Method)\n";

const char* kMissingCommaSql =
    "SELECT x.id, x.total\n"
    "FROM (SELECT id SUM(amount) AS total\n"
    "      FROM orders GROUP BY id) x\n"
    "WHERE x.total > 10";

const char* kMissingCommaLog =
    "org.apache.calcite.sql.parser.SqlParseException: Encountered \"SUM\" at line 2, column 17.\n"
    "Was expecting one of:\n    \",\" ...\n    \"FROM\" ...\n    \"AS\" ...";

Catalog shop_catalog() {
    return parse_catalog(nlohmann::json::parse(R"({
        "orders": {"description": "one row per order",
                   "columns": [{"name": "id", "description": "order id"}, "amount", "region"]},
        "customers": ["id", "name", "segment"],
        "warehouse_stock": ["sku", "qty"]
    })"));
}

struct Fixture : ::testing::Test {
    HashingEmbedder embedder;
    KnowledgeSnapshot kb = seed_snapshot(embedder);
};

CallbackLlm answering(std::string answer, std::vector<PromptEnvelope>* seen = nullptr) {
    return CallbackLlm([answer = std::move(answer), seen](const PromptEnvelope& env) {
        if (seen) seen->push_back(env);
        return answer;
    });
}

}  // namespace

TEST(ParseErrorLog, CalciteValidatorRootCause) {
    const auto e = parse_error_log(kCalciteJoinLog);
    EXPECT_EQ(e.exception_type, "SqlValidatorException");
    EXPECT_NE(e.message.find("NATURAL keyword or ON or USING clause"), std::string::npos) << e.message;
    EXPECT_EQ(e.message.rfind("INNER, LEFT, RIGHT or FULL join", 0), 0u);
    ASSERT_TRUE(e.location.has_value());
    EXPECT_EQ(e.location->kind, ErrorLocation::Kind::LINE_COLUMN);
    EXPECT_EQ(e.location->line, 1u);
    EXPECT_EQ(e.location->column, 15u);
    EXPECT_EQ(e.raw_log, kCalciteJoinLog);
}

TEST(ParseErrorLog, LineColumnPattern) {
    const auto e = parse_error_log("ERROR at line 3, column 7: syntax error");
    EXPECT_EQ(e.exception_type, "ERROR");
    EXPECT_EQ(e.message, "syntax error");
    ASSERT_TRUE(e.location.has_value());
    EXPECT_EQ(e.location->line, 3u);
    EXPECT_EQ(e.location->column, 7u);
}

TEST(ParseErrorLog, UnstructuredFallsBackToUnknown) {
    const auto e = parse_error_log("the query blew up somewhere");
    EXPECT_EQ(e.exception_type, kUnknownErrorType);
    EXPECT_EQ(e.message, "the query blew up somewhere");
    EXPECT_FALSE(e.location.has_value());

    const auto multi = parse_error_log("\n   \n  first real line  \nsecond line\n");
    EXPECT_EQ(multi.exception_type, kUnknownErrorType);
    EXPECT_EQ(multi.message, "first real line");
}

TEST(ParseErrorLog, DialectCodes) {
    const auto my = parse_error_log("ERROR 1054 (42S22) at line 1: Unknown column 'regoin' in 'where clause'");
    EXPECT_EQ(my.exception_type, "ERROR 1054");
    EXPECT_EQ(my.message, "Unknown column 'regoin' in 'where clause'");

    const auto ora = parse_error_log("ORA-00904: \"REGOIN\": invalid identifier");
    EXPECT_EQ(ora.exception_type, "ORA-00904");
    EXPECT_EQ(ora.message, "\"REGOIN\": invalid identifier");

    const auto pg = parse_error_log("ERROR:  syntax error at or near \"FROM\"\nLINE 1: SELECT a, FROM t\n");
    EXPECT_EQ(pg.exception_type, "ERROR");
    EXPECT_EQ(pg.message, "syntax error at or near \"FROM\"");
    ASSERT_TRUE(pg.location.has_value());
    EXPECT_EQ(pg.location->kind, ErrorLocation::Kind::NEAR_TOKEN);
    EXPECT_EQ(pg.location->token, "FROM");

    const auto pos = parse_error_log("ERROR: column \"x\" does not exist\n  Position: 8");
    ASSERT_TRUE(pos.location.has_value());
    EXPECT_EQ(pos.location->kind, ErrorLocation::Kind::OFFSET);
    EXPECT_EQ(pos.location->offset, 7u);
}

TEST(ParseErrorLog, FirstSentenceOnly) {
    const auto e = parse_error_log(kMissingCommaLog);
    EXPECT_EQ(e.exception_type, "SqlParseException");
    EXPECT_EQ(e.message, "Encountered \"SUM\" at line 2, column 17");
}

TEST(ParseErrorLog, BlankLogIsRejected) {
    EXPECT_THROW(parse_error_log(" \n\t"), Error);
}

TEST(ErrorKey, MasksNumbersAndQuotedNames) {
    const auto e = parse_error_log(kMissingCommaLog);
    EXPECT_EQ(error_key(e), "SqlParseException: Encountered [ID] at line [N], column [N]");

    ParsedError col;
    col.exception_type = "SqlValidatorException";
    col.message = "Column 'regoin' not found in any table";
    EXPECT_EQ(error_key(col), "SqlValidatorException: Column [ID] not found in any table");
}

TEST(ResolveOffset, AllLocationKinds) {
    const std::string q = "SELECT a\nFROM t\nWHERE b = 1";
    ErrorLocation lc{ErrorLocation::Kind::LINE_COLUMN, 2, 6, 0, ""};
    ASSERT_TRUE(resolve_offset(lc, q));
    EXPECT_EQ(q[*resolve_offset(lc, q)], 't');
    lc.column = 40;
    EXPECT_FALSE(resolve_offset(lc, q));
    lc.line = 9;
    lc.column = 1;
    EXPECT_FALSE(resolve_offset(lc, q));

    ErrorLocation off{ErrorLocation::Kind::OFFSET, 0, 0, 9, ""};
    EXPECT_EQ(resolve_offset(off, q), 9u);
    off.offset = q.size();
    EXPECT_FALSE(resolve_offset(off, q));

    ErrorLocation near{ErrorLocation::Kind::NEAR_TOKEN, 0, 0, 0, "where"};
    EXPECT_EQ(resolve_offset(near, q), q.find("WHERE"));
    near.token.clear();
    EXPECT_EQ(resolve_offset(near, q), q.size() - 1);
    near.token = "nowhere";
    EXPECT_FALSE(resolve_offset(near, q));
}

TEST_F(Fixture, EmptyStoreFallsBackToGlobalFull) {
    KnowledgeSnapshot empty;
    const auto tree = decompose(kMissingCommaSql);
    const auto plan = clarify(parse_error_log(kMissingCommaLog), tree, empty, embedder);
    EXPECT_TRUE(plan.fallback());
    EXPECT_EQ(plan.scope, CorrectionScope::GLOBAL);
    EXPECT_EQ(plan.schema.kind, SchemaSlice::Kind::FULL);
    EXPECT_FALSE(plan.strategy.has_value());
    EXPECT_FALSE(plan.target_fragment.has_value());
}

TEST_F(Fixture, MissingCommaIsLocalToEnclosingFragment) {
    const std::string sql = kMissingCommaSql;
    const auto tree = decompose(sql);
    const auto plan = clarify(parse_error_log(kMissingCommaLog), tree, kb, embedder);
    ASSERT_TRUE(plan.strategy.has_value());
    EXPECT_EQ(plan.strategy->index, "MISSING_COMMA");
    EXPECT_EQ(plan.scope, CorrectionScope::LOCAL);
    EXPECT_EQ(plan.schema.kind, SchemaSlice::Kind::NONE);
    ASSERT_TRUE(plan.target_fragment.has_value());
    const auto& target = tree.get(*plan.target_fragment);
    EXPECT_EQ(target.kind, FragmentKind::SUBQUERY);
    EXPECT_NE(target.text.find("SUM(amount)"), std::string::npos);

    std::vector<PromptEnvelope> seen;
    auto llm = answering("```sql\nSELECT id, SUM(amount) AS total\n      FROM orders GROUP BY id\n```", &seen);
    const auto inputs = prepare_data(plan, sql, tree, shop_catalog());
    const auto out = correct(sql, inputs, llm);
    EXPECT_EQ(out.corrected,
              "SELECT x.id, x.total\n"
              "FROM (SELECT id, SUM(amount) AS total\n"
              "      FROM orders GROUP BY id) x\n"
              "WHERE x.total > 10");
    ASSERT_EQ(seen.size(), 1u);
    EXPECT_EQ(seen[0].template_id, prompts::CORRECT);
    EXPECT_EQ(seen[0].section("SQL"), target.text);
    EXPECT_EQ(seen[0].section("Context"), "SELECT x.id, x.total\nFROM (<fragment " +
                                              std::to_string(target.id) + ">) x\nWHERE x.total > 10");
    EXPECT_EQ(seen[0].render().find("Schema"), std::string::npos);
}

TEST_F(Fixture, ColumnErrorLimitsSchemaToReferencedTables) {
    const std::string sql = "SELECT o.regoin, c.name FROM orders o JOIN customers c ON o.customer_id = c.id";
    const std::string log =
        "Caused by: org.apache.calcite.sql.validate.SqlValidatorException: Column 'regoin' not found in any table";
    const auto tree = decompose(sql);
    const auto plan = clarify(parse_error_log(log), tree, kb, embedder);
    ASSERT_TRUE(plan.strategy.has_value());
    EXPECT_EQ(plan.strategy->index, "COLUMN_NOT_FOUND");
    // localized strategy without a location in the log
    EXPECT_TRUE(plan.fallback());
    EXPECT_EQ(plan.schema.kind, SchemaSlice::Kind::FULL);

    CorrectionPlan located = plan;
    located.fallback_reason.clear();
    located.scope = CorrectionScope::GLOBAL;
    located.schema = SchemaSlice{SchemaSlice::Kind::TABLES, {"orders", "customers"}};
    const auto inputs = prepare_data(located, sql, tree, shop_catalog());
    ASSERT_TRUE(inputs.slots.schema.has_value());
    EXPECT_NE(inputs.slots.schema->find("orders"), std::string::npos);
    EXPECT_NE(inputs.slots.schema->find("customers"), std::string::npos);
    EXPECT_EQ(inputs.slots.schema->find("warehouse_stock"), std::string::npos);
}

TEST_F(Fixture, ColumnErrorWithLocationStaysLocal) {
    const std::string sql = "SELECT o.regoin, c.name FROM orders o JOIN customers c ON o.customer_id = c.id";
    const std::string log =
        "From line 1, column 8 to line 1, column 15: Column 'regoin' not found in any table\n"
        "Caused by: org.apache.calcite.sql.validate.SqlValidatorException: Column 'regoin' not found in any table";
    const auto tree = decompose(sql);
    const auto plan = clarify(parse_error_log(log), tree, kb, embedder);
    ASSERT_TRUE(plan.strategy.has_value());
    EXPECT_EQ(plan.strategy->index, "COLUMN_NOT_FOUND");
    EXPECT_FALSE(plan.fallback());
    EXPECT_EQ(plan.scope, CorrectionScope::LOCAL);
    EXPECT_EQ(plan.target_fragment, tree.root_id);
    EXPECT_EQ(plan.schema.kind, SchemaSlice::Kind::TABLES);
    EXPECT_EQ(plan.schema.tables, (std::vector<std::string>{"orders", "customers"}));
}

TEST_F(Fixture, JoinConditionLogRetrievesItsStrategy) {
    const std::string sql = "SELECT * FROM a JOIN b";
    const auto plan = clarify(parse_error_log(kCalciteJoinLog), decompose(sql), kb, embedder);
    ASSERT_TRUE(plan.strategy.has_value());
    EXPECT_EQ(plan.strategy->index, "JOIN_WITHOUT_CONDITION");
    EXPECT_EQ(plan.scope, CorrectionScope::LOCAL);
}

TEST_F(Fixture, ColumnCountMismatchGuidanceReachesPrompt) {
    const std::string sql = "SELECT a, b FROM t1 UNION ALL SELECT a FROM t2";
    const std::string log =
        "org.apache.calcite.sql.validate.SqlValidatorException: Column count mismatch in UNION ALL";
    const auto tree = decompose(sql);
    const auto plan = clarify(parse_error_log(log), tree, kb, embedder);
    ASSERT_TRUE(plan.strategy.has_value());
    EXPECT_EQ(plan.strategy->index, "COLUMN_COUNT_MISMATCH");
    EXPECT_EQ(plan.scope, CorrectionScope::GLOBAL);
    EXPECT_FALSE(plan.fallback());

    std::vector<PromptEnvelope> seen;
    auto llm = answering("SELECT a, b FROM t1 UNION ALL SELECT a, NULL AS b FROM t2", &seen);
    const auto out = correct(sql, prepare_data(plan, sql, tree, shop_catalog()), llm);
    EXPECT_EQ(out.corrected, "SELECT a, b FROM t1 UNION ALL SELECT a, NULL AS b FROM t2");
    ASSERT_EQ(seen.size(), 1u);
    const std::string text = seen[0].render();
    EXPECT_NE(
        text.find("SELECT clauses connected by UNION or UNION ALL contain a different number of fields"),
        std::string::npos);
    EXPECT_EQ(text.find("Schema"), std::string::npos);
    EXPECT_EQ(seen[0].section("SQL"), sql);
}

TEST(PrepareData, LocalPlanOnReportFragmentThree) {
    const std::string sql = sqlgov::testing::read_data("nested_report.sql");
    const auto tree = decompose(sql);
    CorrectionPlan plan;
    plan.scope = CorrectionScope::LOCAL;
    plan.target_fragment = 3;
    plan.error_text = "ERROR: something";
    const auto in = prepare_data(plan, sql, tree, {});
    // rendering indents continuation lines, so look at the raw section texts
    std::string prompt;
    for (const auto& sec : prompts::correct(in.slots).sections) prompt += sec.text + "\n";
    EXPECT_EQ(in.slots.sql, tree.get(3).text);
    EXPECT_NE(prompt.find(tree.get(3).text), std::string::npos);
    EXPECT_EQ(prompt.find(tree.get(1).text), std::string::npos);
    EXPECT_EQ(prompt.find(tree.get(2).text), std::string::npos);
    EXPECT_EQ(prompt.find("tb3.c1 - tb3.c2"), std::string::npos);
    EXPECT_EQ(in.span, tree.get(3).span);
}

TEST(PrepareData, GlobalFullCarriesWholeQueryAndCatalog) {
    const std::string sql = "SELECT id FROM orders";
    const auto tree = decompose(sql);
    CorrectionPlan plan;
    plan.schema = SchemaSlice{SchemaSlice::Kind::FULL, {}};
    plan.fallback_reason = "test";
    const auto in = prepare_data(plan, sql, tree, shop_catalog());
    EXPECT_FALSE(in.slots.local);
    EXPECT_EQ(in.slots.sql, sql);
    ASSERT_TRUE(in.slots.schema.has_value());
    for (const char* t : {"orders", "customers", "warehouse_stock"})
        EXPECT_NE(in.slots.schema->find(t), std::string::npos) << t;
    EXPECT_EQ(in.span, (sql::Span{0, sql.size()}));
}

TEST(PrepareData, MissingFragmentFallsBackToGlobal) {
    const std::string sql = "SELECT id FROM (SELECT id FROM orders) s";
    const auto tree = decompose(sql);
    CorrectionPlan plan;
    plan.scope = CorrectionScope::LOCAL;
    plan.target_fragment = 99;
    const auto in = prepare_data(plan, sql, tree, shop_catalog());
    EXPECT_EQ(in.plan.scope, CorrectionScope::GLOBAL);
    EXPECT_EQ(in.plan.schema.kind, SchemaSlice::Kind::FULL);
    EXPECT_TRUE(in.plan.fallback());
    EXPECT_FALSE(in.slots.local);
    EXPECT_EQ(in.slots.sql, sql);
}

TEST(PromptMonotonicity, SchemaFreePromptsAreSmaller) {
    sqlgov::testing::RandomSql gen(11);
    const auto catalog = shop_catalog();
    for (int i = 0; i < 50; ++i) {
        const std::string sql = gen.query(3) + " JOIN orders ON 1 = 1";
        const auto tree = decompose(sql);
        CorrectionPlan without;
        without.guidance = "fix it";
        without.error_text = "ERROR: bad";
        CorrectionPlan with = without;
        with.schema = SchemaSlice{SchemaSlice::Kind::TABLES, referenced_tables(sql)};
        const auto a = prompts::correct(prepare_data(without, sql, tree, catalog).slots).render();
        const auto b = prompts::correct(prepare_data(with, sql, tree, catalog).slots).render();
        EXPECT_LT(a.size(), b.size()) << sql;
        EXPECT_EQ(a.find("Schema"), std::string::npos);
    }
}

TEST(Correct, GlobalAnswerReturnedVerbatim) {
    const std::string sql = "SELECT a b c FROM t";
    CorrectionPlan plan;
    plan.schema = SchemaSlice{SchemaSlice::Kind::FULL, {}};
    auto llm = answering("{\"sql\": \"SELECT a, b, c FROM t\"}");
    const auto out = correct(sql, prepare_data(plan, sql, decompose(sql), {}), llm);
    EXPECT_EQ(out.corrected, "SELECT a, b, c FROM t");
    EXPECT_EQ(out.original, sql);
    EXPECT_EQ(llm.calls(), 1u);
}

TEST(Correct, UnparseableAnswerIsStillInvalid) {
    const std::string sql = "SELECT a b c FROM t";
    CorrectionPlan plan;
    auto llm = answering("SELECT a, FROM");
    try {
        correct(sql, prepare_data(plan, sql, decompose(sql), {}), llm);
        FAIL() << "expected STILL_INVALID";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::STILL_INVALID);
        EXPECT_NE(std::string(e.what()).find(sql), std::string::npos);
        EXPECT_NE(std::string(e.what()).find("SELECT a, FROM"), std::string::npos);
    }

    auto blank = answering("   ");
    try {
        correct(sql, prepare_data(plan, sql, decompose(sql), {}), blank);
        FAIL() << "expected REJECTED_RESPONSE";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::REJECTED_RESPONSE);
    }
}

TEST(Correct, LocalityOutsideTheSpan) {
    sqlgov::testing::RandomSql gen(23);
    std::mt19937 rng(5);
    int checked = 0;
    for (int i = 0; i < 100; ++i) {
        const std::string sql = gen.query(4);
        const auto tree = decompose(sql);
        const int id = static_cast<int>(rng() % tree.size()) + 1;
        const auto& f = tree.get(id);
        CorrectionPlan plan;
        plan.scope = CorrectionScope::LOCAL;
        plan.target_fragment = id;
        // a harmless reformatting of the fragment
        auto llm = answering("\n" + f.text + "\n");
        const auto out = correct(sql, prepare_data(plan, sql, tree, {}), llm);
        ASSERT_GE(out.corrected.size(), f.span.begin);
        EXPECT_EQ(out.corrected.substr(0, f.span.begin), sql.substr(0, f.span.begin));
        const std::size_t tail = sql.size() - f.span.end;
        EXPECT_EQ(out.corrected.substr(out.corrected.size() - tail), sql.substr(f.span.end));
        ++checked;
    }
    EXPECT_EQ(checked, 100);
}

TEST_F(Fixture, ClarifyIsTotalOverArbitraryLogs) {
    sqlgov::testing::RandomSql gen(31);
    const std::vector<std::string> logs = {
        kCalciteJoinLog,
        kMissingCommaLog,
        "ERROR at line 1, column 3: syntax error",
        "ERROR at line 40, column 3: syntax error",
        "ORA-00904: \"X\": invalid identifier",
        "totally unstructured",
        "SqlValidatorException: Column 'x' not found in any table",
        "ERROR:  syntax error at or near \"FROM\"",
        "SqlValidatorException: Column count mismatch in UNION ALL",
    };
    for (int i = 0; i < 40; ++i) {
        const std::string sql = gen.query(3);
        const auto tree = decompose(sql);
        for (const auto& log : logs) {
            const auto plan = clarify(parse_error_log(log), tree, kb, embedder);
            if (plan.scope == CorrectionScope::LOCAL) {
                ASSERT_TRUE(plan.target_fragment.has_value());
                EXPECT_TRUE(plan.strategy.has_value());
            }
            if (plan.fallback()) {
                EXPECT_EQ(plan.scope, CorrectionScope::GLOBAL);
                EXPECT_EQ(plan.schema.kind, SchemaSlice::Kind::FULL);
            }
        }
    }
}

TEST_F(Fixture, FixRunsOneRound) {
    auto llm = answering("SELECT id, SUM(amount) AS total\n      FROM orders GROUP BY id");
    SyntaxCorrector fixer(kb, llm, embedder);
    const auto out = fixer.fix(kMissingCommaSql, kMissingCommaLog);
    EXPECT_EQ(out.plan.scope, CorrectionScope::LOCAL);
    EXPECT_TRUE(decompose(out.corrected).parsed());
    EXPECT_EQ(llm.calls(), 1u);
}

TEST(DiagnosticLog, OnlyForUnparsedTrees) {
    EXPECT_FALSE(diagnostic_log(decompose("SELECT 1")).has_value());
    const auto log = diagnostic_log(decompose("SELECT a FROM WHERE"));
    ASSERT_TRUE(log.has_value());
    const auto e = parse_error_log(*log);
    EXPECT_EQ(e.exception_type, "SqlParseException");
    ASSERT_TRUE(e.location.has_value());
    EXPECT_EQ(e.location->kind, ErrorLocation::Kind::LINE_COLUMN);
}

TEST_F(Fixture, LaterRoundsUseTheParseDiagnostic) {
    std::vector<PromptEnvelope> seen;
    int call = 0;
    CallbackLlm llm([&](const PromptEnvelope& env) -> std::string {
        seen.push_back(env);
        return ++call == 1 ? "SELECT a b c FROM" : "SELECT a, b, c FROM t";
    });
    SyntaxCorrector fixer(kb, llm, embedder);
    EXPECT_THROW(fixer.fix("SELECT a b c FROM t", "totally unstructured", {}, 1), Error);

    call = 0;
    seen.clear();
    const auto out = fixer.fix("SELECT a b c FROM t", "totally unstructured", {}, 2);
    EXPECT_EQ(out.corrected, "SELECT a, b, c FROM t");
    EXPECT_EQ(out.rounds, 2);
    ASSERT_EQ(seen.size(), 2u);
    EXPECT_EQ(seen[1].section("SQL"), "SELECT a b c FROM");
    EXPECT_EQ(seen[1].section("Error").rfind("SqlParseException: ", 0), 0u);
    EXPECT_THROW(fixer.fix("SELECT 1", "x", {}, 0), Error);
}
