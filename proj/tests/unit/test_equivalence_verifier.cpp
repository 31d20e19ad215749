#include <gtest/gtest.h>

#include "json.hpp"
#include "sqlgov/equivalence_verifier.hpp"
#include "sqlgov/error.hpp"
#include "sqlgov/prompts.hpp"
#include "test_support.hpp"

using namespace sqlgov;
using nlohmann::json;

namespace {

// Answers intent prompts with a fixed summary and alignment prompts with `alignment`.
CallbackLlm stub(json alignment) {
    return CallbackLlm([alignment](const PromptEnvelope& env) -> std::string {
        if (env.template_id == prompts::INTENT_EXTRACT) return R"({"summary": "rows"})";
        return alignment.dump();
    });
}

json identity_mapping(int n, double conf, bool eq = true) {
    json m = json::array();
    for (int i = 1; i <= n; ++i) m.push_back({{"left", i}, {"right", i}, {"equivalent", eq}, {"confidence", conf}});
    return {{"mapping", m}, {"counterexample", nullptr}};
}

const char* kA = "SELECT o.id, SUM(o.total) AS s FROM orders o WHERE o.id IN (SELECT c.oid FROM cust c) GROUP BY o.id";
const char* kB =
    "SELECT o.id, SUM(o.total) AS s FROM orders o JOIN (SELECT DISTINCT c.oid FROM cust c) d ON d.oid = o.id "
    "GROUP BY o.id";

}  // namespace

TEST(StructuralIntent, NestedReportHasThreeFieldsOverFiveTables) {
    const auto s = structural_intent(sqlgov::testing::read_data("nested_report.sql"));
    ASSERT_EQ(s.arity(), 3u);
    EXPECT_EQ(s.fields[0].output_name, "c0");
    EXPECT_EQ(s.fields[0].source_tables, (std::set<std::string>{"tb0"}));
    EXPECT_TRUE(s.fields[0].transformation.empty());
    EXPECT_EQ(s.fields[1].source_tables, (std::set<std::string>{"tb3"}));
    EXPECT_EQ(s.fields[2].source_tables, (std::set<std::string>{"tb4"}));
    EXPECT_NE(s.fields[2].transformation.find("AVG"), std::string::npos);
    EXPECT_EQ(s.base_tables, (std::set<std::string>{"tb0", "tb1", "tb2", "tb3", "tb4"}));
    EXPECT_FALSE(s.fields[0].conditions.empty());
}

TEST(StructuralIntent, RewrittenReportPassesThePrefilter) {
    const auto a = structural_intent(sqlgov::testing::read_data("nested_report.sql"));
    const auto b = structural_intent(sqlgov::testing::read_data("golden/nested_report_rewritten.sql"));
    EXPECT_EQ(a.base_tables, b.base_tables);
    EXPECT_FALSE(prefilter(a, b).has_value());
}

TEST(StructuralIntent, ResolvesCtesAndAliases) {
    const auto s = structural_intent("WITH x AS (SELECT a, b FROM t JOIN u ON t.k = u.k) SELECT x.a, q.z FROM x, s q");
    ASSERT_EQ(s.arity(), 2u);
    EXPECT_EQ(s.fields[0].source_tables, (std::set<std::string>{"t", "u"}));
    EXPECT_EQ(s.fields[1].source_tables, (std::set<std::string>{"s"}));
    EXPECT_EQ(s.base_tables, (std::set<std::string>{"s", "t", "u"}));
}

TEST(StructuralIntent, ConstantFieldHasNoSources) {
    const auto s = structural_intent("SELECT 1 AS one, a FROM t");
    EXPECT_TRUE(s.fields[0].source_tables.empty());
    EXPECT_EQ(s.fields[0].transformation, "constant 1");
    EXPECT_EQ(s.fields[0].output_name, "one");
}

TEST(StructuralIntent, RejectsNonSelectStatements) {
    for (const char* q : {"UPDATE t SET a = 1", "DELETE FROM t", "INSERT INTO t VALUES (1)"}) {
        try {
            structural_intent(q);
            FAIL() << q;
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), ErrorCode::UNSUPPORTED_STATEMENT) << q;
        }
    }
}

TEST(Verifier, UnsupportedStatementMakesNoCalls) {
    auto llm = stub(identity_mapping(1, 1.0));
    EquivalenceVerifier v(llm);
    EXPECT_THROW(v.check_equivalence("UPDATE t SET a = 1", "SELECT a FROM t"), Error);
    EXPECT_EQ(llm.calls(), 0u);
}

TEST(Verifier, IdenticalQueriesShortCircuit) {
    auto llm = stub(identity_mapping(1, 0.0, false));
    EquivalenceVerifier v(llm);
    const auto r = v.check_equivalence("select a from t where b = 1", "SELECT  a\nFROM t WHERE b=1");
    EXPECT_EQ(r.verdict, Verdict::EQUIVALENT);
    EXPECT_DOUBLE_EQ(r.confidence, 1.0);
    EXPECT_EQ(llm.calls(), 0u);
}

TEST(Verifier, PrefilterRejectsWithoutCalls) {
    auto llm = stub(identity_mapping(2, 1.0));
    EquivalenceVerifier v(llm);
    auto r = v.check_equivalence("SELECT a, b FROM t", "SELECT a FROM t");
    EXPECT_EQ(r.verdict, Verdict::NOT_EQUIVALENT);
    ASSERT_TRUE(r.reason);
    EXPECT_NE(r.reason->find("arity"), std::string::npos);
    r = v.check_equivalence("SELECT a FROM t", "SELECT a FROM u");
    EXPECT_EQ(r.verdict, Verdict::NOT_EQUIVALENT);
    EXPECT_NE(r.reason->find("base tables"), std::string::npos);
    EXPECT_EQ(llm.calls(), 0u);
}

TEST(Verifier, ConfidentBijectionIsEquivalent) {
    json a = identity_mapping(2, 0.9);
    a["mapping"][1]["confidence"] = 0.75;
    auto llm = stub(a);
    EquivalenceVerifier v(llm);
    const auto r = v.check_equivalence(kA, kB);
    EXPECT_EQ(r.verdict, Verdict::EQUIVALENT);
    EXPECT_DOUBLE_EQ(r.confidence, 0.75);
    ASSERT_TRUE(r.field_mapping);
    EXPECT_EQ(r.field_mapping->size(), 2u);
}

TEST(Verifier, LowConfidenceIsUndecided) {
    auto llm = stub(identity_mapping(2, 0.69));
    EquivalenceVerifier v(llm);
    EXPECT_EQ(v.check_equivalence(kA, kB).verdict, Verdict::UNDECIDED);
}

TEST(Verifier, NonBijectionIsUndecided) {
    json a = identity_mapping(2, 0.95);
    a["mapping"][1]["right"] = 1;
    auto llm = stub(a);
    EquivalenceVerifier v(llm);
    EXPECT_EQ(v.check_equivalence(kA, kB).verdict, Verdict::UNDECIDED);
}

TEST(Verifier, CounterexampleWins) {
    json a = identity_mapping(2, 0.95);
    a["counterexample"] = "cust holds two rows with the same oid";
    auto llm = stub(a);
    EquivalenceVerifier v(llm);
    const auto r = v.check_equivalence(kA, kB);
    EXPECT_EQ(r.verdict, Verdict::NOT_EQUIVALENT);
    ASSERT_TRUE(r.counterexample);
}

TEST(Verifier, GarbageAlignmentIsUndecided) {
    CallbackLlm llm([](const PromptEnvelope&) { return std::string("I think they match."); });
    EquivalenceVerifier v(llm);
    EXPECT_EQ(v.check_equivalence(kA, kB).verdict, Verdict::UNDECIDED);
}

TEST(Verifier, VerdictIsSymmetricUnderSymmetricProvider) {
    const std::vector<std::pair<std::string, std::string>> pairs{
        {kA, kB},
        {"SELECT a, b FROM t", "SELECT a FROM t"},
        {"SELECT a FROM t WHERE x > 1", "SELECT a FROM t WHERE 1 < x"},
        {"SELECT a FROM t", "SELECT a FROM u"},
        {"SELECT a FROM t", "select A from T"},
    };
    for (double conf : {0.5, 0.9}) {
        auto llm = stub(identity_mapping(2, conf));
        auto llm1 = stub(identity_mapping(1, conf));
        for (const auto& [a, b] : pairs) {
            EquivalenceVerifier v(structural_intent(a).arity() == 2 ? llm : llm1);
            const auto ab = v.check_equivalence(a, b);
            const auto ba = v.check_equivalence(b, a);
            EXPECT_EQ(ab.verdict, ba.verdict) << a << " | " << b;
            EXPECT_DOUBLE_EQ(ab.confidence, ba.confidence);
        }
    }
}

TEST(Verifier, NarrativesAreBuiltInnermostFirst) {
    std::vector<int> order;
    std::vector<std::string> parent_children;
    CallbackLlm llm([&](const PromptEnvelope& env) -> std::string {
        const std::string frag = env.section("Fragment");
        const int id = std::stoi(frag.substr(std::string("Fragment ").size()));
        order.push_back(id);
        if (id == 4) parent_children.push_back(env.section("Subquery Summaries"));
        return json{{"summary", "F" + std::to_string(id)}}.dump();
    });
    EquivalenceVerifier v(llm);
    const auto s = v.extract_intent(sqlgov::testing::read_data("nested_report.sql"));
    EXPECT_EQ(order, (std::vector<int>{1, 2, 3, 4, 5, 6, 7}));
    EXPECT_EQ(s.narrative, "F7");
    ASSERT_EQ(parent_children.size(), 1u);
    EXPECT_NE(parent_children[0].find("F2"), std::string::npos);
    EXPECT_NE(parent_children[0].find("F3"), std::string::npos);
}
