#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>

#include "sql_gen.hpp"
#include "sqlgov/error.hpp"
#include "sqlgov/fragmenter.hpp"
#include "sqlgov/knowledge_base.hpp"
#include "sqlgov/templatize.hpp"
#include "test_support.hpp"

using namespace sqlgov;

namespace {

std::string temp_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("sqlgov_kb_" + name);
    std::filesystem::remove_all(dir);
    return dir.string();
}

std::vector<std::string> labels(const std::vector<RuleEntry>& rules) {
    std::vector<std::string> out;
    for (const auto& r : rules) out.push_back(r.index);
    return out;
}

// Reference dot product on raw vectors (not via the library's cosine).
double ref_cos(const Vector& a, const Vector& b) {
    double ab = 0, aa = 0, bb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ab += a[i] * b[i];
        aa += a[i] * a[i];
        bb += b[i] * b[i];
    }
    return ab / std::sqrt(aa * bb);
}

}  // namespace

TEST(Predicates, ParseAndPrint) {
    EXPECT_EQ(Predicate::parse("same_table_scanned(3)").min_count, 3);
    EXPECT_EQ(Predicate::parse(" contains_operator( not  in ) ").op, "NOT IN");
    EXPECT_EQ(Predicate::parse("contains_operator(NOT IN)").to_string(), "contains_operator(NOT IN)");
    EXPECT_EQ(Predicate::parse("in_subquery").kind, PredicateKind::InSubquery);
    EXPECT_THROW(Predicate::parse("bogus"), Error);
    EXPECT_THROW(Predicate::parse("in_subquery(1)"), Error);
}

TEST(Predicates, FragmentFacts) {
    auto f = analyze_fragment("SELECT a FROM t LEFT JOIN u ON t.k = u.k WHERE u.k IS NOT NULL");
    EXPECT_TRUE(f.has_outer_join_null_filter);
    f = analyze_fragment("SELECT a FROM t LEFT JOIN u ON t.k = u.k WHERE t.k IS NOT NULL");
    EXPECT_FALSE(f.has_outer_join_null_filter);
    f = analyze_fragment("SELECT a FROM t RIGHT JOIN u ON t.k = u.k WHERE t.k IS NOT NULL");
    EXPECT_TRUE(f.has_outer_join_null_filter);
    f = analyze_fragment("SELECT a FROM t WHERE a NOT IN (SELECT b FROM t)");
    EXPECT_TRUE(f.has_in_subquery);
    EXPECT_FALSE(f.has_duplicate_scan());  // the subquery is a child fragment
    EXPECT_TRUE(evaluate(Predicate::parse("contains_operator(NOT IN)"), f));
    f = analyze_fragment("SELECT a FROM t WHERE a IN (SELECT b FROM u WHERE b NOT IN (1))");
    EXPECT_FALSE(evaluate(Predicate::parse("contains_operator(NOT IN)"), f));
    f = analyze_fragment("SELECT * FROM a UNION ALL SELECT * FROM b");
    EXPECT_TRUE(f.has_union_all_star);
    f = analyze_fragment("SELECT x FROM a UNION ALL SELECT x FROM b");
    EXPECT_FALSE(f.has_union_all_star);
    f = analyze_fragment("SELECT (SELECT 1) AS one FROM t");
    EXPECT_TRUE(f.has_scalar_subquery_in_select);
}

TEST(MatchRules, NestedReportWithSeedRules) {
    HashingEmbedder emb;
    const auto kb = seed_snapshot(emb);
    const auto tree = decompose(sqlgov::testing::read_data("nested_report.sql"));
    ASSERT_EQ(tree.size(), 7u);
    for (int id : {1, 2, 3, 5, 6}) {
        EXPECT_TRUE(match_rules(tree.get(id), Tool::REWRITER, kb).empty()) << "fragment " << id;
    }
    EXPECT_EQ(labels(match_rules(tree.get(4), Tool::REWRITER, kb)), std::vector<std::string>{"SAME_TABLE_JOIN"});
    EXPECT_EQ(labels(match_rules(tree.get(7), Tool::REWRITER, kb)),
              std::vector<std::string>{"OUTER_JOIN_NULL_FILTER"});
    // other tools see nothing
    EXPECT_TRUE(match_rules(tree.get(4), Tool::CORRECTOR, kb).empty());
}

TEST(MatchRules, OnlyVerifiedWithMatchersSortedByIndex) {
    HashingEmbedder emb;
    auto kb = seed_snapshot(emb);
    const auto tree = decompose("SELECT a FROM t WHERE a NOT IN (SELECT b FROM u)");
    EXPECT_EQ(labels(match_rules(tree.root(), Tool::REWRITER, kb)),
              (std::vector<std::string>{"IN(SELECT)", "NOT_IN_SUBQUERY"}));
    for (auto& r : kb.rules) {
        if (r.index == "IN(SELECT)") r.status = RuleStatus::CANDIDATE;
        if (r.index == "NOT_IN_SUBQUERY") r.matcher.reset();
    }
    EXPECT_TRUE(match_rules(tree.root(), Tool::REWRITER, kb).empty());
    // purity
    const auto again = decompose("SELECT a FROM t WHERE a NOT IN (SELECT b FROM u)");
    EXPECT_EQ(match_rules(again.root(), Tool::REWRITER, kb), match_rules(tree.root(), Tool::REWRITER, kb));
}

TEST(RetrieveCases, SelfSimilarityAndEmptyStore) {
    HashingEmbedder emb;
    KnowledgeSnapshot kb;
    EXPECT_TRUE(retrieve_cases("SELECT 1", kb, emb).empty());
    const std::string q = "SELECT name FROM users WHERE id = 5";
    kb.cases.push_back(make_case("A", "other", {"X"}, "SELECT COUNT(*) FROM t GROUP BY k", Tool::REWRITER, emb));
    kb.cases.push_back(make_case("B", "self", {"X"}, "select title from books where pk = 99", Tool::REWRITER, emb));
    const auto hits = retrieve_cases(q, kb, emb);
    ASSERT_FALSE(hits.empty());
    EXPECT_EQ(hits.front().item->index, "B");
    EXPECT_NEAR(hits.front().similarity, 1.0, 1e-6);
}

TEST(RetrieveCases, MatchesFullScanOracle) {
    HashingEmbedder emb;
    KnowledgeSnapshot kb;
    sqlgov::testing::RandomSql gen(11);
    const std::vector<std::string> tag_pool{"A", "B", "C", "D"};
    for (int i = 0; i < 50; ++i) {
        std::vector<std::string> tags{tag_pool[static_cast<std::size_t>(gen.pick(0, 3))]};
        // every fifth case duplicates an earlier query so ties occur
        const std::string sql = i % 5 == 4 ? kb.cases[static_cast<std::size_t>(i - 3)].details : gen.query(1);
        char idx[8];
        std::snprintf(idx, sizeof idx, "C%02d", 49 - i);
        kb.cases.push_back(make_case(idx, sql, tags, sql, Tool::REWRITER, emb));
    }
    for (int trial = 0; trial < 20; ++trial) {
        const std::string q = gen.query(1);
        const Vector qe = emb.embed(templatize(q));
        std::vector<std::pair<double, std::string>> oracle;
        for (const auto& c : kb.cases) oracle.emplace_back(ref_cos(qe, emb.embed(templatize(c.details))), c.index);
        std::sort(oracle.begin(), oracle.end(), [](const auto& a, const auto& b) {
            if (std::abs(a.first - b.first) > 1e-12) return a.first > b.first;
            return a.second < b.second;
        });
        const auto got = retrieve_cases(q, kb, emb, {.k = 5});
        ASSERT_EQ(got.size(), 5u);
        for (std::size_t i = 0; i < got.size(); ++i) {
            EXPECT_EQ(got[i].item->index, oracle[i].second) << "trial " << trial << " rank " << i;
            EXPECT_NEAR(got[i].similarity, oracle[i].first, 1e-9);
        }
        // k monotonicity
        const auto more = retrieve_cases(q, kb, emb, {.k = 12});
        for (std::size_t i = 0; i < got.size(); ++i) EXPECT_EQ(more[i].item, got[i].item);
        // tag filter soundness
        const auto filtered = retrieve_cases(q, kb, emb, {.tag_filter = std::vector<std::string>{"B"}, .k = 50});
        for (const auto& s : filtered) EXPECT_EQ(s.item->tags, std::vector<std::string>{"B"});
        EXPECT_FALSE(filtered.empty());
    }
}

TEST(RetrieveStrategy, SeededJoinConditionMessage) {
    HashingEmbedder emb;
    const auto kb = seed_snapshot(emb);
    const auto hit = retrieve_strategy(
        "SqlValidatorException: INNER, LEFT, RIGHT or FULL join requires a condition (NATURAL keyword or ON or USING "
        "clause)",
        kb, emb);
    ASSERT_TRUE(hit.has_value());
    EXPECT_EQ(hit->item->index, "JOIN_WITHOUT_CONDITION");
    EXPECT_FALSE(retrieve_strategy("x", KnowledgeSnapshot{}, emb).has_value());
    EXPECT_FALSE(retrieve_strategy("kernel panic while mounting rootfs", kb, emb).has_value());
}

TEST(RetrieveStrategy, NearestEqualsExhaustiveScan) {
    HashingEmbedder emb;
    KnowledgeSnapshot kb;
    sqlgov::testing::RandomSql gen(5);
    const std::vector<std::string> words{"column", "table", "join", "syntax", "missing", "type", "cast", "group",
                                         "union", "count", "function", "alias", "near", "found", "parse"};
    auto sentence = [&] {
        std::string s = "Exception:";
        for (int i = 0, n = gen.pick(3, 7); i < n; ++i) s += " " + words[static_cast<std::size_t>(gen.pick(0, 14))];
        return s;
    };
    for (int i = 0; i < 30; ++i) {
        ErrorStrategy s;
        s.index = "S" + std::to_string(100 + i);
        s.message_pattern = sentence();
        s.guidance = "g";
        s.embedding = emb.embed(s.message_pattern);
        kb.strategies.push_back(s);
    }
    for (int trial = 0; trial < 30; ++trial) {
        const std::string key = sentence();
        const Vector q = emb.embed(key);
        const ErrorStrategy* best = nullptr;
        double best_sim = -2;
        for (const auto& s : kb.strategies) {
            const double sim = ref_cos(q, emb.embed(s.message_pattern));
            if (sim > best_sim + 1e-12 || (std::abs(sim - best_sim) <= 1e-12 && s.index < best->index)) {
                best = &s;
                best_sim = sim;
            }
        }
        const auto got = retrieve_strategy(key, kb, emb, -1.0);
        ASSERT_TRUE(got.has_value());
        EXPECT_EQ(got->item->index, best->index);
        const auto thresholded = retrieve_strategy(key, kb, emb);
        EXPECT_EQ(thresholded.has_value(), best_sim >= kDefaultStrategyThreshold);
    }
}

TEST(Persistence, EmptyRoundTrip) {
    const auto dir = temp_dir("empty");
    save(KnowledgeSnapshot{}, dir);
    EXPECT_EQ(load(dir), KnowledgeSnapshot{});
}

TEST(Persistence, MixedRoundTrip) {
    HashingEmbedder emb(64);
    KnowledgeSnapshot s = seed_snapshot(emb, 1700000000);
    sqlgov::testing::RandomSql gen(3);
    for (int i = 0; i < 40; ++i) {
        RuleEntry r;
        r.index = "R" + std::to_string(i);
        r.description = "desc \"quoted\" \n line " + std::to_string(i);
        if (i % 3 == 0) r.matcher = Matcher{{Predicate::parse("same_table_scanned(" + std::to_string(i) + ")")}};
        r.tool = kAllTools[i % 4];
        r.status = static_cast<RuleStatus>(i % 3);
        r.created_at = 1000 + i;
        if (i % 2) r.verified_at = 2000 + i;
        s.rules.push_back(r);
    }
    for (int i = 0; i < 40; ++i) {
        const std::string sql = gen.query();
        s.cases.push_back(make_case("K" + std::to_string(i), sql, {"R1", "R2"}, sql, kAllTools[i % 4], emb));
    }
    for (int i = 0; i < 10; ++i) {
        s.strategies.push_back({"E" + std::to_string(i), "msg " + std::to_string(i), i % 2 == 0, i % 3 == 0,
                                "guide", emb.embed("msg " + std::to_string(i))});
    }
    s.stats[Tool::MODIFIER] = ToolStats{3, {10, 20, 45}};
    const auto dir = temp_dir("mixed");
    save(s, dir);
    const auto back = load(dir);
    EXPECT_EQ(back.rules, s.rules);
    EXPECT_EQ(back.cases, s.cases);
    EXPECT_EQ(back.strategies, s.strategies);
    EXPECT_EQ(back.stats, s.stats);
    EXPECT_TRUE(back == s);
}

TEST(Persistence, SchemaVersionMismatch) {
    const auto dir = temp_dir("version");
    save(KnowledgeSnapshot{}, dir);
    {
        std::ofstream out(std::filesystem::path(dir) / "meta.json");
        out << R"({"schema_version": 99, "stats": {}})";
    }
    try {
        load(dir);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::SCHEMA_VERSION_MISMATCH);
    }
    try {
        load(temp_dir("absent"));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::IO_FAILURE);
    }
}

TEST(ToolStats, Intervals) {
    ToolStats s{0, {30, 10, 20}};
    EXPECT_EQ(s.intervals(), (std::vector<double>{10, 10}));
    EXPECT_EQ(s.last_update(), 30);
}
