#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "sqlgov/error.hpp"
#include "sqlgov/providers.hpp"
#include "sqlgov/templatize.hpp"
#include "test_support.hpp"

using namespace sqlgov;

namespace {

PromptEnvelope sample(std::string id = "RULE_GEN") {
    return PromptEnvelope{std::move(id), {{"Task Description", "Look at this."}, {"Question", "SELECT 1\nFROM t"}}};
}

}  // namespace

TEST(PromptEnvelope, RendersIndentedSections) {
    EXPECT_EQ(sample().render(), "Task Description:\n    Look at this.\n  -\nQuestion:\n    SELECT 1\n    FROM t");
}

TEST(PromptEnvelope, DigestIsStableAndContentSensitive) {
    EXPECT_EQ(sample().digest(), sample().digest());
    EXPECT_EQ(sample().digest().size(), 16u);
    auto other = sample();
    other.sections[1].text += " ";
    EXPECT_NE(other.digest(), sample().digest());
    // FNV-1a 64 reference values
    EXPECT_EQ(fnv1a_hex(""), "cbf29ce484222325");
    EXPECT_EQ(fnv1a_hex("a"), "af63dc4c8601ec8c");
}

TEST(ScriptedLlm, AnswersFromPlaybook) {
    const auto env = sample();
    ScriptedLlm llm({{"RULE_GEN", env.digest(), R"({"X":"y"})"}});
    EXPECT_EQ(llm.complete(env), R"({"X":"y"})");
    EXPECT_EQ(llm.complete(env), R"({"X":"y"})");
    EXPECT_EQ(llm.calls(), 2u);
}

TEST(ScriptedLlm, StrictMissNamesTheDigest) {
    ScriptedLlm llm({});
    const auto env = sample();
    int hook_calls = 0;
    llm.on_miss([&](const PromptEnvelope&) { ++hook_calls; });
    try {
        llm.complete(env);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::MOCK_MISS);
        EXPECT_NE(std::string(e.what()).find(env.digest()), std::string::npos);
    }
    EXPECT_EQ(hook_calls, 1);
}

TEST(ScriptedLlm, PermissiveDefaults) {
    ScriptedLlm llm({}, ScriptedLlm::Mode::Permissive);
    EXPECT_EQ(llm.complete(sample("SCENARIO_2")), R"({"efficient":true})");
    PromptEnvelope rw{"REWRITE", {{"SQL", "SELECT a FROM t"}}};
    EXPECT_EQ(llm.complete(rw), "SELECT a FROM t");
}

TEST(ScriptedLlm, LoadsJsonlPlaybook) {
    const auto dir = std::filesystem::temp_directory_path() / "sqlgov_playbook_test";
    std::filesystem::create_directories(dir);
    const auto path = (dir / "p.jsonl").string();
    {
        std::ofstream out(path);
        out << R"({"template_id":"RULE_GEN","digest":")" << sample().digest() << R"(","response":"ok"})" << "\n\n";
    }
    ScriptedLlm llm(load_playbook(path));
    EXPECT_EQ(llm.complete(sample()), "ok");
    try {
        load_playbook((dir / "missing.jsonl").string());
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::IO_FAILURE);
    }
}

TEST(HashingEmbedder, DeterministicUnitVectors) {
    HashingEmbedder emb;
    EXPECT_EQ(emb.dimension(), 768u);
    const auto a = emb.embed("SELECT [COL] FROM [TBL]");
    const auto b = emb.embed("SELECT [COL] FROM [TBL]");
    EXPECT_EQ(a, b);

    std::mt19937 rng(7);
    const std::string alphabet = "abcdefghij klmnop_qrstuv wxyz0123 456789 ,.()";
    for (int i = 0; i < 100; ++i) {
        std::string text = "w";
        const int len = std::uniform_int_distribution<int>(1, 80)(rng);
        for (int j = 0; j < len; ++j) {
            text += alphabet[std::uniform_int_distribution<std::size_t>(0, alphabet.size() - 1)(rng)];
        }
        EXPECT_NEAR(l2_norm(emb.embed(text)), 1.0, 1e-6);
    }
}

TEST(HashingEmbedder, DisjointTokensOnlyOverlapThroughCollisions) {
    HashingEmbedder emb;
    const std::string a = "alpha beta gamma";
    const std::string b = "delta epsilon zeta";
    std::set<std::size_t> buckets_a;
    for (const auto& t : HashingEmbedder::tokens(a)) buckets_a.insert(fnv1a(t) % 768);
    bool collide = false;
    for (const auto& t : HashingEmbedder::tokens(b)) collide |= buckets_a.count(fnv1a(t) % 768) > 0;
    ASSERT_FALSE(collide);
    EXPECT_DOUBLE_EQ(cosine_similarity(emb.embed(a), emb.embed(b)), 0.0);
}

TEST(HashingEmbedder, BlankTextRejected) {
    HashingEmbedder emb;
    try {
        emb.embed("  \n");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::EMPTY_TEXT);
    }
}

TEST(SimulatedExecutor, ScriptedOutcomes) {
    const std::string report = sqlgov::testing::read_data("nested_report.sql");
    ExecFixture f;
    f.sql_template = templatize(report);
    f.outcome.elapsed = 100.0;
    SimulatedExecutor exec({f});
    const auto out = exec.execute(report);
    EXPECT_TRUE(out.ok());
    EXPECT_DOUBLE_EQ(out.elapsed, 100.0);

    const auto miss = exec.execute("SELECT nothing FROM nowhere");
    EXPECT_FALSE(miss.ok());
    ASSERT_TRUE(miss.error_log.has_value());
}

TEST(SimulatedExecutor, SeededNoiseRepeats) {
    ExecFixture f;
    f.sql_template = templatize("SELECT a FROM t");
    f.outcome.elapsed = 10.0;
    f.spread = 0.1;
    f.cold_extra = 5.0;
    auto run = [&] {
        SimulatedExecutor exec({f}, 99);
        std::vector<double> times;
        for (int i = 0; i < 5; ++i) times.push_back(exec.execute("select a from t").elapsed);
        return times;
    };
    const auto first = run();
    EXPECT_EQ(first, run());
    EXPECT_GT(first[0], 14.0);
    for (std::size_t i = 1; i < first.size(); ++i) {
        EXPECT_GE(first[i], 9.0);
        EXPECT_LE(first[i], 11.0);
    }
}
