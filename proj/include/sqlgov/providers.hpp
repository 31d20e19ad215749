#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sqlgov/vector_math.hpp"

namespace sqlgov {

std::string fnv1a_hex(std::string_view text);
std::uint64_t fnv1a(std::string_view text);

struct PromptSection {
    std::string name;
    std::string text;
};

/// A prompt as a named template plus ordered sections. The rendered text is
/// what a live model would receive; the digest keys scripted responses.
struct PromptEnvelope {
    std::string template_id;
    std::vector<PromptSection> sections;

    std::string render() const;
    std::string digest() const { return fnv1a_hex(render()); }
    /// Text of the first section called `name`, or empty.
    std::string section(std::string_view name) const;
};

class LlmProvider {
public:
    virtual ~LlmProvider() = default;
    virtual std::string complete(const PromptEnvelope& envelope) = 0;
};

class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    /// Unit-length vector; throws EMPTY_TEXT for blank input.
    virtual Vector embed(std::string_view text) = 0;
    virtual std::size_t dimension() const = 0;
};

struct ExecOutcome {
    enum class Status { OK, ERROR };
    Status status = Status::OK;
    std::optional<std::int64_t> rows;
    std::optional<std::string> error_log;
    double elapsed = 0.0;  // seconds

    bool ok() const { return status == Status::OK; }
};

class Executor {
public:
    virtual ~Executor() = default;
    virtual ExecOutcome execute(std::string_view sql) = 0;
};

// ---- scripted LLM ---------------------------------------------------------

struct PlaybookEntry {
    std::string template_id;
    std::string digest;
    std::string response;
};

std::vector<PlaybookEntry> load_playbook(const std::string& path);

/// Answers from a playbook keyed by (template_id, digest). Strict mode throws
/// MOCK_MISS for unknown prompts; permissive mode falls back to a harmless
/// per-template default.
class ScriptedLlm : public LlmProvider {
public:
    enum class Mode { Strict, Permissive };
    using MissHook = std::function<void(const PromptEnvelope&)>;

    explicit ScriptedLlm(std::vector<PlaybookEntry> entries, Mode mode = Mode::Strict);

    std::string complete(const PromptEnvelope& envelope) override;

    void add(PlaybookEntry entry);
    void on_miss(MissHook hook) { miss_hook_ = std::move(hook); }
    std::size_t calls() const { return calls_.load(); }
    std::size_t misses() const { return misses_.load(); }

    static std::string default_response(const PromptEnvelope& envelope);

private:
    std::map<std::pair<std::string, std::string>, std::string> table_;
    Mode mode_;
    MissHook miss_hook_;
    std::atomic<std::size_t> calls_{0};
    std::atomic<std::size_t> misses_{0};
};

/// Adapter around a callable, mostly for tests that compute answers on the fly.
class CallbackLlm : public LlmProvider {
public:
    using Fn = std::function<std::string(const PromptEnvelope&)>;
    explicit CallbackLlm(Fn fn) : fn_(std::move(fn)) {}

    std::string complete(const PromptEnvelope& envelope) override {
        ++calls_;
        return fn_(envelope);
    }
    std::size_t calls() const { return calls_.load(); }

private:
    Fn fn_;
    std::atomic<std::size_t> calls_{0};
};

// ---- hashing embedder -----------------------------------------------------

/// Bag-of-tokens feature hashing: lower-cased alphanumeric tokens are hashed
/// into `dimension` buckets, counted, then L2-normalised.
class HashingEmbedder : public EmbeddingProvider {
public:
    explicit HashingEmbedder(std::size_t dimension = 768);

    Vector embed(std::string_view text) override;
    std::size_t dimension() const override { return dimension_; }
    std::size_t calls() const { return calls_.load(); }

    static std::vector<std::string> tokens(std::string_view text);

private:
    std::size_t dimension_;
    std::atomic<std::size_t> calls_{0};
};

// ---- simulated executor ---------------------------------------------------

struct ExecFixture {
    std::string sql_template;  // templatize() form of the query
    ExecOutcome outcome;
    double spread = 0.0;       // relative noise: elapsed * (1 + spread * u), u in [-1, 1]
    double cold_extra = 0.0;   // seconds added to the first run of this template
};

/// JSONL: {sql | sql_file | template, elapsed, status, error_log, rows,
/// spread, cold_extra}. sql_file is relative to the fixture file.
std::vector<ExecFixture> load_exec_fixtures(const std::string& path);

/// Looks queries up by template. Noise comes from one seeded generator, so a
/// fixed seed and call order give identical timings.
class SimulatedExecutor : public Executor {
public:
    SimulatedExecutor(std::vector<ExecFixture> fixtures, std::uint64_t seed = 42);

    ExecOutcome execute(std::string_view sql) override;

private:
    std::map<std::string, ExecFixture> fixtures_;
    std::map<std::string, std::size_t> runs_;
    std::mt19937_64 rng_;
    std::mutex mutex_;
};

}  // namespace sqlgov
