#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "sqlgov/equivalence_verifier.hpp"
#include "sqlgov/error.hpp"
#include "sqlgov/fragmenter.hpp"
#include "sqlgov/harness.hpp"
#include "sqlgov/knowledge_base.hpp"
#include "sqlgov/modifier.hpp"
#include "sqlgov/providers.hpp"
#include "sqlgov/rewriter.hpp"
#include "sqlgov/self_learning.hpp"
#include "sqlgov/syntax_corrector.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;
using namespace sqlgov;

namespace {

constexpr int kOk = 0;
constexpr int kNegative = 1;
constexpr int kOperational = 2;

struct Globals {
    std::string config_path = "sqlgov.toml";
    std::string kb_dir;
    std::string provider;
    std::string playbook;
    std::string log_misses;
    std::optional<std::int64_t> now;
    bool json = false;
};

std::string read_file(const std::string& path) {
    if (path == "-") {
        std::ostringstream ss;
        ss << std::cin.rdbuf();
        return ss.str();
    }
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IO_FAILURE, "cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// SQL inputs lose trailing whitespace so that a file and the same query
// printed by another command produce identical prompts.
std::string read_sql(const std::string& path) {
    std::string s = read_file(path);
    const auto end = s.find_last_not_of(" \t\r\n");
    s.resize(end == std::string::npos ? 0 : end + 1);
    return s;
}

void print_sql(const std::string& sql) {
    std::cout << sql;
    if (sql.empty() || sql.back() != '\n') std::cout << '\n';
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string matcher_text(const std::optional<Matcher>& m) {
    if (!m) return "-";
    std::string out;
    for (const auto& p : m->all) out += (out.empty() ? "" : " & ") + p.to_string();
    return out;
}

// Everything a command needs, built from config, environment and flags.
class Session {
public:
    explicit Session(const Globals& g) : g_(g) {
        cfg_ = load_config(fs::exists(g.config_path) ? std::optional<std::string>(g.config_path) : std::nullopt);
        if (!g.kb_dir.empty()) cfg_.kb_dir = g.kb_dir;
        if (!g.provider.empty()) cfg_.provider = g.provider;
        if (!g.playbook.empty()) cfg_.playbook = g.playbook;
        now_ = g.now ? *g.now : static_cast<std::int64_t>(std::time(nullptr));
        embedder_ = std::make_unique<HashingEmbedder>(cfg_.embedding_dimension);
    }

    const Config& config() const { return cfg_; }
    std::int64_t now() const { return now_; }
    EmbeddingProvider& embedder() { return *embedder_; }

    ScriptedLlm& llm() {
        if (llm_) return *llm_;
        ScriptedLlm::Mode mode;
        if (cfg_.provider == "scripted") {
            mode = ScriptedLlm::Mode::Strict;
        } else if (cfg_.provider == "permissive") {
            mode = ScriptedLlm::Mode::Permissive;
        } else {
            throw Error(ErrorCode::INVALID_ARGUMENT,
                        "unknown provider '" + cfg_.provider + "' (expected scripted or permissive)");
        }
        std::vector<PlaybookEntry> entries;
        if (!cfg_.playbook.empty()) entries = load_playbook(cfg_.playbook);
        llm_ = std::make_unique<ScriptedLlm>(std::move(entries), mode);
        if (!g_.log_misses.empty()) {
            const std::string path = g_.log_misses;
            llm_->on_miss([this, path](const PromptEnvelope& env) {
                std::lock_guard lock(miss_mutex_);
                std::ofstream out(path, std::ios::app);
                ordered_json line{{"template_id", env.template_id},
                                  {"digest", env.digest()},
                                  {"response", ScriptedLlm::default_response(env)},
                                  {"prompt", env.render()}};
                out << line.dump() << '\n';
            });
        }
        return *llm_;
    }

    bool kb_exists() const { return fs::exists(fs::path(cfg_.kb_dir) / "meta.json"); }

    KnowledgeSnapshot& kb() {
        if (kb_) return *kb_;
        if (kb_exists()) {
            kb_ = load(cfg_.kb_dir);
        } else {
            std::cerr << "note: no knowledge base at " << cfg_.kb_dir << ", using the built-in seed\n";
            kb_ = seed_snapshot(*embedder_, now_);
        }
        return *kb_;
    }

    void save_kb(const KnowledgeSnapshot& snapshot) {
        save(snapshot, cfg_.kb_dir);
        kb_ = snapshot;
    }

    Catalog catalog(const std::string& flag) const {
        const std::string path = flag.empty() ? cfg_.catalog : flag;
        return path.empty() ? Catalog{} : load_catalog(path);
    }

    std::vector<IntentCategory> categories(const std::string& flag) {
        std::string path = flag.empty() ? cfg_.categories : flag;
        if (path.empty() && fs::exists(fs::path(cfg_.kb_dir) / "categories.json")) {
            path = (fs::path(cfg_.kb_dir) / "categories.json").string();
        }
        if (!path.empty()) return load_categories(path, *embedder_);
        return parse_categories(json(default_categories_json()), *embedder_);
    }

private:
    const Globals& g_;
    Config cfg_;
    std::int64_t now_ = 0;
    std::unique_ptr<HashingEmbedder> embedder_;
    std::unique_ptr<ScriptedLlm> llm_;
    std::optional<KnowledgeSnapshot> kb_;
    std::mutex miss_mutex_;
};

ordered_json verdict_json(const EquivalenceVerdict& v) {
    ordered_json j{{"verdict", std::string(to_string(v.verdict))}, {"confidence", v.confidence}};
    if (v.reason) j["reason"] = *v.reason;
    if (v.counterexample) j["counterexample"] = *v.counterexample;
    if (v.field_mapping) {
        ordered_json m = ordered_json::array();
        for (const auto& f : *v.field_mapping) {
            m.push_back({{"left", f.left}, {"right", f.right}, {"equivalent", f.equivalent},
                         {"confidence", f.confidence}});
        }
        j["field_mapping"] = m;
    }
    return j;
}

void print_verdict(const EquivalenceVerdict& v) {
    std::cout << to_string(v.verdict) << " (confidence " << v.confidence << ")";
    if (v.reason) std::cout << ": " << *v.reason;
    std::cout << '\n';
    if (v.counterexample) std::cout << "counterexample: " << *v.counterexample << '\n';
}

int verdict_exit(const EquivalenceVerdict& v) { return v.verdict == Verdict::EQUIVALENT ? kOk : kNegative; }

// ---- commands -------------------------------------------------------------------

int cmd_fragment(const std::string& file) {
    const std::string sql = read_sql(file);
    const auto tree = decompose(sql);
    ordered_json frags = ordered_json::array();
    for (const auto& f : tree.fragments) {
        frags.push_back({{"id", f.id},
                         {"kind", std::string(to_string(f.kind))},
                         {"depth", f.depth},
                         {"parent", f.parent_id ? ordered_json(*f.parent_id) : ordered_json(nullptr)},
                         {"clause_site", std::string(to_string(f.clause_site))},
                         {"span", {f.span.begin, f.span.end}},
                         {"children", f.children},
                         {"text", f.text}});
    }
    ordered_json out{{"fragments", frags}, {"root_id", tree.root_id}, {"max_depth", tree.max_depth()},
                     {"parsed", tree.parsed()}};
    if (tree.diagnostic) {
        out["diagnostic"] = {{"line", tree.diagnostic->line},
                             {"column", tree.diagnostic->column},
                             {"message", tree.diagnostic->message}};
    }
    std::cout << out.dump(2) << '\n';
    return kOk;
}

int cmd_rewrite(Session& s, const Globals& g, const std::string& file, bool verify, bool parallel,
                const std::string& out_path) {
    const std::string sql = read_sql(file);
    RewriterConfig rc;
    rc.parallel = parallel;
    Rewriter rewriter(s.kb(), s.llm(), s.embedder(), rc);

    const auto t0 = std::chrono::steady_clock::now();
    const auto suggestions = rewriter.evaluate(sql);
    const double t_eval = seconds_since(t0);
    const auto t1 = std::chrono::steady_clock::now();
    auto result = rewriter.rewrite(sql, suggestions);
    const double t_rewrite = seconds_since(t1);
    double t_verify = 0.0;
    if (verify) {
        const auto t2 = std::chrono::steady_clock::now();
        EquivalenceVerifier verifier(s.llm());
        result.verified = verifier.check_equivalence(result.original, result.rewritten);
        t_verify = seconds_since(t2);
    }
    if (!out_path.empty()) write_file_atomic(out_path, result.rewritten + "\n");

    if (g.json) {
        ToolReport rep;
        rep.tool = Tool::REWRITER;
        rep.input_digest = fnv1a_hex(sql);
        ordered_json sj = ordered_json::array();
        for (const auto& sug : result.suggestions_applied) {
            sj.push_back({{"fragment_id", sug.fragment_id},
                          {"rule", sug.rule_index ? ordered_json(*sug.rule_index) : ordered_json(nullptr)},
                          {"other_rules", sug.other_rules},
                          {"scenario", std::string(to_string(sug.scenario))},
                          {"action", sug.action},
                          {"rationale", sug.rationale}});
            if (sug.rule_index) rep.rules_used.push_back(*sug.rule_index);
            for (const auto& r : sug.other_rules) rep.rules_used.push_back(r);
        }
        rep.cases_used = result.cases_consulted;
        rep.output = {{"original", result.original}, {"rewritten", result.rewritten}, {"suggestions", sj}};
        if (result.verified) rep.output["verified"] = verdict_json(*result.verified);
        rep.timings = {{"evaluate", t_eval}, {"rewrite", t_rewrite}};
        if (verify) rep.timings.emplace_back("verify", t_verify);
        std::cout << to_json(rep).dump(2) << '\n';
    } else {
        for (const auto& sug : result.suggestions_applied) {
            std::cerr << "fragment " << sug.fragment_id << " [" << to_string(sug.scenario);
            if (sug.rule_index) std::cerr << " " << *sug.rule_index;
            for (const auto& r : sug.other_rules) std::cerr << ", " << r;
            std::cerr << "]: " << sug.action << '\n';
        }
        print_sql(result.rewritten);
        if (result.verified) {
            std::cerr << "verification: " << to_string(result.verified->verdict) << " (confidence "
                      << result.verified->confidence << ")\n";
        }
    }
    return result.verified ? verdict_exit(*result.verified) : kOk;
}

int cmd_verify(Session& s, const Globals& g, const std::string& left, const std::string& right,
               const std::string& pairs) {
    EquivalenceVerifier verifier(s.llm());
    if (!pairs.empty()) {
        std::ifstream in(pairs);
        if (!in) throw Error(ErrorCode::IO_FAILURE, "cannot read " + pairs);
        const auto base = fs::path(pairs).parent_path();
        int rc = kOk;
        ordered_json all = ordered_json::array();
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            const json j = json::parse(line);
            auto side = [&](const char* key) {
                const std::string v = j.at(key).get<std::string>();
                return fs::exists(base / v) ? read_sql((base / v).string()) : v;
            };
            const auto v = verifier.check_equivalence(side("left"), side("right"));
            auto row = verdict_json(v);
            row["id"] = j.value("id", "P" + std::to_string(line_no));
            all.push_back(row);
            if (!g.json) {
                std::cout << row["id"].get<std::string>() << ": ";
                print_verdict(v);
            }
            if (verdict_exit(v) != kOk) rc = kNegative;
        }
        if (g.json) std::cout << all.dump(2) << '\n';
        return rc;
    }
    if (left.empty() || right.empty()) throw Error(ErrorCode::INVALID_ARGUMENT, "verify needs --left and --right");
    const std::string a = read_sql(left);
    const std::string b = read_sql(right);
    const auto t0 = std::chrono::steady_clock::now();
    const auto v = verifier.check_equivalence(a, b);
    if (g.json) {
        ToolReport rep;
        rep.tool = Tool::VERIFIER;
        rep.input_digest = fnv1a_hex(a + "\n--\n" + b);
        rep.output = verdict_json(v);
        rep.timings = {{"verify", seconds_since(t0)}};
        std::cout << to_json(rep).dump(2) << '\n';
    } else {
        print_verdict(v);
    }
    return verdict_exit(v);
}

struct ModifyArgs {
    std::string file;
    std::string request;
    std::string context_file;
    std::string history;
    std::string categories;
    std::string catalog;
    std::string force_category;
};

int cmd_modify(Session& s, const Globals& g, const ModifyArgs& a) {
    const std::string sql = read_sql(a.file);
    const std::string context = a.context_file.empty() ? std::string() : read_file(a.context_file);
    const auto catalog = s.catalog(a.catalog);
    const auto cats = s.categories(a.categories);
    ModifierConfig mc;

    std::vector<std::string> history_sql;
    if (!a.history.empty())
        for (const auto& r : load_records(a.history)) history_sql.push_back(r.sql);

    const auto t0 = std::chrono::steady_clock::now();
    const auto cls = classify_intent(a.request, cats, s.embedder(), mc, catalog);
    const double t_classify = seconds_since(t0);

    const IntentCategory* chosen = nullptr;
    const std::string wanted = a.force_category.empty() ? cls.category.value_or("") : a.force_category;
    for (const auto& c : cats)
        if (c.id == wanted) chosen = &c;
    if (!a.force_category.empty() && chosen == nullptr) {
        throw Error(ErrorCode::INVALID_ARGUMENT, "unknown category " + a.force_category);
    }

    ordered_json scores = ordered_json::object();
    for (std::size_t i = 0; i < cats.size() && i < cls.scores.size(); ++i) scores[cats[i].id] = cls.scores[i];

    if (chosen == nullptr) {
        if (g.json) {
            std::cout << ordered_json{{"category", nullptr}, {"rejected", true}, {"score", cls.score},
                                      {"scores", scores}}
                             .dump(2)
                      << '\n';
        } else {
            std::cout << "REJECTED: no intent category reached the threshold (best " << cls.score << ")\n";
        }
        return kNegative;
    }

    const auto t1 = std::chrono::steady_clock::now();
    const auto ctx = prepare_metadata(sql, context, catalog, table_frequencies(history_sql), mc, s.now());
    const auto result = modify(a.request, ctx, *chosen, s.llm());
    if (g.json) {
        ToolReport rep;
        rep.tool = Tool::MODIFIER;
        rep.input_digest = fnv1a_hex(a.request + "\n--\n" + sql);
        rep.output = {{"category", result.category}, {"score", cls.score}, {"scores", scores},
                      {"sql", result.sql},           {"explanation", result.explanation}};
        rep.timings = {{"classify", t_classify}, {"modify", seconds_since(t1)}};
        std::cout << to_json(rep).dump(2) << '\n';
    } else {
        std::cerr << "category: " << result.category << " (score " << cls.score << ")\n";
        if (!result.explanation.empty()) std::cerr << result.explanation << '\n';
        print_sql(result.sql);
    }
    return kOk;
}

int cmd_fix_syntax(Session& s, const Globals& g, const std::string& file, const std::string& log_file,
                   const std::string& schema, int max_rounds) {
    const std::string sql = read_sql(file);
    const std::string log = read_file(log_file);
    const auto catalog = s.catalog(schema);
    SyntaxCorrector corrector(s.kb(), s.llm(), s.embedder());
    const auto t0 = std::chrono::steady_clock::now();
    const auto result = corrector.fix(sql, log, catalog, max_rounds);
    const auto& plan = result.plan;
    if (g.json) {
        ToolReport rep;
        rep.tool = Tool::CORRECTOR;
        rep.input_digest = fnv1a_hex(sql + "\n--\n" + log);
        if (plan.strategy) rep.rules_used.push_back(plan.strategy->index);
        rep.output = {{"corrected", result.corrected},
                      {"scope", std::string(to_string(plan.scope))},
                      {"target_fragment", plan.target_fragment ? ordered_json(*plan.target_fragment)
                                                               : ordered_json(nullptr)},
                      {"fallback", plan.fallback_reason},
                      {"rounds", result.rounds}};
        rep.timings = {{"correct", seconds_since(t0)}};
        std::cout << to_json(rep).dump(2) << '\n';
    } else {
        std::cerr << "strategy: " << (plan.strategy ? plan.strategy->index : std::string("none")) << ", scope "
                  << to_string(plan.scope);
        if (plan.target_fragment) std::cerr << ", fragment " << *plan.target_fragment;
        if (plan.fallback()) std::cerr << " (" << plan.fallback_reason << ")";
        std::cerr << '\n';
        print_sql(result.corrected);
    }
    return kOk;
}

int cmd_kb_init(Session& s, bool force) {
    const fs::path dir = s.config().kb_dir;
    if (s.kb_exists() && !force) {
        throw Error(ErrorCode::INVALID_ARGUMENT, "knowledge base already exists at " + dir.string() + " (use --force)");
    }
    s.save_kb(seed_snapshot(s.embedder(), s.now()));
    write_file_atomic((dir / "categories.json").string(), default_categories_json().dump(2) + "\n");
    std::cout << "initialised " << dir.string() << '\n';
    return kOk;
}

int cmd_kb_list(Session& s, const Globals& g, const std::string& tool, const std::string& status) {
    const auto& kb = s.kb();
    ordered_json rows = ordered_json::array();
    for (const auto& r : kb.rules) {
        if (!tool.empty() && r.tool != parse_tool(tool)) continue;
        if (!status.empty() && r.status != parse_rule_status(status)) continue;
        if (g.json) {
            rows.push_back(to_json(r));
            continue;
        }
        std::string desc = r.description.substr(0, 60);
        if (r.description.size() > 60) desc += "...";
        std::cout << std::left << std::setw(26) << r.index << std::setw(10) << to_string(r.tool) << std::setw(10)
                  << to_string(r.status) << std::setw(65) << desc << matcher_text(r.matcher) << '\n';
    }
    if (g.json) std::cout << rows.dump(2) << '\n';
    return kOk;
}

int cmd_kb_add(Session& s, const std::string& index, const std::string& description, const std::string& tool,
               const std::vector<std::string>& matcher, const std::string& status) {
    auto kb = s.kb();
    RuleEntry r;
    r.index = index;
    r.description = description;
    r.tool = parse_tool(tool);
    r.status = parse_rule_status(status);
    r.created_at = s.now();
    if (r.status == RuleStatus::VERIFIED) r.verified_at = s.now();
    if (!matcher.empty()) {
        Matcher m;
        for (const auto& p : matcher) m.all.push_back(Predicate::parse(p));
        r.matcher = m;
    }
    if (kb.find_rule(r.tool, r.index) != nullptr) {
        throw Error(ErrorCode::INVALID_ARGUMENT, "rule " + index + " already exists for " + tool);
    }
    kb.rules.push_back(r);
    kb.stats[r.tool].n_current = static_cast<std::int64_t>(kb.count_rules(r.tool, RuleStatus::VERIFIED));
    s.save_kb(kb);
    std::cout << "added " << index << '\n';
    return kOk;
}

int cmd_kb_stats(Session& s, const Globals& g) {
    const auto& kb = s.kb();
    LearningConfig lc;
    ordered_json out = ordered_json::object();
    for (Tool t : kAllTools) {
        const auto it = kb.stats.find(t);
        const ToolStats st = it == kb.stats.end() ? ToolStats{} : it->second;
        const auto pending = static_cast<std::int64_t>(kb.count_rules(t, RuleStatus::CANDIDATE));
        const auto intervals = st.intervals();
        std::optional<double> elapsed;
        if (const auto last = st.last_update()) elapsed = static_cast<double>(s.now() - *last);
        ordered_json row{{"verified", kb.count_rules(t, RuleStatus::VERIFIED)},
                         {"candidates", pending},
                         {"retired", kb.count_rules(t, RuleStatus::RETIRED)},
                         {"n_current", st.n_current},
                         {"updates", st.update_times.size()},
                         {"count_threshold", count_threshold(st.n_current, lc)},
                         {"time_threshold", intervals.empty() ? ordered_json(nullptr)
                                                              : ordered_json(time_threshold(intervals, lc))},
                         {"trigger", should_trigger_verification(pending, elapsed, st, lc)}};
        out[std::string(to_string(t))] = row;
    }
    out["cases"] = kb.cases.size();
    out["strategies"] = kb.strategies.size();
    if (g.json) {
        std::cout << out.dump(2) << '\n';
        return kOk;
    }
    std::cout << std::left << std::setw(11) << "tool" << std::setw(10) << "verified" << std::setw(12) << "candidates"
              << std::setw(9) << "retired" << std::setw(11) << "threshold" << "trigger\n";
    for (Tool t : kAllTools) {
        const auto& row = out[std::string(to_string(t))];
        std::cout << std::setw(11) << to_string(t) << std::setw(10) << row["verified"].get<std::size_t>()
                  << std::setw(12) << row["candidates"].get<std::int64_t>() << std::setw(9)
                  << row["retired"].get<std::size_t>() << std::setw(11) << row["count_threshold"].get<std::int64_t>()
                  << (row["trigger"].get<bool>() ? "yes" : "no") << '\n';
    }
    std::cout << kb.cases.size() << " cases, " << kb.strategies.size() << " strategies\n";
    return kOk;
}

fs::path batch_path(const Session& s) { return fs::path(s.config().kb_dir) / "pending_batch.json"; }

int cmd_kb_learn(Session& s, const Globals& g, const std::string& records_path, bool auto_accept) {
    const auto records = load_records(records_path);
    const auto kept = filter_records(records);
    auto batch = generate_rules(kept, s.kb(), s.llm(), s.now());
    auto kb = add_candidates(s.kb(), batch);
    if (auto_accept) {
        std::map<std::string, VerificationDecision> decisions;
        for (const auto& r : batch.rules) decisions[r.index] = VerificationDecision{Decision::ACCEPT, std::nullopt};
        kb = apply_verification(kb, batch, decisions, s.embedder(), s.now());
        std::error_code ec;
        fs::remove(batch_path(s), ec);
    } else {
        write_file_atomic(batch_path(s).string(), to_json(batch).dump(2) + "\n");
    }
    s.save_kb(kb);
    if (g.json) {
        std::cout << to_json(batch).dump(2) << '\n';
        return kOk;
    }
    std::cout << records.size() << " records, " << kept.size() << " selected, " << batch.rules.size()
              << " candidate rules" << (auto_accept ? " (accepted)" : "") << '\n';
    for (const auto& r : batch.rules) std::cout << "  " << r.index << " [" << to_string(r.tool) << "] " << r.description << '\n';
    if (!auto_accept && !batch.rules.empty()) std::cout << "pending batch: " << batch_path(s).string() << '\n';
    return kOk;
}

int cmd_kb_verify(Session& s, const std::string& decisions_path, const std::string& batch_flag) {
    const std::string bpath = batch_flag.empty() ? batch_path(s).string() : batch_flag;
    const auto batch = batch_from_json(ordered_json::parse(read_file(bpath)));
    const auto decisions = parse_decisions(json::parse(read_file(decisions_path)));
    s.save_kb(apply_verification(s.kb(), batch, decisions, s.embedder(), s.now()));
    if (batch_flag.empty()) fs::remove(bpath);
    std::size_t accepted = 0;
    for (const auto& [k, d] : decisions) accepted += d.decision == Decision::ACCEPT;
    std::cout << accepted << " accepted, " << decisions.size() - accepted << " rejected\n";
    return kOk;
}

int cmd_kb_dedup(Session& s, const Globals& g) {
    DedupReport report;
    s.save_kb(deduplicate(s.kb(), s.embedder(), {}, &report));
    if (g.json) {
        ordered_json out = ordered_json::array();
        for (const auto& [keep, gone] : report.merged) out.push_back({{"survivor", keep}, {"retired", gone}});
        std::cout << out.dump(2) << '\n';
        return kOk;
    }
    if (report.merged.empty()) std::cout << "no duplicate rules\n";
    for (const auto& [keep, gone] : report.merged) {
        std::cout << keep << " <=";
        for (const auto& x : gone) std::cout << ' ' << x;
        std::cout << '\n';
    }
    return kOk;
}

int cmd_bench(Session& s, const Globals& g, const std::string& pairs_path, const std::string& fixtures_flag,
              std::size_t trials, std::uint64_t seed) {
    const std::string fixtures = fixtures_flag.empty() ? s.config().executor_fixtures : fixtures_flag;
    if (fixtures.empty()) throw Error(ErrorCode::INVALID_ARGUMENT, "bench needs --fixtures");
    SimulatedExecutor executor(load_exec_fixtures(fixtures), seed);
    const auto report = bench(load_bench_pairs(pairs_path), executor, trials);
    if (g.json) {
        std::cout << to_json(report).dump(2) << '\n';
        return kOk;
    }
    std::cout << std::left << std::setw(14) << "query" << std::right << std::setw(12) << "ET_pre(s)" << std::setw(12)
              << "ET_post(s)" << std::setw(12) << "ETS(s)" << std::setw(10) << "ETOG(%)" << '\n';
    std::cout << std::fixed << std::setprecision(3);
    for (const auto& r : report.results) {
        std::cout << std::left << std::setw(14) << r.query_id << std::right << std::setw(12) << r.et_pre
                  << std::setw(12) << r.et_post << std::setw(12) << r.ets << std::setw(10);
        if (r.etog) {
            std::cout << *r.etog;
        } else {
            std::cout << "n/a";
        }
        std::cout << '\n';
    }
    std::cout << "total ETS " << report.total_ets << " s, mean ETOG ";
    if (report.mean_etog) {
        std::cout << *report.mean_etog << " %\n";
    } else {
        std::cout << "n/a\n";
    }
    for (const auto& e : report.excluded) {
        std::cout << "excluded " << e.query_id << " (" << e.side << " failed: " << e.error_log << ")\n";
    }
    return kOk;
}

int cmd_route(const Globals& g, const std::string& file, const std::string& request, const std::string& log_file,
              const std::string& hint) {
    Issue issue;
    issue.sql = read_sql(file);
    if (!request.empty()) issue.request = request;
    if (!log_file.empty()) issue.error_log = read_file(log_file);
    issue.hint = parse_hint(hint);
    const Tool t = route(issue);
    if (g.json) {
        std::cout << ordered_json{{"tool", std::string(to_string(t))}}.dump() << '\n';
    } else {
        std::cout << to_string(t) << '\n';
    }
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"sqlgov: SQL rewriting, verification, modification and syntax correction"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    app.add_option("--config", g.config_path, "key = value config file")->capture_default_str();
    app.add_option("--kb,--store", g.kb_dir, "knowledge base directory");
    app.add_option("--provider", g.provider, "scripted | permissive");
    app.add_option("--playbook", g.playbook, "scripted LLM playbook (JSONL)");
    app.add_option("--log-misses", g.log_misses, "append unanswered prompts to this JSONL file");
    app.add_option("--now", g.now, "clock override, epoch seconds");
    app.add_flag("--json", g.json, "machine-readable output");

    int rc = kOk;
    std::function<int(Session&)> action;

    std::string file, left, right, pairs, out_path, log_file, schema, request, hint;
    bool verify = false, parallel = false, force = false, auto_accept = false;
    int max_rounds = 1;

    auto* frag = app.add_subcommand("fragment", "print the fragment tree as JSON");
    frag->add_option("sql", file, "SQL file or -")->required();
    frag->callback([&] { action = [&](Session&) { return cmd_fragment(file); }; });

    auto* rw = app.add_subcommand("rewrite", "rewrite a query for efficiency");
    rw->add_option("sql", file, "SQL file or -")->required();
    rw->add_flag("--verify", verify, "check the rewrite for equivalence");
    rw->add_flag("--parallel", parallel, "evaluate fragments concurrently");
    rw->add_option("--output", out_path, "also write the rewritten SQL here");
    rw->callback([&] { action = [&](Session& s) { return cmd_rewrite(s, g, file, verify, parallel, out_path); }; });

    auto* ver = app.add_subcommand("verify", "check two queries for equivalence");
    ver->add_option("--left", left, "first SQL file");
    ver->add_option("--right", right, "second SQL file");
    ver->add_option("--pairs", pairs, "JSONL of {\"left\", \"right\"} for batch mode");
    ver->callback([&] { action = [&](Session& s) { return cmd_verify(s, g, left, right, pairs); }; });

    ModifyArgs ma;
    auto* mod = app.add_subcommand("modify", "apply a natural-language change to a query");
    mod->add_option("sql", ma.file, "SQL file or -")->required();
    mod->add_option("--request", ma.request, "what to change")->required();
    mod->add_option("--context", ma.context_file, "surrounding SQL context file");
    mod->add_option("--history", ma.history, "past execution records (JSONL)");
    mod->add_option("--categories", ma.categories, "categories.json");
    mod->add_option("--schema,--catalog", ma.catalog, "catalog JSON");
    mod->add_option("--category", ma.force_category, "skip classification");
    mod->callback([&] { action = [&](Session& s) { return cmd_modify(s, g, ma); }; });

    auto* fix = app.add_subcommand("fix-syntax", "repair a query from its error log");
    fix->add_option("sql", file, "SQL file or -")->required();
    fix->add_option("--log", log_file, "DBMS error log")->required();
    fix->add_option("--schema", schema, "catalog JSON");
    fix->add_option("--max-rounds", max_rounds, "correction rounds")->capture_default_str();
    fix->callback([&] { action = [&](Session& s) { return cmd_fix_syntax(s, g, file, log_file, schema, max_rounds); }; });

    auto* kb = app.add_subcommand("kb", "knowledge base maintenance");
    kb->require_subcommand(1);
    kb->fallthrough();

    auto* kb_init = kb->add_subcommand("init", "write the seed knowledge base and categories.json");
    kb_init->add_flag("--force", force, "overwrite an existing knowledge base");
    kb_init->callback([&] { action = [&](Session& s) { return cmd_kb_init(s, force); }; });

    std::string tool_filter, status_filter;
    auto* kb_list = kb->add_subcommand("list", "list rules");
    kb_list->add_option("--tool", tool_filter, "REWRITER | CORRECTOR | MODIFIER | VERIFIER");
    kb_list->add_option("--status", status_filter, "CANDIDATE | VERIFIED | RETIRED");
    kb_list->callback([&] { action = [&](Session& s) { return cmd_kb_list(s, g, tool_filter, status_filter); }; });

    std::string add_index, add_desc, add_tool = "REWRITER", add_status = "VERIFIED";
    std::vector<std::string> add_matcher;
    auto* kb_add = kb->add_subcommand("add", "add a rule");
    kb_add->add_option("--index", add_index, "unique label")->required();
    kb_add->add_option("--description", add_desc, "guidance text")->required();
    kb_add->add_option("--tool", add_tool)->capture_default_str();
    kb_add->add_option("--matcher", add_matcher, "predicate, repeatable (e.g. in_subquery)");
    kb_add->add_option("--status", add_status)->capture_default_str();
    kb_add->callback([&] {
        action = [&](Session& s) { return cmd_kb_add(s, add_index, add_desc, add_tool, add_matcher, add_status); };
    });

    auto* kb_stats = kb->add_subcommand("stats", "counts, thresholds and verification trigger");
    kb_stats->callback([&] { action = [&](Session& s) { return cmd_kb_stats(s, g); }; });

    std::string records;
    auto* kb_learn = kb->add_subcommand("learn", "generate candidate rules from execution records");
    kb_learn->add_option("--records", records, "execution records (JSONL)")->required();
    kb_learn->add_flag("--auto-accept", auto_accept, "accept every candidate");
    kb_learn->callback([&] { action = [&](Session& s) { return cmd_kb_learn(s, g, records, auto_accept); }; });

    std::string decisions, batch_file;
    auto* kb_verify = kb->add_subcommand("verify", "apply expert decisions to the pending batch");
    kb_verify->add_option("--decisions", decisions, "decisions JSON")->required();
    kb_verify->add_option("--batch", batch_file, "candidate batch (default: the pending one)");
    kb_verify->callback([&] { action = [&](Session& s) { return cmd_kb_verify(s, decisions, batch_file); }; });

    auto* kb_dedup = kb->add_subcommand("dedup", "merge near-duplicate verified rules");
    kb_dedup->callback([&] { action = [&](Session& s) { return cmd_kb_dedup(s, g); }; });

    for (auto* sub : kb->get_subcommands({})) sub->fallthrough();

    std::string bench_pairs, fixtures;
    std::size_t trials = kDefaultTrials;
    std::uint64_t seed = 42;
    auto* bn = app.add_subcommand("bench", "time original and rewritten queries");
    bn->add_option("--pairs", bench_pairs, "JSONL of {\"id\", \"original\", \"rewritten\"}")->required();
    bn->add_option("--fixtures", fixtures, "simulated executor fixtures (JSONL)");
    bn->add_option("--trials", trials, "runs per side, first one discarded")->capture_default_str();
    bn->add_option("--seed", seed, "executor noise seed")->capture_default_str();
    bn->callback([&] { action = [&](Session& s) { return cmd_bench(s, g, bench_pairs, fixtures, trials, seed); }; });

    auto* rt = app.add_subcommand("route", "pick the tool for an issue");
    rt->add_option("sql", file, "SQL file or -")->required();
    rt->add_option("--request", request, "natural-language request");
    rt->add_option("--error-log", log_file, "error log file");
    rt->add_option("--hint", hint, "efficiency | semantic");
    rt->callback([&] { action = [&](Session&) { return cmd_route(g, file, request, log_file, hint); }; });

    for (auto* sub : app.get_subcommands({})) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kOperational;
    }

    try {
        Session session(g);
        rc = action(session);
    } catch (const Error& e) {
        std::cerr << "sqlgov: " << e.what() << '\n';
        return e.code() == ErrorCode::STILL_INVALID ? kNegative : kOperational;
    } catch (const std::exception& e) {
        std::cerr << "sqlgov: " << e.what() << '\n';
        return kOperational;
    }
    std::cout.flush();
    return rc;
}
