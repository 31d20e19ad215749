#include "sqlgov/harness.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <regex>
#include <sstream>

#include "sqlgov/error.hpp"
#include "sqlgov/prompts.hpp"

namespace sqlgov {

using nlohmann::json;
using nlohmann::ordered_json;

double steady_time(const std::vector<double>& timings) {
    if (timings.empty()) throw Error(ErrorCode::INVALID_ARGUMENT, "no timings");
    if (timings.size() == 1) return timings.front();
    std::vector<double> rest(timings.begin() + 1, timings.end());
    std::sort(rest.begin(), rest.end());
    const std::size_t n = rest.size();
    return n % 2 == 1 ? rest[n / 2] : (rest[n / 2 - 1] + rest[n / 2]) / 2.0;
}

BenchResult make_result(std::string query_id, std::vector<double> pre, std::vector<double> post) {
    BenchResult r;
    r.query_id = std::move(query_id);
    r.et_pre = steady_time(pre);
    r.et_post = steady_time(post);
    r.ets = r.et_pre - r.et_post;
    if (r.et_pre > 0.0) r.etog = r.ets / r.et_pre * 100.0;
    r.trials_pre = std::move(pre);
    r.trials_post = std::move(post);
    return r;
}

BenchReport bench(const std::vector<BenchPair>& pairs, Executor& executor, std::size_t trials) {
    if (trials == 0) throw Error(ErrorCode::INVALID_ARGUMENT, "trials must be at least 1");
    BenchReport report;
    for (const auto& pair : pairs) {
        std::vector<double> pre, post;
        std::optional<BenchExclusion> failed;
        auto run = [&](const std::string& sql, const char* side, std::vector<double>& out) {
            for (std::size_t i = 0; i < trials && !failed; ++i) {
                const auto outcome = executor.execute(sql);
                if (!outcome.ok()) {
                    failed = BenchExclusion{pair.query_id, side, outcome.error_log.value_or("execution failed")};
                    return;
                }
                out.push_back(outcome.elapsed);
            }
        };
        run(pair.original, "original", pre);
        if (!failed) run(pair.rewritten, "rewritten", post);
        if (failed) {
            report.excluded.push_back(std::move(*failed));
            continue;
        }
        report.results.push_back(make_result(pair.query_id, std::move(pre), std::move(post)));
    }

    double etog_sum = 0.0;
    std::size_t etog_n = 0;
    for (const auto& r : report.results) {
        report.total_ets += r.ets;
        if (r.etog) {
            etog_sum += *r.etog;
            ++etog_n;
        }
    }
    if (etog_n > 0) report.mean_etog = etog_sum / static_cast<double>(etog_n);
    return report;
}

namespace {

std::string read_text(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw Error(ErrorCode::IO_FAILURE, "cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

std::vector<BenchPair> load_bench_pairs(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IO_FAILURE, "cannot read bench pairs " + path);
    const auto base = std::filesystem::path(path).parent_path();
    std::vector<BenchPair> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const json j = json::parse(line);
            BenchPair p;
            p.query_id = j.value("id", "Q" + std::to_string(line_no));
            auto side = [&](const char* inline_key, const char* file_key) {
                if (j.contains(inline_key)) return j[inline_key].get<std::string>();
                return read_text(base / j.at(file_key).get<std::string>());
            };
            p.original = side("original", "original_file");
            p.rewritten = side("rewritten", "rewritten_file");
            out.push_back(std::move(p));
        } catch (const json::exception& e) {
            throw Error(ErrorCode::IO_FAILURE, path + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

ordered_json to_json(const BenchReport& report) {
    ordered_json rows = ordered_json::array();
    for (const auto& r : report.results) {
        rows.push_back({{"query_id", r.query_id},
                        {"et_pre", r.et_pre},
                        {"et_post", r.et_post},
                        {"ets", r.ets},
                        {"etog", r.etog ? ordered_json(*r.etog) : ordered_json(nullptr)},
                        {"trials_pre", r.trials_pre},
                        {"trials_post", r.trials_post}});
    }
    ordered_json excluded = ordered_json::array();
    for (const auto& e : report.excluded) {
        excluded.push_back({{"query_id", e.query_id}, {"side", e.side}, {"error_log", e.error_log}});
    }
    return {{"results", rows},
            {"excluded", excluded},
            {"mean_etog", report.mean_etog ? ordered_json(*report.mean_etog) : ordered_json(nullptr)},
            {"total_ets", report.total_ets}};
}

// ---- routing ------------------------------------------------------------------

IntentHint parse_hint(std::string_view text) {
    std::string t(text);
    std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
    if (t.empty() || t == "none") return IntentHint::NONE;
    if (t == "efficiency" || t == "performance") return IntentHint::EFFICIENCY;
    if (t == "semantic" || t == "semantics") return IntentHint::SEMANTIC;
    throw Error(ErrorCode::INVALID_ARGUMENT, "unknown intent hint '" + std::string(text) + "'");
}

bool mentions_performance(std::string_view request) {
    static const std::regex re(
        R"(\b(slow(er|ly)?|fast(er)?|speed( up)?|perf(ormance)?|optimi[sz](e|ed|ation)|efficien(t|cy)|latency|)"
        R"(times? ?outs?|timeouts?|runtime|execution time|expensive|cost(ly)?)\b)",
        std::regex::ECMAScript | std::regex::icase);
    const std::string s(request);
    return std::regex_search(s, re);
}

Tool route(const Issue& issue) {
    if (issue.error_log && issue.error_log->find_first_not_of(" \t\r\n") != std::string::npos) {
        return Tool::CORRECTOR;
    }
    switch (issue.hint) {
        case IntentHint::EFFICIENCY:
            return Tool::REWRITER;
        case IntentHint::SEMANTIC:
            return Tool::MODIFIER;
        case IntentHint::NONE:
            break;
    }
    if (issue.request && mentions_performance(*issue.request)) return Tool::REWRITER;
    return Tool::MODIFIER;
}

// ---- configuration ------------------------------------------------------------

Config parse_config(std::string_view text) {
    Config cfg;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        bool quoted = false;
        for (std::size_t i = 0; i < line.size(); ++i) {
            if (line[i] == '"') quoted = !quoted;
            if (line[i] == '#' && !quoted) {
                line.resize(i);
                break;
            }
        }
        const std::string t = prompts::trim(line);
        if (t.empty() || (t.front() == '[' && t.back() == ']')) continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            throw Error(ErrorCode::INVALID_ARGUMENT, "config line " + std::to_string(line_no) + ": expected key = value");
        }
        const std::string key = prompts::trim(t.substr(0, eq));
        std::string value = prompts::trim(t.substr(eq + 1));
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
        if (key.empty()) {
            throw Error(ErrorCode::INVALID_ARGUMENT, "config line " + std::to_string(line_no) + ": empty key");
        }
        if (key == "kb_dir") {
            cfg.kb_dir = value;
        } else if (key == "provider") {
            cfg.provider = value;
        } else if (key == "playbook") {
            cfg.playbook = value;
        } else if (key == "embedding_dimension") {
            try {
                cfg.embedding_dimension = std::stoul(value);
            } catch (const std::exception&) {
                throw Error(ErrorCode::INVALID_ARGUMENT, "embedding_dimension must be a positive integer");
            }
            if (cfg.embedding_dimension == 0) {
                throw Error(ErrorCode::INVALID_ARGUMENT, "embedding_dimension must be a positive integer");
            }
        } else if (key == "executor_fixtures") {
            cfg.executor_fixtures = value;
        } else if (key == "catalog") {
            cfg.catalog = value;
        } else if (key == "categories") {
            cfg.categories = value;
        } else {
            cfg.extra[key] = value;
        }
    }
    return cfg;
}

void apply_env(Config& config) {
    if (const char* v = std::getenv("SQLGOV_KB_DIR"); v && *v) config.kb_dir = v;
    if (const char* v = std::getenv("SQLGOV_PROVIDER"); v && *v) config.provider = v;
    if (const char* v = std::getenv("SQLGOV_PLAYBOOK"); v && *v) config.playbook = v;
}

Config load_config(const std::optional<std::string>& path) {
    Config cfg;
    if (path && std::filesystem::exists(*path)) cfg = parse_config(read_text(*path));
    apply_env(cfg);
    return cfg;
}

// ---- tool report ----------------------------------------------------------------

std::vector<std::string> unresolved_provenance(const ToolReport& report, const KnowledgeSnapshot& kb) {
    std::vector<std::string> out;
    for (const auto& r : report.rules_used) {
        const bool found = std::any_of(kb.rules.begin(), kb.rules.end(), [&](const RuleEntry& e) { return e.index == r; }) ||
                           std::any_of(kb.strategies.begin(), kb.strategies.end(),
                                       [&](const ErrorStrategy& s) { return s.index == r; });
        if (!found) out.push_back(r);
    }
    for (const auto& c : report.cases_used) {
        if (std::none_of(kb.cases.begin(), kb.cases.end(), [&](const HistoricalCase& e) { return e.index == c; })) {
            out.push_back(c);
        }
    }
    return out;
}

ordered_json to_json(const ToolReport& report) {
    ordered_json timings = ordered_json::object();
    for (const auto& [stage, seconds] : report.timings) timings[stage] = seconds;
    return {{"tool", std::string(to_string(report.tool))},
            {"input_digest", report.input_digest},
            {"output", report.output},
            {"rules_used", report.rules_used},
            {"cases_used", report.cases_used},
            {"timings", timings}};
}

}  // namespace sqlgov
