#include "sqlgov/self_learning.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "sqlgov/error.hpp"
#include "sqlgov/prompts.hpp"
#include "sqlgov/templatize.hpp"
#include "sqlgov/vector_math.hpp"

namespace sqlgov {

using ojson = nlohmann::ordered_json;

std::string_view to_string(RecordStatus s) {
    switch (s) {
        case RecordStatus::OK: return "OK";
        case RecordStatus::ERROR: return "ERROR";
        case RecordStatus::SLOW: return "SLOW";
    }
    return "?";
}

RecordStatus parse_record_status(std::string_view text) {
    for (auto s : {RecordStatus::OK, RecordStatus::ERROR, RecordStatus::SLOW}) {
        if (text == to_string(s)) return s;
    }
    throw Error(ErrorCode::INVALID_ARGUMENT, "unknown record status '" + std::string(text) + "'");
}

namespace {

ojson record_json(const ExecutionRecord& r) {
    ojson j;
    j["id"] = r.id;
    j["sql"] = r.sql;
    j["user_query"] = r.user_query ? ojson(*r.user_query) : ojson(nullptr);
    j["status"] = to_string(r.status);
    j["error_log"] = r.error_log ? ojson(*r.error_log) : ojson(nullptr);
    j["elapsed"] = r.elapsed;
    j["result_digest"] = r.result_digest ? ojson(*r.result_digest) : ojson(nullptr);
    return j;
}

std::optional<std::string> opt_string(const ojson& j, const char* key) {
    if (!j.contains(key) || j[key].is_null()) return std::nullopt;
    return j[key].get<std::string>();
}

ExecutionRecord record_from_json(const ojson& j, const std::string& fallback_id) {
    ExecutionRecord r;
    r.id = j.contains("id") && j["id"].is_string() ? j["id"].get<std::string>() : fallback_id;
    r.sql = j.at("sql").get<std::string>();
    r.user_query = opt_string(j, "user_query");
    r.error_log = opt_string(j, "error_log");
    r.result_digest = opt_string(j, "result_digest");
    r.elapsed = j.value("elapsed", 0.0);
    if (j.contains("status")) r.status = parse_record_status(j["status"].get<std::string>());
    else r.status = r.error_log ? RecordStatus::ERROR : RecordStatus::OK;
    if (r.status == RecordStatus::ERROR && !r.error_log) {
        throw Error(ErrorCode::INVALID_ARGUMENT, "record " + r.id + " is ERROR without an error_log");
    }
    return r;
}

std::string format_seconds(double s) {
    std::ostringstream out;
    out << s << " s";
    return out.str();
}

}  // namespace

std::vector<ExecutionRecord> load_records(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IO_FAILURE, "cannot read " + path);
    std::vector<ExecutionRecord> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            out.push_back(record_from_json(ojson::parse(line), "R" + std::to_string(line_no)));
        } catch (const ojson::exception& e) {
            throw Error(ErrorCode::IO_FAILURE, path + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

ojson to_json(const CandidateRuleBatch& batch) {
    ojson j;
    j["generated_at"] = batch.generated_at;
    ojson rules = ojson::array();
    for (const auto& r : batch.rules) rules.push_back(to_json(r));
    j["rules"] = rules;
    j["source_records"] = batch.source_records;
    ojson records = ojson::array();
    for (const auto& r : batch.records) records.push_back(record_json(r));
    j["records"] = records;
    return j;
}

CandidateRuleBatch batch_from_json(const ojson& j) {
    CandidateRuleBatch b;
    b.generated_at = j.value("generated_at", std::int64_t{0});
    for (const auto& r : j.at("rules")) b.rules.push_back(rule_from_json(r));
    b.source_records = j.value("source_records", std::map<std::string, std::vector<std::string>>{});
    for (const auto& r : j.value("records", ojson::array())) b.records.push_back(record_from_json(r, ""));
    return b;
}

double quantile(std::vector<double> values, double q) {
    if (values.empty()) return 0.0;
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

std::vector<ExecutionRecord> filter_records(const std::vector<ExecutionRecord>& records, const LearningConfig& cfg) {
    std::optional<double> slow_cut;
    if (records.size() >= cfg.min_records_for_quantile) {
        std::vector<double> elapsed;
        for (const auto& r : records) elapsed.push_back(r.elapsed);
        slow_cut = quantile(elapsed, cfg.slow_quantile);
    }
    std::set<std::string> seen;
    std::vector<ExecutionRecord> out;
    for (const auto& r : records) {
        const bool keep = r.status != RecordStatus::OK || (slow_cut && r.elapsed > *slow_cut);
        if (!keep) continue;
        if (!seen.insert(templatize(r.sql)).second) continue;
        out.push_back(r);
    }
    return out;
}

CandidateRuleBatch generate_rules(const std::vector<ExecutionRecord>& records, const KnowledgeSnapshot& kb,
                                  LlmProvider& llm, std::int64_t now, const LearningConfig& cfg) {
    if (records.empty()) throw Error(ErrorCode::INVALID_ARGUMENT, "no execution records to learn from");
    std::vector<prompts::LabeledText> demos;
    for (const auto& r : kb.rules) {
        if (demos.size() >= cfg.max_demonstrations) break;
        if (r.status == RuleStatus::VERIFIED) demos.push_back({r.index, r.description});
    }

    CandidateRuleBatch batch;
    batch.generated_at = now;
    for (const auto& rec : records) {
        std::string question = rec.sql;
        if (rec.user_query) question = "User request: " + *rec.user_query + "\nSQL:\n" + rec.sql;
        std::string outputs = "status: " + std::string(to_string(rec.status)) + "\nelapsed: " +
                              format_seconds(rec.elapsed);
        if (rec.result_digest) outputs += "\nresult digest: " + *rec.result_digest;
        if (rec.error_log) outputs += "\nerror log:\n" + *rec.error_log;

        auto parsed = prompts::parse_json_object(llm.complete(prompts::rule_generation(demos, question, outputs)));
        if (!parsed) parsed = prompts::parse_json_object(llm.complete(prompts::rule_generation(demos, question, outputs, true)));
        if (!parsed) throw Error(ErrorCode::REJECTED_RESPONSE, "rule generation for record " + rec.id + " was not JSON");

        const Tool tool = rec.status == RecordStatus::ERROR ? Tool::CORRECTOR : Tool::REWRITER;
        for (const auto& [key, value] : parsed->items()) {
            const std::string index = prompts::trim(key);
            if (index.empty()) continue;
            if (const RuleEntry* existing = kb.find_rule(tool, index);
                existing && existing->status != RuleStatus::RETIRED) {
                continue;
            }
            auto& sources = batch.source_records[index];
            if (std::find(sources.begin(), sources.end(), rec.id) == sources.end()) sources.push_back(rec.id);
            const bool known = std::any_of(batch.rules.begin(), batch.rules.end(),
                                           [&](const RuleEntry& r) { return r.index == index; });
            if (known) continue;
            RuleEntry rule;
            rule.index = index;
            if (value.is_string()) rule.description = value.get<std::string>();
            else if (value.is_object() && value.contains("description") && value["description"].is_string())
                rule.description = value["description"].get<std::string>();
            else rule.description = value.dump();
            rule.tool = tool;
            rule.status = RuleStatus::CANDIDATE;
            rule.created_at = now;
            batch.rules.push_back(std::move(rule));
        }
        if (std::none_of(batch.records.begin(), batch.records.end(),
                         [&](const ExecutionRecord& r) { return r.id == rec.id; })) {
            batch.records.push_back(rec);
        }
    }
    return batch;
}

std::int64_t count_threshold(std::int64_t n_current, const LearningConfig& cfg) {
    if (n_current < 0) throw Error(ErrorCode::INVALID_ARGUMENT, "negative rule count");
    return static_cast<std::int64_t>(std::floor(cfg.lambda * std::sqrt(static_cast<double>(n_current))));
}

double time_threshold(const std::vector<double>& intervals, const LearningConfig& cfg) {
    if (intervals.empty()) throw Error(ErrorCode::NO_HISTORY, "no historical update intervals");
    double sum = 0.0;
    for (double d : intervals) sum += d;
    return cfg.beta_time * (sum / static_cast<double>(intervals.size()));
}

bool should_trigger_verification(std::int64_t pending, std::optional<double> elapsed_since_update,
                                 const ToolStats& stats, const LearningConfig& cfg) {
    if (pending > count_threshold(stats.n_current, cfg)) return true;
    const auto intervals = stats.intervals();
    if (!elapsed_since_update || intervals.empty()) return false;
    return *elapsed_since_update > time_threshold(intervals, cfg);
}

std::vector<std::vector<std::size_t>> dbscan(const std::vector<Vector>& points, double eps, std::size_t min_pts) {
    const std::size_t n = points.size();
    std::vector<std::vector<std::size_t>> neighbours(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (1.0 - cosine_similarity(points[i], points[j]) <= eps) neighbours[i].push_back(j);
        }
    }
    constexpr int kUnassigned = -1;
    std::vector<int> label(n, kUnassigned);
    int next = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (label[i] != kUnassigned || neighbours[i].size() < min_pts) continue;
        const int c = next++;
        std::vector<std::size_t> frontier{i};
        label[i] = c;
        while (!frontier.empty()) {
            const std::size_t p = frontier.back();
            frontier.pop_back();
            if (neighbours[p].size() < min_pts) continue;  // border point: reached but not expanded
            for (std::size_t q : neighbours[p]) {
                if (label[q] != kUnassigned) continue;
                label[q] = c;
                frontier.push_back(q);
            }
        }
    }
    std::vector<std::vector<std::size_t>> clusters(static_cast<std::size_t>(next));
    for (std::size_t i = 0; i < n; ++i) {
        if (label[i] == kUnassigned) clusters.push_back({i});
        else clusters[static_cast<std::size_t>(label[i])].push_back(i);
    }
    std::sort(clusters.begin(), clusters.end());
    return clusters;
}

std::vector<Vector> embed_descriptions(const std::vector<RuleEntry>& rules, EmbeddingProvider& embedder) {
    std::vector<Vector> out;
    out.reserve(rules.size());
    for (const auto& r : rules) out.push_back(embedder.embed(r.description));
    return out;
}

std::vector<std::vector<std::size_t>> cluster_rules(const std::vector<RuleEntry>& rules, EmbeddingProvider& embedder,
                                                    const LearningConfig& cfg) {
    if (rules.empty()) throw Error(ErrorCode::INVALID_ARGUMENT, "no rules to cluster");
    return dbscan(embed_descriptions(rules, embedder), cfg.dbscan_eps, cfg.dbscan_min_pts);
}

std::size_t medoid(const std::vector<Vector>& embeddings, const std::vector<std::int64_t>& created_at) {
    if (embeddings.empty()) throw Error(ErrorCode::INVALID_ARGUMENT, "empty cluster");
    if (created_at.size() != embeddings.size()) throw Error(ErrorCode::INVALID_ARGUMENT, "created_at size mismatch");
    std::size_t best = 0;
    double best_sum = 0.0;
    for (std::size_t i = 0; i < embeddings.size(); ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < embeddings.size(); ++j) sum += euclidean_distance(embeddings[i], embeddings[j]);
        if (i == 0 || sum < best_sum || (sum == best_sum && created_at[i] < created_at[best])) {
            best = i;
            best_sum = sum;
        }
    }
    return best;
}

RuleEntry merge_cluster(const std::vector<RuleEntry>& cluster, const std::vector<Vector>& embeddings) {
    std::vector<std::int64_t> created;
    for (const auto& r : cluster) created.push_back(r.created_at);
    return cluster.at(medoid(embeddings, created));
}

namespace {

void refresh_counts(KnowledgeSnapshot& kb) {
    for (auto& [tool, stats] : kb.stats) {
        stats.n_current = static_cast<std::int64_t>(kb.count_rules(tool, RuleStatus::VERIFIED));
    }
}

}  // namespace

KnowledgeSnapshot deduplicate(const KnowledgeSnapshot& kb, EmbeddingProvider& embedder, const LearningConfig& cfg,
                              DedupReport* report) {
    KnowledgeSnapshot out = kb;
    for (Tool tool : kAllTools) {
        std::vector<std::size_t> pos;
        std::vector<RuleEntry> rules;
        for (std::size_t i = 0; i < out.rules.size(); ++i) {
            if (out.rules[i].tool == tool && out.rules[i].status == RuleStatus::VERIFIED) {
                pos.push_back(i);
                rules.push_back(out.rules[i]);
            }
        }
        if (rules.size() < 2) continue;
        const auto embeddings = embed_descriptions(rules, embedder);
        for (const auto& cluster : dbscan(embeddings, cfg.dbscan_eps, cfg.dbscan_min_pts)) {
            if (cluster.size() < 2) continue;
            std::vector<Vector> emb;
            std::vector<std::int64_t> created;
            for (std::size_t m : cluster) {
                emb.push_back(embeddings[m]);
                created.push_back(rules[m].created_at);
            }
            const std::size_t keep = cluster[medoid(emb, created)];
            const std::string survivor = rules[keep].index;
            std::vector<std::string> absorbed;
            for (std::size_t m : cluster) {
                if (m == keep) continue;
                out.rules[pos[m]].status = RuleStatus::RETIRED;
                absorbed.push_back(rules[m].index);
            }
            for (auto& c : out.cases) {
                if (c.tool != tool) continue;
                std::vector<std::string> tags;
                for (const auto& t : c.tags) {
                    const bool moved = std::find(absorbed.begin(), absorbed.end(), t) != absorbed.end();
                    const std::string& tag = moved ? survivor : t;
                    if (std::find(tags.begin(), tags.end(), tag) == tags.end()) tags.push_back(tag);
                }
                c.tags = std::move(tags);
            }
            if (report) report->merged.emplace_back(survivor, absorbed);
        }
    }
    refresh_counts(out);
    return out;
}

KnowledgeSnapshot add_candidates(const KnowledgeSnapshot& kb, const CandidateRuleBatch& batch) {
    KnowledgeSnapshot out = kb;
    for (const auto& r : batch.rules) {
        if (!out.find_rule(r.tool, r.index)) out.rules.push_back(r);
    }
    return out;
}

std::map<std::string, VerificationDecision> parse_decisions(const nlohmann::json& j) {
    if (!j.is_object()) throw Error(ErrorCode::INVALID_ARGUMENT, "decisions must be a JSON object");
    auto parse_decision = [](const std::string& text) {
        if (text == "ACCEPT") return Decision::ACCEPT;
        if (text == "REJECT") return Decision::REJECT;
        throw Error(ErrorCode::INVALID_ARGUMENT, "decision must be ACCEPT or REJECT, got '" + text + "'");
    };
    std::map<std::string, VerificationDecision> out;
    for (const auto& [key, value] : j.items()) {
        VerificationDecision d;
        if (value.is_string()) {
            d.decision = parse_decision(value.get<std::string>());
        } else if (value.is_object()) {
            d.decision = parse_decision(value.at("decision").get<std::string>());
            if (value.contains("matcher") && value["matcher"].is_array()) {
                Matcher m;
                for (const auto& p : value["matcher"]) m.all.push_back(Predicate::parse(p.get<std::string>()));
                d.matcher = std::move(m);
            }
        } else {
            throw Error(ErrorCode::INVALID_ARGUMENT, "bad decision for " + key);
        }
        out[key] = std::move(d);
    }
    return out;
}

KnowledgeSnapshot apply_verification(const KnowledgeSnapshot& kb, const CandidateRuleBatch& batch,
                                     const std::map<std::string, VerificationDecision>& decisions,
                                     EmbeddingProvider& embedder, std::int64_t now) {
    for (const auto& [key, d] : decisions) {
        const bool known = std::any_of(batch.rules.begin(), batch.rules.end(),
                                       [&](const RuleEntry& r) { return r.index == key; });
        if (!known) throw Error(ErrorCode::UNKNOWN_RULE, "no candidate rule '" + key + "' in the batch");
    }
    KnowledgeSnapshot out = add_candidates(kb, batch);
    std::set<Tool> touched;
    for (const auto& candidate : batch.rules) {
        const auto it = decisions.find(candidate.index);
        if (it == decisions.end()) continue;
        auto rule = std::find_if(out.rules.begin(), out.rules.end(), [&](const RuleEntry& r) {
            return r.tool == candidate.tool && r.index == candidate.index;
        });
        if (rule->status != RuleStatus::CANDIDATE) continue;
        touched.insert(rule->tool);
        if (it->second.decision == Decision::REJECT) {
            rule->status = RuleStatus::RETIRED;
            continue;
        }
        rule->status = RuleStatus::VERIFIED;
        rule->verified_at = now;
        if (it->second.matcher) rule->matcher = it->second.matcher;
        const auto src = batch.source_records.find(candidate.index);
        if (src == batch.source_records.end()) continue;
        for (const auto& record_id : src->second) {
            const auto rec = std::find_if(batch.records.begin(), batch.records.end(),
                                          [&](const ExecutionRecord& r) { return r.id == record_id; });
            if (rec == batch.records.end()) continue;
            const std::string case_index = candidate.index + "-" + rec->id;
            if (std::any_of(out.cases.begin(), out.cases.end(),
                            [&](const HistoricalCase& c) { return c.index == case_index; })) {
                continue;
            }
            std::string details = "Original: " + rec->sql + "\nOutcome: " + std::string(to_string(rec->status)) +
                                  ", " + format_seconds(rec->elapsed);
            if (rec->error_log) details += "\nError: " + *rec->error_log;
            details += "\nRule: " + candidate.description;
            out.cases.push_back(make_case(case_index, details, {candidate.index}, rec->sql, rule->tool, embedder));
        }
    }
    for (Tool t : touched) out.stats[t].update_times.push_back(now);
    refresh_counts(out);
    return out;
}

}  // namespace sqlgov
