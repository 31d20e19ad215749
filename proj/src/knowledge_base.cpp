#include "sqlgov/knowledge_base.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "json.hpp"

#include "sqlgov/error.hpp"
#include "sqlgov/fragmenter.hpp"
#include "sqlgov/templatize.hpp"

namespace sqlgov {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

std::string_view to_string(Tool tool) {
    switch (tool) {
        case Tool::REWRITER: return "REWRITER";
        case Tool::CORRECTOR: return "CORRECTOR";
        case Tool::MODIFIER: return "MODIFIER";
        case Tool::VERIFIER: return "VERIFIER";
    }
    return "?";
}

std::string_view to_string(RuleStatus status) {
    switch (status) {
        case RuleStatus::CANDIDATE: return "CANDIDATE";
        case RuleStatus::VERIFIED: return "VERIFIED";
        case RuleStatus::RETIRED: return "RETIRED";
    }
    return "?";
}

Tool parse_tool(std::string_view text) {
    for (Tool t : kAllTools) {
        if (to_string(t) == text) return t;
    }
    throw Error(ErrorCode::INVALID_ARGUMENT, "unknown tool '" + std::string(text) + "'");
}

RuleStatus parse_rule_status(std::string_view text) {
    for (RuleStatus s : {RuleStatus::CANDIDATE, RuleStatus::VERIFIED, RuleStatus::RETIRED}) {
        if (to_string(s) == text) return s;
    }
    throw Error(ErrorCode::INVALID_ARGUMENT, "unknown rule status '" + std::string(text) + "'");
}

std::optional<std::int64_t> ToolStats::last_update() const {
    if (update_times.empty()) return std::nullopt;
    return *std::max_element(update_times.begin(), update_times.end());
}

std::vector<double> ToolStats::intervals() const {
    std::vector<std::int64_t> times = update_times;
    std::sort(times.begin(), times.end());
    std::vector<double> out;
    for (std::size_t i = 1; i < times.size(); ++i) out.push_back(static_cast<double>(times[i] - times[i - 1]));
    return out;
}

const RuleEntry* KnowledgeSnapshot::find_rule(Tool tool, std::string_view index) const {
    const RuleEntry* found = nullptr;
    for (const auto& r : rules) {
        if (r.tool != tool || r.index != index) continue;
        if (r.status != RuleStatus::RETIRED) return &r;
        found = &r;
    }
    return found;
}

std::size_t KnowledgeSnapshot::count_rules(Tool tool, RuleStatus status) const {
    return static_cast<std::size_t>(
        std::count_if(rules.begin(), rules.end(), [&](const auto& r) { return r.tool == tool && r.status == status; }));
}

std::vector<RuleEntry> match_rules(const Fragment& fragment, Tool tool, const KnowledgeSnapshot& kb) {
    std::vector<RuleEntry> out;
    std::optional<FragmentFacts> facts;
    for (const auto& r : kb.rules) {
        if (r.tool != tool || r.status != RuleStatus::VERIFIED || !r.matcher || r.matcher->all.empty()) continue;
        if (!facts) facts = analyze_fragment(fragment.text);
        const auto& preds = r.matcher->all;
        if (std::all_of(preds.begin(), preds.end(), [&](const Predicate& p) { return evaluate(p, *facts); })) {
            out.push_back(r);
        }
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.index < b.index; });
    return out;
}

HistoricalCase make_case(std::string index, std::string details, std::vector<std::string> tags,
                         std::string_view sql, Tool tool, EmbeddingProvider& embedder) {
    HistoricalCase c;
    c.index = std::move(index);
    c.details = std::move(details);
    c.tags = std::move(tags);
    c.sql_template = templatize(sql);
    c.embedding = embedder.embed(c.sql_template);
    c.tool = tool;
    return c;
}

std::vector<ScoredCase> retrieve_cases(std::string_view query, const KnowledgeSnapshot& kb,
                                       EmbeddingProvider& embedder, const CaseQuery& options) {
    if (kb.cases.empty() || options.k == 0) return {};
    const Vector q = embedder.embed(templatize(query));
    std::vector<ScoredCase> scored;
    for (const auto& c : kb.cases) {
        if (options.tool && c.tool != *options.tool) continue;
        if (options.tag_filter) {
            const auto& filter = *options.tag_filter;
            const bool shared = std::any_of(c.tags.begin(), c.tags.end(), [&](const std::string& t) {
                return std::find(filter.begin(), filter.end(), t) != filter.end();
            });
            if (!shared) continue;
        }
        const Vector e = c.embedding.empty() ? embedder.embed(c.sql_template) : c.embedding;
        scored.push_back({&c, cosine_similarity(q, e)});
    }
    std::sort(scored.begin(), scored.end(), [](const ScoredCase& a, const ScoredCase& b) {
        if (std::abs(a.similarity - b.similarity) > kSimilarityTieTolerance) return a.similarity > b.similarity;
        return a.item->index < b.item->index;
    });
    if (scored.size() > options.k) scored.resize(options.k);
    return scored;
}

std::optional<ScoredStrategy> retrieve_strategy(std::string_view error_key, const KnowledgeSnapshot& kb,
                                                EmbeddingProvider& embedder, double threshold) {
    if (error_key.find_first_not_of(" \t\r\n") == std::string_view::npos) {
        throw Error(ErrorCode::EMPTY_TEXT, "error key is blank");
    }
    if (kb.strategies.empty()) return std::nullopt;
    const Vector q = embedder.embed(error_key);
    std::optional<ScoredStrategy> best;
    for (const auto& s : kb.strategies) {
        const Vector e = s.embedding.empty() ? embedder.embed(s.message_pattern) : s.embedding;
        const double sim = cosine_similarity(q, e);
        const bool tie = best && std::abs(sim - best->similarity) <= kSimilarityTieTolerance;
        if (!best || (!tie && sim > best->similarity) || (tie && s.index < best->item->index)) {
            best = ScoredStrategy{&s, sim};
        }
    }
    if (best && best->similarity >= threshold) return best;
    return std::nullopt;
}

// ---- persistence ------------------------------------------------------------

ojson to_json(const RuleEntry& r) {
    ojson j;
    j["index"] = r.index;
    j["description"] = r.description;
    if (r.matcher) {
        ojson preds = ojson::array();
        for (const auto& p : r.matcher->all) preds.push_back(p.to_string());
        j["matcher"] = preds;
    } else {
        j["matcher"] = nullptr;
    }
    j["tool"] = to_string(r.tool);
    j["status"] = to_string(r.status);
    j["created_at"] = r.created_at;
    j["verified_at"] = r.verified_at ? ojson(*r.verified_at) : ojson(nullptr);
    return j;
}

RuleEntry rule_from_json(const ojson& j) {
    RuleEntry r;
    r.index = j.at("index").get<std::string>();
    r.description = j.at("description").get<std::string>();
    if (j.contains("matcher") && !j["matcher"].is_null()) {
        Matcher m;
        for (const auto& p : j["matcher"]) m.all.push_back(Predicate::parse(p.get<std::string>()));
        r.matcher = std::move(m);
    }
    r.tool = parse_tool(j.at("tool").get<std::string>());
    r.status = parse_rule_status(j.at("status").get<std::string>());
    r.created_at = j.value("created_at", std::int64_t{0});
    if (j.contains("verified_at") && !j["verified_at"].is_null()) r.verified_at = j["verified_at"].get<std::int64_t>();
    return r;
}

namespace {

ojson to_json(const HistoricalCase& c) {
    ojson j;
    j["index"] = c.index;
    j["details"] = c.details;
    j["tag"] = c.tags;
    j["template"] = c.sql_template;
    j["tool"] = to_string(c.tool);
    j["embedding"] = c.embedding;
    return j;
}

HistoricalCase case_from_json(const ojson& j) {
    HistoricalCase c;
    c.index = j.at("index").get<std::string>();
    c.details = j.at("details").get<std::string>();
    c.tags = j.value("tag", std::vector<std::string>{});
    c.sql_template = j.value("template", std::string{});
    c.tool = parse_tool(j.value("tool", std::string("REWRITER")));
    c.embedding = j.value("embedding", Vector{});
    return c;
}

ojson to_json(const ErrorStrategy& s) {
    ojson j;
    j["index"] = s.index;
    j["message_pattern"] = s.message_pattern;
    j["needs_schema"] = s.needs_schema;
    j["localized"] = s.localized;
    j["guidance"] = s.guidance;
    j["embedding"] = s.embedding;
    return j;
}

ErrorStrategy strategy_from_json(const ojson& j) {
    ErrorStrategy s;
    s.index = j.at("index").get<std::string>();
    s.message_pattern = j.at("message_pattern").get<std::string>();
    s.needs_schema = j.value("needs_schema", false);
    s.localized = j.value("localized", false);
    s.guidance = j.at("guidance").get<std::string>();
    s.embedding = j.value("embedding", Vector{});
    if (s.guidance.empty()) throw Error(ErrorCode::INVALID_ARGUMENT, "strategy " + s.index + " has no guidance");
    return s;
}

void write_file(const fs::path& path, const std::string& content) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::IO_FAILURE, "cannot write " + tmp.string());
        out << content;
        if (!out) throw Error(ErrorCode::IO_FAILURE, "write failed for " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) throw Error(ErrorCode::IO_FAILURE, "cannot replace " + path.string() + ": " + ec.message());
}

template <typename T>
std::string jsonl(const std::vector<T>& items) {
    std::string out;
    for (const auto& item : items) {
        out += to_json(item).dump();
        out += '\n';
    }
    return out;
}

template <typename F>
void read_jsonl(const fs::path& path, F&& on_record) {
    if (!fs::exists(path)) return;
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IO_FAILURE, "cannot read " + path.string());
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            on_record(ojson::parse(line));
        } catch (const ojson::exception& e) {
            throw Error(ErrorCode::IO_FAILURE, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
}

}  // namespace

void write_file_atomic(const std::string& path, const std::string& content) { write_file(path, content); }

void save(const KnowledgeSnapshot& snapshot, const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::IO_FAILURE, "cannot create " + dir + ": " + ec.message());
    const fs::path root(dir);
    write_file(root / "rules.jsonl", jsonl(snapshot.rules));
    write_file(root / "cases.jsonl", jsonl(snapshot.cases));
    write_file(root / "strategies.jsonl", jsonl(snapshot.strategies));

    ojson meta;
    meta["schema_version"] = kSchemaVersion;
    ojson stats = ojson::object();
    for (const auto& [tool, s] : snapshot.stats) {
        stats[std::string(to_string(tool))] = ojson{{"n_current", s.n_current}, {"update_times", s.update_times}};
    }
    meta["stats"] = stats;
    write_file(root / "meta.json", meta.dump(2) + "\n");
}

KnowledgeSnapshot load(const std::string& dir) {
    const fs::path root(dir);
    const fs::path meta_path = root / "meta.json";
    std::ifstream meta_in(meta_path);
    if (!meta_in) throw Error(ErrorCode::IO_FAILURE, "no knowledge store at " + dir + " (missing meta.json)");
    ojson meta;
    try {
        meta = ojson::parse(meta_in);
    } catch (const ojson::exception& e) {
        throw Error(ErrorCode::IO_FAILURE, meta_path.string() + ": " + e.what());
    }
    const int version = meta.value("schema_version", -1);
    if (version != kSchemaVersion) {
        throw Error(ErrorCode::SCHEMA_VERSION_MISMATCH, "store " + dir + " has schema_version " +
                                                            std::to_string(version) + ", expected " +
                                                            std::to_string(kSchemaVersion));
    }

    KnowledgeSnapshot snap;
    if (meta.contains("stats")) {
        for (const auto& [name, s] : meta["stats"].items()) {
            ToolStats ts;
            ts.n_current = s.value("n_current", std::int64_t{0});
            ts.update_times = s.value("update_times", std::vector<std::int64_t>{});
            snap.stats[parse_tool(name)] = std::move(ts);
        }
    }
    read_jsonl(root / "rules.jsonl", [&](const ojson& j) { snap.rules.push_back(rule_from_json(j)); });
    read_jsonl(root / "cases.jsonl", [&](const ojson& j) { snap.cases.push_back(case_from_json(j)); });
    read_jsonl(root / "strategies.jsonl", [&](const ojson& j) { snap.strategies.push_back(strategy_from_json(j)); });
    return snap;
}

// ---- seed content -----------------------------------------------------------

namespace {

RuleEntry seed_rule(std::string index, std::string description, std::vector<std::string> preds, std::int64_t now) {
    RuleEntry r;
    r.index = std::move(index);
    r.description = std::move(description);
    Matcher m;
    for (const auto& p : preds) m.all.push_back(Predicate::parse(p));
    r.matcher = std::move(m);
    r.tool = Tool::REWRITER;
    r.status = RuleStatus::VERIFIED;
    r.created_at = now;
    r.verified_at = now;
    return r;
}

ErrorStrategy seed_strategy(std::string index, std::string pattern, bool needs_schema, bool localized,
                            std::string guidance, EmbeddingProvider& embedder) {
    ErrorStrategy s;
    s.index = std::move(index);
    s.message_pattern = std::move(pattern);
    s.needs_schema = needs_schema;
    s.localized = localized;
    s.guidance = std::move(guidance);
    s.embedding = embedder.embed(s.message_pattern);
    return s;
}

}  // namespace

KnowledgeSnapshot seed_snapshot(EmbeddingProvider& embedder, std::int64_t now) {
    KnowledgeSnapshot s;
    s.rules = {
        seed_rule("IN(SELECT)",
                  "A predicate of the form x IN (SELECT ...) re-evaluates or materializes the subquery for the "
                  "outer rows. Rewrite it as a join or a semi-join (EXISTS) on the subquery's key, deduplicating "
                  "the subquery side when it is not unique.",
                  {"in_subquery"}, now),
        seed_rule("NOT_IN_SUBQUERY",
                  "NOT IN (SELECT ...) blocks anti-join planning and returns no rows when the subquery yields a "
                  "NULL. Prefer NOT EXISTS with a correlated predicate, or a LEFT JOIN filtered on a NULL key.",
                  {"contains_operator(NOT IN)", "in_subquery"}, now),
        seed_rule("OUTER_JOIN_NULL_FILTER",
                  "A LEFT/RIGHT/FULL join whose WHERE clause requires a column of the null-extended side to be "
                  "NOT NULL discards every null-extended row, so the outer join behaves as an inner join. "
                  "Replace it with INNER JOIN and drop the redundant IS NOT NULL filter.",
                  {"outer_join_with_null_filter"}, now),
        seed_rule("SAME_TABLE_JOIN",
                  "The same base table is scanned more than once in one query block, typically in sibling derived "
                  "tables that aggregate different ranges. Scan it once, in a CTE or a single derived table, and "
                  "compute the separate aggregates with conditional expressions (CASE WHEN inside the aggregate).",
                  {"same_table_scanned(2)"}, now),
        seed_rule("UNION_ALL_SELECT_STAR",
                  "UNION ALL arms that select * carry every column through the union and any later window or sort. "
                  "Project only the columns the outer query uses, and factor the union into a CTE.",
                  {"union_all_unprojected"}, now),
    };

    s.strategies = {
        seed_strategy("JOIN_WITHOUT_CONDITION",
                      "SqlValidatorException: INNER, LEFT, RIGHT or FULL join requires a condition (NATURAL keyword "
                      "or ON or USING clause)",
                      false, true,
                      "A qualified join has no join condition. Add an ON clause relating the two inputs (or USING "
                      "for same-named keys); use CROSS JOIN only when a Cartesian product is intended.",
                      embedder),
        seed_strategy("MISSING_COMMA",
                      "SqlParseException: Encountered [ID] at line [N], column [N]. Was expecting one of: "
                      "\",\" \"FROM\" \"AS\"",
                      false, true,
                      "Two expressions in a select or group list are adjacent without a separator. Insert the "
                      "missing comma between them; do not change anything else.",
                      embedder),
        seed_strategy("COLUMN_NOT_FOUND",
                      "SqlValidatorException: Column [ID] not found in any table",
                      true, true,
                      "A column reference does not exist in the tables in scope. Pick the intended column from the "
                      "provided schema, qualifying it with the right table alias.",
                      embedder),
        seed_strategy("COLUMN_COUNT_MISMATCH",
                      "SqlValidatorException: Column count mismatch in UNION ALL",
                      false, false,
                      "SELECT clauses connected by UNION or UNION ALL contain a different number of fields. Make "
                      "every arm project the same number of columns, in the same order and with compatible types.",
                      embedder),
        seed_strategy("FUNCTION_NOT_FOUND",
                      "SqlValidatorException: No match found for function signature [ID]",
                      false, true,
                      "The function name or its argument types are not supported by this dialect. Replace it with "
                      "the dialect's equivalent built-in function or cast the arguments.",
                      embedder),
        seed_strategy("TABLE_NOT_FOUND",
                      "SqlValidatorException: Object [ID] not found",
                      true, true,
                      "A referenced table or view does not exist. Use the closest matching table from the provided "
                      "schema, keeping the query's aliases intact.",
                      embedder),
    };

    s.cases = {
        make_case("RW-0001",
                  "Original: SELECT a.k, a.n, b.m FROM (SELECT k, COUNT(*) AS n FROM events WHERE d < '0105' GROUP BY "
                  "k) a, (SELECT k, COUNT(*) AS m FROM events WHERE d = '0105' GROUP BY k) b WHERE a.k = b.k\n"
                  "Action: merged both scans of events into one pass with conditional aggregation.\n"
                  "Rewritten: SELECT k, SUM(CASE WHEN d < '0105' THEN 1 ELSE 0 END) AS n, SUM(CASE WHEN d = '0105' "
                  "THEN 1 ELSE 0 END) AS m FROM events WHERE d <= '0105' GROUP BY k\n"
                  "Outcome: one table scan instead of two.",
                  {"SAME_TABLE_JOIN"},
                  "SELECT a.k, a.n, b.m FROM (SELECT k, COUNT(*) AS n FROM events WHERE d < '0105' GROUP BY k) a, "
                  "(SELECT k, COUNT(*) AS m FROM events WHERE d = '0105' GROUP BY k) b WHERE a.k = b.k",
                  Tool::REWRITER, embedder),
        make_case("RW-0002",
                  "Original: SELECT o.id, c.name FROM orders o LEFT JOIN customers c ON o.cid = c.id WHERE c.id IS "
                  "NOT NULL\n"
                  "Action: the IS NOT NULL filter on the outer side makes the LEFT JOIN an inner join.\n"
                  "Rewritten: SELECT o.id, c.name FROM orders o INNER JOIN customers c ON o.cid = c.id\n"
                  "Outcome: enables join reordering and predicate pushdown.",
                  {"OUTER_JOIN_NULL_FILTER"},
                  "SELECT o.id, c.name FROM orders o LEFT JOIN customers c ON o.cid = c.id WHERE c.id IS NOT NULL",
                  Tool::REWRITER, embedder),
        make_case("RW-0003",
                  "Original: SELECT * FROM orders WHERE cid IN (SELECT id FROM customers WHERE region = 'EU')\n"
                  "Action: turned the IN subquery into a semi-join.\n"
                  "Rewritten: SELECT o.* FROM orders o WHERE EXISTS (SELECT 1 FROM customers c WHERE c.id = o.cid "
                  "AND c.region = 'EU')\n"
                  "Outcome: the subquery is no longer materialized per outer row.",
                  {"IN(SELECT)"},
                  "SELECT * FROM orders WHERE cid IN (SELECT id FROM customers WHERE region = 'EU')",
                  Tool::REWRITER, embedder),
        make_case("RW-0004",
                  "Original: SELECT COUNT(*) FROM (SELECT * FROM log_a WHERE d > '0301' UNION ALL SELECT * FROM "
                  "log_b WHERE d > '0301') u WHERE u.kind = 2\n"
                  "Action: projected only the referenced column in each UNION ALL arm and moved the union into a "
                  "CTE.\n"
                  "Rewritten: WITH u AS (SELECT kind FROM log_a WHERE d > '0301' UNION ALL SELECT kind FROM log_b "
                  "WHERE d > '0301') SELECT COUNT(*) FROM u WHERE u.kind = 2\n"
                  "Outcome: narrower intermediate rows.",
                  {"UNION_ALL_SELECT_STAR"},
                  "SELECT COUNT(*) FROM (SELECT * FROM log_a WHERE d > '0301' UNION ALL SELECT * FROM log_b WHERE d > "
                  "'0301') u WHERE u.kind = 2",
                  Tool::REWRITER, embedder),
    };

    s.stats[Tool::REWRITER] = ToolStats{static_cast<std::int64_t>(s.rules.size()), {now}};
    s.stats[Tool::CORRECTOR] = ToolStats{0, {now}};
    return s;
}

}  // namespace sqlgov
