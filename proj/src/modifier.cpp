#include "sqlgov/modifier.hpp"

#include <algorithm>
#include <cctype>
#include <ctime>
#include <fstream>
#include <regex>
#include <set>

#include "sqlgov/error.hpp"
#include "sqlgov/prompts.hpp"
#include "sqlgov/sql_lexer.hpp"
#include "sqlgov/sql_tables.hpp"
#include "sqlgov/templatize.hpp"
#include "sqlgov/vector_math.hpp"

namespace sqlgov {

using nlohmann::json;
using ojson = nlohmann::ordered_json;

void ModifierConfig::validate() const {
    if (alpha < 0 || beta_sim < 0 || alpha + beta_sim <= 0) {
        throw Error(ErrorCode::INVALID_ARGUMENT, "alpha and beta_sim must be non-negative with a positive sum");
    }
    if (theta < 0 || theta > 1) throw Error(ErrorCode::INVALID_ARGUMENT, "theta must lie in [0, 1]");
    if (top_k_tables == 0) throw Error(ErrorCode::INVALID_ARGUMENT, "top_k_tables must be positive");
}

// ---- catalog ------------------------------------------------------------------

Catalog parse_catalog(const json& j) {
    if (!j.is_object()) throw Error(ErrorCode::INVALID_ARGUMENT, "catalog must be a JSON object");
    Catalog out;
    for (const auto& [name, value] : j.items()) {
        TableInfo t;
        t.name = name;
        const json* cols = &value;
        if (value.is_object()) {
            t.description = value.value("description", std::string());
            if (!value.contains("columns")) {
                out[sql::to_lower(name)] = std::move(t);
                continue;
            }
            cols = &value.at("columns");
        }
        if (!cols->is_array()) throw Error(ErrorCode::INVALID_ARGUMENT, "columns of " + name + " must be a list");
        for (const auto& c : *cols) {
            if (c.is_string()) t.columns.push_back({c.get<std::string>(), ""});
            else t.columns.push_back({c.at("name").get<std::string>(), c.value("description", std::string())});
        }
        out[sql::to_lower(name)] = std::move(t);
    }
    return out;
}

Catalog load_catalog(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IO_FAILURE, "cannot read " + path);
    const json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) throw Error(ErrorCode::IO_FAILURE, path + " is not valid JSON");
    return parse_catalog(j);
}

namespace {

TableInfo lookup(const std::string& table, const Catalog& catalog) {
    const auto it = catalog.find(sql::to_lower(table));
    if (it != catalog.end()) return it->second;
    TableInfo t;
    t.name = table;
    return t;
}

std::string render_tables(const std::vector<TableInfo>& tables) {
    std::string out;
    for (const auto& t : tables) {
        if (!out.empty()) out += '\n';
        out += t.name;
        if (!t.description.empty()) out += ": " + t.description;
        for (const auto& c : t.columns) {
            out += "\n  - " + c.name;
            if (!c.description.empty()) out += ": " + c.description;
        }
    }
    return out;
}

bool word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

bool contains_phrase(const std::string& haystack, const std::string& phrase) {
    if (phrase.empty()) return false;
    for (auto pos = haystack.find(phrase); pos != std::string::npos; pos = haystack.find(phrase, pos + 1)) {
        const bool left = pos == 0 || !word_char(haystack[pos - 1]) || !word_char(phrase.front());
        const auto end = pos + phrase.size();
        const bool right = end == haystack.size() || !word_char(haystack[end]) || !word_char(phrase.back());
        if (left && right) return true;
    }
    return false;
}

}  // namespace

std::string render_schema(const std::vector<std::string>& tables, const Catalog& catalog) {
    std::vector<TableInfo> infos;
    for (const auto& t : tables) infos.push_back(lookup(t, catalog));
    return render_tables(infos);
}

// ---- metadata -------------------------------------------------------------------

std::string ModificationContext::metadata_text() const { return render_tables(referenced_metadata); }
std::string ModificationContext::frequent_tables_text() const { return render_tables(frequent_tables); }

std::string iso_timestamp(std::int64_t epoch_seconds) {
    const std::time_t t = static_cast<std::time_t>(epoch_seconds);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::map<std::string, std::int64_t> table_frequencies(const std::vector<std::string>& history_sql) {
    std::map<std::string, std::int64_t> out;
    for (const auto& q : history_sql)
        for (const auto& t : referenced_tables(q)) ++out[t];
    return out;
}

ModificationContext prepare_metadata(std::string_view target_sql, std::string_view context, const Catalog& catalog,
                                     const std::map<std::string, std::int64_t>& history, const ModifierConfig& cfg,
                                     std::int64_t now) {
    ModificationContext ctx;
    ctx.target_sql = std::string(target_sql);
    ctx.surrounding_context = std::string(context);
    for (const auto& t : referenced_tables(target_sql)) ctx.referenced_metadata.push_back(lookup(t, catalog));

    std::vector<std::pair<std::string, std::int64_t>> ranked(history.begin(), history.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    for (std::size_t i = 0; i < ranked.size() && i < cfg.top_k_tables; ++i) {
        ctx.frequent_tables.push_back(lookup(ranked[i].first, catalog));
    }
    ctx.timestamp = iso_timestamp(now);
    return ctx;
}

// ---- classification ---------------------------------------------------------------

double keyword_score(std::string_view request, const IntentCategory& category) {
    if (category.keywords.empty()) {
        throw Error(ErrorCode::INVALID_ARGUMENT, "category " + category.id + " has no keywords");
    }
    const std::string text = sql::to_lower(request);
    double sum = 0.0;
    for (const auto& k : category.keywords) {
        if (contains_phrase(text, sql::to_lower(k.phrase))) sum += k.weight;
    }
    return sum / static_cast<double>(category.keywords.size());
}

std::string mask_request(std::string_view request, const Catalog& catalog) {
    static const std::regex quoted(R"((^|[\s(,=])('[^']*'|"[^"]*"|`[^`]*`)(?=$|[\s),.;:!?]))");
    static const std::regex number(R"(\b\d+(\.\d+)?\b)");
    std::string out = std::regex_replace(std::string(request), quoted, "$1[MASK]");
    out = std::regex_replace(out, number, "[MASK]");
    std::set<std::string> names;
    for (const auto& [key, t] : catalog) {
        names.insert(sql::to_lower(t.name));
        for (const auto& c : t.columns) names.insert(sql::to_lower(c.name));
    }
    if (names.empty()) return out;
    std::string result;
    std::size_t i = 0;
    while (i < out.size()) {
        if (!word_char(out[i])) {
            result += out[i++];
            continue;
        }
        std::size_t j = i;
        while (j < out.size() && (word_char(out[j]) || (out[j] == '.' && j + 1 < out.size() && word_char(out[j + 1]))))
            ++j;
        const std::string word = out.substr(i, j - i);
        result += names.count(sql::to_lower(word)) ? "[MASK]" : word;
        i = j;
    }
    return result;
}

std::string embedding_text(std::string_view request, const ModifierConfig& cfg, const Catalog& catalog) {
    return cfg.masking_pathway ? mask_request(request, catalog) : std::string(request);
}

Classification classify_embedded(std::string_view request, const Vector& request_embedding,
                                 const std::vector<IntentCategory>& categories, const ModifierConfig& cfg) {
    if (categories.empty()) throw Error(ErrorCode::INVALID_ARGUMENT, "no intent categories");
    Classification c;
    std::size_t best = 0;
    for (std::size_t i = 0; i < categories.size(); ++i) {
        const auto& cat = categories[i];
        if (cat.centroid.empty()) throw Error(ErrorCode::EMPTY_CATEGORY, "category " + cat.id + " has no centroid");
        const double f =
            cfg.alpha * keyword_score(request, cat) + cfg.beta_sim * cosine_similarity(request_embedding, cat.centroid);
        c.scores.push_back(f);
        if (f > c.scores[best]) best = i;
    }
    c.score = c.scores[best];
    if (c.score >= cfg.theta) c.category = categories[best].id;
    return c;
}

Classification classify_intent(std::string_view request, const std::vector<IntentCategory>& categories,
                               EmbeddingProvider& embedder, const ModifierConfig& cfg, const Catalog& catalog) {
    return classify_embedded(request, embedder.embed(embedding_text(request, cfg, catalog)), categories, cfg);
}

std::vector<IntentCategory> build_centroids(std::vector<IntentCategory> categories,
                                            const std::vector<std::pair<std::string, std::string>>& labeled,
                                            EmbeddingProvider& embedder, const ModifierConfig& cfg) {
    std::map<std::string, Vector> sums;
    std::map<std::string, std::size_t> counts;
    for (const auto& [text, id] : labeled) {
        const bool known = std::any_of(categories.begin(), categories.end(),
                                       [&](const IntentCategory& c) { return c.id == id; });
        if (!known) throw Error(ErrorCode::INVALID_ARGUMENT, "example labelled with unknown category " + id);
        const Vector e = embedder.embed(embedding_text(text, cfg));
        auto& sum = sums[id];
        if (sum.empty()) sum.assign(e.size(), 0.0);
        if (sum.size() != e.size()) throw Error(ErrorCode::DIMENSION_MISMATCH, "embedding size changed");
        for (std::size_t i = 0; i < e.size(); ++i) sum[i] += e[i];
        ++counts[id];
    }
    for (auto& cat : categories) {
        const auto it = sums.find(cat.id);
        if (it == sums.end()) {
            if (cat.centroid.empty()) {
                throw Error(ErrorCode::EMPTY_CATEGORY, "category " + cat.id + " has no examples and no centroid");
            }
            continue;
        }
        Vector mean = it->second;
        for (auto& x : mean) x /= static_cast<double>(counts[cat.id]);
        cat.centroid = normalized(std::move(mean));
    }
    return categories;
}

std::vector<IntentCategory> parse_categories(const json& j, EmbeddingProvider& embedder, const ModifierConfig& cfg) {
    std::vector<IntentCategory> cats;
    std::vector<std::pair<std::string, std::string>> labeled;
    for (const auto& c : j.at("categories")) {
        IntentCategory cat;
        cat.id = c.at("id").get<std::string>();
        cat.instruction = c.value("instruction", std::string());
        for (const auto& k : c.at("keywords")) {
            KeywordSpec spec{k.at("phrase").get<std::string>(), k.value("weight", 1.0)};
            if (spec.weight <= 0 || spec.weight > 1) {
                throw Error(ErrorCode::INVALID_ARGUMENT, "keyword weight out of (0, 1] in " + cat.id);
            }
            cat.keywords.push_back(spec);
        }
        if (cat.keywords.empty()) throw Error(ErrorCode::INVALID_ARGUMENT, "category " + cat.id + " has no keywords");
        cat.examples = c.value("examples", std::vector<std::string>{});
        if (c.contains("centroid")) cat.centroid = c["centroid"].get<Vector>();
        for (const auto& e : cat.examples) labeled.emplace_back(e, cat.id);
        cats.push_back(std::move(cat));
    }
    return build_centroids(std::move(cats), labeled, embedder, cfg);
}

std::vector<IntentCategory> load_categories(const std::string& path, EmbeddingProvider& embedder,
                                            const ModifierConfig& cfg) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IO_FAILURE, "cannot read " + path);
    const json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) throw Error(ErrorCode::IO_FAILURE, path + " is not valid JSON");
    return parse_categories(j, embedder, cfg);
}

const ojson& default_categories_json() {
    static const ojson j = ojson::parse(R"json({
  "categories": [
    {
      "id": "REALIZE_SEMANTICS",
      "instruction": "Change the SQL query so that it computes what the request describes: add or adjust filters, groupings, aggregations, joins or output columns.",
      "keywords": [
        {"phrase": "filter", "weight": 1.0},
        {"phrase": "only", "weight": 0.8},
        {"phrase": "exclude", "weight": 0.9},
        {"phrase": "group by", "weight": 0.9},
        {"phrase": "add a column", "weight": 1.0},
        {"phrase": "last week", "weight": 0.8},
        {"phrase": "count", "weight": 0.7}
      ],
      "examples": [
        "only keep orders from the last week",
        "filter out cancelled orders and count the rest per region",
        "add a column with the average order value per customer",
        "exclude test accounts from the result",
        "group the totals by month instead of by day",
        "calculate the share of returning users",
        "add a filter on the region column",
        "only count rows from the last month"
      ]
    },
    {
      "id": "EXPLAIN_SQL",
      "instruction": "Explain the SQL query by adding comments. Preserve the original logic while adding comments; do not change any SQL token.",
      "keywords": [
        {"phrase": "explain", "weight": 1.0},
        {"phrase": "comment", "weight": 0.9},
        {"phrase": "comments", "weight": 0.9},
        {"phrase": "what does", "weight": 0.7},
        {"phrase": "describe", "weight": 0.7},
        {"phrase": "annotate", "weight": 0.9},
        {"phrase": "document", "weight": 0.7}
      ],
      "examples": [
        "explain what this query does",
        "add comments to each step of the query",
        "annotate the joins with comments",
        "describe every subquery in a comment",
        "what does this sql compute, add comments"
      ]
    },
    {
      "id": "ADOPT_SYNTAX",
      "instruction": "Rewrite the SQL query in the requested syntax, dialect or style without changing its result.",
      "keywords": [
        {"phrase": "syntax", "weight": 0.9},
        {"phrase": "dialect", "weight": 1.0},
        {"phrase": "convert", "weight": 0.7},
        {"phrase": "mysql", "weight": 0.8},
        {"phrase": "hive", "weight": 0.8},
        {"phrase": "spark sql", "weight": 0.8},
        {"phrase": "postgresql", "weight": 0.8},
        {"phrase": "ansi", "weight": 0.8},
        {"phrase": "cte", "weight": 0.6},
        {"phrase": "style", "weight": 0.6}
      ],
      "examples": [
        "convert this query to mysql syntax",
        "rewrite it in the hive dialect",
        "use ansi join syntax instead of commas",
        "turn the subqueries into a cte style query",
        "make this run on postgresql"
      ]
    },
    {
      "id": "OTHER",
      "instruction": "Apply the requested change to the SQL query and keep everything else as it is.",
      "keywords": [
        {"phrase": "rename", "weight": 0.8},
        {"phrase": "alias", "weight": 0.7},
        {"phrase": "reorder", "weight": 0.7},
        {"phrase": "sort", "weight": 0.7},
        {"phrase": "limit", "weight": 0.7}
      ],
      "examples": [
        "rename the output columns to snake case",
        "give the subquery a clearer alias",
        "reorder the selected columns",
        "sort the result by date and limit it to 100 rows"
      ]
    }
  ]
})json");
    return j;
}

// ---- modification -----------------------------------------------------------------

ModifyResult modify(std::string_view request, const ModificationContext& ctx, const IntentCategory& category,
                    LlmProvider& llm) {
    prompts::ModifySlots slots;
    slots.category = category.id;
    slots.category_instruction = category.instruction;
    slots.request = std::string(request);
    slots.sql = ctx.target_sql;
    slots.surrounding_context = ctx.surrounding_context;
    slots.metadata = ctx.metadata_text();
    slots.frequent_tables = ctx.frequent_tables_text();
    slots.timestamp = ctx.timestamp;
    const std::string response = llm.complete(prompts::modify(slots));

    ModifyResult r;
    r.category = category.id;
    const auto j = prompts::parse_json_object(response);
    if (j && j->contains("sql") && (*j)["sql"].is_string()) {
        r.sql = prompts::trim((*j)["sql"].get<std::string>());
        if (j->contains("explanation") && (*j)["explanation"].is_string()) r.explanation = (*j)["explanation"];
    } else {
        r.sql = prompts::extract_sql(response);
    }
    if (r.sql.empty()) throw Error(ErrorCode::REJECTED_RESPONSE, "modification response carried no SQL");
    if (category.id == kExplainSql &&
        templatize(strip_comments(r.sql)) != templatize(strip_comments(ctx.target_sql))) {
        throw Error(ErrorCode::CONTRACT_VIOLATION, "EXPLAIN_SQL output changed the query itself");
    }
    return r;
}

}  // namespace sqlgov
