#include "sqlgov/prompts.hpp"

namespace sqlgov::prompts {

using nlohmann::json;

namespace {

std::string bullet_list(const std::vector<LabeledText>& items, std::string_view empty) {
    if (items.empty()) return std::string(empty);
    std::string out;
    for (const auto& item : items) {
        if (!out.empty()) out += '\n';
        out += "- " + item.label + ": " + item.text;
    }
    return out;
}

PromptEnvelope envelope(std::string_view id, std::vector<PromptSection> sections) {
    return PromptEnvelope{std::string(id), std::move(sections)};
}

}  // namespace

std::vector<std::string> registered_ids(const std::vector<std::string>& modify_categories) {
    std::vector<std::string> ids{std::string(RULE_GEN),       std::string(SCENARIO_1), std::string(SCENARIO_2),
                                 std::string(REWRITE),        std::string(INTENT_EXTRACT),
                                 std::string(ALIGNMENT),      std::string(CORRECT)};
    for (const auto& c : modify_categories) ids.push_back(std::string(MODIFY_PREFIX) + c);
    return ids;
}

PromptEnvelope rule_generation(const std::vector<LabeledText>& demonstrations, std::string_view question,
                               std::string_view execution_outputs, bool format_reminder) {
    std::vector<PromptSection> s{
        {"Task Description",
         "You receive a SQL query together with what the database reported when it ran (logs, timings, "
         "results). Find the errors or performance problems the query exhibits."},
        {"Instruction",
         "1. Read the execution outputs and decide whether the query failed or ran inefficiently.\n"
         "2. Turn every confirmed problem into a reusable rule: a short upper-case problem pattern, what goes "
         "wrong, and how to fix it.\n"
         "3. Answer with one JSON object. Each key is a problem pattern (it becomes the rule index); each value "
         "describes the problem and the corrective action."},
        {"Demonstration", bullet_list(demonstrations, "(no validated rules yet)")},
        {"Question", std::string(question)},
        {"Execution Outputs", std::string(execution_outputs)},
    };
    if (format_reminder) {
        s.push_back({"Format Reminder",
                     "The previous answer was not valid JSON. Reply with a single JSON object and nothing else."});
    }
    return envelope(RULE_GEN, std::move(s));
}

PromptEnvelope scenario_one(int fragment_id, std::string_view fragment, const std::vector<LabeledText>& rules) {
    return envelope(
        SCENARIO_1,
        {
            {"Task Description",
             "A fragment of a larger SQL query matched optimization rules from the knowledge base. Decide for "
             "each rule whether it really applies to this fragment and, if so, what change it calls for."},
            {"Instruction",
             "1. Check every matched rule against the fragment; a structural match alone does not make a rule "
             "applicable.\n"
             "2. For applicable rules, state one concrete rewrite action for this fragment.\n"
             "3. Keep the fragment's result set unchanged."},
            {"Matched Rules", bullet_list(rules, "(none)")},
            {"Fragment", "Fragment " + std::to_string(fragment_id) + ":\n" + std::string(fragment)},
            {"Output Format",
             R"({"suggestions": [{"rule": "<index>", "applicable": true|false, "action": "<what to change>", )"
             R"("rationale": "<why>"}]})"},
        });
}

PromptEnvelope scenario_two(int fragment_id, std::string_view fragment) {
    return envelope(
        SCENARIO_2,
        {
            {"Task Description",
             "No knowledge-base rule matched this SQL fragment and it did not pass the efficiency screen. Work "
             "out what the fragment is meant to compute and whether a cheaper formulation exists."},
            {"Instruction",
             "1. Describe the fragment's intent in terms of its inputs and outputs.\n"
             "2. If it is already efficient, say so.\n"
             "3. Otherwise give one rewrite action that preserves the result."},
            {"Fragment", "Fragment " + std::to_string(fragment_id) + ":\n" + std::string(fragment)},
            {"Output Format",
             R"({"efficient": true} or {"efficient": false, "action": "<what to change>", "rationale": "<why>"})"},
        });
}

PromptEnvelope rewrite(std::string_view sql, const std::vector<std::string>& suggestions,
                       const std::vector<LabeledText>& cases) {
    std::string sugg;
    for (const auto& s : suggestions) {
        if (!sugg.empty()) sugg += '\n';
        sugg += "- " + s;
    }
    return envelope(REWRITE,
                    {
                        {"Task Description",
                         "Rewrite the SQL query below into a semantically equivalent query that executes faster, "
                         "applying the per-fragment suggestions."},
                        {"Instruction",
                         "1. Apply every suggestion; fragment numbers refer to the analysis order.\n"
                         "2. Use the historical cases as worked examples of similar rewrites.\n"
                         "3. Return only the complete rewritten SQL, without explanation."},
                        {"Suggestions", sugg.empty() ? "(none)" : sugg},
                        {"Historical Cases", bullet_list(cases, "(none)")},
                        {"SQL", std::string(sql)},
                    });
}

PromptEnvelope intent_extract(int fragment_id, std::string_view fragment, std::string_view structure,
                              const std::vector<LabeledText>& child_summaries) {
    return envelope(
        INTENT_EXTRACT,
        {
            {"Task Description",
             "Summarize what this SQL fragment computes, field by field, so that two queries can later be "
             "compared by meaning rather than by text."},
            {"Instruction",
             "1. For every output field give its source tables, the transformation applied (aggregation, "
             "arithmetic, case logic) and the filter and join conditions that shape it.\n"
             "2. Reuse the summaries of nested subqueries instead of re-deriving them.\n"
             "3. Be literal: no guesses about business meaning."},
            {"Subquery Summaries", bullet_list(child_summaries, "(none)")},
            {"Structure", std::string(structure)},
            {"Fragment", "Fragment " + std::to_string(fragment_id) + ":\n" + std::string(fragment)},
            {"Output Format", R"({"summary": "<structured description of every output field>"})"},
        });
}

PromptEnvelope alignment(std::string_view left_sql, std::string_view left_intent, std::string_view right_sql,
                         std::string_view right_intent) {
    return envelope(
        ALIGNMENT,
        {
            {"Task Description",
             "Decide whether two SELECT queries return the same result on every database instance, using their "
             "field-level intent summaries."},
            {"Instruction",
             "1. Map every output field of the left query to exactly one field of the right query and back "
             "(positions are 1-based).\n"
             "2. For each pair say whether the values are always equal and how confident you are (0 to 1).\n"
             "3. If the queries can differ, describe a concrete database state where they do."},
            {"Left Query", std::string(left_sql)},
            {"Left Intent", std::string(left_intent)},
            {"Right Query", std::string(right_sql)},
            {"Right Intent", std::string(right_intent)},
            {"Output Format",
             R"({"mapping": [{"left": 1, "right": 1, "equivalent": true, "confidence": 0.0}], )"
             R"("counterexample": null | "<description>"})"},
        });
}

PromptEnvelope modify(const ModifySlots& slots) {
    return envelope(std::string(MODIFY_PREFIX) + slots.category,
                    {
                        {"Task Description", slots.category_instruction},
                        {"Instruction",
                         "1. Change only what the request asks for.\n"
                         "2. Use the metadata for exact table and column names; resolve relative dates against "
                         "the timestamp.\n"
                         "3. Reply with a JSON object holding the full resulting SQL and a short explanation."},
                        {"Metadata", slots.metadata.empty() ? "(none)" : slots.metadata},
                        {"Frequent Tables", slots.frequent_tables.empty() ? "(none)" : slots.frequent_tables},
                        {"Timestamp", slots.timestamp},
                        {"Context", slots.surrounding_context.empty() ? "(none)" : slots.surrounding_context},
                        {"SQL", slots.sql},
                        {"Request", slots.request},
                        {"Output Format", R"({"sql": "<resulting SQL>", "explanation": "<what changed>"})"},
                    });
}

PromptEnvelope correct(const CorrectSlots& slots) {
    std::vector<PromptSection> s{
        {"Task Description",
         slots.local ? "The database rejected a query. The error lies inside the SQL fragment below; repair that "
                       "fragment only."
                     : "The database rejected the SQL query below. Repair it so that it runs."},
        {"Instruction",
         slots.local ? "1. Fix the error using the guidance.\n"
                       "2. Return only the corrected fragment, keeping everything that is not part of the error "
                       "unchanged."
                     : "1. Fix the error using the guidance and, when given, the schema.\n"
                       "2. Return only the complete corrected SQL."},
        {"Error", slots.error},
        {"Guidance", slots.guidance.empty() ? "(no stored strategy matched this error)" : slots.guidance},
    };
    if (slots.schema) s.push_back({"Schema", *slots.schema});
    if (slots.local) s.push_back({"Context", slots.context.empty() ? "(top level)" : slots.context});
    s.push_back({"SQL", slots.sql});
    return envelope(CORRECT, std::move(s));
}

// ---- response helpers -------------------------------------------------------

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

namespace {

// Body of the first ``` fenced block, if any.
std::optional<std::string> fenced(std::string_view text) {
    const auto open = text.find("```");
    if (open == std::string_view::npos) return std::nullopt;
    auto body_start = text.find('\n', open);
    if (body_start == std::string_view::npos) return std::nullopt;
    ++body_start;
    const auto close = text.find("```", body_start);
    return std::string(text.substr(body_start, close == std::string_view::npos ? std::string_view::npos
                                                                              : close - body_start));
}

}  // namespace

std::optional<json> parse_json_object(std::string_view response) {
    std::string text = trim(response);
    if (auto body = fenced(text)) text = trim(*body);
    auto attempt = [](std::string_view t) -> std::optional<json> {
        const json j = json::parse(t, nullptr, false);
        if (j.is_discarded() || !j.is_object()) return std::nullopt;
        return j;
    };
    if (auto j = attempt(text)) return j;
    const auto open = text.find('{');
    const auto close = text.rfind('}');
    if (open == std::string::npos || close == std::string::npos || close < open) return std::nullopt;
    return attempt(std::string_view(text).substr(open, close - open + 1));
}

std::string extract_sql(std::string_view response) {
    const std::string text = trim(response);
    if (!text.empty() && text.front() == '{') {
        if (auto j = parse_json_object(text); j && j->contains("sql") && (*j)["sql"].is_string()) {
            return trim((*j)["sql"].get<std::string>());
        }
    }
    if (auto body = fenced(text)) return trim(*body);
    return text;
}

}  // namespace sqlgov::prompts
