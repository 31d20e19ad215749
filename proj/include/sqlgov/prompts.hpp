#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "sqlgov/providers.hpp"

namespace sqlgov::prompts {

inline constexpr std::string_view RULE_GEN = "RULE_GEN";
inline constexpr std::string_view SCENARIO_1 = "SCENARIO_1";
inline constexpr std::string_view SCENARIO_2 = "SCENARIO_2";
inline constexpr std::string_view REWRITE = "REWRITE";
inline constexpr std::string_view INTENT_EXTRACT = "INTENT_EXTRACT";
inline constexpr std::string_view ALIGNMENT = "ALIGNMENT";
inline constexpr std::string_view CORRECT = "CORRECT";
inline constexpr std::string_view MODIFY_PREFIX = "MODIFY_";

std::vector<std::string> registered_ids(const std::vector<std::string>& modify_categories);

struct LabeledText {
    std::string label;
    std::string text;
};

PromptEnvelope rule_generation(const std::vector<LabeledText>& demonstrations, std::string_view question,
                               std::string_view execution_outputs, bool format_reminder = false);

PromptEnvelope scenario_one(int fragment_id, std::string_view fragment, const std::vector<LabeledText>& rules);
PromptEnvelope scenario_two(int fragment_id, std::string_view fragment);

PromptEnvelope rewrite(std::string_view sql, const std::vector<std::string>& suggestions,
                       const std::vector<LabeledText>& cases);

PromptEnvelope intent_extract(int fragment_id, std::string_view fragment, std::string_view structure,
                              const std::vector<LabeledText>& child_summaries);

PromptEnvelope alignment(std::string_view left_sql, std::string_view left_intent, std::string_view right_sql,
                         std::string_view right_intent);

struct ModifySlots {
    std::string category;
    std::string category_instruction;
    std::string request;
    std::string sql;
    std::string surrounding_context;
    std::string metadata;
    std::string frequent_tables;
    std::string timestamp;
};
PromptEnvelope modify(const ModifySlots& slots);

struct CorrectSlots {
    bool local = false;
    std::string sql;  // whole query or the target fragment
    std::string context;
    std::string error;
    std::string guidance;
    std::optional<std::string> schema;  // absent: no schema section at all
};
PromptEnvelope correct(const CorrectSlots& slots);

// ---- response helpers -------------------------------------------------------

/// First JSON object in a model response, tolerating code fences and chatter.
/// Returns nullopt when nothing parses.
std::optional<nlohmann::json> parse_json_object(std::string_view response);

/// SQL text from a model response: a {"sql": ...} object, a fenced block, or
/// the bare text, trimmed.
std::string extract_sql(std::string_view response);

std::string trim(std::string_view s);

}  // namespace sqlgov::prompts
