#include "sqlgov/rewriter.hpp"

#include <future>

#include "sqlgov/error.hpp"
#include "sqlgov/fragmenter.hpp"
#include "sqlgov/prompts.hpp"

namespace sqlgov {

std::string_view to_string(Scenario s) {
    switch (s) {
        case Scenario::RULE_GUIDED: return "RULE_GUIDED";
        case Scenario::EXPLORATORY: return "EXPLORATORY";
        case Scenario::ALREADY_EFFICIENT: return "ALREADY_EFFICIENT";
    }
    return "?";
}

bool passes_efficiency_screen(const FragmentFacts& f) {
    return f.parsed && f.from_inputs <= 1 && !f.has_join && !f.has_in_subquery && !f.has_scalar_subquery_in_select &&
           !f.has_outer_join_null_filter && !f.has_duplicate_scan() && !f.has_select_star && !f.has_union_all_star;
}

namespace {

std::string string_field(const nlohmann::json& j, const char* key) {
    return j.contains(key) && j[key].is_string() ? j[key].get<std::string>() : std::string();
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
    std::string out;
    for (const auto& p : parts) {
        if (p.empty()) continue;
        if (!out.empty()) out += sep;
        out += p;
    }
    return out;
}

}  // namespace

RewriteSuggestion Rewriter::evaluate_fragment(const Fragment& fragment) {
    RewriteSuggestion s;
    s.fragment_id = fragment.id;

    const auto hits = match_rules(fragment, Tool::REWRITER, kb_);
    if (!hits.empty()) {
        std::vector<prompts::LabeledText> listed;
        for (const auto& r : hits) listed.push_back({r.index, r.description});
        const std::string response = llm_.complete(prompts::scenario_one(fragment.id, fragment.text, listed));
        const auto j = prompts::parse_json_object(response);
        if (!j) throw Error(ErrorCode::REJECTED_RESPONSE, "rule evaluation for fragment " + std::to_string(fragment.id) +
                                                              " was not JSON");
        std::vector<std::string> accepted, actions, rationales;
        if (j->contains("suggestions") && (*j)["suggestions"].is_array()) {
            for (const auto& r : hits) {
                for (const auto& item : (*j)["suggestions"]) {
                    if (!item.is_object() || string_field(item, "rule") != r.index) continue;
                    if (!item.value("applicable", false)) break;
                    accepted.push_back(r.index);
                    actions.push_back(string_field(item, "action"));
                    rationales.push_back(string_field(item, "rationale"));
                    break;
                }
            }
        }
        if (!accepted.empty()) {
            s.scenario = Scenario::RULE_GUIDED;
            s.rule_index = accepted.front();
            s.other_rules.assign(accepted.begin() + 1, accepted.end());
            s.action = join(actions, "; ");
            s.rationale = join(rationales, "; ");
            return s;
        }
        // every matched rule was declined: treat the fragment as if nothing matched
    }

    if (passes_efficiency_screen(analyze_fragment(fragment.text))) return s;

    const auto j = prompts::parse_json_object(llm_.complete(prompts::scenario_two(fragment.id, fragment.text)));
    if (!j) throw Error(ErrorCode::REJECTED_RESPONSE,
                        "intent analysis for fragment " + std::to_string(fragment.id) + " was not JSON");
    const std::string action = string_field(*j, "action");
    if (j->value("efficient", true) || action.empty()) return s;
    s.scenario = Scenario::EXPLORATORY;
    s.action = action;
    s.rationale = string_field(*j, "rationale");
    return s;
}

std::vector<RewriteSuggestion> Rewriter::evaluate(std::string_view sql) {
    const FragmentTree tree = decompose(sql);
    if (!tree.parsed()) {
        throw Error(ErrorCode::UNPARSEABLE, "line " + std::to_string(tree.diagnostic->line) + ", column " +
                                                std::to_string(tree.diagnostic->column) + ": " +
                                                tree.diagnostic->message);
    }
    std::vector<RewriteSuggestion> out;
    if (config_.parallel) {
        std::vector<std::future<RewriteSuggestion>> pending;
        for (const auto& f : tree.fragments) {
            pending.push_back(std::async(std::launch::async, [this, &f] { return evaluate_fragment(f); }));
        }
        for (auto& p : pending) out.push_back(p.get());
    } else {
        for (const auto& f : tree.fragments) out.push_back(evaluate_fragment(f));
    }
    return out;
}

RewriteResult Rewriter::rewrite(std::string_view sql, const std::vector<RewriteSuggestion>& suggestions) {
    RewriteResult result;
    result.original = std::string(sql);
    std::vector<std::string> labels;
    std::vector<std::string> lines;
    for (const auto& s : suggestions) {
        if (!s.actionable()) continue;
        result.suggestions_applied.push_back(s);
        std::string line = "Fragment " + std::to_string(s.fragment_id);
        if (s.rule_index) {
            std::vector<std::string> rules{*s.rule_index};
            rules.insert(rules.end(), s.other_rules.begin(), s.other_rules.end());
            labels.insert(labels.end(), rules.begin(), rules.end());
            line += " [" + join(rules, ", ") + "]";
        }
        lines.push_back(line + ": " + s.action);
    }
    if (result.suggestions_applied.empty()) {
        result.rewritten = result.original;
        return result;
    }

    CaseQuery q;
    q.k = config_.case_k;
    q.tool = Tool::REWRITER;
    if (!labels.empty()) q.tag_filter = labels;
    std::vector<prompts::LabeledText> cases;
    for (const auto& c : retrieve_cases(sql, kb_, embedder_, q)) {
        result.cases_consulted.push_back(c.item->index);
        cases.push_back({c.item->index, c.item->details});
    }

    const std::string rewritten = prompts::extract_sql(llm_.complete(prompts::rewrite(sql, lines, cases)));
    if (rewritten.empty()) throw Error(ErrorCode::REJECTED_RESPONSE, "rewrite response was empty");
    try {
        sql::parse_query(rewritten);
    } catch (const sql::ParseError& e) {
        throw Error(ErrorCode::REJECTED_RESPONSE, std::string("rewritten SQL does not parse: ") + e.what());
    }
    result.rewritten = rewritten;
    return result;
}

RewriteResult Rewriter::run(std::string_view sql, bool verify) {
    RewriteResult result = rewrite(sql, evaluate(sql));
    if (verify) {
        EquivalenceVerifier verifier(llm_);
        result.verified = verifier.check_equivalence(result.original, result.rewritten);
    }
    return result;
}

}  // namespace sqlgov
