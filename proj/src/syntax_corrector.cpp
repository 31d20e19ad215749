#include "sqlgov/syntax_corrector.hpp"

#include <algorithm>
#include <cctype>
#include <regex>

#include "sqlgov/error.hpp"
#include "sqlgov/sql_lexer.hpp"
#include "sqlgov/sql_tables.hpp"

namespace sqlgov {

namespace {

constexpr auto kIcase = std::regex::ECMAScript | std::regex::icase;

std::string first_nonblank_line(std::string_view text) {
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        auto line = prompts::trim(text.substr(pos, nl - pos));
        if (!line.empty()) return line;
        pos = nl + 1;
    }
    return {};
}

// Text after the last "Caused by:" marker, or the whole log.
std::string root_cause(std::string_view log) {
    static const std::string marker = "Caused by:";
    const auto at = log.rfind(marker);
    if (at == std::string_view::npos) return std::string(log);
    return prompts::trim(log.substr(at + marker.size()));
}

// Up to the first sentence end or line break, without the final period.
std::string first_sentence(std::string_view text) {
    std::string line = first_nonblank_line(text);
    static const std::regex end_re(R"(\.(\s|$))");
    std::smatch m;
    if (std::regex_search(line, m, end_re)) line = line.substr(0, static_cast<std::size_t>(m.position(0)));
    return prompts::trim(line);
}

std::optional<ErrorLocation> find_location(const std::string& text) {
    std::smatch m;
    static const std::regex line_col(R"(line\s+(\d+)\s*,\s*column\s+(\d+))", kIcase);
    if (std::regex_search(text, m, line_col)) {
        ErrorLocation loc;
        loc.kind = ErrorLocation::Kind::LINE_COLUMN;
        loc.line = std::stoul(m[1]);
        loc.column = std::stoul(m[2]);
        return loc;
    }
    static const std::regex offset(R"(\b(?:position|character|offset)\s*:?\s*(\d+))", kIcase);
    if (std::regex_search(text, m, offset)) {
        const auto n = std::stoul(m[1]);
        if (n > 0) {
            ErrorLocation loc;
            loc.kind = ErrorLocation::Kind::OFFSET;
            loc.offset = n - 1;
            return loc;
        }
    }
    static const std::regex near_dq(R"(\bnear\s+"([^"]*)\")", kIcase);
    static const std::regex near_sq(R"(\bnear\s+'([^']*)')", kIcase);
    if (std::regex_search(text, m, near_dq) || std::regex_search(text, m, near_sq)) {
        ErrorLocation loc;
        loc.kind = ErrorLocation::Kind::NEAR_TOKEN;
        loc.token = m[1];
        return loc;
    }
    return std::nullopt;
}

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

}  // namespace

ParsedError parse_error_log(std::string_view log) {
    if (log.find_first_not_of(" \t\r\n") == std::string_view::npos) {
        throw Error(ErrorCode::INVALID_ARGUMENT, "error log is blank");
    }
    ParsedError out;
    out.raw_log = std::string(log);
    const std::string cause = root_cause(log);
    std::smatch m;

    static const std::regex java_exc(R"(([A-Za-z_$][\w$]*(?:\.[A-Za-z_$][\w$]*)*Exception)\b\s*:?\s*)");
    static const std::regex mysql(R"(\bERROR\s+(\d+)(?:\s*\(([0-9A-Z]+)\))?(?:\s+at line \d+)?\s*:\s*)");
    static const std::regex oracle(R"(\b(ORA-\d{5})\s*:\s*)");
    static const std::regex generic(R"(\bERROR\b(?:\s+at\s+line\s+\d+\s*,\s*column\s+\d+)?\s*:\s*)");

    std::string rest;
    if (std::regex_search(cause, m, java_exc)) {
        std::string full = m[1];
        const auto dot = full.rfind('.');
        out.exception_type = dot == std::string::npos ? full : full.substr(dot + 1);
        rest = m.suffix();
    } else if (std::regex_search(cause, m, mysql)) {
        out.exception_type = "ERROR " + m[1].str();
        rest = m.suffix();
    } else if (std::regex_search(cause, m, oracle)) {
        out.exception_type = m[1];
        rest = m.suffix();
    } else if (std::regex_search(cause, m, generic)) {
        out.exception_type = "ERROR";
        rest = m.suffix();
    }

    if (!out.exception_type.empty()) out.message = first_sentence(rest);
    if (out.exception_type.empty() || out.message.empty()) {
        if (out.exception_type.empty()) out.exception_type = std::string(kUnknownErrorType);
        out.message = first_nonblank_line(out.exception_type == kUnknownErrorType ? std::string(log) : cause);
    }

    out.location = find_location(cause);
    if (!out.location) out.location = find_location(out.raw_log);
    return out;
}

std::string error_key(const ParsedError& error) {
    static const std::regex quoted(R"("[^"]*"|'[^']*'|`[^`]*`)");
    static const std::regex number(R"(\b\d+(?:\.\d+)?\b)");
    std::string msg = std::regex_replace(error.message, quoted, "[ID]");
    msg = std::regex_replace(msg, number, "[N]");
    return error.exception_type + ": " + msg;
}

std::optional<std::size_t> resolve_offset(const ErrorLocation& location, std::string_view query) {
    switch (location.kind) {
        case ErrorLocation::Kind::LINE_COLUMN: {
            if (location.line == 0 || location.column == 0) return std::nullopt;
            std::size_t line_start = 0;
            for (std::size_t l = 1; l < location.line; ++l) {
                const auto nl = query.find('\n', line_start);
                if (nl == std::string_view::npos) return std::nullopt;
                line_start = nl + 1;
            }
            auto line_end = query.find('\n', line_start);
            if (line_end == std::string_view::npos) line_end = query.size();
            const std::size_t off = line_start + location.column - 1;
            if (off >= line_end) return std::nullopt;
            return off;
        }
        case ErrorLocation::Kind::OFFSET:
            if (location.offset >= query.size()) return std::nullopt;
            return location.offset;
        case ErrorLocation::Kind::NEAR_TOKEN: {
            if (query.empty()) return std::nullopt;
            if (location.token.empty()) return query.size() - 1;
            const auto at = lower(query).find(lower(location.token));
            if (at == std::string::npos) return std::nullopt;
            return at;
        }
    }
    return std::nullopt;
}

std::string describe(const ParsedError& error) {
    std::string out = error.exception_type + ": " + error.message;
    if (error.location) {
        const auto& l = *error.location;
        switch (l.kind) {
            case ErrorLocation::Kind::LINE_COLUMN:
                out += " (line " + std::to_string(l.line) + ", column " + std::to_string(l.column) + ")";
                break;
            case ErrorLocation::Kind::OFFSET:
                out += " (character " + std::to_string(l.offset + 1) + ")";
                break;
            case ErrorLocation::Kind::NEAR_TOKEN:
                out += l.token.empty() ? " (at end of input)" : " (near \"" + l.token + "\")";
                break;
        }
    }
    return out;
}

std::string_view to_string(CorrectionScope scope) { return scope == CorrectionScope::LOCAL ? "LOCAL" : "GLOBAL"; }

namespace {

CorrectionPlan fallback_plan(CorrectionPlan plan, std::string reason) {
    plan.scope = CorrectionScope::GLOBAL;
    plan.schema = SchemaSlice{SchemaSlice::Kind::FULL, {}};
    plan.target_fragment.reset();
    plan.fallback_reason = std::move(reason);
    return plan;
}

}  // namespace

CorrectionPlan clarify(const ParsedError& error, const FragmentTree& tree, const KnowledgeSnapshot& kb,
                       EmbeddingProvider& embedder, double strategy_threshold) {
    CorrectionPlan plan;
    plan.error_text = describe(error);
    const auto hit = retrieve_strategy(error_key(error), kb, embedder, strategy_threshold);
    if (!hit) return fallback_plan(std::move(plan), "no stored strategy matched the error");

    plan.strategy = *hit->item;
    plan.similarity = hit->similarity;
    plan.guidance = hit->item->guidance;
    if (hit->item->needs_schema) {
        plan.schema = SchemaSlice{SchemaSlice::Kind::TABLES, referenced_tables(tree.source)};
    }
    if (!hit->item->localized) {
        plan.scope = CorrectionScope::GLOBAL;
        return plan;
    }
    if (!error.location) return fallback_plan(std::move(plan), "localized strategy but the log has no location");
    const auto offset = resolve_offset(*error.location, tree.source);
    if (!offset) return fallback_plan(std::move(plan), "error location lies outside the query");
    plan.scope = CorrectionScope::LOCAL;
    plan.target_fragment = fragment_at(tree, *offset).id;
    return plan;
}

namespace {

const Fragment* find_fragment(const FragmentTree& tree, int id) {
    for (const auto& f : tree.fragments)
        if (f.id == id) return &f;
    return nullptr;
}

// Parent text with each child body elided; the target shows as a marker.
std::string enclosing_context(const FragmentTree& tree, const Fragment& target) {
    if (!target.parent_id) return {};
    const Fragment* parent = find_fragment(tree, *target.parent_id);
    if (parent == nullptr) return {};
    std::vector<const Fragment*> kids;
    for (int id : parent->children)
        if (const auto* k = find_fragment(tree, id)) kids.push_back(k);
    std::sort(kids.begin(), kids.end(), [](auto* a, auto* b) { return a->span.begin < b->span.begin; });
    std::string out;
    std::size_t cursor = parent->span.begin;
    for (const auto* k : kids) {
        out.append(tree.source, cursor, k->span.begin - cursor);
        out += k->id == target.id ? "<fragment " + std::to_string(k->id) + ">" : std::string("...");
        cursor = k->span.end;
    }
    out.append(tree.source, cursor, parent->span.end - cursor);
    return out;
}

std::optional<std::string> schema_text(const SchemaSlice& slice, const Catalog& catalog) {
    switch (slice.kind) {
        case SchemaSlice::Kind::NONE:
            return std::nullopt;
        case SchemaSlice::Kind::TABLES:
            return render_schema(slice.tables, catalog);
        case SchemaSlice::Kind::FULL: {
            if (catalog.empty()) return std::nullopt;
            std::vector<std::string> all;
            for (const auto& [name, info] : catalog) all.push_back(info.name.empty() ? name : info.name);
            return render_schema(all, catalog);
        }
    }
    return std::nullopt;
}

}  // namespace

CorrectionInputs prepare_data(const CorrectionPlan& plan, std::string_view query, const FragmentTree& tree,
                              const Catalog& catalog) {
    CorrectionInputs in;
    in.plan = plan;
    const Fragment* target = nullptr;
    if (plan.scope == CorrectionScope::LOCAL) {
        if (plan.target_fragment) target = find_fragment(tree, *plan.target_fragment);
        if (target == nullptr) {
            in.plan = fallback_plan(plan, "target fragment missing from the tree");
        }
    }

    in.slots.error = in.plan.error_text;
    in.slots.guidance = in.plan.guidance;
    in.slots.schema = schema_text(in.plan.schema, catalog);
    if (target != nullptr) {
        in.slots.local = true;
        in.slots.sql = target->text;
        in.slots.context = enclosing_context(tree, *target);
        in.span = target->span;
    } else {
        in.slots.local = false;
        in.slots.sql = std::string(query);
        in.span = sql::Span{0, query.size()};
    }
    return in;
}

std::string apply_correction(std::string_view query, const CorrectionInputs& inputs, std::string_view answer) {
    if (inputs.span.end > query.size() || inputs.span.begin > inputs.span.end) {
        throw Error(ErrorCode::INVALID_ARGUMENT, "correction span does not fit the query");
    }
    if (inputs.plan.scope != CorrectionScope::LOCAL) return std::string(answer);
    std::string out;
    out.reserve(query.size() + answer.size());
    out.append(query.substr(0, inputs.span.begin));
    out += answer;
    out.append(query.substr(inputs.span.end));
    return out;
}

namespace {

std::string ask(const CorrectionInputs& inputs, LlmProvider& llm) {
    std::string answer = prompts::extract_sql(llm.complete(prompts::correct(inputs.slots)));
    if (answer.empty()) throw Error(ErrorCode::REJECTED_RESPONSE, "correction response carried no SQL");
    return answer;
}

[[noreturn]] void still_invalid(const FragmentTree& tree, std::string_view original, const std::string& corrected) {
    throw Error(ErrorCode::STILL_INVALID, "corrected query does not parse (" + tree.diagnostic->message +
                                              ")\n--- original ---\n" + std::string(original) +
                                              "\n--- corrected ---\n" + corrected);
}

}  // namespace

CorrectionResult correct(std::string_view query, const CorrectionInputs& inputs, LlmProvider& llm) {
    CorrectionResult out;
    out.original = std::string(query);
    out.plan = inputs.plan;
    out.corrected = apply_correction(query, inputs, ask(inputs, llm));
    const auto tree = decompose(out.corrected);
    if (!tree.parsed()) still_invalid(tree, query, out.corrected);
    return out;
}

std::optional<std::string> diagnostic_log(const FragmentTree& tree) {
    if (tree.parsed()) return std::nullopt;
    const auto& d = *tree.diagnostic;
    return "SqlParseException: " + d.message + " at line " + std::to_string(d.line) + ", column " +
           std::to_string(d.column);
}

CorrectionResult SyntaxCorrector::fix(std::string_view query, std::string_view error_log, const Catalog& catalog,
                                      int max_rounds) const {
    if (max_rounds < 1) throw Error(ErrorCode::INVALID_ARGUMENT, "max_rounds must be at least 1");
    CorrectionResult out;
    out.original = std::string(query);
    std::string current(query);
    std::string log(error_log);
    for (int round = 1;; ++round) {
        const auto tree = decompose(current);
        const auto plan = clarify(parse_error_log(log), tree, kb_, embedder_);
        const auto inputs = prepare_data(plan, current, tree, catalog);
        std::string candidate = apply_correction(current, inputs, ask(inputs, llm_));
        const auto check = decompose(candidate);
        out.plan = inputs.plan;
        out.rounds = round;
        if (check.parsed()) {
            out.corrected = std::move(candidate);
            return out;
        }
        if (round >= max_rounds) still_invalid(check, query, candidate);
        log = *diagnostic_log(check);
        current = std::move(candidate);
    }
}

}  // namespace sqlgov
