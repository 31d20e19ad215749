#include "sqlgov/providers.hpp"

#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "sqlgov/error.hpp"
#include "sqlgov/templatize.hpp"

namespace sqlgov {

using nlohmann::json;

std::uint64_t fnv1a(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string fnv1a_hex(std::string_view text) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(text)));
    return buf;
}

std::string PromptEnvelope::render() const {
    std::string out;
    for (std::size_t i = 0; i < sections.size(); ++i) {
        if (i > 0) out += "\n  -\n";
        out += sections[i].name;
        out += ":\n";
        std::size_t pos = 0;
        const std::string& text = sections[i].text;
        bool first = true;
        while (pos <= text.size()) {
            const std::size_t nl = text.find('\n', pos);
            const std::string_view line =
                std::string_view(text).substr(pos, nl == std::string::npos ? std::string::npos : nl - pos);
            if (!first) out += '\n';
            if (!line.empty()) {
                out += "    ";
                out += line;
            }
            first = false;
            if (nl == std::string::npos) break;
            pos = nl + 1;
        }
    }
    return out;
}

std::string PromptEnvelope::section(std::string_view name) const {
    for (const auto& s : sections) {
        if (s.name == name) return s.text;
    }
    return {};
}

// ---- scripted LLM ---------------------------------------------------------

std::vector<PlaybookEntry> load_playbook(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IO_FAILURE, "cannot read playbook " + path);
    std::vector<PlaybookEntry> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const json j = json::parse(line);
            out.push_back({j.at("template_id").get<std::string>(), j.at("digest").get<std::string>(),
                           j.at("response").get<std::string>()});
        } catch (const json::exception& e) {
            throw Error(ErrorCode::IO_FAILURE, path + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

ScriptedLlm::ScriptedLlm(std::vector<PlaybookEntry> entries, Mode mode) : mode_(mode) {
    for (auto& e : entries) add(std::move(e));
}

void ScriptedLlm::add(PlaybookEntry entry) {
    table_[{std::move(entry.template_id), std::move(entry.digest)}] = std::move(entry.response);
}

std::string ScriptedLlm::complete(const PromptEnvelope& envelope) {
    ++calls_;
    const std::string digest = envelope.digest();
    const auto it = table_.find({envelope.template_id, digest});
    if (it != table_.end()) return it->second;
    ++misses_;
    if (miss_hook_) miss_hook_(envelope);
    if (mode_ == Mode::Strict) {
        throw Error(ErrorCode::MOCK_MISS, "no playbook entry for " + envelope.template_id + " digest " + digest);
    }
    return default_response(envelope);
}

std::string ScriptedLlm::default_response(const PromptEnvelope& envelope) {
    const std::string& id = envelope.template_id;
    if (id == "SCENARIO_1") return R"({"suggestions":[]})";
    if (id == "SCENARIO_2") return R"({"efficient":true})";
    if (id == "REWRITE" || id == "CORRECT") return envelope.section("SQL");
    if (id == "INTENT_EXTRACT") return R"({"summary":""})";
    if (id == "ALIGNMENT") return R"({"mapping":[]})";
    if (id == "RULE_GEN") return "{}";
    if (id.rfind("MODIFY_", 0) == 0) {
        return json{{"sql", envelope.section("SQL")}, {"explanation", ""}}.dump();
    }
    return {};
}

// ---- hashing embedder -----------------------------------------------------

HashingEmbedder::HashingEmbedder(std::size_t dimension) : dimension_(dimension) {
    if (dimension == 0) throw Error(ErrorCode::INVALID_ARGUMENT, "embedding dimension must be positive");
}

std::vector<std::string> HashingEmbedder::tokens(std::string_view text) {
    std::vector<std::string> out;
    std::string cur;
    for (unsigned char c : text) {
        if (std::isalnum(c) || c == '_' || c >= 0x80) {
            cur += static_cast<char>(std::tolower(c));
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

Vector HashingEmbedder::embed(std::string_view text) {
    ++calls_;
    if (text.find_first_not_of(" \t\r\n") == std::string_view::npos) {
        throw Error(ErrorCode::EMPTY_TEXT, "cannot embed blank text");
    }
    Vector v(dimension_, 0.0);
    auto toks = tokens(text);
    if (toks.empty()) toks.emplace_back(text);
    for (const auto& t : toks) v[fnv1a(t) % dimension_] += 1.0;
    return normalized(std::move(v));
}

// ---- simulated executor ---------------------------------------------------

std::vector<ExecFixture> load_exec_fixtures(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IO_FAILURE, "cannot read executor fixtures " + path);
    std::vector<ExecFixture> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const json j = json::parse(line);
            ExecFixture f;
            if (j.contains("template")) {
                f.sql_template = j["template"].get<std::string>();
            } else if (j.contains("sql_file")) {
                const auto file = std::filesystem::path(path).parent_path() / j["sql_file"].get<std::string>();
                std::ifstream sql_in(file, std::ios::binary);
                if (!sql_in) throw Error(ErrorCode::IO_FAILURE, "cannot read " + file.string());
                std::ostringstream ss;
                ss << sql_in.rdbuf();
                f.sql_template = templatize(ss.str());
            } else {
                f.sql_template = templatize(j.at("sql").get<std::string>());
            }
            const std::string status = j.value("status", "OK");
            f.outcome.status = status == "ERROR" ? ExecOutcome::Status::ERROR : ExecOutcome::Status::OK;
            f.outcome.elapsed = j.value("elapsed", 0.0);
            if (j.contains("rows")) f.outcome.rows = j["rows"].get<std::int64_t>();
            if (j.contains("error_log")) f.outcome.error_log = j["error_log"].get<std::string>();
            f.spread = j.value("spread", 0.0);
            f.cold_extra = j.value("cold_extra", 0.0);
            out.push_back(std::move(f));
        } catch (const json::exception& e) {
            throw Error(ErrorCode::IO_FAILURE, path + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

SimulatedExecutor::SimulatedExecutor(std::vector<ExecFixture> fixtures, std::uint64_t seed) : rng_(seed) {
    for (auto& f : fixtures) {
        std::string key = f.sql_template;
        fixtures_[std::move(key)] = std::move(f);
    }
}

ExecOutcome SimulatedExecutor::execute(std::string_view sql) {
    const std::string key = templatize(sql);
    std::lock_guard lock(mutex_);
    const auto it = fixtures_.find(key);
    if (it == fixtures_.end()) {
        ExecOutcome out;
        out.status = ExecOutcome::Status::ERROR;
        out.error_log = "ExecutionException: no fixture for query template " + key;
        return out;
    }
    const ExecFixture& f = it->second;
    ExecOutcome out = f.outcome;
    if (out.ok()) {
        const double u = std::uniform_real_distribution<double>(-1.0, 1.0)(rng_);
        out.elapsed = f.outcome.elapsed * (1.0 + f.spread * u);
        if (runs_[key]++ == 0) out.elapsed += f.cold_extra;
    }
    return out;
}

}  // namespace sqlgov
