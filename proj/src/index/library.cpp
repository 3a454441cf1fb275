#include "synthelite/index/library.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "synthelite/error.hpp"
#include "synthelite/llm/prompt.hpp"
#include "synthelite/llm/protocol.hpp"
#include "synthelite/util/io.hpp"

namespace synthelite::index {

using nlohmann::json;

namespace {

std::int64_t parse_count(const std::string& text, const std::string& where) {
    try {
        std::size_t used = 0;
        const auto n = std::stoll(text, &used);
        if (used != text.size() || n < 0) throw std::invalid_argument("count");
        return n;
    } catch (const std::exception&) {
        throw ParseError(where + ": count must be a non-negative integer, got '" + text + "'");
    }
}

} // namespace

std::vector<TemplateRecord> load_library(const std::filesystem::path& path) {
    const auto lines = util::read_lines(path);
    std::vector<TemplateRecord> out;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const auto line = util::trim(lines[i]);
        if (line.empty() || line[0] == '#') continue;
        const std::string where = path.string() + ":" + std::to_string(i + 1);
        if (line[0] == '{') {
            json j;
            try {
                j = json::parse(line);
            } catch (const json::exception& e) {
                throw ParseError(where + ": " + e.what());
            }
            if (!j.contains("id") || !j.contains("smarts")) throw ParseError(where + ": record needs id and smarts");
            std::int64_t count = 0;
            if (j.contains("count")) {
                const auto& c = j["count"];
                count = c.is_number_integer() ? c.get<std::int64_t>() : parse_count(c.dump(), where);
                if (count < 0) throw ParseError(where + ": negative count");
            }
            TemplateRecord r{chem::RetroTemplate(j["id"].is_string() ? j["id"].get<std::string>() : j["id"].dump(),
                                                 j["smarts"].get<std::string>()),
                             count, j.value("description", ""), j.value("implausible", false)};
            r.implausible = r.implausible || r.description == kImplausibleSentence;
            out.push_back(std::move(r));
            continue;
        }
        const auto fields = util::split(line, '\t');
        if (fields.size() < 2) throw ParseError(where + ": expected id<TAB>smarts<TAB>count");
        if (out.empty() && fields[0] == "id" && fields[1] == "smarts") continue;
        const std::int64_t count = fields.size() > 2 ? parse_count(util::trim(fields[2]), where) : 0;
        out.push_back({chem::RetroTemplate(util::trim(fields[0]), util::trim(fields[1])), count, {}, false});
    }
    return out;
}

std::string record_to_json_line(const TemplateRecord& r) {
    return json{{"id", r.id()},
                {"smarts", r.tmpl.smarts()},
                {"count", r.count},
                {"description", r.description},
                {"implausible", r.implausible}}
        .dump();
}

namespace {

struct DescribePrompts {
    std::string system;
    llm::PromptTemplate input;
    std::string instruction;
    std::string examples;
};

void describe_one(TemplateRecord& record, const DescribePrompts& p, const llm::LlmClient& llm, int retries) {
    std::vector<llm::Message> messages{
        {"system", p.system},
        {"user", p.input.render({{"SMARTS_REACTION", record.tmpl.forward_smarts()}}) + "\n" + p.instruction +
                     "\n\n" + p.examples},
    };
    for (int attempt = 0; attempt <= retries; ++attempt) {
        const auto reply = llm.complete(messages, "describe:" + record.id());
        try {
            auto description = llm::parse_description(reply);
            if (description.empty()) throw TagMissingError("empty <description>");
            record.implausible = description == kImplausibleSentence;
            record.description = std::move(description);
            return;
        } catch (const TagMissingError& e) {
            messages.push_back({"assistant", reply});
            messages.push_back({"user", llm::correction_message("description", e.what())});
        }
    }
    record.description = kImplausibleSentence;
    record.implausible = true;
}

} // namespace

std::vector<TemplateRecord> describe_templates(std::vector<TemplateRecord> records, const llm::LlmClient& llm,
                                               const DescribeOptions& options) {
    if (records.empty()) return records;
    const DescribePrompts prompts{util::read_file(util::asset_dir() / "prompts" / "describe_role.txt"),
                                  llm::load_prompt("describe_input"),
                                  util::read_file(util::asset_dir() / "prompts" / "describe_instruction.txt"),
                                  util::read_file(util::asset_dir() / "prompts" / "describe_examples.txt")};
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        while (true) {
            const auto i = next.fetch_add(1);
            if (i >= records.size()) return;
            {
                std::lock_guard lock(failure_mutex);
                if (failure) return;
            }
            try {
                describe_one(records[i], prompts, llm, options.tag_retries);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                return;
            }
        }
    };
    const auto n = static_cast<std::size_t>(std::max(1, options.parallelism));
    std::vector<std::thread> threads;
    for (std::size_t t = 0; t < std::min(n, records.size()); ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
    if (failure) std::rethrow_exception(failure);
    return records;
}

} // namespace synthelite::index
