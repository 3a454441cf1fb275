#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "synthelite/chem/reaction.hpp"
#include "synthelite/llm/backend.hpp"

namespace synthelite::index {

/// Sentence a describer answers with for a template it rejects.
inline constexpr const char* kImplausibleSentence =
    "This reaction template represents a chemically implausible transformation.";

struct TemplateRecord {
    chem::RetroTemplate tmpl;
    std::int64_t count = 0;
    std::string description;
    bool implausible = false;

    const std::string& id() const { return tmpl.id(); }
};

/// Reads a template library: JSON lines with id, smarts, count (and
/// optionally description, implausible), or tab-separated id, smarts,
/// count with an optional header row. Throws ParseError / TemplateError.
std::vector<TemplateRecord> load_library(const std::filesystem::path& path);

/// One JSON line per record in the library format above.
std::string record_to_json_line(const TemplateRecord& record);

struct DescribeOptions {
    int parallelism = 4;
    int tag_retries = 2;
};

/// Fills description / implausible for every record using the template
/// description prompt. Order-preserving; BackendError propagates.
std::vector<TemplateRecord> describe_templates(std::vector<TemplateRecord> records, const llm::LlmClient& llm,
                                               const DescribeOptions& options = {});

} // namespace synthelite::index
