#pragma once

#include <string>
#include <vector>

namespace ragfb {

// One exported LMS page. Modules run for six teaching weeks, so week is 1..6.
struct CoursePage {
    std::string module_id;
    int week = 1;
    std::string title;
    std::string html;
};

struct Section {
    std::string section_id;  // "1.5", or "0" for preamble text before the first heading
    std::string heading;     // full heading line verbatim, e.g. "1.5 How do we define security?"
    std::string body;        // plain text, no markup
    std::string module_id;
    int week = 1;
};

struct CourseChunk {
    std::string chunk_id;  // "<module_id>:<section_id>:<ordinal>"
    std::string text;
    std::string section_ref;
    int token_estimate = 0;
    // Byte offsets of `text` within the owning section body. Used by the
    // coverage checks and by anyone stitching chunks back together.
    std::size_t char_start = 0;
    std::size_t char_end = 0;
};

struct ChunkPolicy {
    std::size_t target_chars = 800;
    std::size_t overlap_chars = 200;

    bool valid() const { return overlap_chars < target_chars; }
};

/// Strips markup from a tolerably well-formed HTML fragment.
///
/// Output is plain text blocks separated by one blank line. Headings become
/// single-line blocks; list items become one line each within their block;
/// whitespace inside a line collapses to single spaces. Script/style bodies,
/// comments, tables and images are dropped (dropped tables/images add a note
/// to `notes` when provided). HTML entities are decoded.
///
/// Throws Error(empty_document) when nothing extractable remains.
std::string parse_html(const std::string& html, std::vector<std::string>* notes = nullptr);

std::string parse_html(const CoursePage& page, std::vector<std::string>* notes = nullptr);

/// Splits parse_html output into sections at heading lines of the form
/// "<n>.<n>... <text>". Text before the first heading (or all text when no
/// heading matches) becomes section "0".
std::vector<Section> split_sections(const std::string& text, const std::string& module_id,
                                    int week);

/// Cuts a section body into overlapping chunks. Interior edges snap backward
/// to the latest sentence terminator within 20% of target_chars; consecutive
/// chunks share exactly policy.overlap_chars bytes except where the
/// minimum-progress guard applies on degenerate policies.
std::vector<CourseChunk> chunk_section(const Section& section, const ChunkPolicy& policy);

/// ceil(bytes / 4); the documented prompt-budget heuristic.
int estimate_tokens(const std::string& text);

/// True if `c` ends a sentence for chunk-snapping purposes.
inline bool is_sentence_terminator(char c) { return c == '.' || c == '!' || c == '?'; }

}  // namespace ragfb
