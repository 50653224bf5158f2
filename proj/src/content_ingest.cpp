#include "ragfb/content_ingest.hpp"

#include "ragfb/errors.hpp"

#include <algorithm>
#include <cctype>
#include <regex>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace ragfb {

namespace {

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

bool is_space_byte(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

std::string collapse_ws(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    bool pending_space = false;
    for (char c : s) {
        if (is_space_byte(c)) {
            pending_space = !out.empty();
        } else {
            if (pending_space) out.push_back(' ');
            pending_space = false;
            out.push_back(c);
        }
    }
    return out;
}

void append_utf8(std::string& out, unsigned long cp) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xc0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xe0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
    } else {
        out.push_back(static_cast<char>(0xf0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3f)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
    }
}

const std::unordered_map<std::string, std::string>& named_entities() {
    static const std::unordered_map<std::string, std::string> table = {
        {"amp", "&"},    {"lt", "<"},      {"gt", ">"},      {"quot", "\""},
        {"apos", "'"},   {"nbsp", " "},    {"ndash", "–"}, {"mdash", "—"},
        {"hellip", "…"}, {"lsquo", "‘"}, {"rsquo", "’"},
        {"ldquo", "“"}, {"rdquo", "”"}, {"copy", "©"},
        {"reg", "®"}, {"deg", "°"}, {"times", "×"}, {"shy", ""},
        {"middot", "·"}, {"bull", "•"}, {"sect", "§"},
    };
    return table;
}

// Decodes the entity starting at html[pos] (which is '&'). Returns the decoded
// text and advances pos past the entity, or returns "&" verbatim when the
// sequence is not a recognisable entity.
std::string decode_entity(const std::string& html, std::size_t& pos) {
    std::size_t semi = html.find(';', pos + 1);
    if (semi == std::string::npos || semi - pos > 12) {
        ++pos;
        return "&";
    }
    std::string name = html.substr(pos + 1, semi - pos - 1);
    if (!name.empty() && name[0] == '#') {
        unsigned long cp = 0;
        try {
            cp = (name.size() > 1 && (name[1] == 'x' || name[1] == 'X'))
                     ? std::stoul(name.substr(2), nullptr, 16)
                     : std::stoul(name.substr(1), nullptr, 10);
        } catch (const std::exception&) {
            ++pos;
            return "&";
        }
        pos = semi + 1;
        std::string out;
        append_utf8(out, cp);
        return out;
    }
    auto it = named_entities().find(lower(name));
    if (it == named_entities().end()) {
        ++pos;
        return "&";
    }
    pos = semi + 1;
    return it->second;
}

bool is_heading_tag(const std::string& name) {
    return name.size() == 2 && name[0] == 'h' && name[1] >= '1' && name[1] <= '6';
}

const std::unordered_set<std::string>& block_tags() {
    static const std::unordered_set<std::string> tags = {
        "p",          "div",    "section", "article", "blockquote", "pre",
        "figure",     "header", "footer",  "main",    "aside",      "form",
        "fieldset",   "dl",     "dt",      "dd",      "address",    "nav",
    };
    return tags;
}

// Elements whose entire content is dropped.
const std::unordered_set<std::string>& skip_tags() {
    static const std::unordered_set<std::string> tags = {"script", "style", "table", "head",
                                                         "noscript", "svg", "iframe"};
    return tags;
}

struct TextBuilder {
    std::vector<std::vector<std::string>> blocks;
    std::vector<std::string> cur_block;
    std::string cur_line;
    bool in_heading = false;

    void flush_line() {
        std::string line = collapse_ws(cur_line);
        cur_line.clear();
        if (!line.empty()) cur_block.push_back(std::move(line));
    }

    void flush_block() {
        flush_line();
        if (!cur_block.empty()) {
            if (in_heading && cur_block.size() > 1) {
                // A heading is always a single line, whatever markup it held.
                std::string joined = cur_block[0];
                for (std::size_t i = 1; i < cur_block.size(); ++i) joined += " " + cur_block[i];
                cur_block = {joined};
            }
            blocks.push_back(std::move(cur_block));
            cur_block.clear();
        }
        in_heading = false;
    }

    std::string finish() {
        flush_block();
        std::string out;
        for (std::size_t b = 0; b < blocks.size(); ++b) {
            if (b) out += "\n\n";
            for (std::size_t l = 0; l < blocks[b].size(); ++l) {
                if (l) out += "\n";
                out += blocks[b][l];
            }
        }
        return out;
    }
};

struct TagToken {
    std::string name;
    bool closing = false;
    bool self_closing = false;
};

// Reads a tag starting at html[pos] == '<'. Leaves pos just past the '>'.
TagToken read_tag(const std::string& html, std::size_t& pos) {
    TagToken tok;
    std::size_t i = pos + 1;
    if (i < html.size() && html[i] == '/') {
        tok.closing = true;
        ++i;
    }
    while (i < html.size() && (std::isalnum(static_cast<unsigned char>(html[i])) || html[i] == '-'))
        tok.name.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(html[i++]))));
    // Skip attributes, honouring quoted values that may contain '>'.
    char quote = 0;
    for (; i < html.size(); ++i) {
        char c = html[i];
        if (quote) {
            if (c == quote) quote = 0;
        } else if (c == '"' || c == '\'') {
            quote = c;
        } else if (c == '>') {
            if (i > pos && html[i - 1] == '/') tok.self_closing = true;
            ++i;
            break;
        }
    }
    pos = i;
    return tok;
}

}  // namespace

std::string parse_html(const std::string& html, std::vector<std::string>* notes) {
    TextBuilder tb;
    int container_depth = 0;  // open block-level elements; paragraph breaks on
                              // blank lines apply only outside them
    bool p_open = false;
    std::size_t pos = 0;
    const std::size_t n = html.size();

    while (pos < n) {
        char c = html[pos];
        if (c == '<') {
            if (html.compare(pos, 4, "<!--") == 0) {
                std::size_t end = html.find("-->", pos + 4);
                pos = (end == std::string::npos) ? n : end + 3;
                continue;
            }
            if (pos + 1 < n && (html[pos + 1] == '!' || html[pos + 1] == '?')) {
                std::size_t end = html.find('>', pos);
                pos = (end == std::string::npos) ? n : end + 1;
                continue;
            }
            if (pos + 1 >= n || (!std::isalpha(static_cast<unsigned char>(html[pos + 1])) &&
                                 html[pos + 1] != '/')) {
                tb.cur_line.push_back('<');
                ++pos;
                continue;
            }
            TagToken tok = read_tag(html, pos);
            if (tok.name.empty()) continue;

            if (!tok.closing && skip_tags().count(tok.name)) {
                if ((tok.name == "table") && notes)
                    notes->push_back("dropped table markup");
                if (!tok.self_closing) {
                    std::string close = "</" + tok.name;
                    std::size_t scan = pos;
                    std::size_t found = std::string::npos;
                    // Case-insensitive scan for the matching close tag.
                    while (scan + close.size() <= n) {
                        if (html[scan] == '<' &&
                            lower(html.substr(scan, close.size())) == close) {
                            found = scan;
                            break;
                        }
                        ++scan;
                    }
                    if (found == std::string::npos) {
                        pos = n;  // unterminated; drop the rest
                    } else {
                        std::size_t gt = html.find('>', found);
                        pos = (gt == std::string::npos) ? n : gt + 1;
                    }
                }
                continue;
            }
            if (tok.name == "br") {
                tb.flush_line();
            } else if (tok.name == "hr") {
                tb.flush_block();
            } else if (tok.name == "img") {
                if (!tok.closing && notes) notes->push_back("dropped image");
            } else if (is_heading_tag(tok.name)) {
                tb.flush_block();
                if (!tok.closing) {
                    tb.in_heading = true;
                    ++container_depth;
                } else {
                    container_depth = std::max(0, container_depth - 1);
                }
            } else if (tok.name == "p") {
                if (!tok.closing && p_open) {
                    // Implicitly closed paragraph ("<p>a<p>b").
                    tb.flush_block();
                    container_depth = std::max(0, container_depth - 1);
                }
                tb.flush_block();
                if (tok.closing) {
                    p_open = false;
                    container_depth = std::max(0, container_depth - 1);
                } else {
                    p_open = true;
                    ++container_depth;
                }
            } else if (tok.name == "ul" || tok.name == "ol") {
                // A top-level list is one block with one line per item; a
                // nested list keeps feeding lines into the enclosing block.
                if (!tok.closing) {
                    if (container_depth == 0) tb.flush_block();
                    ++container_depth;
                } else {
                    container_depth = std::max(0, container_depth - 1);
                    if (container_depth == 0) tb.flush_block();
                }
            } else if (tok.name == "li") {
                tb.flush_line();
            } else if (block_tags().count(tok.name)) {
                tb.flush_block();
                if (!tok.closing)
                    ++container_depth;
                else
                    container_depth = std::max(0, container_depth - 1);
            }
            // Inline tags (a, em, span, ...) contribute nothing structural.
            continue;
        }
        if (c == '&') {
            tb.cur_line += decode_entity(html, pos);
            continue;
        }
        if (is_space_byte(c)) {
            int newlines = 0;
            while (pos < n && is_space_byte(html[pos])) {
                if (html[pos] == '\n') ++newlines;
                ++pos;
            }
            if (newlines >= 2 && container_depth == 0 && !tb.in_heading) {
                tb.flush_block();
            } else {
                tb.cur_line.push_back(' ');
            }
            continue;
        }
        tb.cur_line.push_back(c);
        ++pos;
    }

    std::string out = tb.finish();
    if (out.empty()) throw Error(ErrorCode::empty_document, "no extractable text");
    return out;
}

std::string parse_html(const CoursePage& page, std::vector<std::string>* notes) {
    return parse_html(page.html, notes);
}

namespace {

const std::regex& heading_re() {
    static const std::regex re(R"(^(\d+(?:\.\d+)*)\s+\S.*$)");
    return re;
}

std::string strip_blank_edges(const std::string& s) {
    std::size_t begin = 0;
    std::size_t end = s.size();
    while (begin < end && is_space_byte(s[begin])) ++begin;
    while (end > begin && is_space_byte(s[end - 1])) --end;
    return s.substr(begin, end - begin);
}

}  // namespace

std::vector<Section> split_sections(const std::string& text, const std::string& module_id,
                                    int week) {
    std::vector<Section> sections;
    std::string cur_body;
    Section cur{"0", "", "", module_id, week};

    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        std::smatch m;
        if (std::regex_match(line, m, heading_re())) {
            cur.body = strip_blank_edges(cur_body);
            // An empty preamble produces no section "0".
            if (cur.section_id != "0" || !cur.body.empty()) sections.push_back(cur);
            cur = Section{m[1].str(), line, "", module_id, week};
            cur_body.clear();
        } else {
            cur_body += line;
            cur_body += '\n';
        }
    }
    cur.body = strip_blank_edges(cur_body);
    sections.push_back(cur);
    return sections;
}

std::vector<CourseChunk> chunk_section(const Section& section, const ChunkPolicy& policy) {
    std::vector<CourseChunk> chunks;
    const std::string& body = section.body;
    const std::size_t n = body.size();
    if (n == 0) return chunks;

    const std::size_t target = policy.target_chars;
    const std::size_t overlap = policy.overlap_chars;
    const std::size_t window = target / 5;  // snap backward up to 20% of target

    std::size_t start = 0;
    int ordinal = 0;
    while (start < n) {
        std::size_t end = std::min(start + target, n);
        if (end < n && window > 0) {
            std::size_t lo = (end > window) ? end - window : 0;
            lo = std::max(lo, start + 1);
            for (std::size_t e = end; e > lo; --e) {
                if (is_sentence_terminator(body[e - 1])) {
                    end = e;
                    break;
                }
            }
        }
        CourseChunk chunk;
        chunk.chunk_id = section.module_id + ":" + section.section_id + ":" +
                         std::to_string(ordinal++);
        chunk.text = body.substr(start, end - start);
        chunk.section_ref = section.section_id;
        chunk.token_estimate = estimate_tokens(chunk.text);
        chunk.char_start = start;
        chunk.char_end = end;
        chunks.push_back(std::move(chunk));
        if (end == n) break;
        std::size_t next = (end > overlap) ? end - overlap : 0;
        start = std::max(next, start + 1);
    }
    return chunks;
}

int estimate_tokens(const std::string& text) {
    return static_cast<int>((text.size() + 3) / 4);
}

}  // namespace ragfb
