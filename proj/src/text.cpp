#include "autocut/text.hpp"

#include <cctype>

namespace autocut {

std::string normalize_key(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    bool pending_space = false;
    for (unsigned char c : s) {
        if (std::isspace(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        out.push_back(static_cast<char>(std::tolower(c)));
    }
    return out;
}

bool is_cjk_codepoint(std::uint32_t cp) {
    return (cp >= 0x4E00 && cp <= 0x9FFF)    // Han
           || (cp >= 0x3400 && cp <= 0x4DBF) // Han extension A
           || (cp >= 0xF900 && cp <= 0xFAFF) // Han compatibility
           || (cp >= 0x3040 && cp <= 0x30FF) // kana
           || (cp >= 0xAC00 && cp <= 0xD7AF); // Hangul syllables
}

namespace {

bool is_cjk_separator(std::uint32_t cp) {
    // Fullwidth/CJK punctuation breaks words but is not itself a word.
    return (cp >= 0x3000 && cp <= 0x303F) || (cp >= 0xFF00 && cp <= 0xFFEF);
}

// Decodes one UTF-8 codepoint; malformed bytes decode as themselves so
// counting never throws.
std::uint32_t next_codepoint(const std::string& s, std::size_t& i) {
    const unsigned char c = static_cast<unsigned char>(s[i]);
    std::size_t extra = 0;
    std::uint32_t cp = c;
    if (c >= 0xF0) {
        extra = 3;
        cp = c & 0x07u;
    } else if (c >= 0xE0) {
        extra = 2;
        cp = c & 0x0Fu;
    } else if (c >= 0xC0) {
        extra = 1;
        cp = c & 0x1Fu;
    }
    if (extra > 0 && i + extra >= s.size()) { // truncated sequence
        ++i;
        return c;
    }
    for (std::size_t k = 1; k <= extra; ++k) {
        const unsigned char cc = static_cast<unsigned char>(s[i + k]);
        if ((cc & 0xC0u) != 0x80u) {
            ++i;
            return c;
        }
        cp = (cp << 6) | (cc & 0x3Fu);
    }
    i += extra + 1;
    return cp;
}

} // namespace

std::size_t word_count(const std::string& utf8) {
    std::size_t count = 0;
    bool in_word = false;
    std::size_t i = 0;
    while (i < utf8.size()) {
        const std::uint32_t cp = next_codepoint(utf8, i);
        if (is_cjk_codepoint(cp)) {
            if (in_word) {
                ++count;
                in_word = false;
            }
            ++count;
        } else if (cp < 0x80 ? std::isspace(static_cast<int>(cp)) != 0 : is_cjk_separator(cp)) {
            if (in_word) {
                ++count;
                in_word = false;
            }
        } else {
            in_word = true;
        }
    }
    if (in_word) {
        ++count;
    }
    return count;
}

} // namespace autocut
