#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <iostream>
#include <istream>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "biaslab/error.hpp"
#include "biaslab/random.hpp"

namespace biaslab {

using TokenId = std::uint32_t;

namespace utf8 {

struct CodePoint {
    char32_t value;
    std::size_t size;  // encoded length in bytes
    bool valid;
};

/// Decodes the code point starting at `pos`. Invalid sequences yield a
/// one-byte invalid code point so that byte offsets always advance.
inline CodePoint decode(std::string_view s, std::size_t pos) {
    const auto b0 = static_cast<unsigned char>(s[pos]);
    if (b0 < 0x80) {
        return {b0, 1, true};
    }
    std::size_t len = 0;
    char32_t cp = 0;
    if ((b0 & 0xe0) == 0xc0) {
        len = 2;
        cp = b0 & 0x1f;
    } else if ((b0 & 0xf0) == 0xe0) {
        len = 3;
        cp = b0 & 0x0f;
    } else if ((b0 & 0xf8) == 0xf0) {
        len = 4;
        cp = b0 & 0x07;
    } else {
        return {b0, 1, false};
    }
    if (pos + len > s.size()) {
        return {b0, 1, false};
    }
    for (std::size_t i = 1; i < len; ++i) {
        const auto b = static_cast<unsigned char>(s[pos + i]);
        if ((b & 0xc0) != 0x80) {
            return {b0, 1, false};
        }
        cp = (cp << 6) | (b & 0x3f);
    }
    static constexpr char32_t min_for_len[] = {0, 0, 0x80, 0x800, 0x10000};
    if (cp < min_for_len[len] || cp > 0x10ffff || (cp >= 0xd800 && cp <= 0xdfff)) {
        return {b0, 1, false};
    }
    return {cp, len, true};
}

inline void append(std::string &out, char32_t cp) {
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

}  // namespace utf8

namespace chars {

inline bool is_space(char32_t c) noexcept {
    return (c >= 0x09 && c <= 0x0d) || c == 0x20 || c == 0x85 || c == 0xa0 || c == 0x1680 ||
           (c >= 0x2000 && c <= 0x200a) || c == 0x2028 || c == 0x2029 || c == 0x202f || c == 0x205f ||
           c == 0x3000;
}

inline bool is_punct(char32_t c) noexcept {
    if (c < 0x80) {
        return (c >= 0x21 && c <= 0x2f) || (c >= 0x3a && c <= 0x40) || (c >= 0x5b && c <= 0x60) ||
               (c >= 0x7b && c <= 0x7e);
    }
    switch (c) {
        case 0xa1: case 0xa7: case 0xab: case 0xb6: case 0xb7: case 0xbb: case 0xbf:
            return true;
        default:
            break;
    }
    return (c >= 0x2010 && c <= 0x2027) || (c >= 0x2030 && c <= 0x205e) || (c >= 0x3001 && c <= 0x3003);
}

/// Simple one-to-one lowercase mapping for Latin, Latin-1, Latin Extended-A,
/// Greek and Cyrillic capitals. Every mapping keeps the UTF-8 byte length.
inline char32_t to_lower(char32_t c) noexcept {
    if (c >= 'A' && c <= 'Z') {
        return c + 0x20;
    }
    if (c < 0xc0) {
        return c;
    }
    if (c <= 0xde && c != 0xd7) {
        return c + 0x20;
    }
    if (c >= 0x100 && c <= 0x17f) {
        if ((c <= 0x12f) || (c >= 0x132 && c <= 0x137) || (c >= 0x14a && c <= 0x177)) {
            return (c % 2 == 0) ? c + 1 : c;
        }
        if ((c >= 0x139 && c <= 0x148) || (c >= 0x179 && c <= 0x17e)) {
            return (c % 2 == 1) ? c + 1 : c;
        }
        if (c == 0x178) {
            return 0xff;
        }
        return c;
    }
    if (c >= 0x391 && c <= 0x3a9 && c != 0x3a2) {
        return c + 0x20;
    }
    if (c >= 0x410 && c <= 0x42f) {
        return c + 0x20;
    }
    if (c >= 0x400 && c <= 0x40f) {
        return c + 0x50;
    }
    return c;
}

}  // namespace chars

/// Matching key for duplicate detection across corpora: lowercased,
/// punctuation removed, whitespace runs collapsed to one space, trimmed.
inline std::string normalize_for_matching(std::string_view text) {
    std::string out;
    bool pending_space = false;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const auto cp = utf8::decode(text, pos);
        if (cp.valid && chars::is_space(cp.value)) {
            pending_space = !out.empty();
        } else if (cp.valid && chars::is_punct(cp.value)) {
            // dropped
        } else {
            if (pending_space) {
                out.push_back(' ');
                pending_space = false;
            }
            if (cp.valid) {
                utf8::append(out, chars::to_lower(cp.value));
            } else {
                out.push_back(text[pos]);
            }
        }
        pos += cp.size;
    }
    return out;
}

enum class NormalizationForm { none };

struct TokenizerRules {
    bool lowercase = true;
    bool split_punctuation = true;
    NormalizationForm normalization = NormalizationForm::none;
};

struct Token {
    std::string text;
    std::size_t begin = 0;  // byte offsets into the original text
    std::size_t end = 0;
};

/// Whitespace + punctuation word tokenizer. Each punctuation character is a
/// token of its own; invalid UTF-8 bytes are kept as word characters.
class Tokenizer {
  public:
    Tokenizer() = default;
    explicit Tokenizer(TokenizerRules rules) : rules_(rules) {}

    [[nodiscard]] const TokenizerRules &rules() const noexcept { return rules_; }

    [[nodiscard]] std::string version() const {
        std::string v = "wsp-1";
        v += rules_.lowercase ? "+lc" : "";
        v += rules_.split_punctuation ? "+ps" : "";
        v += "+nf-none";
        return v;
    }

    [[nodiscard]] std::vector<Token> tokenize_with_spans(std::string_view text) const {
        std::vector<Token> tokens;
        Token current;
        bool open = false;
        const auto flush = [&] {
            if (open) {
                tokens.push_back(std::move(current));
                current = Token{};
                open = false;
            }
        };
        std::size_t pos = 0;
        while (pos < text.size()) {
            const auto cp = utf8::decode(text, pos);
            if (cp.valid && chars::is_space(cp.value)) {
                flush();
            } else if (cp.valid && rules_.split_punctuation && chars::is_punct(cp.value)) {
                flush();
                tokens.push_back(Token{std::string(text.substr(pos, cp.size)), pos, pos + cp.size});
            } else {
                if (!open) {
                    current.begin = pos;
                    open = true;
                }
                if (cp.valid) {
                    utf8::append(current.text, rules_.lowercase ? chars::to_lower(cp.value) : cp.value);
                } else {
                    current.text.push_back(text[pos]);
                }
                current.end = pos + cp.size;
            }
            pos += cp.size;
        }
        flush();
        return tokens;
    }

    [[nodiscard]] std::vector<std::string> tokenize(std::string_view text) const {
        std::vector<std::string> out;
        for (auto &t : tokenize_with_spans(text)) {
            out.push_back(std::move(t.text));
        }
        return out;
    }

    [[nodiscard]] std::size_t count_tokens(std::string_view text) const { return tokenize_with_spans(text).size(); }

  private:
    TokenizerRules rules_;
};

/// Token ↔ id mapping. Ids are dense; 0 is padding and 1 is unknown.
class Vocabulary {
  public:
    static constexpr TokenId padding_id = 0;
    static constexpr TokenId unknown_id = 1;
    static constexpr std::size_t specials_count = 2;
    static constexpr std::size_t default_min_frequency = 2;

    Vocabulary() = default;

    /// Tokens in id order, specials excluded.
    static Vocabulary from_tokens(std::vector<std::string> tokens) {
        Vocabulary v;
        v.tokens_ = std::move(tokens);
        for (std::size_t i = 0; i < v.tokens_.size(); ++i) {
            const auto &t = v.tokens_[i];
            if (t.empty()) {
                fail(ErrorKind::invalid, "vocabulary: empty token at line " + std::to_string(i + 1));
            }
            if (!v.index_.emplace(t, static_cast<TokenId>(i + specials_count)).second) {
                fail(ErrorKind::invalid, "vocabulary: duplicate token '" + t + "'");
            }
        }
        return v;
    }

    /// Keeps tokens with corpus frequency >= min_frequency, ordered by
    /// (frequency desc, token asc).
    static Vocabulary build(const Tokenizer &tokenizer, std::span<const std::string> texts,
                            std::size_t min_frequency = default_min_frequency) {
        if (min_frequency < 1) {
            fail(ErrorKind::invalid, "vocabulary: min-frequency must be >= 1");
        }
        std::map<std::string, std::size_t> counts;
        for (const auto &text : texts) {
            for (auto &token : tokenizer.tokenize(text)) {
                ++counts[std::move(token)];
            }
        }
        if (texts.empty()) {
            std::clog << "warning: vocabulary built from an empty corpus; only special tokens present\n";
        }
        std::vector<std::pair<std::string, std::size_t>> kept;
        for (auto &[token, n] : counts) {
            if (n >= min_frequency) {
                kept.emplace_back(token, n);
            }
        }
        std::stable_sort(kept.begin(), kept.end(),
                         [](const auto &a, const auto &b) { return a.second > b.second; });
        std::vector<std::string> tokens;
        tokens.reserve(kept.size());
        for (auto &[token, n] : kept) {
            tokens.push_back(std::move(token));
        }
        return from_tokens(std::move(tokens));
    }

    [[nodiscard]] std::size_t size() const noexcept { return tokens_.size() + specials_count; }

    [[nodiscard]] TokenId id_of(std::string_view token) const {
        const auto it = index_.find(std::string(token));
        return it == index_.end() ? unknown_id : it->second;
    }

    [[nodiscard]] bool contains(std::string_view token) const { return index_.count(std::string(token)) != 0; }

    [[nodiscard]] std::string token_of(TokenId id) const {
        if (id == padding_id) {
            return "<pad>";
        }
        if (id == unknown_id) {
            return "<unk>";
        }
        if (id >= size()) {
            fail(ErrorKind::invalid, "vocabulary: id out of range");
        }
        return tokens_[id - specials_count];
    }

    /// Non-special tokens in id order.
    [[nodiscard]] const std::vector<std::string> &tokens() const noexcept { return tokens_; }

    void save(std::ostream &out) const {
        for (const auto &t : tokens_) {
            out << t << '\n';
        }
    }

    static Vocabulary load(std::istream &in) {
        std::vector<std::string> tokens;
        std::string line;
        while (std::getline(in, line)) {
            tokens.push_back(line);
        }
        return from_tokens(std::move(tokens));
    }

    /// Stable identifier derived from the token list.
    [[nodiscard]] std::string reference() const {
        Fnv1a h;
        h.u64(tokens_.size());
        for (const auto &t : tokens_) {
            h.text(t);
        }
        return hex64(h.value());
    }

    friend bool operator==(const Vocabulary &a, const Vocabulary &b) { return a.tokens_ == b.tokens_; }

  private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, TokenId> index_;
};

struct EncodedSequence {
    std::vector<TokenId> ids;  // unpadded, ids.size() == length
    std::size_t length = 0;
    std::size_t max_length = 0;

    friend bool operator==(const EncodedSequence &, const EncodedSequence &) = default;
};

inline constexpr std::size_t default_max_length = 64;

inline EncodedSequence encode(std::string_view text, const Tokenizer &tokenizer, const Vocabulary &vocab,
                              std::size_t max_length = default_max_length) {
    if (max_length < 1) {
        fail(ErrorKind::invalid, "encode: max-length must be >= 1");
    }
    EncodedSequence seq;
    seq.max_length = max_length;
    for (const auto &token : tokenizer.tokenize(text)) {
        if (seq.ids.size() == max_length) {
            break;
        }
        seq.ids.push_back(vocab.id_of(token));
    }
    seq.length = seq.ids.size();
    return seq;
}

}  // namespace biaslab
