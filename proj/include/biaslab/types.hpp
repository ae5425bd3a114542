#pragma once

#include <array>
#include <string>
#include <string_view>
#include <utility>

#include "biaslab/error.hpp"

namespace biaslab {

enum class Label { neutral = 0, biased = 1 };
enum class CorpusKind { gold, distant, unlabeled };
enum class Leaning { far_left, left, center_left, center, center_right, right, far_right };
enum class Standard { high, partisan };

namespace detail {

template <class E, std::size_t N>
using NameTable = std::array<std::pair<E, std::string_view>, N>;

template <class E, std::size_t N>
std::string_view name_of(const NameTable<E, N> &table, E value) {
    for (const auto &[e, name] : table) {
        if (e == value) {
            return name;
        }
    }
    return "?";
}

template <class E, std::size_t N>
E parse_name(const NameTable<E, N> &table, std::string_view text, std::string_view what) {
    for (const auto &[e, name] : table) {
        if (name == text) {
            return e;
        }
    }
    fail(ErrorKind::invalid, "unknown " + std::string(what) + " '" + std::string(text) + "'");
}

inline constexpr NameTable<Label, 2> label_names{{{Label::neutral, "neutral"}, {Label::biased, "biased"}}};
inline constexpr NameTable<CorpusKind, 3> kind_names{
    {{CorpusKind::gold, "gold"}, {CorpusKind::distant, "distant"}, {CorpusKind::unlabeled, "unlabeled"}}};
inline constexpr NameTable<Leaning, 7> leaning_names{{{Leaning::far_left, "far-left"},
                                                       {Leaning::left, "left"},
                                                       {Leaning::center_left, "center-left"},
                                                       {Leaning::center, "center"},
                                                       {Leaning::center_right, "center-right"},
                                                       {Leaning::right, "right"},
                                                       {Leaning::far_right, "far-right"}}};
inline constexpr NameTable<Standard, 2> standard_names{{{Standard::high, "high"}, {Standard::partisan, "partisan"}}};

}  // namespace detail

inline std::string_view to_string(Label v) { return detail::name_of(detail::label_names, v); }
inline std::string_view to_string(CorpusKind v) { return detail::name_of(detail::kind_names, v); }
inline std::string_view to_string(Leaning v) { return detail::name_of(detail::leaning_names, v); }
inline std::string_view to_string(Standard v) { return detail::name_of(detail::standard_names, v); }

inline Label parse_label(std::string_view s) { return detail::parse_name(detail::label_names, s, "label"); }
inline CorpusKind parse_corpus_kind(std::string_view s) {
    return detail::parse_name(detail::kind_names, s, "corpus kind");
}
inline Leaning parse_leaning(std::string_view s) { return detail::parse_name(detail::leaning_names, s, "leaning"); }
inline Standard parse_standard(std::string_view s) {
    return detail::parse_name(detail::standard_names, s, "journalistic standard");
}

inline constexpr std::array<Leaning, 7> all_leanings{Leaning::far_left,     Leaning::left,  Leaning::center_left,
                                                     Leaning::center,       Leaning::center_right,
                                                     Leaning::right,        Leaning::far_right};
inline constexpr std::array<Standard, 2> all_standards{Standard::high, Standard::partisan};

inline int to_binary(Label l) noexcept { return l == Label::biased ? 1 : 0; }
inline Label from_binary(int y) noexcept { return y != 0 ? Label::biased : Label::neutral; }

}  // namespace biaslab
