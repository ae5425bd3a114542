#pragma once

#include <cstddef>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "biaslab/error.hpp"

// Minimal RFC 4180 reader/writer: quoted fields, doubled quotes, embedded
// separators and newlines inside quotes.
namespace biaslab::csv {

struct Row {
    std::vector<std::string> fields;
    std::size_t line = 0;  // 1-based line where the record starts
};

inline std::vector<Row> parse(std::istream &in) {
    std::vector<Row> rows;
    Row current;
    std::string field;
    bool in_quotes = false;
    bool field_started = false;
    bool row_has_content = false;
    std::size_t line = 1;
    current.line = 1;

    const auto end_field = [&] {
        current.fields.push_back(std::move(field));
        field.clear();
        field_started = false;
    };
    const auto end_row = [&] {
        if (row_has_content || !current.fields.empty()) {
            end_field();
            rows.push_back(std::move(current));
        }
        current = Row{};
        row_has_content = false;
    };

    char c = 0;
    while (in.get(c)) {
        if (in_quotes) {
            if (c == '"') {
                if (in.peek() == '"') {
                    in.get(c);
                    field.push_back('"');
                } else {
                    in_quotes = false;
                }
            } else {
                if (c == '\n') {
                    ++line;
                }
                field.push_back(c);
            }
            continue;
        }
        switch (c) {
            case '"':
                if (field_started && !field.empty()) {
                    fail(ErrorKind::invalid, "csv: stray quote, line " + std::to_string(line));
                }
                in_quotes = true;
                field_started = true;
                row_has_content = true;
                break;
            case ',':
                end_field();
                row_has_content = true;
                break;
            case '\r':
                break;
            case '\n':
                end_row();
                ++line;
                current.line = line;
                break;
            default:
                field.push_back(c);
                field_started = true;
                row_has_content = true;
        }
    }
    if (in_quotes) {
        fail(ErrorKind::invalid, "csv: unterminated quoted field, line " + std::to_string(current.line));
    }
    end_row();
    return rows;
}

inline void write_field(std::ostream &out, std::string_view value) {
    if (value.find_first_of(",\"\n\r") == std::string_view::npos) {
        out << value;
        return;
    }
    out << '"';
    for (const char c : value) {
        if (c == '"') {
            out << '"';
        }
        out << c;
    }
    out << '"';
}

inline void write_row(std::ostream &out, const std::vector<std::string> &fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i != 0) {
            out << ',';
        }
        write_field(out, fields[i]);
    }
    out << '\n';
}

}  // namespace biaslab::csv
