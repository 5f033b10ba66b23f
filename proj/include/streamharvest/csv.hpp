#pragma once

#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "errors.hpp"

namespace streamharvest {

/// 17 significant digits, enough to read back the exact double.
inline std::string format_number(double x) {
    if (std::isnan(x))
        return "nan";
    if (std::isinf(x))
        return x > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
    if (res.ec != std::errc())
        throw IoError("number formatting failed");
    return std::string(buf, res.ptr);
}

/// A rectangular table with optional leading "# " comment lines.
struct Table {
    std::vector<std::string> comments;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    void add_row(std::vector<std::string> row) {
        if (row.size() != header.size())
            throw ArgumentError("row has " + std::to_string(row.size()) + " fields, header has " +
                                std::to_string(header.size()));
        rows.push_back(std::move(row));
    }
};

inline std::string quote_field(const std::string& f) {
    if (f.find_first_of(",\"\r\n") == std::string::npos)
        return f;
    std::string out = "\"";
    for (char ch : f) {
        if (ch == '"')
            out += '"';
        out += ch;
    }
    return out + '"';
}

inline void write_csv(const Table& t, std::ostream& os) {
    auto line = [&](const std::vector<std::string>& fields) {
        for (std::size_t i = 0; i < fields.size(); ++i)
            os << (i ? "," : "") << quote_field(fields[i]);
        os << '\n';
    };
    for (const auto& c : t.comments)
        os << "# " << c << '\n';
    line(t.header);
    for (const auto& r : t.rows)
        line(r);
}

inline std::string to_csv(const Table& t) {
    std::ostringstream os;
    write_csv(t, os);
    return os.str();
}

/// Writes to `path`, or to `fallback` when path is empty.
inline void emit_csv(const Table& t, const std::string& path, std::ostream& fallback) {
    if (path.empty()) {
        write_csv(t, fallback);
        fallback.flush();
        if (!fallback)
            throw IoError("failed writing CSV to standard output");
        return;
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw IoError("cannot open " + path + " for writing");
    write_csv(t, out);
    out.close();
    if (!out)
        throw IoError("failed writing " + path);
}

/// Minimal reader for tables produced by write_csv: skips "#" comment lines
/// and handles quoted fields.
inline Table parse_csv(const std::string& text) {
    Table t;
    std::vector<std::vector<std::string>> records;
    std::size_t i = 0;
    while (i < text.size()) {
        if (text[i] == '#') {
            const std::size_t end = text.find('\n', i);
            std::string c = text.substr(i, end == std::string::npos ? std::string::npos : end - i);
            t.comments.push_back(c.rfind("# ", 0) == 0 ? c.substr(2) : c.substr(1));
            i = end == std::string::npos ? text.size() : end + 1;
            continue;
        }
        std::vector<std::string> rec;
        std::string field;
        bool quoted = false;
        for (; i < text.size(); ++i) {
            const char ch = text[i];
            if (quoted) {
                if (ch == '"' && i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else if (ch == '"') {
                    quoted = false;
                } else {
                    field += ch;
                }
            } else if (ch == '"') {
                quoted = true;
            } else if (ch == ',') {
                rec.push_back(std::move(field));
                field.clear();
            } else if (ch == '\n') {
                ++i;
                break;
            } else {
                field += ch;
            }
        }
        rec.push_back(std::move(field));
        records.push_back(std::move(rec));
    }
    if (!records.empty()) {
        t.header = std::move(records.front());
        t.rows.assign(std::make_move_iterator(records.begin() + 1),
                      std::make_move_iterator(records.end()));
    }
    return t;
}

} // namespace streamharvest
