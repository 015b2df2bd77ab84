// CSV input/output with exact numeric round-tripping.
//
// Every emitted file is deterministic byte-for-byte: '%.17g' formatting (17
// significant digits round-trip any finite double), '.' decimal separator
// independent of locale, comma separation, one header line, LF endings, and
// '#'-prefixed parameter-echo lines ahead of the header so each artifact
// records the settings that produced it. Read errors carry the source name
// and one-based line number.
#pragma once

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace nvp1 {

// Shortest text that parses back to exactly the same double.
inline std::string format_g17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
}

namespace detail {

inline std::string trim(const std::string& s) {
    const std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return {};
    const std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

}  // namespace detail

// Strict double parsing: the whole token must be consumed.
inline double parse_double(const std::string& token, const std::string& where) {
    const std::string t = detail::trim(token);
    if (t.empty()) throw std::runtime_error(where + ": empty numeric field");
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(t.c_str(), &end);
    if (end != t.c_str() + t.size() || errno == ERANGE)
        throw std::runtime_error(where + ": malformed number '" + t + "'");
    return v;
}

// One rectangular numeric table plus the parameter lines echoed above it.
// A parameter with an empty key round-trips as a bare comment line.
struct CsvTable {
    std::vector<std::pair<std::string, std::string>> parameters;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
};

inline void write_csv(std::ostream& out, const CsvTable& table) {
    for (const auto& [key, value] : table.parameters) {
        if (key.empty())
            out << "# " << value << "\n";
        else
            out << "# " << key << " = " << value << "\n";
    }
    for (std::size_t c = 0; c < table.columns.size(); ++c)
        out << (c ? "," : "") << table.columns[c];
    out << "\n";
    for (const auto& row : table.rows) {
        for (std::size_t c = 0; c < row.size(); ++c)
            out << (c ? "," : "") << format_g17(row[c]);
        out << "\n";
    }
}

inline CsvTable read_csv(std::istream& in, const std::string& source) {
    CsvTable table;
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    auto at = [&]() { return source + ":" + std::to_string(line_no); };
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const std::string trimmed = detail::trim(line);
        if (trimmed.empty()) continue;
        if (trimmed.front() == '#') {
            if (have_header) throw std::runtime_error(at() + ": comment after the header");
            const std::string body = detail::trim(trimmed.substr(1));
            const std::size_t eq = body.find('=');
            if (eq == std::string::npos)
                table.parameters.emplace_back("", body);
            else
                table.parameters.emplace_back(detail::trim(body.substr(0, eq)),
                                              detail::trim(body.substr(eq + 1)));
            continue;
        }
        std::vector<std::string> tokens;
        std::string tok;
        std::istringstream row(trimmed);
        while (std::getline(row, tok, ',')) tokens.push_back(tok);
        if (!trimmed.empty() && trimmed.back() == ',') tokens.push_back("");
        if (!have_header) {
            for (std::string& t : tokens) {
                t = detail::trim(t);
                if (t.empty()) throw std::runtime_error(at() + ": empty column name");
            }
            table.columns = std::move(tokens);
            have_header = true;
            continue;
        }
        if (tokens.size() != table.columns.size())
            throw std::runtime_error(at() + ": expected " + std::to_string(table.columns.size()) +
                                     " fields, found " + std::to_string(tokens.size()));
        std::vector<double> values;
        values.reserve(tokens.size());
        for (const std::string& t : tokens) values.push_back(parse_double(t, at()));
        table.rows.push_back(std::move(values));
    }
    if (!have_header) throw std::runtime_error(source + ": no header line found");
    return table;
}

inline void write_csv_file(const std::string& path, const CsvTable& table) {
    std::ofstream out(path, std::ios::binary);  // binary: keep LF endings everywhere
    if (!out) throw std::runtime_error(path + ": cannot open for writing");
    write_csv(out, table);
    if (!out) throw std::runtime_error(path + ": write failed");
}

inline CsvTable read_csv_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error(path + ": cannot open for reading");
    return read_csv(in, path);
}

// Convenience accessor for a parameter echoed into a CSV artifact.
inline std::string find_parameter(const CsvTable& table, const std::string& key) {
    for (const auto& [k, v] : table.parameters)
        if (k == key) return v;
    throw std::runtime_error("missing '" + key + "' parameter line");
}

}  // namespace nvp1
