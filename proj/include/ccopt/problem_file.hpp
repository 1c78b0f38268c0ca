#pragma once

/**
 * @file problem_file.hpp
 * @brief Loader for the sectioned key = value problem format.
 *
 *   [problem]
 *   n = 2
 *   s = 1
 *   f = "(x1-1)^2 + (x2-1)^2"
 *   h = ["x1 + x2 - 1"]          # optional
 *   g = ["x1"]                   # optional
 *   [regularization]             # optional
 *   c = [0.3, 0.7]
 *   eps = 0.5
 *   override = false
 *   [points]                     # optional; length n (x) or 2n (x then y)
 *   origin = [0, 0]
 *   [tolerances]                 # optional overrides
 *   tol_feas = 1e-9
 *
 * '#' starts a comment outside quoted strings. A list may continue over
 * several lines until its closing bracket.
 */

#include "regmpoc.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

namespace ccopt {

class FileFormatError : public InputError {
public:
    FileFormatError(const std::string& what, int line)
        : InputError(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
    int line() const noexcept { return line_; }

private:
    int line_;
};

struct Regularization {
    Vector c;
    double eps = 0.0;
    bool override_assumption1 = false;
};

struct NamedPoint {
    std::string name;
    Vector values;
};

struct ProblemFile {
    Problem problem;
    std::optional<Regularization> regularization;
    std::vector<NamedPoint> points;
    Tolerances tolerances;

    const NamedPoint* find_point(const std::string& name) const {
        for (const auto& p : points)
            if (p.name == name) return &p;
        return nullptr;
    }

    /// Regularized problem; the override flag is or-ed with `force_override`.
    RegularizedProblem regularized(bool force_override = false) const {
        if (!regularization) throw InputError("the file has no [regularization] section");
        return make_regularized(problem, regularization->c, regularization->eps,
                                regularization->override_assumption1 || force_override, tolerances);
    }
};

namespace detail {

struct FileValue {
    enum class Kind { Number, String, Bool, List } kind = Kind::Number;
    double number = 0.0;
    std::string text;  // string payload, or the raw token for numbers
    bool boolean = false;
    std::vector<FileValue> items;
};

class ValueReader {
public:
    ValueReader(std::string_view src, int line) : src_(src), line_(line) {}

    FileValue read_all() {
        FileValue v = read();
        skip_ws();
        if (pos_ != src_.size()) fail("trailing characters after value");
        return v;
    }

private:
    [[noreturn]] void fail(const std::string& msg) const { throw FileFormatError(msg, line_); }

    void skip_ws() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    }

    FileValue read() {
        skip_ws();
        if (pos_ >= src_.size()) fail("missing value");
        const char c = src_[pos_];
        if (c == '"') return read_string();
        if (c == '[') return read_list();
        return read_scalar();
    }

    FileValue read_string() {
        FileValue v;
        v.kind = FileValue::Kind::String;
        ++pos_;
        while (pos_ < src_.size() && src_[pos_] != '"') {
            if (src_[pos_] == '\\' && pos_ + 1 < src_.size()) ++pos_;
            v.text += src_[pos_++];
        }
        if (pos_ >= src_.size()) fail("unterminated string");
        ++pos_;
        return v;
    }

    FileValue read_list() {
        FileValue v;
        v.kind = FileValue::Kind::List;
        ++pos_;
        skip_ws();
        if (pos_ < src_.size() && src_[pos_] == ']') {
            ++pos_;
            return v;
        }
        for (;;) {
            v.items.push_back(read());
            skip_ws();
            if (pos_ >= src_.size()) fail("unterminated list");
            if (src_[pos_] == ',') {
                ++pos_;
                skip_ws();
                if (pos_ < src_.size() && src_[pos_] == ']') {  // trailing comma
                    ++pos_;
                    return v;
                }
                continue;
            }
            if (src_[pos_] == ']') {
                ++pos_;
                return v;
            }
            fail("expected ',' or ']' in list");
        }
    }

    FileValue read_scalar() {
        const std::size_t start = pos_;
        while (pos_ < src_.size() && src_[pos_] != ',' && src_[pos_] != ']' &&
               !std::isspace(static_cast<unsigned char>(src_[pos_])))
            ++pos_;
        const std::string_view tok = src_.substr(start, pos_ - start);
        FileValue v;
        v.text = std::string(tok);
        if (tok == "true" || tok == "false") {
            v.kind = FileValue::Kind::Bool;
            v.boolean = tok == "true";
            return v;
        }
        const char* first = tok.data();
        const char* last = tok.data() + tok.size();
        if (!tok.empty() && *first == '+') ++first;
        auto res = std::from_chars(first, last, v.number);
        if (tok.empty() || res.ec != std::errc{} || res.ptr != last) fail("malformed value '" + std::string(tok) + "'");
        return v;
    }

    std::string_view src_;
    std::size_t pos_ = 0;
    int line_;
};

inline std::string strip_comment(const std::string& line) {
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"' && (i == 0 || line[i - 1] != '\\')) quoted = !quoted;
        if (line[i] == '#' && !quoted) return line.substr(0, i);
    }
    return line;
}

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline int bracket_balance(const std::string& s) {
    int depth = 0;
    bool quoted = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '"' && (i == 0 || s[i - 1] != '\\')) quoted = !quoted;
        if (quoted) continue;
        if (s[i] == '[') ++depth;
        if (s[i] == ']') --depth;
    }
    return depth;
}

struct Entry {
    FileValue value;
    int line = 0;
};

using Section = std::map<std::string, Entry>;

inline double as_number(const Entry& e, const std::string& key) {
    if (e.value.kind != FileValue::Kind::Number) throw FileFormatError(key + " must be a number", e.line);
    return e.value.number;
}

inline int as_integer(const Entry& e, const std::string& key) {
    const double v = as_number(e, key);
    if (v != std::floor(v) || std::abs(v) > 1e9) throw FileFormatError(key + " must be an integer", e.line);
    return static_cast<int>(v);
}

inline std::string as_string(const Entry& e, const std::string& key) {
    if (e.value.kind != FileValue::Kind::String) throw FileFormatError(key + " must be a quoted string", e.line);
    return e.value.text;
}

inline Vector as_vector(const Entry& e, const std::string& key) {
    if (e.value.kind != FileValue::Kind::List) throw FileFormatError(key + " must be a list of numbers", e.line);
    Vector v(static_cast<Eigen::Index>(e.value.items.size()));
    for (std::size_t i = 0; i < e.value.items.size(); ++i) {
        if (e.value.items[i].kind != FileValue::Kind::Number)
            throw FileFormatError(key + " must be a list of numbers", e.line);
        v(static_cast<Eigen::Index>(i)) = e.value.items[i].number;
    }
    return v;
}

inline std::vector<std::string> as_strings(const Entry& e, const std::string& key) {
    if (e.value.kind != FileValue::Kind::List) throw FileFormatError(key + " must be a list of quoted strings", e.line);
    std::vector<std::string> out;
    for (const auto& item : e.value.items) {
        if (item.kind != FileValue::Kind::String) throw FileFormatError(key + " must be a list of quoted strings", e.line);
        out.push_back(item.text);
    }
    return out;
}

}  // namespace detail

/// Parses problem-file text. Throws FileFormatError, ParseError or InputError.
inline ProblemFile parse_problem_file(const std::string& text) {
    using namespace detail;
    std::map<std::string, Section> sections;
    std::vector<std::string> point_order;
    std::string current;
    std::istringstream in(text);
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        std::string line = trim(strip_comment(raw));
        if (line.empty()) continue;
        if (line.front() == '[' && line.back() == ']' && line.find('=') == std::string::npos) {
            current = trim(line.substr(1, line.size() - 2));
            static const char* known[] = {"problem", "regularization", "points", "tolerances"};
            bool ok = false;
            for (const char* k : known) ok = ok || current == k;
            if (!ok) throw FileFormatError("unknown section [" + current + "]", lineno);
            sections[current];
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw FileFormatError("expected key = value", lineno);
        if (current.empty()) throw FileFormatError("key outside of any section", lineno);
        const std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        const int start_line = lineno;
        while (bracket_balance(value) > 0 && std::getline(in, raw)) {
            ++lineno;
            value += " " + trim(strip_comment(raw));
        }
        if (key.empty()) throw FileFormatError("empty key", start_line);
        auto& sec = sections[current];
        if (sec.count(key)) throw FileFormatError("duplicate key '" + key + "'", start_line);
        sec[key] = Entry{ValueReader(value, start_line).read_all(), start_line};
        if (current == "points") point_order.push_back(key);
    }

    if (!sections.count("problem")) throw FileFormatError("missing [problem] section", 0);
    const Section& ps = sections["problem"];
    for (const char* k : {"n", "s", "f"})
        if (!ps.count(k)) throw FileFormatError(std::string("[problem] is missing '") + k + "'", 0);
    for (const auto& [k, e] : ps)
        if (k != "n" && k != "s" && k != "f" && k != "h" && k != "g")
            throw FileFormatError("unknown key '" + k + "' in [problem]", e.line);
    const int n = as_integer(ps.at("n"), "n");
    const int s = as_integer(ps.at("s"), "s");
    std::vector<std::string> h, g;
    if (ps.count("h")) h = as_strings(ps.at("h"), "h");
    if (ps.count("g")) g = as_strings(ps.at("g"), "g");

    ProblemFile file{Problem::from_text(n, s, as_string(ps.at("f"), "f"), h, g), std::nullopt, {}, {}};

    if (sections.count("tolerances")) {
        for (const auto& [k, e] : sections["tolerances"]) {
            const double v = as_number(e, k);
            if (k == "tol_feas") file.tolerances.tol_feas = v;
            else if (k == "tol_act") file.tolerances.tol_act = v;
            else if (k == "tol_rank") file.tolerances.tol_rank = v;
            else if (k == "tol_strict") file.tolerances.tol_strict = v;
            else throw FileFormatError("unknown tolerance '" + k + "'", e.line);
        }
        try {
            file.tolerances.validate();
        } catch (const std::invalid_argument& err) {
            throw FileFormatError(err.what(), 0);
        }
    }

    if (sections.count("regularization")) {
        const Section& rs = sections["regularization"];
        if (!rs.count("c") || !rs.count("eps")) throw FileFormatError("[regularization] needs 'c' and 'eps'", 0);
        Regularization reg;
        reg.c = as_vector(rs.at("c"), "c");
        if (reg.c.size() != n) throw FileFormatError("c must have length n", rs.at("c").line);
        reg.eps = as_number(rs.at("eps"), "eps");
        if (reg.eps < 0) throw FileFormatError("eps must be nonnegative", rs.at("eps").line);
        if (rs.count("override")) {
            const auto& e = rs.at("override");
            if (e.value.kind != FileValue::Kind::Bool) throw FileFormatError("override must be true or false", e.line);
            reg.override_assumption1 = e.value.boolean;
        }
        for (const auto& [k, e] : rs)
            if (k != "c" && k != "eps" && k != "override")
                throw FileFormatError("unknown key '" + k + "' in [regularization]", e.line);
        file.regularization = reg;
    }

    if (sections.count("points")) {
        const Section& pts = sections["points"];
        for (const auto& name : point_order) {
            const Entry& e = pts.at(name);
            Vector v = as_vector(e, name);
            if (v.size() != n && v.size() != 2 * n)
                throw FileFormatError("point '" + name + "' must have length n or 2n", e.line);
            file.points.push_back({name, std::move(v)});
        }
    }
    return file;
}

inline ProblemFile load_problem_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_problem_file(buf.str());
}

}  // namespace ccopt
