#include "plasmode/csv.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "plasmode/errors.hpp"

namespace plasmode {

namespace {

// Character-level RFC-4180 reader: quoted fields may contain commas,
// escaped quotes ("") and newlines. Accepts both LF and CRLF endings.
std::vector<std::vector<std::string>> parse_records(const std::string& text) {
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> record;
    std::string field;
    bool in_quotes = false;
    bool field_started = false;

    auto end_field = [&] {
        record.push_back(std::move(field));
        field.clear();
        field_started = false;
    };
    auto end_record = [&] {
        end_field();
        records.push_back(std::move(record));
        record.clear();
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                field += c;
            }
            continue;
        }
        switch (c) {
            case '"':
                if (!field_started && field.empty()) {
                    in_quotes = true;
                    field_started = true;
                } else {
                    field += c;  // stray quote inside unquoted field: keep verbatim
                }
                break;
            case ',':
                end_field();
                break;
            case '\r':
                if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
                end_record();
                break;
            case '\n':
                end_record();
                break;
            default:
                field += c;
                field_started = true;
        }
    }
    if (in_quotes) throw InvalidArgument("unterminated quoted field in CSV input");
    if (field_started || !field.empty() || !record.empty()) end_record();
    return records;
}

double parse_cell(const std::string& cell, std::size_t row, std::size_t col) {
    if (cell.empty()) throw ParseError(row, col, "empty cell");
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(cell.c_str(), &end);
    if (end != cell.c_str() + cell.size())
        throw ParseError(row, col, "not a number: '" + cell + "'");
    // Underflow to a denormal (ERANGE with a finite result) is kept as-is so
    // that any double we can print survives a round-trip; only overflow is an
    // error, and the non-finite check below reports it.
    if (errno == ERANGE && (v == HUGE_VAL || v == -HUGE_VAL))
        throw ParseError(row, col, "out of range: '" + cell + "'");
    if (!std::isfinite(v))
        throw ParseError(row, col, "non-finite value: '" + cell + "'");
    return v;
}

bool needs_quoting(const std::string& s) {
    return s.find_first_of(",\"\n\r") != std::string::npos;
}

std::string escape_field(const std::string& s) {
    if (!needs_quoting(s)) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += '"';
    return out;
}

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open file: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

CsvTable read_csv_table(const std::filesystem::path& path) {
    auto records = parse_records(slurp(path));
    if (records.empty()) throw InvalidArgument("empty CSV file: " + path.string());
    CsvTable t;
    t.header = std::move(records.front());
    t.rows.assign(records.begin() + 1, records.end());
    return t;
}

Dataset load_csv(const std::filesystem::path& path, const LoadOptions& opts) {
    if (!std::filesystem::exists(path))
        throw IoError("missing file: " + path.string());
    auto records = parse_records(slurp(path));
    if (records.empty()) throw InvalidArgument("CSV has no header row: " + path.string());

    const auto& header = records.front();
    const std::size_t first_data_col = opts.first_column_is_id ? 1 : 0;
    if (header.size() <= first_data_col)
        throw InvalidArgument("CSV header has no data columns");

    std::vector<std::string> names(header.begin() + static_cast<std::ptrdiff_t>(first_data_col),
                                   header.end());

    std::optional<std::size_t> outcome_idx;  // index into names
    if (opts.outcome_column) {
        for (std::size_t j = 0; j < names.size(); ++j)
            if (names[j] == *opts.outcome_column) outcome_idx = j;
        if (!outcome_idx)
            throw InvalidArgument("outcome column not found: " + *opts.outcome_column);
    }

    const std::size_t n = records.size() - 1;
    const std::size_t p_total = names.size();
    const std::size_t p = p_total - (outcome_idx ? 1 : 0);
    if (p == 0) throw InvalidArgument("no covariate columns left after outcome extraction");

    Eigen::MatrixXd X(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
    Eigen::VectorXd y;
    if (outcome_idx) y.resize(static_cast<Eigen::Index>(n));
    std::vector<std::string> row_ids;
    row_ids.reserve(n);

    for (std::size_t i = 0; i < n; ++i) {
        const auto& rec = records[i + 1];
        const std::size_t file_row = i + 2;  // 1-based, header is row 1
        if (rec.size() != header.size())
            throw ParseError(file_row, rec.size() + 1,
                             "expected " + std::to_string(header.size()) + " fields, got " +
                                 std::to_string(rec.size()));
        if (opts.first_column_is_id) {
            row_ids.push_back(rec[0]);
        } else {
            char buf[32];
            std::snprintf(buf, sizeof(buf), "r%06zu", i + 1);
            row_ids.emplace_back(buf);
        }
        std::size_t xj = 0;
        for (std::size_t j = 0; j < p_total; ++j) {
            const std::size_t file_col = first_data_col + j + 1;  // 1-based
            const double v = parse_cell(rec[first_data_col + j], file_row, file_col);
            if (outcome_idx && j == *outcome_idx) {
                y(static_cast<Eigen::Index>(i)) = v;
            } else {
                X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(xj++)) = v;
            }
        }
    }

    std::vector<std::string> covariate_names;
    covariate_names.reserve(p);
    for (std::size_t j = 0; j < p_total; ++j)
        if (!(outcome_idx && j == *outcome_idx)) covariate_names.push_back(names[j]);

    if (outcome_idx)
        return make_dataset(std::move(X), std::move(covariate_names), std::move(row_ids),
                            std::move(y), *opts.outcome_column);
    return make_dataset(std::move(X), std::move(covariate_names), std::move(row_ids));
}

void write_csv(const Dataset& ds, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path.string());

    out << "id";
    for (const auto& name : ds.column_names) out << ',' << escape_field(name);
    if (ds.y) out << ',' << escape_field(ds.outcome_name);
    out << '\n';

    for (Eigen::Index i = 0; i < ds.n(); ++i) {
        out << escape_field(ds.row_ids[static_cast<std::size_t>(i)]);
        for (Eigen::Index j = 0; j < ds.p(); ++j) out << ',' << format_double(ds.X(i, j));
        if (ds.y) out << ',' << format_double((*ds.y)(i));
        out << '\n';
    }
    out.flush();
    if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace plasmode
