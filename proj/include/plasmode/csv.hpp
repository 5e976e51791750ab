#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "plasmode/dataset.hpp"

namespace plasmode {

struct LoadOptions {
    std::optional<std::string> outcome_column;  // moved from X to y when given
    bool first_column_is_id = false;
};

/// Loads an RFC-4180-style CSV (comma delimiter, mandatory header, '.'
/// decimal separator, quoted fields allowed). Every non-id cell must parse
/// as a finite number; anything else raises ParseError with its 1-based
/// file position. Throws IoError for a missing file and InvalidArgument for
/// duplicate header names or an unknown outcome column.
Dataset load_csv(const std::filesystem::path& path, const LoadOptions& opts = {});

/// Writes the dataset as CSV: id column first, covariates in order, outcome
/// last when present. Numbers are printed with 17 significant digits so that
/// load_csv(write_csv(ds)) reproduces every value bit-exactly.
void write_csv(const Dataset& ds, const std::filesystem::path& path);

/// 17-significant-digit representation; round-trips any finite double.
std::string format_double(double v);

/// Raw table access used by the report/evaluate stages to re-read emitted
/// CSVs. Returns header + string cells; numeric parsing is the caller's job.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};
CsvTable read_csv_table(const std::filesystem::path& path);

}  // namespace plasmode
