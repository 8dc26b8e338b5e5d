#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace hepsel {

// One row of the accuracy table. CSV columns, in order:
// method,dataset,n,R,mean_accuracy,std_accuracy
struct AccuracyRow {
    std::string method;
    std::string dataset;
    std::size_t n = 0;
    std::size_t repeats = 1;
    std::optional<double> mean_accuracy; // empty cell / null when undefined
    double std_accuracy = 0.0;

    bool operator==(const AccuracyRow &) const = default;
};

struct Curve {
    std::string name;
    std::vector<std::pair<double, double>> points; // (bin_center, value)

    bool operator==(const Curve &) const = default;
};

struct Report {
    std::vector<AccuracyRow> rows;
    std::vector<Curve> curves;
    // Free-form extras (skipped problems, filter impact); JSON output only.
    nlohmann::ordered_json notes = nlohmann::ordered_json::object();
};

enum class ReportFormat { csv, json };

// json for a ".json" extension, csv otherwise.
ReportFormat format_for(const std::filesystem::path & path);

// The value, or null when empty.
nlohmann::ordered_json to_json_or_null(const std::optional<double> & value);

// Shortest decimal that round-trips the double.
std::string format_number(double value);

nlohmann::ordered_json report_to_json(const Report & report);
Report report_from_json(const nlohmann::ordered_json & json);
std::string accuracy_csv(const std::vector<AccuracyRow> & rows);

// CSV: the accuracy table goes to `path`, and each curve to a sibling
// "<stem>.<curve name>.csv" with header "bin_center,value". JSON: a single
// document. Throws io_error.
void emit_report(const Report & report, const std::filesystem::path & path, ReportFormat format);
void write_curve_csv(const Curve & curve, const std::filesystem::path & path);
std::filesystem::path curve_path(const std::filesystem::path & report_path, const std::string & curve_name);

void write_text(const std::filesystem::path & path, const std::string & text);

} // namespace hepsel
