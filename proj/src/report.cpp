#include "hepsel/report.hpp"

#include "hepsel/errors.hpp"

#include <fstream>
#include <sstream>

namespace hepsel {

ReportFormat format_for(const std::filesystem::path & path) {
    return path.extension() == ".json" ? ReportFormat::json : ReportFormat::csv;
}

nlohmann::ordered_json to_json_or_null(const std::optional<double> & value) {
    return value ? nlohmann::ordered_json(*value) : nlohmann::ordered_json(nullptr);
}

std::string format_number(double value) { return nlohmann::json(value).dump(); }

nlohmann::ordered_json report_to_json(const Report & report) {
    nlohmann::ordered_json doc;
    auto rows = nlohmann::ordered_json::array();
    for (const auto & r : report.rows) {
        nlohmann::ordered_json row;
        row["method"] = r.method;
        row["dataset"] = r.dataset;
        row["n"] = r.n;
        row["R"] = r.repeats;
        row["mean_accuracy"] = to_json_or_null(r.mean_accuracy);
        row["std_accuracy"] = r.std_accuracy;
        rows.push_back(std::move(row));
    }
    doc["accuracy"] = std::move(rows);
    if (!report.curves.empty()) {
        auto curves = nlohmann::ordered_json::object();
        for (const auto & c : report.curves) {
            auto points = nlohmann::ordered_json::array();
            for (const auto & [x, y] : c.points) {
                points.push_back({{"bin_center", x}, {"value", y}});
            }
            curves[c.name] = std::move(points);
        }
        doc["curves"] = std::move(curves);
    }
    if (!report.notes.empty()) {
        doc["notes"] = report.notes;
    }
    return doc;
}

Report report_from_json(const nlohmann::ordered_json & doc) {
    Report report;
    for (const auto & row : doc.at("accuracy")) {
        AccuracyRow r;
        r.method = row.at("method").get<std::string>();
        r.dataset = row.at("dataset").get<std::string>();
        r.n = row.at("n").get<std::size_t>();
        r.repeats = row.at("R").get<std::size_t>();
        if (!row.at("mean_accuracy").is_null()) {
            r.mean_accuracy = row.at("mean_accuracy").get<double>();
        }
        r.std_accuracy = row.at("std_accuracy").get<double>();
        report.rows.push_back(std::move(r));
    }
    if (auto it = doc.find("curves"); it != doc.end()) {
        for (auto c = it->begin(); c != it->end(); ++c) {
            Curve curve{c.key(), {}};
            for (const auto & p : c.value()) {
                curve.points.emplace_back(p.at("bin_center").get<double>(), p.at("value").get<double>());
            }
            report.curves.push_back(std::move(curve));
        }
    }
    if (auto it = doc.find("notes"); it != doc.end()) {
        report.notes = *it;
    }
    return report;
}

std::string accuracy_csv(const std::vector<AccuracyRow> & rows) {
    std::ostringstream out;
    out << "method,dataset,n,R,mean_accuracy,std_accuracy\n";
    for (const auto & r : rows) {
        out << r.method << ',' << r.dataset << ',' << r.n << ',' << r.repeats << ','
            << (r.mean_accuracy ? format_number(*r.mean_accuracy) : "") << ',' << format_number(r.std_accuracy)
            << '\n';
    }
    return out.str();
}

void write_text(const std::filesystem::path & path, const std::string & text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw io_error("cannot write " + path.string());
    }
    out << text;
    if (!out) {
        throw io_error("write failed for " + path.string());
    }
}

std::filesystem::path curve_path(const std::filesystem::path & report_path, const std::string & curve_name) {
    auto p = report_path;
    p.replace_filename(report_path.stem().string() + "." + curve_name + ".csv");
    return p;
}

void write_curve_csv(const Curve & curve, const std::filesystem::path & path) {
    std::ostringstream out;
    out << "bin_center,value\n";
    for (const auto & [x, y] : curve.points) {
        out << format_number(x) << ',' << format_number(y) << '\n';
    }
    write_text(path, out.str());
}

void emit_report(const Report & report, const std::filesystem::path & path, ReportFormat format) {
    if (format == ReportFormat::json) {
        write_text(path, report_to_json(report).dump(2) + "\n");
        return;
    }
    write_text(path, accuracy_csv(report.rows));
    for (const auto & curve : report.curves) {
        write_curve_csv(curve, curve_path(path, curve.name));
    }
}

} // namespace hepsel
