#pragma once

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "misrob/errors.hpp"
#include "misrob/masked.hpp"

namespace misrob {

// Doubles are serialized with 17 significant digits, which round-trips every
// finite double exactly; missing entries are the literal token NA.
inline std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline std::string dataset_to_csv(const std::vector<MaskedSample>& samples,
                                  bool regression = false) {
    if (samples.empty()) throw DataError("dataset_to_csv: empty dataset");
    const int d = samples.front().dim();
    std::ostringstream out;
    const int n_covariates = regression ? d - 1 : d;
    for (int j = 0; j < n_covariates; ++j) out << (j ? "," : "") << "x" << (j + 1);
    if (regression) out << ",y";
    out << "\n";
    for (const auto& s : samples) {
        for (int j = 0; j < d; ++j) {
            if (j) out << ",";
            if (s.is_observed(j))
                out << format_double(s.value(j));
            else
                out << "NA";
        }
        out << "\n";
    }
    return out.str();
}

inline std::vector<MaskedSample> dataset_from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw DataError("dataset_from_csv: missing header");
    int d = 1;
    for (const char c : line) d += c == ',';

    std::vector<MaskedSample> out;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        Eigen::VectorXd v = Eigen::VectorXd::Zero(d);
        std::vector<std::uint8_t> mask(static_cast<std::size_t>(d), 0);
        std::size_t start = 0;
        for (int j = 0; j < d; ++j) {
            const std::size_t end = j + 1 < d ? line.find(',', start) : line.size();
            if (end == std::string::npos)
                throw DataError("dataset_from_csv: too few fields at line " +
                                std::to_string(line_no));
            const std::string field = line.substr(start, end - start);
            if (field != "NA") {
                char* rest = nullptr;
                v[j] = std::strtod(field.c_str(), &rest);
                if (rest == field.c_str())
                    throw DataError("dataset_from_csv: bad number '" + field + "' at line " +
                                    std::to_string(line_no));
                mask[static_cast<std::size_t>(j)] = 1;
            }
            start = end + 1;
        }
        out.push_back(MaskedSample::with_pattern(std::move(v), std::move(mask)));
    }
    if (out.empty()) throw DataError("dataset_from_csv: no rows");
    return out;
}

inline void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open for writing: " + path);
    f << text;
    if (!f) throw DataError("write failed: " + path);
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open: " + path);
    std::ostringstream out;
    out << f.rdbuf();
    return out.str();
}

inline bool file_exists(const std::string& path) {
    std::ifstream f(path);
    return f.good();
}

}  // namespace misrob
