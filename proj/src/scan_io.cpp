#include "leafmatch/scan_io.hpp"
#include "leafmatch/log.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace leafmatch {

namespace {

bool parse_double(std::string_view token, double& out)
{
    // from_chars for double is available in libstdc++ 11
    auto result = std::from_chars(token.data(), token.data() + token.size(), out);
    return result.ec == std::errc() && result.ptr == token.data() + token.size();
}

bool parse_int(std::string_view token, int& out)
{
    auto result = std::from_chars(token.data(), token.data() + token.size(), out);
    if (result.ec == std::errc() && result.ptr == token.data() + token.size()) {
        return true;
    }
    // Some exports write labels as floats ("2.000000").
    double value = 0.0;
    if (parse_double(token, value) && std::isfinite(value) && value == std::floor(value)
        && std::abs(value) < 1e9) {
        out = static_cast<int>(value);
        return true;
    }
    return false;
}

std::vector<std::string_view> split_ws(std::string_view line)
{
    std::vector<std::string_view> tokens;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) {
            ++i;
        }
        std::size_t start = i;
        while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) {
            ++i;
        }
        if (i > start) {
            tokens.push_back(line.substr(start, i - start));
        }
    }
    return tokens;
}

}  // namespace

ScanName parse_scan_name(const std::filesystem::path& path)
{
    const std::string stem = path.stem().string();
    ScanName name{stem, 0};
    const auto underscore = stem.find('_');
    if (underscore == std::string::npos || underscore == 0) {
        return name;
    }
    std::size_t pos = underscore + 1;
    while (pos < stem.size()) {
        const auto next = stem.find('_', pos);
        const std::string token = stem.substr(pos, next == std::string::npos ? std::string::npos : next - pos);
        int value = 0;
        if (!token.empty() && std::all_of(token.begin(), token.end(), [](unsigned char c) { return std::isdigit(c); })
            && parse_int(token, value)) {
            name.plant_id = stem.substr(0, underscore);
            name.time_index = value;
            return name;
        }
        if (next == std::string::npos) {
            break;
        }
        pos = next + 1;
    }
    return name;
}

LabeledScan parse_scan(std::istream& in, const LabelConfig& labels)
{
    LabeledScan scan;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto tokens = split_ws(line);
        if (tokens.empty()) {
            continue;
        }
        if (tokens.size() != 4) {
            throw ParseError("line " + std::to_string(line_no) + ": expected 4 fields \"x y z label\", got "
                                 + std::to_string(tokens.size()),
                             line_no);
        }
        Vec3 p;
        for (int k = 0; k < 3; ++k) {
            if (!parse_double(tokens[k], p[k])) {
                throw ParseError("line " + std::to_string(line_no) + ": malformed coordinate '"
                                     + std::string(tokens[k]) + "'",
                                 line_no);
            }
            if (!std::isfinite(p[k])) {
                throw ParseError("line " + std::to_string(line_no) + ": non-finite coordinate", line_no);
            }
        }
        int label = 0;
        if (!parse_int(tokens[3], label)) {
            throw ParseError("line " + std::to_string(line_no) + ": malformed label '" + std::string(tokens[3]) + "'",
                             line_no);
        }
        if (auto it = labels.remap.find(label); it != labels.remap.end()) {
            label = it->second;
        }
        scan.points.push_back(p);
        scan.labels.push_back(label);
    }
    if (scan.points.empty()) {
        throw ParseError("scan contains no points", 0);
    }
    return scan;
}

LabeledScan parse_scan(const std::filesystem::path& path, const LabelConfig& labels)
{
    std::ifstream in(path);
    if (!in) {
        throw ParseError("cannot open scan file " + path.string(), 0);
    }
    LabeledScan scan;
    try {
        scan = parse_scan(in, labels);
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what(), e.line());
    }
    const auto name = parse_scan_name(path);
    scan.plant_id = name.plant_id;
    scan.time_index = name.time_index;
    return scan;
}

void write_scan(const std::filesystem::path& path, const LabeledScan& scan)
{
    validate(scan);
    std::ofstream out(path);
    if (!out) {
        throw Error("cannot write scan file " + path.string());
    }
    out << std::setprecision(9);
    for (std::size_t i = 0; i < scan.points.size(); ++i) {
        const auto& p = scan.points[i];
        out << p.x() << ' ' << p.y() << ' ' << p.z() << ' ' << scan.labels[i] << '\n';
    }
}

void validate(const LabeledScan& scan)
{
    if (scan.points.empty()) {
        throw DataError("scan has no points");
    }
    if (scan.points.size() != scan.labels.size()) {
        throw DataError("scan has " + std::to_string(scan.points.size()) + " points but "
                        + std::to_string(scan.labels.size()) + " labels");
    }
    for (const auto& p : scan.points) {
        if (!p.allFinite()) {
            throw DataError("scan contains a non-finite coordinate");
        }
    }
}

LeafSplit split_leaves(const LabeledScan& scan, const LabelConfig& labels, std::size_t min_points)
{
    validate(scan);
    std::map<int, PointList> groups;
    for (std::size_t i = 0; i < scan.points.size(); ++i) {
        if (labels.is_leaf(scan.labels[i])) {
            groups[scan.labels[i]].push_back(scan.points[i]);
        }
    }
    LeafSplit split;
    std::size_t kept = 0;
    for (auto& [id, pts] : groups) {
        if (pts.size() < min_points) {
            split.undersized_ids.push_back(id);
            continue;
        }
        kept += pts.size();
        split.leaves.push_back(LeafCluster{scan.plant_id, scan.time_index, id, std::move(pts)});
    }
    split.dropped_points = scan.points.size() - kept;
    if (!split.undersized_ids.empty()) {
        log::warn("{} t={}: dropped {} undersized leaf cluster(s) (< {} points)", scan.plant_id, scan.time_index,
                  split.undersized_ids.size(), min_points);
    }
    return split;
}

std::string scan_file_name(const std::string& plant_id, int time_index)
{
    std::ostringstream name;
    name << plant_id << '_' << std::setw(4) << std::setfill('0') << time_index << ".txt";
    return name.str();
}

}  // namespace leafmatch
