#pragma once

#include "leafmatch/types.hpp"

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace leafmatch {

/// How raw instance labels map onto ground / stem / leaf semantics.
///
/// The default matches the Pheno4D annotation scheme: 0 is soil and pot,
/// 1 is the main stem and every label from 2 upward is an individual leaf
/// whose id is stable across the scans of one plant.
struct LabelConfig {
    std::set<int> ground_labels{0};
    std::set<int> stem_labels{1};
    int first_leaf_label = 2;
    /// Applied to every raw label during parsing, before any semantics.
    std::map<int, int> remap;

    bool is_stem(int label) const { return stem_labels.count(label) != 0; }
    bool is_leaf(int label) const
    {
        return label >= first_leaf_label && ground_labels.count(label) == 0 && stem_labels.count(label) == 0;
    }
};

struct LabeledScan {
    std::string plant_id;
    int time_index = 0;
    PointList points;
    std::vector<int> labels;
};

struct LeafCluster {
    std::string plant_id;
    int time_index = 0;
    int leaf_id = 0;
    PointList points;
};

struct LeafSplit {
    std::vector<LeafCluster> leaves;
    /// Leaf labels whose cluster fell below the minimum size.
    std::vector<int> undersized_ids;
    /// Every scan point not carried by a returned cluster (ground, stem, undersized).
    std::size_t dropped_points = 0;
};

/// Identity carried by a scan file name such as "T01_0305_a.txt" or "P02_0004.txt":
/// the first underscore-separated token is the plant, the first numeric token after
/// it is the time index.  Names that do not follow the pattern yield the whole stem
/// as plant id and time index 0.
struct ScanName {
    std::string plant_id;
    int time_index = 0;
};
ScanName parse_scan_name(const std::filesystem::path& path);

/// Reads an ASCII "x y z label" file.  Throws ParseError (with a 1-based line
/// number) on malformed lines or non-finite coordinates and on empty files.
LabeledScan parse_scan(const std::filesystem::path& path, const LabelConfig& labels = {});
LabeledScan parse_scan(std::istream& in, const LabelConfig& labels = {});

void write_scan(const std::filesystem::path& path, const LabeledScan& scan);

/// Throws DataError when a LabeledScan invariant is violated.
void validate(const LabeledScan& scan);

/// Groups leaf-labelled points into one cluster per leaf id, ordered by id.
/// Clusters with fewer than `min_points` points are dropped and reported.
LeafSplit split_leaves(const LabeledScan& scan, const LabelConfig& labels = {}, std::size_t min_points = 50);

std::string scan_file_name(const std::string& plant_id, int time_index);

}  // namespace leafmatch
