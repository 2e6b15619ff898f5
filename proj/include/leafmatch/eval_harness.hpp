#pragma once

#include "leafmatch/temporal_match.hpp"

#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace leafmatch {

/// Index pairs (row in before, column in after) of leaves with the same id.
/// Throws DataError on duplicate ids within one side.
std::set<std::pair<int, int>> ground_truth_pairs(const std::vector<int>& before_ids, const std::vector<int>& after_ids);

struct MatchCounts {
    int tp = 0;
    int fn = 0;
    int fp = 0;
};

MatchCounts count_matches(const std::vector<std::pair<int, int>>& predicted, const std::set<std::pair<int, int>>& truth);

/// TP / (TP + FN); nullopt when the truth set is empty.
std::optional<double> sensitivity(const std::vector<std::pair<int, int>>& predicted,
                                  const std::set<std::pair<int, int>>& truth);
std::optional<double> sensitivity(const MatchCounts& counts);

/// Distribution-free overlapping index between two cost samples over `bins` equal
/// bins spanning their joint range: sum of per-bin count minima over min(|T|, |F|).
double overlapping_index(const std::vector<double>& true_costs, const std::vector<double>& false_costs,
                         int bins = 50);

struct TTest {
    double t = 0.0;
    double p = 1.0;
    double dof = 0.0;
};

/// Welch's unequal-variance t-test, two-sided.  Throws DataError for samples
/// smaller than 2 or when both variances are zero.
TTest welch_t_test(const std::vector<double>& a, const std::vector<double>& b);

/// Scored edges of one matched scan pair.
struct PairEval {
    std::string plant_id;
    int before_time = 0;
    int after_time = 0;
    MatchCounts counts;
    std::optional<double> sensitivity;
    std::vector<double> true_costs;
    std::vector<double> false_costs;
    MatchResult match;
};

PairEval evaluate_pair(const MatchResult& match);

struct ConfigRow {
    FeatureConfig config;
    MatchCounts counts;
    std::optional<double> sensitivity;
    std::optional<double> eta;
    std::optional<TTest> t_test;
    std::size_t true_edges = 0;
    std::size_t false_edges = 0;
    std::vector<PairEval> pairs;
};

struct TableReport {
    int bins = 50;
    int shape_dims = 0;
    std::vector<std::string> plants;
    std::vector<ConfigRow> rows;
};

/// Every scan of one plant, in any order; run_table sorts by time index.
using PlantSequence = std::vector<OutlineSet>;

/// Matches every consecutive scan pair of every plant under each config and pools
/// the scores.  Pairs without shared leaves are excluded from the sensitivity.
TableReport run_table(const std::vector<PlantSequence>& sequences, const std::vector<FeatureConfig>& configs,
                      const ShapeModel& model, int bins = 50);

/// Feature rows of the ablation table (all combinations that include shape).
std::vector<FeatureConfig> ablation_configs();
/// Rows of the comparison table (shape+location+rotation plus transform-only combinations).
std::vector<FeatureConfig> comparison_configs();

std::string report_csv(const TableReport& report);

}  // namespace leafmatch
