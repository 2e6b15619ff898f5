#include "leafmatch/eval_harness.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>

namespace leafmatch {

std::set<std::pair<int, int>> ground_truth_pairs(const std::vector<int>& before_ids, const std::vector<int>& after_ids)
{
    auto index = [](const std::vector<int>& ids, const char* side) {
        std::map<int, int> out;
        for (std::size_t i = 0; i < ids.size(); ++i) {
            if (!out.emplace(ids[i], static_cast<int>(i)).second) {
                throw DataError(std::string("duplicate leaf id ") + std::to_string(ids[i]) + " in " + side + " scan");
            }
        }
        return out;
    };
    const auto b = index(before_ids, "before");
    const auto a = index(after_ids, "after");
    std::set<std::pair<int, int>> truth;
    for (const auto& [id, i] : b) {
        if (auto it = a.find(id); it != a.end()) {
            truth.emplace(i, it->second);
        }
    }
    return truth;
}

MatchCounts count_matches(const std::vector<std::pair<int, int>>& predicted, const std::set<std::pair<int, int>>& truth)
{
    MatchCounts c;
    for (const auto& p : predicted) {
        if (truth.count(p) != 0) {
            ++c.tp;
        } else {
            ++c.fp;
        }
    }
    c.fn = static_cast<int>(truth.size()) - c.tp;
    return c;
}

std::optional<double> sensitivity(const MatchCounts& counts)
{
    if (counts.tp + counts.fn == 0) {
        return std::nullopt;
    }
    return static_cast<double>(counts.tp) / static_cast<double>(counts.tp + counts.fn);
}

std::optional<double> sensitivity(const std::vector<std::pair<int, int>>& predicted,
                                  const std::set<std::pair<int, int>>& truth)
{
    return sensitivity(count_matches(predicted, truth));
}

double overlapping_index(const std::vector<double>& true_costs, const std::vector<double>& false_costs, int bins)
{
    if (true_costs.empty() || false_costs.empty()) {
        throw DataError("overlapping index needs both cost sets non-empty");
    }
    if (bins < 1) {
        throw DataError("overlapping index needs at least one bin");
    }
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (const auto* set : {&true_costs, &false_costs}) {
        for (double c : *set) {
            lo = std::min(lo, c);
            hi = std::max(hi, c);
        }
    }
    auto histogram = [&](const std::vector<double>& values) {
        std::vector<long> counts(static_cast<std::size_t>(bins), 0);
        for (double c : values) {
            int b = 0;
            if (hi > lo) {
                b = static_cast<int>(std::floor((c - lo) / (hi - lo) * bins));
                b = std::clamp(b, 0, bins - 1);
            }
            ++counts[static_cast<std::size_t>(b)];
        }
        return counts;
    };
    const auto ft = histogram(true_costs);
    const auto ff = histogram(false_costs);
    long overlap = 0;
    for (int b = 0; b < bins; ++b) {
        overlap += std::min(ft[b], ff[b]);
    }
    return static_cast<double>(overlap) / static_cast<double>(std::min(true_costs.size(), false_costs.size()));
}

TTest welch_t_test(const std::vector<double>& a, const std::vector<double>& b)
{
    if (a.size() < 2 || b.size() < 2) {
        throw DataError("t-test needs at least 2 samples per group");
    }
    auto moments = [](const std::vector<double>& x) {
        const double n = static_cast<double>(x.size());
        const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
        double ss = 0.0;
        for (double v : x) {
            ss += (v - mean) * (v - mean);
        }
        return std::make_pair(mean, ss / (n - 1.0));
    };
    const auto [ma, va] = moments(a);
    const auto [mb, vb] = moments(b);
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    const double sa = va / na;
    const double sb = vb / nb;
    if (!(sa + sb > 0.0)) {
        throw DataError("t-test undefined: both samples have zero variance");
    }
    TTest result;
    result.t = (ma - mb) / std::sqrt(sa + sb);
    result.dof = (sa + sb) * (sa + sb) / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
    const boost::math::students_t dist(result.dof);
    result.p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(result.t)));
    result.p = std::min(1.0, result.p);
    return result;
}

PairEval evaluate_pair(const MatchResult& match)
{
    PairEval eval;
    eval.plant_id = match.plant_id;
    eval.before_time = match.before_time;
    eval.after_time = match.after_time;
    const auto truth = ground_truth_pairs(match.costs.row_ids, match.costs.col_ids);
    std::vector<std::pair<int, int>> predicted;
    for (const auto& p : match.pairs) {
        predicted.emplace_back(p.row, p.col);
    }
    eval.counts = count_matches(predicted, truth);
    eval.sensitivity = sensitivity(eval.counts);
    for (Eigen::Index i = 0; i < match.costs.values.rows(); ++i) {
        for (Eigen::Index j = 0; j < match.costs.values.cols(); ++j) {
            const double c = match.costs.values(i, j);
            if (truth.count({static_cast<int>(i), static_cast<int>(j)}) != 0) {
                eval.true_costs.push_back(c);
            } else {
                eval.false_costs.push_back(c);
            }
        }
    }
    eval.match = match;
    return eval;
}

TableReport run_table(const std::vector<PlantSequence>& sequences, const std::vector<FeatureConfig>& configs,
                      const ShapeModel& model, int bins)
{
    TableReport report;
    report.bins = bins;
    report.shape_dims = model.dims();
    std::vector<PlantSequence> sorted = sequences;
    for (auto& seq : sorted) {
        std::sort(seq.begin(), seq.end(), [](const OutlineSet& a, const OutlineSet& b) { return a.time_index < b.time_index; });
        if (!seq.empty()) {
            report.plants.push_back(seq.front().plant_id);
        }
    }
    for (const auto& config : configs) {
        ConfigRow row;
        row.config = config;
        const FeatureMetric metric = fit_feature_covariance(training_features(model, config));
        std::vector<double> true_costs;
        std::vector<double> false_costs;
        for (const auto& seq : sorted) {
            for (std::size_t k = 0; k + 1 < seq.size(); ++k) {
                if (seq[k].outlines.empty() || seq[k + 1].outlines.empty()) {
                    continue;
                }
                PairEval eval = evaluate_pair(match_scans(seq[k], seq[k + 1], model, config, metric));
                true_costs.insert(true_costs.end(), eval.true_costs.begin(), eval.true_costs.end());
                false_costs.insert(false_costs.end(), eval.false_costs.begin(), eval.false_costs.end());
                if (eval.sensitivity) {
                    row.counts.tp += eval.counts.tp;
                    row.counts.fn += eval.counts.fn;
                    row.counts.fp += eval.counts.fp;
                }
                row.pairs.push_back(std::move(eval));
            }
        }
        row.sensitivity = sensitivity(row.counts);
        row.true_edges = true_costs.size();
        row.false_edges = false_costs.size();
        if (!true_costs.empty() && !false_costs.empty()) {
            row.eta = overlapping_index(true_costs, false_costs, bins);
        }
        try {
            row.t_test = welch_t_test(true_costs, false_costs);
        } catch (const DataError&) {
            row.t_test.reset();
        }
        report.rows.push_back(std::move(row));
    }
    return report;
}

std::vector<FeatureConfig> ablation_configs()
{
    return {
        {true, false, false, false}, {true, true, false, false}, {true, false, true, false},
        {true, false, false, true},  {true, true, true, false},  {true, true, false, true},
        {true, false, true, true},   {true, true, true, true},
    };
}

std::vector<FeatureConfig> comparison_configs()
{
    return {
        {true, true, true, false},   {false, true, false, false}, {false, false, true, false},
        {false, false, false, true}, {false, true, true, false},  {false, true, false, true},
        {false, false, true, true},  {false, true, true, true},
    };
}

std::string report_csv(const TableReport& report)
{
    std::ostringstream out;
    out << std::setprecision(10);
    out << "shape,location,rotation,scale,sensitivity,eta,t,p,tp,fn,fp,true_edges,false_edges\n";
    for (const auto& row : report.rows) {
        out << row.config.shape << ',' << row.config.location << ',' << row.config.rotation << ','
            << row.config.scale << ',';
        if (row.sensitivity) {
            out << *row.sensitivity;
        }
        out << ',';
        if (row.eta) {
            out << *row.eta;
        }
        out << ',';
        if (row.t_test) {
            out << row.t_test->t << ',' << row.t_test->p;
        } else {
            out << ',';
        }
        out << ',' << row.counts.tp << ',' << row.counts.fn << ',' << row.counts.fp << ',' << row.true_edges << ','
            << row.false_edges << '\n';
    }
    return out.str();
}

}  // namespace leafmatch
