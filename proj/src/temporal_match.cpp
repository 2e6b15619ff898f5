#include "leafmatch/temporal_match.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

namespace leafmatch {

std::string FeatureConfig::name() const
{
    std::string out;
    auto add = [&](bool on, const char* label) {
        if (on) {
            out += out.empty() ? "" : "+";
            out += label;
        }
    };
    add(shape, "shape");
    add(location, "location");
    add(rotation, "rotation");
    add(scale, "scale");
    return out.empty() ? "none" : out;
}

FeatureConfig FeatureConfig::parse(const std::string& spec)
{
    FeatureConfig config{false, false, false, false};
    std::string token;
    std::istringstream in(spec);
    while (std::getline(in, token, '+')) {
        std::istringstream parts(token);
        std::string item;
        while (std::getline(parts, item, ',')) {
            item.erase(std::remove_if(item.begin(), item.end(), [](unsigned char c) { return std::isspace(c); }),
                       item.end());
            std::transform(item.begin(), item.end(), item.begin(), [](unsigned char c) { return std::tolower(c); });
            if (item.empty()) {
                continue;
            }
            if (item == "shape") {
                config.shape = true;
            } else if (item == "location" || item == "loc") {
                config.location = true;
            } else if (item == "rotation" || item == "rot") {
                config.rotation = true;
            } else if (item == "scale") {
                config.scale = true;
            } else {
                throw DataError("unknown feature '" + item + "'");
            }
        }
    }
    if (!config.any()) {
        throw DataError("feature config selects nothing");
    }
    return config;
}

std::vector<int> OutlineSet::leaf_ids() const
{
    std::vector<int> ids;
    ids.reserve(outlines.size());
    for (const auto& o : outlines) {
        ids.push_back(o.leaf_id);
    }
    return ids;
}

Eigen::VectorXd assemble_feature(const ShapeVector* shape, const TransformFeatures& transform,
                                 const FeatureConfig& config)
{
    if (!config.any()) {
        throw DataError("feature config selects nothing");
    }
    if (config.shape && shape == nullptr) {
        throw DataError("shape features requested without a shape model");
    }
    const int d = config.shape ? static_cast<int>(shape->values.size()) : 0;
    Eigen::VectorXd v(config.length(d));
    Eigen::Index at = 0;
    if (config.shape) {
        v.segment(at, d) = shape->values;
        at += d;
    }
    if (config.location) {
        v.segment<3>(at) = transform.location;
        at += 3;
    }
    if (config.rotation) {
        v.segment<3>(at) = transform.x_axis;
        v.segment<3>(at + 3) = transform.y_axis;
        v.segment<3>(at + 6) = transform.z_axis;
        at += 9;
    }
    if (config.scale) {
        v[at] = transform.scale;
    }
    return v;
}

std::vector<AssembledFeature> assemble_features(const OutlineSet& leaves, const ShapeModel* model,
                                                const FeatureConfig& config)
{
    if (config.shape && model == nullptr) {
        throw DataError("shape features requested without a shape model");
    }
    std::vector<AssembledFeature> out;
    out.reserve(leaves.outlines.size());
    for (const auto& outline : leaves.outlines) {
        std::optional<ShapeVector> shape;
        if (config.shape) {
            shape = encode(outline, *model);
        }
        out.push_back({assemble_feature(shape ? &*shape : nullptr, transform_features(outline, leaves.emergence), config),
                       outline.leaf_id});
    }
    return out;
}

FeatureMetric fit_feature_covariance(const std::vector<Eigen::VectorXd>& features)
{
    if (features.size() < 2) {
        throw DataError("feature covariance needs at least 2 samples");
    }
    const Eigen::Index dim = features.front().size();
    Eigen::MatrixXd x(static_cast<Eigen::Index>(features.size()), dim);
    for (std::size_t i = 0; i < features.size(); ++i) {
        if (features[i].size() != dim) {
            throw DimensionError("training features have mismatched lengths");
        }
        x.row(static_cast<Eigen::Index>(i)) = features[i].transpose();
    }
    const Eigen::MatrixXd centered = x.rowwise() - x.colwise().mean();
    Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(x.rows() - 1);
    cov = 0.5 * (cov + cov.transpose());

    FeatureMetric metric;
    metric.covariance = cov;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    Eigen::MatrixXd work = cov;
    if (!(lo > 0.0) || hi / lo > 1e12) {
        const double trace = cov.trace();
        metric.ridge = 1e-8 * (trace > 0.0 ? trace : 1.0) / static_cast<double>(dim);
        metric.regularized = true;
        work.diagonal().array() += metric.ridge;
        eig.compute(work);
    }
    const Eigen::VectorXd inv_vals = eig.eigenvalues().cwiseMax(metric.ridge > 0.0 ? metric.ridge : 0.0).cwiseInverse();
    metric.inverse = eig.eigenvectors() * inv_vals.asDiagonal() * eig.eigenvectors().transpose();
    metric.inverse = 0.5 * (metric.inverse + metric.inverse.transpose());
    return metric;
}

std::vector<Eigen::VectorXd> training_features(const ShapeModel& model, const FeatureConfig& config)
{
    const auto count = model.training_transforms.size();
    if (config.shape && static_cast<std::size_t>(model.training_encodings.rows()) != count) {
        throw DataError("model training encodings and transforms are not aligned");
    }
    std::vector<Eigen::VectorXd> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        ShapeVector shape;
        if (config.shape) {
            shape.values = model.training_encodings.row(static_cast<Eigen::Index>(i)).transpose();
        }
        out.push_back(assemble_feature(config.shape ? &shape : nullptr, model.training_transforms[i], config));
    }
    return out;
}

double mahalanobis_cost(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const Eigen::MatrixXd& inverse)
{
    if (a.size() != b.size() || inverse.rows() != a.size() || inverse.cols() != a.size()) {
        throw DimensionError("mahalanobis_cost: dimension mismatch");
    }
    const Eigen::VectorXd diff = a - b;
    return std::sqrt(std::max(0.0, diff.dot(inverse * diff)));
}

CostMatrix build_cost_matrix(const std::vector<AssembledFeature>& before, const std::vector<AssembledFeature>& after,
                             const Eigen::MatrixXd& inverse)
{
    if (before.empty() || after.empty()) {
        throw DataError("cost matrix needs leaves on both sides");
    }
    CostMatrix costs;
    costs.values.resize(static_cast<Eigen::Index>(before.size()), static_cast<Eigen::Index>(after.size()));
    for (std::size_t i = 0; i < before.size(); ++i) {
        costs.row_ids.push_back(before[i].leaf_id);
        for (std::size_t j = 0; j < after.size(); ++j) {
            costs.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))
                = mahalanobis_cost(before[i].values, after[j].values, inverse);
        }
    }
    for (const auto& a : after) {
        costs.col_ids.push_back(a.leaf_id);
    }
    return costs;
}

MatchResult match_scans(const OutlineSet& before, const OutlineSet& after, const ShapeModel& model,
                        const FeatureConfig& config, const FeatureMetric& metric)
{
    MatchResult result;
    result.plant_id = before.plant_id;
    result.before_time = before.time_index;
    result.after_time = after.time_index;
    result.config = config;
    result.shape_dims = config.shape ? model.dims() : 0;
    const auto fb = assemble_features(before, &model, config);
    const auto fa = assemble_features(after, &model, config);
    result.costs = build_cost_matrix(fb, fa, metric.inverse);
    const Matching matching = solve_assignment(result.costs.values);
    for (const auto& [i, j] : matching.pairs) {
        result.pairs.push_back({i, j, result.costs.row_ids[i], result.costs.col_ids[j], result.costs.values(i, j)});
    }
    result.total_cost = matching.total_cost;
    return result;
}

MatchResult match_scans(const OutlineSet& before, const OutlineSet& after, const ShapeModel& model,
                        const FeatureConfig& config)
{
    return match_scans(before, after, model, config, fit_feature_covariance(training_features(model, config)));
}

}  // namespace leafmatch
