#include "leafmatch/shape_space.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <set>

namespace leafmatch {

Eigen::VectorXd flatten(const PointList& points)
{
    Eigen::VectorXd out(3 * static_cast<Eigen::Index>(points.size()));
    for (std::size_t i = 0; i < points.size(); ++i) {
        out.segment<3>(3 * static_cast<Eigen::Index>(i)) = points[i];
    }
    return out;
}

PointList unflatten(const Eigen::VectorXd& values)
{
    PointList out(static_cast<std::size_t>(values.size() / 3));
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = values.segment<3>(3 * static_cast<Eigen::Index>(i));
    }
    return out;
}

TransformFeatures transform_features(const LeafOutline& outline, const Vec3& emergence)
{
    TransformFeatures t;
    t.location = outline.centroid - emergence;
    t.x_axis = outline.frame.x_axis;
    t.y_axis = outline.frame.y_axis;
    t.z_axis = outline.frame.z_axis;
    t.scale = outline.scale;
    return t;
}

namespace {

/// Orthonormalises rows in place (modified Gram-Schmidt, in order).  Rows that
/// collapse are replaced by the first unit vector independent of the earlier rows.
void orthonormalise_rows(Eigen::MatrixXd& rows)
{
    const Eigen::Index d = rows.rows();
    const Eigen::Index dim = rows.cols();
    Eigen::Index candidate = 0;
    for (Eigen::Index k = 0; k < d; ++k) {
        for (int pass = 0; pass < 2; ++pass) {
            for (Eigen::Index j = 0; j < k; ++j) {
                rows.row(k) -= rows.row(k).dot(rows.row(j)) * rows.row(j);
            }
        }
        double norm = rows.row(k).norm();
        while (norm < 1e-6) {
            if (candidate >= dim) {
                throw DataError("cannot complete an orthonormal basis");
            }
            rows.row(k).setZero();
            rows(k, candidate++) = 1.0;
            for (int pass = 0; pass < 2; ++pass) {
                for (Eigen::Index j = 0; j < k; ++j) {
                    rows.row(k) -= rows.row(k).dot(rows.row(j)) * rows.row(j);
                }
            }
            norm = rows.row(k).norm();
        }
        rows.row(k) /= norm;
    }
}

void fix_signs(Eigen::MatrixXd& rows)
{
    for (Eigen::Index k = 0; k < rows.rows(); ++k) {
        Eigen::Index best = 0;
        rows.row(k).cwiseAbs().maxCoeff(&best);
        if (rows(k, best) < 0.0) {
            rows.row(k) *= -1.0;
        }
    }
}

}  // namespace

ShapeModel fit_shape_model(const std::vector<TrainingOutline>& training, int d)
{
    if (d < 1) {
        throw DataError("shape dimension d must be at least 1");
    }
    const auto count = static_cast<Eigen::Index>(training.size());
    if (count < d + 1) {
        throw DataError("fitting " + std::to_string(d) + " components needs at least " + std::to_string(d + 1)
                        + " outlines, got " + std::to_string(count));
    }
    const auto n_points = static_cast<int>(training.front().outline.size());
    for (const auto& t : training) {
        if (static_cast<int>(t.outline.size()) != n_points) {
            throw DataError("training outlines have mismatched point counts");
        }
    }
    const Eigen::Index dim = 3 * n_points;
    if (d > dim) {
        throw DataError("d exceeds the outline dimension");
    }

    Eigen::MatrixXd x(count, dim);
    for (Eigen::Index i = 0; i < count; ++i) {
        x.row(i) = flatten(training[i].outline.points).transpose();
    }

    ShapeModel model;
    model.n_points = n_points;
    model.scaler_mean = x.colwise().mean().transpose();
    Eigen::MatrixXd z = x.rowwise() - model.scaler_mean.transpose();
    model.scaler_std = (z.array().square().colwise().sum() / static_cast<double>(count)).sqrt().transpose();
    for (Eigen::Index j = 0; j < dim; ++j) {
        if (!(model.scaler_std[j] > 1e-12)) {
            model.scaler_std[j] = 1.0;
        }
    }
    z.array().rowwise() /= model.scaler_std.transpose().array();
    model.pca_mean = z.colwise().mean().transpose();
    z.rowwise() -= model.pca_mean.transpose();

    const double denom = static_cast<double>(count - 1);
    Eigen::MatrixXd basis(d, dim);
    Eigen::VectorXd variances(d);
    if (count >= dim) {
        const Eigen::MatrixXd cov = (z.transpose() * z) / denom;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
        if (eig.info() != Eigen::Success) {
            throw DataError("covariance eigendecomposition failed");
        }
        for (int k = 0; k < d; ++k) {
            const Eigen::Index src = dim - 1 - k;
            variances[k] = std::max(0.0, eig.eigenvalues()[src]);
            basis.row(k) = eig.eigenvectors().col(src).transpose();
        }
    } else {
        const Eigen::MatrixXd gram = (z * z.transpose()) / denom;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
        if (eig.info() != Eigen::Success) {
            throw DataError("Gram eigendecomposition failed");
        }
        const double top = std::max(eig.eigenvalues()[count - 1], 0.0);
        for (int k = 0; k < d; ++k) {
            const Eigen::Index src = count - 1 - k;
            const double lambda = std::max(0.0, eig.eigenvalues()[src]);
            variances[k] = lambda;
            if (lambda > 1e-12 * top && lambda > 0.0) {
                basis.row(k) = (z.transpose() * eig.eigenvectors().col(src)).transpose() / std::sqrt(denom * lambda);
            } else {
                basis.row(k).setZero();  // completed below
            }
        }
    }
    orthonormalise_rows(basis);
    fix_signs(basis);
    model.basis = std::move(basis);
    model.explained_variances = variances;

    model.training_encodings = z * model.basis.transpose();
    const Eigen::MatrixXd centered = model.training_encodings.rowwise() - model.training_encodings.colwise().mean();
    Eigen::MatrixXd k_cov = (centered.transpose() * centered) / denom;
    model.feature_covariance = 0.5 * (k_cov + k_cov.transpose());

    std::set<std::string> plants;
    for (const auto& t : training) {
        plants.insert(t.outline.plant_id);
        model.training_transforms.push_back(transform_features(t.outline, t.emergence));
    }
    model.plant_ids.assign(plants.begin(), plants.end());
    model.outline_count = training.size();
    return model;
}

ShapeModel fit_shape_model(const std::vector<LeafOutline>& outlines, int d)
{
    std::vector<TrainingOutline> training;
    training.reserve(outlines.size());
    for (const auto& o : outlines) {
        training.push_back({o, Vec3::Zero()});
    }
    return fit_shape_model(training, d);
}

Eigen::VectorXd scale_features(const Eigen::VectorXd& flat, const ShapeModel& model)
{
    if (flat.size() != model.input_dims()) {
        throw DimensionError("outline has " + std::to_string(flat.size() / 3) + " points, model expects "
                             + std::to_string(model.n_points));
    }
    return ((flat - model.scaler_mean).array() / model.scaler_std.array()).matrix();
}

ShapeVector encode_flat(const Eigen::VectorXd& flat, const ShapeModel& model)
{
    return ShapeVector{model.basis * (scale_features(flat, model) - model.pca_mean)};
}

ShapeVector encode(const LeafOutline& outline, const ShapeModel& model)
{
    return encode_flat(flatten(outline.points), model);
}

PointList decode(const ShapeVector& v, const ShapeModel& model)
{
    if (v.values.size() != model.dims()) {
        throw DimensionError("shape vector has " + std::to_string(v.values.size()) + " entries, model has "
                             + std::to_string(model.dims()));
    }
    const Eigen::VectorXd z = model.pca_mean + model.basis.transpose() * v.values;
    const Eigen::VectorXd x = (z.array() * model.scaler_std.array()).matrix() + model.scaler_mean;
    return unflatten(x);
}

std::optional<std::string> check_model_invariants(const ShapeModel& model)
{
    const int d = model.dims();
    if (d < 1 || model.basis.cols() != model.input_dims()) {
        return "basis has the wrong shape";
    }
    const Eigen::MatrixXd gram = model.basis * model.basis.transpose();
    if ((gram - Eigen::MatrixXd::Identity(d, d)).cwiseAbs().maxCoeff() > 1e-8) {
        return "basis rows are not orthonormal";
    }
    if (model.explained_variances.size() != d) {
        return "explained variance count differs from d";
    }
    for (int k = 0; k < d; ++k) {
        if (model.explained_variances[k] < 0.0) {
            return "negative explained variance";
        }
        if (k > 0 && model.explained_variances[k] > model.explained_variances[k - 1]) {
            return "explained variances are not non-increasing";
        }
    }
    const auto& cov = model.feature_covariance;
    if (cov.rows() != d || cov.cols() != d) {
        return "feature covariance has the wrong shape";
    }
    if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-10) {
        return "feature covariance is not symmetric";
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov, Eigen::EigenvaluesOnly);
    if (eig.eigenvalues().minCoeff() < -1e-10) {
        return "feature covariance is not positive semidefinite";
    }
    return std::nullopt;
}

}  // namespace leafmatch
