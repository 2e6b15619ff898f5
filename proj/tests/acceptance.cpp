// Acceptance suite: one PASS/FAIL/SKIP line per criterion.  Exit status is
// non-zero when any criterion fails; skipped criteria do not count as failures.

#include "leafmatch/assignment.hpp"
#include "leafmatch/eval_harness.hpp"
#include "leafmatch/pipeline.hpp"
#include "leafmatch/shape_space.hpp"
#include "leafmatch/surface_mesh.hpp"

#include "fixtures.hpp"
#include "oracles.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>

using namespace leafmatch;
namespace fs = std::filesystem;

namespace {

enum class Status { Pass, Fail, Skip };

struct Outcome {
    Status status = Status::Fail;
    std::string detail;
};

class Check {
public:
    void require(bool ok, const std::string& what)
    {
        if (!ok) {
            failures_.push_back(what);
        }
    }
    void note(const std::string& text) { notes_.push_back(text); }

    Outcome outcome() const
    {
        std::ostringstream out;
        const auto& items = failures_.empty() ? notes_ : failures_;
        for (std::size_t i = 0; i < items.size(); ++i) {
            out << (i ? "; " : "") << items[i];
        }
        return {failures_.empty() ? Status::Pass : Status::Fail, out.str()};
    }

private:
    std::vector<std::string> failures_;
    std::vector<std::string> notes_;
};

std::string fmt(double v, int precision = 4)
{
    std::ostringstream out;
    out.precision(precision);
    out << v;
    return out.str();
}

double seconds_since(std::chrono::steady_clock::time_point start)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

Outcome assignment_oracle()
{
    Check check;
    const auto start = std::chrono::steady_clock::now();
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<int> size(1, 7);
    std::uniform_int_distribution<int> cost(0, 1000);
    int mismatches = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        // Integer costs keep every sum exact, so equality is bitwise.
        Eigen::MatrixXd c(size(rng), size(rng));
        for (Eigen::Index i = 0; i < c.size(); ++i) {
            c.data()[i] = cost(rng);
        }
        const auto m = solve_assignment(c);
        mismatches += m.total_cost != oracle::brute_force_assignment(c);
        mismatches += m.pairs.size() != static_cast<std::size_t>(std::min(c.rows(), c.cols()));
    }
    const double elapsed = seconds_since(start);
    check.require(mismatches == 0, std::to_string(mismatches) + " of 1000 matrices disagree with enumeration");
    check.require(elapsed < 60.0, "runtime " + fmt(elapsed) + " s exceeds 60 s");
    check.note("1000/1000 totals equal, " + fmt(elapsed, 3) + " s");
    return check.outcome();
}

Outcome mahalanobis_correctness()
{
    Check check;
    std::mt19937_64 rng(99);
    std::normal_distribution<double> g(0.0, 3.0);
    std::uniform_int_distribution<int> dim(1, 40);
    std::uniform_real_distribution<double> var(0.05, 20.0);
    double worst_identity = 0.0;
    double worst_diag = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const int n = dim(rng);
        Eigen::VectorXd a(n), b(n), k(n);
        for (int i = 0; i < n; ++i) {
            a[i] = g(rng);
            b[i] = g(rng);
            k[i] = var(rng);
        }
        worst_identity = std::max(worst_identity,
                                  std::abs(mahalanobis_cost(a, b, Eigen::MatrixXd::Identity(n, n)) - (a - b).norm()));
        double closed = 0.0;
        for (int i = 0; i < n; ++i) {
            closed += (a[i] - b[i]) * (a[i] - b[i]) / k[i];
        }
        closed = std::sqrt(closed);
        const Eigen::MatrixXd inverse = k.cwiseInverse().asDiagonal();
        worst_diag = std::max(worst_diag, std::abs(mahalanobis_cost(a, b, inverse) - closed) / closed);
    }
    check.require(worst_identity <= 1e-12, "identity case off by " + fmt(worst_identity));
    check.require(worst_diag <= 1e-12, "diagonal case off by " + fmt(worst_diag) + " relative");
    check.note("max |K=I - euclid| " + fmt(worst_identity, 2) + ", max diag rel err " + fmt(worst_diag, 2));
    return check.outcome();
}

Outcome pca_properties()
{
    Check check;
    const auto outlines = fixtures::blade_outlines(200, 77);
    const int n_samples = static_cast<int>(outlines.size());

    // Orthonormality of the default model and of the largest one the data supports.
    double worst_ortho = 0.0;
    for (int d : {23, n_samples - 1}) {
        const auto model = fit_shape_model(outlines, d);
        const Eigen::MatrixXd gram = model.basis * model.basis.transpose();
        worst_ortho = std::max(worst_ortho, (gram - Eigen::MatrixXd::Identity(d, d)).cwiseAbs().maxCoeff());
    }
    check.require(worst_ortho <= 1e-8, "basis orthonormality error " + fmt(worst_ortho));

    // Full-rank round trip: 8-point outlines (24 inputs) with 200 samples.
    std::vector<LeafOutline> coarse;
    for (const auto& o : outlines) {
        LeafOutline c = o;
        c.points = resample_closed_uniform(o.points, 8);
        coarse.push_back(c);
    }
    const auto full = fit_shape_model(coarse, 24);
    double worst_round_trip = 0.0;
    for (const auto& o : coarse) {
        const auto back = decode(encode(o, full), full);
        for (std::size_t i = 0; i < back.size(); ++i) {
            worst_round_trip = std::max(worst_round_trip, (back[i] - o.points[i]).cwiseAbs().maxCoeff());
        }
    }
    // Spanning round trip at n = 500: d = N - 1 covers every training outline.
    const auto span = fit_shape_model(outlines, n_samples - 1);
    for (const auto& o : outlines) {
        const auto back = decode(encode(o, span), span);
        for (std::size_t i = 0; i < back.size(); ++i) {
            worst_round_trip = std::max(worst_round_trip, (back[i] - o.points[i]).cwiseAbs().maxCoeff());
        }
    }
    check.require(worst_round_trip <= 1e-8, "round-trip error " + fmt(worst_round_trip));

    // Mean squared reconstruction error in standardised space against the Gram eigen-oracle.
    Eigen::MatrixXd x(n_samples, span.input_dims());
    for (int i = 0; i < n_samples; ++i) {
        x.row(i) = scale_features(flatten(outlines[static_cast<std::size_t>(i)].points), span).transpose();
    }
    const auto expected = oracle::pca_reconstruction_errors(x, n_samples - 1);
    double worst_rel = 0.0;
    double previous = std::numeric_limits<double>::infinity();
    bool monotone = true;
    for (int d : {1, 2, 3, 5, 10, 23, 50, 100, 150, 199}) {
        const auto model = fit_shape_model(outlines, d);
        double err = 0.0;
        for (const auto& o : outlines) {
            const Eigen::VectorXd z = scale_features(flatten(o.points), model);
            const Eigen::VectorXd rec = scale_features(flatten(decode(encode(o, model), model)), model);
            err += (z - rec).squaredNorm();
        }
        err /= n_samples;
        monotone = monotone && err <= previous + 1e-12;
        previous = err;
        const double ref = expected[static_cast<std::size_t>(d)];
        const double floor = 1e-9 * expected[0];
        worst_rel = std::max(worst_rel, std::abs(err - ref) / std::max(ref, floor));
    }
    check.require(worst_rel <= 1e-6, "reconstruction error off the oracle by " + fmt(worst_rel) + " relative");
    check.require(monotone, "reconstruction error increases with d");
    check.note("orthonormality " + fmt(worst_ortho, 2) + ", round trip " + fmt(worst_round_trip, 2)
               + ", recon rel err " + fmt(worst_rel, 2) + " on 200 outlines");
    return check.outcome();
}

/// Independent restatement of the outline invariants.
std::optional<std::string> outline_problem(const LeafOutline& o)
{
    const auto& p = o.points;
    if (p.size() != 500) {
        return "has " + std::to_string(p.size()) + " points";
    }
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    double perimeter = 0.0;
    double area2 = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) {
        const Vec3& a = p[k];
        const Vec3& b = p[(k + 1) % p.size()];
        const double gap = (b - a).norm();
        lo = std::min(lo, gap);
        hi = std::max(hi, gap);
        perimeter += gap;
        area2 += a.x() * b.y() - b.x() * a.y();
    }
    if (!(hi / lo < 1.0 + 1e-6)) {
        return "gap ratio " + fmt(hi / lo, 12);
    }
    if (std::abs(perimeter - 1.0) > 1e-6) {
        return "perimeter " + fmt(perimeter, 12);
    }
    if (!(area2 < 0.0)) {
        return "not clockwise";
    }
    if (p[0].norm() > 1e-12) {
        return "apex not first";
    }
    for (const auto& q : p) {
        if (q.x() > 1e-12) {
            return "point 0 is not the apex";
        }
    }
    return std::nullopt;
}

LabeledScan scaled(const LabeledScan& scan, double s)
{
    LabeledScan out = scan;
    for (auto& p : out.points) {
        p *= s;
    }
    return out;
}

Outcome outline_invariants()
{
    Check check;
    const auto& bench = fixtures::benchmark_sequence();
    const auto& train = fixtures::training_sequence();
    std::size_t checked = 0;
    for (const auto* seq : {&bench, &train}) {
        for (const auto& scan : seq->scans) {
            for (const auto& o : scan.set.outlines) {
                if (const auto problem = outline_problem(o)) {
                    check.require(false, scan.set.plant_id + " t" + std::to_string(scan.set.time_index) + " leaf "
                                             + std::to_string(o.leaf_id) + ": " + *problem);
                }
                ++checked;
            }
        }
        check.require(seq->summary.extracted == seq->summary.attempted, "defect-free leaves were excluded");
    }

    // Whole-scan scaling with the length tunables scaled alongside.
    auto small = fixtures::benchmark_config();
    small.plants = 1;
    small.steps = 1;
    const LabeledScan base = synth::generate_sequence(small).scans.front();
    const ScanExtraction ref = extract_scan(base);
    double worst = 0.0;
    for (double s : {10.0, 100.0}) {
        PipelineConfig config;
        config.l_max *= s;
        config.presmooth.radius *= s;
        const ScanExtraction x = extract_scan(scaled(base, s), config);
        if (x.set.outlines.size() != ref.set.outlines.size()) {
            check.require(false, "scaling x" + fmt(s) + " changed the extracted leaf count");
            continue;
        }
        for (std::size_t i = 0; i < x.set.outlines.size(); ++i) {
            for (std::size_t k = 0; k < x.set.outlines[i].points.size(); ++k) {
                worst = std::max(worst,
                                 (x.set.outlines[i].points[k] - ref.set.outlines[i].points[k]).cwiseAbs().maxCoeff());
            }
            worst = std::max(worst, std::abs(x.set.outlines[i].scale / s - ref.set.outlines[i].scale)
                                        / ref.set.outlines[i].scale);
        }
    }
    check.require(worst <= 1e-6, "scale invariance error " + fmt(worst));
    check.note(std::to_string(checked) + " outlines pass, scale x{1,10,100} max deviation " + fmt(worst, 2));
    return check.outcome();
}

Outcome mesh_properties()
{
    Check check;
    const PipelineConfig config;
    std::size_t leaves = 0;
    std::size_t multi_loop = 0;
    double worst_edge = 0.0;
    const auto& truth = fixtures::benchmark_sequence().truth;
    for (std::size_t s = 0; s < truth.scans.size(); s += 3) {
        const auto& scan = truth.scans[s];
        const auto emergence = estimate_emergence_point(scan);
        for (const auto& cluster : split_leaves(scan).leaves) {
            const LeafFrame frame = compute_leaf_frame(cluster, emergence);
            const PointList local = presmooth_z(to_local(cluster.points, frame), config.presmooth);
            TriMesh mesh = delaunay_2_5d(local, config.l_max);
            worst_edge = std::max(worst_edge, max_edge_length(mesh));
            mesh = fill_holes(postsmooth_mesh(mesh, config.postsmooth), config.max_hole_edges);
            multi_loop += extract_boundary_loops(mesh).size() != 1;
            ++leaves;
        }
    }
    check.require(worst_edge <= config.l_max, "retained edge of length " + fmt(worst_edge) + " exceeds l_max");
    check.require(multi_loop == 0, std::to_string(multi_loop) + " of " + std::to_string(leaves)
                                       + " leaves keep more than one boundary loop after hole filling");

    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-10.0, 10.0);
    std::uniform_int_distribution<int> count(3, 200);
    int violations = 0;
    for (int trial = 0; trial < 60; ++trial) {
        PointList pts;
        const int n = trial == 0 ? 200 : count(rng);
        for (int i = 0; i < n; ++i) {
            pts.emplace_back(u(rng), u(rng), u(rng));
        }
        violations += oracle::circumcircle_violations(pts, delaunay_2d(pts), 1e-9);
    }
    check.require(violations == 0, std::to_string(violations) + " empty-circumcircle violations");
    check.note(std::to_string(leaves) + " leaves: max edge " + fmt(worst_edge) + " mm, one loop each; 60 clouds "
               + "Delaunay-clean");
    return check.outcome();
}

Outcome synthetic_matching()
{
    Check check;
    const auto start = std::chrono::steady_clock::now();
    const auto training = fixtures::extract_sequence(fixtures::training_config());
    std::vector<TrainingOutline> outlines = fixtures::training_outlines(training);
    const ShapeModel model = fit_shape_model(outlines, 23);
    const auto bench = fixtures::extract_sequence(fixtures::benchmark_config());

    int births = 0;
    int deaths = 0;
    for (const auto& corr : bench.truth.correspondences) {
        std::size_t before = 0, after = 0;
        for (const auto& rec : bench.truth.leaves) {
            before += rec.plant_id == corr.plant_id && rec.time_index == corr.before_time;
            after += rec.plant_id == corr.plant_id && rec.time_index == corr.after_time;
        }
        deaths += static_cast<int>(before - corr.shared_leaf_ids.size());
        births += static_cast<int>(after - corr.shared_leaf_ids.size());
    }
    check.require(births > 0 && deaths > 0, "benchmark lacks leaf birth or death");

    const FeatureConfig slr{true, true, true, false};
    std::vector<FeatureConfig> configs = comparison_configs();
    for (const auto& c : ablation_configs()) {
        if (!(c == slr)) {
            configs.push_back(c);
        }
    }
    const TableReport report = run_table(bench.plants, configs, model);
    const double elapsed = seconds_since(start);
    std::map<std::string, const ConfigRow*> rows;
    double best_shape = 0.0;
    double best_transform = 0.0;
    for (const auto& row : report.rows) {
        rows[row.config.name()] = &row;
        const double s = row.sensitivity.value_or(0.0);
        if (row.config.shape) {
            best_shape = std::max(best_shape, s);
        } else if (row.config.location || row.config.rotation) {
            best_transform = std::max(best_transform, s);
        }
    }
    const ConfigRow& main = *rows.at("shape+location+rotation");
    const double scale_only = rows.at("scale")->sensitivity.value_or(0.0);
    const double sens = main.sensitivity.value_or(0.0);
    const double eta = main.eta.value_or(1.0);
    check.require(sens >= 0.90, "shape+location+rotation sensitivity " + fmt(sens) + " < 0.90");
    check.require(eta <= 0.6, "shape+location+rotation eta " + fmt(eta) + " > 0.6");
    check.require(scale_only <= sens - 0.20, "scale-only sensitivity " + fmt(scale_only) + " not 20 points lower");
    check.require(best_shape > best_transform && best_transform > scale_only,
                  "ordering shape " + fmt(best_shape) + " > transform " + fmt(best_transform) + " > scale "
                      + fmt(scale_only) + " violated");
    check.require(elapsed < 300.0, "runtime " + fmt(elapsed) + " s exceeds 5 min");
    check.note("sensitivity " + fmt(sens) + ", eta " + fmt(eta) + ", best transform-only " + fmt(best_transform)
               + ", scale-only " + fmt(scale_only) + ", " + std::to_string(births) + " births, "
               + std::to_string(deaths) + " deaths, " + fmt(elapsed, 3) + " s");
    return check.outcome();
}

Outcome metric_sanity()
{
    Check check;
    std::mt19937_64 rng(3);
    std::lognormal_distribution<double> g(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> x(5 + trial);
        for (auto& v : x) {
            v = g(rng);
        }
        check.require(overlapping_index(x, x) == 1.0, "eta(X, X) != 1");
        std::vector<double> y;
        for (double v : x) {
            y.push_back(v + 1000.0);
        }
        check.require(overlapping_index(x, y) == 0.0, "eta on disjoint supports != 0");
    }
    // Hand-counted: truth {(0,0),(1,1),(2,2),(3,3)}, predicted hits 3 of them.
    const std::set<std::pair<int, int>> truth{{0, 0}, {1, 1}, {2, 2}, {3, 3}};
    const auto counts = count_matches({{0, 0}, {1, 1}, {2, 2}, {3, 4}, {4, 3}}, truth);
    check.require(counts.tp == 3 && counts.fn == 1 && counts.fp == 2, "hand-counted TP/FN/FP differ");
    check.require(sensitivity(counts) == 0.75, "sensitivity 3/4 != 0.75");
    check.require(sensitivity({{0, 1}, {1, 0}}, {{0, 0}, {1, 1}}) == 0.0, "all-wrong sensitivity != 0");
    check.require(*sensitivity({{0, 0}, {1, 2}, {2, 1}}, {{0, 0}, {1, 1}, {2, 2}}) == 1.0 / 3.0,
                  "sensitivity 1/3 inexact");
    check.require(overlapping_index({0, 1, 2, 3}, {3, 4, 5, 6}, 2) == 0.25, "two-bin hand count != 0.25");
    check.note("eta(X,X)=1 and disjoint=0 on 100 samples; hand counts exact");
    return check.outcome();
}

/// Plant ids of the annotated tomato scans under a Pheno4D root.
std::map<std::string, std::vector<fs::path>> pheno4d_scans(const fs::path& root)
{
    std::map<std::string, std::vector<fs::path>> out;
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
        const std::string name = entry.path().filename().string();
        if (entry.is_regular_file() && name.size() > 6 && name[0] == 'T' && name.ends_with("_a.txt")) {
            out[parse_scan_name(entry.path()).plant_id].push_back(entry.path());
        }
    }
    return out;
}

Outcome pheno4d_reproduction()
{
    const char* root = std::getenv("LEAFMATCH_PHENO4D");
    if (root == nullptr) {
        return {Status::Skip, "LEAFMATCH_PHENO4D not set; run scripts/reproduce_pheno4d.sh with the dataset"};
    }
    Check check;
    const auto scans = pheno4d_scans(root);
    const PipelineConfig config;
    ExtractionSummary summary;
    std::vector<TrainingOutline> training;
    std::vector<PlantSequence> test;
    for (const auto& [plant, files] : scans) {
        PlantSequence seq;
        for (const auto& f : files) {
            const ScanExtraction x = extract_scan(parse_scan(f, config.labels), config);
            summary.add(x);
            if (plant == "T01" || plant == "T02") {
                for (const auto& o : x.set.outlines) {
                    training.push_back({o, x.set.emergence});
                }
            } else {
                seq.push_back(x.set);
            }
        }
        if (!seq.empty()) {
            test.push_back(std::move(seq));
        }
    }
    check.require(!training.empty() && test.size() == 5, "expected annotated plants T01 to T07");
    if (training.empty() || test.empty()) {
        return check.outcome();
    }
    const ShapeModel model = fit_shape_model(training, config.dims);
    const auto report = run_table(test, {FeatureConfig{true, true, true, false}, FeatureConfig::parse("location")},
                                  model, config.bins);
    const double slr = report.rows[0].sensitivity.value_or(0.0);
    const double loc = report.rows[1].sensitivity.value_or(0.0);
    check.require(std::abs(slr - 0.7540) <= 0.05, "shape+location+rotation sensitivity " + fmt(slr));
    check.require(std::abs(loc - 0.6051) <= 0.05, "location-only sensitivity " + fmt(loc));
    check.require(std::abs(summary.yield() - 0.68) <= 0.05, "extraction yield " + fmt(summary.yield()));
    check.note("sensitivity " + fmt(slr) + " (eta " + fmt(report.rows[0].eta.value_or(1.0)) + "), location-only "
               + fmt(loc) + " (eta " + fmt(report.rows[1].eta.value_or(1.0)) + "), yield " + fmt(summary.yield()));
    return check.outcome();
}

}  // namespace

int main()
{
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
        {"assignment matches brute-force enumeration", assignment_oracle},
        {"mahalanobis reduces to closed forms", mahalanobis_correctness},
        {"shape space PCA properties", pca_properties},
        {"outline invariants and scale invariance", outline_invariants},
        {"mesh stage properties", mesh_properties},
        {"end-to-end synthetic matching", synthetic_matching},
        {"metric sanity", metric_sanity},
        {"Pheno4D reproduction", pheno4d_reproduction},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome outcome;
        try {
            outcome = criteria[i].second();
        } catch (const std::exception& e) {
            outcome = {Status::Fail, std::string("exception: ") + e.what()};
        }
        const char* label = outcome.status == Status::Pass ? "PASS" : outcome.status == Status::Skip ? "SKIP" : "FAIL";
        failed += outcome.status == Status::Fail;
        std::cout << "criterion " << i + 1 << " [" << label << "] " << criteria[i].first << ": " << outcome.detail
                  << std::endl;
    }
    std::cout << (failed == 0 ? "acceptance: all criteria met" : "acceptance: " + std::to_string(failed) + " failed")
              << std::endl;
    return failed == 0 ? 0 : 1;
}
