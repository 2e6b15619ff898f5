#include "leafmatch/pipeline.hpp"

#include "leafmatch/log.hpp"

#include <algorithm>
#include <atomic>
#include <thread>

namespace leafmatch {

void PipelineConfig::validate() const
{
    if (!(l_max > 0.0)) {
        throw DataError("l_max must be positive");
    }
    if (!(presmooth.radius > 0.0) || !(presmooth.factor > 0.0) || presmooth.iterations < 0) {
        throw DataError("presmooth parameters must be positive");
    }
    if (!(postsmooth.factor > 0.0) || postsmooth.iterations < 0) {
        throw DataError("postsmooth parameters must be positive");
    }
    if (max_hole_edges < 3) {
        throw DataError("max_hole_edges must be at least 3");
    }
    if (n_points < 8) {
        throw DataError("n must be at least 8");
    }
    if (dims < 1) {
        throw DataError("d must be at least 1");
    }
    if (bins < 1) {
        throw DataError("bins must be at least 1");
    }
    if (min_cluster < 3) {
        throw DataError("min cluster size must be at least 3");
    }
    if (threads < 0) {
        throw DataError("threads must be non-negative");
    }
}

namespace {

constexpr std::pair<Exclusion, const char*> kExclusionNames[] = {
    {Exclusion::Undersized, "undersized"},
    {Exclusion::AxisDegenerate, "axis_degenerate"},
    {Exclusion::MeshFailed, "mesh_failed"},
    {Exclusion::OpenBoundary, "open_boundary"},
    {Exclusion::SubLoop, "sub_loop"},
    {Exclusion::UnevenSampling, "uneven_sampling"},
};

Exclusion classify(const ExtractionError& e)
{
    switch (e.kind()) {
    case ExtractionError::Kind::OpenChain:
        return Exclusion::OpenBoundary;
    case ExtractionError::Kind::SubLoop:
        return Exclusion::SubLoop;
    case ExtractionError::Kind::ZeroLength:
    case ExtractionError::Kind::UnevenSampling:
        break;
    }
    return Exclusion::UnevenSampling;
}

}  // namespace

const char* exclusion_name(Exclusion e)
{
    for (const auto& [k, name] : kExclusionNames) {
        if (k == e) {
            return name;
        }
    }
    return "unknown";
}

Exclusion parse_exclusion(const std::string& name)
{
    for (const auto& [k, label] : kExclusionNames) {
        if (name == label) {
            return k;
        }
    }
    throw SchemaError("unknown exclusion reason '" + name + "'");
}

std::vector<Exclusion> all_exclusions()
{
    std::vector<Exclusion> out;
    for (const auto& entry : kExclusionNames) {
        out.push_back(entry.first);
    }
    return out;
}

LeafOutline extract_leaf(const LeafCluster& cluster, const EmergencePoint& emergence, const PipelineConfig& config)
{
    const LeafFrame frame = compute_leaf_frame(cluster.points, emergence);
    const PointList local = presmooth_z(to_local(cluster.points, frame), config.presmooth);
    TriMesh mesh = delaunay_2_5d(local, config.l_max);
    mesh = postsmooth_mesh(mesh, config.postsmooth);
    mesh = fill_holes(mesh, config.max_hole_edges);
    const BoundaryLoop outer = select_and_clean(extract_boundary_loops(mesh), mesh);
    LeafOutline outline = orient_and_sample(outer, mesh, frame, config.n_points, centroid(cluster.points));
    outline.plant_id = cluster.plant_id;
    outline.time_index = cluster.time_index;
    outline.leaf_id = cluster.leaf_id;
    return outline;
}

bool likely_axis_misaligned(const LeafOutline& outline, const Vec3& emergence)
{
    if (outline.points.empty()) {
        return false;
    }
    const auto base = std::min_element(outline.points.begin(), outline.points.end(),
                                       [](const Vec3& a, const Vec3& b) { return a.x() < b.x(); });
    const Vec3 base_global = outline.frame.rotation() * (outline.scale * *base) + outline.frame.origin;
    return (outline.frame.origin - emergence).head<2>().norm() < (base_global - emergence).head<2>().norm();
}

ScanExtraction extract_scan(const LabeledScan& scan, const PipelineConfig& config)
{
    config.validate();
    ScanExtraction result;
    result.set.plant_id = scan.plant_id;
    result.set.time_index = scan.time_index;
    EmergencePoint emergence;
    if (config.emergence) {
        emergence.position = *config.emergence;
    } else {
        emergence = estimate_emergence_point(scan, config.labels);
        if (emergence.fallback) {
            log::warn("{} t={}: no stem points, emergence falls back to the scan base", scan.plant_id,
                      scan.time_index);
        }
    }
    result.set.emergence = emergence.position;
    result.set.emergence_fallback = emergence.fallback;

    const LeafSplit split = split_leaves(scan, config.labels, config.min_cluster);
    for (int id : split.undersized_ids) {
        result.excluded.push_back({id, Exclusion::Undersized, "cluster below minimum size"});
    }

    struct Slot {
        std::optional<LeafOutline> outline;
        std::optional<ExcludedLeaf> failure;
    };
    std::vector<Slot> slots(split.leaves.size());
    auto work = [&](std::size_t i) {
        const LeafCluster& cluster = split.leaves[i];
        try {
            slots[i].outline = extract_leaf(cluster, emergence, config);
        } catch (const ExtractionError& e) {
            slots[i].failure = ExcludedLeaf{cluster.leaf_id, classify(e), e.what()};
        } catch (const FrameError& e) {
            slots[i].failure = ExcludedLeaf{cluster.leaf_id, Exclusion::AxisDegenerate, e.what()};
        } catch (const MeshError& e) {
            slots[i].failure = ExcludedLeaf{cluster.leaf_id, Exclusion::MeshFailed, e.what()};
        }
    };

    unsigned workers = config.threads == 0 ? std::max(1u, std::thread::hardware_concurrency())
                                           : static_cast<unsigned>(config.threads);
    workers = std::min<unsigned>(workers, static_cast<unsigned>(split.leaves.size()));
    if (workers <= 1) {
        for (std::size_t i = 0; i < slots.size(); ++i) {
            work(i);
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < slots.size(); i = next++) {
                    work(i);
                }
            });
        }
        for (auto& t : pool) {
            t.join();
        }
    }

    for (auto& slot : slots) {
        if (slot.outline) {
            if (likely_axis_misaligned(*slot.outline, emergence.position)) {
                result.misaligned_ids.push_back(slot.outline->leaf_id);
            }
            result.set.outlines.push_back(std::move(*slot.outline));
        } else {
            log::debug("{} t={} leaf {}: {} ({})", scan.plant_id, scan.time_index, slot.failure->leaf_id,
                       exclusion_name(slot.failure->reason), slot.failure->detail);
            result.excluded.push_back(std::move(*slot.failure));
        }
    }
    std::sort(result.excluded.begin(), result.excluded.end(),
              [](const ExcludedLeaf& a, const ExcludedLeaf& b) { return a.leaf_id < b.leaf_id; });
    return result;
}

void ExtractionSummary::add(const ScanExtraction& scan)
{
    ++scans;
    attempted += scan.attempted();
    extracted += scan.set.outlines.size();
    for (const auto& e : scan.excluded) {
        ++excluded[e.reason];
    }
    misaligned += scan.misaligned_ids.size();
}

double ExtractionSummary::yield() const
{
    return attempted == 0 ? 0.0 : static_cast<double>(extracted) / static_cast<double>(attempted);
}

}  // namespace leafmatch
