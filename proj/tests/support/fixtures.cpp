#include "fixtures.hpp"

#include <map>

namespace fixtures {

using namespace leafmatch;

LeafCluster blade_cluster(const synth::BladeShape& blade, std::uint64_t seed, double density)
{
    LeafCluster cluster;
    cluster.plant_id = "B";
    cluster.leaf_id = 2;
    for (const auto& p : synth::sample_blade(blade, density, seed)) {
        cluster.points.push_back(p + Vec3(10.0, 0.0, 30.0));
    }
    return cluster;
}

std::vector<LeafOutline> blade_outlines(int count, std::uint64_t seed)
{
    std::vector<LeafOutline> out;
    const PipelineConfig config;
    const EmergencePoint origin;
    for (int i = 0; i < count; ++i) {
        const auto archetype = i % 2 == 0 ? synth::Archetype::Entire : synth::Archetype::Lobed;
        const auto blade = synth::random_blade(seed * 1000 + static_cast<std::uint64_t>(i), archetype);
        LeafCluster cluster = blade_cluster(blade, seed + static_cast<std::uint64_t>(i));
        cluster.leaf_id = 2 + i;
        out.push_back(extract_leaf(cluster, origin, config));
    }
    return out;
}

ExtractedSequence extract_sequence(const synth::SynthConfig& config)
{
    ExtractedSequence seq;
    seq.truth = synth::generate_sequence(config);
    std::map<std::string, PlantSequence> by_plant;
    for (const auto& scan : seq.truth.scans) {
        seq.scans.push_back(extract_scan(scan));
        seq.summary.add(seq.scans.back());
        by_plant[scan.plant_id].push_back(seq.scans.back().set);
    }
    for (auto& [id, plant] : by_plant) {
        seq.plants.push_back(std::move(plant));
    }
    return seq;
}

synth::SynthConfig training_config()
{
    synth::SynthConfig c;
    c.seed = 7;
    c.plants = 6;
    c.first_plant_index = 10;
    return c;
}

const ExtractedSequence& training_sequence()
{
    static const ExtractedSequence seq = extract_sequence(training_config());
    return seq;
}

std::vector<TrainingOutline> training_outlines(const ExtractedSequence& seq)
{
    std::vector<TrainingOutline> out;
    for (const auto& scan : seq.scans) {
        for (const auto& o : scan.set.outlines) {
            out.push_back({o, scan.set.emergence});
        }
    }
    return out;
}

const ShapeModel& training_model()
{
    static const ShapeModel model = fit_shape_model(training_outlines(training_sequence()), 23);
    return model;
}

synth::SynthConfig benchmark_config()
{
    synth::SynthConfig c;
    c.seed = 3;
    c.plants = 3;
    c.steps = 6;
    c.noise_mm = 0.3;
    c.rigid_deg = 2.0;
    c.plant_yaw_deg = 40.0;
    c.growth_jitter = 0.15;
    c.birth_prob = 0.3;
    c.death_prob = 0.05;
    return c;
}

const ExtractedSequence& benchmark_sequence()
{
    static const ExtractedSequence seq = extract_sequence(benchmark_config());
    return seq;
}

}  // namespace fixtures
