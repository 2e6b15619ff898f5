#pragma once

// Shared synthetic data for the test binaries.  Everything is generated from fixed
// seeds and cached per process.

#include "leafmatch/eval_harness.hpp"
#include "leafmatch/pipeline.hpp"
#include "leafmatch/synth_leaf.hpp"

#include <cstdint>
#include <vector>

namespace fixtures {

/// A blade sampled in its own frame, lifted 30 mm and pushed 10 mm out along +x so
/// the origin acts as an emergence point behind the leaf base.
leafmatch::LeafCluster blade_cluster(const leafmatch::synth::BladeShape& blade, std::uint64_t seed,
                                     double density = 6.0);

/// `count` outlines from random blades (alternating entire/lobed), extracted with the
/// default pipeline.  Archetype of outline i is entire for even i.
std::vector<leafmatch::LeafOutline> blade_outlines(int count, std::uint64_t seed);

/// Extracted scans of a synthetic sequence, one PlantSequence per plant.
struct ExtractedSequence {
    leafmatch::synth::SynthSequence truth;
    std::vector<leafmatch::ScanExtraction> scans;  ///< same order as truth.scans
    std::vector<leafmatch::PlantSequence> plants;
    leafmatch::ExtractionSummary summary;
};

ExtractedSequence extract_sequence(const leafmatch::synth::SynthConfig& config);

/// Six training plants (indices 10 to 15) and their shape model, cached.
leafmatch::synth::SynthConfig training_config();
const ExtractedSequence& training_sequence();
const leafmatch::ShapeModel& training_model();
std::vector<leafmatch::TrainingOutline> training_outlines(const ExtractedSequence& seq);

/// Seeded three-plant, six-step benchmark with birth, death, per-leaf growth rates
/// and whole-plant turns between scans, cached.
leafmatch::synth::SynthConfig benchmark_config();
const ExtractedSequence& benchmark_sequence();

}  // namespace fixtures
