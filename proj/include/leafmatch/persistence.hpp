#pragma once

#include "leafmatch/eval_harness.hpp"
#include "leafmatch/pipeline.hpp"
#include "leafmatch/synth_leaf.hpp"

#include <filesystem>
#include <string>

namespace leafmatch {

/// Artifacts are JSON documents with "schema" and "version" fields.  Doubles are
/// written in shortest round-trip form, so load(save(x)) reproduces x exactly.
/// Loading throws SchemaError on a wrong schema, an unsupported version, a missing
/// field or a field of the wrong type.
inline constexpr int kFormatVersion = 1;

std::string outlines_to_json(const ScanExtraction& extraction);
ScanExtraction outlines_from_json(const std::string& text);

std::string model_to_json(const ShapeModel& model);
ShapeModel model_from_json(const std::string& text);

std::string match_to_json(const MatchResult& match);
MatchResult match_from_json(const std::string& text);

std::string correspondences_to_json(const std::vector<synth::Correspondence>& table);
std::vector<synth::Correspondence> correspondences_from_json(const std::string& text);

/// Per-leaf ground truth and plant emergence points of a generated sequence.
std::string synth_truth_to_json(const synth::SynthSequence& sequence);

/// Config files are plain JSON objects without a header.  Keys that are present
/// override `base`; unknown keys throw SchemaError.
PipelineConfig pipeline_config_from_json(const std::string& text, const PipelineConfig& base = {});
std::string pipeline_config_to_json(const PipelineConfig& config);
synth::SynthConfig synth_config_from_json(const std::string& text, const synth::SynthConfig& base = {});

std::string report_to_json(const TableReport& report);

std::string summary_to_json(const ExtractionSummary& summary);

/// Cost matrix with leaf ids as row and column headers.
std::string cost_matrix_csv(const CostMatrix& costs);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

inline void save_outlines(const std::filesystem::path& p, const ScanExtraction& x) { write_text_file(p, outlines_to_json(x)); }
inline ScanExtraction load_outlines(const std::filesystem::path& p) { return outlines_from_json(read_text_file(p)); }
inline void save_model(const std::filesystem::path& p, const ShapeModel& m) { write_text_file(p, model_to_json(m)); }
inline ShapeModel load_model(const std::filesystem::path& p) { return model_from_json(read_text_file(p)); }
inline void save_match(const std::filesystem::path& p, const MatchResult& m) { write_text_file(p, match_to_json(m)); }
inline MatchResult load_match(const std::filesystem::path& p) { return match_from_json(read_text_file(p)); }

}  // namespace leafmatch
