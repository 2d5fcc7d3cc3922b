#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "swrecon/datagen.hpp"
#include "swrecon/dmphase.hpp"
#include "swrecon/labeling.hpp"
#include "swrecon/piphase.hpp"
#include "swrecon/segmentation.hpp"

namespace swrecon {

/// Whole-run configuration. Parsed strictly: unknown keys anywhere in the
/// document are rejected before any compute happens.
struct RunConfig {
    std::string system;   // benchmark name, or empty when dataset is set
    std::string dataset;  // dataset path, or empty when system is set
    std::uint64_t seed = 0;
    std::string out_dir = "run";
    std::size_t n = 5000;
    double noise = 0.0;
    std::optional<TimeDistribution> dist;  // default: each benchmark's law
    LibrarySpec library;
    SegmentationOptions segmentation;
    DmConfig dm;
    PiConfig pi;
    int eval_grid = 2000;

    nlohmann::json to_json() const;
    static RunConfig from_json(const nlohmann::json& j);
    static RunConfig load(const std::string& path);

    /// FNV-1a of the canonical serialization; stamped into reports.
    std::string hash() const;
};

/// Refuse to clobber existing non-empty outputs unless forced.
void ensure_output_path(const std::string& path, bool force);
void ensure_output_dir(const std::string& dir, bool force);

/// Piece directory: piece_XX.csv files (+ hidden-label sidecars) plus a
/// manifest with the recovered order, radius and row assignments.
void write_pieces(const std::string& dir, const SegmentationResult& seg, bool force);

struct PieceSet {
    std::vector<ObservationPiece> pieces;
    double radius = 0.0;
    std::vector<int> assignments;  // ordered-piece id per original dataset row
};
PieceSet read_pieces(const std::string& dir);

void write_dm_history(const std::string& path, const std::vector<DmHistoryRow>& rows);
void write_pi_history(const std::string& path, const std::vector<PiHistoryRow>& rows);

/// labels.csv in original dataset row order (columns index,t).
void write_labels(const std::string& path, const std::vector<std::vector<double>>& per_piece,
                  const std::vector<int>& assignments);
std::vector<double> read_labels(const std::string& path);

/// generate/ingest -> segment -> fit-dm -> fit-pi -> reconstruct ->
/// evaluate, persisting every stage under cfg.out_dir. Stage failures are
/// rethrown with the stage name; earlier artifacts stay on disk.
ReconstructionReport run_pipeline(const RunConfig& cfg, bool force = false);

/// Re-derive plot-ready CSVs (and minimal SVG renderings) from a finished
/// run directory: loss curves, trajectory overlay, per-point label errors,
/// and the landscape heatmap when present.
void emit_plots(const std::string& run_dir, const std::string& plots_dir, bool force = false);

}  // namespace swrecon
