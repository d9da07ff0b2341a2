#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vfocus/analysis.hpp"
#include "vfocus/composer.hpp"
#include "vfocus/image.hpp"
#include "vfocus/predictor.hpp"
#include "vfocus/refine.hpp"
#include "vfocus/regions.hpp"

namespace vfocus::cli {

enum ExitCode : int {
  kOk = 0,
  kRuntimeError = 1,
  kConfigError = 2,
  kPredictorError = 3,
  kBudgetExhausted = 4,
};

/// One image of a run. `name` is the path text as the user wrote it and is what reports show.
struct ImageJob {
  std::string name;
  std::filesystem::path image;
  std::filesystem::path labels;
  std::vector<std::filesystem::path> ground_truth;
};

struct RunConfig {
  std::vector<ImageJob> jobs;
  std::string model;  // exec:<program>, http:<url> or synthetic:<expression.json>
  FillPolicy fill;
  RefinementConfig refinement;
  double merge_threshold = kDefaultMergeThreshold;
  double iou_threshold = kDefaultIouThreshold;
  BehaviorThresholds thresholds;
  std::filesystem::path out_dir = ".";
  std::size_t workers = 1;
  RemoteOptions remote;
};

/// Parses a manifest: JSON array of {"image", "labels", "gt": [...]}. Relative paths resolve
/// against the manifest's directory.
std::vector<ImageJob> load_manifest(const std::filesystem::path& manifest);

/// Builds the predictor named by `endpoint`. `synthetic:<file>` loads an expression JSON file and
/// answers "target"/"other" from the query state, for fixtures and smoke tests.
std::unique_ptr<Predictor> make_model(const std::string& endpoint, const RemoteOptions& remote);

/// Loads the label map of `job` and applies region merging.
Scene load_scene(const ImageJob& job, double merge_threshold);

/// Regions kept by every final state are tinted red, by some of them white (45% blend);
/// all other pixels are dimmed to 35% brightness.
RgbImage render_overlay(const RgbImage& image, const RegionPartition& partition,
                        std::span<const StateVector> states);

/// Runs refinement for every job; writes `<stem>.states.json` and `<stem>.overlay.png`.
int cmd_refine(const RunConfig& config, std::ostream& err);

/// Full pipeline per job; writes `<stem>.report.json` and `corpus_report.json`.
int cmd_analyze(const RunConfig& config, std::ostream& err);

/// Command-line entry point shared by the `vfocus` binary and tests.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace vfocus::cli
