#include <ostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "vfocus/cli/commands.hpp"
#include "vfocus/errors.hpp"

namespace vfocus::cli {

namespace {

struct RawOptions {
  std::string image;
  std::string labels;
  std::vector<std::string> gt;
  std::string corpus;
  std::string model;
  std::string fill = "gray";
  std::string beam = "none";
  std::string beam_scope = "round";
  std::size_t max_queries = 50'000;
  double merge_threshold = kDefaultMergeThreshold;
  double iou = kDefaultIouThreshold;
  std::string thresholds = "0.5,0.5,0.05";
  std::string out = ".";
  std::size_t jobs = 1;
  std::size_t max_in_flight = 8;
  long timeout_ms = 30'000;
  bool nondeterministic = false;
};

void add_common(CLI::App& cmd, RawOptions& o) {
  cmd.add_option("--image", o.image, "Input RGB image (PNG)");
  cmd.add_option("--labels", o.labels, "Region label map (single-channel 16-bit PNG)");
  cmd.add_option("--gt", o.gt, "Ground-truth mask PNG (repeatable)");
  cmd.add_option("--corpus", o.corpus, "Manifest: JSON array of {image, labels, gt[]}");
  cmd.add_option("--model", o.model, "exec:<program>, http:<url> or synthetic:<expr.json>")->required();
  cmd.add_option("--fill", o.fill, "gray, mean or #RRGGBB")->capture_default_str();
  cmd.add_option("--beam", o.beam, "Beam size k, or none")->capture_default_str();
  cmd.add_option("--beam-scope", o.beam_scope, "round or parent")
      ->check(CLI::IsMember({"round", "parent"}))
      ->capture_default_str();
  cmd.add_option("--max-queries", o.max_queries, "Query budget per image")->capture_default_str();
  cmd.add_option("--merge-threshold", o.merge_threshold, "Minimum region area fraction")
      ->capture_default_str();
  cmd.add_option("--iou", o.iou, "IoU threshold for ground-truth matching")->capture_default_str();
  cmd.add_option("--thresholds", o.thresholds, "Behaviour thresholds p,r,d")->capture_default_str();
  cmd.add_option("--out", o.out, "Output directory")->capture_default_str();
  cmd.add_option("--jobs", o.jobs, "Images processed in parallel")->capture_default_str();
  cmd.add_option("--max-in-flight", o.max_in_flight, "Outstanding remote requests")
      ->capture_default_str();
  cmd.add_option("--timeout-ms", o.timeout_ms, "Remote request timeout")->capture_default_str();
  cmd.add_flag("--nondeterministic", o.nondeterministic,
               "Mark the model as non-deterministic (first answer per state is kept)");
}

RunConfig to_config(const RawOptions& o) {
  RunConfig config;
  if (!o.corpus.empty()) {
    if (!o.image.empty() || !o.labels.empty())
      throw InvalidInput("--corpus cannot be combined with --image/--labels");
    config.jobs = load_manifest(o.corpus);
  } else {
    if (o.image.empty() || o.labels.empty())
      throw InvalidInput("either --corpus or both --image and --labels are required");
    ImageJob job;
    job.name = o.image;
    job.image = o.image;
    job.labels = o.labels;
    for (const auto& g : o.gt) job.ground_truth.emplace_back(g);
    config.jobs.push_back(std::move(job));
  }
  config.model = o.model;
  config.fill = FillPolicy::parse(o.fill);
  if (o.beam != "none") {
    std::size_t k = 0;
    try {
      std::size_t used = 0;
      k = std::stoul(o.beam, &used);
      if (used != o.beam.size()) throw std::invalid_argument(o.beam);
    } catch (const std::exception&) {
      throw InvalidInput("--beam must be a positive integer or none");
    }
    if (k == 0) throw InvalidInput("--beam must be at least 1");
    config.refinement.beam_size = k;
  }
  config.refinement.beam_scope = o.beam_scope == "parent" ? BeamScope::PerParent : BeamScope::PerRound;
  config.refinement.max_queries = o.max_queries;
  config.merge_threshold = o.merge_threshold;
  config.iou_threshold = o.iou;
  config.thresholds = BehaviorThresholds::parse(o.thresholds);
  config.out_dir = o.out;
  config.workers = std::max<std::size_t>(o.jobs, 1);
  config.remote.max_in_flight = std::max<std::size_t>(o.max_in_flight, 1);
  config.remote.timeout = std::chrono::milliseconds(o.timeout_ms);
  config.remote.deterministic = !o.nondeterministic;
  return config;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Find the minimal region sets a black-box image classifier depends on"};
  app.require_subcommand(1);
  RawOptions refine_opts;
  RawOptions analyze_opts;
  auto* refine_cmd = app.add_subcommand("refine", "Search final states; write states JSON and overlay");
  auto* analyze_cmd = app.add_subcommand("analyze", "Search, translate, score and classify");
  add_common(*refine_cmd, refine_opts);
  add_common(*analyze_cmd, analyze_opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << nlohmann::json{{"error", "config"}, {"message", e.what()}}.dump() << '\n';
    return kConfigError;
  }

  const bool analyze = analyze_cmd->parsed();
  RunConfig config;
  try {
    config = to_config(analyze ? analyze_opts : refine_opts);
  } catch (const Error& e) {
    err << nlohmann::json{{"error", "config"}, {"message", e.what()}}.dump() << '\n';
    return kConfigError;
  }
  return analyze ? cmd_analyze(config, err) : cmd_refine(config, err);
}

}  // namespace vfocus::cli
