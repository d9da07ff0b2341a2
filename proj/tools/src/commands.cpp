#include "vfocus/cli/commands.hpp"

#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "vfocus/errors.hpp"
#include "vfocus/logic.hpp"

namespace vfocus::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Failure {
  int code = kRuntimeError;
  std::string kind;
  std::string message;
};

Failure describe_current_exception() {
  try {
    throw;
  } catch (const BudgetExceeded& e) {
    return {kBudgetExhausted, "budget", e.what()};
  } catch (const PredictorError& e) {
    std::string message = e.what();
    if (e.batch_index()) message += " (batch item " + std::to_string(*e.batch_index()) + ")";
    return {kPredictorError, std::string("predictor_") + to_string(e.kind()), message};
  } catch (const InvalidInput& e) {
    return {kConfigError, "config", e.what()};
  } catch (const IoError& e) {
    return {kRuntimeError, "io", e.what()};
  } catch (const std::exception& e) {
    return {kRuntimeError, "internal", e.what()};
  }
}

void report_failure(std::ostream& err, const Failure& f, const std::string& image = {}) {
  json j{{"error", f.kind}, {"message", f.message}};
  if (!image.empty()) j["image"] = image;
  err << j.dump() << '\n';
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

json states_json(std::span<const StateVector> states) {
  json out = json::array();
  for (const auto& s : states) out.push_back(s.regions());
  return out;
}

const char* scope_name(BeamScope scope) {
  return scope == BeamScope::PerRound ? "round" : "parent";
}

json provenance_json(const RunConfig& config) {
  const auto& r = config.refinement;
  return {
      {"fill", config.fill.describe()},
      {"beam_size", r.beam_size ? json(*r.beam_size) : json(nullptr)},
      {"beam_scope", scope_name(r.beam_scope)},
      {"iou_threshold", config.iou_threshold},
      {"merge_threshold", config.merge_threshold},
      {"thresholds", {config.thresholds.precision_high, config.thresholds.recall_high,
                      config.thresholds.divergence_high}},
  };
}

json metrics_json(const MetricsReport& m, const BehaviorThresholds& thresholds) {
  const BehaviorClass behavior = classify(m, thresholds);
  std::vector<std::string> flags = m.flags;
  if (behavior == BehaviorClass::Distracted && m.divergence < thresholds.divergence_high)
    flags.emplace_back(kFlagDistractedLowDivergence);
  std::sort(flags.begin(), flags.end());
  return {
      {"precision", m.precision},
      {"recall", m.recall},
      {"divergence", m.divergence},
      {"behavior", std::string(to_string(behavior))},
      {"flags", flags},
  };
}

/// Output file stems, made unique by appending the job index on collision.
std::vector<std::string> output_stems(const std::vector<ImageJob>& jobs) {
  std::map<std::string, int> uses;
  for (const auto& j : jobs) ++uses[j.image.stem().string()];
  std::vector<std::string> stems;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    std::string stem = jobs[i].image.stem().string();
    if (uses[stem] > 1) stem += "_" + std::to_string(i);
    stems.push_back(std::move(stem));
  }
  return stems;
}

template <typename Result, typename Fn>
std::vector<Result> run_pool(std::size_t count, std::size_t workers, Fn&& fn) {
  std::vector<Result> results(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) results[i] = fn(i);
  };
  workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(count, 1));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  return results;
}

void validate(const RunConfig& config) {
  if (config.jobs.empty()) throw InvalidInput("no images given");
  if (config.model.empty()) throw InvalidInput("--model is required");
  if (!(config.merge_threshold >= 0.0 && config.merge_threshold < 1.0))
    throw InvalidInput("--merge-threshold must lie in [0, 1)");
  if (!(config.iou_threshold > 0.0 && config.iou_threshold <= 1.0))
    throw InvalidInput("--iou must lie in (0, 1]");
  for (const auto& job : config.jobs) {
    for (const auto* p : {&job.image, &job.labels})
      if (!fs::exists(*p)) throw InvalidInput("no such file: " + p->string());
    for (const auto& g : job.ground_truth)
      if (!fs::exists(g)) throw InvalidInput("no such file: " + g.string());
  }
  fs::create_directories(config.out_dir);
}

struct RefineOutcome {
  std::optional<FinalStateSet> states;
  std::optional<Scene> scene;
  std::optional<Failure> failure;
};

RefineOutcome refine_job(const RunConfig& config, const ImageJob& job, Predictor& model) {
  RefineOutcome out;
  try {
    Scene scene = load_scene(job, config.merge_threshold);
    out.states = refine(scene, model, config.fill, config.refinement);
    out.scene = std::move(scene);
  } catch (const BudgetExceeded& e) {
    out.states = e.partial_result();
    out.failure = describe_current_exception();
  } catch (...) {
    out.failure = describe_current_exception();
  }
  return out;
}

}  // namespace

std::vector<ImageJob> load_manifest(const fs::path& manifest) {
  json j;
  try {
    j = json::parse(read_text(manifest));
  } catch (const json::exception& e) {
    throw InvalidInput("manifest " + manifest.string() + " is not valid JSON: " + e.what());
  }
  if (!j.is_array()) throw InvalidInput("manifest must be a JSON array");
  const fs::path base = manifest.parent_path();
  auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base / p; };
  std::vector<ImageJob> jobs;
  try {
    for (const auto& entry : j) {
      ImageJob job;
      job.name = entry.at("image").get<std::string>();
      job.image = resolve(job.name);
      job.labels = resolve(entry.at("labels").get<std::string>());
      if (entry.contains("gt"))
        for (const auto& g : entry["gt"]) job.ground_truth.push_back(resolve(g.get<std::string>()));
      jobs.push_back(std::move(job));
    }
  } catch (const json::exception& e) {
    throw InvalidInput("manifest entry malformed: " + std::string(e.what()));
  }
  return jobs;
}

std::unique_ptr<Predictor> make_model(const std::string& endpoint, const RemoteOptions& remote) {
  constexpr std::string_view synthetic = "synthetic:";
  if (endpoint.starts_with(synthetic))
    return std::make_unique<SyntheticLogicModel>(
        logic_from_json(read_text(endpoint.substr(synthetic.size()))));
  return connect_model(endpoint, remote);
}

Scene load_scene(const ImageJob& job, double merge_threshold) {
  Scene scene;
  scene.id = job.name.empty() ? job.image.string() : job.name;
  scene.image = read_rgb_png(job.image);
  scene.partition = merge_small_regions(load_label_map(job.labels), merge_threshold);
  if (scene.image.width() != scene.partition.width() ||
      scene.image.height() != scene.partition.height())
    throw InvalidInput(job.labels.string() + " does not match the size of " + job.image.string());
  return scene;
}

int cmd_refine(const RunConfig& config, std::ostream& err) {
  std::unique_ptr<Predictor> model;
  try {
    validate(config);
    model = make_model(config.model, config.remote);
  } catch (...) {
    const Failure f = describe_current_exception();
    report_failure(err, f);
    return f.code;
  }
  CachingPredictor cached(*model);
  const auto stems = output_stems(config.jobs);

  auto outcomes = run_pool<RefineOutcome>(config.jobs.size(), config.workers, [&](std::size_t i) {
    return refine_job(config, config.jobs[i], cached);
  });

  int exit_code = kOk;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    auto& o = outcomes[i];
    try {
      if (o.failure) {
        if (o.states && o.states->partial)
          write_text(config.out_dir / (stems[i] + ".partial.json"), to_json(*o.states));
        throw *o.failure;
      }
      write_text(config.out_dir / (stems[i] + ".states.json"), to_json(*o.states));
      write_rgb_png(config.out_dir / (stems[i] + ".overlay.png"),
                    render_overlay(o.scene->image, o.scene->partition, o.states->states));
    } catch (const Failure& f) {
      report_failure(err, f, config.jobs[i].name);
      if (exit_code == kOk) exit_code = f.code;
    } catch (...) {
      const Failure f = describe_current_exception();
      report_failure(err, f, config.jobs[i].name);
      if (exit_code == kOk) exit_code = f.code;
    }
  }
  return exit_code;
}

int cmd_analyze(const RunConfig& config, std::ostream& err) {
  std::unique_ptr<Predictor> model;
  try {
    validate(config);
    for (const auto& job : config.jobs)
      if (job.ground_truth.empty())
        throw InvalidInput("analyze needs ground-truth masks for " + job.name);
    model = make_model(config.model, config.remote);
  } catch (...) {
    const Failure f = describe_current_exception();
    report_failure(err, f);
    return f.code;
  }
  CachingPredictor cached(*model);
  const auto stems = output_stems(config.jobs);

  struct Outcome {
    std::optional<json> report;
    std::optional<MetricsReport> metrics;
    std::optional<FinalStateSet> partial;
    std::optional<Failure> failure;
  };

  auto outcomes = run_pool<Outcome>(config.jobs.size(), config.workers, [&](std::size_t i) {
    const ImageJob& job = config.jobs[i];
    Outcome out;
    RefineOutcome refined = refine_job(config, job, cached);
    if (refined.failure) {
      out.failure = refined.failure;
      if (refined.states && refined.states->partial) out.partial = refined.states;
      return out;
    }
    try {
      const Scene& scene = *refined.scene;
      const FinalStateSet& finals = *refined.states;
      const StateVector gt = ground_truth_state(scene.partition, load_ground_truth(job.ground_truth),
                                                config.iou_threshold);
      const LogicExpr logic = translate(finals.states);
      const MetricsReport metrics = evaluate(finals.states, gt, scene.partition);

      json report = metrics_json(metrics, config.thresholds);
      report["image"] = job.name;
      report["region_count"] = scene.partition.region_count();
      report["reference_label"] = finals.reference_label.value();
      report["query_count"] = finals.query_count;
      report["state_count"] = metrics.state_count;
      report["states"] = states_json(finals.states);
      report["ground_truth"] = gt.regions();
      report["logic"] = render(logic);
      report["logic_expr"] = json::parse(to_json(logic));
      report["provenance"] = provenance_json(config);
      if (!cached.deterministic()) report["flags"].push_back("nondeterministic_predictor");
      out.report = std::move(report);
      out.metrics = metrics;
    } catch (...) {
      out.failure = describe_current_exception();
    }
    return out;
  });

  int exit_code = kOk;
  json images = json::array();
  json failed = json::array();
  std::vector<MetricsReport> collected;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    auto& o = outcomes[i];
    try {
      if (o.failure) {
        if (o.partial) write_text(config.out_dir / (stems[i] + ".partial.json"), to_json(*o.partial));
        throw *o.failure;
      }
      write_text(config.out_dir / (stems[i] + ".report.json"), o.report->dump(2));
      images.push_back(*o.report);
      collected.push_back(*o.metrics);
    } catch (const Failure& f) {
      report_failure(err, f, config.jobs[i].name);
      failed.push_back({{"image", config.jobs[i].name}, {"error", f.kind}, {"message", f.message}});
      if (exit_code == kOk) exit_code = f.code;
    } catch (...) {
      const Failure f = describe_current_exception();
      report_failure(err, f, config.jobs[i].name);
      failed.push_back({{"image", config.jobs[i].name}, {"error", f.kind}, {"message", f.message}});
      if (exit_code == kOk) exit_code = f.code;
    }
  }

  json aggregate = {{"image_count", collected.size()}, {"failed", failed}};
  if (!collected.empty()) {
    const MetricsReport mean = average(collected);
    aggregate.update(metrics_json(mean, config.thresholds));
  }
  aggregate["provenance"] = provenance_json(config);
  try {
    write_text(config.out_dir / "corpus_report.json",
               json{{"images", images}, {"aggregate", aggregate}}.dump(2));
  } catch (...) {
    const Failure f = describe_current_exception();
    report_failure(err, f);
    if (exit_code == kOk) exit_code = f.code;
  }
  return exit_code;
}

}  // namespace vfocus::cli
