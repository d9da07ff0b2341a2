// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "vfocus/analysis.hpp"
#include "vfocus/cli/commands.hpp"
#include "vfocus/logic.hpp"
#include "vfocus/refine.hpp"

namespace {

using namespace vfocus;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;
using E = LogicExpr;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t) {
  return std::chrono::duration<double>(Clock::now() - t).count();
}

RefinementConfig unlimited() {
  RefinementConfig c;
  c.max_queries = std::size_t{1} << 22;
  return c;
}

StateVector state_from_mask(std::size_t m, std::uint64_t mask) {
  StateVector s(m);
  for (std::size_t r = 1; r <= m; ++r) s.set(r, (mask >> (r - 1)) & 1u);
  return s;
}

struct Instance {
  Scene scene;
  E formula;
};

std::vector<Instance> oracle_instances() {
  std::vector<Instance> out;
  std::mt19937_64 rng(20240501);
  for (int i = 0; i < 200; ++i) {
    const std::size_t m = 3 + static_cast<std::size_t>(i % 8);
    out.push_back({testing::strip_scene(testing::random_areas(rng, m), "oracle" + std::to_string(i)),
                   testing::random_formula(rng, m)});
  }
  return out;
}

Outcome worked_example() {
  const auto t0 = Clock::now();
  const std::vector<StateVector> v = {StateVector::from_regions(6, {1, 2, 3, 5}),
                                      StateVector::from_regions(6, {1, 2, 3, 6}),
                                      StateVector::from_regions(6, {1, 4})};
  const E lit1 = E::literal(1), lit2 = E::literal(2), lit3 = E::literal(3), lit4 = E::literal(4),
          lit5 = E::literal(5), lit6 = E::literal(6);
  const E expected = E::conjunction(
      {lit1, E::disjunction({lit4, E::conjunction({lit2, lit3, E::disjunction({lit5, lit6})})})});
  const E t = translate(v);
  const bool same = equivalent(t, expected, 6);
  const double secs = seconds_since(t0);
  return {same && secs < 1.0, render(t) + " in " + std::to_string(secs) + "s"};
}

Outcome oracle_equivalence(const std::vector<Instance>& instances,
                           std::vector<std::vector<StateVector>>& finals) {
  const auto t0 = Clock::now();
  std::size_t mismatches = 0;
  for (const auto& inst : instances) {
    SyntheticLogicModel model(inst.formula);
    const auto fast = refine(inst.scene, model, FillPolicy::gray(), unlimited());
    const auto slow = brute_force_final_states(inst.scene, model, FillPolicy::gray());
    if (fast.states != slow.states) ++mismatches;
    finals.push_back(fast.states);
  }
  const double secs = seconds_since(t0);
  return {mismatches == 0 && secs < 60.0 && instances.size() >= 200,
          std::to_string(instances.size()) + " instances, " + std::to_string(mismatches) +
              " mismatches, " + std::to_string(secs) + "s"};
}

Outcome dnf_semantics(const std::vector<Instance>& instances,
                      const std::vector<std::vector<StateVector>>& finals) {
  std::size_t violations = 0, checked = 0;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const std::size_t m = instances[i].scene.partition.region_count();
    const E t = translate(finals[i]);
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << m); ++mask) {
      const auto s = state_from_mask(m, mask);
      bool covered = false;
      for (const auto& v : finals[i]) covered = covered || s.is_superset_of(v);
      violations += eval(t, s) != covered;
      ++checked;
    }
  }
  return {violations == 0, std::to_string(checked) + " states, " + std::to_string(violations) + " violations"};
}

Outcome metric_exactness() {
  std::mt19937_64 rng(77);
  double worst = 0;
  bool fixed_point = true;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t m = 1 + rng() % 10;
    const auto p = testing::strip_partition(testing::random_areas(rng, m));
    std::vector<StateVector> v(1 + rng() % 4, StateVector(m));
    for (auto& s : v)
      for (std::size_t r = 1; r <= m; ++r) s.set(r, rng() % 2);
    StateVector gt(m);
    for (std::size_t r = 1; r <= m; ++r) gt.set(r, rng() % 2);
    if (gt.count() == 0) gt.set(1);

    // Direct summation over pixels.
    const double total = static_cast<double>(p.pixel_count());
    double dp = 0, dr = 0, dd = 0;
    std::size_t gt_px = 0;
    for (auto l : p.labels()) gt_px += gt.preserved(l);
    for (const auto& s : v) {
      std::size_t kept = 0, both = 0;
      for (auto l : p.labels())
        if (s.preserved(l)) {
          ++kept;
          both += gt.preserved(l);
        }
      dp += kept ? double(both) / kept : 0.0;
      dr += double(both) / gt_px;
    }
    dp /= v.size();
    dr /= v.size();
    for (auto l : p.labels()) {
      double ones = 0;
      for (const auto& s : v) ones += s.preserved(l);
      const double q = ones / v.size();
      dd += q * (1 - q) / total;
    }
    const auto rep = evaluate(v, gt, p);
    worst = std::max({worst, std::abs(rep.precision - dp), std::abs(rep.recall - dr),
                      std::abs(rep.divergence - dd)});

    const std::vector<StateVector> perfect = {gt};
    const auto fp = evaluate(perfect, gt, p);
    fixed_point = fixed_point && fp.precision == 1.0 && fp.recall == 1.0 && fp.divergence == 0.0;

    StateVector a(m), b(m);
    double delta = 0;
    for (std::size_t r = 1; r <= m; ++r) {
      a.set(r, rng() % 2);
      b.set(r, rng() % 2);
      if (a.preserved(r) != b.preserved(r)) delta += double(p.area(r)) / total;
    }
    const std::vector<StateVector> pair = {a, b};
    worst = std::max(worst, std::abs(divergence(pair, p.area_fractions()) - 0.25 * delta));
  }
  char buf[96];
  std::snprintf(buf, sizeof buf, "max abs error %.3g, fixed point %s", worst, fixed_point ? "exact" : "broken");
  return {worst <= 1e-12 && fixed_point, buf};
}

Outcome table_classification() {
  auto cls = [](double p, double r, double d) {
    MetricsReport m;
    m.precision = p;
    m.recall = r;
    m.divergence = d;
    return std::string(to_string(classify(m)));
  };
  const std::string a = cls(0.72, 0.67, 0.04), b = cls(0.18, 0.25, 0.06), c = cls(0.42, 0.69, 0.06);
  return {a == "Holistic" && b == "Misled" && c == "Distracted", a + ", " + b + ", " + c};
}

double r_squared(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i] / n;
    my += y[i] / n;
  }
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return syy == 0 ? 1.0 : sxy * sxy / (sxx * syy);
}

Outcome beam_soundness_and_scaling(const std::vector<Instance>& instances,
                                   const std::vector<std::vector<StateVector>>& finals) {
  std::size_t violations = 0;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    SyntheticLogicModel model(instances[i].formula);
    const std::set<StateVector> full(finals[i].begin(), finals[i].end());
    for (std::size_t k : {1u, 5u, 10u}) {
      auto c = unlimited();
      c.beam_size = k;
      for (const auto& s : refine(instances[i].scene, model, FillPolicy::gray(), c).states)
        violations += !full.contains(s);
    }
  }

  std::mt19937_64 rng(99);
  std::vector<double> ms, queries;
  for (std::size_t m = 6; m <= 14; ++m) {
    double sum = 0;
    const int samples = 30;
    for (int s = 0; s < samples; ++s) {
      const auto scene = testing::strip_scene(testing::random_areas(rng, m));
      SyntheticLogicModel model(testing::core_formula(rng, m));
      auto c = unlimited();
      c.beam_size = 10;
      sum += static_cast<double>(refine(scene, model, FillPolicy::gray(), c).query_count);
    }
    ms.push_back(static_cast<double>(m));
    queries.push_back(sum / samples);
  }
  const double r2 = r_squared(ms, queries);
  std::ostringstream detail;
  detail << violations << " subset violations; mean queries";
  for (double q : queries) detail << ' ' << std::lround(q);
  detail << "; R^2 " << r2;
  return {violations == 0 && r2 >= 0.9, detail.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism() {
  testing::TempDir dir("vfocus-accept");
  const auto manifest = testing::write_fixture_corpus(dir.path() / "corpus");
  std::vector<std::string> outputs;
  for (const char* sub : {"run1", "run2"}) {
    cli::RunConfig config;
    config.jobs = cli::load_manifest(manifest);
    config.model = "synthetic:" + (manifest.parent_path() / "formula.json").string();
    config.out_dir = dir.path() / sub;
    config.workers = 3;
    std::ostringstream err;
    if (cli::cmd_analyze(config, err) != cli::kOk) return {false, "cmd_analyze failed: " + err.str()};
    std::string all;
    for (const char* f : {"corpus_report.json", "quads.report.json", "stripes.report.json", "rings.report.json"})
      all += slurp(config.out_dir / f);
    outputs.push_back(all);
  }
  const bool same = !outputs[0].empty() && outputs[0] == outputs[1];
  return {same, std::to_string(outputs[0].size()) + " bytes compared"};
}

}  // namespace

int main() {
  int failures = 0;
  auto report = [&](const char* name, const std::function<Outcome()>& check) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s  %-34s %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
    failures += !o.pass;
  };

  const auto instances = oracle_instances();
  std::vector<std::vector<StateVector>> finals;

  report("factored-example-equivalence", worked_example);
  report("refine-equals-brute-force", [&] { return oracle_equivalence(instances, finals); });
  report("translate-dnf-semantics", [&] {
    if (finals.size() != instances.size()) return Outcome{false, "oracle run did not complete"};
    return dnf_semantics(instances, finals);
  });
  report("metric-exactness", metric_exactness);
  report("behavior-classification", table_classification);
  report("beam-soundness-and-linear-scaling", [&] {
    if (finals.size() != instances.size()) return Outcome{false, "oracle run did not complete"};
    return beam_soundness_and_scaling(instances, finals);
  });
  report("analyze-determinism", determinism);

  std::printf("%d failed\n", failures);
  return failures == 0 ? 0 : 1;
}
