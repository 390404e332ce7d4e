// Acceptance checks. Prints one PASS/FAIL line per criterion. Criteria
// marked `known_gap` still print FAIL when they fail but do not change the
// exit status; every other failure does.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "nmerci/io.hpp"
#include "nmerci/metric.hpp"
#include "nmerci/mlp.hpp"
#include "nmerci/toy.hpp"
#include "oracles.hpp"

using nmerci::EvalSet;
using nmerci::toy::Method;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
  // Cleared when a failure falls outside a criterion's known gap.
  bool within_gap = true;
};

// N in [3, 1000], all errors strictly positive.
std::vector<EvalSet> random_sets(std::uint64_t seed, int count) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> n(3, 1000);
  std::vector<EvalSet> sets;
  for (int i = 0; i < count; ++i) sets.push_back(oracle::random_set(rng, n(rng)));
  return sets;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

Outcome oracle_identity() {
  double worst = 0;
  for (const auto& base : random_sets(1, 100)) {
    const auto set = oracle::oracle_sigma(base);
    for (double a : {50.0, 85.0, 95.0, 100.0}) {
      const auto r = nmerci::n_merci(set, {a, false});
      if (!r.n_merci) return {false, "degenerate report at alpha " + fmt("%g", a)};
      worst = std::max(worst, std::fabs(*r.n_merci));
    }
  }
  return {worst <= 1e-12, "max |n-MeRCI| " + fmt("%.3g", worst)};
}

Outcome constant_identity() {
  double worst = 0;
  for (const auto& base : random_sets(2, 100)) {
    for (double c : {1e-6, 1.0, 1e6}) {
      const auto set = oracle::constant_sigma(base, c);
      for (double a : {50.0, 85.0, 95.0, 100.0}) {
        for (bool trim : {false, true}) {
          const auto r = nmerci::n_merci(set, {a, trim});
          if (!r.n_merci) return {false, "degenerate report"};
          worst = std::max(worst, std::fabs(*r.n_merci - 1.0));
        }
      }
    }
  }
  return {worst <= 1e-12, "max |n-MeRCI - 1| " + fmt("%.3g", worst)};
}

Outcome scale_invariance() {
  double worst = 0;
  for (const auto& set : random_sets(3, 100)) {
    for (double a : {50.0, 85.0, 95.0, 100.0}) {
      const auto ref = nmerci::n_merci(set, {a, false});
      for (double c : {1e-6, 0.5, 3.0, 1e6}) {
        const auto r = nmerci::n_merci(oracle::scaled_sigma(set, c), {a, false});
        if (!r.n_merci || !ref.n_merci) return {false, "degenerate report"};
        worst = std::max(worst, std::fabs(*r.n_merci - *ref.n_merci));
      }
    }
  }
  return {worst < 1e-12, "max difference " + fmt("%.3g", worst)};
}

Outcome percentile_oracle() {
  // Every vector over a 4-symbol alphabet (with ties) for N <= 8.
  const double symbols[] = {-1.5, 0.0, 2.0, 7.25};
  std::size_t checked = 0;
  for (std::size_t n = 1; n <= 8; ++n) {
    std::size_t combos = 1;
    for (std::size_t i = 0; i < n; ++i) combos *= 4;
    for (std::size_t code = 0; code < combos; ++code) {
      std::vector<double> v(n);
      std::size_t c = code;
      for (std::size_t i = 0; i < n; ++i, c /= 4) v[i] = symbols[c % 4];
      for (int a = 1; a <= 100; ++a) {
        if (nmerci::percentile_nearest_rank(v, a) != oracle::percentile_full_sort(v, a)) {
          return {false, "mismatch at n=" + std::to_string(n) + " alpha=" + std::to_string(a)};
        }
        ++checked;
      }
    }
  }
  return {true, std::to_string(checked) + " cases"};
}

Outcome coverage() {
  std::size_t sets = 0;
  for (const auto& set : random_sets(5, 100)) {
    ++sets;
    for (double a : {10.0, 37.5, 50.0, 85.0, 95.0, 99.0, 100.0}) {
      const double lambda = nmerci::merci(set, {a, false}).lambda_alpha;
      if (!std::isfinite(lambda)) return {false, "infinite lambda"};
      const auto ratios = nmerci::lambda_ratios(set);
      std::size_t covered = 0;
      for (std::size_t i = 0; i < set.size(); ++i) {
        const double err = std::fabs(set[i].y_hat - set[i].y_true);
        // The ratio test is exact; the rescaled interval may round one ulp short.
        const bool by_ratio = ratios[i] <= lambda;
        const bool by_interval = lambda * set[i].sigma >= err * (1 - 4 * 2.220446049250313e-16);
        if (by_ratio != by_interval) return {false, "ratio and interval tests disagree"};
        covered += by_ratio;
      }
      if (a == 100.0 && covered != set.size()) return {false, "alpha=100 leaves a sample uncovered"};
      if (static_cast<double>(covered) / set.size() < a / 100.0) {
        return {false, "coverage below alpha " + fmt("%g", a)};
      }
    }
  }
  return {true, std::to_string(sets) + " sets"};
}

Outcome hand_case() {
  const EvalSet set({{1, 2, 0}, {2, 1, 0}, {3, 4, 0}, {4, 8, 0}});
  const auto r = nmerci::n_merci(set, {100, false});
  const bool ok = std::fabs(r.merci - 7.5) <= 1e-12 && r.n_merci && std::fabs(*r.n_merci - 10.0 / 3.0) <= 1e-12;
  return {ok, "MeRCI " + fmt("%.15g", r.merci) + ", n-MeRCI " + (r.n_merci ? fmt("%.15g", *r.n_merci) : "none")};
}

Outcome gradient_check() {
  std::mt19937_64 rng(7);
  const std::vector<nmerci::nn::MlpSpec> specs{
      {1, {8}, 0.0, 1}, {3, {6}, 0.0, 2}, {2, {5, 4}, 0.0, 3}, {1, {16, 8}, 0.0, 4}, {4, {3, 7, 2}, 0.0, 5}};
  double worst = 0;
  std::size_t partials = 0;
  for (const auto& spec : specs) {
    const nmerci::nn::Mlp net(spec);
    const auto batch = oracle::random_batch(rng, 8, spec.input_dim);
    const auto analytic = oracle::flatten(nmerci::nn::mse_gradient(net, batch));
    const auto numeric = oracle::numeric_gradient(net, batch, nullptr, 1e-5);
    for (std::size_t i = 0; i < analytic.size(); ++i, ++partials) {
      const double err = std::fabs(analytic[i] - numeric[i]) / std::max(1e-7 / 1e-4, std::fabs(numeric[i]));
      worst = std::max(worst, err);
    }
  }
  return {worst <= 1e-4, std::to_string(partials) + " partials, worst relative error " + fmt("%.2g", worst)};
}

Outcome toy_reproduction() {
  const std::vector<Method> methods{Method::multi_inits, Method::bagging, Method::mc_dropout, Method::multi_epochs};
  std::map<Method, std::vector<double>> scores;
  int bagging_best = 0, bagging_below_mcd = 0;
  constexpr int kSeeds = 20;
  for (int seed = 0; seed < kSeeds; ++seed) {
    nmerci::toy::ToyConfig cfg;
    cfg.master_seed = static_cast<std::uint64_t>(seed);
    cfg.alphas = {85.0};
    std::map<Method, double> at85;
    for (const auto& r : nmerci::toy::run_methods(cfg, methods)) {
      const auto& rep = r.n_merci_by_alpha.at(85.0);
      at85[r.method] = rep.n_merci ? *rep.n_merci : INFINITY;
      scores[r.method].push_back(at85[r.method]);
    }
    bool best = true;
    for (Method m : methods) best = best && (m == Method::bagging || at85[Method::bagging] < at85[m]);
    bagging_best += best;
    bagging_below_mcd += at85[Method::bagging] < at85[Method::mc_dropout];
  }
  const double bag = median(scores[Method::bagging]);
  const double me = median(scores[Method::multi_epochs]);
  const double mcd = median(scores[Method::mc_dropout]);
  const double mi = median(scores[Method::multi_inits]);
  const bool ranking = bag < mcd;
  const bool majority = 2 * bagging_best >= kSeeds;
  std::ostringstream d;
  d << "medians@85 bagging " << fmt("%.3f", bag) << " me " << fmt("%.3f", me) << " mcd " << fmt("%.3f", mcd)
    << " mi " << fmt("%.3f", mi) << "; bagging best in " << bagging_best << "/" << kSeeds
    << ", below MCD in " << bagging_below_mcd << "/" << kSeeds << "; reference medians 0.22/0.48/0.9 within 0.3: "
    << ((std::fabs(bag - 0.22) <= 0.3 && std::fabs(me - 0.48) <= 0.3 && std::fabs(mcd - 0.9) <= 0.3) ? "yes" : "no");
  return {ranking && majority, d.str()};
}

Outcome injected_rows() {
  std::ostringstream d;
  for (std::uint64_t seed : {0u, 1u}) {
    nmerci::toy::ToyConfig cfg;
    cfg.master_seed = seed;
    const std::vector<Method> methods{Method::oracle, Method::constant};
    const auto results = nmerci::toy::run_methods(cfg, methods);
    for (const auto& cell : nmerci::toy::alpha_sweep(results, cfg.alphas)) {
      const double want = cell.method == Method::oracle ? 0.0 : 1.0;
      if (!cell.report.n_merci || *cell.report.n_merci != want) {
        return {false, std::string(nmerci::toy::short_name(cell.method)) + " row off at alpha " + fmt("%g", cell.alpha)};
      }
    }
  }
  return {true, "oracle rows 0, constant rows 1 at 20 alphas, 2 seeds"};
}

Outcome binned_and_learned_error() {
  // Part 1: binned evaluation against filter-then-score.
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> truth(0.0, 10.0);
  std::lognormal_distribution<double> err(-2.0, 0.8);
  std::vector<nmerci::Sample> samples;
  for (int i = 0; i < 10000; ++i) {
    const double t = truth(rng), e = err(rng) * (1 + 0.2 * t);
    samples.push_back({t + (i % 2 ? e : -e), e * std::exp(0.5 * std::normal_distribution<double>()(rng)), t});
  }
  const EvalSet set(std::move(samples));
  double worst = 0;
  std::size_t bins = 0;
  for (bool trim : {false, true}) {
    const nmerci::MetricConfig cfg{95, trim};
    for (const auto& bin : nmerci::binned_eval(set, cfg, 0.1).bins) {
      const auto sub = oracle::filter_truth(set, bin.low, bin.high);
      if (sub.size() != bin.n || sub.size() < 2 || !bin.report) return {false, "bin membership mismatch", false};
      const auto ref = nmerci::n_merci(sub, cfg);
      if (ref.n_merci.has_value() != bin.report->n_merci.has_value()) return {false, "degenerate flag mismatch", false};
      if (ref.n_merci) worst = std::max(worst, std::fabs(*ref.n_merci - *bin.report->n_merci));
      ++bins;
    }
  }
  if (worst > 1e-12) return {false, "bin difference " + fmt("%.3g", worst), false};

  // Part 2: Learned Error MAE against the averaging ensembles, one run each.
  const std::vector<Method> ensembles{Method::multi_inits, Method::bagging, Method::mc_dropout,
                                      Method::multi_epochs, Method::multi_networks};
  std::vector<Method> methods = ensembles;
  methods.push_back(Method::learned_error);
  constexpr int kSeeds = 20;
  std::map<Method, int> le_worse;
  for (int seed = 0; seed < kSeeds; ++seed) {
    nmerci::toy::ToyConfig cfg;
    cfg.master_seed = static_cast<std::uint64_t>(seed);
    cfg.n_runs = 1;
    cfg.alphas = {95.0};
    std::map<Method, double> mae;
    for (const auto& r : nmerci::toy::run_methods(cfg, methods)) mae[r.method] = nmerci::mae(r.samples);
    for (Method m : ensembles) le_worse[m] += mae[Method::learned_error] >= mae[m];
  }
  bool ok = true;
  std::ostringstream d;
  d << bins << " bins match to " << fmt("%.1g", worst) << "; LE MAE >= ensemble MAE in";
  for (Method m : ensembles) {
    ok = ok && 2 * le_worse[m] >= kSeeds;
    d << ' ' << nmerci::toy::short_name(m) << ' ' << le_worse[m] << '/' << kSeeds;
  }
  return {ok, d.str()};
}

Outcome round_trip() {
  std::mt19937_64 rng(11);
  double worst = 0;
  for (int b = 0; b < 20; ++b) {
    const auto set = oracle::random_set(rng, 1 + rng() % 2000);
    std::ostringstream csv, jsonl;
    nmerci::io::write_triplets_csv(csv, set);
    nmerci::io::write_triplets_jsonl(jsonl, set);
    std::istringstream csv_in(csv.str()), jsonl_in(jsonl.str());
    for (const auto& back : {nmerci::io::read_triplets_csv(csv_in), nmerci::io::read_triplets_jsonl(jsonl_in)}) {
      for (double a : {50.0, 85.0, 95.0, 100.0}) {
        for (bool trim : {false, true}) {
          const auto x = nmerci::n_merci(set, {a, trim});
          const auto y = nmerci::n_merci(back, {a, trim});
          if (x.n_merci.has_value() != y.n_merci.has_value()) return {false, "degenerate flag changed"};
          for (auto [p, q] : {std::pair{x.mae, y.mae}, std::pair{x.merci, y.merci},
                              std::pair{x.lambda_alpha, y.lambda_alpha}}) {
            worst = std::max(worst, std::fabs(p - q));
          }
          if (x.n_merci) worst = std::max(worst, std::fabs(*x.n_merci - *y.n_merci));
        }
      }
    }
  }
  return {worst <= 1e-12, "20 bundles, CSV and JSONL, max difference " + fmt("%.3g", worst)};
}

struct Criterion {
  int id;
  const char* name;
  double budget_seconds;
  std::function<Outcome()> run;
  // Failure is expected on this setup and documented in the README.
  bool known_gap = false;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "oracle identity", 1, oracle_identity},
      {2, "constant identity", 1, constant_identity},
      {3, "scale invariance", 1, scale_invariance},
      {4, "percentile oracle equivalence", 5, percentile_oracle},
      {5, "coverage", 1, coverage},
      {6, "hand-case regression", 1, hand_case},
      {7, "gradient correctness", 10, gradient_check},
      {8, "toy reproduction", 300, toy_reproduction},
      {9, "injected oracle/constant rows", 30, injected_rows},
      {10, "binned eval and Learned Error MAE", 300, binned_and_learned_error, true},
      {11, "round-trip I/O", 5, round_trip},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what(), false};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs <= c.budget_seconds;
    const bool pass = o.pass && in_time;
    const bool tolerated = c.known_gap && o.within_gap && in_time;
    failed += !pass && !tolerated;
    std::printf("%s criterion %d (%s): %s [%.2fs of %.0fs]%s%s\n", pass ? "PASS" : "FAIL", c.id, c.name,
                o.detail.c_str(), secs, c.budget_seconds, in_time ? "" : " over time budget",
                !pass && tolerated ? " (known gap)" : "");
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
