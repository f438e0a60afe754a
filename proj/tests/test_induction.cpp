#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "scry/induction.hpp"
#include "scry/rng.hpp"

using namespace scry;

namespace {

MacroPattern cross_macro(int center, std::array<int, 4> neighbors) {
  return MacroPattern{CrossMacro{center, neighbors}};
}

WorldModel ten_fact_model() {
  WorldModel m(Domain::lake, 4, 4);
  for (uint32_t i = 0; i < 10; ++i) {
    if (i % 3 == 0) {
      m.add_imputed({Domain::lake, i}, static_cast<int>(i % 2));
    } else {
      m.add_revealed({Domain::lake, i}, static_cast<int>(i % 2));
    }
  }
  return m;
}

// Dataset with one always-gated pattern: hidden center cells whose four
// neighbors are visible.
std::vector<MaskedSample> cross_dataset(Domain domain, int samples,
                                        int hidden_value, int context_value) {
  std::vector<MaskedSample> out;
  for (int s = 0; s < samples; ++s) {
    MaskedSample sample;
    sample.visible = WorldModel(domain, 8, 8);
    VariableId center{domain, static_cast<uint32_t>(3 * 8 + 3)};
    sample.visible.add_revealed({domain, 2 * 8 + 3}, context_value);
    sample.visible.add_revealed({domain, 4 * 8 + 3}, context_value);
    sample.visible.add_revealed({domain, 3 * 8 + 2}, context_value);
    sample.visible.add_revealed({domain, 3 * 8 + 4}, context_value);
    sample.hidden.push_back({center, hidden_value, FactSource::revealed});
    out.push_back(std::move(sample));
  }
  return out;
}

// Random crafter worlds and cross libraries for the gradient property.
struct RandomProblem {
  PatternLibrary library;
  std::vector<MaskedSample> dataset;
  std::vector<double> weights;
};

RandomProblem random_problem(Rng& rng) {
  RandomProblem p{PatternLibrary(Domain::crafter), {}, {}};
  int macros = rng.uniform_int(2, 6);
  for (int m = 0; m < macros; ++m) {
    std::array<int, 4> ctx{};
    for (int i = 0; i < 4; ++i) ctx[static_cast<size_t>(i)] = rng.uniform_int(0, 9);
    p.library.add_macro(cross_macro(rng.uniform_int(0, 9), ctx));
  }
  int samples = rng.uniform_int(2, 5);
  for (int s = 0; s < samples; ++s) {
    MaskedSample sample;
    sample.visible = WorldModel(Domain::crafter, 6, 6);
    std::vector<SymbolicFact> hidden;
    for (uint32_t i = 0; i < 36; ++i) {
      double roll = rng.uniform01();
      int value = rng.uniform_int(0, 9);
      if (roll < 0.45) {
        sample.visible.add_revealed({Domain::crafter, i}, value);
      } else if (roll < 0.65) {
        sample.hidden.push_back({{Domain::crafter, i}, value, FactSource::revealed});
      }
    }
    if (!sample.hidden.empty()) p.dataset.push_back(std::move(sample));
  }
  p.weights.resize(p.library.size());
  for (double& w : p.weights) w = 0.05 + rng.uniform01() * 3.0;
  return p;
}

}  // namespace

TEST_CASE("masks partition the model facts") {
  WorldModel m = ten_fact_model();
  auto samples = generate_masks(m, 0.3, 6, 42);
  REQUIRE(samples.size() == 6);
  for (const MaskedSample& s : samples) {
    CHECK(s.hidden.size() == 3);  // ceil(0.3 * 10)
    CHECK(s.visible.merged_size() == 7);
    // Union reconstructs all ten facts with their original values.
    std::set<uint32_t> seen;
    for (const SymbolicFact& f : s.visible.merged_facts()) {
      CHECK(m.merged_value(f.var) == f.value);
      seen.insert(f.var.index);
    }
    for (const SymbolicFact& f : s.hidden) {
      CHECK(m.merged_value(f.var) == f.value);
      CHECK(!seen.count(f.var.index));
      seen.insert(f.var.index);
    }
    CHECK(seen.size() == 10);
  }
}

TEST_CASE("masking is deterministic in the seed") {
  WorldModel m = ten_fact_model();
  auto a = generate_masks(m, 0.3, 4, 123);
  auto b = generate_masks(m, 0.3, 4, 123);
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].visible.to_json() == b[i].visible.to_json());
  }
  auto c = generate_masks(m, 0.3, 4, 124);
  bool all_equal = true;
  for (size_t i = 0; i < a.size(); ++i) {
    all_equal = all_equal && a[i].visible.to_json() == c[i].visible.to_json();
  }
  CHECK(!all_equal);
}

TEST_CASE("mask selection matches an independent reference random stream") {
  // The documented algorithm: facts sorted by variable id; per sample, a
  // partial Fisher-Yates over the index vector driven by mt19937_64 with
  // rejection sampling. Replayed here without the library's Rng class.
  WorldModel m(Domain::lake, 4, 4);
  for (uint32_t i = 0; i < 16; ++i) {
    m.add_revealed({Domain::lake, i}, static_cast<int>(i % 2));
  }
  const uint64_t seed = 777;
  auto samples = generate_masks(m, 0.25, 4, seed);
  REQUIRE(samples.size() == 4);

  std::mt19937_64 engine(seed);
  auto draw_below = [&engine](uint64_t n) {
    uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t x;
    do {
      x = engine();
    } while (x >= limit);
    return x % n;
  };
  for (int s = 0; s < 4; ++s) {
    std::vector<size_t> idx(16);
    for (size_t i = 0; i < 16; ++i) idx[i] = i;
    std::set<uint32_t> expected_hidden;
    for (size_t i = 0; i < 4; ++i) {  // ceil(0.25 * 16) = 4
      size_t j = i + static_cast<size_t>(draw_below(16 - i));
      std::swap(idx[i], idx[j]);
      expected_hidden.insert(static_cast<uint32_t>(idx[i]));
    }
    std::set<uint32_t> actual_hidden;
    for (const SymbolicFact& f : samples[static_cast<size_t>(s)].hidden) {
      actual_hidden.insert(f.var.index);
    }
    CHECK(actual_hidden == expected_hidden);
  }
}

TEST_CASE("masking rejects unlearnable models") {
  WorldModel m(Domain::lake, 4, 4);
  m.add_revealed({Domain::lake, 0}, 0);
  CHECK_THROWS_AS(generate_masks(m, 0.5, 1, 1), std::invalid_argument);
}

TEST_CASE("log-likelihood closed forms") {
  int stone = *value_index(Domain::crafter, "stone");
  int grass = *value_index(Domain::crafter, "grass");

  PatternLibrary lib(Domain::crafter);
  lib.add_macro(cross_macro(stone, {grass, grass, grass, grass}));
  std::vector<double> w{1.0};

  SUBCASE("one always-correct pattern over 10 facts") {
    // 10 hidden facts, each predicted at probability 1 - eps = 0.999.
    std::vector<MaskedSample> dataset;
    for (int i = 0; i < 10; ++i) {
      auto one = cross_dataset(Domain::crafter, 1, stone, grass);
      dataset.push_back(std::move(one[0]));
    }
    double ll = log_likelihood(w, dataset, lib);
    CHECK(ll == doctest::Approx(10.0 * std::log(0.999)).epsilon(1e-12));
    CHECK(ll == doctest::Approx(-0.010005).epsilon(1e-4));
  }
  SUBCASE("empty dataset scores zero") {
    CHECK(log_likelihood(w, {}, lib) == 0.0);
  }
  SUBCASE("uniform fallback with six hidden facts") {
    PatternLibrary cube_lib(Domain::cube);
    std::vector<MaskedSample> dataset;
    MaskedSample s;
    s.visible = WorldModel::for_cube();
    for (uint32_t i = 0; i < 6; ++i) {
      s.hidden.push_back({{Domain::cube, i}, static_cast<int>(i), FactSource::revealed});
    }
    dataset.push_back(std::move(s));
    double ll = log_likelihood(std::vector<double>{}, dataset, cube_lib);
    CHECK(ll == doctest::Approx(6.0 * std::log(1.0 / 6)).epsilon(1e-12));
  }
}

TEST_CASE("gradient of a never-active pattern is exactly zero") {
  int stone = *value_index(Domain::crafter, "stone");
  int grass = *value_index(Domain::crafter, "grass");
  int water = *value_index(Domain::crafter, "water");

  PatternLibrary lib(Domain::crafter);
  lib.add_macro(cross_macro(stone, {grass, grass, grass, grass}));
  lib.add_macro(cross_macro(stone, {water, water, water, water}));  // never gated

  auto dataset = cross_dataset(Domain::crafter, 5, stone, grass);
  std::vector<double> w{1.0, 1.0};
  auto grad = grad_log_likelihood(w, dataset, lib);
  CHECK(grad[1] == 0.0);
}

TEST_CASE("gradient favors the correct pattern at uniform weights") {
  int stone = *value_index(Domain::crafter, "stone");
  int iron = *value_index(Domain::crafter, "iron");
  int grass = *value_index(Domain::crafter, "grass");

  PatternLibrary lib(Domain::crafter);
  lib.add_macro(cross_macro(stone, {grass, grass, grass, grass}));  // correct
  lib.add_macro(cross_macro(iron, {grass, grass, grass, grass}));   // wrong

  auto dataset = cross_dataset(Domain::crafter, 8, stone, grass);
  std::vector<double> w{1.0, 1.0};
  auto grad = grad_log_likelihood(w, dataset, lib);
  CHECK(grad[0] > 0.0);
  CHECK(grad[1] < 0.0);

  // Central finite differences with step 1e-6.
  const double h = 1e-6;
  for (size_t i = 0; i < 2; ++i) {
    std::vector<double> lo = w, hi = w;
    lo[i] -= h;
    hi[i] += h;
    double fd = (log_likelihood(hi, dataset, lib) - log_likelihood(lo, dataset, lib)) / (2 * h);
    CHECK(grad[i] == doctest::Approx(fd).epsilon(1e-5));
  }
}

TEST_CASE("property: analytic gradient matches finite differences") {
  Rng rng(9090);
  int checked = 0;
  for (int trial = 0; trial < 120; ++trial) {
    RandomProblem p = random_problem(rng);
    if (p.dataset.empty() || p.library.empty()) continue;
    auto grad = grad_log_likelihood(p.weights, p.dataset, p.library);
    const double h = 1e-6;
    for (size_t i = 0; i < p.weights.size(); ++i) {
      std::vector<double> lo = p.weights, hi = p.weights;
      lo[i] -= h;
      hi[i] += h;
      double fd =
          (log_likelihood(hi, p.dataset, p.library) - log_likelihood(lo, p.dataset, p.library)) /
          (2 * h);
      if (std::abs(fd) > 1e-10 || std::abs(grad[i]) > 1e-10) {
        CHECK(grad[i] == doctest::Approx(fd).epsilon(1e-5));
      }
      ++checked;
    }
  }
  CHECK(checked >= 100);
}

TEST_CASE("optimizer reaches the grid-search oracle on correct-vs-wrong") {
  // Two-value domain, one always-correct and one always-wrong expert.
  int safe = *value_index(Domain::lake, "SAFE");
  int hole = *value_index(Domain::lake, "HOLE");

  PatternLibrary lib(Domain::lake);
  std::array<int, 4> ctx{safe, safe, safe, safe};
  lib.add_macro(MacroPattern{CrossMacro{safe, ctx}});
  lib.add_macro(MacroPattern{CrossMacro{hole, ctx}});

  std::vector<MaskedSample> dataset = cross_dataset(Domain::lake, 10, safe, safe);

  // Uniform weights predict the truth at 0.5.
  std::vector<double> uniform{1.0, 1.0};
  MixtureDistribution before = mixture_with_weights(
      dataset[0].hidden[0].var, dataset[0].visible, lib, uniform);
  CHECK(before.probabilities[static_cast<size_t>(safe)] == doctest::Approx(0.5));

  OptimizerConfig cfg = default_optimizer_config(Domain::lake);
  OptimizeResult result = optimize_weights(lib, dataset, cfg);

  // Grid-search oracle over the weight ratio.
  double best_ll = -1e300;
  for (int k = -60; k <= 120; ++k) {
    double ratio = std::pow(10.0, static_cast<double>(k) / 10.0);
    std::vector<double> w{ratio, 1.0};
    best_ll = std::max(best_ll, log_likelihood(w, dataset, lib));
  }
  CHECK(result.final_ll >= best_ll - 1e-3);

  MixtureDistribution after = mixture(dataset[0].hidden[0].var, dataset[0].visible, lib);
  CHECK(after.probabilities[static_cast<size_t>(safe)] >= 0.99);

  // Log-likelihood history is monotone nondecreasing.
  for (size_t i = 1; i < result.ll_history.size(); ++i) {
    CHECK(result.ll_history[i] >= result.ll_history[i - 1] - 1e-12);
  }
  CHECK(result.final_ll >= result.initial_ll);
}

TEST_CASE("equally predictive patterns keep a uniform-equivalent mixture") {
  int stone = *value_index(Domain::crafter, "stone");
  int grass = *value_index(Domain::crafter, "grass");
  PatternLibrary lib(Domain::crafter);
  // Two patterns with identical predictions but different (gated) contexts:
  // both always-correct on this dataset.
  lib.add_macro(cross_macro(stone, {grass, grass, grass, grass}));
  {
    Pattern p;
    p.kind = PatternKind::cross;
    p.prediction = stone;
    p.context = {{0, grass}, {1, grass}};
    lib.add_pattern(p);
  }
  auto dataset = cross_dataset(Domain::crafter, 6, stone, grass);
  std::vector<double> uniform{1.0, 1.0};
  auto u = dataset[0].hidden[0].var;
  MixtureDistribution before = mixture_with_weights(u, dataset[0].visible, lib, uniform);

  OptimizeResult result = optimize_weights(lib, dataset, default_optimizer_config(Domain::crafter));
  for (double w : result.weights) CHECK(std::isfinite(w));

  MixtureDistribution after = mixture(u, dataset[0].visible, lib);
  for (size_t v = 0; v < before.probabilities.size(); ++v) {
    CHECK(after.probabilities[v] == doctest::Approx(before.probabilities[v]).epsilon(1e-6));
  }
}

TEST_CASE("single-pattern mixtures are invariant to the optimized scalar") {
  int stone = *value_index(Domain::crafter, "stone");
  int grass = *value_index(Domain::crafter, "grass");
  PatternLibrary lib(Domain::crafter);
  lib.add_macro(cross_macro(stone, {grass, grass, grass, grass}));

  auto dataset = cross_dataset(Domain::crafter, 4, stone, grass);
  auto u = dataset[0].hidden[0].var;
  MixtureDistribution before = mixture(u, dataset[0].visible, lib);
  optimize_weights(lib, dataset, default_optimizer_config(Domain::crafter));
  MixtureDistribution after = mixture(u, dataset[0].visible, lib);
  for (size_t v = 0; v < before.probabilities.size(); ++v) {
    CHECK(after.probabilities[v] == doctest::Approx(before.probabilities[v]).epsilon(1e-9));
  }
}

TEST_CASE("weights stay non-negative through optimization") {
  Rng rng(31337);
  for (int trial = 0; trial < 10; ++trial) {
    RandomProblem p = random_problem(rng);
    if (p.dataset.empty() || p.library.empty()) continue;
    for (Reparam reparam : {Reparam::exponential, Reparam::softplus}) {
      PatternLibrary lib = p.library;
      OptimizerConfig cfg = default_optimizer_config(Domain::crafter);
      cfg.reparameterization = reparam;
      OptimizeResult result = optimize_weights(lib, p.dataset, cfg);
      for (double w : result.weights) CHECK(w >= 0.0);
      CHECK(result.final_ll >= result.initial_ll - 1e-12);
      for (size_t i = 1; i < result.ll_history.size(); ++i) {
        CHECK(result.ll_history[i] >= result.ll_history[i - 1] - 1e-12);
      }
    }
  }
}

TEST_CASE("proposal trigger schedule") {
  CHECK(proposal_trigger_episodes(100, 5).size() == 19);
  CHECK(proposal_trigger_episodes(100, 10).size() == 9);
  auto t = proposal_trigger_episodes(100, 5);
  CHECK(t.front() == 5);
  CHECK(t.back() == 95);
}

TEST_CASE("replay buffer JSONL round-trip") {
  ReplayBuffer buffer;
  for (int e = 0; e < 3; ++e) {
    ReplayEntry entry;
    entry.episode = e;
    entry.success = e != 1;
    entry.model = ten_fact_model();
    buffer.append(std::move(entry));
  }
  ReplayBuffer loaded = ReplayBuffer::from_jsonl(buffer.to_jsonl());
  REQUIRE(loaded.size() == 3);
  CHECK(loaded[1].success == false);
  CHECK(loaded.to_jsonl() == buffer.to_jsonl());
}

TEST_CASE("build_mask_dataset masks every usable buffered model") {
  ReplayBuffer buffer;
  for (int e = 0; e < 4; ++e) {
    ReplayEntry entry;
    entry.episode = e;
    entry.success = true;
    entry.model = ten_fact_model();
    buffer.append(std::move(entry));
  }
  auto dataset = build_mask_dataset(buffer, 0.25, 4, 5);
  CHECK(dataset.size() == 16);
  auto again = build_mask_dataset(buffer, 0.25, 4, 5);
  REQUIRE(again.size() == dataset.size());
  for (size_t i = 0; i < dataset.size(); ++i) {
    CHECK(again[i].visible.to_json() == dataset[i].visible.to_json());
  }
}
