#include "scry/induction.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "scry/lbfgs.hpp"
#include "scry/rng.hpp"

namespace scry {

std::string ReplayBuffer::to_jsonl() const {
  std::ostringstream out;
  for (const ReplayEntry& e : entries_) {
    json j{{"episode", e.episode},
           {"success", e.success},
           {"reflected", e.reflected},
           {"world", e.model.to_json()}};
    out << j.dump() << "\n";
  }
  return out.str();
}

ReplayBuffer ReplayBuffer::from_jsonl(const std::string& text) {
  ReplayBuffer buffer;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    ReplayEntry e;
    e.episode = j.at("episode").get<int>();
    e.success = j.at("success").get<bool>();
    e.reflected = j.at("reflected").get<bool>();
    e.model = WorldModel::from_json(j.at("world"));
    buffer.append(std::move(e));
  }
  return buffer;
}

std::vector<MaskedSample> generate_masks(const WorldModel& model, double fraction,
                                         int count, uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw ContractError("mask fraction must lie in (0, 1)");
  }
  std::vector<SymbolicFact> facts = model.merged_facts();
  const size_t n = facts.size();
  if (n < 2) {
    throw std::invalid_argument("cannot mask a world model with fewer than 2 facts");
  }
  const size_t hide = static_cast<size_t>(std::ceil(fraction * static_cast<double>(n)));

  Rng rng(seed);
  std::vector<MaskedSample> samples;
  samples.reserve(static_cast<size_t>(count));
  for (int s = 0; s < count; ++s) {
    std::vector<size_t> hidden_idx = rng.sample_indices(n, hide);
    std::vector<bool> is_hidden(n, false);
    for (size_t i : hidden_idx) is_hidden[i] = true;

    MaskedSample sample;
    sample.visible = model.domain() == Domain::cube
                         ? WorldModel::for_cube()
                         : WorldModel(model.domain(), model.rows(), model.cols());
    for (size_t i = 0; i < n; ++i) {
      if (is_hidden[i]) {
        sample.hidden.push_back(facts[i]);
      } else if (facts[i].source == FactSource::revealed) {
        sample.visible.add_revealed(facts[i].var, facts[i].value);
      } else {
        sample.visible.add_imputed(facts[i].var, facts[i].value);
      }
    }
    samples.push_back(std::move(sample));
  }
  return samples;
}

std::vector<MaskedSample> build_mask_dataset(const ReplayBuffer& buffer,
                                             double fraction, int count,
                                             uint64_t seed) {
  std::vector<MaskedSample> dataset;
  for (size_t b = 0; b < buffer.size(); ++b) {
    const WorldModel& model = buffer[b].model;
    if (model.merged_size() < 2) continue;
    auto samples = generate_masks(model, fraction, count, mix_seed({seed, b}));
    for (auto& s : samples) dataset.push_back(std::move(s));
  }
  return dataset;
}

namespace {

// The gate structure of a term does not depend on the weights, so the
// dataset is flattened once: per hidden fact, the active pattern indices and
// each one's expert probability of the hidden value.
struct CompiledTerm {
  std::vector<int> active;
  std::vector<double> q_of_truth;
  double uniform_logp = 0.0;
};

struct CompiledDataset {
  std::vector<CompiledTerm> terms;
  size_t pattern_count = 0;
};

CompiledDataset compile_dataset(const std::vector<MaskedSample>& dataset,
                                const PatternLibrary& library) {
  CompiledDataset out;
  out.pattern_count = library.size();
  const double eps = library.epsilon();
  for (const MaskedSample& sample : dataset) {
    const int n = value_domain(sample.visible.domain()).cardinality();
    for (const SymbolicFact& hidden : sample.hidden) {
      CompiledTerm term;
      term.uniform_logp = std::log(1.0 / n);
      term.active = active_set(hidden.var, sample.visible, library);
      term.q_of_truth.reserve(term.active.size());
      for (int i : term.active) {
        bool correct = library[static_cast<size_t>(i)].prediction == hidden.value;
        term.q_of_truth.push_back(correct ? 1.0 - eps : eps / (n - 1));
      }
      out.terms.push_back(std::move(term));
    }
  }
  return out;
}

double compiled_ll(const CompiledDataset& data, std::span<const double> w) {
  double ll = 0.0;
  for (const CompiledTerm& term : data.terms) {
    double sw = 0.0, swq = 0.0;
    for (size_t k = 0; k < term.active.size(); ++k) {
      double wi = w[static_cast<size_t>(term.active[k])];
      sw += wi;
      swq += wi * term.q_of_truth[k];
    }
    ll += (sw > 0.0) ? std::log(swq / sw) : term.uniform_logp;
  }
  return ll;
}

void compiled_grad(const CompiledDataset& data, std::span<const double> w,
                   std::span<double> grad) {
  std::fill(grad.begin(), grad.end(), 0.0);
  for (const CompiledTerm& term : data.terms) {
    double sw = 0.0, swq = 0.0;
    for (size_t k = 0; k < term.active.size(); ++k) {
      double wi = w[static_cast<size_t>(term.active[k])];
      sw += wi;
      swq += wi * term.q_of_truth[k];
    }
    if (sw <= 0.0) continue;  // uniform fallback: no weight dependence
    for (size_t k = 0; k < term.active.size(); ++k) {
      grad[static_cast<size_t>(term.active[k])] += term.q_of_truth[k] / swq - 1.0 / sw;
    }
  }
}

}  // namespace

double log_likelihood(std::span<const double> weights,
                      const std::vector<MaskedSample>& dataset,
                      const PatternLibrary& library) {
  if (weights.size() != library.size()) {
    throw ContractError("weight vector length must match library size");
  }
  return compiled_ll(compile_dataset(dataset, library), weights);
}

std::vector<double> grad_log_likelihood(std::span<const double> weights,
                                        const std::vector<MaskedSample>& dataset,
                                        const PatternLibrary& library) {
  if (weights.size() != library.size()) {
    throw ContractError("weight vector length must match library size");
  }
  std::vector<double> grad(weights.size(), 0.0);
  compiled_grad(compile_dataset(dataset, library), weights, grad);
  return grad;
}

OptimizerConfig default_optimizer_config(Domain d) {
  OptimizerConfig cfg;
  cfg.step_size = 1.0;
  switch (d) {
    case Domain::lake: cfg.max_iterations = 50; break;
    case Domain::crafter: cfg.max_iterations = 20; break;
    case Domain::cube: cfg.max_iterations = 150; break;
  }
  return cfg;
}

namespace {

double to_weight(double theta, Reparam r) {
  if (r == Reparam::exponential) return std::exp(theta);
  // softplus
  return theta > 30.0 ? theta : std::log1p(std::exp(theta));
}

double dweight_dtheta(double theta, Reparam r) {
  if (r == Reparam::exponential) return std::exp(theta);
  return 1.0 / (1.0 + std::exp(-theta));
}

double from_weight(double w, Reparam r) {
  const double floor = 1e-8;
  w = std::max(w, floor);
  if (r == Reparam::exponential) return std::log(w);
  // softplus inverse
  return w > 30.0 ? w : std::log(std::expm1(w));
}

}  // namespace

OptimizeResult optimize_weights(PatternLibrary& library,
                                const std::vector<MaskedSample>& dataset,
                                const OptimizerConfig& config) {
  if (dataset.empty()) throw ContractError("optimize_weights needs a nonempty dataset");
  const size_t m = library.size();
  OptimizeResult result;
  if (m == 0) return result;

  CompiledDataset data = compile_dataset(dataset, library);

  std::vector<double> start = library.weights();
  result.initial_ll = compiled_ll(data, start);
  if (!std::isfinite(result.initial_ll)) {
    throw std::runtime_error("optimize_weights: non-finite objective; weights unchanged");
  }

  std::vector<double> theta0(m);
  for (size_t i = 0; i < m; ++i) {
    theta0[i] = from_weight(start[i], config.reparameterization);
  }

  std::vector<double> w_buf(m), dll(m);
  auto objective = [&](std::span<const double> theta, std::span<double> grad) {
    for (size_t i = 0; i < m; ++i) {
      w_buf[i] = to_weight(theta[i], config.reparameterization);
    }
    double ll = compiled_ll(data, w_buf);
    compiled_grad(data, w_buf, dll);
    for (size_t i = 0; i < m; ++i) {
      grad[i] = -dll[i] * dweight_dtheta(theta[i], config.reparameterization);
    }
    return -ll;
  };

  LbfgsOptions opts;
  opts.max_iterations = config.max_iterations;
  opts.grad_tol = config.grad_tol;
  opts.initial_step = config.step_size;

  LbfgsResult lr = lbfgs_minimize(objective, std::move(theta0), opts);

  result.weights.resize(m);
  for (size_t i = 0; i < m; ++i) {
    result.weights[i] = to_weight(lr.x[i], config.reparameterization);
  }
  result.final_ll = -lr.f;
  result.iterations = lr.iterations;
  result.converged = lr.converged;
  result.ll_history.reserve(lr.f_history.size());
  for (double f : lr.f_history) result.ll_history.push_back(-f);

  if (result.final_ll + 1e-12 < result.initial_ll) {
    // Line search only accepts improvements, so this would signal a bug.
    throw std::runtime_error("optimize_weights: log-likelihood decreased");
  }
  library.set_weights(result.weights);
  return result;
}

std::vector<int> proposal_trigger_episodes(int episodes, int period) {
  std::vector<int> triggers;
  for (int e = period; e < episodes; e += period) triggers.push_back(e);
  return triggers;
}

}  // namespace scry
