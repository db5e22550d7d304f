#include "ilid/weighted_bc.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ilid {

namespace {

void append_transitions(std::vector<WeightedSample>& out, const Dataset& ds, TermTag term,
                        const std::function<double(int, int)>& weight_fn) {
  for (const auto& traj : ds.trajectories) {
    for (std::size_t t = 0; t < traj.length(); ++t) {
      const int s = traj.states[t], a = traj.actions[t];
      const double w = weight_fn ? weight_fn(s, a) : 1.0;
      if (!std::isfinite(w)) throw std::runtime_error("weighted sample: non-finite weight");
      out.push_back(WeightedSample{s, a, w, term});
    }
  }
}

const Dataset& require(const Dataset* ds, const char* what) {
  if (ds == nullptr || ds->trajectories.empty())
    throw std::invalid_argument(std::string("train_policy: missing required dataset: ") + what);
  return *ds;
}

}  // namespace

std::string scheme_name(Scheme scheme) {
  switch (scheme) {
    case Scheme::bce: return "bce";
    case Scheme::bcu: return "bcu";
    case Scheme::ilid: return "ilid";
    case Scheme::dwbc: return "dwbc";
    case Scheme::iswbc: return "iswbc";
  }
  return "unknown";
}

Scheme scheme_from_name(const std::string& name) {
  if (name == "bce") return Scheme::bce;
  if (name == "bcu") return Scheme::bcu;
  if (name == "ilid") return Scheme::ilid;
  if (name == "dwbc") return Scheme::dwbc;
  if (name == "iswbc") return Scheme::iswbc;
  throw std::invalid_argument("unknown scheme: " + name);
}

void SchemeConfig::validate() const {
  if (dwbc_eta <= 0.0) throw std::invalid_argument("scheme config: dwbc_eta must be positive");
}

double alpha_weight(const PairScore& discriminator, int s, int a) {
  const double d = discriminator(s, a);
  if (d >= 1.0) throw std::domain_error("alpha_weight: discriminator output at 1");
  return d / (1.0 - d);
}

double alpha_weight(const ExactDiscriminator& discriminator, int s, int a) {
  const CountTable& e = discriminator.expert_counts();
  const CountTable& u = discriminator.union_counts();
  if (u.pair_count(s, a) == 0)
    throw std::domain_error("alpha_weight: state-action unseen in the union data");
  // De/Du in count form: (ce/Te) / (cu/Tu).
  return (static_cast<double>(e.pair_count(s, a)) * static_cast<double>(u.total)) /
         (static_cast<double>(u.pair_count(s, a)) * static_cast<double>(e.total));
}

double beta_weight(const StateScore& d, int s, double sigma) {
  return d(s) <= sigma ? 1.0 : 0.0;
}

double dwbc_weight(const PairScore& d, int s, int a, bool in_expert, const SchemeConfig& cfg) {
  const double v = d(s, a);
  if (v <= 0.0 || v >= 1.0) throw std::domain_error("dwbc_weight: discriminator output at {0,1}");
  if (in_expert) return cfg.dwbc_alpha - cfg.dwbc_eta / (v * (1.0 - v));
  return 1.0 / (1.0 - v);
}

double iswbc_weight(const CountTable& expert, const CountTable& union_counts, int s, int a) {
  if (union_counts.pair_count(s, a) == 0)
    throw std::domain_error("iswbc_weight: state-action unseen in the union data");
  return (static_cast<double>(expert.pair_count(s, a)) * static_cast<double>(union_counts.total)) /
         (static_cast<double>(union_counts.pair_count(s, a)) * static_cast<double>(expert.total));
}

std::vector<WeightedSample> build_weighted_samples(const SchemeConfig& cfg,
                                                   const PolicyTrainInputs& inputs) {
  cfg.validate();
  std::vector<WeightedSample> samples;
  switch (cfg.scheme) {
    case Scheme::bce: {
      append_transitions(samples, require(inputs.expert, "expert"), TermTag::union_term, nullptr);
      break;
    }
    case Scheme::bcu: {
      append_transitions(samples, require(inputs.expert, "expert"), TermTag::union_term, nullptr);
      append_transitions(samples, require(inputs.imperfect, "imperfect"), TermTag::union_term,
                         nullptr);
      break;
    }
    case Scheme::iswbc: {
      if (!inputs.alpha) throw std::invalid_argument("iswbc: missing importance ratio");
      append_transitions(samples, require(inputs.expert, "expert"), TermTag::union_term,
                         inputs.alpha);
      append_transitions(samples, require(inputs.imperfect, "imperfect"), TermTag::union_term,
                         inputs.alpha);
      break;
    }
    case Scheme::dwbc: {
      if (!inputs.dwbc_d) throw std::invalid_argument("dwbc: missing discriminator");
      auto expert_w = [&](int s, int a) { return dwbc_weight(inputs.dwbc_d, s, a, true, cfg); };
      auto imperfect_w = [&](int s, int a) { return dwbc_weight(inputs.dwbc_d, s, a, false, cfg); };
      append_transitions(samples, require(inputs.expert, "expert"), TermTag::union_term, expert_w);
      append_transitions(samples, require(inputs.imperfect, "imperfect"), TermTag::union_term,
                         imperfect_w);
      break;
    }
    case Scheme::ilid: {
      const Dataset& expert = require(inputs.expert, "expert");
      if (cfg.disable_alpha) {
        append_transitions(samples, expert, TermTag::union_term, nullptr);
      } else {
        if (!inputs.alpha) throw std::invalid_argument("ilid: missing importance ratio");
        append_transitions(samples, expert, TermTag::union_term, inputs.alpha);
        append_transitions(samples, require(inputs.imperfect, "imperfect"), TermTag::union_term,
                           inputs.alpha);
      }
      if (!cfg.disable_beta && !inputs.d_state)
        throw std::invalid_argument("ilid: missing state discriminator");
      auto beta_w = [&](int s, int) {
        return cfg.disable_beta ? 1.0 : beta_weight(inputs.d_state, s, inputs.sigma);
      };
      if (cfg.use_full_db_as_ds) {
        append_transitions(samples, require(inputs.imperfect, "imperfect"),
                           TermTag::selected_term, beta_w);
      } else {
        if (inputs.selected == nullptr)
          throw std::invalid_argument("ilid: missing selected dataset");
        for (const SelectedPair& p : *inputs.selected)
          samples.push_back(
              WeightedSample{p.state, p.action, beta_w(p.state, p.action), TermTag::selected_term});
      }
      break;
    }
  }
  return samples;
}

TabularPolicy fit_tabular_closed_form(const std::vector<WeightedSample>& samples, int num_states,
                                      int num_actions) {
  std::size_t n_union = 0, n_selected = 0;
  for (const WeightedSample& w : samples)
    (w.term == TermTag::union_term ? n_union : n_selected) += 1;
  std::vector<double> mass(static_cast<std::size_t>(num_states) * num_actions, 0.0);
  double total_mass = 0.0;
  for (const WeightedSample& w : samples) {
    const double clamped = std::max(w.weight, 0.0);
    if (clamped == 0.0) continue;
    const double norm = w.term == TermTag::union_term ? static_cast<double>(n_union)
                                                      : static_cast<double>(n_selected);
    const double m = clamped / norm;
    mass[static_cast<std::size_t>(w.state) * num_actions + w.action] += m;
    total_mass += m;
  }
  if (total_mass <= 0.0)
    throw std::runtime_error("train_policy: all sample weights are zero (degenerate scheme)");
  TabularPolicy policy = TabularPolicy::uniform(num_states, num_actions);
  for (int s = 0; s < num_states; ++s) {
    double row_mass = 0.0;
    for (int a = 0; a < num_actions; ++a)
      row_mass += mass[static_cast<std::size_t>(s) * num_actions + a];
    if (row_mass <= 0.0) continue;  // unvisited state keeps the uniform row
    for (int a = 0; a < num_actions; ++a)
      policy.probs[s][a] = mass[static_cast<std::size_t>(s) * num_actions + a] / row_mass;
  }
  return policy;
}

TabularPolicy fit_tabular_gradient(const std::vector<WeightedSample>& samples, int num_states,
                                   int num_actions, const TrainConfig& cfg) {
  cfg.validate();
  std::vector<const WeightedSample*> union_term, selected_term;
  for (const WeightedSample& w : samples)
    (w.term == TermTag::union_term ? union_term : selected_term).push_back(&w);
  if (union_term.empty() && selected_term.empty())
    throw std::invalid_argument("fit_tabular_gradient: no samples");

  const std::size_t n = static_cast<std::size_t>(num_states) * num_actions;
  std::vector<double> logits(n, 0.0), grad(n, 0.0), probs(num_actions, 0.0);
  AdamState adam(n, cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_epsilon);
  Rng rng(mix_seed(cfg.seed, "policy-gradient"));

  auto row_softmax = [&](int s) {
    double zmax = logits[static_cast<std::size_t>(s) * num_actions];
    for (int a = 1; a < num_actions; ++a)
      zmax = std::max(zmax, logits[static_cast<std::size_t>(s) * num_actions + a]);
    double z = 0.0;
    for (int a = 0; a < num_actions; ++a) {
      probs[a] = std::exp(logits[static_cast<std::size_t>(s) * num_actions + a] - zmax);
      z += probs[a];
    }
    for (int a = 0; a < num_actions; ++a) probs[a] /= z;
  };
  auto accumulate_batch = [&](const std::vector<const WeightedSample*>& term) {
    if (term.empty()) return;
    const double scale = 1.0 / cfg.batch_size;
    for (int b = 0; b < cfg.batch_size; ++b) {
      const WeightedSample& w = *term[rng.uniform_int(static_cast<int>(term.size()))];
      row_softmax(w.state);
      // d/dlogit of log softmax: indicator minus the row probabilities.
      for (int a = 0; a < num_actions; ++a) {
        const double indicator = a == w.action ? 1.0 : 0.0;
        grad[static_cast<std::size_t>(w.state) * num_actions + a] +=
            scale * w.weight * (indicator - probs[a]);
      }
    }
  };

  for (int step = 0; step < cfg.steps; ++step) {
    std::fill(grad.begin(), grad.end(), 0.0);
    accumulate_batch(union_term);
    accumulate_batch(selected_term);
    adam.ascend(logits, grad);
  }

  TabularPolicy policy;
  policy.probs.assign(num_states, std::vector<double>(num_actions, 0.0));
  for (int s = 0; s < num_states; ++s) {
    row_softmax(s);
    for (int a = 0; a < num_actions; ++a) policy.probs[s][a] = probs[a];
  }
  return policy;
}

double weighted_loglik(const std::vector<WeightedSample>& samples, const TabularPolicy& policy) {
  double union_sum = 0.0, selected_sum = 0.0;
  std::size_t n_union = 0, n_selected = 0;
  for (const WeightedSample& w : samples) {
    const bool in_union = w.term == TermTag::union_term;
    (in_union ? n_union : n_selected) += 1;
    if (w.weight == 0.0) continue;
    const double p = policy.probs[w.state][w.action];
    (in_union ? union_sum : selected_sum) += w.weight * std::log(p);
  }
  double value = 0.0;
  if (n_union > 0) value += union_sum / static_cast<double>(n_union);
  if (n_selected > 0) value += selected_sum / static_cast<double>(n_selected);
  return value;
}

TabularPolicy train_policy(const SchemeConfig& cfg, const PolicyTrainInputs& inputs,
                           int num_states, int num_actions, TrainerKind trainer,
                           const TrainConfig& train_cfg) {
  const auto samples = build_weighted_samples(cfg, inputs);
  if (trainer == TrainerKind::closed_form)
    return fit_tabular_closed_form(samples, num_states, num_actions);
  return fit_tabular_gradient(samples, num_states, num_actions, train_cfg);
}

double normalized_score(double raw, double random_ref, double expert_ref) {
  if (expert_ref == random_ref)
    throw std::invalid_argument("normalized_score: expert and random references coincide");
  return 100.0 * (raw - random_ref) / (expert_ref - random_ref);
}

}  // namespace ilid
