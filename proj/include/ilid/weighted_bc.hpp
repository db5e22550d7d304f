#pragma once

#include <functional>
#include <string>
#include <vector>

#include "ilid/dataset.hpp"
#include "ilid/discriminator.hpp"
#include "ilid/selection.hpp"

namespace ilid {

enum class Scheme { bce, bcu, ilid, dwbc, iswbc };

std::string scheme_name(Scheme scheme);
Scheme scheme_from_name(const std::string& name);

struct SchemeConfig {
  Scheme scheme = Scheme::ilid;
  std::string label;  // row/file tag; defaults to the scheme name
  double dwbc_alpha = 7.5;
  double dwbc_eta = 0.5;
  // Ablation toggles.
  bool disable_alpha = false;      // first term becomes plain cloning of the expert data
  bool disable_beta = false;       // beta forced to 1
  bool use_full_db_as_ds = false;  // selected data replaced by all imperfect transitions

  std::string name() const { return label.empty() ? scheme_name(scheme) : label; }
  void validate() const;
};

enum class TermTag { union_term, selected_term };

// One training sample with its scheme weight. Weights are stored raw; the
// closed-form trainer clamps negatives to zero, the gradient trainer does not.
struct WeightedSample {
  int state = 0;
  int action = 0;
  double weight = 1.0;
  TermTag term = TermTag::union_term;
};

// alpha(s,a) = D(s,a) / (1 - D(s,a)). With clipped discriminator outputs the
// result lies in [1/9, 9]; with the exact backend it equals De(s,a)/Du(s,a).
double alpha_weight(const PairScore& discriminator, int s, int a);
double alpha_weight(const ExactDiscriminator& discriminator, int s, int a);

// beta(s,a) = 1 if d(s) <= sigma else 0.
double beta_weight(const StateScore& d, int s, double sigma);

// DWBC weight: alpha - eta / (d (1-d)) on expert samples, 1 / (1-d) otherwise.
double dwbc_weight(const PairScore& d, int s, int a, bool in_expert, const SchemeConfig& cfg);

// Empirical importance ratio rho_e(s,a) / rho_u(s,a) from exact counts.
double iswbc_weight(const CountTable& expert, const CountTable& union_counts, int s, int a);

struct PolicyTrainInputs {
  const Dataset* expert = nullptr;
  const Dataset* imperfect = nullptr;
  const std::vector<SelectedPair>* selected = nullptr;
  std::function<double(int, int)> alpha;  // alpha(s,a), ILID first term and ISWBC
  StateScore d_state;                     // state discriminator for beta
  PairScore dwbc_d;                       // DWBC discriminator output
  double sigma = 0.2;
};

std::vector<WeightedSample> build_weighted_samples(const SchemeConfig& cfg,
                                                   const PolicyTrainInputs& inputs);

// Per-state maximizer of the weighted log-likelihood: probabilities
// proportional to the clamped weight mass, term-normalized; zero-mass states
// get uniform rows.
TabularPolicy fit_tabular_closed_form(const std::vector<WeightedSample>& samples, int num_states,
                                      int num_actions);

// Softmax-parameterized tabular policy ascended with Adam; every step draws one
// minibatch from each term and sums the two term losses.
TabularPolicy fit_tabular_gradient(const std::vector<WeightedSample>& samples, int num_states,
                                   int num_actions, const TrainConfig& cfg);

// Objective value: sum over terms of the mean weighted log-likelihood.
double weighted_loglik(const std::vector<WeightedSample>& samples, const TabularPolicy& policy);

enum class TrainerKind { closed_form, gradient };

TabularPolicy train_policy(const SchemeConfig& cfg, const PolicyTrainInputs& inputs,
                           int num_states, int num_actions,
                           TrainerKind trainer = TrainerKind::closed_form,
                           const TrainConfig& train_cfg = {});

// 100 * (raw - random_ref) / (expert_ref - random_ref).
double normalized_score(double raw, double random_ref, double expert_ref);

}  // namespace ilid
