#pragma once

#include <cstdint>
#include <vector>

#include "ilid/dataset.hpp"
#include "ilid/mdp.hpp"

namespace ilid {

// Supplementary transitions from initial states into first-step expert states.
// Kept distinct from the practical rollback selection to avoid category errors.
struct SupplementaryTransition {
  int state = 0;
  int action = 0;
  int next = 0;
};

struct TheorySupplementaryDataset {
  std::vector<SupplementaryTransition> transitions;
};

// True when some positive-probability initial state has an action leading into
// `targets` in one step.
bool one_step_reachable(const TabularMdp& mdp, const std::vector<bool>& targets);

// Rejection sampler: draw s from the initial distribution; if any action leads
// into a first-step expert state, accept one qualifying action uniformly at
// random, otherwise reject the draw. Throws after `max_attempts` draws
// (default 10000 * max(n_s, 1)) without reaching n_s accepted transitions.
TheorySupplementaryDataset build_theory_supplementary(const TabularMdp& mdp,
                                                      const Dataset& expert, int n_s,
                                                      std::uint64_t seed,
                                                      long long max_attempts = -1);

// Idealized three-branch policy: count-ratio rows from the supplementary data
// on its initial states, count-ratio expert rows on every state the expert
// data visits (this branch wins on overlap), uniform elsewhere.
TabularPolicy construct_tilde_policy(const TabularMdp& mdp, const Dataset& expert,
                                     const TheorySupplementaryDataset& supplementary);

// Closed form of the expert first-step missing mass: sum_s mu(s)(1-mu(s))^n_e.
double analytic_eps_e(const std::vector<double>& initial_dist, int n_e);

struct MissingMassReport {
  double eps_o = 0.0, eps_o_se = 0.0;        // Monte Carlo
  double eps_e_analytic = 0.0;               // closed form
  double eps_e_mc = 0.0, eps_e_mc_se = 0.0;  // Monte Carlo cross-check
  double eps_s = 0.0, eps_s_se = 0.0;        // Monte Carlo
  int trials = 0;
};

MissingMassReport missing_mass(const TabularMdp& mdp, int n_e, int n_s, int trials,
                               std::uint64_t seed);

struct BoundReport {
  int n_e = 0, n_s = 0, trials = 0;
  double v_expert = 0.0;
  double v_tilde_mean = 0.0, v_tilde_se = 0.0;
  double delta = 0.0;
  double eps_o = 0.0, eps_o_se = 0.0;
  double eps_e = 0.0;  // analytic
  double eps_s = 0.0, eps_s_se = 0.0;
  double theorem1_rhs = 0.0;
  double corollary1_rhs = 0.0;
  double companion_rhs = 0.0;  // |S| H / (e n_e)
  double se_total = 0.0;       // Monte Carlo error attached to the theorem rhs
  bool theorem1_holds = false;
  bool corollary1_holds = false;
  bool companion_holds = false;
  bool thm_le_cor = false;

  double gap() const { return v_expert - v_tilde_mean; }
};

struct VerifyOptions {
  bool use_eps_s = true;  // disable to check the weaker sqrt(eps_e) surrogate
  long long attempt_budget = -1;
};

// Draws (expert data, supplementary data) `trials` times, builds the idealized
// policy, evaluates it exactly, and checks the suboptimality bound and its
// closed-form relaxation on the same draws.
BoundReport verify_bounds(const TabularMdp& mdp, int n_e, int n_s, int trials, std::uint64_t seed,
                          const VerifyOptions& opts = {});
BoundReport verify_theorem1(const TabularMdp& mdp, int n_e, int n_s, int trials,
                            std::uint64_t seed, const VerifyOptions& opts = {});
BoundReport verify_corollary1(const TabularMdp& mdp, int n_e, int n_s, int trials,
                              std::uint64_t seed, const VerifyOptions& opts = {});

struct RandomMdpOptions {
  int min_states = 5, max_states = 30;
  int min_actions = 2, max_actions = 4;
  int min_horizon = 5, max_horizon = 15;
  int min_support = 2, max_support = 5;  // initial-distribution support size
  // Resample until every supported initial state is one-step reachable from
  // some supported initial state, so supplementary data always exists.
  bool ensure_one_step_returns = true;
};

TabularMdp random_deterministic_mdp(Rng& rng, const RandomMdpOptions& opts = {});

}  // namespace ilid
