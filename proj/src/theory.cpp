#include "ilid/theory.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace ilid {

namespace {

constexpr double kEuler = 2.718281828459045;
// Exact-DP values are still floating point; bound comparisons carry this slack.
constexpr double kNumericalSlack = 1e-9;

std::vector<bool> first_step_states(const Dataset& ds, int num_states) {
  std::vector<bool> in(num_states, false);
  for (const auto& traj : ds.trajectories)
    if (!traj.states.empty()) in[traj.states.front()] = true;
  return in;
}

std::vector<bool> first_step_states(const TheorySupplementaryDataset& ds, int num_states) {
  std::vector<bool> in(num_states, false);
  for (const auto& tr : ds.transitions) in[tr.state] = true;
  return in;
}

double missing_mu_mass(const std::vector<double>& mu, const std::vector<bool>& covered) {
  double m = 0.0;
  for (std::size_t s = 0; s < mu.size(); ++s)
    if (!covered[s]) m += mu[s];
  return m;
}

struct RunningStat {
  double sum = 0.0, sum_sq = 0.0;
  long long n = 0;
  void add(double x) {
    sum += x;
    sum_sq += x * x;
    ++n;
  }
  double mean() const { return n == 0 ? 0.0 : sum / n; }
  double se() const {
    if (n < 2) return 0.0;
    const double m = mean();
    const double var = std::max(0.0, (sum_sq - n * m * m) / (n - 1));
    return std::sqrt(var / n);
  }
};

}  // namespace

bool one_step_reachable(const TabularMdp& mdp, const std::vector<bool>& targets) {
  for (int s = 0; s < mdp.num_states; ++s) {
    if (mdp.initial_dist[s] <= 0.0) continue;
    for (int a = 0; a < mdp.num_actions; ++a)
      if (targets[mdp.next_state[s][a]]) return true;
  }
  return false;
}

TheorySupplementaryDataset build_theory_supplementary(const TabularMdp& mdp,
                                                      const Dataset& expert, int n_s,
                                                      std::uint64_t seed,
                                                      long long max_attempts) {
  if (expert.trajectories.empty())
    throw std::invalid_argument("build_theory_supplementary: expert data is empty");
  if (n_s < 0) throw std::invalid_argument("build_theory_supplementary: negative n_s");
  TheorySupplementaryDataset out;
  if (n_s == 0) return out;
  const std::vector<bool> targets = first_step_states(expert, mdp.num_states);
  if (max_attempts < 0) max_attempts = 10000LL * std::max(n_s, 1);
  Rng rng(seed);
  std::vector<int> qualifying;
  long long attempts = 0;
  while (static_cast<int>(out.transitions.size()) < n_s) {
    if (attempts++ >= max_attempts)
      throw std::runtime_error(
          "build_theory_supplementary: attempt budget exhausted; no initial state reaches a "
          "first-step expert state in one step");
    const int s = rng.sample_discrete(mdp.initial_dist);
    qualifying.clear();
    for (int a = 0; a < mdp.num_actions; ++a)
      if (targets[mdp.next_state[s][a]]) qualifying.push_back(a);
    if (qualifying.empty()) continue;
    const int a = qualifying[rng.uniform_int(static_cast<int>(qualifying.size()))];
    out.transitions.push_back(SupplementaryTransition{s, a, mdp.next_state[s][a]});
  }
  return out;
}

TabularPolicy construct_tilde_policy(const TabularMdp& mdp, const Dataset& expert,
                                     const TheorySupplementaryDataset& supplementary) {
  const int S = mdp.num_states, A = mdp.num_actions;
  std::vector<long long> expert_state(S, 0), expert_pair(static_cast<std::size_t>(S) * A, 0);
  for (const auto& traj : expert.trajectories) {
    for (std::size_t t = 0; t < traj.length(); ++t) {
      ++expert_state[traj.states[t]];
      ++expert_pair[static_cast<std::size_t>(traj.states[t]) * A + traj.actions[t]];
    }
  }
  std::vector<long long> supp_state(S, 0), supp_pair(static_cast<std::size_t>(S) * A, 0);
  for (const auto& tr : supplementary.transitions) {
    ++supp_state[tr.state];
    ++supp_pair[static_cast<std::size_t>(tr.state) * A + tr.action];
  }

  TabularPolicy policy;
  policy.probs.assign(S, std::vector<double>(A, 0.0));
  for (int s = 0; s < S; ++s) {
    if (expert_state[s] > 0) {
      // Expert branch wins wherever the expert data visits the state.
      for (int a = 0; a < A; ++a)
        policy.probs[s][a] = static_cast<double>(expert_pair[static_cast<std::size_t>(s) * A + a]) /
                             static_cast<double>(expert_state[s]);
    } else if (supp_state[s] > 0) {
      for (int a = 0; a < A; ++a)
        policy.probs[s][a] = static_cast<double>(supp_pair[static_cast<std::size_t>(s) * A + a]) /
                             static_cast<double>(supp_state[s]);
    } else {
      for (int a = 0; a < A; ++a) policy.probs[s][a] = 1.0 / A;
    }
  }
  policy.validate();
  return policy;
}

double analytic_eps_e(const std::vector<double>& initial_dist, int n_e) {
  if (n_e <= 0) throw std::invalid_argument("analytic_eps_e: n_e must be positive");
  double eps = 0.0;
  for (double mu : initial_dist)
    if (mu > 0.0) eps += mu * std::pow(1.0 - mu, n_e);
  return eps;
}

MissingMassReport missing_mass(const TabularMdp& mdp, int n_e, int n_s, int trials,
                               std::uint64_t seed) {
  if (trials <= 0) throw std::invalid_argument("missing_mass: trials must be positive");
  const TabularPolicy expert_policy = value_iteration(mdp).policy;
  Rng rng(seed);
  RunningStat stat_o, stat_e, stat_s;
  for (int t = 0; t < trials; ++t) {
    const Dataset expert = generate_expert_data(
        mdp, expert_policy, n_e, rng.derive("mm-expert", static_cast<std::uint64_t>(t)).seed());
    const TheorySupplementaryDataset supp = build_theory_supplementary(
        mdp, expert, n_s, rng.derive("mm-supp", static_cast<std::uint64_t>(t)).seed());
    const auto s1e = first_step_states(expert, mdp.num_states);
    const auto s1s = first_step_states(supp, mdp.num_states);
    std::vector<bool> either(mdp.num_states, false);
    for (int s = 0; s < mdp.num_states; ++s) either[s] = s1e[s] || s1s[s];
    stat_o.add(missing_mu_mass(mdp.initial_dist, either));
    stat_e.add(missing_mu_mass(mdp.initial_dist, s1e));
    stat_s.add(missing_mu_mass(mdp.initial_dist, s1s));
  }
  MissingMassReport report;
  report.trials = trials;
  report.eps_o = stat_o.mean();
  report.eps_o_se = stat_o.se();
  report.eps_e_analytic = analytic_eps_e(mdp.initial_dist, n_e);
  report.eps_e_mc = stat_e.mean();
  report.eps_e_mc_se = stat_e.se();
  report.eps_s = stat_s.mean();
  report.eps_s_se = stat_s.se();
  return report;
}

BoundReport verify_bounds(const TabularMdp& mdp, int n_e, int n_s, int trials, std::uint64_t seed,
                          const VerifyOptions& opts) {
  if (trials <= 0) throw std::invalid_argument("verify_bounds: trials must be positive");
  if (n_e <= 0) throw std::invalid_argument("verify_bounds: n_e must be positive");
  const auto vi = value_iteration(mdp);
  const double v_expert = evaluate_policy_exact(mdp, vi.policy);
  const double delta = return_difference_delta(mdp, vi.policy);

  Rng rng(seed);
  RunningStat stat_v, stat_o, stat_s;
  for (int t = 0; t < trials; ++t) {
    const Dataset expert = generate_expert_data(
        mdp, vi.policy, n_e, rng.derive("verify-expert", static_cast<std::uint64_t>(t)).seed());
    const TheorySupplementaryDataset supp = build_theory_supplementary(
        mdp, expert, n_s, rng.derive("verify-supp", static_cast<std::uint64_t>(t)).seed(),
        opts.attempt_budget);
    const TabularPolicy tilde = construct_tilde_policy(mdp, expert, supp);
    stat_v.add(evaluate_policy_exact(mdp, tilde));
    const auto s1e = first_step_states(expert, mdp.num_states);
    const auto s1s = first_step_states(supp, mdp.num_states);
    std::vector<bool> either(mdp.num_states, false);
    for (int s = 0; s < mdp.num_states; ++s) either[s] = s1e[s] || s1s[s];
    stat_o.add(missing_mu_mass(mdp.initial_dist, either));
    stat_s.add(missing_mu_mass(mdp.initial_dist, s1s));
  }

  BoundReport r;
  r.n_e = n_e;
  r.n_s = n_s;
  r.trials = trials;
  r.v_expert = v_expert;
  r.v_tilde_mean = stat_v.mean();
  r.v_tilde_se = stat_v.se();
  r.delta = delta;
  r.eps_o = stat_o.mean();
  r.eps_o_se = stat_o.se();
  r.eps_e = analytic_eps_e(mdp.initial_dist, n_e);
  r.eps_s = stat_s.mean();
  r.eps_s_se = stat_s.se();

  if (r.v_tilde_mean > r.v_expert + kNumericalSlack)
    throw std::logic_error("verify_bounds: idealized policy outvalues the expert policy");

  const double one_minus_eps_s = opts.use_eps_s ? std::max(0.0, 1.0 - r.eps_s) : 1.0;
  const double sqrt_term = std::sqrt(r.eps_e * one_minus_eps_s);
  r.theorem1_rhs = mdp.horizon * r.eps_o + (delta + 1.0) * sqrt_term;
  // Conservative one-sided error: shifting eps_s down by one SE can only grow
  // the square-root factor.
  double sqrt_slack = 0.0;
  if (opts.use_eps_s) {
    const double shifted = std::max(0.0, 1.0 - std::max(0.0, r.eps_s - r.eps_s_se));
    sqrt_slack = std::sqrt(r.eps_e * shifted) - sqrt_term;
  }
  const double rhs_se = mdp.horizon * r.eps_o_se + (delta + 1.0) * sqrt_slack;
  r.se_total = r.v_tilde_se + rhs_se;
  r.theorem1_holds = r.gap() <= r.theorem1_rhs + 2.0 * r.se_total + kNumericalSlack;

  const double S = static_cast<double>(mdp.num_states);
  const double H = static_cast<double>(mdp.horizon);
  r.corollary1_rhs =
      S * H / (kEuler * (n_e + n_s)) + (delta + 1.0) * std::sqrt(S / (kEuler * n_e));
  r.companion_rhs = S * H / (kEuler * n_e);
  r.corollary1_holds = r.gap() <= r.corollary1_rhs + 2.0 * r.v_tilde_se + kNumericalSlack;
  r.companion_holds = r.gap() <= r.companion_rhs + 2.0 * r.v_tilde_se + kNumericalSlack;
  r.thm_le_cor = r.theorem1_rhs <= r.corollary1_rhs + 2.0 * rhs_se + kNumericalSlack;
  return r;
}

BoundReport verify_theorem1(const TabularMdp& mdp, int n_e, int n_s, int trials,
                            std::uint64_t seed, const VerifyOptions& opts) {
  return verify_bounds(mdp, n_e, n_s, trials, seed, opts);
}

BoundReport verify_corollary1(const TabularMdp& mdp, int n_e, int n_s, int trials,
                              std::uint64_t seed, const VerifyOptions& opts) {
  return verify_bounds(mdp, n_e, n_s, trials, seed, opts);
}

TabularMdp random_deterministic_mdp(Rng& rng, const RandomMdpOptions& opts) {
  while (true) {
    TabularMdp mdp;
    mdp.num_states = opts.min_states + rng.uniform_int(opts.max_states - opts.min_states + 1);
    mdp.num_actions = opts.min_actions + rng.uniform_int(opts.max_actions - opts.min_actions + 1);
    mdp.horizon = opts.min_horizon + rng.uniform_int(opts.max_horizon - opts.min_horizon + 1);
    mdp.next_state.assign(mdp.num_states, std::vector<int>(mdp.num_actions, 0));
    mdp.reward.assign(mdp.num_states, std::vector<double>(mdp.num_actions, 0.0));
    for (int s = 0; s < mdp.num_states; ++s) {
      for (int a = 0; a < mdp.num_actions; ++a) {
        mdp.next_state[s][a] = rng.uniform_int(mdp.num_states);
        mdp.reward[s][a] = rng.uniform();
      }
    }
    int max_support = std::min(opts.max_support, mdp.num_states);
    if (opts.ensure_one_step_returns) max_support = std::min(max_support, mdp.num_actions);
    const int min_support = std::min(opts.min_support, max_support);
    const int support = min_support + rng.uniform_int(max_support - min_support + 1);
    std::vector<int> order(mdp.num_states);
    std::iota(order.begin(), order.end(), 0);
    for (int i = 0; i < support; ++i) {
      const int j = i + rng.uniform_int(mdp.num_states - i);
      std::swap(order[i], order[j]);
    }
    mdp.initial_dist.assign(mdp.num_states, 0.0);
    for (int i = 0; i < support; ++i) mdp.initial_dist[order[i]] = 1.0 / support;

    if (opts.ensure_one_step_returns) {
      // Give every supported initial state one action into each supported
      // state (a random injection of targets into action slots). Supplementary
      // transitions then exist for any realized first-step expert set, and the
      // rejection sampler accepts every draw, which keeps its initial states
      // i.i.d. from the initial distribution.
      for (int i = 0; i < support; ++i) {
        std::vector<int> slots(mdp.num_actions);
        std::iota(slots.begin(), slots.end(), 0);
        for (int j = 0; j < support; ++j) {
          const int pick = j + rng.uniform_int(mdp.num_actions - j);
          std::swap(slots[j], slots[pick]);
          mdp.next_state[order[i]][slots[j]] = order[j];
        }
      }
    }
    mdp.validate();
    return mdp;
  }
}

}  // namespace ilid
