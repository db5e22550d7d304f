#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ilid/rng.hpp"
#include "json.hpp"

namespace ilid {

// Finite episodic MDP with deterministic transitions and rewards in [0, 1].
struct TabularMdp {
  int num_states = 0;
  int num_actions = 0;
  std::vector<std::vector<int>> next_state;   // [state][action] -> state
  std::vector<std::vector<double>> reward;    // [state][action] -> [0, 1]
  int horizon = 0;
  std::vector<double> initial_dist;           // length num_states, sums to 1
  std::vector<int> terminal_states;           // absorbing, zero reward

  bool is_terminal(int s) const;

  // Throws std::invalid_argument on the first violated invariant.
  void validate() const;
};

// Per-state distribution over actions.
struct TabularPolicy {
  std::vector<std::vector<double>> probs;

  int num_states() const { return static_cast<int>(probs.size()); }
  int num_actions() const { return probs.empty() ? 0 : static_cast<int>(probs[0].size()); }

  static TabularPolicy uniform(int num_states, int num_actions);
  static TabularPolicy deterministic(const std::vector<int>& actions, int num_actions);

  bool is_deterministic() const;
  int sample_action(int state, Rng& rng) const;
  int argmax_action(int state) const;

  // Rows must be nonnegative and sum to 1 within 1e-9.
  void validate() const;
};

struct ValueIterationResult {
  // values[h][s] = optimal return achievable from s with steps h+1..H remaining,
  // so values[0][s] is the full-horizon value.
  std::vector<std::vector<double>> values;
  TabularPolicy policy;  // deterministic, greedy at the first step, lowest action index on ties
};

ValueIterationResult value_iteration(const TabularMdp& mdp);

// Exact V^pi via forward dynamic programming on the state occupancy; no sampling.
// With `start` set, the initial distribution is a point mass on that state.
double evaluate_policy_exact(const TabularMdp& mdp, const TabularPolicy& policy,
                             std::optional<int> start = std::nullopt);

// max { V(s1) - V(s2) : mu(s1) > 0, mu(s2) > 0 } for a deterministic expert policy.
double return_difference_delta(const TabularMdp& mdp, const TabularPolicy& expert_policy);

nlohmann::json mdp_to_json(const TabularMdp& mdp);
TabularMdp mdp_from_json(const nlohmann::json& j);
void save_mdp(const TabularMdp& mdp, const std::string& path);
TabularMdp load_mdp(const std::string& path);

nlohmann::json policy_to_json(const TabularPolicy& policy);
TabularPolicy policy_from_json(const nlohmann::json& j);
void save_policy(const TabularPolicy& policy, const std::string& path);
TabularPolicy load_policy(const std::string& path);

}  // namespace ilid
