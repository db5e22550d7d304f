#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ilid/mdp.hpp"
#include "ilid/rng.hpp"

namespace ilid {

enum class Role { expert, imperfect, union_data, supplementary };

std::string role_name(Role role);
Role role_from_name(const std::string& name);

// Ordered (state, action) pairs. Rollouts stop early at absorbing states, so
// the stored length may be below the horizon.
struct Trajectory {
  std::vector<int> states;
  std::vector<int> actions;

  std::size_t length() const { return states.size(); }
  bool operator==(const Trajectory&) const = default;
};

struct Dataset {
  std::vector<Trajectory> trajectories;
  Role role = Role::expert;

  std::size_t size() const { return trajectories.size(); }
  std::size_t num_transitions() const;
  bool operator==(const Dataset&) const = default;
};

// Samples one episode. The start state is drawn from the initial distribution
// unless given. A fixed seed reproduces the trajectory bit-exactly.
Trajectory rollout(const TabularMdp& mdp, const TabularPolicy& policy, Rng& rng,
                   std::optional<int> start = std::nullopt);
Trajectory rollout(const TabularMdp& mdp, const TabularPolicy& policy, std::uint64_t seed,
                   std::optional<int> start = std::nullopt);

Dataset generate_expert_data(const TabularMdp& mdp, const TabularPolicy& expert_policy, int n_e,
                             std::uint64_t seed, std::optional<int> start = std::nullopt);

// Behavior that takes a uniform-random action with probability epsilon and
// the expert action otherwise.
TabularPolicy make_epsilon_mix(const TabularPolicy& expert_policy, double epsilon);

Dataset generate_imperfect_data(const TabularMdp& mdp, const TabularPolicy& behavior, int n_b,
                                std::uint64_t seed);
Dataset generate_imperfect_data(const TabularMdp& mdp, const TabularPolicy& expert_policy,
                                double epsilon, int n_b, std::uint64_t seed);

// Multiset union; duplicates are retained. Expects an expert and an imperfect
// dataset, in that order.
Dataset union_dataset(const Dataset& expert, const Dataset& imperfect);

// Integer transition counts; marginals are computed as ratios on demand.
struct CountTable {
  Role role = Role::expert;
  int num_states = 0;
  int num_actions = 0;
  std::vector<long long> state_counts;        // [state]
  std::vector<long long> state_action_counts; // [state * num_actions + action]
  long long total = 0;

  long long state_count(int s) const { return state_counts[s]; }
  long long pair_count(int s, int a) const { return state_action_counts[s * num_actions + a]; }
  double state_marginal(int s) const;
  double pair_marginal(int s, int a) const;
};

CountTable empirical_marginals(const Dataset& dataset, int num_states, int num_actions);

// Checks every stored transition against the MDP's next_state table.
void validate_against(const Dataset& dataset, const TabularMdp& mdp);

// JSON-lines persistence: one {"states":[...],"actions":[...]} object per line.
void save_dataset(const Dataset& dataset, const std::string& path);
Dataset load_dataset(const std::string& path, Role role);

std::string dataset_to_jsonl(const Dataset& dataset);
std::string dataset_hash(const Dataset& dataset);  // FNV-1a over the JSONL bytes

}  // namespace ilid
