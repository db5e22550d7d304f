#include "ilid/dataset.hpp"

#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace ilid {

std::string role_name(Role role) {
  switch (role) {
    case Role::expert: return "expert";
    case Role::imperfect: return "imperfect";
    case Role::union_data: return "union";
    case Role::supplementary: return "supplementary";
  }
  return "unknown";
}

Role role_from_name(const std::string& name) {
  if (name == "expert") return Role::expert;
  if (name == "imperfect") return Role::imperfect;
  if (name == "union") return Role::union_data;
  if (name == "supplementary") return Role::supplementary;
  throw std::invalid_argument("unknown dataset role: " + name);
}

std::size_t Dataset::num_transitions() const {
  std::size_t n = 0;
  for (const auto& t : trajectories) n += t.length();
  return n;
}

Trajectory rollout(const TabularMdp& mdp, const TabularPolicy& policy, Rng& rng,
                   std::optional<int> start) {
  Trajectory traj;
  int s = start.has_value() ? *start : rng.sample_discrete(mdp.initial_dist);
  for (int h = 0; h < mdp.horizon; ++h) {
    if (mdp.is_terminal(s)) break;
    const int a = policy.sample_action(s, rng);
    traj.states.push_back(s);
    traj.actions.push_back(a);
    s = mdp.next_state[s][a];
  }
  return traj;
}

Trajectory rollout(const TabularMdp& mdp, const TabularPolicy& policy, std::uint64_t seed,
                   std::optional<int> start) {
  Rng rng(seed);
  return rollout(mdp, policy, rng, start);
}

Dataset generate_expert_data(const TabularMdp& mdp, const TabularPolicy& expert_policy, int n_e,
                             std::uint64_t seed, std::optional<int> start) {
  if (n_e <= 0) throw std::invalid_argument("generate_expert_data: n_e must be positive");
  if (!expert_policy.is_deterministic())
    throw std::invalid_argument("generate_expert_data: expert policy must be deterministic");
  Rng rng(seed);
  Dataset ds;
  ds.role = Role::expert;
  for (int i = 0; i < n_e; ++i) {
    Rng child = rng.derive("expert-trajectory", static_cast<std::uint64_t>(i));
    ds.trajectories.push_back(rollout(mdp, expert_policy, child, start));
  }
  return ds;
}

TabularPolicy make_epsilon_mix(const TabularPolicy& expert_policy, double epsilon) {
  if (epsilon < 0.0 || epsilon > 1.0)
    throw std::invalid_argument("make_epsilon_mix: epsilon must lie in [0, 1]");
  TabularPolicy mixed = expert_policy;
  const int A = expert_policy.num_actions();
  for (auto& row : mixed.probs)
    for (double& p : row) p = (1.0 - epsilon) * p + epsilon / A;
  return mixed;
}

Dataset generate_imperfect_data(const TabularMdp& mdp, const TabularPolicy& behavior, int n_b,
                                std::uint64_t seed) {
  if (n_b <= 0) throw std::invalid_argument("generate_imperfect_data: n_b must be positive");
  Rng rng(seed);
  Dataset ds;
  ds.role = Role::imperfect;
  for (int i = 0; i < n_b; ++i) {
    Rng child = rng.derive("imperfect-trajectory", static_cast<std::uint64_t>(i));
    ds.trajectories.push_back(rollout(mdp, behavior, child));
  }
  return ds;
}

Dataset generate_imperfect_data(const TabularMdp& mdp, const TabularPolicy& expert_policy,
                                double epsilon, int n_b, std::uint64_t seed) {
  return generate_imperfect_data(mdp, make_epsilon_mix(expert_policy, epsilon), n_b, seed);
}

Dataset union_dataset(const Dataset& expert, const Dataset& imperfect) {
  if (expert.role != Role::expert || imperfect.role != Role::imperfect)
    throw std::invalid_argument("union_dataset: expects an expert and an imperfect dataset");
  Dataset u;
  u.role = Role::union_data;
  u.trajectories = expert.trajectories;
  u.trajectories.insert(u.trajectories.end(), imperfect.trajectories.begin(),
                        imperfect.trajectories.end());
  return u;
}

double CountTable::state_marginal(int s) const {
  return total == 0 ? 0.0 : static_cast<double>(state_counts[s]) / static_cast<double>(total);
}

double CountTable::pair_marginal(int s, int a) const {
  return total == 0 ? 0.0
                    : static_cast<double>(pair_count(s, a)) / static_cast<double>(total);
}

CountTable empirical_marginals(const Dataset& dataset, int num_states, int num_actions) {
  if (dataset.trajectories.empty())
    throw std::invalid_argument("empirical_marginals: dataset is empty");
  CountTable ct;
  ct.role = dataset.role;
  ct.num_states = num_states;
  ct.num_actions = num_actions;
  ct.state_counts.assign(num_states, 0);
  ct.state_action_counts.assign(static_cast<std::size_t>(num_states) * num_actions, 0);
  for (const auto& traj : dataset.trajectories) {
    for (std::size_t t = 0; t < traj.length(); ++t) {
      const int s = traj.states[t], a = traj.actions[t];
      if (s < 0 || s >= num_states || a < 0 || a >= num_actions)
        throw std::invalid_argument("empirical_marginals: state or action out of range");
      ++ct.state_counts[s];
      ++ct.state_action_counts[static_cast<std::size_t>(s) * num_actions + a];
      ++ct.total;
    }
  }
  return ct;
}

void validate_against(const Dataset& dataset, const TabularMdp& mdp) {
  for (std::size_t i = 0; i < dataset.trajectories.size(); ++i) {
    const Trajectory& traj = dataset.trajectories[i];
    if (traj.states.size() != traj.actions.size())
      throw std::invalid_argument("trajectory " + std::to_string(i) +
                                  ": states/actions length mismatch");
    for (std::size_t t = 0; t + 1 < traj.length(); ++t) {
      if (mdp.next_state[traj.states[t]][traj.actions[t]] != traj.states[t + 1])
        throw std::invalid_argument("trajectory " + std::to_string(i) + " step " +
                                    std::to_string(t) + ": transition violates dynamics");
    }
  }
}

std::string dataset_to_jsonl(const Dataset& dataset) {
  std::ostringstream out;
  for (const auto& traj : dataset.trajectories) {
    nlohmann::json j;
    j["states"] = traj.states;
    j["actions"] = traj.actions;
    out << j.dump() << "\n";
  }
  return out.str();
}

void save_dataset(const Dataset& dataset, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_dataset: cannot open " + path);
  out << dataset_to_jsonl(dataset);
}

Dataset load_dataset(const std::string& path, Role role) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_dataset: cannot open " + path);
  Dataset ds;
  ds.role = role;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error("load_dataset: " + path + " line " + std::to_string(line_no) +
                               ": " + e.what());
    }
    Trajectory traj;
    try {
      traj.states = j.at("states").get<std::vector<int>>();
      traj.actions = j.at("actions").get<std::vector<int>>();
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error("load_dataset: " + path + " line " + std::to_string(line_no) +
                               ": " + e.what());
    }
    if (traj.states.size() != traj.actions.size())
      throw std::runtime_error("load_dataset: " + path + " line " + std::to_string(line_no) +
                               ": states/actions length mismatch");
    ds.trajectories.push_back(std::move(traj));
  }
  if (ds.trajectories.empty())
    std::cerr << "warning: " << path << " holds an empty dataset\n";
  return ds;
}

std::string dataset_hash(const Dataset& dataset) {
  const std::uint64_t h = fnv1a64(dataset_to_jsonl(dataset));
  std::ostringstream out;
  out << std::hex << h;
  return out.str();
}

}  // namespace ilid
