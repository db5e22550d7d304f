#include "ilid/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ilid {

namespace {

void fail(const std::string& what) { throw std::invalid_argument(what); }

}  // namespace

bool TabularMdp::is_terminal(int s) const {
  return std::find(terminal_states.begin(), terminal_states.end(), s) != terminal_states.end();
}

void TabularMdp::validate() const {
  if (num_states <= 0) fail("mdp: num_states must be positive");
  if (num_actions <= 0) fail("mdp: num_actions must be positive");
  if (horizon <= 0) fail("mdp: horizon must be positive");
  if (static_cast<int>(next_state.size()) != num_states ||
      static_cast<int>(reward.size()) != num_states)
    fail("mdp: table row count does not match num_states");
  for (int s = 0; s < num_states; ++s) {
    if (static_cast<int>(next_state[s].size()) != num_actions ||
        static_cast<int>(reward[s].size()) != num_actions)
      fail("mdp: table column count does not match num_actions");
    for (int a = 0; a < num_actions; ++a) {
      const int t = next_state[s][a];
      if (t < 0 || t >= num_states) fail("mdp: next_state entry out of range");
      const double r = reward[s][a];
      if (!(r >= 0.0 && r <= 1.0)) fail("mdp: reward outside [0, 1]");
    }
  }
  if (static_cast<int>(initial_dist.size()) != num_states)
    fail("mdp: initial_dist length does not match num_states");
  double mass = 0.0;
  for (double p : initial_dist) {
    if (p < 0.0) fail("mdp: initial_dist entry negative");
    mass += p;
  }
  if (std::abs(mass - 1.0) > 1e-12) fail("mdp: initial_dist does not sum to 1");
  for (int s : terminal_states) {
    if (s < 0 || s >= num_states) fail("mdp: terminal state out of range");
    for (int a = 0; a < num_actions; ++a) {
      if (next_state[s][a] != s) fail("mdp: terminal state is not absorbing");
      if (reward[s][a] != 0.0) fail("mdp: terminal state has nonzero reward");
    }
  }
}

TabularPolicy TabularPolicy::uniform(int num_states, int num_actions) {
  TabularPolicy p;
  p.probs.assign(num_states, std::vector<double>(num_actions, 1.0 / num_actions));
  return p;
}

TabularPolicy TabularPolicy::deterministic(const std::vector<int>& actions, int num_actions) {
  TabularPolicy p;
  p.probs.assign(actions.size(), std::vector<double>(num_actions, 0.0));
  for (std::size_t s = 0; s < actions.size(); ++s) {
    if (actions[s] < 0 || actions[s] >= num_actions)
      throw std::invalid_argument("policy: action index out of range");
    p.probs[s][actions[s]] = 1.0;
  }
  return p;
}

bool TabularPolicy::is_deterministic() const {
  for (const auto& row : probs)
    for (double v : row)
      if (v != 0.0 && v != 1.0) return false;
  return true;
}

int TabularPolicy::sample_action(int state, Rng& rng) const {
  const auto& row = probs[state];
  double u = rng.uniform();
  for (std::size_t a = 0; a < row.size(); ++a) {
    u -= row[a];
    if (u < 0.0) return static_cast<int>(a);
  }
  return static_cast<int>(row.size() - 1);
}

int TabularPolicy::argmax_action(int state) const {
  const auto& row = probs[state];
  return static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
}

void TabularPolicy::validate() const {
  for (const auto& row : probs) {
    if (row.empty()) fail("policy: empty action row");
    double sum = 0.0;
    for (double v : row) {
      if (v < 0.0) fail("policy: negative probability");
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9) fail("policy: row does not sum to 1");
  }
}

ValueIterationResult value_iteration(const TabularMdp& mdp) {
  mdp.validate();
  const int S = mdp.num_states, A = mdp.num_actions, H = mdp.horizon;
  ValueIterationResult out;
  out.values.assign(H, std::vector<double>(S, 0.0));
  // Summed Q over all steps, the stationary tie-break: a first-step tie between
  // actions (common under slack horizons, where values saturate) is resolved
  // toward the action that stays optimal at more remaining-step counts, which
  // on goal MDPs is the one reaching the goal sooner.
  std::vector<double> qsum(static_cast<std::size_t>(S) * A, 0.0);
  std::vector<double> q1(static_cast<std::size_t>(S) * A, 0.0);
  for (int h = H - 1; h >= 0; --h) {
    for (int s = 0; s < S; ++s) {
      double best = -1.0;
      for (int a = 0; a < A; ++a) {
        double q = mdp.reward[s][a];
        if (h + 1 < H) q += out.values[h + 1][mdp.next_state[s][a]];
        best = std::max(best, q);
        qsum[static_cast<std::size_t>(s) * A + a] += q;
        if (h == 0) q1[static_cast<std::size_t>(s) * A + a] = q;
      }
      out.values[h][s] = best;
    }
  }
  std::vector<int> greedy(S, 0);
  for (int s = 0; s < S; ++s) {
    int best_a = 0;
    for (int a = 1; a < A; ++a) {
      const std::size_t i = static_cast<std::size_t>(s) * A + a;
      const std::size_t b = static_cast<std::size_t>(s) * A + best_a;
      if (q1[i] > q1[b] || (q1[i] == q1[b] && qsum[i] > qsum[b])) best_a = a;
    }
    greedy[s] = best_a;
  }
  out.policy = TabularPolicy::deterministic(greedy, A);
  return out;
}

double evaluate_policy_exact(const TabularMdp& mdp, const TabularPolicy& policy,
                             std::optional<int> start) {
  const int S = mdp.num_states, A = mdp.num_actions;
  std::vector<double> occ(S, 0.0);
  if (start.has_value()) {
    if (*start < 0 || *start >= S) throw std::invalid_argument("evaluate: start out of range");
    occ[*start] = 1.0;
  } else {
    occ = mdp.initial_dist;
  }
  double total = 0.0;
  std::vector<double> next(S, 0.0);
  for (int h = 0; h < mdp.horizon; ++h) {
    std::fill(next.begin(), next.end(), 0.0);
    for (int s = 0; s < S; ++s) {
      const double p = occ[s];
      if (p == 0.0) continue;
      for (int a = 0; a < A; ++a) {
        const double pa = p * policy.probs[s][a];
        if (pa == 0.0) continue;
        total += pa * mdp.reward[s][a];
        next[mdp.next_state[s][a]] += pa;
      }
    }
    occ.swap(next);
  }
  return total;
}

double return_difference_delta(const TabularMdp& mdp, const TabularPolicy& expert_policy) {
  if (!expert_policy.is_deterministic())
    throw std::invalid_argument("return_difference_delta: expert policy must be deterministic");
  double lo = 0.0, hi = 0.0;
  bool any = false;
  for (int s = 0; s < mdp.num_states; ++s) {
    if (mdp.initial_dist[s] <= 0.0) continue;
    const double v = evaluate_policy_exact(mdp, expert_policy, s);
    if (!any) {
      lo = hi = v;
      any = true;
    } else {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (!any) throw std::invalid_argument("return_difference_delta: initial distribution has empty support");
  return hi - lo;
}

nlohmann::json mdp_to_json(const TabularMdp& mdp) {
  nlohmann::json j;
  j["num_states"] = mdp.num_states;
  j["num_actions"] = mdp.num_actions;
  j["horizon"] = mdp.horizon;
  j["next_state"] = mdp.next_state;
  j["reward"] = mdp.reward;
  j["initial_dist"] = mdp.initial_dist;
  j["terminal_states"] = mdp.terminal_states;
  return j;
}

TabularMdp mdp_from_json(const nlohmann::json& j) {
  TabularMdp mdp;
  mdp.num_states = j.at("num_states").get<int>();
  mdp.num_actions = j.at("num_actions").get<int>();
  mdp.horizon = j.at("horizon").get<int>();
  mdp.next_state = j.at("next_state").get<std::vector<std::vector<int>>>();
  mdp.reward = j.at("reward").get<std::vector<std::vector<double>>>();
  mdp.initial_dist = j.at("initial_dist").get<std::vector<double>>();
  if (j.contains("terminal_states"))
    mdp.terminal_states = j.at("terminal_states").get<std::vector<int>>();
  mdp.validate();
  return mdp;
}

void save_mdp(const TabularMdp& mdp, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_mdp: cannot open " + path);
  out << mdp_to_json(mdp).dump(2) << "\n";
}

TabularMdp load_mdp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_mdp: cannot open " + path);
  nlohmann::json j;
  in >> j;
  return mdp_from_json(j);
}

nlohmann::json policy_to_json(const TabularPolicy& policy) {
  nlohmann::json j;
  j["num_states"] = policy.num_states();
  j["num_actions"] = policy.num_actions();
  j["probs"] = policy.probs;
  return j;
}

TabularPolicy policy_from_json(const nlohmann::json& j) {
  TabularPolicy p;
  p.probs = j.at("probs").get<std::vector<std::vector<double>>>();
  p.validate();
  return p;
}

void save_policy(const TabularPolicy& policy, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_policy: cannot open " + path);
  out << policy_to_json(policy).dump(2) << "\n";
}

TabularPolicy load_policy(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_policy: cannot open " + path);
  nlohmann::json j;
  in >> j;
  return policy_from_json(j);
}

}  // namespace ilid
