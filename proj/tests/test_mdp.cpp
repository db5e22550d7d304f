#include <algorithm>
#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "ilid/dataset.hpp"
#include "ilid/four_rooms.hpp"
#include "ilid/theory.hpp"

using namespace ilid;

namespace {

TabularMdp constant_reward_chain(int num_states, int num_actions, int horizon, double r) {
  TabularMdp mdp;
  mdp.num_states = num_states;
  mdp.num_actions = num_actions;
  mdp.horizon = horizon;
  mdp.next_state.assign(num_states, std::vector<int>(num_actions, 0));
  mdp.reward.assign(num_states, std::vector<double>(num_actions, r));
  for (int s = 0; s < num_states; ++s)
    for (int a = 0; a < num_actions; ++a) mdp.next_state[s][a] = s;
  mdp.initial_dist.assign(num_states, 0.0);
  mdp.initial_dist[0] = 1.0;
  return mdp;
}

// Value of a fixed action sequence from a fixed start on deterministic dynamics.
double path_return(const TabularMdp& mdp, int start, const std::vector<int>& actions) {
  double total = 0.0;
  int s = start;
  for (int a : actions) {
    total += mdp.reward[s][a];
    s = mdp.next_state[s][a];
  }
  return total;
}

// Independent oracle: optimal return from `start` by enumerating all |A|^H
// action sequences.
double best_action_sequence_return(const TabularMdp& mdp, int start) {
  const int A = mdp.num_actions, H = mdp.horizon;
  long long total = 1;
  for (int h = 0; h < H; ++h) total *= A;
  double best = -1.0;
  std::vector<int> actions(H, 0);
  for (long long code = 0; code < total; ++code) {
    long long c = code;
    for (int h = 0; h < H; ++h) {
      actions[h] = static_cast<int>(c % A);
      c /= A;
    }
    best = std::max(best, path_return(mdp, start, actions));
  }
  return best;
}

// Goal-structured random MDP: deterministic transitions, one absorbing goal,
// reward 1 on entering it.
TabularMdp random_goal_mdp(Rng& rng, int num_states, int num_actions, int horizon) {
  TabularMdp mdp;
  mdp.num_states = num_states;
  mdp.num_actions = num_actions;
  mdp.horizon = horizon;
  const int goal = rng.uniform_int(num_states);
  mdp.next_state.assign(num_states, std::vector<int>(num_actions, 0));
  mdp.reward.assign(num_states, std::vector<double>(num_actions, 0.0));
  for (int s = 0; s < num_states; ++s) {
    for (int a = 0; a < num_actions; ++a) {
      if (s == goal) {
        mdp.next_state[s][a] = s;
        continue;
      }
      const int t = rng.uniform_int(num_states);
      mdp.next_state[s][a] = t;
      if (t == goal) mdp.reward[s][a] = 1.0;
    }
  }
  mdp.initial_dist.assign(num_states, 0.0);
  mdp.initial_dist[rng.uniform_int(num_states)] = 1.0;
  mdp.terminal_states = {goal};
  return mdp;
}

}  // namespace

TEST_CASE("mdp validation rejects broken tables") {
  TabularMdp mdp = constant_reward_chain(2, 2, 3, 0.5);
  CHECK_NOTHROW(mdp.validate());

  TabularMdp bad = mdp;
  bad.reward[0][0] = 1.5;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  bad = mdp;
  bad.next_state[1][0] = 7;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  bad = mdp;
  bad.initial_dist = {0.6, 0.6};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  bad = mdp;
  bad.terminal_states = {0};  // reward 0.5 on a terminal state
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("policy validation") {
  TabularPolicy p = TabularPolicy::uniform(3, 4);
  CHECK_NOTHROW(p.validate());
  p.probs[1][2] = -0.1;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = TabularPolicy::uniform(3, 4);
  p.probs[0][0] = 0.5;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}

TEST_CASE("value iteration on degenerate rewards") {
  SUBCASE("all rewards zero") {
    TabularMdp mdp = constant_reward_chain(4, 3, 5, 0.0);
    const auto vi = value_iteration(mdp);
    for (const auto& row : vi.values)
      for (double v : row) CHECK(v == 0.0);
    for (int s = 0; s < 4; ++s) CHECK(vi.policy.argmax_action(s) == 0);  // lowest index on ties
  }
  SUBCASE("single state, unit reward, horizon 3") {
    TabularMdp mdp = constant_reward_chain(1, 2, 3, 0.0);
    mdp.reward[0][0] = 1.0;
    const auto vi = value_iteration(mdp);
    CHECK(vi.values[0][0] == doctest::Approx(3.0));
    CHECK(evaluate_policy_exact(mdp, vi.policy) == doctest::Approx(3.0));
  }
}

TEST_CASE("value table matches action-sequence enumeration on random MDPs") {
  Rng rng(101);
  RandomMdpOptions opts;
  opts.min_states = 2;
  opts.max_states = 6;
  opts.min_actions = 2;
  opts.max_actions = 3;
  opts.min_horizon = 2;
  opts.max_horizon = 5;
  opts.min_support = 1;
  opts.max_support = 3;
  opts.ensure_one_step_returns = false;
  for (int it = 0; it < 40; ++it) {
    Rng child = rng.derive("enum-mdp", it);
    const TabularMdp mdp = random_deterministic_mdp(child, opts);
    const auto vi = value_iteration(mdp);
    for (int s = 0; s < mdp.num_states; ++s)
      CHECK(vi.values[0][s] == doctest::Approx(best_action_sequence_return(mdp, s)).epsilon(1e-12));
  }
}

TEST_CASE("greedy policy attains the brute-force stationary maximum on goal MDPs") {
  Rng rng(202);
  for (int it = 0; it < 60; ++it) {
    Rng child = rng.derive("goal-mdp", it);
    const int S = 3 + child.uniform_int(4);  // up to 6 states
    const int A = 2 + child.uniform_int(2);  // up to 3 actions
    const int H = 2 + child.uniform_int(4);  // up to 5 steps
    const TabularMdp mdp = random_goal_mdp(child, S, A, H);
    const auto vi = value_iteration(mdp);
    const double greedy_value = evaluate_policy_exact(mdp, vi.policy);

    long long total = 1;
    for (int s = 0; s < S; ++s) total *= A;
    double best = -1.0;
    std::vector<int> acts(S, 0);
    for (long long code = 0; code < total; ++code) {
      long long c = code;
      for (int s = 0; s < S; ++s) {
        acts[s] = static_cast<int>(c % A);
        c /= A;
      }
      best = std::max(best, evaluate_policy_exact(mdp, TabularPolicy::deterministic(acts, A)));
    }
    CHECK(greedy_value == doctest::Approx(best).epsilon(1e-12));
  }
}

TEST_CASE("exact evaluation agrees with Monte Carlo rollouts") {
  Rng rng(303);
  RandomMdpOptions opts;
  opts.min_states = 4;
  opts.max_states = 10;
  opts.min_horizon = 3;
  opts.max_horizon = 8;
  opts.ensure_one_step_returns = false;
  for (int it = 0; it < 3; ++it) {
    Rng child = rng.derive("mc-mdp", it);
    const TabularMdp mdp = random_deterministic_mdp(child, opts);
    // Random stochastic policy.
    TabularPolicy policy = TabularPolicy::uniform(mdp.num_states, mdp.num_actions);
    for (auto& row : policy.probs) {
      double z = 0.0;
      for (double& p : row) {
        p = child.uniform(0.05, 1.0);
        z += p;
      }
      for (double& p : row) p /= z;
    }
    const double exact = evaluate_policy_exact(mdp, policy);
    const int n = 10000;
    double sum = 0.0, sum_sq = 0.0;
    Rng roll_rng = child.derive("rollouts");
    for (int i = 0; i < n; ++i) {
      Rng episode = roll_rng.derive("e", i);
      const Trajectory traj = rollout(mdp, policy, episode);
      double ret = 0.0;
      for (std::size_t t = 0; t < traj.length(); ++t)
        ret += mdp.reward[traj.states[t]][traj.actions[t]];
      sum += ret;
      sum_sq += ret * ret;
    }
    const double mean = sum / n;
    const double se = std::sqrt(std::max(0.0, (sum_sq / n - mean * mean)) / n);
    CHECK(std::abs(exact - mean) <= 3.0 * se + 1e-9);
  }
}

TEST_CASE("uniform policy on a reward-free MDP evaluates to zero") {
  TabularMdp mdp = constant_reward_chain(5, 2, 6, 0.0);
  CHECK(evaluate_policy_exact(mdp, TabularPolicy::uniform(5, 2)) == 0.0);
}

TEST_CASE("terminal occupancy never decreases in the forward recursion") {
  const FourRoomsModel model = build_four_rooms(FourRoomsSpec::standard());
  const TabularMdp& mdp = model.mdp;
  const TabularPolicy policy = TabularPolicy::uniform(mdp.num_states, mdp.num_actions);
  std::vector<double> occ = mdp.initial_dist, next(mdp.num_states, 0.0);
  double prev_terminal_mass = 0.0;
  for (int h = 0; h < mdp.horizon; ++h) {
    std::fill(next.begin(), next.end(), 0.0);
    for (int s = 0; s < mdp.num_states; ++s)
      for (int a = 0; a < mdp.num_actions; ++a)
        next[mdp.next_state[s][a]] += occ[s] * policy.probs[s][a];
    double terminal_mass = 0.0;
    for (int t : mdp.terminal_states) terminal_mass += next[t];
    CHECK(terminal_mass >= prev_terminal_mass - 1e-12);
    prev_terminal_mass = terminal_mass;
    occ.swap(next);
  }
}

TEST_CASE("rollout determinism") {
  const FourRoomsModel model = build_four_rooms(FourRoomsSpec::standard());
  const auto vi = value_iteration(model.mdp);

  SUBCASE("deterministic policy and start: any seed gives the same trajectory") {
    const Trajectory a = rollout(model.mdp, vi.policy, 1ull, model.start_states[1]);
    const Trajectory b = rollout(model.mdp, vi.policy, 999ull, model.start_states[1]);
    CHECK(a == b);
  }
  SUBCASE("same seed reproduces a stochastic trajectory bit-exactly") {
    const TabularPolicy uniform = TabularPolicy::uniform(model.mdp.num_states, 4);
    CHECK(rollout(model.mdp, uniform, 42ull) == rollout(model.mdp, uniform, 42ull));
  }
  SUBCASE("action frequencies track the policy row") {
    TabularMdp mdp = constant_reward_chain(1, 4, 1, 0.0);
    TabularPolicy policy = TabularPolicy::uniform(1, 4);
    policy.probs[0] = {0.1, 0.2, 0.3, 0.4};
    Rng rng(7);
    std::vector<double> freq(4, 0.0);
    const int n = 10000;
    for (int i = 0; i < n; ++i) freq[policy.sample_action(0, rng)] += 1.0 / n;
    for (int a = 0; a < 4; ++a) CHECK(std::abs(freq[a] - policy.probs[0][a]) < 0.02);
  }
}

TEST_CASE("return difference delta") {
  SUBCASE("single supported start gives zero") {
    TabularMdp mdp = constant_reward_chain(3, 2, 4, 0.3);
    const auto vi = value_iteration(mdp);
    CHECK(return_difference_delta(mdp, vi.policy) == 0.0);
  }
  SUBCASE("two starts with values 7 and 4 give 3") {
    TabularMdp mdp = constant_reward_chain(2, 2, 10, 0.0);
    for (int a = 0; a < 2; ++a) {
      mdp.next_state[1][a] = 1;
      mdp.reward[0][a] = 0.7;
      mdp.reward[1][a] = 0.4;
    }
    mdp.initial_dist = {0.5, 0.5};
    const auto vi = value_iteration(mdp);
    CHECK(evaluate_policy_exact(mdp, vi.policy, 0) == doctest::Approx(7.0));
    CHECK(evaluate_policy_exact(mdp, vi.policy, 1) == doctest::Approx(4.0));
    CHECK(return_difference_delta(mdp, vi.policy) == doctest::Approx(3.0));
  }
  SUBCASE("stochastic policy rejected") {
    TabularMdp mdp = constant_reward_chain(2, 2, 3, 0.1);
    CHECK_THROWS_AS(return_difference_delta(mdp, TabularPolicy::uniform(2, 2)),
                    std::invalid_argument);
  }
}

TEST_CASE("four rooms construction") {
  const FourRoomsSpec spec = FourRoomsSpec::standard();
  const FourRoomsModel model = build_four_rooms(spec);
  CHECK(model.mdp.num_states == 104);
  CHECK(model.mdp.num_actions == 4);

  SUBCASE("wall blocking keeps the agent in place with zero reward") {
    const int s = model.state_at(0, 0);  // top-left corner, up and left blocked
    CHECK(model.mdp.next_state[s][kUp] == s);
    CHECK(model.mdp.next_state[s][kLeft] == s);
    CHECK(model.mdp.reward[s][kUp] == 0.0);
    const int wall_neighbor = model.state_at(0, 4);  // wall at (0,5)
    CHECK(model.mdp.next_state[wall_neighbor][kRight] == wall_neighbor);
  }
  SUBCASE("entering the goal pays one and absorbs") {
    const int above_goal = model.state_at(spec.goal_cell.row + 1, spec.goal_cell.col);
    CHECK(model.mdp.next_state[above_goal][kUp] == model.goal_state);
    CHECK(model.mdp.reward[above_goal][kUp] == 1.0);
    for (int a = 0; a < 4; ++a) {
      CHECK(model.mdp.next_state[model.goal_state][a] == model.goal_state);
      CHECK(model.mdp.reward[model.goal_state][a] == 0.0);
    }
  }
  SUBCASE("greedy rollout lengths match breadth-first-search distances") {
    const auto dist = bfs_distance_to_goal(spec);
    const auto vi = value_iteration(model.mdp);
    for (int idx = 0; idx < 2; ++idx) {
      const Cell c = spec.start_cells[idx];
      const int expected = dist[c.row * spec.cols() + c.col];
      const Trajectory traj = rollout(model.mdp, vi.policy, 5ull, model.start_states[idx]);
      CHECK(static_cast<int>(traj.length()) == expected);
      CHECK(model.mdp.next_state[traj.states.back()][traj.actions.back()] == model.goal_state);
    }
  }
  SUBCASE("unreachable goal is rejected") {
    FourRoomsSpec walled = spec;
    // Box the goal in.
    const int r = walled.goal_cell.row, c = walled.goal_cell.col;
    for (int dr = -1; dr <= 1; ++dr)
      for (int dc = -1; dc <= 1; ++dc) {
        if (dr == 0 && dc == 0) continue;
        const int rr = r + dr, cc = c + dc;
        if (rr >= 0 && rr < walled.rows() && cc >= 0 && cc < walled.cols() &&
            walled.grid[rr][cc] == '.')
          walled.grid[rr][cc] = '#';
      }
    CHECK_THROWS_AS(build_four_rooms(walled), std::invalid_argument);
  }
  SUBCASE("start on a wall is rejected") {
    FourRoomsSpec bad = spec;
    bad.start_cells[0] = Cell{5, 0};  // wall cell
    CHECK_THROWS_AS(build_four_rooms(bad), std::invalid_argument);
  }
}

TEST_CASE("mdp and policy json round trips") {
  const FourRoomsModel model = build_four_rooms(FourRoomsSpec::standard());
  const std::string dir = std::filesystem::temp_directory_path() / "ilid_mdp_json";
  std::filesystem::create_directories(dir);

  save_mdp(model.mdp, dir + "/mdp.json");
  const TabularMdp loaded = load_mdp(dir + "/mdp.json");
  CHECK(loaded.next_state == model.mdp.next_state);
  CHECK(loaded.reward == model.mdp.reward);
  CHECK(loaded.initial_dist == model.mdp.initial_dist);
  CHECK(loaded.terminal_states == model.mdp.terminal_states);

  const auto vi = value_iteration(model.mdp);
  save_policy(vi.policy, dir + "/policy.json");
  CHECK(load_policy(dir + "/policy.json").probs == vi.policy.probs);

  const nlohmann::json spec_json = four_rooms_spec_to_json(model.spec);
  const FourRoomsSpec round = four_rooms_spec_from_json(spec_json);
  CHECK(round.grid == model.spec.grid);
  CHECK(round.goal_cell == model.spec.goal_cell);
  CHECK(round.start_cells == model.spec.start_cells);
}

TEST_CASE("loader validates invariants") {
  const FourRoomsModel model = build_four_rooms(FourRoomsSpec::standard());
  nlohmann::json j = mdp_to_json(model.mdp);
  j["reward"][0][0] = 2.0;
  CHECK_THROWS_AS(mdp_from_json(j), std::invalid_argument);
}
