#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "doctest.h"
#include "ilid/dataset.hpp"
#include "ilid/four_rooms.hpp"

using namespace ilid;

namespace {

std::string temp_file(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "ilid_dataset_tests";
  std::filesystem::create_directories(dir);
  return (dir / name).string();
}

}  // namespace

TEST_CASE("expert data generation") {
  const FourRoomsModel model = build_four_rooms(FourRoomsSpec::standard());
  const TabularPolicy expert = value_iteration(model.mdp).policy;

  SUBCASE("one trajectory from the right start reaches the goal") {
    const Dataset ds = generate_expert_data(model.mdp, expert, 1, 11, model.start_states[1]);
    REQUIRE(ds.size() == 1);
    const Trajectory& traj = ds.trajectories[0];
    CHECK(traj.states.front() == model.start_states[1]);
    CHECK(model.mdp.next_state[traj.states.back()][traj.actions.back()] == model.goal_state);
  }
  SUBCASE("fixed seed is bit-identical on rerun") {
    const Dataset a = generate_expert_data(model.mdp, expert, 3, 21);
    const Dataset b = generate_expert_data(model.mdp, expert, 3, 21);
    CHECK(a == b);
    const Dataset c = generate_expert_data(model.mdp, expert, 3, 22);
    CHECK(a.trajectories != c.trajectories);
  }
  SUBCASE("transitions satisfy the dynamics") {
    const Dataset ds = generate_expert_data(model.mdp, expert, 5, 31);
    CHECK_NOTHROW(validate_against(ds, model.mdp));
  }
  SUBCASE("zero trajectories rejected") {
    CHECK_THROWS_AS(generate_expert_data(model.mdp, expert, 0, 1), std::invalid_argument);
    CHECK_THROWS_AS(generate_imperfect_data(model.mdp, expert, 1.0, 0, 1), std::invalid_argument);
  }
  SUBCASE("stochastic policy rejected as expert") {
    CHECK_THROWS_AS(
        generate_expert_data(model.mdp, TabularPolicy::uniform(model.mdp.num_states, 4), 1, 1),
        std::invalid_argument);
  }
}

TEST_CASE("epsilon mixture behavior") {
  const FourRoomsModel model = build_four_rooms(FourRoomsSpec::standard());
  const TabularPolicy expert = value_iteration(model.mdp).policy;

  SUBCASE("epsilon zero reproduces expert trajectories") {
    const Dataset ds = generate_imperfect_data(model.mdp, expert, 0.0, 20, 5);
    for (const Trajectory& traj : ds.trajectories) {
      const Trajectory reference = rollout(model.mdp, expert, 1ull, traj.states.front());
      CHECK(traj == reference);
    }
  }
  SUBCASE("epsilon one approaches uniform action frequencies") {
    const Dataset ds = generate_imperfect_data(model.mdp, expert, 1.0, 500, 5);
    const CountTable ct = empirical_marginals(ds, model.mdp.num_states, 4);
    int checked = 0;
    for (int s = 0; s < model.mdp.num_states; ++s) {
      if (ct.state_count(s) < 400) continue;
      ++checked;
      for (int a = 0; a < 4; ++a) {
        const double freq =
            static_cast<double>(ct.pair_count(s, a)) / static_cast<double>(ct.state_count(s));
        CHECK(std::abs(freq - 0.25) < 0.05);
      }
    }
    CHECK(checked > 0);
  }
  SUBCASE("epsilon half widens state coverage beyond one expert trajectory") {
    const Dataset expert_ds = generate_expert_data(model.mdp, expert, 1, 7, model.start_states[1]);
    const Dataset mixed = generate_imperfect_data(model.mdp, expert, 0.5, 500, 7);
    std::set<int> expert_states, mixed_states;
    for (const auto& t : expert_ds.trajectories)
      expert_states.insert(t.states.begin(), t.states.end());
    for (const auto& t : mixed.trajectories) mixed_states.insert(t.states.begin(), t.states.end());
    CHECK(mixed_states.size() > expert_states.size());
  }
  SUBCASE("epsilon outside [0,1] rejected") {
    CHECK_THROWS_AS(make_epsilon_mix(expert, 1.5), std::invalid_argument);
  }
}

TEST_CASE("union dataset semantics") {
  const FourRoomsModel model = build_four_rooms(FourRoomsSpec::standard());
  const TabularPolicy expert = value_iteration(model.mdp).policy;
  const Dataset e = generate_expert_data(model.mdp, expert, 1, 3, model.start_states[1]);
  const Dataset b = generate_imperfect_data(model.mdp, expert, 1.0, 1000, 3);

  SUBCASE("sizes add up") {
    const Dataset u = union_dataset(e, b);
    CHECK(u.size() == 1001);
    CHECK(u.role == Role::union_data);
    CHECK(u.num_transitions() == e.num_transitions() + b.num_transitions());
  }
  SUBCASE("role mismatch rejected") {
    CHECK_THROWS_AS(union_dataset(b, b), std::invalid_argument);
    CHECK_THROWS_AS(union_dataset(e, e), std::invalid_argument);
  }
  SUBCASE("empty imperfect side leaves expert marginals unchanged") {
    Dataset empty;
    empty.role = Role::imperfect;
    const Dataset u = union_dataset(e, empty);
    const CountTable ue = empirical_marginals(u, model.mdp.num_states, 4);
    const CountTable ee = empirical_marginals(e, model.mdp.num_states, 4);
    CHECK(ue.state_counts == ee.state_counts);
    CHECK(ue.total == ee.total);
  }
  SUBCASE("duplicated trajectory counts twice") {
    Dataset dup;
    dup.role = Role::expert;
    dup.trajectories = {e.trajectories[0], e.trajectories[0]};
    const CountTable ct = empirical_marginals(dup, model.mdp.num_states, 4);
    const CountTable single = empirical_marginals(e, model.mdp.num_states, 4);
    CHECK(ct.total == 2 * single.total);
    CHECK(ct.state_count(e.trajectories[0].states[0]) ==
          2 * single.state_count(e.trajectories[0].states[0]));
  }
  SUBCASE("union marginals are the count-weighted mixture of the parts") {
    const Dataset u = union_dataset(e, b);
    const int S = model.mdp.num_states;
    const CountTable ce = empirical_marginals(e, S, 4);
    const CountTable cb = empirical_marginals(b, S, 4);
    const CountTable cu = empirical_marginals(u, S, 4);
    CHECK(cu.total == ce.total + cb.total);
    for (int s = 0; s < S; ++s) {
      CHECK(cu.state_count(s) == ce.state_count(s) + cb.state_count(s));
      for (int a = 0; a < 4; ++a)
        CHECK(cu.pair_count(s, a) == ce.pair_count(s, a) + cb.pair_count(s, a));
    }
  }
}

TEST_CASE("empirical marginals") {
  SUBCASE("four distinct states in one trajectory") {
    Dataset ds;
    ds.role = Role::expert;
    ds.trajectories = {Trajectory{{0, 1, 2, 3}, {0, 0, 0, 0}}};
    const CountTable ct = empirical_marginals(ds, 5, 2);
    for (int s = 0; s < 4; ++s) CHECK(ct.state_marginal(s) == doctest::Approx(0.25));
    CHECK(ct.state_marginal(4) == 0.0);  // absent state
  }
  SUBCASE("hand-counted ten-transition dataset") {
    Dataset ds;
    ds.role = Role::imperfect;
    ds.trajectories = {Trajectory{{0, 0, 1, 2, 1}, {0, 1, 1, 0, 1}},
                       Trajectory{{2, 2, 0, 1, 1}, {0, 0, 1, 1, 1}}};
    const CountTable ct = empirical_marginals(ds, 3, 2);
    CHECK(ct.total == 10);
    CHECK(ct.state_count(0) == 3);
    CHECK(ct.state_count(1) == 4);
    CHECK(ct.state_count(2) == 3);
    CHECK(ct.pair_count(0, 0) == 1);
    CHECK(ct.pair_count(0, 1) == 2);
    CHECK(ct.pair_count(1, 1) == 4);
    CHECK(ct.pair_count(2, 0) == 3);
    CHECK(ct.state_marginal(1) == doctest::Approx(0.4));
  }
  SUBCASE("empty dataset rejected") {
    Dataset ds;
    CHECK_THROWS_AS(empirical_marginals(ds, 3, 2), std::invalid_argument);
  }
}

TEST_CASE("jsonl persistence") {
  const FourRoomsModel model = build_four_rooms(FourRoomsSpec::standard());
  const TabularPolicy expert = value_iteration(model.mdp).policy;

  SUBCASE("round trip is identity on random datasets") {
    for (int it = 0; it < 5; ++it) {
      const Dataset ds =
          generate_imperfect_data(model.mdp, expert, 0.7, 20, 100 + static_cast<std::uint64_t>(it));
      const std::string path = temp_file("roundtrip.jsonl");
      save_dataset(ds, path);
      const Dataset back = load_dataset(path, Role::imperfect);
      CHECK(back == ds);
    }
  }
  SUBCASE("truncated line reported with its line number") {
    const std::string path = temp_file("broken.jsonl");
    std::ofstream out(path);
    out << R"({"states":[1,2],"actions":[0,1]})" << "\n";
    out << R"({"states":[1,2],"act)" << "\n";
    out.close();
    try {
      load_dataset(path, Role::expert);
      FAIL("expected a parse error");
    } catch (const std::runtime_error& e) {
      CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
  }
  SUBCASE("length mismatch rejected") {
    const std::string path = temp_file("mismatch.jsonl");
    std::ofstream out(path);
    out << R"({"states":[1,2,3],"actions":[0,1]})" << "\n";
    out.close();
    CHECK_THROWS_AS(load_dataset(path, Role::expert), std::runtime_error);
  }
  SUBCASE("empty file loads as an empty dataset") {
    const std::string path = temp_file("empty.jsonl");
    std::ofstream(path).close();
    const Dataset ds = load_dataset(path, Role::expert);
    CHECK(ds.trajectories.empty());
  }
  SUBCASE("hash is stable and content-sensitive") {
    const Dataset a = generate_expert_data(model.mdp, expert, 2, 9);
    const Dataset b = generate_expert_data(model.mdp, expert, 2, 9);
    const Dataset c = generate_expert_data(model.mdp, expert, 2, 10);
    CHECK(dataset_hash(a) == dataset_hash(b));
    CHECK(dataset_hash(a) != dataset_hash(c));
  }
}

TEST_CASE("role names round trip") {
  for (Role role : {Role::expert, Role::imperfect, Role::union_data, Role::supplementary})
    CHECK(role_from_name(role_name(role)) == role);
  CHECK_THROWS_AS(role_from_name("bogus"), std::invalid_argument);
}
