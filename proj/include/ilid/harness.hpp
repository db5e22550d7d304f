#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ilid/four_rooms.hpp"
#include "ilid/selection.hpp"
#include "ilid/theory.hpp"
#include "ilid/weighted_bc.hpp"

namespace ilid {

enum class DiscBackend { exact, trained };

struct ExperimentConfig {
  FourRoomsSpec env = FourRoomsSpec::standard();
  int n_e = 1;
  int n_b = 500;
  double epsilon = 1.0;              // imperfect behavior: epsilon-mix toward uniform
  bool expert_right_start_only = true;
  SelectionConfig selection;
  std::vector<SchemeConfig> schemes = {SchemeConfig{.scheme = Scheme::ilid},
                                       SchemeConfig{.scheme = Scheme::bcu},
                                       SchemeConfig{.scheme = Scheme::iswbc}};
  TrainConfig train;
  TrainerKind trainer = TrainerKind::closed_form;
  DiscBackend backend = DiscBackend::exact;
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  int eval_episodes = 100;  // the short reference protocol uses 10
  std::string eval_start = "left";  // left | right | mu
  std::string out_dir = "out";

  void validate() const;
};

nlohmann::json experiment_config_to_json(const ExperimentConfig& cfg);
// Missing keys keep their defaults, so partial config files are fine.
void experiment_config_update_from_json(ExperimentConfig& cfg, const nlohmann::json& j);

struct EvalResult {
  double mean = 0.0;
  double sd = 0.0;
  double success = 0.0;
};

// Monte Carlo rollouts; success means reaching an absorbing state within the
// horizon (always 0 for MDPs without terminal states).
EvalResult evaluate(const TabularMdp& mdp, const TabularPolicy& policy, int episodes,
                    std::uint64_t seed, std::optional<int> start = std::nullopt);

double episode_return(const TabularMdp& mdp, const Trajectory& traj);
bool episode_success(const TabularMdp& mdp, const Trajectory& traj);

struct ResultRow {
  std::string scheme;
  std::uint64_t seed = 0;
  double return_mean = 0.0;
  double return_sd = 0.0;
  double success_rate = 0.0;
  double normalized = 0.0;
  double random_ref = 0.0;
  double expert_ref = 0.0;
  std::string expert_hash;
  std::string imperfect_hash;
  double wall_seconds = 0.0;  // emitted to the timing file only
  std::string error;          // empty on success
};

// Shared per-seed artifacts: datasets, discriminator scores, selected pairs.
struct SeedBundle {
  std::uint64_t seed = 0;
  Dataset expert;
  Dataset imperfect;
  Dataset union_data;
  CountTable expert_state_ct, union_state_ct;
  CountTable expert_pair_ct, imperfect_pair_ct, union_pair_ct;
  StateScore d_state;
  PairScore d_pair;
  std::function<double(int, int)> alpha;
  PairScore dwbc_d;
  std::vector<SelectedPair> selected;
  std::string expert_hash, imperfect_hash;
};

SeedBundle build_seed_bundle(const ExperimentConfig& cfg, const FourRoomsModel& model,
                             const TabularPolicy& expert_policy, std::uint64_t seed,
                             double dwbc_eta);

// Runs the full pipeline for every (scheme, seed) job: fit discriminators,
// select, train, evaluate, and persist datasets, policies, and result rows.
std::vector<ResultRow> run_ilid_pipeline(const ExperimentConfig& cfg);

// results.csv carries only deterministic fields; wall-clock times go to
// timings.csv so reruns with equal seeds are byte-identical.
void write_results_csv(const std::vector<ResultRow>& rows, const std::string& path);
void write_timings_csv(const std::vector<ResultRow>& rows, const std::string& path);

struct BoundSuiteConfig {
  int num_mdps = 10;
  std::vector<int> ne_grid = {1, 2, 4, 8};
  std::vector<int> ns_grid = {0, 4, 16};
  int trials = 200;
  std::uint64_t seed = 7;
  RandomMdpOptions mdp_opts;
};

struct BoundSuiteRow {
  int mdp_index = 0;
  BoundReport report;
};

std::vector<BoundSuiteRow> run_bound_suite(const BoundSuiteConfig& cfg);
void write_bounds_csv(const std::vector<BoundSuiteRow>& rows, const std::string& path);
std::vector<BoundSuiteRow> load_bounds_csv(const std::string& path);

// Emits the navigation snapshot: per-cell visitation CSVs for the expert data,
// the imperfect data, and rollouts of each trained policy from the left start,
// plus argmax-arrow tables for external plotting.
std::vector<ResultRow> run_fourrooms_demo(const ExperimentConfig& cfg);

}  // namespace ilid
