// Command-line front end: dataset generation, selection, training, evaluation,
// the four-rooms snapshot, the bound suite, and the ablation sweep.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "ilid/harness.hpp"

namespace {

using namespace ilid;

ExperimentConfig load_base_config(const std::string& config_path) {
  ExperimentConfig cfg;
  if (const char* env_dir = std::getenv("ILID_OUT_DIR")) cfg.out_dir = env_dir;
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) throw std::runtime_error("cannot open config file " + config_path);
    nlohmann::json j;
    in >> j;
    experiment_config_update_from_json(cfg, j);
  }
  return cfg;
}

FourRoomsModel model_from_option(const std::string& mdp_path) {
  if (mdp_path.empty()) return build_four_rooms(FourRoomsSpec::standard());
  std::ifstream in(mdp_path);
  if (!in) throw std::runtime_error("cannot open " + mdp_path);
  nlohmann::json j;
  in >> j;
  return build_four_rooms(four_rooms_spec_from_json(j));
}

std::optional<int> start_from_name(const FourRoomsModel& model, const std::string& name) {
  if (name == "left") return model.start_states.at(0);
  if (name == "right") return model.start_states.at(1);
  if (name == "mu") return std::nullopt;
  throw std::runtime_error("start must be left, right, or mu");
}

int print_rows(const std::vector<ResultRow>& rows) {
  bool failed = false;
  for (const ResultRow& r : rows) {
    if (!r.error.empty()) {
      failed = true;
      std::cout << r.scheme << " seed=" << r.seed << " FAILED: " << r.error << "\n";
      continue;
    }
    std::cout << r.scheme << " seed=" << r.seed << " return=" << r.return_mean
              << " success=" << r.success_rate << " score=" << r.normalized << "\n";
  }
  return failed ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Offline imitation laboratory on tabular four-rooms MDPs"};
  app.require_subcommand(1);

  std::string config_path;
  app.add_option("--config", config_path, "JSON config; explicit flags win on conflict")
      ->check(CLI::ExistingFile);

  // Shared flag storage; each subcommand registers the subset it uses.
  std::string out_dir, mdp_path, start_name = "mu", role = "imperfect";
  std::string scheme = "ilid", trainer = "closed", backend = "exact";
  std::string expert_path, imperfect_path, pairs_path, policy_path, out_path;
  int n = 1, episodes = 100, steps = 2000, trials = 200, num_mdps = 10;
  double epsilon = 1.0, sigma = 0.2;
  int rollback_k = 20;
  std::uint64_t seed = 1;
  std::vector<std::uint64_t> seeds;

  auto* gen = app.add_subcommand("gen-data", "Generate expert or imperfect rollouts");
  gen->add_option("--role", role, "expert | imperfect");
  gen->add_option("--n", n, "number of trajectories")->required();
  gen->add_option("--epsilon", epsilon, "uniform-action probability for imperfect data");
  gen->add_option("--seed", seed, "generator seed");
  gen->add_option("--start", start_name, "left | right | mu");
  gen->add_option("--mdp", mdp_path, "four-rooms layout JSON (default: built-in)");
  gen->add_option("--out", out_path, "output JSONL path")->required();

  auto* select = app.add_subcommand("select", "Identify expert states and roll back");
  select->add_option("--expert", expert_path)->required()->check(CLI::ExistingFile);
  select->add_option("--imperfect", imperfect_path)->required()->check(CLI::ExistingFile);
  select->add_option("--sigma", sigma, "expert-state threshold");
  select->add_option("--rollback-k", rollback_k, "rollback steps");
  select->add_option("--mdp", mdp_path, "four-rooms layout JSON");
  select->add_option("--out", out_path, "selected pairs CSV")->required();

  auto* train = app.add_subcommand("train", "Train a policy with a weighting scheme");
  train->add_option("--scheme", scheme, "bce | bcu | ilid | dwbc | iswbc");
  train->add_option("--expert", expert_path)->required()->check(CLI::ExistingFile);
  train->add_option("--imperfect", imperfect_path)->check(CLI::ExistingFile);
  train->add_option("--pairs", pairs_path, "selected pairs CSV (ilid)")->check(CLI::ExistingFile);
  train->add_option("--sigma", sigma);
  train->add_option("--trainer", trainer, "closed | gradient");
  train->add_option("--steps", steps, "gradient trainer steps");
  train->add_option("--seed", seed);
  train->add_option("--mdp", mdp_path, "four-rooms layout JSON");
  train->add_option("--out", out_path, "policy JSON")->required();

  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a saved policy");
  eval_cmd->add_option("--policy", policy_path)->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--episodes", episodes);
  eval_cmd->add_option("--seed", seed);
  eval_cmd->add_option("--start", start_name, "left | right | mu");
  eval_cmd->add_option("--mdp", mdp_path, "four-rooms layout JSON");

  auto* demo = app.add_subcommand("fourrooms-demo", "Data and policy snapshot CSVs");
  demo->add_option("--out-dir", out_dir, "output directory");
  demo->add_option("--seeds", seeds, "training seeds");
  demo->add_option("--episodes", episodes, "evaluation episodes per seed");
  demo->add_option("--backend", backend, "exact | trained");

  auto* bounds = app.add_subcommand("verify-bounds", "Suboptimality bound suite");
  bounds->add_option("--mdps", num_mdps, "number of random MDPs");
  bounds->add_option("--trials", trials, "dataset draws per grid cell");
  bounds->add_option("--seed", seed);
  bounds->add_option("--out", out_path, "bounds CSV")->required();

  auto* ablate = app.add_subcommand("ablate", "ILID ablation sweep");
  ablate->add_option("--out-dir", out_dir, "output directory");
  ablate->add_option("--seeds", seeds, "training seeds");
  ablate->add_option("--episodes", episodes, "evaluation episodes per seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      const FourRoomsModel model = model_from_option(mdp_path);
      const TabularPolicy expert_policy = value_iteration(model.mdp).policy;
      Dataset ds;
      if (role == "expert") {
        ds = generate_expert_data(model.mdp, expert_policy, n, seed,
                                  start_from_name(model, start_name));
      } else if (role == "imperfect") {
        ds = generate_imperfect_data(model.mdp, expert_policy, epsilon, n, seed);
      } else {
        throw std::runtime_error("gen-data role must be expert or imperfect");
      }
      save_dataset(ds, out_path);
      std::cout << "wrote " << ds.size() << " trajectories to " << out_path << "\n";
      return 0;
    }

    if (select->parsed()) {
      const FourRoomsModel model = model_from_option(mdp_path);
      const Dataset expert = load_dataset(expert_path, Role::expert);
      const Dataset imperfect = load_dataset(imperfect_path, Role::imperfect);
      const Dataset u = union_dataset(expert, imperfect);
      const int S = model.mdp.num_states, A = model.mdp.num_actions;
      const ExactDiscriminator d = exact_state_discriminator(empirical_marginals(expert, S, A),
                                                             empirical_marginals(u, S, A));
      SelectionConfig sel{sigma, rollback_k};
      const auto pairs = build_complementary_dataset(imperfect, d.state_score(), sel);
      save_pairs_csv(pairs, out_path);
      const SelectionReport report = selection_report(pairs, imperfect);
      std::cout << "anchors=" << report.anchors << " pairs=" << report.pairs
                << " coverage=" << report.coverage << "\n";
      return 0;
    }

    if (train->parsed()) {
      const FourRoomsModel model = model_from_option(mdp_path);
      const int S = model.mdp.num_states, A = model.mdp.num_actions;
      const Dataset expert = load_dataset(expert_path, Role::expert);
      Dataset imperfect;
      imperfect.role = Role::imperfect;
      if (!imperfect_path.empty()) imperfect = load_dataset(imperfect_path, Role::imperfect);
      SchemeConfig sc;
      sc.scheme = scheme_from_name(scheme);
      PolicyTrainInputs inputs;
      inputs.expert = &expert;
      inputs.imperfect = imperfect.trajectories.empty() ? nullptr : &imperfect;
      inputs.sigma = sigma;
      std::vector<SelectedPair> pairs;
      if (!pairs_path.empty()) {
        pairs = load_pairs_csv(pairs_path);
        inputs.selected = &pairs;
      }
      CountTable expert_ct = empirical_marginals(expert, S, A);
      CountTable union_ct, imperfect_ct;
      if (inputs.imperfect != nullptr) {
        const Dataset u = union_dataset(expert, imperfect);
        union_ct = empirical_marginals(u, S, A);
        imperfect_ct = empirical_marginals(imperfect, S, A);
        const ExactDiscriminator d_state = exact_state_discriminator(expert_ct, union_ct);
        const ExactDiscriminator d_pair = exact_state_action_discriminator(expert_ct, union_ct);
        inputs.d_state = d_state.state_score();
        inputs.alpha = [d_pair](int s, int a) { return alpha_weight(d_pair, s, a); };
        inputs.dwbc_d = dwbc_exact_score(expert_ct, imperfect_ct, sc.dwbc_eta);
      }
      TrainConfig tc;
      tc.steps = steps;
      tc.seed = seed;
      const TabularPolicy policy =
          train_policy(sc, inputs, S, A,
                       trainer == "gradient" ? TrainerKind::gradient : TrainerKind::closed_form, tc);
      save_policy(policy, out_path);
      std::cout << "wrote policy to " << out_path << "\n";
      return 0;
    }

    if (eval_cmd->parsed()) {
      const FourRoomsModel model = model_from_option(mdp_path);
      const TabularPolicy policy = load_policy(policy_path);
      const EvalResult r = evaluate(model.mdp, policy, episodes, seed,
                                    start_from_name(model, start_name));
      std::cout << "return_mean=" << r.mean << " return_sd=" << r.sd
                << " success_rate=" << r.success << "\n";
      return 0;
    }

    if (demo->parsed() || ablate->parsed()) {
      ExperimentConfig cfg = load_base_config(config_path);
      if (!out_dir.empty()) cfg.out_dir = out_dir;
      if (!seeds.empty()) cfg.seeds = seeds;
      if (demo->count("--episodes") || ablate->count("--episodes")) cfg.eval_episodes = episodes;
      if (demo->parsed()) {
        if (backend == "trained") cfg.backend = DiscBackend::trained;
        cfg.schemes = {SchemeConfig{Scheme::ilid}, SchemeConfig{Scheme::dwbc},
                       SchemeConfig{Scheme::iswbc}, SchemeConfig{Scheme::bcu},
                       SchemeConfig{Scheme::bce}};
        return print_rows(run_fourrooms_demo(cfg));
      }
      cfg.schemes.clear();
      SchemeConfig base{Scheme::ilid};
      cfg.schemes.push_back(base);
      SchemeConfig no_alpha = base;
      no_alpha.disable_alpha = true;
      no_alpha.label = "ilid_no_alpha";
      SchemeConfig no_beta = base;
      no_beta.disable_beta = true;
      no_beta.label = "ilid_no_beta";
      SchemeConfig full_db = base;
      full_db.use_full_db_as_ds = true;
      full_db.label = "ilid_full_db";
      cfg.schemes.push_back(no_alpha);
      cfg.schemes.push_back(no_beta);
      cfg.schemes.push_back(full_db);
      const std::vector<ResultRow> rows = run_ilid_pipeline(cfg);
      write_results_csv(rows, cfg.out_dir + "/ablation.csv");
      return print_rows(rows);
    }

    if (bounds->parsed()) {
      BoundSuiteConfig cfg;
      cfg.num_mdps = num_mdps;
      cfg.trials = trials;
      cfg.seed = seed;
      const auto rows = run_bound_suite(cfg);
      write_bounds_csv(rows, out_path);
      bool all_hold = true;
      for (const auto& row : rows)
        all_hold = all_hold && row.report.theorem1_holds && row.report.corollary1_holds;
      std::cout << rows.size() << " cells, " << (all_hold ? "all bounds hold" : "VIOLATION FOUND")
                << "; wrote " << out_path << "\n";
      return all_hold ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
