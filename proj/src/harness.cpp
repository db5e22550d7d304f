#include "ilid/harness.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <sstream>
#include <stdexcept>

namespace ilid {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double now_seconds() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

std::optional<int> eval_start_state(const ExperimentConfig& cfg, const FourRoomsModel& model) {
  if (cfg.eval_start == "left") return model.start_states.at(0);
  if (cfg.eval_start == "right") return model.start_states.at(1);
  if (cfg.eval_start == "mu") return std::nullopt;
  throw std::invalid_argument("eval_start must be left, right, or mu");
}

}  // namespace

void ExperimentConfig::validate() const {
  env.validate();
  selection.validate();
  train.validate();
  if (n_e <= 0 || n_b <= 0) throw std::invalid_argument("config: dataset sizes must be positive");
  if (epsilon < 0.0 || epsilon > 1.0) throw std::invalid_argument("config: epsilon outside [0, 1]");
  if (seeds.empty()) throw std::invalid_argument("config: at least one seed required");
  if (eval_episodes < 1) throw std::invalid_argument("config: eval_episodes must be >= 1");
  if (schemes.empty()) throw std::invalid_argument("config: no schemes selected");
  for (const auto& s : schemes) s.validate();
}

nlohmann::json experiment_config_to_json(const ExperimentConfig& cfg) {
  nlohmann::json j;
  j["env"] = four_rooms_spec_to_json(cfg.env);
  j["n_e"] = cfg.n_e;
  j["n_b"] = cfg.n_b;
  j["epsilon"] = cfg.epsilon;
  j["expert_right_start_only"] = cfg.expert_right_start_only;
  j["sigma"] = cfg.selection.sigma;
  j["rollback_k"] = cfg.selection.rollback_k;
  std::vector<std::string> names;
  for (const auto& s : cfg.schemes) names.push_back(scheme_name(s.scheme));
  j["schemes"] = names;
  j["learning_rate"] = cfg.train.learning_rate;
  j["batch_size"] = cfg.train.batch_size;
  j["steps"] = cfg.train.steps;
  j["trainer"] = cfg.trainer == TrainerKind::closed_form ? "closed" : "gradient";
  j["backend"] = cfg.backend == DiscBackend::exact ? "exact" : "trained";
  j["seeds"] = cfg.seeds;
  j["eval_episodes"] = cfg.eval_episodes;
  j["eval_start"] = cfg.eval_start;
  j["out_dir"] = cfg.out_dir;
  return j;
}

void experiment_config_update_from_json(ExperimentConfig& cfg, const nlohmann::json& j) {
  if (j.contains("env")) cfg.env = four_rooms_spec_from_json(j.at("env"));
  if (j.contains("n_e")) cfg.n_e = j.at("n_e").get<int>();
  if (j.contains("n_b")) cfg.n_b = j.at("n_b").get<int>();
  if (j.contains("epsilon")) cfg.epsilon = j.at("epsilon").get<double>();
  if (j.contains("expert_right_start_only"))
    cfg.expert_right_start_only = j.at("expert_right_start_only").get<bool>();
  if (j.contains("sigma")) cfg.selection.sigma = j.at("sigma").get<double>();
  if (j.contains("rollback_k")) cfg.selection.rollback_k = j.at("rollback_k").get<int>();
  if (j.contains("schemes")) {
    cfg.schemes.clear();
    for (const auto& name : j.at("schemes")) {
      SchemeConfig sc;
      sc.scheme = scheme_from_name(name.get<std::string>());
      cfg.schemes.push_back(sc);
    }
  }
  if (j.contains("learning_rate")) cfg.train.learning_rate = j.at("learning_rate").get<double>();
  if (j.contains("batch_size")) cfg.train.batch_size = j.at("batch_size").get<int>();
  if (j.contains("steps")) cfg.train.steps = j.at("steps").get<int>();
  if (j.contains("trainer"))
    cfg.trainer = j.at("trainer").get<std::string>() == "gradient" ? TrainerKind::gradient
                                                                   : TrainerKind::closed_form;
  if (j.contains("backend"))
    cfg.backend = j.at("backend").get<std::string>() == "trained" ? DiscBackend::trained
                                                                  : DiscBackend::exact;
  if (j.contains("seeds")) cfg.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  if (j.contains("eval_episodes")) cfg.eval_episodes = j.at("eval_episodes").get<int>();
  if (j.contains("eval_start")) cfg.eval_start = j.at("eval_start").get<std::string>();
  if (j.contains("out_dir")) cfg.out_dir = j.at("out_dir").get<std::string>();
}

double episode_return(const TabularMdp& mdp, const Trajectory& traj) {
  double total = 0.0;
  for (std::size_t t = 0; t < traj.length(); ++t)
    total += mdp.reward[traj.states[t]][traj.actions[t]];
  return total;
}

bool episode_success(const TabularMdp& mdp, const Trajectory& traj) {
  for (std::size_t t = 0; t < traj.length(); ++t)
    if (mdp.is_terminal(mdp.next_state[traj.states[t]][traj.actions[t]])) return true;
  return false;
}

EvalResult evaluate(const TabularMdp& mdp, const TabularPolicy& policy, int episodes,
                    std::uint64_t seed, std::optional<int> start) {
  if (episodes < 1) throw std::invalid_argument("evaluate: episodes must be >= 1");
  Rng rng(seed);
  double sum = 0.0, sum_sq = 0.0;
  int successes = 0;
  for (int i = 0; i < episodes; ++i) {
    Rng child = rng.derive("eval-episode", static_cast<std::uint64_t>(i));
    const Trajectory traj = rollout(mdp, policy, child, start);
    const double ret = episode_return(mdp, traj);
    sum += ret;
    sum_sq += ret * ret;
    if (episode_success(mdp, traj)) ++successes;
  }
  EvalResult out;
  out.mean = sum / episodes;
  const double var = std::max(0.0, sum_sq / episodes - out.mean * out.mean);
  out.sd = std::sqrt(var);
  out.success = static_cast<double>(successes) / episodes;
  return out;
}

SeedBundle build_seed_bundle(const ExperimentConfig& cfg, const FourRoomsModel& model,
                             const TabularPolicy& expert_policy, std::uint64_t seed,
                             double dwbc_eta) {
  const TabularMdp& mdp = model.mdp;
  SeedBundle b;
  b.seed = seed;
  std::optional<int> expert_start;
  if (cfg.expert_right_start_only) expert_start = model.start_states.at(1);
  b.expert = generate_expert_data(mdp, expert_policy, cfg.n_e,
                                  mix_seed(seed, "pipeline-expert"), expert_start);
  b.imperfect = generate_imperfect_data(mdp, expert_policy, cfg.epsilon, cfg.n_b,
                                        mix_seed(seed, "pipeline-imperfect"));
  b.union_data = union_dataset(b.expert, b.imperfect);
  b.expert_hash = dataset_hash(b.expert);
  b.imperfect_hash = dataset_hash(b.imperfect);

  const int S = mdp.num_states, A = mdp.num_actions;
  b.expert_state_ct = empirical_marginals(b.expert, S, A);
  b.union_state_ct = empirical_marginals(b.union_data, S, A);
  b.expert_pair_ct = b.expert_state_ct;
  b.union_pair_ct = b.union_state_ct;
  b.imperfect_pair_ct = empirical_marginals(b.imperfect, S, A);

  if (cfg.backend == DiscBackend::exact) {
    const ExactDiscriminator d_state = exact_state_discriminator(b.expert_state_ct, b.union_state_ct);
    const ExactDiscriminator d_pair =
        exact_state_action_discriminator(b.expert_pair_ct, b.union_pair_ct);
    b.d_state = d_state.state_score();
    b.d_pair = d_pair.pair_score();
    b.alpha = [d_pair](int s, int a) { return alpha_weight(d_pair, s, a); };
    b.dwbc_d = dwbc_exact_score(b.expert_pair_ct, b.imperfect_pair_ct, dwbc_eta);
  } else {
    TrainConfig tc = cfg.train;
    tc.seed = mix_seed(seed, "disc-state");
    const TrainedDiscriminator d_state = fit_state_discriminator(b.expert, b.union_data, S, A, tc);
    tc.seed = mix_seed(seed, "disc-pair");
    const TrainedDiscriminator d_pair =
        fit_state_action_discriminator(b.expert, b.union_data, S, A, tc);
    tc.seed = mix_seed(seed, "disc-dwbc");
    const TrainedDiscriminator d_dwbc =
        fit_dwbc_discriminator(b.expert, b.imperfect, S, A, dwbc_eta, tc);
    b.d_state = d_state.state_score();
    PairScore pair_score = d_pair.pair_score();
    b.d_pair = pair_score;
    b.alpha = [pair_score](int s, int a) { return alpha_weight(pair_score, s, a); };
    b.dwbc_d = d_dwbc.pair_score();
  }

  b.selected = build_complementary_dataset(b.imperfect, b.d_state, cfg.selection);
  return b;
}

namespace {

ResultRow run_job(const ExperimentConfig& cfg, const FourRoomsModel& model,
                  const SeedBundle& bundle, const SchemeConfig& scheme, double random_ref,
                  double expert_ref, std::optional<int> start,
                  std::map<std::string, TabularPolicy>* policies_out) {
  ResultRow row;
  row.scheme = scheme.name();
  row.seed = bundle.seed;
  row.random_ref = random_ref;
  row.expert_ref = expert_ref;
  row.expert_hash = bundle.expert_hash;
  row.imperfect_hash = bundle.imperfect_hash;
  const double t0 = now_seconds();
  try {
    PolicyTrainInputs inputs;
    inputs.expert = &bundle.expert;
    inputs.imperfect = &bundle.imperfect;
    inputs.selected = &bundle.selected;
    inputs.alpha = bundle.alpha;
    inputs.d_state = bundle.d_state;
    inputs.dwbc_d = bundle.dwbc_d;
    inputs.sigma = cfg.selection.sigma;
    TrainConfig tc = cfg.train;
    tc.seed = mix_seed(bundle.seed, "policy-" + row.scheme);
    const TabularPolicy policy = train_policy(scheme, inputs, model.mdp.num_states,
                                              model.mdp.num_actions, cfg.trainer, tc);
    const EvalResult eval_result =
        evaluate(model.mdp, policy, cfg.eval_episodes,
                 mix_seed(bundle.seed, "eval-" + row.scheme), start);
    row.return_mean = eval_result.mean;
    row.return_sd = eval_result.sd;
    row.success_rate = eval_result.success;
    row.normalized = normalized_score(eval_result.mean, random_ref, expert_ref);
    if (policies_out != nullptr) (*policies_out)[row.scheme] = policy;
  } catch (const std::exception& e) {
    row.error = e.what();
    row.return_mean = row.return_sd = row.success_rate = row.normalized = 0.0;
  }
  row.wall_seconds = now_seconds() - t0;
  return row;
}

void persist_bundle(const ExperimentConfig& cfg, const SeedBundle& bundle) {
  namespace fs = std::filesystem;
  fs::create_directories(cfg.out_dir);
  const std::string tag = "_seed" + std::to_string(bundle.seed);
  save_dataset(bundle.expert, cfg.out_dir + "/expert" + tag + ".jsonl");
  save_dataset(bundle.imperfect, cfg.out_dir + "/imperfect" + tag + ".jsonl");
  save_pairs_csv(bundle.selected, cfg.out_dir + "/selected" + tag + ".csv");
}

}  // namespace

std::vector<ResultRow> run_ilid_pipeline(const ExperimentConfig& cfg) {
  cfg.validate();
  const FourRoomsModel model = build_four_rooms(cfg.env);
  const TabularPolicy expert_policy = value_iteration(model.mdp).policy;
  const std::optional<int> start = eval_start_state(cfg, model);
  const double random_ref = evaluate_policy_exact(
      model.mdp, TabularPolicy::uniform(model.mdp.num_states, model.mdp.num_actions), start);
  const double expert_ref = evaluate_policy_exact(model.mdp, expert_policy, start);

  double dwbc_eta = 0.5;
  for (const auto& s : cfg.schemes)
    if (s.scheme == Scheme::dwbc) dwbc_eta = s.dwbc_eta;

  std::vector<SeedBundle> bundles;
  bundles.reserve(cfg.seeds.size());
  for (std::uint64_t seed : cfg.seeds) {
    bundles.push_back(build_seed_bundle(cfg, model, expert_policy, seed, dwbc_eta));
    persist_bundle(cfg, bundles.back());
  }

  // Independent (scheme, seed) jobs; shared bundles are read-only by now.
  std::vector<std::future<ResultRow>> futures;
  std::vector<std::map<std::string, TabularPolicy>> policies(bundles.size());
  for (std::size_t bi = 0; bi < bundles.size(); ++bi) {
    for (const SchemeConfig& scheme : cfg.schemes) {
      futures.push_back(std::async(std::launch::async, run_job, std::cref(cfg), std::cref(model),
                                   std::cref(bundles[bi]), scheme, random_ref, expert_ref, start,
                                   &policies[bi]));
    }
  }
  std::vector<ResultRow> rows;
  rows.reserve(futures.size());
  for (auto& f : futures) rows.push_back(f.get());

  for (std::size_t bi = 0; bi < bundles.size(); ++bi)
    for (const auto& [name, policy] : policies[bi])
      save_policy(policy, cfg.out_dir + "/policy_" + name + "_seed" +
                              std::to_string(bundles[bi].seed) + ".json");
  write_results_csv(rows, cfg.out_dir + "/results.csv");
  write_timings_csv(rows, cfg.out_dir + "/timings.csv");
  return rows;
}

void write_results_csv(const std::vector<ResultRow>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_results_csv: cannot open " + path);
  out << "scheme,seed,return_mean,return_sd,success_rate,normalized_score,random_ref,expert_ref,"
         "expert_hash,imperfect_hash,error\n";
  for (const ResultRow& r : rows) {
    out << r.scheme << "," << r.seed << "," << fmt(r.return_mean) << "," << fmt(r.return_sd)
        << "," << fmt(r.success_rate) << "," << fmt(r.normalized) << "," << fmt(r.random_ref)
        << "," << fmt(r.expert_ref) << "," << r.expert_hash << "," << r.imperfect_hash << ","
        << r.error << "\n";
  }
}

void write_timings_csv(const std::vector<ResultRow>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_timings_csv: cannot open " + path);
  out << "scheme,seed,seconds\n";
  for (const ResultRow& r : rows)
    out << r.scheme << "," << r.seed << "," << fmt(r.wall_seconds) << "\n";
}

std::vector<BoundSuiteRow> run_bound_suite(const BoundSuiteConfig& cfg) {
  Rng rng(cfg.seed);
  std::vector<BoundSuiteRow> rows;
  for (int m = 0; m < cfg.num_mdps; ++m) {
    Rng mdp_rng = rng.derive("suite-mdp", static_cast<std::uint64_t>(m));
    const TabularMdp mdp = random_deterministic_mdp(mdp_rng, cfg.mdp_opts);
    for (int n_e : cfg.ne_grid) {
      for (int n_s : cfg.ns_grid) {
        const std::uint64_t cell_seed =
            mix_seed(cfg.seed, "suite-cell", static_cast<std::uint64_t>(m * 10000 + n_e * 100 + n_s));
        BoundSuiteRow row;
        row.mdp_index = m;
        row.report = verify_bounds(mdp, n_e, n_s, cfg.trials, cell_seed);
        rows.push_back(row);
      }
    }
  }
  return rows;
}

void write_bounds_csv(const std::vector<BoundSuiteRow>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_bounds_csv: cannot open " + path);
  out << "mdp,n_e,n_s,gap,se,thm1_rhs,cor1_rhs,eps_o,eps_e,eps_s,delta,holds\n";
  for (const BoundSuiteRow& row : rows) {
    const BoundReport& r = row.report;
    const bool holds = r.theorem1_holds && r.corollary1_holds;
    out << row.mdp_index << "," << r.n_e << "," << r.n_s << "," << fmt(r.gap()) << ","
        << fmt(r.se_total) << "," << fmt(r.theorem1_rhs) << "," << fmt(r.corollary1_rhs) << ","
        << fmt(r.eps_o) << "," << fmt(r.eps_e) << "," << fmt(r.eps_s) << "," << fmt(r.delta)
        << "," << (holds ? 1 : 0) << "\n";
  }
}

std::vector<BoundSuiteRow> load_bounds_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_bounds_csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line) ||
      line != "mdp,n_e,n_s,gap,se,thm1_rhs,cor1_rhs,eps_o,eps_e,eps_s,delta,holds")
    throw std::runtime_error("load_bounds_csv: bad header in " + path);
  std::vector<BoundSuiteRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 12) throw std::runtime_error("load_bounds_csv: malformed row");
    BoundSuiteRow row;
    row.mdp_index = std::stoi(fields[0]);
    BoundReport& r = row.report;
    r.n_e = std::stoi(fields[1]);
    r.n_s = std::stoi(fields[2]);
    const double gap = std::stod(fields[3]);
    r.se_total = std::stod(fields[4]);
    r.theorem1_rhs = std::stod(fields[5]);
    r.corollary1_rhs = std::stod(fields[6]);
    r.eps_o = std::stod(fields[7]);
    r.eps_e = std::stod(fields[8]);
    r.eps_s = std::stod(fields[9]);
    r.delta = std::stod(fields[10]);
    r.theorem1_holds = r.corollary1_holds = fields[11] == "1";
    r.v_expert = gap;  // only the gap is recoverable from the row
    r.v_tilde_mean = 0.0;
    rows.push_back(row);
  }
  return rows;
}

namespace {

void write_grid_csv(const FourRoomsModel& model, const std::vector<double>& per_state,
                    const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "row,col,value\n";
  for (int s = 0; s < model.mdp.num_states; ++s) {
    const Cell c = model.state_to_cell[s];
    out << c.row << "," << c.col << "," << fmt(per_state[s]) << "\n";
  }
}

void write_arrows_csv(const FourRoomsModel& model, const TabularPolicy& policy,
                      const std::string& path) {
  static const char kArrow[4] = {'^', 'v', '<', '>'};
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "row,col,action,arrow\n";
  for (int s = 0; s < model.mdp.num_states; ++s) {
    const Cell c = model.state_to_cell[s];
    const int a = policy.argmax_action(s);
    out << c.row << "," << c.col << "," << a << "," << kArrow[a] << "\n";
  }
}

std::vector<double> dataset_visitation(const Dataset& ds, int num_states) {
  std::vector<double> counts(num_states, 0.0);
  for (const auto& traj : ds.trajectories)
    for (int s : traj.states) counts[s] += 1.0;
  return counts;
}

}  // namespace

std::vector<ResultRow> run_fourrooms_demo(const ExperimentConfig& cfg) {
  cfg.validate();
  namespace fs = std::filesystem;
  fs::create_directories(cfg.out_dir);
  const FourRoomsModel model = build_four_rooms(cfg.env);
  const TabularPolicy expert_policy = value_iteration(model.mdp).policy;
  const std::optional<int> start = eval_start_state(cfg, model);

  const std::vector<ResultRow> rows = run_ilid_pipeline(cfg);

  // Panels built from the first seed's artifacts.
  const std::uint64_t seed0 = cfg.seeds.front();
  double dwbc_eta = 0.5;
  for (const auto& s : cfg.schemes)
    if (s.scheme == Scheme::dwbc) dwbc_eta = s.dwbc_eta;
  const SeedBundle bundle = build_seed_bundle(cfg, model, expert_policy, seed0, dwbc_eta);
  write_grid_csv(model, dataset_visitation(bundle.expert, model.mdp.num_states),
                 cfg.out_dir + "/visitation_expert_data.csv");
  write_grid_csv(model, dataset_visitation(bundle.imperfect, model.mdp.num_states),
                 cfg.out_dir + "/visitation_imperfect_data.csv");
  {
    // Empirical argmax-action table of the imperfect data.
    const CountTable ct = empirical_marginals(bundle.imperfect, model.mdp.num_states,
                                              model.mdp.num_actions);
    TabularPolicy empirical = TabularPolicy::uniform(model.mdp.num_states, model.mdp.num_actions);
    for (int s = 0; s < model.mdp.num_states; ++s) {
      if (ct.state_count(s) == 0) continue;
      for (int a = 0; a < model.mdp.num_actions; ++a)
        empirical.probs[s][a] =
            static_cast<double>(ct.pair_count(s, a)) / static_cast<double>(ct.state_count(s));
    }
    write_arrows_csv(model, empirical, cfg.out_dir + "/arrows_imperfect_data.csv");
  }

  for (const SchemeConfig& scheme : cfg.schemes) {
    const std::string name = scheme.name();
    const TabularPolicy policy =
        load_policy(cfg.out_dir + "/policy_" + name + "_seed" + std::to_string(seed0) + ".json");
    std::vector<double> visitation(model.mdp.num_states, 0.0);
    Rng rng(mix_seed(seed0, "demo-" + name));
    for (int e = 0; e < cfg.eval_episodes; ++e) {
      Rng child = rng.derive("demo-episode", static_cast<std::uint64_t>(e));
      const Trajectory traj = rollout(model.mdp, policy, child, start);
      for (int s : traj.states) visitation[s] += 1.0;
    }
    write_grid_csv(model, visitation, cfg.out_dir + "/visitation_" + name + ".csv");
    write_arrows_csv(model, policy, cfg.out_dir + "/arrows_" + name + ".csv");
  }
  return rows;
}

}  // namespace ilid
