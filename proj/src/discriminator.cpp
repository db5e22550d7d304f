#include "ilid/discriminator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace ilid {

namespace {

// log(sigmoid(z)) and log(1 - sigmoid(z)), computed stably.
double log_sigmoid(double z) { return z >= 0.0 ? -std::log1p(std::exp(-z)) : z - std::log1p(std::exp(z)); }
double log_one_minus_sigmoid(double z) { return log_sigmoid(-z); }
double sigmoid(double z) { return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z)); }

std::vector<int> encode_dataset(DiscKind kind, const Dataset& ds, int num_states, int num_actions) {
  std::vector<int> xs;
  xs.reserve(ds.num_transitions());
  for (const auto& traj : ds.trajectories) {
    for (std::size_t t = 0; t < traj.length(); ++t) {
      const int s = traj.states[t], a = traj.actions[t];
      if (s < 0 || s >= num_states || a < 0 || a >= num_actions)
        throw std::invalid_argument("discriminator: state or action out of range");
      xs.push_back(kind == DiscKind::state ? s : s * num_actions + a);
    }
  }
  if (xs.empty()) throw std::invalid_argument("discriminator: empty dataset");
  return xs;
}

DiscBatch sample_batch(const std::vector<int>& positives, const std::vector<int>& negatives,
                       int batch_size, Rng& rng) {
  DiscBatch batch;
  batch.positive.reserve(batch_size);
  batch.negative.reserve(batch_size);
  for (int i = 0; i < batch_size; ++i)
    batch.positive.push_back(positives[rng.uniform_int(static_cast<int>(positives.size()))]);
  for (int i = 0; i < batch_size; ++i)
    batch.negative.push_back(negatives[rng.uniform_int(static_cast<int>(negatives.size()))]);
  return batch;
}

}  // namespace

ExactDiscriminator::ExactDiscriminator(DiscKind kind, CountTable expert, CountTable union_counts)
    : kind_(kind), expert_(std::move(expert)), union_(std::move(union_counts)) {
  if (expert_.num_states != union_.num_states || expert_.num_actions != union_.num_actions)
    throw std::invalid_argument("exact discriminator: count table shapes differ");
  if (expert_.total <= 0 || union_.total <= 0)
    throw std::invalid_argument("exact discriminator: empty count table");
}

bool ExactDiscriminator::defined(int s) const {
  return expert_.state_count(s) > 0 || union_.state_count(s) > 0;
}

bool ExactDiscriminator::defined(int s, int a) const {
  return expert_.pair_count(s, a) > 0 || union_.pair_count(s, a) > 0;
}

std::pair<long long, long long> ExactDiscriminator::ratio(int s) const {
  if (kind_ != DiscKind::state)
    throw std::logic_error("exact discriminator: state query on a state-action instance");
  if (!defined(s))
    throw std::domain_error("exact discriminator: state unseen in both datasets");
  // De/(De+Du) with De = ce/Te, Du = cu/Tu reduces to ce*Tu / (ce*Tu + cu*Te).
  const long long num = expert_.state_count(s) * union_.total;
  const long long den = num + union_.state_count(s) * expert_.total;
  return {num, den};
}

std::pair<long long, long long> ExactDiscriminator::ratio(int s, int a) const {
  if (kind_ != DiscKind::state_action)
    throw std::logic_error("exact discriminator: state-action query on a state instance");
  if (!defined(s, a))
    throw std::domain_error("exact discriminator: state-action unseen in both datasets");
  const long long num = expert_.pair_count(s, a) * union_.total;
  const long long den = num + union_.pair_count(s, a) * expert_.total;
  return {num, den};
}

double ExactDiscriminator::value(int s) const {
  const auto [num, den] = ratio(s);
  return static_cast<double>(num) / static_cast<double>(den);
}

double ExactDiscriminator::value(int s, int a) const {
  const auto [num, den] = ratio(s, a);
  return static_cast<double>(num) / static_cast<double>(den);
}

StateScore ExactDiscriminator::state_score() const {
  return [self = *this](int s) { return self.value(s); };
}

PairScore ExactDiscriminator::pair_score() const {
  return [self = *this](int s, int a) { return self.value(s, a); };
}

ExactDiscriminator exact_state_discriminator(const CountTable& expert,
                                             const CountTable& union_counts) {
  return ExactDiscriminator(DiscKind::state, expert, union_counts);
}

ExactDiscriminator exact_state_action_discriminator(const CountTable& expert,
                                                    const CountTable& union_counts) {
  return ExactDiscriminator(DiscKind::state_action, expert, union_counts);
}

void TrainConfig::validate() const {
  if (learning_rate <= 0.0) throw std::invalid_argument("train config: learning rate must be positive");
  if (batch_size <= 0) throw std::invalid_argument("train config: batch size must be positive");
  if (steps < 0) throw std::invalid_argument("train config: negative step count");
  if (hidden_units <= 0) throw std::invalid_argument("train config: hidden units must be positive");
}

TrainedDiscriminator::TrainedDiscriminator(DiscKind kind, int num_states, int num_actions,
                                           int hidden_units, std::uint64_t init_seed)
    : kind_(kind), num_states_(num_states), num_actions_(num_actions), hidden_(hidden_units) {
  if (num_states <= 0 || num_actions <= 0 || hidden_units <= 0)
    throw std::invalid_argument("trained discriminator: bad dimensions");
  input_dim_ = kind == DiscKind::state ? num_states : num_states * num_actions;
  params_.assign(static_cast<std::size_t>(hidden_) * input_dim_ + hidden_ + hidden_ + 1, 0.0);
  Rng rng(init_seed);
  const double w1_scale = 1.0 / std::sqrt(static_cast<double>(input_dim_));
  for (int j = 0; j < hidden_; ++j)
    for (int i = 0; i < input_dim_; ++i)
      params_[static_cast<std::size_t>(j) * input_dim_ + i] = rng.uniform(-w1_scale, w1_scale);
  // Hidden biases start slightly positive so every unit is active on one-hot
  // inputs at initialization (|W1 entries| < 0.05 when input_dim >= 1).
  const std::size_t b1_off = static_cast<std::size_t>(hidden_) * input_dim_;
  for (int j = 0; j < hidden_; ++j) params_[b1_off + j] = 0.05 + w1_scale;
  const double w2_scale = 1.0 / std::sqrt(static_cast<double>(hidden_));
  const std::size_t w2_off = b1_off + hidden_;
  for (int j = 0; j < hidden_; ++j) params_[w2_off + j] = rng.uniform(-w2_scale, w2_scale);
  params_.back() = 0.0;
}

int TrainedDiscriminator::encode(int s) const {
  if (kind_ != DiscKind::state) throw std::logic_error("trained discriminator: wrong encode arity");
  if (s < 0 || s >= num_states_) throw std::invalid_argument("trained discriminator: state out of range");
  return s;
}

int TrainedDiscriminator::encode(int s, int a) const {
  if (kind_ != DiscKind::state_action)
    throw std::logic_error("trained discriminator: wrong encode arity");
  if (s < 0 || s >= num_states_ || a < 0 || a >= num_actions_)
    throw std::invalid_argument("trained discriminator: state or action out of range");
  return s * num_actions_ + a;
}

double TrainedDiscriminator::preactivation(int input_index, int j) const {
  const std::size_t b1_off = static_cast<std::size_t>(hidden_) * input_dim_;
  return params_[static_cast<std::size_t>(j) * input_dim_ + input_index] + params_[b1_off + j];
}

double TrainedDiscriminator::logit(int input_index) const {
  const std::size_t b1_off = static_cast<std::size_t>(hidden_) * input_dim_;
  const std::size_t w2_off = b1_off + hidden_;
  double z = params_.back();
  for (int j = 0; j < hidden_; ++j) {
    const double pre = preactivation(input_index, j);
    if (pre > 0.0) z += params_[w2_off + j] * pre;
  }
  return z;
}

double TrainedDiscriminator::raw_output(int input_index) const { return sigmoid(logit(input_index)); }

double TrainedDiscriminator::value(int s) const {
  return std::clamp(raw_output(encode(s)), kClipLo, kClipHi);
}

double TrainedDiscriminator::value(int s, int a) const {
  return std::clamp(raw_output(encode(s, a)), kClipLo, kClipHi);
}

double TrainedDiscriminator::loss(const DiscBatch& batch) const {
  if (batch.positive.empty() || batch.negative.empty())
    throw std::invalid_argument("discriminator loss: empty batch side");
  double pos = 0.0, neg = 0.0;
  for (int x : batch.positive) pos += log_sigmoid(logit(x));
  for (int x : batch.negative) neg += log_one_minus_sigmoid(logit(x));
  return pos / batch.positive.size() + neg / batch.negative.size();
}

std::vector<double> TrainedDiscriminator::loss_gradient(const DiscBatch& batch) const {
  if (batch.positive.empty() || batch.negative.empty())
    throw std::invalid_argument("discriminator gradient: empty batch side");
  std::vector<double> grad(params_.size(), 0.0);
  const std::size_t b1_off = static_cast<std::size_t>(hidden_) * input_dim_;
  const std::size_t w2_off = b1_off + hidden_;
  auto accumulate = [&](int x, double dz) {
    // dz = dJ/dlogit for this sample, already weighted by 1/batch side size.
    grad.back() += dz;
    for (int j = 0; j < hidden_; ++j) {
      const double pre = preactivation(x, j);
      if (pre <= 0.0) continue;
      grad[w2_off + j] += dz * pre;
      const double dpre = dz * params_[w2_off + j];
      grad[b1_off + j] += dpre;
      grad[static_cast<std::size_t>(j) * input_dim_ + x] += dpre;
    }
  };
  const double pw = 1.0 / batch.positive.size();
  const double nw = 1.0 / batch.negative.size();
  for (int x : batch.positive) accumulate(x, pw * (1.0 - sigmoid(logit(x))));
  for (int x : batch.negative) accumulate(x, -nw * sigmoid(logit(x)));
  return grad;
}

void TrainedDiscriminator::set_parameters(const std::vector<double>& params) {
  if (params.size() != params_.size())
    throw std::invalid_argument("trained discriminator: parameter count mismatch");
  params_ = params;
}

StateScore TrainedDiscriminator::state_score() const {
  return [self = *this](int s) { return self.value(s); };
}

PairScore TrainedDiscriminator::pair_score() const {
  return [self = *this](int s, int a) { return self.value(s, a); };
}

nlohmann::json TrainedDiscriminator::to_json() const {
  nlohmann::json j;
  j["kind"] = kind_ == DiscKind::state ? "state" : "state_action";
  j["num_states"] = num_states_;
  j["num_actions"] = num_actions_;
  j["hidden_units"] = hidden_;
  j["clip"] = {kClipLo, kClipHi};
  j["encoding"] = kind_ == DiscKind::state ? "one_hot_state" : "one_hot_state_action";
  j["params"] = params_;
  return j;
}

TrainedDiscriminator TrainedDiscriminator::from_json(const nlohmann::json& j) {
  const std::string kind_name = j.at("kind").get<std::string>();
  const DiscKind kind = kind_name == "state" ? DiscKind::state : DiscKind::state_action;
  TrainedDiscriminator disc(kind, j.at("num_states").get<int>(), j.at("num_actions").get<int>(),
                            j.at("hidden_units").get<int>(), 0);
  disc.set_parameters(j.at("params").get<std::vector<double>>());
  return disc;
}

void AdamState::ascend(std::vector<double>& params, const std::vector<double>& gradient) {
  ++t;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m[i] = beta1 * m[i] + (1.0 - beta1) * gradient[i];
    v[i] = beta2 * v[i] + (1.0 - beta2) * gradient[i] * gradient[i];
    params[i] += lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + epsilon);
  }
}

TrainedDiscriminator fit_discriminator_impl(DiscKind kind, const Dataset& expert,
                                            const Dataset& union_data, int num_states,
                                            int num_actions, const TrainConfig& cfg) {
  cfg.validate();
  const std::vector<int> positives = encode_dataset(kind, expert, num_states, num_actions);
  const std::vector<int> negatives = encode_dataset(kind, union_data, num_states, num_actions);
  TrainedDiscriminator disc(kind, num_states, num_actions, cfg.hidden_units,
                            mix_seed(cfg.seed, "disc-init"));
  Rng rng(mix_seed(cfg.seed, "disc-batches"));
  AdamState adam(disc.num_parameters(), cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2,
                 cfg.adam_epsilon);
  for (int step = 0; step < cfg.steps; ++step) {
    const DiscBatch batch = sample_batch(positives, negatives, cfg.batch_size, rng);
    const double j = disc.loss(batch);
    if (!std::isfinite(j))
      throw std::runtime_error("discriminator fit: non-finite loss at step " +
                               std::to_string(step));
    adam.ascend(disc.params_, disc.loss_gradient(batch));
  }
  return disc;
}

TrainedDiscriminator fit_state_discriminator(const Dataset& expert, const Dataset& union_data,
                                             int num_states, int num_actions,
                                             const TrainConfig& cfg) {
  return fit_discriminator_impl(DiscKind::state, expert, union_data, num_states, num_actions, cfg);
}

TrainedDiscriminator fit_state_action_discriminator(const Dataset& expert,
                                                    const Dataset& union_data, int num_states,
                                                    int num_actions, const TrainConfig& cfg) {
  return fit_discriminator_impl(DiscKind::state_action, expert, union_data, num_states,
                                num_actions, cfg);
}

TrainedDiscriminator fit_dwbc_discriminator(const Dataset& expert, const Dataset& imperfect,
                                            int num_states, int num_actions, double eta,
                                            const TrainConfig& cfg) {
  cfg.validate();
  if (eta <= 0.0) throw std::invalid_argument("dwbc discriminator: eta must be positive");
  const auto positives = encode_dataset(DiscKind::state_action, expert, num_states, num_actions);
  const auto negatives = encode_dataset(DiscKind::state_action, imperfect, num_states, num_actions);
  TrainedDiscriminator disc(DiscKind::state_action, num_states, num_actions, cfg.hidden_units,
                            mix_seed(cfg.seed, "dwbc-init"));
  Rng rng(mix_seed(cfg.seed, "dwbc-batches"));
  AdamState adam(disc.num_parameters(), cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2,
                 cfg.adam_epsilon);
  const std::size_t b1_off = static_cast<std::size_t>(disc.hidden_units()) * disc.input_dim();
  const std::size_t w2_off = b1_off + disc.hidden_units();
  for (int step = 0; step < cfg.steps; ++step) {
    const DiscBatch batch = sample_batch(positives, negatives, cfg.batch_size, rng);
    std::vector<double> grad(disc.num_parameters(), 0.0);
    double j = 0.0;
    auto accumulate = [&](int x, double dz) {
      grad.back() += dz;
      for (int h = 0; h < disc.hidden_units(); ++h) {
        const double pre = disc.preactivation(x, h);
        if (pre <= 0.0) continue;
        grad[w2_off + h] += dz * pre;
        const double dpre = dz * disc.params_[w2_off + h];
        grad[b1_off + h] += dpre;
        grad[static_cast<std::size_t>(h) * disc.input_dim() + x] += dpre;
      }
    };
    // max E_e[log d] + (1/eta) E_b[log(1-d)] - E_e[log(1-d)]:
    // the expert-side logit derivative simplifies to (1-d) + d = 1.
    const double pw = 1.0 / batch.positive.size();
    const double nw = 1.0 / batch.negative.size();
    for (int x : batch.positive) {
      const double z = disc.logit(x);
      j += pw * (log_sigmoid(z) - log_one_minus_sigmoid(z));
      accumulate(x, pw);
    }
    for (int x : batch.negative) {
      const double z = disc.logit(x);
      j += (nw / eta) * log_one_minus_sigmoid(z);
      accumulate(x, -(nw / eta) * sigmoid(z));
    }
    if (!std::isfinite(j))
      throw std::runtime_error("dwbc discriminator fit: non-finite loss at step " +
                               std::to_string(step));
    adam.ascend(disc.params_, grad);
  }
  return disc;
}

PairScore dwbc_exact_score(const CountTable& expert, const CountTable& imperfect, double eta) {
  if (eta <= 0.0) throw std::invalid_argument("dwbc exact score: eta must be positive");
  return [expert, imperfect, eta](int s, int a) {
    const long long ce = expert.pair_count(s, a);
    const long long cb = imperfect.pair_count(s, a);
    if (ce == 0 && cb == 0)
      throw std::domain_error("dwbc exact score: state-action unseen in both datasets");
    if (cb == 0) return TrainedDiscriminator::kClipHi;
    const double rho_e = static_cast<double>(ce) / static_cast<double>(expert.total);
    const double rho_b = static_cast<double>(cb) / static_cast<double>(imperfect.total);
    return std::clamp(eta * rho_e / rho_b, TrainedDiscriminator::kClipLo,
                      TrainedDiscriminator::kClipHi);
  };
}

double gradient_check(const TrainedDiscriminator& disc, const DiscBatch& batch) {
  constexpr double kStep = 1e-5;
  const std::vector<double> analytic = disc.loss_gradient(batch);
  TrainedDiscriminator probe = disc;
  std::vector<double> params = disc.parameters();
  double max_rel = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double saved = params[i];
    params[i] = saved + kStep;
    probe.set_parameters(params);
    const double plus = probe.loss(batch);
    params[i] = saved - kStep;
    probe.set_parameters(params);
    const double minus = probe.loss(batch);
    params[i] = saved;
    const double numeric = (plus - minus) / (2.0 * kStep);
    const double scale = std::max({std::abs(analytic[i]), std::abs(numeric), 1e-8});
    max_rel = std::max(max_rel, std::abs(analytic[i] - numeric) / scale);
  }
  return max_rel;
}

void save_discriminator(const TrainedDiscriminator& disc, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_discriminator: cannot open " + path);
  out << disc.to_json().dump(2) << "\n";
}

TrainedDiscriminator load_discriminator(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_discriminator: cannot open " + path);
  nlohmann::json j;
  in >> j;
  return TrainedDiscriminator::from_json(j);
}

}  // namespace ilid
