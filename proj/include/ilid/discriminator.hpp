#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "ilid/dataset.hpp"
#include "json.hpp"

namespace ilid {

enum class DiscKind { state, state_action };

using StateScore = std::function<double(int)>;
using PairScore = std::function<double(int, int)>;

// Closed-form density-ratio discriminator backed by transition counts:
// value(x) = De(x) / (De(x) + Du(x)), exact and unclipped.
class ExactDiscriminator {
 public:
  ExactDiscriminator(DiscKind kind, CountTable expert, CountTable union_counts);

  DiscKind kind() const { return kind_; }
  bool defined(int s) const;
  bool defined(int s, int a) const;
  double value(int s) const;
  double value(int s, int a) const;

  // Exact rational form (numerator, denominator) of value(); denominators are
  // positive wherever the query is defined.
  std::pair<long long, long long> ratio(int s) const;
  std::pair<long long, long long> ratio(int s, int a) const;

  const CountTable& expert_counts() const { return expert_; }
  const CountTable& union_counts() const { return union_; }

  StateScore state_score() const;
  PairScore pair_score() const;

 private:
  DiscKind kind_;
  CountTable expert_;
  CountTable union_;
};

ExactDiscriminator exact_state_discriminator(const CountTable& expert,
                                             const CountTable& union_counts);
ExactDiscriminator exact_state_action_discriminator(const CountTable& expert,
                                                    const CountTable& union_counts);

struct TrainConfig {
  double learning_rate = 1e-3;  // 1e-5 reproduces the long-run reference setting
  int batch_size = 256;
  int steps = 2000;
  std::uint64_t seed = 0;
  int hidden_units = 256;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;

  void validate() const;
};

// Encoded training batch: indices of one-hot inputs, positives drawn from the
// expert dataset and negatives from the union dataset.
struct DiscBatch {
  std::vector<int> positive;
  std::vector<int> negative;
};

// Two-layer network (one-hot input -> ReLU hidden -> logistic output) trained
// from scratch. The training loss uses the raw logistic output; queries clamp
// it to [0.1, 0.9].
class TrainedDiscriminator {
 public:
  static constexpr double kClipLo = 0.1;
  static constexpr double kClipHi = 0.9;

  TrainedDiscriminator(DiscKind kind, int num_states, int num_actions, int hidden_units,
                       std::uint64_t init_seed);

  DiscKind kind() const { return kind_; }
  int input_dim() const { return input_dim_; }
  int hidden_units() const { return hidden_; }
  int encode(int s) const;
  int encode(int s, int a) const;

  double raw_output(int input_index) const;  // logistic, in (0, 1)
  double value(int s) const;                 // clipped
  double value(int s, int a) const;

  // Objective on a batch: mean log d over positives + mean log(1-d) over
  // negatives, raw outputs.
  double loss(const DiscBatch& batch) const;
  std::vector<double> loss_gradient(const DiscBatch& batch) const;

  const std::vector<double>& parameters() const { return params_; }
  void set_parameters(const std::vector<double>& params);
  std::size_t num_parameters() const { return params_.size(); }

  StateScore state_score() const;
  PairScore pair_score() const;

  nlohmann::json to_json() const;
  static TrainedDiscriminator from_json(const nlohmann::json& j);

 private:
  friend TrainedDiscriminator fit_discriminator_impl(DiscKind, const Dataset&, const Dataset&,
                                                     int, int, const TrainConfig&);
  friend TrainedDiscriminator fit_dwbc_discriminator(const Dataset&, const Dataset&, int, int,
                                                     double, const TrainConfig&);

  double preactivation(int input_index, int j) const;
  double logit(int input_index) const;

  DiscKind kind_;
  int num_states_;
  int num_actions_;
  int input_dim_;
  int hidden_;
  // Layout: W1 (hidden x input, row-major), b1 (hidden), w2 (hidden), b2.
  std::vector<double> params_;
};

// Adam ascent on a flat parameter vector; shared by the discriminator fits and
// the gradient policy trainer.
struct AdamState {
  double lr, beta1, beta2, epsilon;
  std::vector<double> m, v;
  long long t = 0;

  AdamState(std::size_t n, double lr, double beta1, double beta2, double epsilon)
      : lr(lr), beta1(beta1), beta2(beta2), epsilon(epsilon), m(n, 0.0), v(n, 0.0) {}

  void ascend(std::vector<double>& params, const std::vector<double>& gradient);
};

TrainedDiscriminator fit_state_discriminator(const Dataset& expert, const Dataset& union_data,
                                             int num_states, int num_actions,
                                             const TrainConfig& cfg);
TrainedDiscriminator fit_state_action_discriminator(const Dataset& expert,
                                                    const Dataset& union_data, int num_states,
                                                    int num_actions, const TrainConfig& cfg);

// Discriminator for the DWBC baseline weight: positives from the expert data,
// negatives from the imperfect data with the negative term scaled by 1/eta,
// minus an extra log(1-d) term on the expert data.
TrainedDiscriminator fit_dwbc_discriminator(const Dataset& expert, const Dataset& imperfect,
                                            int num_states, int num_actions, double eta,
                                            const TrainConfig& cfg);

// Closed-form optimum of the DWBC discriminator objective on count data:
// clamp(eta * rho_e(s,a) / rho_b(s,a)) into [0.1, 0.9].
PairScore dwbc_exact_score(const CountTable& expert, const CountTable& imperfect, double eta);

// Max relative error between analytic parameter gradients and central finite
// differences with step 1e-5.
double gradient_check(const TrainedDiscriminator& disc, const DiscBatch& batch);

void save_discriminator(const TrainedDiscriminator& disc, const std::string& path);
TrainedDiscriminator load_discriminator(const std::string& path);

}  // namespace ilid
