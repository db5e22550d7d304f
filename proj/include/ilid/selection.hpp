#pragma once

#include <string>
#include <vector>

#include "ilid/dataset.hpp"
#include "ilid/discriminator.hpp"

namespace ilid {

struct SelectionConfig {
  double sigma = 0.2;   // expert-state threshold
  int rollback_k = 20;  // causal predecessors kept per identified state

  void validate() const;
};

// Position of an identified expert state inside the imperfect dataset:
// trajectory index and 0-based step of the anchor state.
struct AnchorPosition {
  int traj = 0;
  int step = 0;
  bool operator==(const AnchorPosition&) const = default;
};

// One selected causal state-action pair. `traj`/`step` locate the pair inside
// the imperfect dataset; the anchor it leads to sits k steps later at
// step + k on the same trajectory.
struct SelectedPair {
  int k = 0;
  int state = 0;
  int action = 0;
  int traj = 0;
  int step = 0;
  bool operator==(const SelectedPair&) const = default;
};

// All positions (i, h) with h >= 1 (0-based) whose state scores d(s) >= sigma.
// First steps are never anchors: they have no causal predecessor.
std::vector<AnchorPosition> identify_expert_states(const StateScore& d, const Dataset& imperfect,
                                                   double sigma);

// Rollback selection: for each anchor at step h, emit the pairs at steps
// h-1 .. h-min(h, K) with k = 1 .. min(h, K). Duplicates across anchors are
// retained.
std::vector<SelectedPair> build_complementary_dataset(const Dataset& imperfect,
                                                      const StateScore& d,
                                                      const SelectionConfig& cfg);

struct SelectionReport {
  long long anchors = 0;
  long long pairs = 0;
  double coverage = 0.0;  // fraction of imperfect transitions selected at least once
};

SelectionReport selection_report(const std::vector<SelectedPair>& pairs,
                                 const Dataset& imperfect);

void save_pairs_csv(const std::vector<SelectedPair>& pairs, const std::string& path);
std::vector<SelectedPair> load_pairs_csv(const std::string& path);

}  // namespace ilid
