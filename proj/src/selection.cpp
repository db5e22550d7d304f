#include "ilid/selection.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace ilid {

void SelectionConfig::validate() const {
  if (!(sigma > 0.0 && sigma < 1.0))
    throw std::invalid_argument("selection config: sigma must lie in (0, 1)");
  if (rollback_k < 1) throw std::invalid_argument("selection config: rollback_k must be >= 1");
}

std::vector<AnchorPosition> identify_expert_states(const StateScore& d, const Dataset& imperfect,
                                                   double sigma) {
  std::vector<AnchorPosition> anchors;
  for (int i = 0; i < static_cast<int>(imperfect.trajectories.size()); ++i) {
    const Trajectory& traj = imperfect.trajectories[i];
    for (int h = 1; h < static_cast<int>(traj.length()); ++h) {
      if (d(traj.states[h]) >= sigma) anchors.push_back(AnchorPosition{i, h});
    }
  }
  return anchors;
}

std::vector<SelectedPair> build_complementary_dataset(const Dataset& imperfect,
                                                      const StateScore& d,
                                                      const SelectionConfig& cfg) {
  cfg.validate();
  std::vector<SelectedPair> pairs;
  for (const AnchorPosition& anchor : identify_expert_states(d, imperfect, cfg.sigma)) {
    const Trajectory& traj = imperfect.trajectories[anchor.traj];
    const int max_k = std::min(anchor.step, cfg.rollback_k);
    for (int k = 1; k <= max_k; ++k) {
      const int step = anchor.step - k;
      pairs.push_back(SelectedPair{k, traj.states[step], traj.actions[step], anchor.traj, step});
    }
  }
  return pairs;
}

SelectionReport selection_report(const std::vector<SelectedPair>& pairs,
                                 const Dataset& imperfect) {
  SelectionReport report;
  report.pairs = static_cast<long long>(pairs.size());
  std::set<std::pair<int, int>> anchor_positions;
  std::set<std::pair<int, int>> covered;
  for (const SelectedPair& p : pairs) {
    anchor_positions.insert({p.traj, p.step + p.k});
    covered.insert({p.traj, p.step});
  }
  report.anchors = static_cast<long long>(anchor_positions.size());
  const std::size_t total = imperfect.num_transitions();
  report.coverage = total == 0 ? 0.0 : static_cast<double>(covered.size()) / total;
  return report;
}

void save_pairs_csv(const std::vector<SelectedPair>& pairs, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_pairs_csv: cannot open " + path);
  out << "k,state,action,traj,step\n";
  for (const SelectedPair& p : pairs)
    out << p.k << "," << p.state << "," << p.action << "," << p.traj << "," << p.step << "\n";
}

std::vector<SelectedPair> load_pairs_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_pairs_csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line != "k,state,action,traj,step")
    throw std::runtime_error("load_pairs_csv: " + path + ": bad header");
  std::vector<SelectedPair> pairs;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    SelectedPair p;
    char c1, c2, c3, c4;
    std::istringstream row(line);
    if (!(row >> p.k >> c1 >> p.state >> c2 >> p.action >> c3 >> p.traj >> c4 >> p.step) ||
        c1 != ',' || c2 != ',' || c3 != ',' || c4 != ',')
      throw std::runtime_error("load_pairs_csv: " + path + " line " + std::to_string(line_no) +
                               ": malformed row");
    pairs.push_back(p);
  }
  return pairs;
}

}  // namespace ilid
