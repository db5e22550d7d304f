#include "ilid/four_rooms.hpp"

#include <deque>
#include <stdexcept>

namespace ilid {

namespace {

constexpr int kDRow[4] = {-1, 1, 0, 0};
constexpr int kDCol[4] = {0, 0, -1, 1};

}  // namespace

FourRoomsSpec FourRoomsSpec::standard() {
  // Classic four-rooms interior: vertical dividing wall in column 5 with
  // doorways at rows 2 and 9, left-half horizontal wall in row 5 with a
  // doorway at column 1, right-half horizontal wall in row 6 with a doorway
  // at column 8.
  FourRoomsSpec spec;
  spec.grid = {
      ".....#.....",  // row 0
      ".....#.....",  // row 1
      "...........",  // row 2
      ".....#.....",  // row 3
      ".....#.....",  // row 4
      "#.####.....",  // row 5
      ".....###.##",  // row 6
      ".....#.....",  // row 7
      ".....#.....",  // row 8
      "...........",  // row 9
      ".....#.....",  // row 10
  };
  spec.start_cells = {Cell{10, 0}, Cell{10, 10}};
  spec.goal_cell = Cell{2, 0};
  spec.horizon = 50;
  return spec;
}

bool FourRoomsSpec::is_free(int row, int col) const {
  if (row < 0 || row >= rows() || col < 0 || col >= cols()) return false;
  return grid[row][col] == '.';
}

void FourRoomsSpec::validate() const {
  if (grid.empty()) throw std::invalid_argument("four rooms: empty grid");
  for (const auto& line : grid) {
    if (static_cast<int>(line.size()) != cols())
      throw std::invalid_argument("four rooms: ragged grid rows");
    for (char c : line)
      if (c != '#' && c != '.') throw std::invalid_argument("four rooms: bad grid character");
  }
  if (horizon <= 0) throw std::invalid_argument("four rooms: horizon must be positive");
  if (start_cells.empty()) throw std::invalid_argument("four rooms: no start cells");
  for (const Cell& c : start_cells)
    if (!is_free(c.row, c.col)) throw std::invalid_argument("four rooms: start cell is not free");
  if (!is_free(goal_cell.row, goal_cell.col))
    throw std::invalid_argument("four rooms: goal cell is not free");
}

std::vector<int> bfs_distance_to_goal(const FourRoomsSpec& spec) {
  spec.validate();
  const int R = spec.rows(), C = spec.cols();
  std::vector<int> dist(R * C, -1);
  std::deque<Cell> queue;
  dist[spec.goal_cell.row * C + spec.goal_cell.col] = 0;
  queue.push_back(spec.goal_cell);
  while (!queue.empty()) {
    const Cell c = queue.front();
    queue.pop_front();
    const int d = dist[c.row * C + c.col];
    for (int a = 0; a < 4; ++a) {
      const int nr = c.row + kDRow[a], nc = c.col + kDCol[a];
      if (!spec.is_free(nr, nc)) continue;
      if (dist[nr * C + nc] != -1) continue;
      dist[nr * C + nc] = d + 1;
      queue.push_back(Cell{nr, nc});
    }
  }
  return dist;
}

FourRoomsModel build_four_rooms(const FourRoomsSpec& spec) {
  spec.validate();
  const auto dist = bfs_distance_to_goal(spec);
  for (const Cell& c : spec.start_cells)
    if (dist[c.row * spec.cols() + c.col] < 0)
      throw std::invalid_argument("four rooms: goal unreachable from a start cell");

  FourRoomsModel model;
  model.spec = spec;
  const int R = spec.rows(), C = spec.cols();
  model.cell_to_state.assign(R * C, -1);
  for (int r = 0; r < R; ++r) {
    for (int c = 0; c < C; ++c) {
      if (!spec.is_free(r, c)) continue;
      model.cell_to_state[r * C + c] = static_cast<int>(model.state_to_cell.size());
      model.state_to_cell.push_back(Cell{r, c});
    }
  }
  const int S = static_cast<int>(model.state_to_cell.size());
  model.goal_state = model.state_at(spec.goal_cell.row, spec.goal_cell.col);
  for (const Cell& c : spec.start_cells) model.start_states.push_back(model.state_at(c.row, c.col));

  TabularMdp& mdp = model.mdp;
  mdp.num_states = S;
  mdp.num_actions = 4;
  mdp.horizon = spec.horizon;
  mdp.next_state.assign(S, std::vector<int>(4, 0));
  mdp.reward.assign(S, std::vector<double>(4, 0.0));
  for (int s = 0; s < S; ++s) {
    const Cell c = model.state_to_cell[s];
    for (int a = 0; a < 4; ++a) {
      if (s == model.goal_state) {
        mdp.next_state[s][a] = s;  // absorbing
        continue;
      }
      const int nr = c.row + kDRow[a], nc = c.col + kDCol[a];
      const int target = spec.is_free(nr, nc) ? model.state_at(nr, nc) : s;
      mdp.next_state[s][a] = target;
      if (target == model.goal_state) mdp.reward[s][a] = 1.0;
    }
  }
  mdp.initial_dist.assign(S, 0.0);
  for (int s : model.start_states) mdp.initial_dist[s] += 1.0 / spec.start_cells.size();
  mdp.terminal_states = {model.goal_state};
  mdp.validate();
  return model;
}

nlohmann::json four_rooms_spec_to_json(const FourRoomsSpec& spec) {
  spec.validate();
  std::vector<std::string> rows = spec.grid;
  for (const Cell& c : spec.start_cells) rows[c.row][c.col] = 'S';
  rows[spec.goal_cell.row][spec.goal_cell.col] = 'G';
  nlohmann::json j;
  j["layout"] = rows;
  j["horizon"] = spec.horizon;
  return j;
}

FourRoomsSpec four_rooms_spec_from_json(const nlohmann::json& j) {
  FourRoomsSpec spec;
  spec.horizon = j.at("horizon").get<int>();
  std::vector<std::string> rows = j.at("layout").get<std::vector<std::string>>();
  bool goal_seen = false;
  for (int r = 0; r < static_cast<int>(rows.size()); ++r) {
    for (int c = 0; c < static_cast<int>(rows[r].size()); ++c) {
      const char ch = rows[r][c];
      if (ch == 'S') {
        spec.start_cells.push_back(Cell{r, c});
        rows[r][c] = '.';
      } else if (ch == 'G') {
        if (goal_seen) throw std::invalid_argument("four rooms: multiple goal markers");
        spec.goal_cell = Cell{r, c};
        goal_seen = true;
        rows[r][c] = '.';
      } else if (ch != '.' && ch != '#') {
        throw std::invalid_argument("four rooms: bad layout character");
      }
    }
  }
  if (!goal_seen) throw std::invalid_argument("four rooms: no goal marker");
  spec.grid = std::move(rows);
  spec.validate();
  return spec;
}

}  // namespace ilid
