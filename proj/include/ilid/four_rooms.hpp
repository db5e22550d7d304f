#pragma once

#include <string>
#include <utility>
#include <vector>

#include "ilid/mdp.hpp"

namespace ilid {

// Grid actions, in tie-break order.
enum GridAction { kUp = 0, kDown = 1, kLeft = 2, kRight = 3 };

struct Cell {
  int row = 0;
  int col = 0;
  bool operator==(const Cell&) const = default;
};

// 11x11 four-rooms occupancy layout. Rows use '#' for walls and '.' for free
// cells; start/goal markers live in separate fields and are rendered as
// 'S'/'G' only in the serialized form.
struct FourRoomsSpec {
  std::vector<std::string> grid;
  std::vector<Cell> start_cells;  // the two starts; index 0 = left, 1 = right
  Cell goal_cell;
  int horizon = 50;

  static FourRoomsSpec standard();
  void validate() const;
  bool is_free(int row, int col) const;
  int rows() const { return static_cast<int>(grid.size()); }
  int cols() const { return grid.empty() ? 0 : static_cast<int>(grid[0].size()); }
};

// Built MDP plus the cell <-> state index maps needed for inspection output.
struct FourRoomsModel {
  TabularMdp mdp;
  FourRoomsSpec spec;
  std::vector<int> cell_to_state;   // row * cols + col -> state id, -1 on walls
  std::vector<Cell> state_to_cell;  // state id -> cell
  std::vector<int> start_states;    // same order as spec.start_cells
  int goal_state = -1;

  int state_at(int row, int col) const { return cell_to_state[row * spec.cols() + col]; }
};

// Moving into a wall or off the grid keeps the agent in place. Entering the
// goal pays reward 1; the goal is absorbing with zero reward afterwards.
// Rejects specs where the goal is unreachable from any start (checked by
// breadth-first search).
FourRoomsModel build_four_rooms(const FourRoomsSpec& spec);

// Breadth-first search distances (in moves) from every free cell to the goal;
// -1 where the goal cannot be reached. Indexed by row * cols + col.
std::vector<int> bfs_distance_to_goal(const FourRoomsSpec& spec);

nlohmann::json four_rooms_spec_to_json(const FourRoomsSpec& spec);
FourRoomsSpec four_rooms_spec_from_json(const nlohmann::json& j);

}  // namespace ilid
