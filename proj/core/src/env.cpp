#include "llmens/env.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "llmens/rng.hpp"

namespace llmens {

std::string EpisodeTrace::to_lines() const {
  std::ostringstream out;
  for (const TraceStep& s : steps) {
    out << s.state.state_id << ',' << s.action << ',' << s.reward << '\n';
  }
  return out.str();
}

EpisodeTrace EpisodeTrace::from_lines(const std::string& text) {
  EpisodeTrace trace;
  std::istringstream in(text);
  std::string line;
  int step_index = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string state_s, action_s, reward_s;
    if (!std::getline(fields, state_s, ',') ||
        !std::getline(fields, action_s, ',') ||
        !std::getline(fields, reward_s)) {
      throw std::runtime_error("trace line malformed: " + line);
    }
    TraceStep step;
    step.state.state_id = std::stoi(state_s);
    step.state.step_index = step_index++;
    step.action = std::stoi(action_s);
    step.reward = std::stod(reward_s);
    trace.steps.push_back(step);
    trace.total_return += step.reward;
  }
  return trace;
}

namespace {

// ---------------------------------------------------------------------------
// TwoZoneCorridor
//
// States 0..11. Zone A = 0..5, Zone B = 6..10, state 11 terminal. Both
// actions advance by one position; +1 iff the action matches the zone.
// ---------------------------------------------------------------------------

constexpr int kCorridorTerminal = 11;
constexpr int kCorridorMaxSteps = 30;

const EnvSpec& corridor_spec() {
  static const EnvSpec spec{
      "two-zone-corridor",
      2,
      {"FORWARD", "JUMP"},
      "moves along a 12-position corridor split into two zones, advancing "
      "one position per step",
      "FORWARD (0) or JUMP (1); either action advances the agent by one "
      "position",
      "+1 for FORWARD in Zone A (positions 0-5) or JUMP in Zone B "
      "(positions 6-10), otherwise 0",
      "the agent reaches position 11 or 30 steps elapse",
      "collect the maximum total reward by matching the action to the "
      "current zone",
      kCorridorMaxSteps,
      2};
  return spec;
}

class TwoZoneCorridor final : public Environment {
 public:
  const EnvSpec& spec() const override { return corridor_spec(); }

  StateObs reset(std::uint64_t /*seed*/) override {
    state_ = StateObs{0, 0, false};
    return state_;
  }

  StepResult step(int action) override {
    if (state_.done) throw std::logic_error("step on a done state");
    if (action < 0 || action >= 2)
      throw std::invalid_argument("action out of range");
    const int pos = state_.state_id;
    double reward = 0.0;
    if ((pos <= 5 && action == 0) || (pos >= 6 && pos <= 10 && action == 1))
      reward = 1.0;
    state_.state_id = pos + 1;
    state_.step_index += 1;
    state_.done = state_.state_id == kCorridorTerminal ||
                  state_.step_index >= kCorridorMaxSteps;
    return StepResult{state_, reward, state_.done};
  }

  StateObs current() const override { return state_; }

  std::string render() const override {
    const int pos = state_.state_id;
    std::ostringstream out;
    if (pos == kCorridorTerminal) {
      out << "Corridor: position 11, terminal (end of corridor)";
    } else {
      out << "Corridor: " << (pos <= 5 ? "Zone A" : "Zone B") << ", position "
          << pos << " of 11";
    }
    return out.str();
  }

 private:
  StateObs state_{0, 0, false};
};

// ---------------------------------------------------------------------------
// FourRoomsForage
//
// 9x9 grid, internal walls along row 4 and column 4 with doorways at
// (4,2), (2,4), (4,6), (6,4). Four pellets, one per room at seeded cells;
// eating one respawns it in the diagonally opposite room at that room's
// seeded respawn cell (probing forward if occupied). A hazard random-walks
// the bottom half (rows >= 5). World randomness uses two streams derived
// from the episode seed ("layout", "hazard"), so the hazard path depends
// only on step count, never on agent actions.
// ---------------------------------------------------------------------------

constexpr int kGrid = 9;
constexpr int kForageMaxSteps = 100;

constexpr int cell_id(int row, int col) { return row * kGrid + col; }
constexpr int row_of(int cell) { return cell / kGrid; }
constexpr int col_of(int cell) { return cell % kGrid; }

bool is_doorway(int row, int col) {
  return (row == 4 && col == 2) || (row == 2 && col == 4) ||
         (row == 4 && col == 6) || (row == 6 && col == 4);
}

bool is_wall(int row, int col) {
  if (row < 0 || row >= kGrid || col < 0 || col >= kGrid) return true;
  if (row != 4 && col != 4) return false;
  return !is_doorway(row, col);
}

// Room block of a pellet cell; pellets only ever occupy the 4x4 blocks.
int block_room(int cell) {
  const int r = row_of(cell), c = col_of(cell);
  return 1 + (r >= 5 ? 2 : 0) + (c >= 5 ? 1 : 0);
}

// The 16 cells of a room block, row-major.
const std::array<int, 16>& room_cells(int room) {
  static const std::array<std::array<int, 16>, 4> cells = [] {
    std::array<std::array<int, 16>, 4> out{};
    for (int room = 1; room <= 4; ++room) {
      const int r0 = room >= 3 ? 5 : 0;
      const int c0 = (room == 2 || room == 4) ? 5 : 0;
      int k = 0;
      for (int r = r0; r < r0 + 4; ++r)
        for (int c = c0; c < c0 + 4; ++c) out[room - 1][k++] = cell_id(r, c);
    }
    return out;
  }();
  return cells[room - 1];
}

const EnvSpec& forage_spec() {
  static const EnvSpec spec{
      "four-rooms-forage",
      4,
      {"UP", "DOWN", "LEFT", "RIGHT"},
      "forages pellets on a 9x9 grid divided into four rooms connected by "
      "doorways, while a hazard wanders the bottom rooms",
      "UP (0), DOWN (1), LEFT (2), or RIGHT (3); moving into a wall leaves "
      "the agent in place",
      "+1 for eating a pellet, which then respawns in the diagonally "
      "opposite room, and -1 for contact with the hazard",
      "100 steps elapse",
      "eat as many pellets as possible while avoiding the hazard",
      kForageMaxSteps,
      4};
  return spec;
}

// Observation encoding: (cell * 9 + nearest-pellet octant) * 2 +
// hazard-proximity bit. The cell keeps the room structure recoverable;
// the relative pellet octant (sign of the row and column offsets) makes
// foraging learnable by a tabular agent.
constexpr int kForageObsPerCell = 18;

int nearest_pellet_octant(int agent, const std::array<int, 4>& pellets) {
  int best = pellets[0];
  int best_dist = std::abs(row_of(best) - row_of(agent)) +
                  std::abs(col_of(best) - col_of(agent));
  for (int i = 1; i < 4; ++i) {
    const int dist = std::abs(row_of(pellets[i]) - row_of(agent)) +
                     std::abs(col_of(pellets[i]) - col_of(agent));
    if (dist < best_dist || (dist == best_dist && pellets[i] < best)) {
      best = pellets[i];
      best_dist = dist;
    }
  }
  const int dr = row_of(best) - row_of(agent);
  const int dc = col_of(best) - col_of(agent);
  const int sr = dr < 0 ? 0 : dr == 0 ? 1 : 2;
  const int sc = dc < 0 ? 0 : dc == 0 ? 1 : 2;
  return sr * 3 + sc;
}

int encode_forage_observation(int agent, const std::array<int, 4>& pellets,
                              int hazard_cell) {
  const int octant = nearest_pellet_octant(agent, pellets);
  int hazard_near = 0;
  if (hazard_cell >= 0) {
    const int dist = std::abs(row_of(hazard_cell) - row_of(agent)) +
                     std::abs(col_of(hazard_cell) - col_of(agent));
    hazard_near = dist <= 2 ? 1 : 0;
  }
  return (agent * 9 + octant) * 2 + hazard_near;
}

int moved_cell(int cell, int action) {
  static constexpr int dr[4] = {-1, 1, 0, 0};
  static constexpr int dc[4] = {0, 0, -1, 1};
  const int r = row_of(cell) + dr[action];
  const int c = col_of(cell) + dc[action];
  if (is_wall(r, c)) return cell;
  return cell_id(r, c);
}

struct ForageWorld {
  std::array<int, 4> pellets{};       // current pellet cells, one entry each
  std::array<int, 4> respawn_base{};  // seeded respawn anchor per room 1..4
};

// Where an eaten pellet reappears: diagonally opposite room, first free
// cell scanning from that room's respawn anchor.
int respawn_cell(int eaten_cell, int agent_cell,
                 const std::array<int, 4>& pellets, int eaten_index,
                 const std::array<int, 4>& respawn_base) {
  const int target_room = 5 - block_room(eaten_cell);
  const auto& cells = room_cells(target_room);
  const int anchor = respawn_base[target_room - 1];
  int start = 0;
  for (int i = 0; i < 16; ++i) {
    if (cells[i] == anchor) {
      start = i;
      break;
    }
  }
  for (int k = 0; k < 16; ++k) {
    const int cell = cells[(start + k) % 16];
    if (cell == agent_cell) continue;
    bool taken = false;
    for (int i = 0; i < 4; ++i) {
      if (i != eaten_index && pellets[i] == cell) taken = true;
    }
    if (!taken) return cell;
  }
  throw std::logic_error("respawn: no free cell in room");  // unreachable
}

struct ForageTransition {
  int agent = 0;
  std::array<int, 4> pellets{};
  double reward = 0.0;
};

// Agent movement and pellet dynamics, shared by the live environment and
// the DP oracle. Hazard contact is applied by the caller.
ForageTransition forage_move(int agent, const std::array<int, 4>& pellets,
                             const std::array<int, 4>& respawn_base,
                             int action) {
  ForageTransition t;
  t.agent = moved_cell(agent, action);
  t.pellets = pellets;
  for (int i = 0; i < 4; ++i) {
    if (t.pellets[i] == t.agent) {
      t.reward += 1.0;
      t.pellets[i] =
          respawn_cell(t.pellets[i], t.agent, t.pellets, i, respawn_base);
      break;  // pellet cells are unique, at most one eat per step
    }
  }
  return t;
}

class FourRoomsForage final : public Environment {
 public:
  explicit FourRoomsForage(const EnvOverrides& overrides)
      : hazard_enabled_(!overrides.disable_hazard) {}

  const EnvSpec& spec() const override { return forage_spec(); }

  StateObs reset(std::uint64_t seed) override {
    SeededRng layout_rng(stream_seed(seed, "layout"));
    hazard_rng_ = SeededRng(stream_seed(seed, "hazard"));

    agent_ = cell_id(1, 1);
    for (int room = 1; room <= 4; ++room) {
      const auto& cells = room_cells(room);
      int idx = layout_rng.uniform_int(16);
      while (occupied_at_reset(cells[idx], room - 1)) idx = (idx + 1) % 16;
      world_.pellets[room - 1] = cells[idx];
    }
    for (int room = 1; room <= 4; ++room) {
      world_.respawn_base[room - 1] = room_cells(room)[layout_rng.uniform_int(16)];
    }

    hazard_path_.clear();
    if (hazard_enabled_) {
      const std::vector<int>& cells = hazard_cells();
      hazard_path_.push_back(
          cells[hazard_rng_.uniform_int(static_cast<int>(cells.size()))]);
    }

    state_ = StateObs{
        encode_forage_observation(agent_, world_.pellets,
                                  hazard_enabled_ ? hazard_path_[0] : -1),
        0, false};
    return state_;
  }

  StepResult step(int action) override {
    if (state_.done) throw std::logic_error("step on a done state");
    if (action < 0 || action >= 4)
      throw std::invalid_argument("action out of range");

    ForageTransition t =
        forage_move(agent_, world_.pellets, world_.respawn_base, action);
    agent_ = t.agent;
    world_.pellets = t.pellets;
    double reward = t.reward;

    int hazard = -1;
    if (hazard_enabled_) {
      hazard = hazard_at(state_.step_index + 1);
      if (agent_ == hazard) reward -= 1.0;
    }

    state_.state_id = encode_forage_observation(agent_, world_.pellets, hazard);
    state_.step_index += 1;
    state_.done = state_.step_index >= kForageMaxSteps;
    return StepResult{state_, reward, state_.done};
  }

  StateObs current() const override { return state_; }

  // Glyphs: 'A' agent, 'o' pellet, 'H' hazard, '#' wall, '.' floor.
  // Precedence A > o > H, so all four pellets are always visible.
  std::string render() const override {
    std::string grid;
    grid.reserve(kGrid * (kGrid + 1));
    const int hazard =
        hazard_enabled_ && !hazard_path_.empty()
            ? hazard_path_[std::min<std::size_t>(state_.step_index,
                                                 hazard_path_.size() - 1)]
            : -1;
    for (int r = 0; r < kGrid; ++r) {
      for (int c = 0; c < kGrid; ++c) {
        const int cell = cell_id(r, c);
        char glyph = is_wall(r, c) ? '#' : '.';
        if (cell == hazard) glyph = 'H';
        for (int p : world_.pellets)
          if (p == cell) glyph = 'o';
        if (cell == agent_) glyph = 'A';
        grid.push_back(glyph);
      }
      grid.push_back('\n');
    }
    return grid;
  }

  const ForageWorld& world() const { return world_; }
  int agent_cell() const { return agent_; }
  bool hazard_enabled() const { return hazard_enabled_; }

 private:
  bool occupied_at_reset(int cell, int pellets_placed) const {
    if (cell == agent_) return true;
    for (int i = 0; i < pellets_placed; ++i)
      if (world_.pellets[i] == cell) return true;
    return false;
  }

  static const std::vector<int>& hazard_cells() {
    static const std::vector<int> cells = [] {
      std::vector<int> out;
      for (int r = 5; r < kGrid; ++r)
        for (int c = 0; c < kGrid; ++c)
          if (!is_wall(r, c)) out.push_back(cell_id(r, c));
      return out;
    }();
    return cells;
  }

  // Hazard position after `t` environment steps, extended lazily from the
  // dedicated stream. Blocked moves (walls, leaving rows >= 5) stay put.
  int hazard_at(int t) {
    while (static_cast<int>(hazard_path_.size()) <= t) {
      const int from = hazard_path_.back();
      const int dir = hazard_rng_.uniform_int(4);
      const int to = moved_cell(from, dir);
      hazard_path_.push_back(row_of(to) >= 5 ? to : from);
    }
    return hazard_path_[t];
  }

  bool hazard_enabled_;
  int agent_ = cell_id(1, 1);
  ForageWorld world_{};
  std::vector<int> hazard_path_;
  SeededRng hazard_rng_{0};
  StateObs state_{0, 0, false};
};

// ---------------------------------------------------------------------------
// DP oracle
// ---------------------------------------------------------------------------

double corridor_optimal_return(double gamma) {
  // Backward induction over (position, steps left). The horizon never
  // binds (11 transitions reach the terminal) but is modeled anyway.
  std::vector<double> value(kCorridorTerminal + 1, 0.0);
  for (int steps_left = 1; steps_left <= kCorridorMaxSteps; ++steps_left) {
    std::vector<double> next(kCorridorTerminal + 1, 0.0);
    for (int pos = 0; pos < kCorridorTerminal; ++pos) {
      double best = -1.0;
      for (int action = 0; action < 2; ++action) {
        const double reward =
            (pos <= 5 && action == 0) || (pos >= 6 && action == 1) ? 1.0 : 0.0;
        const double v = reward + gamma * value[pos + 1];
        best = std::max(best, v);
      }
      next[pos] = best;
    }
    value = next;
  }
  return value[0];
}

struct ForageDpKey {
  int agent;
  std::array<int, 4> pellets;
  int steps_left;
  bool operator==(const ForageDpKey&) const = default;
};

struct ForageDpKeyHash {
  std::size_t operator()(const ForageDpKey& k) const {
    std::uint64_t h = static_cast<std::uint64_t>(k.agent);
    for (int p : k.pellets) h = splitmix64(h ^ static_cast<std::uint64_t>(p));
    return splitmix64(h ^ static_cast<std::uint64_t>(k.steps_left));
  }
};

double forage_optimal_return(double gamma, std::uint64_t seed) {
  FourRoomsForage env(EnvOverrides{.disable_hazard = true});
  env.reset(seed);
  const ForageWorld world = env.world();

  // Memoized finite-horizon DP over (agent, pellet set, steps left).
  // Pellet identity is irrelevant to the dynamics, so keys sort pellets.
  // Recursion depth is bounded by the horizon.
  std::unordered_map<ForageDpKey, double, ForageDpKeyHash> memo;
  auto value = [&](auto&& self, int agent, const std::array<int, 4>& pellets,
                   int steps_left) -> double {
    if (steps_left == 0) return 0.0;
    std::array<int, 4> sorted = pellets;
    std::sort(sorted.begin(), sorted.end());
    const ForageDpKey key{agent, sorted, steps_left};
    if (auto it = memo.find(key); it != memo.end()) return it->second;
    double best = -std::numeric_limits<double>::infinity();
    for (int action = 0; action < 4; ++action) {
      ForageTransition t = forage_move(agent, sorted, world.respawn_base, action);
      best = std::max(best,
                      t.reward + gamma * self(self, t.agent, t.pellets,
                                              steps_left - 1));
    }
    memo[key] = best;
    return best;
  };

  return value(value, env.agent_cell(), world.pellets, kForageMaxSteps);
}

}  // namespace

std::unique_ptr<Environment> make_environment(const std::string& name,
                                              const EnvOverrides& overrides) {
  if (name == "two-zone-corridor") return std::make_unique<TwoZoneCorridor>();
  if (name == "four-rooms-forage")
    return std::make_unique<FourRoomsForage>(overrides);
  throw std::invalid_argument("unknown environment: " + name);
}

const EnvSpec& env_spec(const std::string& name) {
  if (name == "two-zone-corridor") return corridor_spec();
  if (name == "four-rooms-forage") return forage_spec();
  throw std::invalid_argument("unknown environment: " + name);
}

bool is_registered_env(const std::string& name) {
  return name == "two-zone-corridor" || name == "four-rooms-forage";
}

std::vector<std::string> registered_env_names() {
  return {"two-zone-corridor", "four-rooms-forage"};
}

double dp_optimal_return(const std::string& name, double gamma,
                         std::uint64_t seed, const EnvOverrides& overrides) {
  if (gamma < 0.0 || gamma > 1.0)
    throw std::invalid_argument("gamma must lie in [0, 1]");
  if (name == "two-zone-corridor") return corridor_optimal_return(gamma);
  if (name == "four-rooms-forage") {
    if (!overrides.disable_hazard)
      throw std::invalid_argument(
          "dp_optimal_return: four-rooms-forage requires the hazard disabled");
    return forage_optimal_return(gamma, seed);
  }
  throw std::invalid_argument("unknown environment: " + name);
}

int observation_state_count(const std::string& name) {
  if (name == "two-zone-corridor") return kCorridorTerminal + 1;
  if (name == "four-rooms-forage") return kGrid * kGrid * kForageObsPerCell;
  throw std::invalid_argument("unknown environment: " + name);
}

int four_rooms_cell_of_observation(int state_id) {
  const int cell = state_id / kForageObsPerCell;
  if (state_id < 0 || cell >= kGrid * kGrid)
    throw std::invalid_argument("observation out of range");
  return cell;
}

int four_rooms_room_of_cell(int cell) {
  if (cell < 0 || cell >= kGrid * kGrid)
    throw std::invalid_argument("cell out of range");
  const int r = row_of(cell), c = col_of(cell);
  if (is_wall(r, c)) throw std::invalid_argument("cell is a wall");
  return 1 + (r >= 4 ? 2 : 0) + (c >= 4 ? 1 : 0);
}

}  // namespace llmens
