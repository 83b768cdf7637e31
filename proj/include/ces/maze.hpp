#pragma once

// Deterministic 2D point-mass maze with segment walls and a 32-beam LIDAR.
// Observations are s = (x, y, v_x, v_y, n_0 .. n_31) in world units.

#include <array>
#include <cstddef>
#include <filesystem>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ces/tensor.hpp"

namespace ces {

inline constexpr std::size_t kLidarBeams = 32;
inline constexpr std::size_t kStateDim = 4 + kLidarBeams;
inline constexpr std::size_t kActionDim = 2;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  bool operator==(const Vec2&) const = default;
};

double dot(Vec2 a, Vec2 b);
double cross(Vec2 a, Vec2 b);
double norm(Vec2 a);

struct Segment {
  Vec2 a;
  Vec2 b;
  bool operator==(const Segment&) const = default;
};

struct Bounds {
  Vec2 lo;
  Vec2 hi;

  bool contains(Vec2 p) const { return p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y; }
  double width() const { return hi.x - lo.x; }
  double height() const { return hi.y - lo.y; }
  bool operator==(const Bounds&) const = default;
};

struct Dynamics {
  double dt = 1.0;
  double max_acceleration = 1.0;
  double max_speed = 3.0;  // per velocity component
  double lidar_range = 100.0;
  double collision_epsilon = 1e-3;
};

struct MazeSpec {
  std::string name;
  std::vector<Segment> walls;
  Vec2 start;
  Vec2 goal;
  double goal_threshold = 2.0;
  int horizon = 500;
  Bounds bounds{{0.0, 0.0}, {70.0, 70.0}};
  Dynamics dynamics;
};

// Validated maze with the collision geometry (walls plus the four bound
// edges) precomputed. Immutable after construction and safe to share.
class Maze {
 public:
  explicit Maze(MazeSpec spec);

  const MazeSpec& spec() const { return spec_; }
  std::span<const Segment> segments() const { return segments_; }
  int horizon() const { return spec_.horizon; }

  // Observation normalisation used by networks reading this maze's states:
  // positions to [-1, 1] over the bounds, velocities by max_speed, beams by
  // lidar_range. normalized = (s - offset) * scale.
  std::span<const double> observation_offset() const { return obs_offset_; }
  std::span<const double> observation_scale() const { return obs_scale_; }
  void normalize(std::span<const double> state, std::span<double> out) const;

 private:
  MazeSpec spec_;
  std::vector<Segment> segments_;
  std::vector<double> obs_offset_;
  std::vector<double> obs_scale_;
};

struct EnvState {
  Vec2 position;
  Vec2 velocity;
  std::array<double, kLidarBeams> lidar{};
  int t = 0;
  bool done = false;

  std::vector<double> observation() const;
};

struct Action {
  double ax = 0.0;
  double ay = 0.0;
};

struct StepResult {
  EnvState state;
  double reward = 0.0;
  bool done = false;
};

struct Transition {
  std::vector<double> state;
  std::vector<double> action;
  std::vector<double> next_state;
};

struct Trajectory {
  std::vector<Transition> transitions;
  std::vector<double> rewards;
  bool reached_goal = false;

  std::size_t size() const { return transitions.size(); }
  bool empty() const { return transitions.empty(); }
  // Final observed state (the last next_state).
  std::span<const double> final_state() const { return transitions.back().next_state; }
};

struct RolloutResult {
  Trajectory trajectory;
  double extrinsic_fitness = 0.0;
};

// Distance along a ray from origin in direction dir (need not be unit) to the
// segment, in multiples of |dir|; negative if there is no hit.
double ray_segment_hit(Vec2 origin, Vec2 dir, const Segment& s);

// True if the closed segments p and q share any point.
bool segments_touch(const Segment& p, const Segment& q);

double point_segment_distance(Vec2 p, const Segment& s);

// Beam i points at angle 2*pi*i/32 from +x; each value is the distance to the
// nearest wall or bound edge, capped at lidar_range.
std::array<double, kLidarBeams> lidar_scan(const Maze& maze, Vec2 position);

EnvState reset(const Maze& maze);

// One control step. The action is clamped to the acceleration box, velocity
// components are clipped to max_speed, and a motion that would cross a wall
// stops just short of the first contact with zero velocity. The reward is
// 1 - t/T when the new position lies within goal_threshold of the goal.
StepResult step(const Maze& maze, const EnvState& state, Action action);

// Full episode from the start state; the policy sees normalised observations.
RolloutResult rollout(const Maze& maze, const Network& policy);

void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory);

// Text format: `wall x1 y1 x2 y2`, `start x y`, `goal x y r`,
// `bounds x1 y1 x2 y2`, `horizon T`; `#` starts a comment.
MazeSpec parse_maze(std::string_view text, std::string name = "custom");
MazeSpec load_maze_file(const std::filesystem::path& path);
std::string format_maze(const MazeSpec& spec);

// Shipped mazes: "snake", "us", "hard".
std::vector<std::string> builtin_maze_names();
std::string_view builtin_maze_text(std::string_view name);
MazeSpec builtin_maze(std::string_view name);

// Builtin name or path to a maze file.
MazeSpec resolve_maze(const std::string& name_or_path);

Network make_policy_network();

}  // namespace ces
