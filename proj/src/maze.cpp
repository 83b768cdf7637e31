#include "ces/maze.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "ces/format.hpp"
#include "ces/mazes_builtin.hpp"

namespace ces {

double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
double norm(Vec2 a) { return std::hypot(a.x, a.y); }

namespace {

constexpr double kParallelTol = 1e-14;
// Slack on the segment parameter so that motions through a shared wall
// endpoint still register a contact.
constexpr double kEndpointSlack = 1e-12;
// Every recorded position keeps at least this distance to all segments.
constexpr double kMinClearance = 1e-9;

// Collinear ray against a segment lying on the ray's line: first point of the
// segment at or beyond the origin.
double collinear_hit(Vec2 origin, Vec2 dir, const Segment& s) {
  const double dd = dot(dir, dir);
  const double ta = dot(s.a - origin, dir) / dd;
  const double tb = dot(s.b - origin, dir) / dd;
  const double lo = std::min(ta, tb);
  const double hi = std::max(ta, tb);
  if (hi < 0.0) return -1.0;
  return lo >= 0.0 ? lo : 0.0;
}

}  // namespace

double ray_segment_hit(Vec2 origin, Vec2 dir, const Segment& s) {
  const Vec2 e = s.b - s.a;
  const Vec2 w = s.a - origin;
  const double denom = cross(dir, e);
  const double scale = norm(dir) * norm(e);
  if (std::abs(denom) <= kParallelTol * scale) {
    if (std::abs(cross(w, dir)) <= kParallelTol * norm(w) * norm(dir) || norm(w) == 0.0) {
      return collinear_hit(origin, dir, s);
    }
    return -1.0;
  }
  const double t = cross(w, e) / denom;
  const double u = cross(w, dir) / denom;
  if (t < 0.0 || u < -kEndpointSlack || u > 1.0 + kEndpointSlack) return -1.0;
  return t;
}

bool segments_touch(const Segment& p, const Segment& q) {
  auto orient = [](Vec2 a, Vec2 b, Vec2 c) {
    const double v = cross(b - a, c - a);
    return (v > 0.0) - (v < 0.0);
  };
  auto on_segment = [](Vec2 a, Vec2 b, Vec2 c) {  // c collinear with ab
    return std::min(a.x, b.x) <= c.x && c.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= c.y &&
           c.y <= std::max(a.y, b.y);
  };
  const int o1 = orient(p.a, p.b, q.a);
  const int o2 = orient(p.a, p.b, q.b);
  const int o3 = orient(q.a, q.b, p.a);
  const int o4 = orient(q.a, q.b, p.b);
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && on_segment(p.a, p.b, q.a)) return true;
  if (o2 == 0 && on_segment(p.a, p.b, q.b)) return true;
  if (o3 == 0 && on_segment(q.a, q.b, p.a)) return true;
  if (o4 == 0 && on_segment(q.a, q.b, p.b)) return true;
  return false;
}

double point_segment_distance(Vec2 p, const Segment& s) {
  const Vec2 e = s.b - s.a;
  const double len2 = dot(e, e);
  double u = len2 > 0.0 ? dot(p - s.a, e) / len2 : 0.0;
  u = std::clamp(u, 0.0, 1.0);
  return norm(p - (s.a + e * u));
}

Maze::Maze(MazeSpec spec) : spec_(std::move(spec)) {
  const Bounds& b = spec_.bounds;
  if (!(b.hi.x > b.lo.x && b.hi.y > b.lo.y)) throw std::invalid_argument("maze: empty bounds");
  if (!(spec_.goal_threshold > 0.0)) throw std::invalid_argument("maze: goal threshold must be > 0");
  if (spec_.horizon < 1) throw std::invalid_argument("maze: horizon must be >= 1");
  segments_ = spec_.walls;
  segments_.push_back({{b.lo.x, b.lo.y}, {b.hi.x, b.lo.y}});
  segments_.push_back({{b.hi.x, b.lo.y}, {b.hi.x, b.hi.y}});
  segments_.push_back({{b.hi.x, b.hi.y}, {b.lo.x, b.hi.y}});
  segments_.push_back({{b.lo.x, b.hi.y}, {b.lo.x, b.lo.y}});
  for (const Vec2 p : {spec_.start, spec_.goal}) {
    if (!b.contains(p)) throw std::invalid_argument("maze: start/goal outside bounds");
    for (const Segment& s : segments_) {
      if (point_segment_distance(p, s) < spec_.dynamics.collision_epsilon) {
        throw std::invalid_argument("maze: start/goal lies on a wall");
      }
    }
  }

  obs_offset_.assign(kStateDim, 0.0);
  obs_scale_.assign(kStateDim, 1.0);
  obs_offset_[0] = 0.5 * (b.lo.x + b.hi.x);
  obs_offset_[1] = 0.5 * (b.lo.y + b.hi.y);
  obs_scale_[0] = 2.0 / b.width();
  obs_scale_[1] = 2.0 / b.height();
  obs_scale_[2] = obs_scale_[3] = 1.0 / spec_.dynamics.max_speed;
  for (std::size_t i = 4; i < kStateDim; ++i) obs_scale_[i] = 1.0 / spec_.dynamics.lidar_range;
}

void Maze::normalize(std::span<const double> state, std::span<double> out) const {
  if (state.size() != kStateDim || out.size() != kStateDim) {
    throw std::invalid_argument("Maze::normalize: state must have 36 entries");
  }
  for (std::size_t i = 0; i < kStateDim; ++i) out[i] = (state[i] - obs_offset_[i]) * obs_scale_[i];
}

std::vector<double> EnvState::observation() const {
  std::vector<double> s(kStateDim);
  s[0] = position.x;
  s[1] = position.y;
  s[2] = velocity.x;
  s[3] = velocity.y;
  std::copy(lidar.begin(), lidar.end(), s.begin() + 4);
  return s;
}

std::array<double, kLidarBeams> lidar_scan(const Maze& maze, Vec2 position) {
  const MazeSpec& spec = maze.spec();
  if (!spec.bounds.contains(position)) throw std::domain_error("lidar_scan: position outside bounds");
  for (const Segment& s : maze.segments()) {
    if (point_segment_distance(position, s) < 1e-12) {
      throw std::domain_error("lidar_scan: position lies on a wall");
    }
  }
  std::array<double, kLidarBeams> beams{};
  for (std::size_t i = 0; i < kLidarBeams; ++i) {
    const double angle = 2.0 * std::numbers::pi * static_cast<double>(i) / kLidarBeams;
    const Vec2 dir{std::cos(angle), std::sin(angle)};
    double best = spec.dynamics.lidar_range;
    for (const Segment& s : maze.segments()) {
      const double t = ray_segment_hit(position, dir, s);
      if (t >= 0.0 && t < best) best = t;
    }
    beams[i] = best;
  }
  return beams;
}

EnvState reset(const Maze& maze) {
  EnvState s;
  s.position = maze.spec().start;
  s.lidar = lidar_scan(maze, s.position);
  return s;
}

StepResult step(const Maze& maze, const EnvState& state, Action action) {
  const MazeSpec& spec = maze.spec();
  const Dynamics& dyn = spec.dynamics;
  if (state.done || state.t >= spec.horizon) throw std::logic_error("step: episode already terminated");
  if (!std::isfinite(action.ax) || !std::isfinite(action.ay)) {
    throw std::invalid_argument("step: non-finite action");
  }
  const double ax = std::clamp(action.ax, -dyn.max_acceleration, dyn.max_acceleration);
  const double ay = std::clamp(action.ay, -dyn.max_acceleration, dyn.max_acceleration);

  StepResult out;
  EnvState& next = out.state;
  next.velocity = {std::clamp(state.velocity.x + ax * dyn.dt, -dyn.max_speed, dyn.max_speed),
                   std::clamp(state.velocity.y + ay * dyn.dt, -dyn.max_speed, dyn.max_speed)};
  const Vec2 from = state.position;
  const Vec2 motion = next.velocity * dyn.dt;
  const double length = norm(motion);
  next.position = from + motion;

  if (length > 0.0) {
    double first = std::numeric_limits<double>::infinity();
    for (const Segment& s : maze.segments()) {
      const double t = ray_segment_hit(from, motion, s);
      if (t >= 0.0 && t <= 1.0 + kEndpointSlack && t < first) first = t;
    }
    if (std::isfinite(first)) {
      const double travel = std::max(0.0, first * length - dyn.collision_epsilon);
      Vec2 stop = from + motion * (travel / length);
      // Guard against rounding leaving the stop point on or past a wall.
      if (travel > 0.0) {
        for (const Segment& s : maze.segments()) {
          if (segments_touch({from, stop}, s) || point_segment_distance(stop, s) < kMinClearance) {
            stop = from;
            break;
          }
        }
      } else {
        stop = from;
      }
      next.position = stop;
      next.velocity = {0.0, 0.0};
    }
  }

  next.lidar = lidar_scan(maze, next.position);
  next.t = state.t + 1;
  const Vec2 to_goal = next.position - spec.goal;
  if (norm(to_goal) < spec.goal_threshold) {
    out.reward = 1.0 - static_cast<double>(state.t) / spec.horizon;
    out.done = true;
  } else if (next.t >= spec.horizon) {
    out.done = true;
  }
  next.done = out.done;
  return out;
}

RolloutResult rollout(const Maze& maze, const Network& policy) {
  if (policy.input_dim() != kStateDim || policy.output_dim() != kActionDim) {
    throw std::invalid_argument("rollout: policy must map 36 inputs to 2 outputs");
  }
  RolloutResult result;
  Trajectory& traj = result.trajectory;
  traj.transitions.reserve(static_cast<std::size_t>(maze.horizon()));
  traj.rewards.reserve(static_cast<std::size_t>(maze.horizon()));

  EnvState state = reset(maze);
  std::vector<double> obs = state.observation();
  std::vector<double> input(kStateDim);
  const double a_max = maze.spec().dynamics.max_acceleration;
  while (true) {
    maze.normalize(obs, input);
    const std::vector<double> out = policy.forward(input);
    const Action action{std::clamp(out[0], -a_max, a_max), std::clamp(out[1], -a_max, a_max)};
    StepResult r = step(maze, state, action);
    std::vector<double> next_obs = r.state.observation();
    traj.transitions.push_back({obs, {action.ax, action.ay}, next_obs});
    traj.rewards.push_back(r.reward);
    result.extrinsic_fitness += r.reward;
    if (r.reward > 0.0) traj.reached_goal = true;
    state = r.state;
    obs = std::move(next_obs);
    if (r.done) break;
  }
  return result;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory) {
  out << "t,x,y,v_x,v_y,a_x,a_y,reward\n";
  for (std::size_t t = 0; t < trajectory.size(); ++t) {
    const Transition& tr = trajectory.transitions[t];
    out << t << ',' << format_double(tr.state[0]) << ',' << format_double(tr.state[1]) << ','
        << format_double(tr.state[2]) << ',' << format_double(tr.state[3]) << ','
        << format_double(tr.action[0]) << ',' << format_double(tr.action[1]) << ','
        << format_double(trajectory.rewards[t]) << '\n';
  }
  if (!trajectory.empty()) {
    // Terminal state row: no action is taken from it.
    const auto s = trajectory.final_state();
    out << trajectory.size() << ',' << format_double(s[0]) << ',' << format_double(s[1]) << ','
        << format_double(s[2]) << ',' << format_double(s[3]) << ",,,\n";
  }
}

namespace {

double parse_number(std::string_view token, int line) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc() || ptr != token.data() + token.size() || !std::isfinite(v)) {
    throw std::invalid_argument("maze line " + std::to_string(line) + ": bad number '" +
                                std::string(token) + "'");
  }
  return v;
}

}  // namespace

MazeSpec parse_maze(std::string_view text, std::string name) {
  MazeSpec spec;
  spec.name = std::move(name);
  bool have_start = false, have_goal = false;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    if (const auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    std::istringstream words(raw);
    std::vector<std::string> tok;
    for (std::string w; words >> w;) tok.push_back(w);
    if (tok.empty()) continue;
    auto expect = [&](std::size_t n) {
      if (tok.size() != n + 1) {
        throw std::invalid_argument("maze line " + std::to_string(line_no) + ": '" + tok[0] +
                                    "' takes " + std::to_string(n) + " values");
      }
    };
    auto num = [&](std::size_t i) { return parse_number(tok[i], line_no); };
    const std::string& key = tok[0];
    if (key == "wall") {
      expect(4);
      spec.walls.push_back({{num(1), num(2)}, {num(3), num(4)}});
    } else if (key == "start") {
      expect(2);
      spec.start = {num(1), num(2)};
      have_start = true;
    } else if (key == "goal") {
      expect(3);
      spec.goal = {num(1), num(2)};
      spec.goal_threshold = num(3);
      have_goal = true;
    } else if (key == "bounds") {
      expect(4);
      spec.bounds = {{std::min(num(1), num(3)), std::min(num(2), num(4))},
                     {std::max(num(1), num(3)), std::max(num(2), num(4))}};
    } else if (key == "horizon") {
      expect(1);
      const double h = num(1);
      if (h < 1 || h != std::floor(h)) {
        throw std::invalid_argument("maze line " + std::to_string(line_no) + ": horizon must be a positive integer");
      }
      spec.horizon = static_cast<int>(h);
    } else {
      throw std::invalid_argument("maze line " + std::to_string(line_no) + ": unknown keyword '" + key + "'");
    }
  }
  if (!have_start || !have_goal) throw std::invalid_argument("maze: missing start or goal");
  Maze check(spec);  // validates geometry
  return spec;
}

MazeSpec load_maze_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read maze file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_maze(buffer.str(), path.stem().string());
}

std::string format_maze(const MazeSpec& spec) {
  std::ostringstream out;
  out << "# " << spec.name << '\n';
  out << "bounds " << format_double(spec.bounds.lo.x) << ' ' << format_double(spec.bounds.lo.y) << ' '
      << format_double(spec.bounds.hi.x) << ' ' << format_double(spec.bounds.hi.y) << '\n';
  out << "start " << format_double(spec.start.x) << ' ' << format_double(spec.start.y) << '\n';
  out << "goal " << format_double(spec.goal.x) << ' ' << format_double(spec.goal.y) << ' '
      << format_double(spec.goal_threshold) << '\n';
  out << "horizon " << spec.horizon << '\n';
  for (const Segment& w : spec.walls) {
    out << "wall " << format_double(w.a.x) << ' ' << format_double(w.a.y) << ' ' << format_double(w.b.x)
        << ' ' << format_double(w.b.y) << '\n';
  }
  return out.str();
}

std::vector<std::string> builtin_maze_names() { return {"snake", "us", "hard"}; }

std::string_view builtin_maze_text(std::string_view name) {
  if (name == "snake") return mazes::kSnake;
  if (name == "us") return mazes::kUs;
  if (name == "hard") return mazes::kHard;
  throw std::invalid_argument("unknown builtin maze: " + std::string(name));
}

MazeSpec builtin_maze(std::string_view name) {
  return parse_maze(builtin_maze_text(name), std::string(name));
}

MazeSpec resolve_maze(const std::string& name_or_path) {
  for (const std::string& n : builtin_maze_names()) {
    if (n == name_or_path) return builtin_maze(n);
  }
  return load_maze_file(name_or_path);
}

Network make_policy_network() {
  const std::size_t hidden[] = {64, 64};
  return Network::mlp(kStateDim, hidden, kActionDim, Activation::tanh, Activation::linear);
}

}  // namespace ces
