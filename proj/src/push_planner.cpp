#include "cit/push_planner.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace cit::push {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Lattice displacements (in cells) for one push, relative to the push frame.
std::vector<Cell> enumerate_displacements(const SemiEllipseMotionSet& ms, double resolution,
                                          double min_advance) {
  std::vector<Cell> out;
  const int reach = static_cast<int>(std::ceil(ms.d_con / resolution)) + 1;
  for (int j = -reach; j <= reach; ++j) {
    for (int i = -reach; i <= reach; ++i) {
      const Vec2 v{i * resolution, j * resolution};
      if (!ms.contains(v)) continue;
      if (dot(v, ms.push_direction) < min_advance - 1e-9) continue;
      out.push_back({i, j});
    }
  }
  return out;
}

// Heuristic terms for POA cell centers given relative to the cage center.
// When `pss_cells` is given, d_out is measured on the continuous disk union
// (PSS reach plus the object radius) so sub-cell escapes still score.
HeuristicTerms score_cells(const std::vector<Vec2>& cells, Vec2 radial, double line, double rho,
                           double cage_radius, double lambda1, double lambda2,
                           const std::vector<Vec2>* pss_cells = nullptr,
                           double object_radius = 0.0) {
  HeuristicTerms terms;
  std::size_t behind = 0;
  for (const Vec2 p : cells) {
    const double depth = dot(p, radial) - line;
    if (depth > 1e-9) {
      ++behind;
      terms.d_out = std::max(terms.d_out, depth);
    }
  }
  if (pss_cells != nullptr) {
    for (const Vec2 q : *pss_cells) {
      terms.d_out = std::max(terms.d_out, dot(q, radial) + object_radius - line);
    }
  }
  terms.s_out = static_cast<double>(behind) * rho * rho;
  const double cage_area = std::numbers::pi * cage_radius * cage_radius;
  const double depth_n = terms.d_out / cage_radius;
  terms.score = lambda1 * terms.s_out / cage_area + lambda2 * depth_n * depth_n;
  return terms;
}

std::vector<Vec2> relative_cells(const PSSGrid& grid, Vec2 origin) {
  std::vector<Vec2> cells;
  for (const Cell c : grid.occupied()) cells.push_back(grid.cell_center(c) - origin);
  return cells;
}

}  // namespace

int PushProblem::grid_size() const {
  int n = static_cast<int>(std::ceil(2.0 * (outer_radius() + d_push + 10.0) / resolution));
  if (n % 2 == 0) ++n;
  return n;
}

void PushProblem::validate() const {
  auto bad = [](const std::string& msg) { throw Error(ErrorCode::BadConfig, msg); };
  if (!(object_radius > 0.0)) bad("object_radius must be positive");
  if (!(cage_size > 0.0)) bad("cage_size must be positive");
  if (num_candidates < 3) bad("K must be at least 3");
  if (!(d_push > 0.0)) bad("d_push must be positive");
  if (!(pusher_length > 0.0)) bad("pusher_length must be positive");
  if (!(resolution > 0.0) || resolution > cage_size / 10.0 + 1e-12) {
    bad("resolution must be positive and at most cage_size / 10");
  }
  if (top_candidates < 1) bad("top_candidates must be at least 1");
  if (penetration_tolerance < 0.0) bad("penetration_tolerance must be non-negative");
  if (trajectory.empty()) bad("trajectory has no waypoints");
  if (enforce_waypoint_spacing) {
    for (std::size_t i = 1; i < trajectory.size(); ++i) {
      const double gap = distance(trajectory[i], trajectory[i - 1]);
      if (gap > cage_size / 2.0 + 1e-9) {
        std::ostringstream msg;
        msg << "waypoint spacing " << gap << " mm at index " << i << " exceeds cage_size/2 = "
            << cage_size / 2.0 << " mm";
        throw Error(ErrorCode::WaypointSpacingTooLarge, msg.str());
      }
    }
  }
}

double candidate_angle(int k, int num_candidates) {
  double theta = kTwoPi * static_cast<double>(k) / static_cast<double>(num_candidates);
  theta = std::fmod(theta, kTwoPi);
  return theta < 0.0 ? theta + kTwoPi : theta;
}

PusherPose pusher_pose(Vec2 cage_center_next, double outer_radius, double theta,
                       double half_length) {
  const Vec2 radial = unit_from_angle(theta);
  return {cage_center_next + outer_radius * radial, -radial, half_length};
}

double distance_to_segment(Vec2 q, const PusherPose& pose) {
  const Vec2 d = q - pose.center;
  const Vec2 t = pose.tangent();
  const double along = std::clamp(dot(d, t), -pose.half_length, pose.half_length);
  return distance(q, pose.center + along * t);
}

bool SemiEllipseMotionSet::contains(Vec2 v, double tol) const {
  if (is_null || d_con <= 0.0) return norm(v) <= tol;
  const double fwd = dot(v, push_direction);
  const double lat = cross(push_direction, v);
  if (fwd < -tol) return false;
  const double a = d_con;
  const double b = d_con / 2.0;
  return (fwd * fwd) / (a * a) + (lat * lat) / (b * b) <= 1.0 + tol;
}

SemiEllipseMotionSet motion_set(Vec2 q, const PusherPose& pose, double object_radius,
                                double d_push) {
  SemiEllipseMotionSet ms;
  ms.push_direction = pose.direction;
  // States behind the pusher line are never reached by a forward push.
  if (dot(q - pose.center, pose.direction) <= 0.0) return ms;
  const double dist = distance_to_segment(q, pose);
  if (dist > object_radius + d_push) return ms;
  ms.d_con = std::clamp(d_push - std::max(0.0, dist - object_radius), 0.0, d_push);
  ms.is_null = false;
  return ms;
}

PSSGrid propagate_pss(const PSSGrid& pss, std::optional<double> theta,
                      Vec2 cage_center_next, const PushProblem& problem) {
  if (pss.empty()) throw Error(ErrorCode::EmptyResult, "cannot propagate an empty set");
  if (!theta) return pss.recentered(cage_center_next);

  PSSGrid out(pss.width(), pss.height(), pss.resolution(), cage_center_next);
  out.add_clipped(pss.clipped());
  const PusherPose pose = pusher_pose(cage_center_next, problem.outer_radius(), *theta,
                                      problem.pusher_length / 2.0);
  const double rho = pss.resolution();

  for (const Cell c : pss.occupied()) {
    const Vec2 q = pss.cell_center(c);
    const auto ms = motion_set(q, pose, problem.object_radius, problem.d_push);
    if (ms.is_null) {
      out.mark(q);
      continue;
    }
    const double min_advance = ms.d_con - problem.penetration_tolerance;
    for (const Cell d : enumerate_displacements(ms, rho, min_advance)) {
      out.mark(q + Vec2{d.col * rho, d.row * rho});
    }
  }
  if (out.empty() && out.clipped() == 0) {
    throw Error(ErrorCode::EmptyResult, "penetration cut removed every state");
  }
  return out;
}

POA compute_poa(const PSSGrid& pss, double object_radius) {
  const int w = pss.width();
  const int h = pss.height();
  POA poa{PSSGrid(w, h, pss.resolution(), pss.frame_center())};
  const int rad = static_cast<int>(std::ceil(object_radius / pss.resolution() - 1e-9));
  const auto raw = pss.raw();

  // Row-wise 1D dilation with prefix sums, one pass per disk row offset.
  std::vector<int> prefix(static_cast<std::size_t>(w) + 1);
  for (int row = 0; row < h; ++row) {
    const std::uint8_t* src = raw.data() + static_cast<std::size_t>(row) * w;
    prefix[0] = 0;
    for (int col = 0; col < w; ++col) prefix[col + 1] = prefix[col] + src[col];
    if (prefix[w] == 0) continue;
    for (int dy = -rad; dy <= rad; ++dy) {
      const int out_row = row + dy;
      if (out_row < 0 || out_row >= h) continue;
      const int half = static_cast<int>(std::floor(std::sqrt(double(rad * rad - dy * dy))));
      for (int col = 0; col < w; ++col) {
        if (poa.grid.at({col, out_row})) continue;
        const int lo = std::max(0, col - half);
        const int hi = std::min(w - 1, col + half);
        if (prefix[hi + 1] - prefix[lo] > 0) poa.grid.set({col, out_row}, true);
      }
    }
  }
  return poa;
}

HeuristicTerms heuristic_terms(const POA& poa, double theta, const CageCircle& cage_next,
                               double object_radius, double lambda1, double lambda2) {
  return score_cells(relative_cells(poa.grid, cage_next.center), unit_from_angle(theta),
                     cage_next.radius + object_radius, poa.grid.resolution(), cage_next.radius,
                     lambda1, lambda2);
}

double angular_distance(double a, double b) {
  double d = std::fmod(std::fabs(a - b), kTwoPi);
  return d > std::numbers::pi ? kTwoPi - d : d;
}

std::vector<PushAngle> ranked_pushes(const PSSGrid& pss, const PushProblem& problem,
                                    const CageCircle& cage_next,
                                    std::optional<double> prev_action) {
  const POA poa = compute_poa(pss, problem.object_radius);
  const std::vector<Vec2> cells = relative_cells(poa.grid, cage_next.center);
  const std::vector<Vec2> pss_cells = relative_cells(pss, cage_next.center);
  const int K = problem.num_candidates;
  struct Scored {
    int k;
    double theta;
    double score;
  };
  std::vector<Scored> scored;
  scored.reserve(static_cast<std::size_t>(K));
  for (int k = 1; k <= K; ++k) {
    const double theta = candidate_angle(k, K);
    const auto terms = score_cells(cells, unit_from_angle(theta),
                                   cage_next.radius + problem.object_radius,
                                   poa.grid.resolution(), cage_next.radius, problem.lambda1,
                                   problem.lambda2, &pss_cells, problem.object_radius);
    scored.push_back({k, theta, terms.score});
  }

  // Highest score first, ties to the lower index.
  std::stable_sort(scored.begin(), scored.end(),
                   [](const Scored& a, const Scored& b) { return a.score > b.score; });
  // Candidates that leave no POA behind the pusher do not compete for the top slots.
  std::size_t top = std::min(scored.size(), static_cast<std::size_t>(problem.top_candidates));
  while (top > 1 && !(scored[top - 1].score > 0.0)) --top;
  if (prev_action) {
    std::stable_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(top),
                     [&](const Scored& a, const Scored& b) {
                       const double ga = angular_distance(a.theta, *prev_action);
                       const double gb = angular_distance(b.theta, *prev_action);
                       if (std::fabs(ga - gb) > 1e-12) return ga < gb;
                       return a.k < b.k;
                     });
  }
  std::vector<PushAngle> out;
  out.reserve(scored.size());
  for (const auto& s : scored) out.push_back({s.theta, s.k});
  return out;
}

std::optional<PushAngle> find_push(const PSSGrid& pss, const PushProblem& problem,
                                   const CageCircle& cage_next,
                                   std::optional<double> prev_action) {
  if (contains_geometric(pss, cage_next)) return std::nullopt;
  const auto ranked = ranked_pushes(pss, problem, cage_next, prev_action);
  if (!problem.lookahead) return ranked.front();
  for (const auto& cand : ranked) {
    const PSSGrid next = propagate_pss(pss, cand.theta, cage_next.center, problem);
    if (contains_geometric(next, cage_next)) return cand;
  }
  return ranked.front();
}

PSSGrid initial_pss(const PushProblem& problem, Vec2 initial_position) {
  const int n = problem.grid_size();
  PSSGrid grid(n, n, problem.resolution, problem.trajectory.front());
  grid.mark(initial_position);
  return grid;
}

PushPlan plan_push(const PushProblem& problem, Vec2 initial_position) {
  problem.validate();
  const auto& traj = problem.trajectory;
  if (distance(initial_position, traj.front()) > problem.cage_size + 1e-9) {
    throw Error(ErrorCode::BadConfig, "initial position lies outside the first cage");
  }

  // Depth-first over steps. Each frame holds the set before step t and the
  // options still untried there; options are ranked lazily on first visit.
  struct Frame {
    PSSGrid pss;
    std::optional<double> prev;
    std::vector<std::optional<PushAngle>> options;
    std::size_t next = 0;
    bool ranked = false;
  };
  const std::size_t steps = traj.size() - 1;
  std::vector<Frame> stack;
  stack.push_back({initial_pss(problem, initial_position), std::nullopt, {}, 0, false});
  std::vector<std::optional<PushAngle>> chosen;
  int backtracks = 0;
  std::size_t deepest = 0;
  std::vector<std::optional<PushAngle>> best_prefix;
  std::optional<PushAngle> best_fail_action;

  while (stack.size() <= steps) {
    Frame& f = stack.back();
    const std::size_t t = stack.size() - 1;
    const CageCircle cage_next{traj[t + 1], problem.cage_size};
    if (!f.ranked) {
      f.ranked = true;
      if (contains_geometric(f.pss, cage_next)) f.options.push_back(std::nullopt);
      if (problem.lookahead || f.options.empty()) {
        for (const auto& p : ranked_pushes(f.pss, problem, cage_next, f.prev)) {
          f.options.push_back(p);
          if (!problem.lookahead) break;
        }
      }
    }
    bool advanced = false;
    while (f.next < f.options.size()) {
      const auto opt = f.options[f.next++];
      PSSGrid next = propagate_pss(f.pss, opt ? std::optional<double>(opt->theta) : std::nullopt,
                                   traj[t + 1], problem);
      if (!contains_geometric(next, cage_next)) {
        if (!problem.lookahead) {
          f.next = f.options.size();
          if (t >= deepest) {
            deepest = t;
            best_prefix = chosen;
            best_fail_action = opt;
          }
          break;
        }
        continue;
      }
      chosen.push_back(opt);
      const std::optional<double> prev = opt ? std::optional<double>(opt->theta) : f.prev;
      stack.push_back({std::move(next), prev, {}, 0, false});
      advanced = true;
      break;
    }
    if (advanced) continue;
    if (t >= deepest) {
      deepest = t;
      best_prefix = chosen;
      best_fail_action = f.options.empty() ? std::nullopt : f.options.front();
    }
    if (stack.size() == 1 || backtracks >= problem.max_backtracks) break;
    ++backtracks;
    stack.pop_back();
    chosen.pop_back();
  }

  const bool success = stack.size() > steps;
  std::vector<std::optional<PushAngle>> sequence = success ? chosen : best_prefix;
  if (!success) sequence.push_back(best_fail_action);

  // Replay the chosen sequence to fill in the log and history.
  PushPlan plan;
  PSSGrid pss = initial_pss(problem, initial_position);
  plan.pss_history.push_back(pss);
  for (std::size_t t = 0; t < sequence.size(); ++t) {
    const CageCircle cage_next{traj[t + 1], problem.cage_size};
    const auto& push = sequence[t];
    pss = propagate_pss(pss, push ? std::optional<double>(push->theta) : std::nullopt,
                        traj[t + 1], problem);
    const bool contained = contains_geometric(pss, cage_next);

    RunLogRecord rec;
    rec.t = static_cast<int>(t);
    if (push) rec.action = *push;
    rec.contained = contained;
    rec.pss_cells = pss.count();
    rec.cage_center = cage_next.center;
    plan.log.push_back(rec);
    plan.actions.push_back(push ? Action{*push} : Action{NoAction{}});
    plan.pss_history.push_back(pss);

    if (!contained) {
      plan.result = VerificationResult::fail(t, FailureReason::EscapedCage);
      return plan;
    }
  }
  plan.result = VerificationResult::ok();
  return plan;
}

VerificationResult verify_push_plan(const PushProblem& problem, Vec2 initial_position,
                                    const ActionSequence& actions) {
  const auto& traj = problem.trajectory;
  if (actions.size() + 1 > traj.size()) {
    throw Error(ErrorCode::BadConfig, "plan is longer than the trajectory");
  }
  return verify_caging_in_time(
      initial_pss(problem, initial_position), std::span<const Action>(actions),
      [&](std::size_t t) { return CageCircle{traj[t], problem.cage_size}; },
      [&](const PSSGrid& pss, const Action& a, std::size_t t) {
        std::optional<double> theta;
        if (const auto* p = std::get_if<PushAngle>(&a)) theta = p->theta;
        return propagate_pss(pss, theta, traj[t + 1], problem);
      },
      [](const PSSGrid& pss, const CageCircle& cage) { return contains_geometric(pss, cage); },
      [](const Action& a, std::size_t) { return feasibility_quasi_static(a); });
}

}  // namespace cit::push
