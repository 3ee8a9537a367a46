#include "tap/scene.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

namespace tap {

namespace {

constexpr double kEps = 1e-9;

struct OrientedRect {
  Vec2 center;
  double hx = 0.0;
  double hy = 0.0;
  double yaw = 0.0;

  Vec2 axis_x() const { return {std::cos(yaw), std::sin(yaw)}; }
  Vec2 axis_y() const { return {-std::sin(yaw), std::cos(yaw)}; }

  std::array<Vec2, 4> corners() const {
    const Vec2 ax = axis_x();
    const Vec2 ay = axis_y();
    auto at = [&](double sx, double sy) {
      return Vec2{center.x + sx * hx * ax.x + sy * hy * ay.x, center.y + sx * hx * ax.y + sy * hy * ay.y};
    };
    return {at(-1, -1), at(1, -1), at(1, 1), at(-1, 1)};
  }
};

double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }

OrientedRect rect_of(const SceneBox& b, double grow = 0.0) {
  return {{b.position[0], b.position[1]}, b.dims.x / 2.0 + grow, b.dims.y / 2.0 + grow, b.yaw};
}

double projected_radius(const OrientedRect& r, Vec2 axis) {
  return r.hx * std::abs(dot(r.axis_x(), axis)) + r.hy * std::abs(dot(r.axis_y(), axis));
}

// Separating-axis test on the four edge normals; touching counts as apart.
bool interiors_overlap(const OrientedRect& a, const OrientedRect& b) {
  const Vec2 d{b.center.x - a.center.x, b.center.y - a.center.y};
  for (Vec2 axis : {a.axis_x(), a.axis_y(), b.axis_x(), b.axis_y()}) {
    if (std::abs(dot(d, axis)) >= projected_radius(a, axis) + projected_radius(b, axis) - kEps) return false;
  }
  return true;
}

bool open_intervals_overlap(double lo_a, double hi_a, double lo_b, double hi_b) {
  return std::max(lo_a, lo_b) < std::min(hi_a, hi_b) - kEps;
}

// Sutherland-Hodgman clip of a convex polygon by a convex CCW polygon.
std::vector<Vec2> clip(std::vector<Vec2> subject, const std::array<Vec2, 4>& window) {
  for (std::size_t e = 0; e < window.size() && !subject.empty(); ++e) {
    const Vec2 a = window[e];
    const Vec2 b = window[(e + 1) % window.size()];
    auto inside = [&](Vec2 p) { return (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x) >= 0.0; };
    std::vector<Vec2> out;
    for (std::size_t i = 0; i < subject.size(); ++i) {
      const Vec2 p = subject[i];
      const Vec2 q = subject[(i + 1) % subject.size()];
      const bool pin = inside(p);
      const bool qin = inside(q);
      if (pin) out.push_back(p);
      if (pin != qin) {
        const double dx = q.x - p.x;
        const double dy = q.y - p.y;
        const double denom = (b.x - a.x) * dy - (b.y - a.y) * dx;
        const double t = ((b.y - a.y) * (p.x - a.x) - (b.x - a.x) * (p.y - a.y)) / denom;
        out.push_back({p.x + t * dx, p.y + t * dy});
      }
    }
    subject = std::move(out);
  }
  return subject;
}

double polygon_area(const std::vector<Vec2>& poly) {
  double twice = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2 p = poly[i];
    const Vec2 q = poly[(i + 1) % poly.size()];
    twice += p.x * q.y - q.x * p.y;
  }
  return std::abs(twice) / 2.0;
}

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Support-ratio rule mirroring the container stability test, in continuous form.
bool supported(const SceneBox& cand, const std::vector<SceneBox>& placed, double min_ratio) {
  if (cand.bottom() <= kEps) return true;
  const OrientedRect r = rect_of(cand);
  const auto window = r.corners();
  double area = 0.0;
  double lo_x = 1e300, lo_y = 1e300, hi_x = -1e300, hi_y = -1e300;
  const Vec2 ax = r.axis_x();
  const Vec2 ay = r.axis_y();
  for (const auto& other : placed) {
    if (std::abs(other.top() - cand.bottom()) > kEps) continue;
    if (!interiors_overlap(r, rect_of(other))) continue;
    const auto corners = rect_of(other).corners();
    const auto poly = clip({corners.begin(), corners.end()}, window);
    area += polygon_area(poly);
    for (Vec2 p : poly) {
      const Vec2 rel{p.x - r.center.x, p.y - r.center.y};
      const double u = dot(rel, ax);
      const double v = dot(rel, ay);
      lo_x = std::min(lo_x, u);
      hi_x = std::max(hi_x, u);
      lo_y = std::min(lo_y, v);
      hi_y = std::max(hi_y, v);
    }
  }
  const double footprint_area = 4.0 * r.hx * r.hy;
  if (area / footprint_area < min_ratio) return false;
  return lo_x - 0.5 <= 0.0 && 0.0 <= hi_x + 0.5 && lo_y - 0.5 <= 0.0 && 0.0 <= hi_y + 0.5;
}

}  // namespace

std::array<Vec2, 4> SceneBox::footprint() const { return rect_of(*this).corners(); }

Scene generate_scene(std::span<const Dims3> dims, const SceneOptions& options, std::uint64_t seed) {
  if (dims.empty()) throw Error(Errc::contract, "scene needs at least one box");
  Scene scene;
  scene.workspace = options.workspace;
  std::mt19937_64 pose_rng(splitmix(seed));
  std::mt19937_64 sensor_rng(splitmix(seed ^ 0x5eed5eedULL));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double two_pi = 2.0 * std::numbers::pi;

  for (std::size_t id = 0; id < dims.size(); ++id) {
    Dims3 d = dims[id];
    if (!d.valid()) throw Error(Errc::contract, "box dims must be >= 1");
    if (options.random_resting_face) {
      std::array<int, 3> a = d.as_array();
      std::shuffle(a.begin(), a.end(), pose_rng);
      d = {a[0], a[1], a[2]};
    }

    bool placed = false;
    for (int attempt = 0; attempt < options.max_attempts && !placed; ++attempt) {
      SceneBox box;
      box.id = static_cast<int>(id);
      box.dims = d;
      box.observed_dims = d;
      box.yaw = unit(pose_rng) * two_pi;
      const double c = std::abs(std::cos(box.yaw));
      const double s = std::abs(std::sin(box.yaw));
      const double ex = c * d.x / 2.0 + s * d.y / 2.0;
      const double ey = s * d.x / 2.0 + c * d.y / 2.0;
      if (2.0 * ex > options.workspace.width || 2.0 * ey > options.workspace.depth) continue;
      box.position[0] = ex + unit(pose_rng) * (options.workspace.width - 2.0 * ex);
      box.position[1] = ey + unit(pose_rng) * (options.workspace.depth - 2.0 * ey);

      const OrientedRect r = rect_of(box);
      double rest = 0.0;
      for (const auto& other : scene.boxes) {
        if (interiors_overlap(r, rect_of(other))) rest = std::max(rest, other.top());
      }
      box.position[2] = rest;
      if (!supported(box, scene.boxes, options.min_support_ratio)) continue;
      scene.boxes.push_back(box);
      placed = true;
    }
    if (!placed) {
      throw Error(Errc::scene_generation,
                  "could not place box " + std::to_string(id) + " after " + std::to_string(options.max_attempts) +
                      " attempts; enlarge the workspace");
    }
  }

  for (auto& box : scene.boxes) {
    if (unit(sensor_rng) >= options.occlusion_probability || options.max_perturbation < 1) continue;
    std::uniform_int_distribution<int> axis(0, 2);
    std::uniform_int_distribution<int> magnitude(1, options.max_perturbation);
    const int a = axis(sensor_rng);
    const int delta = magnitude(sensor_rng) * (unit(sensor_rng) < 0.5 ? -1 : 1);
    auto obs = box.dims.as_array();
    obs[a] = std::max(1, obs[a] + delta);
    box.observed_dims = {obs[0], obs[1], obs[2]};
  }
  return scene;
}

Axis axis_of(GraspAxis g) noexcept {
  switch (g) {
    case GraspAxis::x: return Axis::x;
    case GraspAxis::y: return Axis::y;
    default: return Axis::z;
  }
}

char axis_name(Axis a) noexcept { return "XYZ"[static_cast<int>(a)]; }

std::vector<MbEdge> extract_mb(const Scene& scene, double tolerance) {
  std::vector<MbEdge> edges;
  const auto& boxes = scene.boxes;
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    for (std::size_t j = 0; j < boxes.size(); ++j) {
      if (i == j) continue;
      if (boxes[j].bottom() < boxes[i].top() - tolerance) continue;
      if (!interiors_overlap(rect_of(boxes[i]), rect_of(boxes[j]))) continue;
      edges.push_back({static_cast<int>(j), static_cast<int>(i)});
    }
  }
  return edges;
}

std::vector<AbEdge> extract_ab(const Scene& scene, Axis axis, double margin) {
  std::vector<AbEdge> edges;
  const auto& boxes = scene.boxes;
  const double reach = std::hypot(scene.workspace.width, scene.workspace.depth);

  for (std::size_t i = 0; i < boxes.size(); ++i) {
    const SceneBox& b = boxes[i];
    const OrientedRect body = rect_of(b);
    for (Side side : {Side::neg, Side::pos}) {
      const double sign = side == Side::pos ? 1.0 : -1.0;
      OrientedRect corridor = body;
      double z_lo = b.bottom() - margin;
      double z_hi = b.top() + margin;
      if (axis == Axis::z) {
        corridor = rect_of(b, margin);
        if (side == Side::pos) {
          z_lo = b.top();
          z_hi = 1e300;
        } else {
          z_lo = 0.0;
          z_hi = b.bottom();
          if (b.bottom() <= kEps) {
            edges.push_back({static_cast<int>(i), static_cast<int>(i), Side::neg});
            continue;
          }
        }
      } else {
        const Vec2 dir = axis == Axis::x ? body.axis_x() : body.axis_y();
        const double half = axis == Axis::x ? body.hx : body.hy;
        const double offset = sign * (half + reach / 2.0);
        corridor.center = {body.center.x + dir.x * offset, body.center.y + dir.y * offset};
        if (axis == Axis::x) {
          corridor.hx = reach / 2.0;
          corridor.hy = body.hy + margin;
        } else {
          corridor.hx = body.hx + margin;
          corridor.hy = reach / 2.0;
        }
      }
      for (std::size_t j = 0; j < boxes.size(); ++j) {
        if (i == j) continue;
        if (!open_intervals_overlap(z_lo, z_hi, boxes[j].bottom(), boxes[j].top())) continue;
        if (!interiors_overlap(corridor, rect_of(boxes[j]))) continue;
        edges.push_back({static_cast<int>(j), static_cast<int>(i), side});
      }
    }
  }
  return edges;
}

PrecedenceGraph::PrecedenceGraph(int n, std::vector<MbEdge> mb, std::array<std::vector<AbEdge>, 3> ab)
    : n_(n), mb_(std::move(mb)), ab_(std::move(ab)) {
  auto in_range = [n](int v) { return v >= 0 && v < n; };
  mb_blockers_.assign(static_cast<std::size_t>(n), {});
  for (const auto& e : mb_) {
    if (!in_range(e.blocker) || !in_range(e.blocked) || e.blocker == e.blocked) {
      throw Error(Errc::contract, "invalid MB edge");
    }
    mb_blockers_[e.blocked].push_back(e.blocker);
  }
  for (int a = 0; a < 3; ++a) {
    for (auto& side : ab_blockers_[a]) side.assign(static_cast<std::size_t>(n), {});
    for (const auto& e : ab_[a]) {
      if (!in_range(e.blocker) || !in_range(e.blocked)) throw Error(Errc::contract, "invalid AB edge");
      ab_blockers_[a][static_cast<int>(e.side)][e.blocked].push_back(e.blocker);
    }
  }
}

PrecedenceGraph extract_precedence(const Scene& scene, const PrecedenceOptions& options) {
  std::array<std::vector<AbEdge>, 3> ab;
  for (Axis a : {Axis::x, Axis::y, Axis::z}) ab[static_cast<int>(a)] = extract_ab(scene, a, options.corridor_margin);
  return {static_cast<int>(scene.boxes.size()), extract_mb(scene, options.mb_tolerance), std::move(ab)};
}

StatePrecedence state_precedence(const PrecedenceGraph& graph, int i, StateIndex s) {
  if (i < 0 || i >= graph.size()) throw Error(Errc::range, "box index out of range");
  const auto n = static_cast<std::size_t>(graph.size());
  StatePrecedence p{std::vector<std::uint8_t>(n, 0), std::vector<std::uint8_t>(n, 0)};
  for (int j : graph.mb_blockers(i)) p.movement[j] = 1;
  const Axis a = axis_of(s.grasp());
  for (Side side : {Side::neg, Side::pos}) {
    for (int j : graph.ab_blockers(i, a, side)) p.access[j] = 1;
  }
  return p;
}

bool accessible(const PrecedenceGraph& graph, int i, StateIndex s, const std::vector<bool>& removed) {
  if (i < 0 || i >= graph.size()) throw Error(Errc::range, "box index out of range");
  auto present = [&](int j) { return j == i || j >= static_cast<int>(removed.size()) || !removed[j]; };
  for (int j : graph.mb_blockers(i)) {
    if (present(j)) return false;
  }
  const Axis a = axis_of(s.grasp());
  for (Side side : {Side::neg, Side::pos}) {
    const auto& blockers = graph.ab_blockers(i, a, side);
    if (std::none_of(blockers.begin(), blockers.end(), present)) return true;
  }
  return false;
}

}  // namespace tap
