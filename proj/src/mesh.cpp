#include "gaugeopt/errors.hpp"
#include "gaugeopt/pde.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>
#include <unordered_map>

namespace gaugeopt {

namespace {

Mesh::Weights average(const Mesh::Weights& a, const Mesh::Weights& b) {
  Mesh::Weights out;
  out.reserve(a.size() + b.size());
  std::size_t i = 0, k = 0;
  while (i < a.size() || k < b.size()) {
    if (k == b.size() || (i < a.size() && a[i].first < b[k].first)) {
      out.emplace_back(a[i].first, 0.5 * a[i].second);
      ++i;
    } else if (i == a.size() || b[k].first < a[i].first) {
      out.emplace_back(b[k].first, 0.5 * b[k].second);
      ++k;
    } else {
      out.emplace_back(a[i].first, 0.5 * (a[i].second + b[k].second));
      ++i;
      ++k;
    }
  }
  return out;
}

int coarse_sides_for(int n) {
  int k = n;
  while (k % 2 == 0 && k / 2 >= 8) k /= 2;
  return k;
}

class Builder {
 public:
  explicit Builder(const GaugeBody& body) : n_(body.size()) {
    mesh_.u = body.u();
    const int k = coarse_sides_for(n_);
    const int stride = n_ / k;
    snap_levels_ = 0;
    for (int s = stride; s > 1; s /= 2) ++snap_levels_;

    Mesh::Weights centre;
    Eigen::Vector2d c = Eigen::Vector2d::Zero();
    for (int i = 0; i < k; ++i) {
      const long long a = static_cast<long long>(i * stride) << Mesh::kAnchorBits;
      const Eigen::Vector2d p = mesh_.anchor(a).point;
      add_vertex({{a, 1.0}}, p, a);
      loop_.push_back(i);
      centre.emplace_back(a, 1.0 / k);
      c += p / k;
    }
    const int ci = add_vertex(centre, c, -1);
    for (int i = 0; i < k; ++i) tris_.push_back({ci, i, (i + 1) % k});
    mesh_.coarse_sides = k;
  }

  int snap_levels() const { return snap_levels_; }

  void refine() {
    if (level_ >= Mesh::kAnchorBits) throw std::invalid_argument("mesh_convex: too many refinement levels");
    const long long period = static_cast<long long>(n_) << Mesh::kAnchorBits;
    std::unordered_map<long long, int> mid;
    const auto key = [](int a, int b) { return (static_cast<long long>(std::min(a, b)) << 32) + std::max(a, b); };

    std::vector<int> new_loop;
    for (std::size_t i = 0; i < loop_.size(); ++i) {
      const int a = loop_[i], b = loop_[(i + 1) % loop_.size()];
      const long long aa = anchor_[static_cast<std::size_t>(a)];
      long long ab = anchor_[static_cast<std::size_t>(b)];
      if (ab <= aa) ab += period;
      const long long am = ((aa + ab) / 2) % period;
      const int m = add_vertex({{am, 1.0}}, mesh_.anchor(am).point, am);
      mid.emplace(key(a, b), m);
      new_loop.push_back(a);
      new_loop.push_back(m);
    }
    loop_ = std::move(new_loop);

    const auto midpoint = [&](int a, int b) {
      auto it = mid.find(key(a, b));
      if (it != mid.end()) return it->second;
      const auto sa = static_cast<std::size_t>(a), sb = static_cast<std::size_t>(b);
      const int m = add_vertex(average(weights_[sa], weights_[sb]), 0.5 * (pos_[sa] + pos_[sb]), -1);
      mid.emplace(key(a, b), m);
      return m;
    };

    std::vector<std::array<int, 3>> out;
    out.reserve(tris_.size() * 4);
    for (const auto& t : tris_) {
      const int ab = midpoint(t[0], t[1]), bc = midpoint(t[1], t[2]), ca = midpoint(t[2], t[0]);
      out.push_back({t[0], ab, ca});
      out.push_back({ab, t[1], bc});
      out.push_back({ca, bc, t[2]});
      out.push_back({ab, bc, ca});
    }
    tris_ = std::move(out);
    ++level_;
  }

  double max_edge() const {
    double m = 0.0;
    for (const auto& t : tris_)
      for (int k = 0; k < 3; ++k)
        m = std::max(m, (pos_[static_cast<std::size_t>(t[static_cast<std::size_t>(k)])] -
                         pos_[static_cast<std::size_t>(t[static_cast<std::size_t>((k + 1) % 3)])])
                            .norm());
    return m;
  }

  Mesh finish() {
    mesh_.levels = level_;
    mesh_.control = std::move(weights_);
    mesh_.triangles = std::move(tris_);
    mesh_.vertices = std::move(pos_);
    const int nv = static_cast<int>(mesh_.vertices.size());
    mesh_.on_boundary.assign(static_cast<std::size_t>(nv), false);
    mesh_.boundary_loop = loop_;
    mesh_.boundary_map.assign(static_cast<std::size_t>(n_), -1);
    const long long mask = (1LL << Mesh::kAnchorBits) - 1;
    for (std::size_t i = 0; i < loop_.size(); ++i) {
      const int a = loop_[i], b = loop_[(i + 1) % loop_.size()];
      mesh_.on_boundary[static_cast<std::size_t>(a)] = true;
      const Eigen::Vector2d m = 0.5 * (mesh_.vertices[static_cast<std::size_t>(a)] + mesh_.vertices[static_cast<std::size_t>(b)]);
      double theta = std::atan2(m.y(), m.x());
      if (theta < 0) theta += 2.0 * std::numbers::pi;
      mesh_.boundary_edges.push_back({a, b, theta});
      const long long an = anchor_[static_cast<std::size_t>(a)];
      if ((an & mask) == 0) mesh_.boundary_map[static_cast<std::size_t>(an >> Mesh::kAnchorBits)] = a;
    }
    for (int t = 0; t < mesh_.num_triangles(); ++t)
      if (!(mesh_.triangle_area(t) > 0.0))
        throw DomainError("mesh_convex: inverted triangle " + std::to_string(t) + "; body too degenerate for the fan mesh");
    return std::move(mesh_);
  }

 private:
  int add_vertex(Mesh::Weights w, const Eigen::Vector2d& p, long long anchor) {
    weights_.push_back(std::move(w));
    pos_.push_back(p);
    anchor_.push_back(anchor);
    return static_cast<int>(weights_.size()) - 1;
  }

  int n_;
  int snap_levels_ = 0;
  int level_ = 0;
  std::vector<Mesh::Weights> weights_;
  std::vector<Eigen::Vector2d> pos_;
  std::vector<long long> anchor_;  // boundary anchor of a vertex, -1 inside
  std::vector<int> loop_;
  std::vector<std::array<int, 3>> tris_;
  Mesh mesh_;
};

}  // namespace

Mesh::AnchorJet Mesh::anchor(long long a) const {
  const int n = u.size();
  const long long scale = 1LL << kAnchorBits;
  const int j = static_cast<int>(a >> kAnchorBits);
  const double t = static_cast<double>(a & (scale - 1)) / static_cast<double>(scale);
  const double theta = (j + t) * u.spacing();
  const Eigen::Vector2d e(std::cos(theta), std::sin(theta));
  const double ui = (1.0 - t) * u[j] + t * u[(j + 1) % n];
  const Eigen::Vector2d dp = -e / (ui * ui);
  return {j, e / ui, (1.0 - t) * dp, t * dp};
}

double Mesh::triangle_area(int t) const {
  const auto& tri = triangles[static_cast<std::size_t>(t)];
  const Eigen::Vector2d e1 = vertices[static_cast<std::size_t>(tri[1])] - vertices[static_cast<std::size_t>(tri[0])];
  const Eigen::Vector2d e2 = vertices[static_cast<std::size_t>(tri[2])] - vertices[static_cast<std::size_t>(tri[0])];
  return 0.5 * (e1.x() * e2.y() - e1.y() * e2.x());
}

double Mesh::area() const {
  double a = 0.0;
  for (int t = 0; t < num_triangles(); ++t) a += triangle_area(t);
  return a;
}

double Mesh::max_edge() const {
  double m = 0.0;
  for (const auto& t : triangles)
    for (int k = 0; k < 3; ++k)
      m = std::max(m, (vertices[static_cast<std::size_t>(t[static_cast<std::size_t>(k)])] -
                       vertices[static_cast<std::size_t>(t[static_cast<std::size_t>((k + 1) % 3)])])
                          .norm());
  return m;
}

Mesh mesh_convex(const GaugeBody& body, double target_h, int levels) {
  if (!(target_h > 0.0)) throw std::invalid_argument("mesh_convex: target_h must be positive");
  Builder b(body);
  if (levels >= 0) {
    if (levels < b.snap_levels())
      throw std::invalid_argument("mesh_convex: at least " + std::to_string(b.snap_levels()) + " levels needed");
    for (int l = 0; l < levels; ++l) b.refine();
  } else {
    int l = 0;
    while (l < b.snap_levels() || b.max_edge() > target_h) {
      b.refine();
      ++l;
    }
  }
  return b.finish();
}

int mesh_levels_for(const GaugeBody& body, double target_h) { return mesh_convex(body, target_h).levels; }

void write_off(std::ostream& os, const Mesh& mesh, const Eigen::VectorXd* values) {
  os.precision(12);
  os << "OFF\n" << mesh.num_vertices() << ' ' << mesh.num_triangles() << " 0\n";
  for (int v = 0; v < mesh.num_vertices(); ++v) {
    const auto& p = mesh.vertices[static_cast<std::size_t>(v)];
    os << p.x() << ' ' << p.y() << ' ' << (values ? (*values)[v] : 0.0) << '\n';
  }
  for (const auto& t : mesh.triangles) os << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
}

}  // namespace gaugeopt
