#include <treedyn/tree.hpp>

#include <algorithm>
#include <cassert>
#include <map>
#include <set>

namespace treedyn {

metric_tree::metric_tree(std::vector<std::string> vertex_names, std::vector<tree_edge> edges)
    : names_(std::move(vertex_names)), edges_(std::move(edges)) {
    const size_t n = names_.size();
    if (n == 0) throw input_error("tree must have at least one vertex");
    if (edges_.size() != n - 1)
        throw input_error("tree must have exactly |vertices| - 1 edges");
    {
        std::set<std::string> seen(names_.begin(), names_.end());
        if (seen.size() != n) throw input_error("duplicate vertex name");
    }
    adj_.assign(n, {});
    std::set<std::pair<uint32_t, uint32_t>> seen_edges;
    for (uint32_t e = 0; e < edges_.size(); ++e) {
        const tree_edge& ed = edges_[e];
        if (ed.u >= n || ed.v >= n) throw input_error("edge endpoint out of range");
        if (ed.u == ed.v) throw input_error("edge endpoints must be distinct");
        if (ed.length <= 0) throw input_error("edge length must be positive");
        auto key = std::minmax(ed.u, ed.v);
        if (!seen_edges.insert({key.first, key.second}).second)
            throw input_error("duplicate edge");
        adj_[ed.u].push_back({e, ed.v});
        adj_[ed.v].push_back({e, ed.u});
    }

    // root at 0; also serves as the connectivity check
    parent_.assign(n, 0);
    parent_edge_.assign(n, 0);
    depth_.assign(n, 0);
    depth_len_.assign(n, rat(0));
    std::vector<bool> visited(n, false);
    std::vector<uint32_t> stack = {0};
    visited[0] = true;
    size_t reached = 1;
    while (!stack.empty()) {
        uint32_t v = stack.back();
        stack.pop_back();
        for (auto [e, w] : adj_[v]) {
            if (visited[w]) continue;
            visited[w] = true;
            ++reached;
            parent_[w] = v;
            parent_edge_[w] = e;
            depth_[w] = depth_[v] + 1;
            depth_len_[w] = depth_len_[v] + edges_[e].length;
            stack.push_back(w);
        }
    }
    if (reached != n) throw input_error("tree is not connected");
}

std::optional<uint32_t> metric_tree::vertex_index(const std::string& name) const {
    for (uint32_t i = 0; i < names_.size(); ++i)
        if (names_[i] == name) return i;
    return std::nullopt;
}

std::vector<uint32_t> metric_tree::vertex_path(uint32_t a, uint32_t b) const {
    std::vector<uint32_t> up_a, up_b;
    uint32_t x = a, y = b;
    while (depth_[x] > depth_[y]) {
        up_a.push_back(x);
        x = parent_[x];
    }
    while (depth_[y] > depth_[x]) {
        up_b.push_back(y);
        y = parent_[y];
    }
    while (x != y) {
        up_a.push_back(x);
        up_b.push_back(y);
        x = parent_[x];
        y = parent_[y];
    }
    up_a.push_back(x);
    up_a.insert(up_a.end(), up_b.rbegin(), up_b.rend());
    return up_a;
}

uint32_t metric_tree::edge_between(uint32_t a, uint32_t b) const {
    for (auto [e, w] : adj_[a])
        if (w == b) return e;
    throw input_error("vertices are not adjacent");
}

rat metric_tree::vertex_distance(uint32_t a, uint32_t b) const {
    uint32_t x = a, y = b;
    rat d(0);
    while (depth_[x] > depth_[y]) {
        d += edges_[parent_edge_[x]].length;
        x = parent_[x];
    }
    while (depth_[y] > depth_[x]) {
        d += edges_[parent_edge_[y]].length;
        y = parent_[y];
    }
    while (x != y) {
        d += edges_[parent_edge_[x]].length + edges_[parent_edge_[y]].length;
        x = parent_[x];
        y = parent_[y];
    }
    return d;
}

rat metric_tree::total_length() const {
    rat s(0);
    for (const auto& e : edges_) s += e.length;
    return s;
}

rat metric_tree::diameter() const {
    auto farthest = [&](uint32_t src) {
        std::vector<rat> dist(vertex_count(), rat(-1));
        dist[src] = 0;
        std::vector<uint32_t> stack = {src};
        uint32_t best = src;
        while (!stack.empty()) {
            uint32_t v = stack.back();
            stack.pop_back();
            if (dist[v] > dist[best]) best = v;
            for (auto [e, w] : adj_[v])
                if (dist[w] < 0) {
                    dist[w] = dist[v] + edges_[e].length;
                    stack.push_back(w);
                }
        }
        return std::pair<uint32_t, rat>{best, dist[best]};
    };
    auto [a, _] = farthest(0);
    return farthest(a).second;
}

tree_point tree_point::on_edge(const metric_tree& tree, uint32_t e, const rat& t) {
    if (e >= tree.edge_count()) throw input_error("unknown edge id");
    if (t < 0 || t > 1) throw input_error("edge fraction out of [0,1]");
    if (t == 0) return at_vertex(tree.edge(e).u);
    if (t == 1) return at_vertex(tree.edge(e).v);
    tree_point p;
    p.edge = static_cast<int32_t>(e);
    p.t = t;
    return p;
}

std::string tree_point::str(const metric_tree& tree) const {
    if (is_vertex()) return "@" + tree.vertex_name(vertex);
    return "e" + std::to_string(edge) + ":" + rat_str(t);
}

void validate_point(const metric_tree& tree, const tree_point& p) {
    if (p.is_vertex()) {
        if (p.vertex >= tree.vertex_count()) throw input_error("unknown vertex id");
    } else {
        if (static_cast<size_t>(p.edge) >= tree.edge_count()) throw input_error("unknown edge id");
        if (!(p.t > 0 && p.t < 1)) throw input_error("edge fraction must be strictly inside (0,1)");
    }
}

namespace {

// Entry options for a point: (vertex, arc length from the point to that vertex).
// Interior edge points have two, vertices one.
struct anchor {
    uint32_t vertex;
    rat cost;
};

std::vector<anchor> anchors_of(const metric_tree& tree, const tree_point& p) {
    if (p.is_vertex()) return {{p.vertex, rat(0)}};
    const tree_edge& e = tree.edge(p.edge);
    return {{e.u, p.t * e.length}, {e.v, (1 - p.t) * e.length}};
}

void push_seg(tree_path& path, uint32_t edge, const rat& t0, const rat& t1, const rat& edge_len) {
    if (t0 == t1) return;
    path_seg s;
    s.edge = edge;
    s.t0 = t0;
    s.t1 = t1;
    s.len = abs(rat(t1 - t0)) * edge_len;
    path.segs.push_back(std::move(s));
}

void finish_path(tree_path& path) {
    path.cum.clear();
    path.cum.reserve(path.segs.size() + 1);
    rat acc(0);
    path.cum.push_back(acc);
    for (const auto& s : path.segs) {
        acc += s.len;
        path.cum.push_back(acc);
    }
    path.length = acc;
}

}  // namespace

tree_path geodesic_path(const metric_tree& tree, const tree_point& p, const tree_point& q) {
    validate_point(tree, p);
    validate_point(tree, q);
    tree_path path;
    path.start = p;
    path.end = q;
    if (p == q) {
        finish_path(path);
        return path;
    }
    // both interior to the same edge: the geodesic stays inside it
    if (!p.is_vertex() && !q.is_vertex() && p.edge == q.edge) {
        push_seg(path, p.edge, p.t, q.t, tree.edge(p.edge).length);
        finish_path(path);
        return path;
    }
    auto ap = anchors_of(tree, p);
    auto aq = anchors_of(tree, q);
    const anchor* best_p = nullptr;
    const anchor* best_q = nullptr;
    rat best;
    for (const auto& a : ap)
        for (const auto& b : aq) {
            rat d = a.cost + tree.vertex_distance(a.vertex, b.vertex) + b.cost;
            if (!best_p || d < best) {
                best = d;
                best_p = &a;
                best_q = &b;
            }
        }
    // exit p's edge toward the chosen anchor
    if (!p.is_vertex()) {
        const tree_edge& e = tree.edge(p.edge);
        rat target = (best_p->vertex == e.u) ? rat(0) : rat(1);
        push_seg(path, p.edge, p.t, target, e.length);
    }
    auto vpath = tree.vertex_path(best_p->vertex, best_q->vertex);
    for (size_t i = 0; i + 1 < vpath.size(); ++i) {
        uint32_t e = tree.edge_between(vpath[i], vpath[i + 1]);
        const tree_edge& ed = tree.edge(e);
        if (ed.u == vpath[i])
            push_seg(path, e, rat(0), rat(1), ed.length);
        else
            push_seg(path, e, rat(1), rat(0), ed.length);
    }
    if (!q.is_vertex()) {
        const tree_edge& e = tree.edge(q.edge);
        rat from = (best_q->vertex == e.u) ? rat(0) : rat(1);
        push_seg(path, q.edge, from, q.t, e.length);
    }
    finish_path(path);
    return path;
}

tree_point tree_path::locate(const metric_tree& tree, const rat& s) const {
    if (segs.empty()) return start;
    if (s <= 0) return start;
    if (s >= length) return end;
    // find the segment containing arc position s
    size_t lo = 0, hi = segs.size();
    while (lo + 1 < hi) {
        size_t mid = (lo + hi) / 2;
        if (cum[mid] <= s)
            lo = mid;
        else
            hi = mid;
    }
    const path_seg& sg = segs[lo];
    rat frac = (s - cum[lo]) / sg.len;
    rat t = sg.t0 + frac * (sg.t1 - sg.t0);
    return tree_point::on_edge(tree, sg.edge, t);
}

tree_path tree_path::slice(const metric_tree& tree, const rat& a, const rat& b) const {
    tree_path out;
    out.start = locate(tree, a);
    out.end = locate(tree, b);
    if (a >= b || segs.empty()) {
        finish_path(out);
        return out;
    }
    for (size_t i = 0; i < segs.size(); ++i) {
        rat s0 = cum[i], s1 = cum[i + 1];
        rat lo = std::max(a, s0), hi = std::min(b, s1);
        if (lo >= hi) continue;
        const path_seg& sg = segs[i];
        rat f0 = (lo - s0) / sg.len, f1 = (hi - s0) / sg.len;
        push_seg(out, sg.edge, sg.t0 + f0 * (sg.t1 - sg.t0), sg.t0 + f1 * (sg.t1 - sg.t0),
                 tree.edge(sg.edge).length);
    }
    finish_path(out);
    return out;
}

arc geodesic(const metric_tree& tree, const tree_point& p, const tree_point& q) {
    tree_path path = geodesic_path(tree, p, q);
    arc a;
    a.length = path.length;
    a.waypoints.push_back(p);
    for (size_t i = 0; i < path.segs.size(); ++i) {
        // waypoint at every segment junction (always a vertex)
        if (i + 1 < path.segs.size()) {
            const path_seg& sg = path.segs[i];
            a.waypoints.push_back(tree_point::on_edge(tree, sg.edge, sg.t1));
        }
    }
    if (!(q == p)) a.waypoints.push_back(q);
    return a;
}

rat distance(const metric_tree& tree, const tree_point& p, const tree_point& q) {
    validate_point(tree, p);
    validate_point(tree, q);
    if (p == q) return rat(0);
    if (!p.is_vertex() && !q.is_vertex() && p.edge == q.edge)
        return abs(rat(p.t - q.t)) * tree.edge(p.edge).length;
    rat best(-1);
    for (const auto& a : anchors_of(tree, p))
        for (const auto& b : anchors_of(tree, q)) {
            rat d = a.cost + tree.vertex_distance(a.vertex, b.vertex) + b.cost;
            if (best < 0 || d < best) best = d;
        }
    return best;
}

point_class classify_point(const metric_tree& tree, const tree_point& p) {
    validate_point(tree, p);
    if (!p.is_vertex()) return {point_kind::cut_point, 2};
    unsigned deg = tree.degree(p.vertex);
    if (deg <= 1 && tree.edge_count() > 0)
        return {point_kind::end_point, deg};
    if (tree.edge_count() == 0) return {point_kind::end_point, 0};
    return {point_kind::cut_point, deg};
}

subtree subtree::whole(const metric_tree& tree) {
    subtree s;
    if (tree.edge_count() == 0) {
        s.degenerate = true;
        s.point = tree_point::at_vertex(0);
        return s;
    }
    for (uint32_t e = 0; e < tree.edge_count(); ++e)
        s.intervals.push_back({e, rat(0), rat(1)});
    return s;
}

subtree subtree::single_point(const tree_point& p) {
    subtree s;
    s.degenerate = true;
    s.point = p;
    return s;
}

subtree subtree::from_intervals(const metric_tree& tree, std::vector<edge_interval> iv) {
    subtree s;
    for (auto& i : iv) {
        if (i.edge >= tree.edge_count()) throw input_error("interval on unknown edge");
        if (!(i.lo >= 0 && i.hi <= 1 && i.lo < i.hi))
            throw input_error("interval bounds must satisfy 0 <= lo < hi <= 1");
    }
    std::sort(iv.begin(), iv.end(), [](const edge_interval& a, const edge_interval& b) {
        if (a.edge != b.edge) return a.edge < b.edge;
        return a.lo < b.lo;
    });
    for (const auto& i : iv) {
        if (!s.intervals.empty() && s.intervals.back().edge == i.edge &&
            i.lo <= s.intervals.back().hi) {
            if (i.hi > s.intervals.back().hi) s.intervals.back().hi = i.hi;
        } else {
            s.intervals.push_back(i);
        }
    }
    if (s.intervals.empty()) throw input_error("subtree needs at least one interval");
    return s;
}

bool subtree::operator==(const subtree& o) const {
    if (degenerate != o.degenerate) return false;
    if (degenerate) return point == o.point;
    if (intervals.size() != o.intervals.size()) return false;
    for (size_t i = 0; i < intervals.size(); ++i) {
        if (intervals[i].edge != o.intervals[i].edge || intervals[i].lo != o.intervals[i].lo ||
            intervals[i].hi != o.intervals[i].hi)
            return false;
    }
    return true;
}

bool subtree::contains(const metric_tree& tree, const tree_point& p) const {
    if (degenerate) return point == p;
    for (const auto& iv : intervals) {
        if (p.is_vertex()) {
            const tree_edge& e = tree.edge(iv.edge);
            if ((iv.lo == 0 && e.u == p.vertex) || (iv.hi == 1 && e.v == p.vertex)) return true;
        } else if (static_cast<uint32_t>(p.edge) == iv.edge && p.t >= iv.lo && p.t <= iv.hi) {
            return true;
        }
    }
    return false;
}

rat subtree::total_length(const metric_tree& tree) const {
    if (degenerate) return rat(0);
    rat s(0);
    for (const auto& iv : intervals) s += (iv.hi - iv.lo) * tree.edge(iv.edge).length;
    return s;
}

std::vector<tree_point> subtree::boundary_points(const metric_tree& tree) const {
    std::vector<tree_point> pts;
    if (degenerate) {
        pts.push_back(point);
        return pts;
    }
    for (const auto& iv : intervals) {
        pts.push_back(tree_point::on_edge(tree, iv.edge, iv.lo));
        pts.push_back(tree_point::on_edge(tree, iv.edge, iv.hi));
    }
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    return pts;
}

rat distance_to_subtree(const metric_tree& tree, const tree_point& p, const subtree& s) {
    if (s.degenerate) return distance(tree, p, s.point);
    rat best(-1);
    auto update = [&](const rat& d) {
        if (best < 0 || d < best) best = d;
    };
    for (const auto& iv : s.intervals) {
        if (!p.is_vertex() && static_cast<uint32_t>(p.edge) == iv.edge) {
            if (p.t >= iv.lo && p.t <= iv.hi) return rat(0);
            rat nearer = (p.t < iv.lo) ? iv.lo : iv.hi;
            update(abs(rat(p.t - nearer)) * tree.edge(iv.edge).length);
            continue;
        }
        // the minimum over the interval is attained at one of its endpoints
        update(distance(tree, p, tree_point::on_edge(tree, iv.edge, iv.lo)));
        update(distance(tree, p, tree_point::on_edge(tree, iv.edge, iv.hi)));
    }
    return best;
}

subtree ball(const metric_tree& tree, const tree_point& p, const rat& r) {
    validate_point(tree, p);
    if (r <= 0) throw input_error("ball radius must be positive");
    if (tree.edge_count() == 0) return subtree::single_point(p);

    std::vector<edge_interval> cover;
    // remaining radius at each vertex, -1 = unreached
    std::vector<rat> rem(tree.vertex_count(), rat(-1));
    std::vector<uint32_t> queue;
    auto seed_vertex = [&](uint32_t v, const rat& rv) {
        if (rv < 0) return;
        if (rem[v] < 0 || rv > rem[v]) {
            rem[v] = rv;
            queue.push_back(v);
        }
    };
    if (p.is_vertex()) {
        seed_vertex(p.vertex, r);
    } else {
        const tree_edge& e = tree.edge(p.edge);
        rat reach = r / e.length;
        cover.push_back({static_cast<uint32_t>(p.edge), std::max(rat(0), rat(p.t - reach)),
                         std::min(rat(1), rat(p.t + reach))});
        seed_vertex(e.u, r - p.t * e.length);
        seed_vertex(e.v, r - (1 - p.t) * e.length);
    }
    std::vector<bool> done(tree.vertex_count(), false);
    while (!queue.empty()) {
        uint32_t v = queue.back();
        queue.pop_back();
        if (done[v]) continue;
        done[v] = true;
        for (auto [e, w] : tree.incident(v)) {
            const tree_edge& ed = tree.edge(e);
            rat reach = rem[v] / ed.length;
            if (ed.u == v)
                cover.push_back({e, rat(0), std::min(rat(1), reach)});
            else
                cover.push_back({e, std::max(rat(0), rat(1 - reach)), rat(1)});
            seed_vertex(w, rem[v] - ed.length);
        }
    }
    // drop zero-length covers, merge the rest
    std::vector<edge_interval> keep;
    for (auto& c : cover)
        if (c.lo < c.hi) keep.push_back(c);
    if (keep.empty()) return subtree::single_point(p);
    return subtree::from_intervals(tree, std::move(keep));
}

std::vector<tree_point> mesh(const metric_tree& tree, const rat& delta) {
    if (delta <= 0) throw input_error("mesh resolution must be positive");
    std::vector<tree_point> pts;
    for (uint32_t v = 0; v < tree.vertex_count(); ++v) pts.push_back(tree_point::at_vertex(v));
    for (uint32_t e = 0; e < tree.edge_count(); ++e) {
        long count = subdivision_count(tree.edge(e).length, delta);
        for (long i = 1; i < count; ++i) pts.push_back(tree_point::on_edge(tree, e, rat(i, count)));
    }
    std::sort(pts.begin(), pts.end());
    return pts;
}

std::vector<tree_point> mesh_subtree(const metric_tree& tree, const subtree& s, const rat& delta) {
    if (delta <= 0) throw input_error("mesh resolution must be positive");
    std::vector<tree_point> pts;
    if (s.degenerate) {
        pts.push_back(s.point);
        return pts;
    }
    for (const auto& iv : s.intervals) {
        rat seg_len = (iv.hi - iv.lo) * tree.edge(iv.edge).length;
        long count = subdivision_count(seg_len, delta);
        for (long i = 0; i <= count; ++i)
            pts.push_back(
                tree_point::on_edge(tree, iv.edge, iv.lo + rat(i, count) * (iv.hi - iv.lo)));
    }
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    return pts;
}

}  // namespace treedyn
