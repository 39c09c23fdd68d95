#pragma once

// Finite metric trees with exact rational edge lengths, and exact points,
// arcs, balls and meshes on them. A tree here is the computable stand-in for
// a dendrite: every point is either an end point (degree 1) or a cut point.

#include <treedyn/rational.hpp>

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace treedyn {

struct tree_edge {
    uint32_t u = 0;
    uint32_t v = 0;
    rat length;  // strictly positive
};

class metric_tree {
public:
    // Validates connectivity, acyclicity, positive lengths, distinct endpoints,
    // no duplicate edges. Throws input_error otherwise.
    metric_tree(std::vector<std::string> vertex_names, std::vector<tree_edge> edges);

    size_t vertex_count() const { return names_.size(); }
    size_t edge_count() const { return edges_.size(); }
    const tree_edge& edge(uint32_t e) const { return edges_[e]; }
    const std::vector<tree_edge>& edges() const { return edges_; }
    const std::string& vertex_name(uint32_t v) const { return names_[v]; }
    const std::vector<std::string>& vertex_names() const { return names_; }
    std::optional<uint32_t> vertex_index(const std::string& name) const;

    unsigned degree(uint32_t v) const { return static_cast<unsigned>(adj_[v].size()); }
    // incident (edge index, opposite vertex) pairs
    const std::vector<std::pair<uint32_t, uint32_t>>& incident(uint32_t v) const { return adj_[v]; }

    // Vertex-to-vertex path as a vertex sequence (inclusive ends).
    std::vector<uint32_t> vertex_path(uint32_t a, uint32_t b) const;
    // Edge joining two adjacent vertices.
    uint32_t edge_between(uint32_t a, uint32_t b) const;

    rat vertex_distance(uint32_t a, uint32_t b) const;
    rat total_length() const;
    rat diameter() const;

private:
    std::vector<std::string> names_;
    std::vector<tree_edge> edges_;
    std::vector<std::vector<std::pair<uint32_t, uint32_t>>> adj_;
    // rooted at vertex 0 for path queries
    std::vector<uint32_t> parent_, parent_edge_, depth_;
    std::vector<rat> depth_len_;
};

// A point of the tree: a vertex, or an interior position on an edge given by
// the fraction t in (0,1) of the edge length from the edge's first endpoint.
// Edge endpoints are always normalized to the vertex form, so equality is
// structural.
struct tree_point {
    int32_t edge = -1;   // -1 for vertex form
    uint32_t vertex = 0; // valid in vertex form
    rat t;               // valid in edge form, 0 < t < 1

    bool is_vertex() const { return edge < 0; }

    static tree_point at_vertex(uint32_t v) {
        tree_point p;
        p.vertex = v;
        return p;
    }
    // Canonicalizes t == 0 / t == 1 to the corresponding vertex.
    // Throws input_error for t outside [0,1] or bad ids.
    static tree_point on_edge(const metric_tree& tree, uint32_t e, const rat& t);

    bool operator==(const tree_point& o) const {
        if (edge < 0) return o.edge < 0 && vertex == o.vertex;
        return o.edge == edge && o.t == t;
    }
    bool operator!=(const tree_point& o) const { return !(*this == o); }
    // Total order used for deterministic witnesses: vertices by index first,
    // then edge points by (edge, t).
    bool operator<(const tree_point& o) const {
        if (is_vertex() != o.is_vertex()) return is_vertex();
        if (is_vertex()) return vertex < o.vertex;
        if (edge != o.edge) return edge < o.edge;
        return t < o.t;
    }

    std::string str(const metric_tree& tree) const;
};

struct tree_point_hash {
    size_t operator()(const tree_point& p) const {
        if (p.is_vertex()) return 0x51ed270b * (size_t(p.vertex) + 1);
        return hash_rat(p.t) ^ (0x9e3779b9 * (size_t(p.edge) + 7));
    }
};

void validate_point(const metric_tree& tree, const tree_point& p);

// One oriented piece of a path: the sub-interval of `edge` from fraction t0 to
// fraction t1 (t0 may exceed t1), of positive arc length unless the whole path
// is degenerate.
struct path_seg {
    uint32_t edge = 0;
    rat t0, t1;
    rat len;  // |t1 - t0| * edge length
};

// An oriented geodesic as a segment list plus cumulative arc lengths.
// Degenerate geodesics (start == end) carry no segments.
struct tree_path {
    tree_point start, end;
    std::vector<path_seg> segs;
    std::vector<rat> cum;  // cum[i] = arc length before segs[i]; cum.back() = total
    rat length;

    // Point at arc-length position s in [0, length].
    tree_point locate(const metric_tree& tree, const rat& s) const;
    // Sub-path covering arc window [a, b], 0 <= a <= b <= length.
    tree_path slice(const metric_tree& tree, const rat& a, const rat& b) const;
};

// Public arc value: ordered waypoints (start, intermediate vertices, end).
struct arc {
    std::vector<tree_point> waypoints;
    rat length;
};

tree_path geodesic_path(const metric_tree& tree, const tree_point& p, const tree_point& q);
arc geodesic(const metric_tree& tree, const tree_point& p, const tree_point& q);
rat distance(const metric_tree& tree, const tree_point& p, const tree_point& q);

enum class point_kind { end_point, cut_point };

struct point_class {
    point_kind kind;
    unsigned degree;
};

point_class classify_point(const metric_tree& tree, const tree_point& p);

// Closed sub-interval [lo, hi] of an edge, 0 <= lo < hi <= 1.
struct edge_interval {
    uint32_t edge = 0;
    rat lo, hi;
};

// A closed, connected union of edge segments — or a single point in the
// degenerate case. Canonical form: intervals sorted by edge, at most one
// interval per edge (connectivity on a tree forbids two disjoint runs of the
// same edge).
struct subtree {
    bool degenerate = false;
    tree_point point;                     // when degenerate
    std::vector<edge_interval> intervals; // when not

    static subtree whole(const metric_tree& tree);
    static subtree single_point(const tree_point& p);
    static subtree from_intervals(const metric_tree& tree, std::vector<edge_interval> iv);

    bool operator==(const subtree& o) const;
    bool contains(const metric_tree& tree, const tree_point& p) const;
    rat total_length(const metric_tree& tree) const;
    // Every tree_point in the closure, represented canonically, that is an
    // interval endpoint (used for pushing through maps and for reports).
    std::vector<tree_point> boundary_points(const metric_tree& tree) const;
};

rat distance_to_subtree(const metric_tree& tree, const tree_point& p, const subtree& s);

// Exact closed ball {q : d(p,q) <= r} as a subtree (balls in trees are connected).
subtree ball(const metric_tree& tree, const tree_point& p, const rat& r);

// Deterministic sampling grid: all vertices plus uniform subdivision of each
// edge into ceil(length/delta) pieces. Sorted canonically.
std::vector<tree_point> mesh(const metric_tree& tree, const rat& delta);

// Uniform subdivision of each interval of a subtree, plus interval endpoints;
// used for ball sampling. Deterministic, sorted, deduplicated.
std::vector<tree_point> mesh_subtree(const metric_tree& tree, const subtree& s, const rat& delta);

}  // namespace treedyn
