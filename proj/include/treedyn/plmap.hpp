#pragma once

// Continuous piecewise-linear self-maps of a metric tree, with exact
// evaluation, plan composition, images of subtrees, the eventual image
// J = ∩ f^n(X), and exact fixed/periodic point sets.
//
// Plan semantics: each edge carries breakpoints 0 = t_0 < ... < t_m = 1 with an
// image point per breakpoint; the sub-interval [t_i, t_{i+1}] maps onto the
// geodesic between the two images, linearly in arc length. Degenerate pieces
// (both images equal) encode collapses.

#include <treedyn/tree.hpp>

#include <memory>
#include <vector>

namespace treedyn {

struct plan_piece {
    rat t0, t1;
    tree_point img0, img1;
    tree_path path;  // geodesic from img0 to img1; empty when degenerate
    bool degenerate() const { return path.segs.empty(); }
};

struct edge_plan {
    std::vector<rat> breaks;         // 0 = breaks[0] < ... < breaks[m] = 1
    std::vector<tree_point> images;  // images[i] = f(breaks[i])
    std::vector<plan_piece> pieces;  // built at validation time
};

class pl_self_map {
public:
    // Omitted per-edge plans (empty breaks) default to the single piece joining
    // the endpoint vertex images. Throws input_error on any inconsistency; the
    // message names the offending vertex when continuity fails.
    pl_self_map(std::shared_ptr<const metric_tree> tree, std::vector<tree_point> vertex_images,
                std::vector<edge_plan> plans);

    const metric_tree& tree() const { return *tree_; }
    std::shared_ptr<const metric_tree> tree_ptr() const { return tree_; }
    const std::vector<tree_point>& vertex_images() const { return vertex_images_; }
    const edge_plan& plan(uint32_t e) const { return plans_[e]; }
    size_t total_breakpoints() const;

private:
    std::shared_ptr<const metric_tree> tree_;
    std::vector<tree_point> vertex_images_;
    std::vector<edge_plan> plans_;
};

// Exact pointwise evaluation.
tree_point apply(const pl_self_map& f, const tree_point& p);

// Evaluation followed by the dyadic orbit snap (rational.hpp); exact whenever
// denominators stay below the snap threshold. This is the orbit step used by
// every estimator.
tree_point apply_snapped(const pl_self_map& f, const tree_point& p);

// n-fold snapped application, n >= 0.
tree_point iterate(const pl_self_map& f, const tree_point& p, long n);

// h(x) = f(g(x)). Breakpoint count above `cap` raises resource_error.
// Both maps must share the tree.
pl_self_map compose(const pl_self_map& f, const pl_self_map& g, size_t cap = 1000000);
pl_self_map power(const pl_self_map& f, long m, size_t cap = 1000000);

subtree image_subtree(const pl_self_map& f, const subtree& s);

struct eventual_image_result {
    subtree j;
    bool stabilized = false;
    long n_stable = 0;  // smallest n with f^n(X) = J when stabilized, else max_iter
};

// Computes X ⊇ f(X) ⊇ f²(X) ⊇ ... until two consecutive images coincide
// exactly or max_iter is reached.
eventual_image_result eventual_image(const pl_self_map& f, long max_iter);

// A finite union of closed edge segments and isolated points; not necessarily
// connected. Canonical: segments merged and sorted, points sorted, no point
// inside a segment.
struct region {
    std::vector<edge_interval> segments;
    std::vector<tree_point> points;

    void canonicalize(const metric_tree& tree);
    bool empty() const { return segments.empty() && points.empty(); }
    bool contains(const metric_tree& tree, const tree_point& p) const;
    bool subset_of(const metric_tree& tree, const region& other) const;
    bool is_connected(const metric_tree& tree) const;
    bool operator==(const region& o) const;
    void add(const region& o, const metric_tree& tree);

    static region from_subtree(const subtree& s);
    static region whole(const metric_tree& tree);
};

rat distance_to_region(const metric_tree& tree, const tree_point& p, const region& s);

// sup_{x in from} d(x, to): exact, by enumerating the breakpoints of the
// piecewise-linear distance function along each segment of `from`.
rat sup_distance(const metric_tree& tree, const region& from, const region& to);
rat hausdorff_regions(const metric_tree& tree, const region& a, const region& b);

// Exact solution set of f^m(x) = x, via plan composition. resource_error if
// the composed plan exceeds `cap` breakpoints.
region fixed_points(const pl_self_map& f, long m, size_t cap = 1000000);

// Exact fixed set of an already-composed map.
region fixed_points_of_plan(const pl_self_map& g);

struct periodic_points_result {
    region per;              // union of Fix(f^m), m = 1..computed_up_to
    bool connected = false;
    long computed_up_to = 0; // = max_period unless the cap stopped composition early
    bool truncated = false;
};

periodic_points_result periodic_points(const pl_self_map& f, long max_period,
                                       size_t cap = 1000000);

struct injectivity_report {
    bool injective = true;
    // pairs (x, y), x != y, with f(x) = f(y); first few witnesses only
    std::vector<std::pair<tree_point, tree_point>> collisions;
};

// Exact surrogate for "f is a homeomorphism onto its image": no degenerate
// piece, and no two plan pieces whose image arcs meet except at the image of a
// shared domain endpoint.
injectivity_report injectivity_check(const pl_self_map& f);

}  // namespace treedyn
