#pragma once

// Estimators for the limit sets ω(x,f) and Ω(x,f), exact Hausdorff distance
// between finite point sets, recurrence detection, and continuity /
// semicontinuity probes for the set-valued map x ↦ ω(x,f).
//
// Estimates are resolution-tagged approximations: orbits are finite windows
// (with exact cycle detection), Ω is sampled from shrinking balls, and every
// claim downstream carries the tolerance used here.

#include <treedyn/plmap.hpp>

#include <string>
#include <unordered_map>
#include <vector>

namespace treedyn {

struct limit_params {
    long transient = 512;  // discarded burn-in iterates
    long window = 512;     // recorded tail length
    rat cluster_tol = rat(1, 1000);
    std::vector<rat> delta_schedule = {rat(1, 8),   rat(1, 16),  rat(1, 32),  rat(1, 64),
                                       rat(1, 128), rat(1, 256), rat(1, 512), rat(1, 1024)};
    long samples_per_delta = 32;

    void validate() const;
};

// Finite approximation of a compact set: cluster representatives at the given
// resolution, pairwise more than `resolution` apart. `points` keeps
// first-visit order; use sorted_points() for canonical output.
struct compact_set {
    std::vector<tree_point> points;  // first-visit representative order
    rat resolution;
    std::string provenance;

    std::vector<tree_point> sorted_points() const;
};

// Orbit store with exact cycle detection. Orbits are computed with
// apply_snapped and memoized by starting point; a detected exact repeat lets
// any window be reconstructed without further iteration.
class orbit_cache {
public:
    orbit_cache(const pl_self_map& f, long max_steps);

    struct record {
        std::vector<tree_point> pts;  // pts[i] = f^i(x); pts[0] = x
        long cycle_start = -1;        // index of the first repeated point
        long cycle_len = 0;
        bool resolved() const { return cycle_start >= 0; }
    };

    const record& get(const tree_point& x);
    // f^n(x) for arbitrary n >= 0 (uses the cycle when resolved; n must be
    // below max_steps otherwise).
    static const tree_point& at(const record& r, long n);
    // distinct points of {f^n(x) : from < n <= to}, in first-visit order
    static std::vector<tree_point> window_points(const record& r, long from, long to);

    long max_steps() const { return max_steps_; }
    const pl_self_map& map() const { return f_; }

private:
    const pl_self_map& f_;
    long max_steps_;
    std::unordered_map<tree_point, record, tree_point_hash> cache_;
};

// Exact radius queries over a fixed finite point set on the tree.
class point_locator {
public:
    point_locator(const metric_tree& tree, std::vector<tree_point> pts);

    const std::vector<tree_point>& points() const { return pts_; }
    bool any_within(const tree_point& q, const rat& radius) const;
    // indices of stored points within `radius` of q
    std::vector<size_t> within(const tree_point& q, const rat& radius) const;
    rat min_distance(const tree_point& q) const;  // requires nonempty

private:
    const metric_tree& tree_;
    std::vector<tree_point> pts_;
    // per edge: (t, index) sorted; vertices listed under every incident edge
    // would bloat — kept separately
    std::vector<std::vector<std::pair<rat, size_t>>> by_edge_;
    std::vector<std::vector<size_t>> at_vertex_;
    template <typename Fn>
    void scan(const tree_point& q, const rat& radius, Fn&& fn) const;
};

// ε-net clustering in visit order: a point joins the first representative
// within tol, otherwise becomes a new representative.
std::vector<tree_point> cluster_points(const metric_tree& tree,
                                       const std::vector<tree_point>& pts, const rat& tol);

// Tail-window estimate of ω(x,f).
compact_set omega_limit(const pl_self_map& f, const tree_point& x, const limit_params& params,
                        orbit_cache& cache);

// Shrinking-ball estimate of Ω(x,f). A point qualifies when sample orbits hit
// it (within cluster_tol) at every δ of the schedule; the iterate window
// tightens toward the orbit tail as δ shrinks, so coarse levels may contribute
// early excursions but the finest level requires genuine recurrence.
compact_set big_omega_limit(const pl_self_map& f, const tree_point& x, const limit_params& params,
                            orbit_cache& cache);

// Exact Hausdorff distance between two nonempty finite point sets.
rat hausdorff(const metric_tree& tree, const compact_set& a, const compact_set& b);
rat hausdorff_points(const metric_tree& tree, const std::vector<tree_point>& a,
                     const std::vector<tree_point>& b);

struct modulus_report {
    rat max_h;
    tree_point x, y;  // lexicographically first maximizing pair
    size_t pairs = 0;
};

// Empirical modulus of continuity of ω_f: max Hausdorff distance between
// ω-estimates over mesh pairs within pair_delta.
modulus_report omega_map_modulus(const pl_self_map& f, const rat& grid_resolution,
                                 const rat& pair_delta, const limit_params& params,
                                 orbit_cache& cache);

// Mesh points x with d(x, ω-estimate(x)) <= cluster_tol.
std::vector<tree_point> recurrent_points(const pl_self_map& f, const rat& grid_resolution,
                                         const limit_params& params, orbit_cache& cache);

// ω ≠ Ω witness search on a grid: for each grid point, the strongest sample
// point that recurs at every δ yet sits farther than 3·cluster_tol from the
// ω-estimate. Empty witness means the grid check passes.
struct omega_eq_check {
    bool passes = true;
    tree_point x, witness;
    rat excess;  // d(witness, ω-estimate(x)); > 3ε only when !passes
};

omega_eq_check omega_equals_big_omega(const pl_self_map& f, const rat& grid_resolution,
                                      const limit_params& params, orbit_cache& cache);

struct semicontinuity_report {
    struct violation {
        tree_point x, witness;
    };
    std::vector<violation> usc;
    std::vector<violation> lsc;
};

// Heuristic probe along mesh refinement: flags points where ω-estimates of
// converging samples escape (usc) or fail to reach (lsc) the limit estimate
// persistently across the whole schedule. Evidence, not proof.
semicontinuity_report semicontinuity_probe(const pl_self_map& f, const rat& grid_resolution,
                                           const limit_params& params, orbit_cache& cache);

// Exact minimal period of x if f^n(x) returns to x for some n <= cap.
std::optional<long> minimal_period(const pl_self_map& f, const tree_point& x, long cap);

// Deterministic ball sample set used by the Ω estimator (exposed for tests
// and the semicontinuity probe): x first, then mesh points of ball(x, delta).
std::vector<tree_point> ball_samples(const metric_tree& tree, const tree_point& x,
                                     const rat& delta, long samples_per_delta);

}  // namespace treedyn
