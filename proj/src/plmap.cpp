#include <treedyn/plmap.hpp>

#include <algorithm>
#include <cassert>
#include <map>
#include <set>

namespace treedyn {

pl_self_map::pl_self_map(std::shared_ptr<const metric_tree> tree,
                         std::vector<tree_point> vertex_images, std::vector<edge_plan> plans)
    : tree_(std::move(tree)), vertex_images_(std::move(vertex_images)), plans_(std::move(plans)) {
    const metric_tree& t = *tree_;
    if (vertex_images_.size() != t.vertex_count())
        throw input_error("one image per vertex required");
    for (const auto& p : vertex_images_) validate_point(t, p);
    if (plans_.empty()) plans_.resize(t.edge_count());
    if (plans_.size() != t.edge_count()) throw input_error("one plan per edge required");

    for (uint32_t e = 0; e < t.edge_count(); ++e) {
        edge_plan& pl = plans_[e];
        const tree_edge& ed = t.edge(e);
        if (pl.breaks.empty()) {
            pl.breaks = {rat(0), rat(1)};
            pl.images = {vertex_images_[ed.u], vertex_images_[ed.v]};
        }
        if (pl.breaks.size() != pl.images.size() || pl.breaks.size() < 2)
            throw input_error("plan for edge e" + std::to_string(e) +
                              " needs matching breakpoints and images");
        if (pl.breaks.front() != 0 || pl.breaks.back() != 1)
            throw input_error("plan for edge e" + std::to_string(e) + " must span [0,1]");
        for (size_t i = 0; i + 1 < pl.breaks.size(); ++i)
            if (!(pl.breaks[i] < pl.breaks[i + 1]))
                throw input_error("plan breakpoints for edge e" + std::to_string(e) +
                                  " must be strictly increasing");
        for (const auto& img : pl.images) validate_point(t, img);
        if (!(pl.images.front() == vertex_images_[ed.u]))
            throw input_error("plan endpoint image disagrees with image of vertex '" +
                              t.vertex_name(ed.u) + "'");
        if (!(pl.images.back() == vertex_images_[ed.v]))
            throw input_error("plan endpoint image disagrees with image of vertex '" +
                              t.vertex_name(ed.v) + "'");
        pl.pieces.clear();
        for (size_t i = 0; i + 1 < pl.breaks.size(); ++i) {
            plan_piece pc;
            pc.t0 = pl.breaks[i];
            pc.t1 = pl.breaks[i + 1];
            pc.img0 = pl.images[i];
            pc.img1 = pl.images[i + 1];
            pc.path = geodesic_path(t, pc.img0, pc.img1);
            pl.pieces.push_back(std::move(pc));
        }
    }
}

size_t pl_self_map::total_breakpoints() const {
    size_t n = 0;
    for (const auto& pl : plans_) n += pl.breaks.size();
    return n;
}

namespace {

// Piece index holding fraction t on this plan (pieces partition [0,1]).
size_t piece_at(const edge_plan& pl, const rat& t) {
    size_t lo = 0, hi = pl.pieces.size();
    while (lo + 1 < hi) {
        size_t mid = (lo + hi) / 2;
        if (pl.pieces[mid].t0 <= t)
            lo = mid;
        else
            hi = mid;
    }
    return lo;
}

}  // namespace

tree_point apply(const pl_self_map& f, const tree_point& p) {
    validate_point(f.tree(), p);
    if (p.is_vertex()) return f.vertex_images()[p.vertex];
    const edge_plan& pl = f.plan(p.edge);
    const plan_piece& pc = pl.pieces[piece_at(pl, p.t)];
    if (pc.degenerate()) return pc.img0;
    rat s = (p.t - pc.t0) / (pc.t1 - pc.t0) * pc.path.length;
    return pc.path.locate(f.tree(), s);
}

tree_point apply_snapped(const pl_self_map& f, const tree_point& p) {
    tree_point q = apply(f, p);
    if (q.is_vertex()) return q;
    rat snapped = snap_to_grid(q.t);
    if (snapped == q.t) return q;
    return tree_point::on_edge(f.tree(), q.edge, snapped);
}

tree_point iterate(const pl_self_map& f, const tree_point& p, long n) {
    if (n < 0) throw input_error("iteration count must be nonnegative");
    tree_point x = p;
    for (long i = 0; i < n; ++i) x = apply_snapped(f, x);
    return x;
}

pl_self_map compose(const pl_self_map& f, const pl_self_map& g, size_t cap) {
    if (&f.tree() != &g.tree()) throw input_error("compose requires maps on the same tree");
    const metric_tree& t = f.tree();

    std::vector<tree_point> vimg(t.vertex_count());
    for (uint32_t v = 0; v < t.vertex_count(); ++v)
        vimg[v] = apply(f, g.vertex_images()[v]);

    std::vector<edge_plan> plans(t.edge_count());
    size_t total = 0;
    for (uint32_t e = 0; e < t.edge_count(); ++e) {
        const edge_plan& gp = g.plan(e);
        std::vector<rat> breaks;
        std::vector<tree_point> images;
        auto emit = [&](const rat& tcut, const tree_point& gval) {
            if (!breaks.empty() && breaks.back() == tcut) return;
            breaks.push_back(tcut);
            images.push_back(apply(f, gval));
        };
        for (const plan_piece& pc : gp.pieces) {
            emit(pc.t0, pc.img0);
            if (!pc.degenerate()) {
                // cut where the image geodesic changes edge, and at f's
                // breakpoints inside each crossed edge
                rat width = pc.t1 - pc.t0;
                std::vector<std::pair<rat, tree_point>> cuts;  // (arc pos, g-value)
                for (size_t i = 0; i < pc.path.segs.size(); ++i) {
                    const path_seg& sg = pc.path.segs[i];
                    if (i > 0)
                        cuts.push_back({pc.path.cum[i], pc.path.locate(t, pc.path.cum[i])});
                    const edge_plan& fp = f.plan(sg.edge);
                    for (size_t b = 1; b + 1 < fp.breaks.size(); ++b) {
                        const rat& tau = fp.breaks[b];
                        rat lo = std::min(sg.t0, sg.t1), hi = std::max(sg.t0, sg.t1);
                        if (!(tau > lo && tau < hi)) continue;
                        rat s = pc.path.cum[i] +
                                abs(rat(tau - sg.t0)) / abs(rat(sg.t1 - sg.t0)) * sg.len;
                        cuts.push_back({s, tree_point::on_edge(t, sg.edge, tau)});
                    }
                }
                std::sort(cuts.begin(), cuts.end(),
                          [](const auto& a, const auto& b) { return a.first < b.first; });
                for (const auto& [s, gval] : cuts) {
                    if (s <= 0 || s >= pc.path.length) continue;
                    emit(pc.t0 + s / pc.path.length * width, gval);
                }
            }
        }
        emit(rat(1), gp.images.back());
        total += breaks.size();
        if (total > cap)
            throw resource_error("composed plan exceeds breakpoint cap (" + std::to_string(cap) +
                                 ")");
        plans[e].breaks = std::move(breaks);
        plans[e].images = std::move(images);
    }
    return pl_self_map(g.tree_ptr(), std::move(vimg), std::move(plans));
}

pl_self_map power(const pl_self_map& f, long m, size_t cap) {
    if (m < 1) throw input_error("power requires m >= 1");
    pl_self_map g = f;
    for (long i = 2; i <= m; ++i) g = compose(f, g, cap);
    return g;
}

subtree image_subtree(const pl_self_map& f, const subtree& s) {
    const metric_tree& t = f.tree();
    if (s.degenerate) return subtree::single_point(apply(f, s.point));
    std::vector<edge_interval> out;
    std::vector<tree_point> isolated;
    for (const auto& iv : s.intervals) {
        const edge_plan& pl = f.plan(iv.edge);
        for (const plan_piece& pc : pl.pieces) {
            rat x = std::max(iv.lo, pc.t0), y = std::min(iv.hi, pc.t1);
            if (x > y) continue;
            if (pc.degenerate()) {
                isolated.push_back(pc.img0);
                continue;
            }
            if (x == y) continue;  // junction point, covered by the neighbour piece
            rat scale = pc.path.length / (pc.t1 - pc.t0);
            tree_path sub = pc.path.slice(t, (x - pc.t0) * scale, (y - pc.t0) * scale);
            for (const auto& sg : sub.segs)
                out.push_back({sg.edge, std::min(sg.t0, sg.t1), std::max(sg.t0, sg.t1)});
        }
    }
    if (out.empty()) {
        assert(!isolated.empty());
        return subtree::single_point(isolated.front());
    }
    return subtree::from_intervals(t, std::move(out));
}

eventual_image_result eventual_image(const pl_self_map& f, long max_iter) {
    if (max_iter < 1) throw input_error("max_iter must be >= 1");
    std::vector<subtree> chain;
    chain.push_back(subtree::whole(f.tree()));
    for (long n = 1; n <= max_iter; ++n) {
        subtree next = image_subtree(f, chain.back());
        if (next == chain.back()) {
            // first chain index already equal to J
            for (size_t i = 0; i < chain.size(); ++i)
                if (chain[i] == next)
                    return {next, true, static_cast<long>(i == 0 ? n : i)};
        }
        chain.push_back(std::move(next));
    }
    return {chain.back(), false, max_iter};
}

// ---------------------------------------------------------------------------
// region

void region::canonicalize(const metric_tree& tree) {
    std::sort(segments.begin(), segments.end(), [](const edge_interval& a, const edge_interval& b) {
        if (a.edge != b.edge) return a.edge < b.edge;
        if (a.lo != b.lo) return a.lo < b.lo;
        return a.hi < b.hi;
    });
    std::vector<edge_interval> merged;
    for (const auto& s : segments) {
        if (s.lo == s.hi) {
            points.push_back(tree_point::on_edge(tree, s.edge, s.lo));
            continue;
        }
        if (!merged.empty() && merged.back().edge == s.edge && s.lo <= merged.back().hi) {
            if (s.hi > merged.back().hi) merged.back().hi = s.hi;
        } else {
            merged.push_back(s);
        }
    }
    segments = std::move(merged);
    std::sort(points.begin(), points.end());
    points.erase(std::unique(points.begin(), points.end()), points.end());
    // drop points already covered by a segment
    std::vector<tree_point> keep;
    for (const auto& p : points) {
        bool covered = false;
        for (const auto& s : segments) {
            if (p.is_vertex()) {
                const tree_edge& ed = tree.edge(s.edge);
                if ((s.lo == 0 && ed.u == p.vertex) || (s.hi == 1 && ed.v == p.vertex)) {
                    covered = true;
                    break;
                }
            } else if (static_cast<uint32_t>(p.edge) == s.edge && p.t >= s.lo && p.t <= s.hi) {
                covered = true;
                break;
            }
        }
        if (!covered) keep.push_back(p);
    }
    points = std::move(keep);
}

bool region::contains(const metric_tree& tree, const tree_point& p) const {
    for (const auto& s : segments) {
        if (p.is_vertex()) {
            const tree_edge& ed = tree.edge(s.edge);
            if ((s.lo == 0 && ed.u == p.vertex) || (s.hi == 1 && ed.v == p.vertex)) return true;
        } else if (static_cast<uint32_t>(p.edge) == s.edge && p.t >= s.lo && p.t <= s.hi) {
            return true;
        }
    }
    for (const auto& q : points)
        if (q == p) return true;
    return false;
}

bool region::subset_of(const metric_tree& tree, const region& other) const {
    for (const auto& p : points)
        if (!other.contains(tree, p)) return false;
    for (const auto& s : segments) {
        bool covered = false;
        for (const auto& o : other.segments)
            if (o.edge == s.edge && o.lo <= s.lo && s.hi <= o.hi) {
                covered = true;
                break;
            }
        if (!covered) return false;
    }
    return true;
}

bool region::operator==(const region& o) const {
    if (segments.size() != o.segments.size() || points.size() != o.points.size()) return false;
    for (size_t i = 0; i < segments.size(); ++i)
        if (segments[i].edge != o.segments[i].edge || segments[i].lo != o.segments[i].lo ||
            segments[i].hi != o.segments[i].hi)
            return false;
    for (size_t i = 0; i < points.size(); ++i)
        if (!(points[i] == o.points[i])) return false;
    return true;
}

void region::add(const region& o, const metric_tree& tree) {
    segments.insert(segments.end(), o.segments.begin(), o.segments.end());
    points.insert(points.end(), o.points.begin(), o.points.end());
    canonicalize(tree);
}

region region::from_subtree(const subtree& s) {
    region r;
    if (s.degenerate)
        r.points.push_back(s.point);
    else
        r.segments = s.intervals;
    return r;
}

region region::whole(const metric_tree& tree) {
    region r;
    for (uint32_t e = 0; e < tree.edge_count(); ++e) r.segments.push_back({e, rat(0), rat(1)});
    if (tree.edge_count() == 0) r.points.push_back(tree_point::at_vertex(0));
    return r;
}

bool region::is_connected(const metric_tree& tree) const {
    // connectivity of a finite union of closed connected pieces equals
    // connectivity of its intersection graph
    size_t n = segments.size() + points.size();
    if (n <= 1) return true;
    std::vector<size_t> uf(n);
    for (size_t i = 0; i < n; ++i) uf[i] = i;
    std::function<size_t(size_t)> find = [&](size_t x) {
        while (uf[x] != x) x = uf[x] = uf[uf[x]];
        return x;
    };
    auto unite = [&](size_t a, size_t b) { uf[find(a)] = find(b); };

    auto elem_point = [&](size_t i) -> const tree_point& { return points[i - segments.size()]; };
    auto touches_seg = [&](const edge_interval& s, const tree_point& p) {
        if (p.is_vertex()) {
            const tree_edge& ed = tree.edge(s.edge);
            return (s.lo == 0 && ed.u == p.vertex) || (s.hi == 1 && ed.v == p.vertex);
        }
        return static_cast<uint32_t>(p.edge) == s.edge && p.t >= s.lo && p.t <= s.hi;
    };
    auto segs_touch = [&](const edge_interval& a, const edge_interval& b) {
        if (a.edge == b.edge) return !(a.hi < b.lo || b.hi < a.lo);
        // distinct edges can only meet at a shared endpoint vertex
        const tree_edge& ea = tree.edge(a.edge);
        const tree_edge& eb = tree.edge(b.edge);
        uint32_t av[2] = {ea.u, ea.v}, bv[2] = {eb.u, eb.v};
        bool a_at[2] = {a.lo == 0, a.hi == 1}, b_at[2] = {b.lo == 0, b.hi == 1};
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j)
                if (a_at[i] && b_at[j] && av[i] == bv[j]) return true;
        return false;
    };
    for (size_t i = 0; i < n; ++i)
        for (size_t j = i + 1; j < n; ++j) {
            bool touch;
            if (i < segments.size() && j < segments.size())
                touch = segs_touch(segments[i], segments[j]);
            else if (i < segments.size())
                touch = touches_seg(segments[i], elem_point(j));
            else
                touch = elem_point(i) == elem_point(j);
            if (touch) unite(i, j);
        }
    size_t root = find(0);
    for (size_t i = 1; i < n; ++i)
        if (find(i) != root) return false;
    return true;
}

namespace {

rat point_to_interval_distance(const metric_tree& tree, const tree_point& p,
                               const edge_interval& iv) {
    if (!p.is_vertex() && static_cast<uint32_t>(p.edge) == iv.edge) {
        if (p.t >= iv.lo && p.t <= iv.hi) return rat(0);
        rat nearer = (p.t < iv.lo) ? iv.lo : iv.hi;
        return abs(rat(p.t - nearer)) * tree.edge(iv.edge).length;
    }
    // minimum over the interval is at an endpoint
    rat a = distance(tree, p, tree_point::on_edge(tree, iv.edge, iv.lo));
    rat b = distance(tree, p, tree_point::on_edge(tree, iv.edge, iv.hi));
    return std::min(a, b);
}

}  // namespace

rat distance_to_region(const metric_tree& tree, const tree_point& p, const region& s) {
    if (s.empty()) throw input_error("distance to empty region");
    rat best(-1);
    auto update = [&](const rat& d) {
        if (best < 0 || d < best) best = d;
    };
    for (const auto& iv : s.segments) update(point_to_interval_distance(tree, p, iv));
    for (const auto& q : s.points) update(distance(tree, p, q));
    return best;
}

rat sup_distance(const metric_tree& tree, const region& from, const region& to) {
    if (from.empty() || to.empty()) throw input_error("sup_distance over empty region");
    rat best(0);
    auto update = [&](const rat& d) {
        if (d > best) best = d;
    };
    for (const auto& p : from.points) update(distance_to_region(tree, p, to));
    for (const auto& iv : from.segments) {
        const rat len = tree.edge(iv.edge).length;
        // d((e,t), to) is piecewise linear in t with slopes ±len; its maximum
        // over [lo,hi] is attained at an endpoint or a crossing of two of the
        // candidate branch lines. Collect branch lines d_i(t) = base_i ± len·t.
        struct line {
            rat base, slope;
        };
        std::vector<line> lines;
        const tree_edge& ed = tree.edge(iv.edge);
        tree_point pu = tree_point::at_vertex(ed.u);
        tree_point pv = tree_point::at_vertex(ed.v);
        auto add_offedge = [&](const rat& du, const rat& dv) {
            lines.push_back({du, len});            // enter through u: du + t·len
            lines.push_back({dv + len, -len});      // enter through v: dv + (1-t)·len
        };
        for (const auto& q : to.points) {
            if (!q.is_vertex() && static_cast<uint32_t>(q.edge) == iv.edge) {
                lines.push_back({-q.t * len, len});   // |t - tq|·len, rising branch
                lines.push_back({q.t * len, -len});   // falling branch
            } else {
                add_offedge(distance(tree, pu, q), distance(tree, pv, q));
            }
        }
        for (const auto& s : to.segments) {
            if (s.edge == iv.edge) {
                lines.push_back({-s.hi * len, len});  // right of the segment
                lines.push_back({s.lo * len, -len});  // left of the segment
                lines.push_back({rat(0), rat(0)});    // inside: 0 (only valid inside; the
                                                      // pointwise check below keeps exactness)
            } else {
                add_offedge(point_to_interval_distance(tree, pu, s),
                            point_to_interval_distance(tree, pv, s));
            }
        }
        std::vector<rat> candidates = {iv.lo, iv.hi};
        for (size_t i = 0; i < lines.size(); ++i)
            for (size_t j = i + 1; j < lines.size(); ++j) {
                if (lines[i].slope == lines[j].slope) continue;
                rat tx = (lines[j].base - lines[i].base) / (lines[i].slope - lines[j].slope);
                if (tx > iv.lo && tx < iv.hi) candidates.push_back(tx);
            }
        for (const auto& tc : candidates)
            update(distance_to_region(tree, tree_point::on_edge(tree, iv.edge, tc), to));
    }
    return best;
}

rat hausdorff_regions(const metric_tree& tree, const region& a, const region& b) {
    return std::max(sup_distance(tree, a, b), sup_distance(tree, b, a));
}

// ---------------------------------------------------------------------------
// fixed points

region fixed_points_of_plan(const pl_self_map& g) {
    const metric_tree& t = g.tree();
    region out;
    for (uint32_t v = 0; v < t.vertex_count(); ++v)
        if (g.vertex_images()[v] == tree_point::at_vertex(v))
            out.points.push_back(tree_point::at_vertex(v));
    for (uint32_t e = 0; e < t.edge_count(); ++e) {
        const tree_edge& ed = t.edge(e);
        for (const plan_piece& pc : g.plan(e).pieces) {
            if (pc.degenerate()) {
                // constant piece: fixed iff the constant lies in the piece
                const tree_point& img = pc.img0;
                if (!img.is_vertex() && static_cast<uint32_t>(img.edge) == e && img.t >= pc.t0 &&
                    img.t <= pc.t1)
                    out.points.push_back(img);
                else if (img.is_vertex() &&
                         ((img.vertex == ed.u && pc.t0 == 0) || (img.vertex == ed.v && pc.t1 == 1)))
                    out.points.push_back(img);
                continue;
            }
            const rat K = pc.path.length / (pc.t1 - pc.t0);  // arc length per unit t
            for (size_t i = 0; i < pc.path.segs.size(); ++i) {
                const path_seg& sg = pc.path.segs[i];
                if (sg.edge != e) continue;
                // image fraction on this segment: tau(s) = alpha + beta * t
                const rat R = (sg.t1 - sg.t0) / sg.len;  // signed fraction per arc length
                const rat beta = K * R;
                const rat alpha = sg.t0 - (pc.t0 * K + pc.path.cum[i]) * R;
                // valid t-range: s(t) within [cum[i], cum[i+1]]
                const rat t_lo = pc.t0 + pc.path.cum[i] / K;
                const rat t_hi = pc.t0 + pc.path.cum[i + 1] / K;
                if (beta == 1) {
                    if (alpha == 0 && t_lo < t_hi) out.segments.push_back({e, t_lo, t_hi});
                    continue;
                }
                rat tstar = alpha / (1 - beta);
                if (tstar >= t_lo && tstar <= t_hi && tstar >= 0 && tstar <= 1)
                    out.points.push_back(tree_point::on_edge(t, e, tstar));
            }
        }
    }
    out.canonicalize(t);
    return out;
}

region fixed_points(const pl_self_map& f, long m, size_t cap) {
    if (m < 1) throw input_error("fixed_points requires m >= 1");
    pl_self_map g = power(f, m, cap);
    return fixed_points_of_plan(g);
}

periodic_points_result periodic_points(const pl_self_map& f, long max_period, size_t cap) {
    if (max_period < 1) throw input_error("max_period must be >= 1");
    periodic_points_result res;
    const region whole = region::whole(f.tree());
    pl_self_map g = f;
    for (long m = 1; m <= max_period; ++m) {
        if (m > 1) {
            try {
                g = compose(f, g, cap);
            } catch (const resource_error&) {
                res.truncated = true;
                break;
            }
        }
        res.per.add(fixed_points_of_plan(g), f.tree());
        res.computed_up_to = m;
        if (res.per == whole) break;  // nothing more can be added
    }
    res.connected = res.per.is_connected(f.tree());
    return res;
}

// ---------------------------------------------------------------------------
// injectivity surrogate

namespace {

struct global_piece {
    uint32_t edge;  // domain edge
    const plan_piece* pc;
};

// arc position on the piece path of an image point known to lie on segment i
rat arc_of(const plan_piece& pc, size_t seg_idx, const rat& tau) {
    const path_seg& sg = pc.path.segs[seg_idx];
    return pc.path.cum[seg_idx] + abs(rat(tau - sg.t0)) / abs(rat(sg.t1 - sg.t0)) * sg.len;
}

tree_point preimage_at_arc(const metric_tree& t, uint32_t edge, const plan_piece& pc,
                           const rat& s) {
    rat tt = pc.t0 + s / pc.path.length * (pc.t1 - pc.t0);
    return tree_point::on_edge(t, edge, tt);
}

}  // namespace

injectivity_report injectivity_check(const pl_self_map& f) {
    const metric_tree& t = f.tree();
    injectivity_report rep;
    auto add_collision = [&](const tree_point& a, const tree_point& b) {
        rep.injective = false;
        if (rep.collisions.size() < 8 && !(a == b)) rep.collisions.push_back({a, b});
    };

    std::vector<global_piece> pieces;
    for (uint32_t e = 0; e < t.edge_count(); ++e)
        for (const plan_piece& pc : f.plan(e).pieces) pieces.push_back({e, &pc});

    // degenerate pieces collapse an interval
    for (const auto& gp : pieces) {
        if (gp.pc->degenerate()) {
            rat mid0 = gp.pc->t0 + (gp.pc->t1 - gp.pc->t0) / 4;
            rat mid1 = gp.pc->t0 + (gp.pc->t1 - gp.pc->t0) / 2;
            add_collision(tree_point::on_edge(t, gp.edge, mid0),
                          tree_point::on_edge(t, gp.edge, mid1));
        }
    }

    // shared domain endpoints of two pieces (if any): breakpoint on the same
    // edge, or a shared vertex reached by both
    auto shared_domain_points = [&](const global_piece& a, const global_piece& b) {
        std::vector<tree_point> pts;
        if (a.edge == b.edge) {
            if (a.pc->t1 == b.pc->t0) pts.push_back(tree_point::on_edge(t, a.edge, a.pc->t1));
            if (b.pc->t1 == a.pc->t0) pts.push_back(tree_point::on_edge(t, a.edge, b.pc->t1));
        } else {
            const tree_edge& ea = t.edge(a.edge);
            const tree_edge& eb = t.edge(b.edge);
            uint32_t av[2] = {ea.u, ea.v}, bv[2] = {eb.u, eb.v};
            bool a_end[2] = {a.pc->t0 == 0, a.pc->t1 == 1};
            bool b_end[2] = {b.pc->t0 == 0, b.pc->t1 == 1};
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j)
                    if (a_end[i] && b_end[j] && av[i] == bv[j])
                        pts.push_back(tree_point::at_vertex(av[i]));
        }
        return pts;
    };

    // preimage(s) of an image point inside a piece (image point must lie on the
    // piece's image arc)
    auto preimages_of = [&](const global_piece& gp, const tree_point& z) {
        std::vector<tree_point> out;
        if (gp.pc->degenerate()) {
            if (gp.pc->img0 == z) out.push_back(tree_point::on_edge(t, gp.edge, gp.pc->t0));
            return out;
        }
        for (size_t i = 0; i < gp.pc->path.segs.size(); ++i) {
            const path_seg& sg = gp.pc->path.segs[i];
            rat lo = std::min(sg.t0, sg.t1), hi = std::max(sg.t0, sg.t1);
            if (z.is_vertex()) {
                const tree_edge& ed = t.edge(sg.edge);
                rat tau(-1);
                if (ed.u == z.vertex && lo == 0) tau = 0;
                if (ed.v == z.vertex && hi == 1) tau = 1;
                if (tau >= 0 && tau >= lo && tau <= hi)
                    out.push_back(preimage_at_arc(t, gp.edge, *gp.pc, arc_of(*gp.pc, i, tau)));
            } else if (static_cast<uint32_t>(z.edge) == sg.edge && z.t >= lo && z.t <= hi) {
                out.push_back(preimage_at_arc(t, gp.edge, *gp.pc, arc_of(*gp.pc, i, z.t)));
            }
        }
        return out;
    };

    // legitimacy of a single-point contact between two pieces' image arcs
    auto legitimate_touch = [&](const global_piece& a, const global_piece& b,
                                const tree_point& z) {
        for (const auto& sp : shared_domain_points(a, b))
            if (apply(f, sp) == z) return true;
        return false;
    };
    auto handle_touch = [&](const global_piece& a, const global_piece& b, const tree_point& z) {
        if (legitimate_touch(a, b, z)) return;
        auto pa = preimages_of(a, z);
        auto pb = preimages_of(b, z);
        for (const auto& x : pa)
            for (const auto& y : pb)
                if (!(x == y)) {
                    add_collision(x, y);
                    return;
                }
    };

    // per image edge: collect covered intervals with owners
    struct owned_interval {
        rat lo, hi;
        size_t owner;
    };
    std::vector<std::vector<owned_interval>> per_edge(t.edge_count());
    // per image vertex: pieces whose arc contains the vertex
    std::vector<std::vector<size_t>> at_vertex(t.vertex_count());
    for (size_t pi = 0; pi < pieces.size(); ++pi) {
        const auto& gp = pieces[pi];
        if (gp.pc->degenerate()) {
            if (gp.pc->img0.is_vertex()) at_vertex[gp.pc->img0.vertex].push_back(pi);
            continue;
        }
        std::set<uint32_t> verts;
        for (const auto& sg : gp.pc->path.segs) {
            rat lo = std::min(sg.t0, sg.t1), hi = std::max(sg.t0, sg.t1);
            per_edge[sg.edge].push_back({lo, hi, pi});
            const tree_edge& ed = t.edge(sg.edge);
            if (lo == 0) verts.insert(ed.u);
            if (hi == 1) verts.insert(ed.v);
        }
        for (const auto& e : {gp.pc->img0, gp.pc->img1})
            if (e.is_vertex()) verts.insert(e.vertex);
        for (uint32_t v : verts) at_vertex[v].push_back(pi);
    }

    for (uint32_t e = 0; e < t.edge_count(); ++e) {
        auto& ivs = per_edge[e];
        std::sort(ivs.begin(), ivs.end(), [](const owned_interval& a, const owned_interval& b) {
            if (a.lo != b.lo) return a.lo < b.lo;
            return a.hi < b.hi;
        });
        for (size_t i = 0; i < ivs.size(); ++i) {
            for (size_t j = i + 1; j < ivs.size(); ++j) {
                if (ivs[j].lo > ivs[i].hi) break;
                if (ivs[i].owner == ivs[j].owner) continue;
                const auto& a = pieces[ivs[i].owner];
                const auto& b = pieces[ivs[j].owner];
                if (ivs[j].lo < ivs[i].hi) {
                    // positive-length overlap: any interior point has two preimages
                    rat z = (std::max(ivs[i].lo, ivs[j].lo) + std::min(ivs[i].hi, ivs[j].hi)) / 2;
                    tree_point zp = tree_point::on_edge(t, e, z);
                    auto pa = preimages_of(a, zp);
                    auto pb = preimages_of(b, zp);
                    if (!pa.empty() && !pb.empty()) add_collision(pa.front(), pb.front());
                } else {
                    tree_point zp = tree_point::on_edge(t, e, ivs[j].lo);
                    if (!zp.is_vertex())  // vertex touches handled below
                        handle_touch(a, b, zp);
                }
            }
        }
    }
    for (uint32_t v = 0; v < t.vertex_count(); ++v) {
        auto& ps = at_vertex[v];
        std::sort(ps.begin(), ps.end());
        ps.erase(std::unique(ps.begin(), ps.end()), ps.end());
        tree_point zp = tree_point::at_vertex(v);
        for (size_t i = 0; i < ps.size(); ++i)
            for (size_t j = i + 1; j < ps.size(); ++j) handle_touch(pieces[ps[i]], pieces[ps[j]], zp);
    }
    return rep;
}

}  // namespace treedyn
