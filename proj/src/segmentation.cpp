#include "swrecon/segmentation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <sstream>

#include "swrecon/errors.hpp"

namespace swrecon {

namespace {

// Neighborhood graph for curve-shaped clouds: mutual k-nearest-neighbor
// edges, additionally capped at 3x the local nearest-neighbor spacing,
// then augmented so the graph is connected (each extra component gets one
// edge to its nearest point in the already-connected part). Mutuality
// prunes edges from sparse into dense regions; the length cap prunes
// edges between nearby parallel passes of the trajectory, which sit many
// local spacings away even where densities match.
std::vector<std::vector<int>> connectivity_graph(const Eigen::MatrixXd& pts, int k) {
    const int n = static_cast<int>(pts.rows());
    const int kk = std::min(k, n - 1);
    std::vector<std::vector<int>> knn(static_cast<std::size_t>(n));
    std::vector<double> kth(static_cast<std::size_t>(n), 0.0);  // robust local spacing scale
    std::vector<std::pair<double, int>> dist(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j)
            dist[static_cast<std::size_t>(j)] = {(pts.row(i) - pts.row(j)).squaredNorm(), j};
        dist[static_cast<std::size_t>(i)].first = std::numeric_limits<double>::max();
        std::partial_sort(dist.begin(), dist.begin() + kk, dist.end());
        kth[static_cast<std::size_t>(i)] = std::sqrt(dist[static_cast<std::size_t>(kk - 1)].first);
        for (int m = 0; m < kk; ++m) knn[static_cast<std::size_t>(i)].push_back(dist[static_cast<std::size_t>(m)].second);
        std::sort(knn[static_cast<std::size_t>(i)].begin(), knn[static_cast<std::size_t>(i)].end());
    }
    std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        for (int j : knn[static_cast<std::size_t>(i)])
            if (j > i && std::binary_search(knn[static_cast<std::size_t>(j)].begin(),
                                            knn[static_cast<std::size_t>(j)].end(), i)) {
                double len = (pts.row(i) - pts.row(j)).norm();
                double local = std::max(kth[static_cast<std::size_t>(i)], kth[static_cast<std::size_t>(j)]);
                if (len > 1.5 * local) continue;
                adj[static_cast<std::size_t>(i)].push_back(j);
                adj[static_cast<std::size_t>(j)].push_back(i);
            }
    for (auto& list : adj) std::sort(list.begin(), list.end());

    // Connect components by repeatedly adding the globally nearest
    // cross-component pair (single-linkage bridging), so each added edge
    // joins genuinely adjacent fragments rather than an arbitrary one.
    std::vector<int> comp(static_cast<std::size_t>(n), -1);
    int n_comp = 0;
    for (int start = 0; start < n; ++start) {
        if (comp[static_cast<std::size_t>(start)] >= 0) continue;
        std::vector<int> stack{start};
        comp[static_cast<std::size_t>(start)] = n_comp;
        while (!stack.empty()) {
            int v = stack.back();
            stack.pop_back();
            for (int w : adj[static_cast<std::size_t>(v)])
                if (comp[static_cast<std::size_t>(w)] < 0) {
                    comp[static_cast<std::size_t>(w)] = n_comp;
                    stack.push_back(w);
                }
        }
        ++n_comp;
    }
    while (n_comp > 1) {
        double best = std::numeric_limits<double>::max();
        int bi = -1, bj = -1;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) {
                if (comp[static_cast<std::size_t>(i)] == comp[static_cast<std::size_t>(j)]) continue;
                double d = (pts.row(i) - pts.row(j)).squaredNorm();
                if (d < best) {
                    best = d;
                    bi = i;
                    bj = j;
                }
            }
        adj[static_cast<std::size_t>(bi)].push_back(bj);
        adj[static_cast<std::size_t>(bj)].push_back(bi);
        int from = comp[static_cast<std::size_t>(bj)], to = comp[static_cast<std::size_t>(bi)];
        for (int i = 0; i < n; ++i)
            if (comp[static_cast<std::size_t>(i)] == from) comp[static_cast<std::size_t>(i)] = to;
        --n_comp;
    }
    return adj;
}

struct HeapEdge {
    double cost;
    int a, b;           // cluster slots, a < b
    long stamp_a, stamp_b;
};
struct HeapOrder {
    bool operator()(const HeapEdge& x, const HeapEdge& y) const {
        if (x.cost != y.cost) return x.cost > y.cost;
        if (x.a != y.a) return x.a > y.a;
        return x.b > y.b;
    }
};

}  // namespace

std::vector<int> agglomerative_cluster(const Eigen::MatrixXd& points, int n_clusters) {
    const int n = static_cast<int>(points.rows());
    if (n_clusters < 1 || n_clusters > n)
        throw ConfigError("agglomerative_cluster: need 1 <= L <= n");
    std::vector<int> labels(static_cast<std::size_t>(n), -1);
    if (n_clusters == n) {
        std::iota(labels.begin(), labels.end(), 0);
        return labels;
    }

    // Ward merges restricted to a k-NN connectivity graph: merge cost is
    // the variance increase |A||B|/(|A|+|B|) ||c_A - c_B||^2, computed
    // from centroids, greedily minimized over adjacent cluster pairs.
    auto adj = connectivity_graph(points, 10);
    std::vector<Eigen::VectorXd> centroid(static_cast<std::size_t>(n));
    std::vector<double> size(static_cast<std::size_t>(n), 1.0);
    std::vector<long> stamp(static_cast<std::size_t>(n), 0);
    std::vector<char> alive(static_cast<std::size_t>(n), 1);
    std::vector<std::vector<int>> members(static_cast<std::size_t>(n));
    std::vector<std::vector<int>> nbrs(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        centroid[static_cast<std::size_t>(i)] = points.row(i).transpose();
        members[static_cast<std::size_t>(i)] = {i};
        nbrs[static_cast<std::size_t>(i)] = adj[static_cast<std::size_t>(i)];
    }

    auto ward_cost = [&](int a, int b) {
        double na = size[static_cast<std::size_t>(a)], nb = size[static_cast<std::size_t>(b)];
        return na * nb / (na + nb) *
               (centroid[static_cast<std::size_t>(a)] - centroid[static_cast<std::size_t>(b)]).squaredNorm();
    };

    std::priority_queue<HeapEdge, std::vector<HeapEdge>, HeapOrder> heap;
    for (int i = 0; i < n; ++i)
        for (int j : nbrs[static_cast<std::size_t>(i)])
            if (i < j) heap.push({ward_cost(i, j), i, j, 0, 0});

    int remaining = n;
    while (remaining > n_clusters) {
        if (heap.empty()) throw NumericError("agglomerative_cluster: ran out of candidate merges");
        HeapEdge e = heap.top();
        heap.pop();
        if (!alive[static_cast<std::size_t>(e.a)] || !alive[static_cast<std::size_t>(e.b)] ||
            stamp[static_cast<std::size_t>(e.a)] != e.stamp_a ||
            stamp[static_cast<std::size_t>(e.b)] != e.stamp_b)
            continue;
        const int keep = e.a, drop = e.b;  // a < b by construction
        const auto ks = static_cast<std::size_t>(keep), ds = static_cast<std::size_t>(drop);
        double na = size[ks], nb = size[ds];
        centroid[ks] = (na * centroid[ks] + nb * centroid[ds]) / (na + nb);
        size[ks] = na + nb;
        members[ks].insert(members[ks].end(), members[ds].begin(), members[ds].end());
        members[ds].clear();
        alive[ds] = 0;
        ++stamp[ks];

        // merge neighbor lists, dropping self references
        std::vector<int> merged;
        merged.reserve(nbrs[ks].size() + nbrs[ds].size());
        for (int c : nbrs[ks])
            if (c != drop && alive[static_cast<std::size_t>(c)]) merged.push_back(c);
        for (int c : nbrs[ds])
            if (c != keep && alive[static_cast<std::size_t>(c)]) merged.push_back(c);
        std::sort(merged.begin(), merged.end());
        merged.erase(std::unique(merged.begin(), merged.end()), merged.end());
        nbrs[ks] = merged;
        nbrs[ds].clear();

        for (int c : merged) {
            auto cs = static_cast<std::size_t>(c);
            // keep c's neighbor list consistent
            auto& cl = nbrs[cs];
            bool has_keep = false;
            for (std::size_t w = 0; w < cl.size();) {
                if (cl[w] == drop) {
                    cl[w] = cl.back();
                    cl.pop_back();
                    continue;
                }
                if (cl[w] == keep) has_keep = true;
                ++w;
            }
            if (!has_keep) cl.push_back(keep);
            int lo = std::min(keep, c), hi = std::max(keep, c);
            heap.push({ward_cost(lo, hi), lo, hi, stamp[static_cast<std::size_t>(lo)],
                       stamp[static_cast<std::size_t>(hi)]});
        }
        --remaining;
    }

    int next_label = 0;
    for (int i = 0; i < n; ++i) {
        auto is = static_cast<std::size_t>(i);
        if (!alive[is]) continue;
        for (int row : members[is]) labels[static_cast<std::size_t>(row)] = next_label;
        ++next_label;
    }
    return labels;
}

namespace {

std::vector<double> nn_distances(const Eigen::MatrixXd& points, std::uint64_t seed) {
    const Eigen::Index n = points.rows();
    if (n < 2) throw ConfigError("nearest-neighbor distances need at least 2 points");
    const Eigen::Index cap = 4000;
    std::vector<Eigen::Index> idx;
    if (n <= cap) {
        idx.resize(static_cast<std::size_t>(n));
        std::iota(idx.begin(), idx.end(), 0);
    } else {
        Rng rng = Rng::child(seed, 0x5eed);
        idx.resize(static_cast<std::size_t>(cap));
        for (auto& v : idx) v = static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(n)));
        std::sort(idx.begin(), idx.end());
        idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
    }
    std::vector<double> nn(idx.size());
    for (std::size_t a = 0; a < idx.size(); ++a) {
        double best = std::numeric_limits<double>::max();
        for (Eigen::Index j = 0; j < n; ++j) {
            if (j == idx[a]) continue;
            double d2 = (points.row(idx[a]) - points.row(j)).squaredNorm();
            if (d2 < best) best = d2;
        }
        nn[a] = std::sqrt(best);
    }
    return nn;
}

}  // namespace

double median_nn_distance(const Eigen::MatrixXd& points, std::uint64_t seed) {
    auto nn = nn_distances(points, seed);
    std::nth_element(nn.begin(), nn.begin() + static_cast<std::ptrdiff_t>(nn.size() / 2), nn.end());
    return nn[nn.size() / 2];
}

double auto_anchor_radius(const Eigen::MatrixXd& points, const Eigen::VectorXd& x0,
                          std::uint64_t seed) {
    auto nn = nn_distances(points, seed);
    std::sort(nn.begin(), nn.end());
    const double median = nn[nn.size() / 2];
    const double widest_gap = nn.back();
    double d0 = std::numeric_limits<double>::max();
    for (Eigen::Index i = 0; i < points.rows(); ++i)
        d0 = std::min(d0, (points.row(i).transpose() - x0).norm());
    return std::max({3.0 * median, 1.5 * widest_gap, 1.1 * d0});
}

std::vector<PieceWindow> split_distribution(const TimeDistribution& dist,
                                            const std::vector<int>& counts, double t0) {
    long total = 0;
    for (std::size_t l = 0; l < counts.size(); ++l) {
        if (counts[l] <= 0)
            throw SegmentationError("split_distribution: piece " + std::to_string(l) +
                                    " has no points (degenerate piece)");
        total += counts[l];
    }
    std::vector<PieceWindow> windows(counts.size());
    double lo = t0;
    long cum = 0;
    for (std::size_t l = 0; l < counts.size(); ++l) {
        cum += counts[l];
        double hi = (l + 1 == counts.size())
                        ? dist.high()  // last boundary is exact, so windows tile the support
                        : dist.inv_cdf(static_cast<double>(cum) / static_cast<double>(total));
        windows[l].t0 = lo;
        windows[l].T = hi - lo;
        windows[l].dist = dist.truncate(lo, hi);
        lo = hi;
    }
    return windows;
}

namespace {

int count_within(const Eigen::MatrixXd& points, const std::vector<int>& rows,
                 const Eigen::VectorXd& center, double r2) {
    int c = 0;
    for (int row : rows)
        if ((points.row(row).transpose() - center).squaredNorm() <= r2) ++c;
    return c;
}

}  // namespace

namespace {

// Shortest-path distances from a source within one cluster's induced
// subgraph of the neighborhood graph (edge weights are Euclidean).
std::vector<double> cluster_geodesics(const Eigen::MatrixXd& points,
                                      const std::vector<std::vector<int>>& graph,
                                      const std::vector<int>& rows, int source) {
    std::vector<double> dist(static_cast<std::size_t>(points.rows()),
                             std::numeric_limits<double>::infinity());
    std::vector<char> in_cluster(static_cast<std::size_t>(points.rows()), 0);
    for (int row : rows) in_cluster[static_cast<std::size_t>(row)] = 1;
    using Entry = std::pair<double, int>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
    dist[static_cast<std::size_t>(source)] = 0.0;
    heap.push({0.0, source});
    while (!heap.empty()) {
        auto [d, v] = heap.top();
        heap.pop();
        if (d > dist[static_cast<std::size_t>(v)]) continue;
        for (int w : graph[static_cast<std::size_t>(v)]) {
            if (!in_cluster[static_cast<std::size_t>(w)]) continue;
            double nd = d + (points.row(v) - points.row(w)).norm();
            if (nd < dist[static_cast<std::size_t>(w)]) {
                dist[static_cast<std::size_t>(w)] = nd;
                heap.push({nd, w});
            }
        }
    }
    return dist;
}

}  // namespace

OrderedClusters order_and_anchor(const Eigen::MatrixXd& points, const std::vector<int>& labels,
                                 const Eigen::VectorXd& x0, double radius) {
    if (radius <= 0.0) throw ConfigError("order_and_anchor: radius must be positive");
    const int L = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
    if (L < 1) throw ConfigError("order_and_anchor: empty clustering");
    const double r2 = radius * radius;
    const auto graph = connectivity_graph(points, 10);

    std::vector<std::vector<int>> clusters(static_cast<std::size_t>(L));
    for (std::size_t i = 0; i < labels.size(); ++i)
        clusters[static_cast<std::size_t>(labels[i])].push_back(static_cast<int>(i));

    // Anchor at the initial state: the first piece must reach B_r(x0).
    int src = 0;
    double src_d = std::numeric_limits<double>::max();
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        double d2 = (points.row(i).transpose() - x0).squaredNorm();
        if (d2 < src_d) {
            src_d = d2;
            src = static_cast<int>(i);
        }
    }
    if (src_d > r2)
        throw SegmentationError("anchoring failed: no cluster intersects the radius-" +
                                std::to_string(radius) + " ball around the initial state");

    // Arc position of every point: geodesic distance from the anchor along
    // the neighborhood graph. Clusters are ordered by their median arc
    // position, and each piece's head is its earliest member. This uses
    // the curve structure globally instead of chaining local ball counts,
    // which sampling gaps at fast segments routinely break.
    std::vector<int> all_rows(static_cast<std::size_t>(points.rows()));
    std::iota(all_rows.begin(), all_rows.end(), 0);
    auto geo = cluster_geodesics(points, graph, all_rows, src);

    std::vector<std::pair<double, int>> order;  // (median arc position, cluster)
    for (int c = 0; c < L; ++c) {
        std::vector<double> g;
        g.reserve(clusters[static_cast<std::size_t>(c)].size());
        for (int row : clusters[static_cast<std::size_t>(c)]) {
            double v = geo[static_cast<std::size_t>(row)];
            if (!std::isfinite(v)) {
                std::ostringstream os;
                os << "ordering failed: chain breaks after cluster " << c
                   << "; orphaned clusters: " << c;
                throw SegmentationError(os.str());
            }
            g.push_back(v);
        }
        std::nth_element(g.begin(), g.begin() + static_cast<std::ptrdiff_t>(g.size() / 2), g.end());
        order.emplace_back(g[g.size() / 2], c);
    }
    std::sort(order.begin(), order.end());

    OrderedClusters out;
    for (std::size_t l = 0; l < order.size(); ++l) {
        int c = order[l].second;
        const auto& rows = clusters[static_cast<std::size_t>(c)];
        int head = rows.front();
        double head_g = std::numeric_limits<double>::max();
        for (int row : rows)
            if (geo[static_cast<std::size_t>(row)] < head_g) {
                head_g = geo[static_cast<std::size_t>(row)];
                head = row;
            }
        out.member_rows.push_back(rows);
        out.head_rows.push_back(head);
    }

    // Junction sanity: consecutive pieces must actually adjoin. A gap an
    // order of magnitude past the anchoring radius means the data is
    // disconnected and the recovered order is meaningless.
    for (std::size_t l = 0; l + 1 < out.member_rows.size(); ++l) {
        double best = std::numeric_limits<double>::max();
        for (int a : out.member_rows[l])
            for (int b : out.member_rows[l + 1])
                best = std::min(best, (points.row(a) - points.row(b)).squaredNorm());
        if (best > 100.0 * r2) {
            std::ostringstream os;
            os << "ordering failed: chain breaks after cluster " << order[l].second
               << "; orphaned clusters:";
            for (std::size_t m = l + 1; m < order.size(); ++m) os << " " << order[m].second;
            throw SegmentationError(os.str());
        }
    }
    return out;
}

// Retired walk kept out of the build: the greedy ball-count chain.
#if 0
OrderedClusters order_and_anchor_chain(const Eigen::MatrixXd& points, const std::vector<int>& labels,
                                       const Eigen::VectorXd& x0, double radius) {
    const int L = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
    const double r2 = radius * radius;
    const auto graph = connectivity_graph(points, 10);

    std::vector<std::vector<int>> clusters(static_cast<std::size_t>(L));
    for (std::size_t i = 0; i < labels.size(); ++i)
        clusters[static_cast<std::size_t>(labels[i])].push_back(static_cast<int>(i));

    // First piece: cluster with the most points inside B_r(x0).
    int first = -1, best_overlap = 0;
    for (int c = 0; c < L; ++c) {
        int o = count_within(points, clusters[static_cast<std::size_t>(c)], x0, r2);
        if (o > best_overlap) {
            best_overlap = o;
            first = c;
        }
    }
    if (first < 0)
        throw SegmentationError("anchoring failed: no cluster intersects the radius-" +
                                std::to_string(radius) + " ball around the initial state");

    OrderedClusters out;
    std::vector<char> used(static_cast<std::size_t>(L), 0);

    // Head of the first piece: nearest point to x0 within it.
    int head = clusters[static_cast<std::size_t>(first)].front();
    double head_d = std::numeric_limits<double>::max();
    for (int row : clusters[static_cast<std::size_t>(first)]) {
        double d2 = (points.row(row).transpose() - x0).squaredNorm();
        if (d2 < head_d) {
            head_d = d2;
            head = row;
        }
    }

    int current = first;
    used[static_cast<std::size_t>(first)] = 1;
    for (int placed = 0;; ++placed) {
        out.member_rows.push_back(clusters[static_cast<std::size_t>(current)]);
        out.head_rows.push_back(head);
        if (placed + 1 == L) break;

        const auto& rows = clusters[static_cast<std::size_t>(current)];
        const Eigen::VectorXd head_pt = points.row(head).transpose();

        // Tail: the far extremity of the piece, taken as the member
        // farthest from the head along the in-cluster neighborhood graph
        // (arc length, not Euclidean reach). Sampling density gradients
        // along fast segments make in-ball counts pick interior points,
        // so the geodesic criterion replaces the count argmin here.
        auto geo = cluster_geodesics(points, graph, rows, head);
        int tail = -1;
        double tail_dist = -1.0;
        bool any_outside_ball = false;
        for (int row : rows) {
            double euclid2 = (points.row(row).transpose() - head_pt).squaredNorm();
            if (euclid2 > r2) any_outside_ball = true;
            double g = geo[static_cast<std::size_t>(row)];
            if (std::isfinite(g) && euclid2 > r2 && g > tail_dist) {
                tail_dist = g;
                tail = row;
            }
        }
        if (tail < 0 && any_outside_ball) {
            // cluster disconnected in the graph: fall back to Euclidean
            for (int row : rows) {
                double euclid2 = (points.row(row).transpose() - head_pt).squaredNorm();
                if (euclid2 > r2 && euclid2 > tail_dist) {
                    tail_dist = euclid2;
                    tail = row;
                }
            }
        }
        if (tail < 0) {
            std::ostringstream os;
            os << "ordering failed: cluster " << current << " is shorter than 2r (r=" << radius
               << "), no tail candidate outside the head ball";
            throw SegmentationError(os.str());
        }
        const Eigen::VectorXd tail_pt = points.row(tail).transpose();

        // Next piece: unused cluster intersecting B_r(tail) the most.
        int next = -1;
        best_overlap = 0;
        for (int c = 0; c < L; ++c) {
            if (used[static_cast<std::size_t>(c)]) continue;
            int o = count_within(points, clusters[static_cast<std::size_t>(c)], tail_pt, r2);
            if (o > best_overlap) {
                best_overlap = o;
                next = c;
            }
        }
        if (next < 0) {
            // Sparse sampling can leave a junction gap wider than r while
            // nearby passes keep r small. Continue along the exit
            // direction: nearest unused point in the forward half-space
            // (outward from the tail's local neighborhood), within 10r.
            Eigen::VectorXd local_mean = Eigen::VectorXd::Zero(points.cols());
            int local_n = 0;
            for (int row : rows)
                if ((points.row(row).transpose() - tail_pt).squaredNorm() <= r2) {
                    local_mean += points.row(row).transpose();
                    ++local_n;
                }
            Eigen::VectorXd dir = local_n > 0 ? (tail_pt - local_mean / local_n).eval()
                                              : (tail_pt - head_pt).eval();
            if (dir.norm() < 1e-12) dir = tail_pt - head_pt;

            double best_d = std::numeric_limits<double>::max();
            for (int c = 0; c < L; ++c) {
                if (used[static_cast<std::size_t>(c)]) continue;
                for (int row : clusters[static_cast<std::size_t>(c)]) {
                    Eigen::VectorXd delta = points.row(row).transpose() - tail_pt;
                    if (delta.dot(dir) <= 0.0) continue;
                    double d = delta.squaredNorm();
                    if (d < best_d) {
                        best_d = d;
                        next = c;
                    }
                }
            }
            if (next < 0 || best_d > 100.0 * r2) {
                std::ostringstream os;
                os << "ordering failed: chain breaks after cluster " << current
                   << "; orphaned clusters:";
                for (int c = 0; c < L; ++c)
                    if (!used[static_cast<std::size_t>(c)]) os << " " << c;
                throw SegmentationError(os.str());
            }
        }

        // Head of the next piece: its member with the most neighbors from
        // the current cluster (ties to smallest row index).
        head = -1;
        int head_count = 0;
        for (int row : clusters[static_cast<std::size_t>(next)]) {
            int c = count_within(points, rows, points.row(row).transpose(), r2);
            if (c > head_count) {
                head_count = c;
                head = row;
            }
        }
        if (head < 0) head = clusters[static_cast<std::size_t>(next)].front();
        used[static_cast<std::size_t>(next)] = 1;
        current = next;
    }
    return out;
}

SegmentationResult segment_trajectory(const ObservationPiece& input, const SegmentationOptions& opt) {
    const Eigen::Index n = input.points.rows();
    if (n < 2) throw ConfigError("segment_trajectory: need at least 2 points");
    if (opt.clusters < 1 || static_cast<Eigen::Index>(opt.clusters) > n)
        throw ConfigError("segment_trajectory: invalid cluster count");

    std::vector<int> labels;
    if (n <= opt.linkage_cap) {
        labels = agglomerative_cluster(input.points, opt.clusters);
    } else {
        // Subsample for linkage, then assign remaining points to the
        // nearest cluster medoid.
        Rng rng = Rng::child(opt.seed, 0xC1u);
        std::vector<Eigen::Index> keep(static_cast<std::size_t>(n));
        std::iota(keep.begin(), keep.end(), 0);
        for (std::size_t i = keep.size(); i > 1; --i)
            std::swap(keep[i - 1], keep[rng.index(i)]);
        keep.resize(static_cast<std::size_t>(opt.linkage_cap));
        std::sort(keep.begin(), keep.end());

        Eigen::MatrixXd sub(static_cast<Eigen::Index>(keep.size()), input.points.cols());
        for (std::size_t i = 0; i < keep.size(); ++i) sub.row(static_cast<Eigen::Index>(i)) = input.points.row(keep[i]);
        std::vector<int> sub_labels = agglomerative_cluster(sub, opt.clusters);

        Eigen::MatrixXd medoids(opt.clusters, input.points.cols());
        for (int c = 0; c < opt.clusters; ++c) {
            std::vector<Eigen::Index> members;
            for (std::size_t i = 0; i < sub_labels.size(); ++i)
                if (sub_labels[i] == c) members.push_back(static_cast<Eigen::Index>(i));
            double best = std::numeric_limits<double>::max();
            Eigen::Index best_i = members.front();
            for (Eigen::Index a : members) {
                double acc = 0.0;
                for (Eigen::Index b : members) acc += (sub.row(a) - sub.row(b)).norm();
                if (acc < best) {
                    best = acc;
                    best_i = a;
                }
            }
            medoids.row(c) = sub.row(best_i);
        }
        labels.assign(static_cast<std::size_t>(n), -1);
        for (std::size_t i = 0; i < keep.size(); ++i) labels[static_cast<std::size_t>(keep[i])] = sub_labels[i];
        for (Eigen::Index i = 0; i < n; ++i) {
            if (labels[static_cast<std::size_t>(i)] >= 0) continue;
            int best_c = 0;
            double best_d = std::numeric_limits<double>::max();
            for (int c = 0; c < opt.clusters; ++c) {
                double d2 = (input.points.row(i) - medoids.row(c)).squaredNorm();
                if (d2 < best_d) {
                    best_d = d2;
                    best_c = c;
                }
            }
            labels[static_cast<std::size_t>(i)] = best_c;
        }
    }

    double r = opt.radius > 0.0 ? opt.radius : auto_anchor_radius(input.points, input.x_init, opt.seed);
    OrderedClusters ordered = order_and_anchor(input.points, labels, input.x_init, r);

    std::vector<int> counts;
    counts.reserve(ordered.member_rows.size());
    for (const auto& rows : ordered.member_rows) counts.push_back(static_cast<int>(rows.size()));
    auto windows = split_distribution(input.dist, counts, input.t0);

    SegmentationResult res;
    res.radius = r;
    res.assignments.assign(static_cast<std::size_t>(n), -1);
    res.piece_rows = ordered.member_rows;
    for (std::size_t l = 0; l < ordered.member_rows.size(); ++l) {
        const auto& rows = ordered.member_rows[l];
        ObservationPiece piece;
        piece.points.resize(static_cast<Eigen::Index>(rows.size()), input.points.cols());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            piece.points.row(static_cast<Eigen::Index>(i)) = input.points.row(rows[i]);
            res.assignments[static_cast<std::size_t>(rows[i])] = static_cast<int>(l);
        }
        piece.x_init = (l == 0) ? input.x_init
                                : Eigen::VectorXd(input.points.row(ordered.head_rows[l]).transpose());
        piece.t0 = windows[l].t0;
        piece.T_piece = windows[l].T;
        piece.dist = windows[l].dist;
        if (input.true_times) {
            std::vector<double> tt(rows.size());
            for (std::size_t i = 0; i < rows.size(); ++i) tt[i] = (*input.true_times)[static_cast<std::size_t>(rows[i])];
            piece.true_times = std::move(tt);
        }
        res.pieces.push_back(std::move(piece));
    }
    return res;
}

}  // namespace swrecon
