#include "halftrace/simplicial.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <queue>
#include <set>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "halftrace/errors.hpp"
#include "halftrace/numerics.hpp"

namespace halftrace::simplicial {

void SimplicialComplex::validate() const {
    if (dim < 1 || dim > 2) throw DomainError("complex: supported top dimensions are 1 and 2");
    if (top.empty()) throw DomainError("complex: no top simplices");
    for (const auto& s : top) {
        if (static_cast<int>(s.size()) != dim + 1)
            throw DomainError("complex: top simplex with wrong vertex count");
        for (int v : s)
            if (v < 0 || v >= vertex_count) throw DomainError("complex: vertex id out of range");
        if (std::set<int>(s.begin(), s.end()).size() != s.size())
            throw DomainError("complex: degenerate simplex");
    }
    if (!vertex_coords.empty()) {
        if (static_cast<int>(vertex_coords.size()) != vertex_count)
            throw DomainError("complex: coordinate/vertex count mismatch");
        for (const auto& s : top)
            for (std::size_t i = 0; i < s.size(); ++i)
                for (std::size_t j = i + 1; j < s.size(); ++j) {
                    const auto& a = vertex_coords[static_cast<std::size_t>(s[i])];
                    const auto& b = vertex_coords[static_cast<std::size_t>(s[j])];
                    const double d = std::sqrt(dist2(a, b));
                    if (std::abs(d - 1.0) > 1e-6)
                        throw DomainError("complex: realization edge length differs from 1");
                }
    }
}

double SimplicialComplex::top_simplex_measure() const {
    // unit-edge equilateral simplex: sqrt(d+1) / (d! * 2^{d/2})
    double fact = 1.0;
    for (int i = 2; i <= dim; ++i) fact *= i;
    return std::sqrt(static_cast<double>(dim + 1)) / (fact * std::pow(2.0, 0.5 * dim));
}

SimplicialComplex SimplicialComplex::from_json(const nlohmann::json& j) {
    SimplicialComplex c;
    if (j.contains("vertices")) c.vertex_coords = j.at("vertices").get<std::vector<std::vector<double>>>();
    c.top = j.at("simplices").get<std::vector<std::vector<int>>>();
    for (auto& s : c.top) std::sort(s.begin(), s.end());
    int maxv = -1;
    for (const auto& s : c.top)
        for (int v : s) maxv = std::max(maxv, v);
    c.vertex_count = c.vertex_coords.empty() ? maxv + 1 : static_cast<int>(c.vertex_coords.size());
    c.dim = c.top.empty() ? 1 : static_cast<int>(c.top.front().size()) - 1;
    c.validate();
    return c;
}

nlohmann::json SimplicialComplex::to_json() const {
    nlohmann::json j{{"simplices", top}};
    if (!vertex_coords.empty()) j["vertices"] = vertex_coords;
    return j;
}

void Subcomplex::validate(const SimplicialComplex& parent) const {
    if (dim != parent.dim - 1) throw DomainError("subcomplex: must have codimension 1");
    for (const auto& f : marked) {
        if (static_cast<int>(f.size()) != dim + 1)
            throw DomainError("subcomplex: marked simplex with wrong vertex count");
        bool is_face = false;
        for (const auto& s : parent.top) {
            if (std::includes(s.begin(), s.end(), f.begin(), f.end())) {
                is_face = true;
                break;
            }
        }
        if (!is_face) throw DomainError("subcomplex: marked simplex is not a face of the complex");
    }
}

std::pair<SimplicialComplex, Subcomplex> load_complex_json(const nlohmann::json& j) {
    SimplicialComplex c = SimplicialComplex::from_json(j);
    Subcomplex sub;
    sub.dim = c.dim - 1;
    if (j.contains("sigma0"))
        sub.marked = j.at("sigma0").get<std::vector<std::vector<int>>>();
    for (auto& f : sub.marked) std::sort(f.begin(), f.end());
    sub.validate(c);
    return {std::move(c), std::move(sub)};
}

std::vector<double> PLMap::eval(const PointOnComplex& p) const {
    const auto& simplex = domain->top[static_cast<std::size_t>(p.simplex)];
    const std::size_t m = vertex_images.front().size();
    std::vector<double> out(m, 0.0);
    for (std::size_t i = 0; i < simplex.size(); ++i) {
        const auto& img = vertex_images[static_cast<std::size_t>(simplex[i])];
        for (std::size_t k = 0; k < m; ++k) out[k] += p.bary[i] * img[k];
    }
    return out;
}

void PLMap::check_flags(const Subcomplex& sub) const {
    if (maps_into_upper) {
        for (const auto& img : vertex_images)
            if (img.back() < -1e-9) throw DomainError("PL map: image leaves the upper half-space");
    }
    if (maps_sub_to_boundary) {
        for (const auto& f : sub.marked)
            for (int v : f)
                if (std::abs(vertex_images[static_cast<std::size_t>(v)].back()) > 1e-9)
                    throw DomainError("PL map: subcomplex image leaves the boundary hyperplane");
    }
}

std::vector<std::vector<double>> equilateral_vertices(int d) {
    std::vector<std::vector<double>> v(static_cast<std::size_t>(d) + 1,
                                       std::vector<double>(static_cast<std::size_t>(d), 0.0));
    for (int k = 1; k <= d; ++k) {
        // place v_k above the centroid of v_0..v_{k-1}
        std::vector<double> c(static_cast<std::size_t>(d), 0.0);
        for (int i = 0; i < k; ++i)
            for (int j = 0; j < d; ++j)
                c[static_cast<std::size_t>(j)] +=
                    v[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] / k;
        double r2 = dist2(c, v[0]);
        for (int j = 0; j < d; ++j) v[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)] = c[static_cast<std::size_t>(j)];
        v[static_cast<std::size_t>(k)][static_cast<std::size_t>(k - 1)] = std::sqrt(1.0 - r2);
    }
    return v;
}

double lipschitz_constant(const PLMap& sigma) {
    const auto& complex = *sigma.domain;
    const int d = complex.dim;
    const auto eq = equilateral_vertices(d);
    double best = 0.0;
    for (const auto& s : complex.top) {
        Eigen::MatrixXd E(d, d);
        for (int c = 0; c < d; ++c)
            for (int r = 0; r < d; ++r)
                E(r, c) = eq[static_cast<std::size_t>(c + 1)][static_cast<std::size_t>(r)] -
                          eq[0][static_cast<std::size_t>(r)];
        const auto& y0 = sigma.vertex_images[static_cast<std::size_t>(s[0])];
        const int m = static_cast<int>(y0.size());
        Eigen::MatrixXd Y(m, d);
        for (int c = 0; c < d; ++c) {
            const auto& yc = sigma.vertex_images[static_cast<std::size_t>(s[static_cast<std::size_t>(c + 1)])];
            for (int r = 0; r < m; ++r) Y(r, c) = yc[static_cast<std::size_t>(r)] - y0[static_cast<std::size_t>(r)];
        }
        Eigen::MatrixXd D = Y * E.inverse();
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(D);
        best = std::max(best, svd.singularValues()(0));
    }
    return best;
}

// ---------------------------------------------------------------------------
// Refinement

namespace {
using NodeKey = std::vector<std::pair<int, int>>;  // (vertex id, numerator), numerators sum to n

NodeKey make_key(const std::vector<int>& simplex, const std::vector<int>& multi) {
    NodeKey key;
    for (std::size_t i = 0; i < simplex.size(); ++i)
        if (multi[i] > 0) key.emplace_back(simplex[i], multi[i]);
    std::sort(key.begin(), key.end());
    return key;
}
}  // namespace

Refinement::Refinement(const SimplicialComplex& complex, int subdivisions)
    : complex_(&complex), n_(subdivisions) {
    complex.validate();
    if (n_ < 2) throw DomainError("refinement: need at least 2 subdivisions");
    const int d = complex.dim;
    const auto eq = equilateral_vertices(d);

    std::map<NodeKey, int> ids;
    simplex_nodes_.resize(complex.top.size());
    auto node_id = [&](const std::vector<int>& simplex, const std::vector<int>& multi,
                       int simplex_index) {
        const NodeKey key = make_key(simplex, multi);
        auto it = ids.find(key);
        if (it != ids.end()) return it->second;
        const int id = static_cast<int>(node_points_.size());
        ids.emplace(key, id);
        PointOnComplex p;
        p.simplex = simplex_index;
        p.bary.resize(multi.size());
        for (std::size_t i = 0; i < multi.size(); ++i)
            p.bary[i] = static_cast<double>(multi[i]) / n_;
        node_points_.push_back(std::move(p));
        return id;
    };

    auto local_pos = [&](const std::vector<int>& multi) {
        std::vector<double> pos(static_cast<std::size_t>(d), 0.0);
        for (int i = 0; i <= d; ++i)
            for (int j = 0; j < d; ++j)
                pos[static_cast<std::size_t>(j)] +=
                    (static_cast<double>(multi[static_cast<std::size_t>(i)]) / n_) *
                    eq[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        return pos;
    };

    const double cell_measure = complex.top_simplex_measure() / std::pow(n_, d);

    for (std::size_t si = 0; si < complex.top.size(); ++si) {
        const auto& s = complex.top[si];
        if (d == 1) {
            auto& local = simplex_nodes_[si];
            local.resize(static_cast<std::size_t>(n_) + 1);
            for (int i = 0; i <= n_; ++i)
                local[static_cast<std::size_t>(i)] = node_id(s, {n_ - i, i}, static_cast<int>(si));
            adjacency_.resize(node_points_.size());
            for (int i = 0; i < n_; ++i) {
                const int a = local[static_cast<std::size_t>(i)];
                const int b = local[static_cast<std::size_t>(i) + 1];
                adjacency_[static_cast<std::size_t>(a)].emplace_back(b, 1.0 / n_);
                adjacency_[static_cast<std::size_t>(b)].emplace_back(a, 1.0 / n_);
                MeasureCell cell;
                cell.measure = cell_measure;
                cell.nodes = {a, b};
                cell.top_simplex = static_cast<int>(si);
                cell.barycenter = {(i + 0.5) / n_};
                cell.node_pos = {static_cast<double>(i) / n_, (i + 1.0) / n_};
                cells_.push_back(std::move(cell));
            }
        } else {
            // triangular lattice: multi = (n-i-j, i, j)
            auto& local = simplex_nodes_[si];
            local.assign(static_cast<std::size_t>((n_ + 1) * (n_ + 2) / 2), -1);
            auto lidx = [&](int i, int j) {
                // row-major over i with shrinking rows
                return static_cast<std::size_t>(i * (2 * n_ + 3 - i) / 2 + j);
            };
            for (int i = 0; i <= n_; ++i)
                for (int j = 0; j + i <= n_; ++j)
                    local[lidx(i, j)] = node_id(s, {n_ - i - j, i, j}, static_cast<int>(si));
            adjacency_.resize(node_points_.size());

            // local connection stencil: every offset of equilateral length <= 2.05/n
            static const std::vector<std::pair<int, int>> stencil = {
                {1, 0}, {0, 1}, {1, -1}, {1, 1}, {2, -1}, {-1, 2}, {2, 0}, {0, 2}, {2, -2}};
            for (int i = 0; i <= n_; ++i)
                for (int j = 0; j + i <= n_; ++j) {
                    const int a = local[lidx(i, j)];
                    const auto pa = local_pos({n_ - i - j, i, j});
                    for (const auto& [di, dj] : stencil) {
                        const int i2 = i + di, j2 = j + dj;
                        if (i2 < 0 || j2 < 0 || i2 + j2 > n_) continue;
                        const int b = local[lidx(i2, j2)];
                        const auto pb = local_pos({n_ - i2 - j2, i2, j2});
                        const double w = std::sqrt(dist2(pa, pb));
                        adjacency_[static_cast<std::size_t>(a)].emplace_back(b, w);
                        adjacency_[static_cast<std::size_t>(b)].emplace_back(a, w);
                    }
                }
            for (int i = 0; i <= n_ - 1; ++i)
                for (int j = 0; j + i <= n_ - 1; ++j) {
                    auto make_cell = [&](std::array<std::pair<int, int>, 3> lat) {
                        MeasureCell c;
                        c.measure = cell_measure;
                        c.top_simplex = static_cast<int>(si);
                        c.barycenter.assign(static_cast<std::size_t>(d), 0.0);
                        for (const auto& [ci, cj] : lat) {
                            c.nodes.push_back(local[lidx(ci, cj)]);
                            const auto p = local_pos({n_ - ci - cj, ci, cj});
                            for (std::size_t k = 0; k < p.size(); ++k) {
                                c.barycenter[k] += p[k] / 3.0;
                                c.node_pos.push_back(p[k]);
                            }
                        }
                        cells_.push_back(std::move(c));
                    };
                    make_cell({{{i, j}, {i + 1, j}, {i, j + 1}}});
                    if (i + j <= n_ - 2)
                        make_cell({{{i + 1, j}, {i, j + 1}, {i + 1, j + 1}}});
                }
        }
    }
    adjacency_.resize(node_points_.size());
}

int Refinement::vertex_node(int vertex) const {
    // the node whose barycentric weight is concentrated on `vertex`
    for (std::size_t si = 0; si < complex_->top.size(); ++si) {
        const auto& s = complex_->top[si];
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (s[i] != vertex) continue;
            std::vector<int> multi(s.size(), 0);
            multi[i] = n_;
            if (complex_->dim == 1) {
                return simplex_nodes_[si][i == 0 ? 0 : static_cast<std::size_t>(n_)];
            }
            const int ii = (i == 1) ? n_ : 0;
            const int jj = (i == 2) ? n_ : 0;
            return simplex_nodes_[si][static_cast<std::size_t>(ii * (2 * n_ + 3 - ii) / 2 + jj)];
        }
    }
    throw DomainError("refinement: vertex not contained in any top simplex");
}

int Refinement::nearest_node(const PointOnComplex& p) const {
    const auto& local = simplex_nodes_[static_cast<std::size_t>(p.simplex)];
    if (complex_->dim == 1) {
        int i = static_cast<int>(std::lround(p.bary[1] * n_));
        i = std::clamp(i, 0, n_);
        return local[static_cast<std::size_t>(i)];
    }
    int i = static_cast<int>(std::lround(p.bary[1] * n_));
    int j = static_cast<int>(std::lround(p.bary[2] * n_));
    i = std::clamp(i, 0, n_);
    j = std::clamp(j, 0, n_ - i);
    return local[static_cast<std::size_t>(i * (2 * n_ + 3 - i) / 2 + j)];
}

std::vector<double> Refinement::distances_from(int node) const {
    return distances_from_set({node});
}

std::vector<double> Refinement::distances_from_set(const std::vector<int>& sources) const {
    std::vector<double> dist(node_points_.size(), std::numeric_limits<double>::infinity());
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
    for (int s : sources) {
        dist[static_cast<std::size_t>(s)] = 0.0;
        queue.emplace(0.0, s);
    }
    while (!queue.empty()) {
        const auto [d, u] = queue.top();
        queue.pop();
        if (d > dist[static_cast<std::size_t>(u)]) continue;
        for (const auto& [v, w] : adjacency_[static_cast<std::size_t>(u)]) {
            const double nd = d + w;
            if (nd < dist[static_cast<std::size_t>(v)] - 1e-15) {
                dist[static_cast<std::size_t>(v)] = nd;
                queue.emplace(nd, v);
            }
        }
    }
    return dist;
}

std::vector<int> Refinement::subcomplex_nodes(const Subcomplex& sub) const {
    std::set<int> nodes;
    for (const auto& cell : subcomplex_cells(sub))
        for (int v : cell.nodes) nodes.insert(v);
    return {nodes.begin(), nodes.end()};
}

std::vector<Refinement::MeasureCell> Refinement::subcomplex_cells(const Subcomplex& sub) const {
    std::vector<MeasureCell> out;
    const int d = complex_->dim;
    for (const auto& f : sub.marked) {
        if (d == 1) {
            MeasureCell c;
            c.measure = 1.0;  // counting measure on a 0-dimensional subcomplex
            c.nodes = {vertex_node(f[0])};
            out.push_back(std::move(c));
            continue;
        }
        // locate a top triangle containing the edge f = {a, b}
        for (std::size_t si = 0; si < complex_->top.size(); ++si) {
            const auto& s = complex_->top[si];
            if (!std::includes(s.begin(), s.end(), f.begin(), f.end())) continue;
            int ia = -1, ib = -1;
            for (std::size_t i = 0; i < s.size(); ++i) {
                if (s[i] == f[0]) ia = static_cast<int>(i);
                if (s[i] == f[1]) ib = static_cast<int>(i);
            }
            auto node_at = [&](int t) {  // t steps from a toward b
                std::vector<int> multi(3, 0);
                multi[static_cast<std::size_t>(ia)] = n_ - t;
                multi[static_cast<std::size_t>(ib)] = t;
                const int i = multi[1], j = multi[2];
                return simplex_nodes_[si][static_cast<std::size_t>(i * (2 * n_ + 3 - i) / 2 + j)];
            };
            for (int t = 0; t < n_; ++t) {
                MeasureCell c;
                c.measure = 1.0 / n_;
                c.nodes = {node_at(t), node_at(t + 1)};
                c.top_simplex = static_cast<int>(si);
                out.push_back(std::move(c));
            }
            break;
        }
    }
    return out;
}

double Refinement::ball_measure(const std::vector<double>& dist, double r) const {
    return ball_measure(dist, r, cells_);
}

double Refinement::ball_measure(const std::vector<double>& dist, double r,
                                const std::vector<MeasureCell>& cells) const {
    std::vector<double> terms;
    terms.reserve(cells.size());
    for (const auto& cell : cells) {
        if (cell.nodes.size() == 1) {  // counting measure
            if (dist[static_cast<std::size_t>(cell.nodes[0])] <= r) terms.push_back(cell.measure);
        } else if (cell.nodes.size() == 2) {
            // exact coverage of an interval reached through its endpoints
            const double len = cell.measure > 0 ? cell.measure : 1.0 / n_;
            const double da = dist[static_cast<std::size_t>(cell.nodes[0])];
            const double db = dist[static_cast<std::size_t>(cell.nodes[1])];
            const double covered = std::min(len, std::max(0.0, r - da) + std::max(0.0, r - db));
            if (covered > 0.0) terms.push_back(covered * (cell.measure / len));
        } else {
            // barycenter inclusion; node-to-centroid offset of an equilateral cell
            const double offset = (1.0 / n_) / std::sqrt(3.0);
            double dbary = std::numeric_limits<double>::infinity();
            for (int v : cell.nodes)
                dbary = std::min(dbary, dist[static_cast<std::size_t>(v)] + offset);
            if (dbary <= r) terms.push_back(cell.measure);
        }
    }
    return pairwise_sum(terms);
}

double Refinement::total_measure() const {
    return complex_->top_simplex_measure() * static_cast<double>(complex_->top.size());
}

double Refinement::diameter() const {
    // two sweeps from an arbitrary node give a sharp estimate on these graphs
    auto d0 = distances_from(0);
    int far = 0;
    for (std::size_t i = 0; i < d0.size(); ++i)
        if (d0[i] > d0[static_cast<std::size_t>(far)] && std::isfinite(d0[i])) far = static_cast<int>(i);
    auto d1 = distances_from(far);
    double best = 0.0;
    for (double v : d1)
        if (std::isfinite(v)) best = std::max(best, v);
    return best;
}

double geodesic_distance(const Refinement& ref, const PointOnComplex& x,
                         const PointOnComplex& y) {
    const int a = ref.nearest_node(x);
    const int b = ref.nearest_node(y);
    if (a == b) return 0.0;
    return ref.distances_from(a)[static_cast<std::size_t>(b)];
}

double d0(const Refinement& ref, const Subcomplex& sub, const PointOnComplex& y) {
    if (sub.empty()) throw DomainError("d0: empty subcomplex");
    const auto dist = ref.distances_from_set(ref.subcomplex_nodes(sub));
    return dist[static_cast<std::size_t>(ref.nearest_node(y))];
}

std::vector<double> default_delta_grid(double diameter) {
    std::vector<double> grid;
    const double ratio = std::pow(2.0, 0.25);
    for (double d = diameter * std::pow(2.0, -12.0); d <= diameter * 1.0000001; d *= ratio)
        grid.push_back(d);
    return grid;
}

double gamma(const Refinement& ref, const Subcomplex& sub, double lambda,
             const std::vector<double>& delta_grid) {
    if (lambda <= 1.0) throw DomainError("gamma: lambda must exceed 1");
    if (sub.empty()) throw DomainError("gamma: empty subcomplex");
    sub.validate(ref.complex());

    const auto sub_cells = ref.subcomplex_cells(sub);
    const auto z_samples = ref.subcomplex_nodes(sub);
    double best = 0.0;

    for (int z : z_samples) {
        const auto dist = ref.distances_from(z);
        for (double delta : delta_grid) {
            const double den = delta * ref.ball_measure(dist, delta, sub_cells);
            if (den <= 0.0) continue;
            const double num = ref.ball_measure(dist, lambda * delta);
            best = std::max(best, num / den);
        }
    }

    if (sub.dim == 0) {
        // delta -> 0 limit: |B_{lambda delta}(z)| = lambda*delta*deg(z), the
        // counting measure in the denominator is 1
        for (const auto& f : sub.marked) {
            int deg = 0;
            for (const auto& s : ref.complex().top)
                if (std::find(s.begin(), s.end(), f[0]) != s.end()) ++deg;
            best = std::max(best, lambda * deg);
        }
    }
    return best;
}

double gamma(const SimplicialComplex& complex, const Subcomplex& sub, const GammaOptions& opt) {
    Refinement ref(complex, opt.subdivisions);
    const auto grid = opt.delta_grid.empty() ? default_delta_grid(ref.diameter()) : opt.delta_grid;
    return gamma(ref, sub, opt.lambda, grid);
}

std::pair<SimplicialComplex, Subcomplex> graph_complex_from_segments(
    const std::vector<std::pair<std::vector<double>, std::vector<double>>>& segments,
    const std::vector<std::vector<double>>& marked_points, double resolution) {
    std::map<std::vector<long long>, int> ids;
    SimplicialComplex c;
    c.dim = 1;
    auto key_of = [&](const std::vector<double>& p) {
        std::vector<long long> key(p.size());
        for (std::size_t i = 0; i < p.size(); ++i) key[i] = std::llround(p[i] / resolution);
        return key;
    };
    auto vertex_of = [&](const std::vector<double>& p) {
        const auto key = key_of(p);
        auto it = ids.find(key);
        if (it != ids.end()) return it->second;
        const int id = c.vertex_count++;
        ids.emplace(key, id);
        return id;
    };
    for (const auto& [a, b] : segments) {
        int va = vertex_of(a), vb = vertex_of(b);
        if (va == vb) continue;
        std::vector<int> edge{std::min(va, vb), std::max(va, vb)};
        if (std::find(c.top.begin(), c.top.end(), edge) == c.top.end())
            c.top.push_back(std::move(edge));
    }
    Subcomplex sub;
    sub.dim = 0;
    for (const auto& p : marked_points) {
        auto it = ids.find(key_of(p));
        if (it == ids.end()) throw DomainError("graph complex: marked point is not a segment endpoint");
        std::vector<int> f{it->second};
        if (std::find(sub.marked.begin(), sub.marked.end(), f) == sub.marked.end())
            sub.marked.push_back(std::move(f));
    }
    c.validate();
    return {std::move(c), std::move(sub)};
}

}  // namespace halftrace::simplicial
