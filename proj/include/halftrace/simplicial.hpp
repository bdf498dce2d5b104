#pragma once

#include <optional>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace halftrace::simplicial {

// Finite homogeneous complex; each simplex carries the metric of the unit
// equilateral simplex, the complex carries the induced path metric and the
// measure defined by additivity. Top dimension is limited to 2 here: that is
// every shape the experiments drive (graphs and triangle complexes).
struct SimplicialComplex {
    int vertex_count = 0;
    int dim = 1;
    std::vector<std::vector<int>> top;                 // sorted vertex ids, size dim+1
    std::vector<std::vector<double>> vertex_coords;    // optional unit-edge realization

    void validate() const;
    double top_simplex_measure() const;  // 1 for edges, sqrt(3)/4 for triangles

    static SimplicialComplex from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

struct Subcomplex {
    std::vector<std::vector<int>> marked;  // (dim-1)-simplices, sorted vertex ids
    int dim = 0;

    void validate(const SimplicialComplex& parent) const;
    bool empty() const { return marked.empty(); }
};

struct PointOnComplex {
    int simplex = 0;            // top simplex index
    std::vector<double> bary;   // size dim+1, nonnegative, sums to 1
};

// Piecewise-affine map into R^m given by vertex images.
struct PLMap {
    const SimplicialComplex* domain = nullptr;
    std::vector<std::vector<double>> vertex_images;
    bool maps_sub_to_boundary = false;  // images of Sigma0 vertices in {x_m = 0}
    bool maps_into_upper = false;       // all images in {x_m >= 0}

    std::vector<double> eval(const PointOnComplex& p) const;
    void check_flags(const Subcomplex& sub) const;
};

// Exact operator-norm Lipschitz constant of a PL map w.r.t. the intrinsic
// metric (max singular value of the affine differential per top simplex).
double lipschitz_constant(const PLMap& sigma);

// Vertices of the regular unit-edge d-simplex in R^d.
std::vector<std::vector<double>> equilateral_vertices(int d);

// Edge-subdivided approximation of the complex: shared nodes are identified
// across simplices, shortest paths run over a local connection graph, measures
// are summed over subdivision cells.
class Refinement {
  public:
    Refinement(const SimplicialComplex& complex, int subdivisions);

    struct MeasureCell {
        double measure = 0.0;
        std::vector<int> nodes;  // node ids of the cell's vertices
        int top_simplex = -1;
        std::vector<double> barycenter;  // equilateral coords of top_simplex
        std::vector<double> node_pos;    // flat equilateral coords, dim per node
    };

    int node_count() const { return static_cast<int>(node_points_.size()); }
    int subdivisions() const { return n_; }
    double tau_geo() const { return 2.0 / n_; }
    const SimplicialComplex& complex() const { return *complex_; }

    const std::vector<MeasureCell>& cells() const { return cells_; }
    PointOnComplex node_point(int node) const { return node_points_[static_cast<std::size_t>(node)]; }
    int vertex_node(int vertex) const;  // node id of an original vertex
    int nearest_node(const PointOnComplex& p) const;

    std::vector<double> distances_from(int node) const;
    std::vector<double> distances_from_set(const std::vector<int>& sources) const;

    // nodes lying on the subcomplex, and its own measure cells
    std::vector<int> subcomplex_nodes(const Subcomplex& sub) const;
    std::vector<MeasureCell> subcomplex_cells(const Subcomplex& sub) const;

    // |B_r(z)| from a distance field (exact interval coverage for graphs,
    // barycenter inclusion for triangle complexes)
    double ball_measure(const std::vector<double>& dist, double r) const;
    double ball_measure(const std::vector<double>& dist, double r,
                        const std::vector<MeasureCell>& cells) const;

    double total_measure() const;
    double diameter() const;  // max over node pairs of graph distance

  private:
    const SimplicialComplex* complex_;
    int n_;
    std::vector<PointOnComplex> node_points_;
    std::vector<std::vector<std::pair<int, double>>> adjacency_;
    std::vector<MeasureCell> cells_;
    std::vector<std::vector<int>> simplex_nodes_;  // per top simplex, local lattice -> node id
};

// Length of the shortest path within the complex between two points, computed
// on the refinement graph (accurate to tau_geo of the refinement).
double geodesic_distance(const Refinement& ref, const PointOnComplex& x,
                         const PointOnComplex& y);

// Distance to the subcomplex.
double d0(const Refinement& ref, const Subcomplex& sub, const PointOnComplex& y);

struct GammaOptions {
    double lambda = 2.0;
    std::vector<double> delta_grid;  // default: geometric grid over [diam*2^-12, diam]
    int subdivisions = 16;
};

// Upper Ahlfors-type ratio sup_{z in Sigma0, delta} |B_{lambda delta}(z)| /
// (delta |Sigma0 cap B_delta(z)|), maximized over sampled z and a delta grid;
// for 0-dimensional Sigma0 the delta->0 limit (counting measure) is included
// in closed form.
double gamma(const SimplicialComplex& complex, const Subcomplex& sub, const GammaOptions& opt);
double gamma(const Refinement& ref, const Subcomplex& sub, double lambda,
             const std::vector<double>& delta_grid);

std::vector<double> default_delta_grid(double diameter);

// Load {"vertices": [[...]], "simplices": [[...]], "sigma0": [[...]]}; the
// sigma0 entries are the vertex lists of the marked codimension-1 simplices.
std::pair<SimplicialComplex, Subcomplex> load_complex_json(const nlohmann::json& j);

// Build a graph complex (dim 1) from a set of segments given by endpoint
// coordinates; endpoints are merged by exact comparison after rounding to the
// given resolution. Marked points become the 0-dimensional subcomplex.
std::pair<SimplicialComplex, Subcomplex> graph_complex_from_segments(
    const std::vector<std::pair<std::vector<double>, std::vector<double>>>& segments,
    const std::vector<std::vector<double>>& marked_points, double resolution = 1e-9);

}  // namespace halftrace::simplicial
