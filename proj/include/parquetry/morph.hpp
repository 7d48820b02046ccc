#pragma once

#include <atomic>
#include <cstdint>
#include <string>
#include <vector>

#include "parquetry/geometry.hpp"
#include "parquetry/raster.hpp"
#include "parquetry/segment.hpp"

namespace parquetry {

struct EdgeParams {
    double rg_sigma_space = 3.0;
    double rg_sigma_range = 0.05;
    int rg_iterations = 4;
    double bilateral_sigma_space = 2.0;
    double bilateral_sigma_range = 0.1;
    double canny_lo = 0.04;
    double canny_hi = 0.10;

    bool operator==(const EdgeParams&) const = default;
};

struct EdgeSpec {
    BinaryMask e_rg, e_bilateral;  // Canny of the two smoothed targets
    BinaryMask m_rg, m_bilateral;  // user selectors
    BinaryMask e;                  // (m_rg & e_rg) | (m_bilateral & e_bilateral)
};

// Canny edges of the rolling-guidance and bilateral smoothings of the target.
void detect_edges(const Image& target, const EdgeParams& p, BinaryMask& e_rg, BinaryMask& e_bilateral);
BinaryMask combine_edges(const BinaryMask& e_rg, const BinaryMask& m_rg, const BinaryMask& e_bilateral,
                         const BinaryMask& m_bilateral);
EdgeSpec build_edge_spec(const Image& target, const BinaryMask& m_rg, const BinaryMask& m_bilateral,
                         const EdgeParams& p = {});

// max(0, min(D, r - D)) with D the Euclidean distance to the nearest edge.
ScalarField potential_field(const BinaryMask& e, double r);

struct MorphParams {
    double m = 1.0;      // spring stiffness
    double gamma = 0.8;  // damping
    double w = 4.0;      // edge attraction weight
    double dt = 0.1;
    double tol = 1e-3;
    int max_steps = 2000;
    double min_distance = 0.35;  // fraction of the grid spacing
    double snap = 0.5;           // edge distance below this counts as on an edge

    bool operator==(const MorphParams&) const = default;
};

// Vertex lattice of (rows+1) x (cols+1) points on the regular grid lines.
// Springs measure displacement relative to the rest lattice, so the
// undeformed grid is in equilibrium even where boundary cells were merged.
struct MorphState {
    int rows = 0, cols = 0;
    int width = 0, height = 0;
    int spacing = 0;
    std::vector<Vec2> rest, pos, vel;
    std::vector<std::uint8_t> pinned;
    MorphParams params;
    ScalarField distance;  // to the nearest edge pixel centre
    ScalarField potential;
    double r = 0;
    double dt = 0;       // current step, halved on rejection
    int steps = 0;       // accepted steps so far
    bool converged = false;

    int index(int row, int col) const { return row * (cols + 1) + col; }
};

MorphState make_morph_state(int width, int height, int patch_px, const BinaryMask& e, const MorphParams& p = {});
// Replaces the potential (new edges) while keeping vertex positions.
void set_edges(MorphState& s, const BinaryMask& e);

std::vector<Vec2> morph_forces(const MorphState& s);
double kinetic_energy(const MorphState& s);
double min_adjacent_distance(const std::vector<Vec2>& pos, const MorphState& s);

struct RelaxStats {
    std::vector<double> kinetic;       // after every accepted step
    std::vector<double> min_distance;  // after every accepted step
    int accepted = 0;
    int rejected = 0;
    double max_force = 0;
    bool converged = false;
    bool cancelled = false;
};

// Semi-implicit Euler with unit inertia. Stops on convergence, after
// n_steps accepted steps, on cancellation, or when dt underflows.
RelaxStats relax(MorphState& s, int n_steps, const std::atomic<bool>* cancel = nullptr);

bool vertex_snapped(const MorphState& s, int i);

struct GridEdge {
    int a = 0, b = 0;  // vertex indices; -1 for none
    CubicBezier curve;
    bool fitted = false;    // follows an edge-pixel chain
    bool diagonal = false;
};

struct GridCell {
    int row = 0, col = 0;
    std::string label;
    std::vector<int> edges;     // indices into MorphGrid::edges, loop order
    std::vector<bool> forward;  // traversal direction per edge
};

struct MorphGrid {
    int width = 0, height = 0;
    int rows = 0, cols = 0;
    int spacing = 0;
    std::vector<Vec2> vertices;
    std::vector<std::uint8_t> snapped;
    std::vector<GridEdge> edges;
    std::vector<GridCell> cells;
};

// Cubic fits along edge-pixel chains between snapped vertices, diagonal cell
// splits where a chain runs corner to corner, and C2 splines along each grid
// line for everything else.
MorphGrid fit_grid_curves(const MorphState& s, const BinaryMask& e, const Fabricability& fab = Fabricability{1, 1});

// Per-pixel cell index; every pixel gets a cell.
LabelMap rasterize_grid(const MorphGrid& g);
// Cells become regions labelled R<row>C<col> (a/b suffix for triangles).
Segmentation grid_segmentation(const MorphGrid& g, const Fabricability& fab);

}  // namespace parquetry
