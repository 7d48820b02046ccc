#pragma once

#include <cmath>
#include <optional>
#include <vector>

namespace parquetry {

struct Vec2 {
    double x = 0;
    double y = 0;

    Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    Vec2& operator+=(Vec2 o) { x += o.x; y += o.y; return *this; }
    Vec2& operator-=(Vec2 o) { x -= o.x; y -= o.y; return *this; }
    bool operator==(const Vec2&) const = default;
    double dot(Vec2 o) const { return x * o.x + y * o.y; }
    double cross(Vec2 o) const { return x * o.y - y * o.x; }
    double norm() const { return std::hypot(x, y); }
    Vec2 normalized() const {
        const double n = norm();
        return n > 0 ? Vec2{x / n, y / n} : Vec2{0, 0};
    }
};

inline Vec2 operator*(double s, Vec2 v) { return v * s; }

using Polyline = std::vector<Vec2>;

// A closed loop stores its first point again at the end.
struct Loop {
    Polyline points;
};

double signed_area(const Polyline& closed);
double point_segment_distance(Vec2 p, Vec2 a, Vec2 b);
double point_polyline_distance(Vec2 p, const Polyline& line);
// Removes interior points that are collinear with their neighbors.
Polyline simplify_collinear(const Polyline& line, bool closed = false);

struct CubicBezier {
    Vec2 p0, p1, p2, p3;

    Vec2 eval(double t) const;
    Vec2 derivative(double t) const;
    Vec2 second_derivative(double t) const;
    CubicBezier reversed() const { return {p3, p2, p1, p0}; }
    bool operator==(const CubicBezier&) const = default;
    static CubicBezier line(Vec2 a, Vec2 b);
};

// Dense polyline approximation; `samples` segments.
Polyline sample(const CubicBezier& c, int samples = 32);

// Symmetric deviation between a curve and a polyline: the larger of the
// farthest data point from the curve and the farthest curve sample from the
// polyline.
double max_deviation(const CubicBezier& c, const Polyline& data);

// Least-squares cubic through `data` with the end points pinned to the first
// and last data point. Chord-length parameters refined by a few Newton steps.
CubicBezier fit_cubic(const Polyline& data);
// As above, with unit end tangents prescribed (interior handles lie on the
// tangent rays).
CubicBezier fit_cubic_tangents(const Polyline& data, Vec2 t0, Vec2 t1);

enum class Continuity { G0, G1 };

// A chain of cubic segments; segment i ends where segment i+1 starts.
struct CutCurve {
    std::vector<CubicBezier> segments;
    Continuity continuity = Continuity::G0;

    Vec2 front() const { return segments.front().p0; }
    Vec2 back() const { return segments.back().p3; }
    CutCurve reversed() const;
    Polyline sampled(int per_segment = 16) const;
    bool operator==(const CutCurve&) const = default;
};

struct CurveFitOptions {
    Continuity continuity = Continuity::G0;
    int max_run = 16;        // data points per segment, after collinear simplification
    double tolerance = 0.75; // px
};

// Fits a piecewise cubic to a polyline. Under G1 the unit tangents agree at
// every interior join.
CutCurve fit_curve(const Polyline& data, const CurveFitOptions& opt = {});

// Integer label raster; -1 marks "no label".
struct LabelMap {
    int width = 0;
    int height = 0;
    std::vector<int> labels;

    LabelMap() = default;
    LabelMap(int w, int h, int fill = -1) : width(w), height(h), labels(static_cast<size_t>(w) * h, fill) {}
    int at(int x, int y) const { return labels[static_cast<size_t>(y) * width + x]; }
    int& at(int x, int y) { return labels[static_cast<size_t>(y) * width + x]; }
    // Outside the raster reads as -1.
    int get(int x, int y) const { return (x < 0 || y < 0 || x >= width || y >= height) ? -1 : at(x, y); }
};

// Maximal runs of pixel-lattice edges separating the same two labels,
// running between junctions (vertices where three or more boundary edges meet,
// plus the four raster corners). `right` is the label on the right-hand side
// when walking the points in order (y axis pointing down).
struct BoundaryChain {
    Polyline points;
    int left = -1;
    int right = -1;
    bool closed = false;
};

std::vector<BoundaryChain> extract_boundaries(const LabelMap& labels);

// Reference into a chain list, with traversal direction.
struct ChainUse {
    int chain = -1;
    bool forward = true;
};

// Closed loops around `label`, oriented with the label on the right
// (positive signed area for outer loops). Each loop lists the chains it uses.
struct ChainLoop {
    std::vector<ChainUse> uses;
    Polyline points;
};
std::vector<ChainLoop> loops_for_label(const std::vector<BoundaryChain>& chains, int label);

// Outline loops of the true pixels (outer loops positive, holes negative),
// collinear points removed.
std::vector<Loop> trace_outline(const LabelMap& labels, int label);

// Pixel-center rasterization with the even-odd rule over all loops.
// A center exactly on an edge belongs to the region to its right (x) / below (y).
struct PixelSpan {
    int y, x0, x1;  // [x0, x1)
};
std::vector<PixelSpan> rasterize_loops(const std::vector<Polyline>& loops, int width, int height);

}  // namespace parquetry
