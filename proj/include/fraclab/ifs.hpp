#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fraclab/geometry.hpp"

namespace fraclab {

/// Contractive similitude p -> ratio * R(angle) * (reflect? conj(p) : p) + translation,
/// where conj flips the y coordinate before rotating.
struct Similitude {
    double angle = 0.0;        // rotation, radians
    bool reflect = false;      // reflection across the x axis, applied first
    double ratio = 0.5;        // contraction factor, strictly in (0,1)
    Vec2 translation{0, 0};

    Similitude() = default;
    Similitude(double angle_, bool reflect_, double ratio_, Vec2 t);

    Vec2 apply(const Vec2& p) const;

    /// Similitude with ψ(0,0)=a e ψ(1,0)=b; reflect chooses the branch
    /// that flips across the segment direction.
    static Similitude mapping_base_to(const Vec2& a, const Vec2& b, bool reflect = false);
};

/// One generator family: N similitudes whose images of the base segment chain
/// head-to-tail from A to B.
struct GeneratorFamily {
    std::string name;
    std::vector<Similitude> maps;

    /// Sum of d_i^(n-1) over the family (Eq. for the boundary renormalization).
    double contraction_sum(int ambient_dim = 2) const;
};

enum class EnvironmentRule { Constant, Periodic, FrequencyTarget };

struct EnvironmentSpec {
    EnvironmentRule rule = EnvironmentRule::Constant;
    int constant_label = 0;              // Constant
    std::vector<int> pattern;            // Periodic
    std::vector<double> target_p;        // FrequencyTarget
    double c0 = 1.0;                     // FrequencyTarget tolerance constant
};

struct EnvironmentReport {
    std::vector<int> sequence;                       // labels into families
    std::vector<std::vector<double>> frequency;      // frequency[a][m-1] = h_a(m)
    std::vector<int> violations;                     // prefix lengths m violating |h-p|<=C0/m
    bool feasible = true;
};

/// Build an environment sequence of the given length under the rule.
EnvironmentReport build_environment(const EnvironmentSpec& spec, int length,
                                    int family_count);

/// A family of iterated function systems with an environment sequence
/// choosing the family per construction level.
struct IfsSystem {
    std::vector<GeneratorFamily> families;
    std::vector<int> environment;  // environment[level-1] = family used at that level
    Vec2 base_a{0, 0};
    Vec2 base_b{1, 0};
    std::uint64_t segment_cap = 1u << 20;  // refuse curves beyond this many segments

    const GeneratorFamily& family_at_level(int level) const;  // level = 1..m
    int family_count() const { return static_cast<int>(families.size()); }
    bool is_mixture() const { return families.size() > 1; }

    void validate() const;

    // Named constructions used throughout the studies.
    static IfsSystem koch();                       // 4 maps, ratio 1/3
    static IfsSystem minkowski();                  // 8 maps, ratio 1/4 (square Koch)
    static IfsSystem koch_generator(double l);     // 4 maps, ratio 1/l, 2 < l < 4
    static IfsSystem koch_mixture(double l1, double l2, const EnvironmentSpec& env,
                                  int env_length);
};

struct CurveSegment {
    Vec2 p0;
    Vec2 p1;
    std::vector<int> word;   // map indices (0-based) from outermost to innermost level
    double weight = 1.0;     // self-similar measure of the cell
};

struct PrefractalCurve {
    int level = 0;
    std::vector<CurveSegment> segments;
    double total_length = 0.0;

    /// Consecutive segments share endpoints; returns the polyline nodes.
    std::vector<Vec2> polyline() const;
};

/// K_m as an ordered polyline with words and mu-weights attached.
PrefractalCurve generate_prefractal(const IfsSystem& ifs, int level);

/// Sum of d_i^(n-1): the D of the boundary renormalization. For mixtures the
/// per-family values are returned; the first entry is the level-1 family's D.
std::vector<double> contraction_sum_D(const IfsSystem& ifs, int ambient_dim = 2);

/// sigma_m = D^{-m}; for mixtures the product of per-level D^{-1}.
double sigma(const IfsSystem& ifs, int level, int ambient_dim = 2);

/// mu of the cell indexed by the word (prod d^{n-1} over the per-level D);
/// empty word = whole set = 1.
double cell_measure(const IfsSystem& ifs, std::span<const int> word, int ambient_dim = 2);

struct OscViolation {
    std::string kind;      // "overlap", "containment", "boundary-contact", ...
    int image_a = -1;
    int image_b = -1;
    double magnitude = 0.0;
    Vec2 witness{0, 0};
    std::string detail;
};

struct OscReport {
    bool holds = false;
    std::vector<OscViolation> violations;
    double max_overlap_area = 0.0;
    double max_escape_area = 0.0;
};

/// Strong open set condition check on the level-`level` images: pairwise
/// disjoint images of O, images contained in O, and both polygon boundaries
/// pinned to the base-segment endpoints only. O and O' must be convex.
OscReport check_open_set_condition(const IfsSystem& ifs, std::span<const Vec2> inner,
                                   std::span<const Vec2> outer, int level = 1);

struct DensitySample {
    Vec2 center;
    double radius = 0.0;
    double ratio = 0.0;  // lambda_1(B(P,r) ∩ K_m) / (D^m r)
};

/// Exact segment-disk clipping of the level-m curve against the sample balls.
std::vector<DensitySample> measure_density_ratio(const IfsSystem& ifs,
                                                 const PrefractalCurve& curve,
                                                 std::span<const DensitySample> samples);

/// d-set dimension of a two-family Koch mixture with frequencies p and
/// ratio denominators l: ln 4 / (p1 ln l1 + p2 ln l2).
double mixture_dimension(double p1, double p2, double l1, double l2);

struct MeasureReport {
    std::vector<double> D_per_family;
    std::vector<double> sigma_per_level;   // sigma_per_level[m] = sigma_m
    std::vector<DensitySample> density_samples;
    double dimension = 0.0;
};

/// Assemble the measure data for levels 0..level_max; density ratios are
/// evaluated at the given samples on the level_max curve. The dimension is
/// the d-set exponent of the equal-ratio system (ln N / ln(1/d)).
MeasureReport build_measure_report(const IfsSystem& ifs, int level_max,
                                   std::span<const DensitySample> samples);

/// Writes "# ifs-curve level=m D=<value>" and one "x0 y0 x1 y1 weight word"
/// line per segment.
void write_curve(const PrefractalCurve& curve, const IfsSystem& ifs, std::ostream& os);

}  // namespace fraclab
