#include "fraclab/ifs.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

#include "fraclab/error.hpp"

namespace fraclab {

Similitude::Similitude(double angle_, bool reflect_, double ratio_, Vec2 t)
    : angle(angle_), reflect(reflect_), ratio(ratio_), translation(t) {
    if (!(ratio > 0.0 && ratio < 1.0))
        throw ConfigError("similitude ratio must lie strictly in (0,1), got " +
                          std::to_string(ratio_));
}

Vec2 Similitude::apply(const Vec2& p) const {
    const double py = reflect ? -p.y : p.y;
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    return {ratio * (c * p.x - s * py) + translation.x,
            ratio * (s * p.x + c * py) + translation.y};
}

Similitude Similitude::mapping_base_to(const Vec2& a, const Vec2& b, bool reflect) {
    const Vec2 d = b - a;
    const double r = d.norm();
    if (!(r > 0.0 && r < 1.0))
        throw ConfigError("base image segment must have length in (0,1)");
    return Similitude(std::atan2(d.y, d.x), reflect, r, a);
}

double GeneratorFamily::contraction_sum(int ambient_dim) const {
    double sum = 0.0;
    for (const auto& m : maps) sum += std::pow(m.ratio, ambient_dim - 1);
    return sum;
}

const GeneratorFamily& IfsSystem::family_at_level(int level) const {
    if (families.empty()) throw ConfigError("ifs has no generator families");
    if (families.size() == 1) return families.front();
    if (level < 1 || level > static_cast<int>(environment.size()))
        throw ConfigError("environment sequence shorter than requested level " +
                          std::to_string(level));
    const int label = environment[level - 1];
    if (label < 0 || label >= family_count())
        throw ConfigError("environment label out of range");
    return families[label];
}

void IfsSystem::validate() const {
    if (families.empty()) throw ConfigError("ifs has no generator families");
    const size_t n0 = families.front().maps.size();
    for (const auto& fam : families) {
        if (fam.maps.empty()) throw ConfigError("generator family is empty");
        if (families.size() > 1 && fam.maps.size() != n0)
            throw ConfigError("mixture families must have equal map counts");
        // Endpoint fixing: the image polyline must start at A and end at B.
        const Vec2 first = fam.maps.front().apply(base_a);
        const Vec2 last = fam.maps.back().apply(base_b);
        if (dist(first, base_a) > 1e-12 || dist(last, base_b) > 1e-12)
            throw ConfigError("generator family '" + fam.name +
                              "' does not fix the base segment endpoints");
    }
}

/// Curve generation additionally needs map images chaining head-to-tail.
static void validate_chaining(const IfsSystem& ifs) {
    for (const auto& fam : ifs.families) {
        for (size_t i = 0; i + 1 < fam.maps.size(); ++i) {
            const Vec2 e = fam.maps[i].apply(ifs.base_b);
            const Vec2 s = fam.maps[i + 1].apply(ifs.base_a);
            if (dist(e, s) > 1e-12)
                throw ConfigError("generator family '" + fam.name +
                                  "' images do not chain head-to-tail at map " +
                                  std::to_string(i));
        }
    }
}

namespace {

GeneratorFamily family_through_points(const std::string& name,
                                      const std::vector<Vec2>& pts) {
    GeneratorFamily fam;
    fam.name = name;
    for (size_t i = 0; i + 1 < pts.size(); ++i)
        fam.maps.push_back(Similitude::mapping_base_to(pts[i], pts[i + 1]));
    return fam;
}

}  // namespace

IfsSystem IfsSystem::koch() { return koch_generator(3.0); }

IfsSystem IfsSystem::koch_generator(double l) {
    if (!(l > 2.0 && l < 4.0))
        throw ConfigError("koch generator requires 2 < l < 4, got " + std::to_string(l));
    const double r = 1.0 / l;
    // Apex height so that four segments of length 1/l span the unit base.
    const double half_gap = 0.5 - r;
    const double h = std::sqrt(r * r - half_gap * half_gap);
    IfsSystem ifs;
    ifs.families.push_back(family_through_points(
        "koch(l=" + std::to_string(l) + ")",
        {{0, 0}, {r, 0}, {0.5, h}, {1.0 - r, 0}, {1, 0}}));
    return ifs;
}

IfsSystem IfsSystem::minkowski() {
    // Square Koch generator: 8 maps of ratio 1/4, right-up-right-down-down-right-up-right.
    IfsSystem ifs;
    ifs.families.push_back(family_through_points(
        "minkowski",
        {{0, 0}, {0.25, 0}, {0.25, 0.25}, {0.5, 0.25}, {0.5, 0},
         {0.5, -0.25}, {0.75, -0.25}, {0.75, 0}, {1, 0}}));
    return ifs;
}

IfsSystem IfsSystem::koch_mixture(double l1, double l2, const EnvironmentSpec& env,
                                  int env_length) {
    IfsSystem a = koch_generator(l1);
    IfsSystem b = koch_generator(l2);
    IfsSystem ifs;
    ifs.families = {a.families.front(), b.families.front()};
    ifs.environment = build_environment(env, env_length, 2).sequence;
    return ifs;
}

EnvironmentReport build_environment(const EnvironmentSpec& spec, int length,
                                    int family_count) {
    if (length < 1) throw ConfigError("environment length must be >= 1");
    EnvironmentReport rep;
    rep.sequence.reserve(length);
    switch (spec.rule) {
        case EnvironmentRule::Constant:
            if (spec.constant_label < 0 || spec.constant_label >= family_count)
                throw ConfigError("constant environment label out of range");
            rep.sequence.assign(length, spec.constant_label);
            break;
        case EnvironmentRule::Periodic: {
            if (spec.pattern.empty()) throw ConfigError("periodic pattern is empty");
            for (int label : spec.pattern)
                if (label < 0 || label >= family_count)
                    throw ConfigError("periodic pattern label out of range");
            for (int m = 0; m < length; ++m)
                rep.sequence.push_back(spec.pattern[m % spec.pattern.size()]);
            break;
        }
        case EnvironmentRule::FrequencyTarget: {
            if (static_cast<int>(spec.target_p.size()) != family_count)
                throw ConfigError("frequency target needs one probability per family");
            double psum = 0.0;
            for (double p : spec.target_p) psum += p;
            if (std::abs(psum - 1.0) > 1e-12)
                throw ConfigError("frequency targets must sum to 1");
            // Greedy balancing: at every prefix pick the label with the largest
            // deficit count*1 vs m*p.
            std::vector<int> counts(family_count, 0);
            for (int m = 1; m <= length; ++m) {
                int best = 0;
                double best_deficit = -1e300;
                for (int a = 0; a < family_count; ++a) {
                    const double deficit = m * spec.target_p[a] - counts[a];
                    if (deficit > best_deficit + 1e-15) {
                        best_deficit = deficit;
                        best = a;
                    }
                }
                counts[best]++;
                rep.sequence.push_back(best);
            }
            break;
        }
    }
    // Frequency table and target violations.
    rep.frequency.assign(family_count, std::vector<double>(length, 0.0));
    std::vector<int> counts(family_count, 0);
    for (int m = 1; m <= length; ++m) {
        counts[rep.sequence[m - 1]]++;
        for (int a = 0; a < family_count; ++a)
            rep.frequency[a][m - 1] = static_cast<double>(counts[a]) / m;
    }
    if (spec.rule == EnvironmentRule::FrequencyTarget) {
        for (int m = 1; m <= length; ++m) {
            for (int a = 0; a < family_count; ++a) {
                if (std::abs(rep.frequency[a][m - 1] - spec.target_p[a]) >
                    spec.c0 / m + 1e-12) {
                    rep.violations.push_back(m);
                    rep.feasible = false;
                    break;
                }
            }
        }
    }
    return rep;
}

PrefractalCurve generate_prefractal(const IfsSystem& ifs, int level) {
    if (level < 0) throw ConfigError("prefractal level must be >= 0");
    ifs.validate();
    validate_chaining(ifs);
    // Segment count check before building anything.
    std::uint64_t count = 1;
    for (int t = 1; t <= level; ++t) {
        count *= ifs.family_at_level(t).maps.size();
        if (count > ifs.segment_cap)
            throw ConfigError("level " + std::to_string(level) + " exceeds the segment cap (" +
                              std::to_string(ifs.segment_cap) + " segments)");
    }

    PrefractalCurve curve;
    curve.level = level;
    curve.segments = {CurveSegment{ifs.base_a, ifs.base_b, {}, 1.0}};
    // K^m = Phi_{xi_1} ∘ ... ∘ Phi_{xi_m}(K0): apply the innermost family first,
    // so the loop walks levels from m down to 1, prepending word letters.
    const int dim = 2;
    for (int t = level; t >= 1; --t) {
        const GeneratorFamily& fam = ifs.family_at_level(t);
        const double d_sum = fam.contraction_sum(dim);
        std::vector<CurveSegment> next;
        next.reserve(curve.segments.size() * fam.maps.size());
        for (size_t i = 0; i < fam.maps.size(); ++i) {
            const Similitude& psi = fam.maps[i];
            const double w = std::pow(psi.ratio, dim - 1) / d_sum;
            for (const CurveSegment& seg : curve.segments) {
                CurveSegment out;
                out.p0 = psi.apply(seg.p0);
                out.p1 = psi.apply(seg.p1);
                out.word.reserve(seg.word.size() + 1);
                out.word.push_back(static_cast<int>(i));
                out.word.insert(out.word.end(), seg.word.begin(), seg.word.end());
                out.weight = w * seg.weight;
                next.push_back(std::move(out));
            }
        }
        curve.segments.swap(next);
    }
    curve.total_length = 0.0;
    for (const auto& s : curve.segments) curve.total_length += dist(s.p0, s.p1);
    return curve;
}

std::vector<Vec2> PrefractalCurve::polyline() const {
    std::vector<Vec2> pts;
    pts.reserve(segments.size() + 1);
    if (segments.empty()) return pts;
    pts.push_back(segments.front().p0);
    for (const auto& s : segments) pts.push_back(s.p1);
    return pts;
}

std::vector<double> contraction_sum_D(const IfsSystem& ifs, int ambient_dim) {
    std::vector<double> out;
    out.reserve(ifs.families.size());
    for (const auto& fam : ifs.families) {
        for (const auto& m : fam.maps)
            if (!(m.ratio > 0.0 && m.ratio < 1.0))
                throw ConfigError("contraction factor outside (0,1)");
        out.push_back(fam.contraction_sum(ambient_dim));
    }
    return out;
}

double sigma(const IfsSystem& ifs, int level, int ambient_dim) {
    if (level < 0) throw ConfigError("sigma level must be >= 0");
    double s = 1.0;
    for (int t = 1; t <= level; ++t)
        s /= ifs.family_at_level(t).contraction_sum(ambient_dim);
    return s;
}

double cell_measure(const IfsSystem& ifs, std::span<const int> word, int ambient_dim) {
    double mu = 1.0;
    for (size_t t = 0; t < word.size(); ++t) {
        const GeneratorFamily& fam = ifs.family_at_level(static_cast<int>(t) + 1);
        const int idx = word[t];
        if (idx < 0 || idx >= static_cast<int>(fam.maps.size()))
            throw ConfigError("word index out of range at position " + std::to_string(t));
        mu *= std::pow(fam.maps[idx].ratio, ambient_dim - 1) / fam.contraction_sum(ambient_dim);
    }
    return mu;
}

namespace {

std::vector<Vec2> image_polygon(const Similitude& psi, std::span<const Vec2> poly) {
    std::vector<Vec2> out;
    out.reserve(poly.size());
    for (const Vec2& p : poly) out.push_back(psi.apply(p));
    return out;
}

Vec2 polygon_centroid(std::span<const Vec2> poly) {
    Vec2 c{0, 0};
    for (const Vec2& p : poly) c = c + p;
    return c * (1.0 / poly.size());
}

}  // namespace

OscReport check_open_set_condition(const IfsSystem& ifs, std::span<const Vec2> inner,
                                   std::span<const Vec2> outer, int level) {
    if (!polygon_is_convex(inner))
        throw ConfigError("open set candidate O is not convex");
    if (!polygon_is_convex(outer))
        throw ConfigError("open set candidate O' is not convex");
    if (level < 1) throw ConfigError("open set condition level must be >= 1");
    ifs.validate();

    OscReport rep;
    rep.holds = true;
    double scale = 0.0;
    for (const Vec2& p : outer) scale = std::max(scale, p.norm());
    const double area_tol = 1e-10 * std::max(1.0, scale * scale);
    const double pt_tol = 1e-9 * std::max(1.0, scale);

    auto add = [&](OscViolation v) {
        rep.holds = false;
        rep.violations.push_back(std::move(v));
    };

    // (i) pairwise disjoint images of O, over all words of the given length
    // (outermost family applied last).
    std::vector<std::vector<Vec2>> images{std::vector<Vec2>(inner.begin(), inner.end())};
    for (int t = level; t >= 1; --t) {
        const GeneratorFamily& fam = ifs.family_at_level(t);
        std::vector<std::vector<Vec2>> next;
        next.reserve(images.size() * fam.maps.size());
        for (const auto& psi : fam.maps)
            for (const auto& img : images) next.push_back(image_polygon(psi, img));
        images.swap(next);
    }
    const double inner_area = std::abs(polygon_area(inner));
    for (size_t i = 0; i < images.size(); ++i) {
        for (size_t j = i + 1; j < images.size(); ++j) {
            const auto overlap = clip_convex(images[i], images[j]);
            const double a = overlap.empty() ? 0.0 : std::abs(polygon_area(overlap));
            rep.max_overlap_area = std::max(rep.max_overlap_area, a);
            if (a > area_tol) {
                add({"overlap", static_cast<int>(i), static_cast<int>(j), a,
                     polygon_centroid(overlap),
                     "images " + std::to_string(i) + "," + std::to_string(j) +
                         " overlap with area " + std::to_string(a)});
            }
        }
    }
    // (ii) images contained in O.
    for (size_t i = 0; i < images.size(); ++i) {
        const double img_area = std::abs(polygon_area(images[i]));
        const auto kept = clip_convex(images[i], inner);
        const double inside = kept.empty() ? 0.0 : std::abs(polygon_area(kept));
        const double escaped = img_area - inside;
        rep.max_escape_area = std::max(rep.max_escape_area, escaped);
        if (escaped > area_tol) {
            add({"containment", static_cast<int>(i), -1, escaped,
                 polygon_centroid(images[i]),
                 "image " + std::to_string(i) + " escapes O by area " +
                     std::to_string(escaped)});
        }
    }
    // Sanity: total image area cannot exceed |O| (cheap global witness).
    double total = 0.0;
    for (const auto& img : images) total += std::abs(polygon_area(img));
    if (total > inner_area + area_tol) {
        add({"area-excess", -1, -1, total - inner_area, polygon_centroid(inner),
             "sum of image areas exceeds |O| by " + std::to_string(total - inner_area)});
    }

    // (iii) boundary pinning: dO ∩ K0 = dO' ∩ K0 = dO ∩ dO' = {A, B}.
    const Vec2 A = ifs.base_a;
    const Vec2 B = ifs.base_b;
    auto on_boundary = [&](std::span<const Vec2> poly, const Vec2& p) {
        const size_t n = poly.size();
        for (size_t i = 0; i < n; ++i)
            if (point_segment_distance(p, poly[i], poly[(i + 1) % n]) <= pt_tol) return true;
        return false;
    };
    if (!on_boundary(inner, A) || !on_boundary(inner, B))
        add({"boundary-contact", -1, -1, 0.0, A, "base endpoints not on dO"});
    if (!on_boundary(outer, A) || !on_boundary(outer, B))
        add({"boundary-contact", -1, -1, 0.0, A, "base endpoints not on dO'"});
    // Interior of K0 must avoid both boundaries: test a dense set of interior points.
    for (int k = 1; k < 32; ++k) {
        const Vec2 p = A + (static_cast<double>(k) / 32.0) * (B - A);
        if (on_boundary(inner, p)) {
            add({"boundary-contact", -1, -1, 0.0, p, "dO touches the interior of K0"});
            break;
        }
        if (on_boundary(outer, p)) {
            add({"boundary-contact", -1, -1, 0.0, p, "dO' touches the interior of K0"});
            break;
        }
    }
    // O strictly inside O', sharing only A and B.
    const auto kept = clip_convex(inner, outer);
    const double kept_area = kept.empty() ? 0.0 : std::abs(polygon_area(kept));
    if (kept_area < inner_area - area_tol)
        add({"nesting", -1, -1, inner_area - kept_area, polygon_centroid(inner),
             "O is not contained in O'"});
    if (std::abs(polygon_area(outer)) <= inner_area + area_tol)
        add({"nesting", -1, -1, 0.0, polygon_centroid(outer), "O' is not strictly larger than O"});
    for (const Vec2& v : inner) {
        if (dist(v, A) <= pt_tol || dist(v, B) <= pt_tol) continue;
        if (on_boundary(outer, v))
            add({"boundary-contact", -1, -1, 0.0, v,
                 "dO and dO' share a point besides the base endpoints"});
    }
    return rep;
}

std::vector<DensitySample> measure_density_ratio(const IfsSystem& ifs,
                                                 const PrefractalCurve& curve,
                                                 std::span<const DensitySample> samples) {
    const double Dm = 1.0 / sigma(ifs, curve.level);
    std::vector<DensitySample> out(samples.begin(), samples.end());
    for (auto& s : out) {
        if (!(s.radius > 0.0 && s.radius <= 1.0))
            throw ConfigError("density sample radius must lie in (0,1]");
        double len = 0.0;
        for (const auto& seg : curve.segments)
            len += segment_disk_overlap(seg.p0, seg.p1, s.center, s.radius);
        s.ratio = len / (Dm * s.radius);
    }
    return out;
}

MeasureReport build_measure_report(const IfsSystem& ifs, int level_max,
                                   std::span<const DensitySample> samples) {
    if (level_max < 0) throw ConfigError("measure report needs level_max >= 0");
    MeasureReport rep;
    rep.D_per_family = contraction_sum_D(ifs);
    rep.sigma_per_level.reserve(level_max + 1);
    for (int m = 0; m <= level_max; ++m) rep.sigma_per_level.push_back(sigma(ifs, m));
    const auto curve = generate_prefractal(ifs, level_max);
    rep.density_samples = measure_density_ratio(ifs, curve, samples);
    // d-set exponent for the equal-ratio case; mixtures carry frequency-weighted
    // logs via mixture_dimension instead.
    const GeneratorFamily& fam = ifs.families.front();
    const double r0 = fam.maps.front().ratio;
    rep.dimension = std::log(static_cast<double>(fam.maps.size())) / std::log(1.0 / r0);
    return rep;
}

double mixture_dimension(double p1, double p2, double l1, double l2) {
    if (std::abs(p1 + p2 - 1.0) > 1e-12)
        throw ConfigError("mixture probabilities must sum to 1");
    if (p1 > 0.0 && !(l1 > 2.0 && l1 < 4.0))
        throw ConfigError("mixture requires 2 < l1 < 4");
    if (p2 > 0.0 && !(l2 > 2.0 && l2 < 4.0))
        throw ConfigError("mixture requires 2 < l2 < 4");
    const double denom = (p1 > 0.0 ? p1 * std::log(l1) : 0.0) +
                         (p2 > 0.0 ? p2 * std::log(l2) : 0.0);
    return std::numbers::ln2 * 2.0 / denom;
}

void write_curve(const PrefractalCurve& curve, const IfsSystem& ifs, std::ostream& os) {
    // For mixtures report the geometric-mean D so that sigma_m = D^-m stays valid.
    double D;
    if (curve.level == 0 || !ifs.is_mixture()) {
        D = ifs.families.front().contraction_sum(2);
    } else {
        D = std::pow(1.0 / sigma(ifs, curve.level), 1.0 / curve.level);
    }
    char buf[256];
    std::snprintf(buf, sizeof buf, "# ifs-curve level=%d D=%.17g\n", curve.level, D);
    os << buf;
    for (const auto& seg : curve.segments) {
        std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g %.17g %.17g ", seg.p0.x,
                      seg.p0.y, seg.p1.x, seg.p1.y, seg.weight);
        os << buf;
        if (seg.word.empty()) {
            os << '-';
        } else {
            for (int w : seg.word) os << static_cast<char>('1' + w);
        }
        os << '\n';
    }
}

}  // namespace fraclab
