#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "reflkit/parallel.hpp"
#include "reflkit/raster.hpp"

namespace reflkit {

// Per-texel surface slopes dd/dx, dd/dy in texel units. Texels facing away
// from the tangent-space pole (n_z below threshold) are invalid.
struct SlopeField {
    int width = 0, height = 0;
    std::vector<float> p, q;
    std::vector<uint8_t> valid;

    size_t index(int x, int y) const { return size_t(y) * size_t(width) + size_t(x); }
};

inline SlopeField normals_to_slopes(const RasterMap &normals, float nz_min = 0.1f) {
    require(normals.channels == 3, "slopes: normals map must have 3 channels");
    SlopeField s;
    s.width = normals.width;
    s.height = normals.height;
    size_t n = size_t(s.width) * size_t(s.height);
    s.p.assign(n, 0.0f);
    s.q.assign(n, 0.0f);
    s.valid.assign(n, 0);
    for (int y = 0; y < s.height; ++y)
        for (int x = 0; x < s.width; ++x) {
            if (!normals.valid(x, y))
                continue;
            float nx = normals.at(x, y, 0);
            float ny = normals.at(x, y, 1);
            float nz = normals.at(x, y, 2);
            if (!(nz >= nz_min))
                continue;
            size_t i = s.index(x, y);
            s.p[i] = -nx / nz;
            s.q[i] = -ny / nz;
            s.valid[i] = 1;
        }
    return s;
}

struct IntegrateResult {
    RasterMap displacement;
    double rel_residual = 0.0;
    long iterations = 0;
};

struct IntegrateSettings {
    double tolerance = 1e-8; // relative residual target
    long max_iterations = 0; // 0: 10 * sqrt(valid texel count)
    int mg_threshold = 256;  // larger grids precondition CG with a multigrid V-cycle
};

namespace detail {

// Graph Laplacian over 4-neighbor edges whose both endpoints are valid.
inline void masked_laplacian(int w, int h, const uint8_t *valid, const double *v, double *out) {
    parallel_for(0, h, [&](int64_t yy) {
        int y = int(yy);
        for (int x = 0; x < w; ++x) {
            size_t i = size_t(y) * size_t(w) + size_t(x);
            if (!valid[i]) {
                out[i] = 0.0;
                continue;
            }
            double acc = 0.0;
            if (x + 1 < w && valid[i + 1])
                acc += v[i] - v[i + 1];
            if (x > 0 && valid[i - 1])
                acc += v[i] - v[i - 1];
            if (y + 1 < h && valid[i + size_t(w)])
                acc += v[i] - v[i + size_t(w)];
            if (y > 0 && valid[i - size_t(w)])
                acc += v[i] - v[i - size_t(w)];
            out[i] = acc;
        }
    });
}

// Labels 4-connected valid regions; returns component count.
inline int label_components(int w, int h, const std::vector<uint8_t> &valid,
                            std::vector<int32_t> &label) {
    size_t n = size_t(w) * size_t(h);
    label.assign(n, -1);
    std::vector<size_t> stack;
    int next = 0;
    for (size_t seed = 0; seed < n; ++seed) {
        if (!valid[seed] || label[seed] >= 0)
            continue;
        int id = next++;
        label[seed] = id;
        stack.push_back(seed);
        while (!stack.empty()) {
            size_t i = stack.back();
            stack.pop_back();
            int x = int(i % size_t(w));
            int y = int(i / size_t(w));
            const int dx[4] = {1, -1, 0, 0};
            const int dy[4] = {0, 0, 1, -1};
            for (int k = 0; k < 4; ++k) {
                int nx = x + dx[k], ny = y + dy[k];
                if (nx < 0 || ny < 0 || nx >= w || ny >= h)
                    continue;
                size_t j = size_t(ny) * size_t(w) + size_t(nx);
                if (valid[j] && label[j] < 0) {
                    label[j] = id;
                    stack.push_back(j);
                }
            }
        }
    }
    return next;
}

// Subtracts each component's mean from v (gauge / nullspace projection).
inline void remove_component_means(std::vector<double> &v, const std::vector<int32_t> &label,
                                   int components) {
    if (components == 0)
        return;
    std::vector<double> sum(size_t(components), 0.0);
    std::vector<long> count(size_t(components), 0);
    for (size_t i = 0; i < v.size(); ++i)
        if (label[i] >= 0) {
            sum[size_t(label[i])] += v[i];
            ++count[size_t(label[i])];
        }
    for (size_t i = 0; i < v.size(); ++i)
        if (label[i] >= 0)
            v[i] -= sum[size_t(label[i])] / double(count[size_t(label[i])]);
}

// Negative divergence of the slope field over included edges: b = D^T s.
inline void build_rhs(const SlopeField &s, std::vector<double> &b) {
    int w = s.width, h = s.height;
    parallel_for(0, h, [&](int64_t yy) {
        int y = int(yy);
        for (int x = 0; x < w; ++x) {
            size_t i = s.index(x, y);
            if (!s.valid[i]) {
                b[i] = 0.0;
                continue;
            }
            double acc = 0.0;
            if (x + 1 < w && s.valid[i + 1])
                acc -= double(s.p[i]);
            if (x > 0 && s.valid[i - 1])
                acc += double(s.p[i - 1]);
            if (y + 1 < h && s.valid[i + size_t(w)])
                acc -= double(s.q[i]);
            if (y > 0 && s.valid[i - size_t(w)])
                acc += double(s.q[i - size_t(w)]);
            b[i] = acc;
        }
    });
}

// One grid of the multigrid hierarchy. Coarse texels are valid when any of
// their 2x2 fine texels is; prolongation is block injection, restriction its
// transpose (box sum), so the V-cycle stays symmetric.
struct MgLevel {
    int w = 0, h = 0;
    std::vector<uint8_t> valid;
    std::vector<float> inv_diag; // 1 / vertex degree, 0 for isolated texels
    std::vector<double> b, x, r, t; // workspace
};

inline void fill_inv_diag(MgLevel &lv) {
    lv.inv_diag.assign(size_t(lv.w) * size_t(lv.h), 0.0f);
    for (int y = 0; y < lv.h; ++y)
        for (int x = 0; x < lv.w; ++x) {
            size_t i = size_t(y) * size_t(lv.w) + size_t(x);
            if (!lv.valid[i])
                continue;
            int deg = 0;
            if (x + 1 < lv.w && lv.valid[i + 1])
                ++deg;
            if (x > 0 && lv.valid[i - 1])
                ++deg;
            if (y + 1 < lv.h && lv.valid[i + size_t(lv.w)])
                ++deg;
            if (y > 0 && lv.valid[i - size_t(lv.w)])
                ++deg;
            if (deg > 0)
                lv.inv_diag[i] = 1.0f / float(deg);
        }
}

inline std::vector<MgLevel> build_mg_levels(int w, int h, const std::vector<uint8_t> &valid) {
    std::vector<MgLevel> levels;
    MgLevel fine;
    fine.w = w;
    fine.h = h;
    fine.valid = valid;
    fill_inv_diag(fine);
    levels.push_back(std::move(fine));
    while (std::max(levels.back().w, levels.back().h) > 64) {
        const MgLevel &f = levels.back();
        MgLevel c;
        c.w = (f.w + 1) / 2;
        c.h = (f.h + 1) / 2;
        c.valid.assign(size_t(c.w) * size_t(c.h), 0);
        for (int y = 0; y < c.h; ++y)
            for (int x = 0; x < c.w; ++x) {
                uint8_t any = 0;
                for (int dy = 0; dy < 2 && !any; ++dy)
                    for (int dx = 0; dx < 2 && !any; ++dx) {
                        int fx = 2 * x + dx, fy = 2 * y + dy;
                        if (fx < f.w && fy < f.h &&
                            f.valid[size_t(fy) * size_t(f.w) + size_t(fx)])
                            any = 1;
                    }
                c.valid[size_t(y) * size_t(c.w) + size_t(x)] = any;
            }
        fill_inv_diag(c);
        levels.push_back(std::move(c));
    }
    for (auto &lv : levels) {
        size_t n = size_t(lv.w) * size_t(lv.h);
        lv.b.assign(n, 0.0);
        lv.x.assign(n, 0.0);
        lv.r.assign(n, 0.0);
        lv.t.assign(n, 0.0);
    }
    return levels;
}

// Damped Jacobi: x <- x + omega * D^-1 (b - A x). Two buffers keep the sweep
// order-independent.
inline void jacobi_sweeps(MgLevel &lv, int sweeps) {
    constexpr double kOmega = 0.8;
    size_t n = size_t(lv.w) * size_t(lv.h);
    for (int s = 0; s < sweeps; ++s) {
        masked_laplacian(lv.w, lv.h, lv.valid.data(), lv.x.data(), lv.t.data());
        parallel_for(0, int64_t(n), [&](int64_t i) {
            if (lv.valid[size_t(i)])
                lv.x[size_t(i)] += kOmega * double(lv.inv_diag[size_t(i)]) *
                                   (lv.b[size_t(i)] - lv.t[size_t(i)]);
        });
    }
}

inline void mg_restrict(const MgLevel &f, MgLevel &c) {
    parallel_for(0, c.h, [&](int64_t yy) {
        int y = int(yy);
        for (int x = 0; x < c.w; ++x) {
            double acc = 0.0;
            for (int dy = 0; dy < 2; ++dy)
                for (int dx = 0; dx < 2; ++dx) {
                    int fx = 2 * x + dx, fy = 2 * y + dy;
                    if (fx < f.w && fy < f.h) {
                        size_t fi = size_t(fy) * size_t(f.w) + size_t(fx);
                        if (f.valid[fi])
                            acc += f.r[fi];
                    }
                }
            size_t ci = size_t(y) * size_t(c.w) + size_t(x);
            c.b[ci] = c.valid[ci] ? acc : 0.0;
        }
    });
}

inline void mg_prolong_add(MgLevel &f, const MgLevel &c) {
    parallel_for(0, f.h, [&](int64_t yy) {
        int y = int(yy);
        int cy = y / 2;
        for (int x = 0; x < f.w; ++x) {
            size_t fi = size_t(y) * size_t(f.w) + size_t(x);
            if (!f.valid[fi])
                continue;
            size_t ci = size_t(cy) * size_t(c.w) + size_t(x / 2);
            f.x[fi] += c.x[ci];
        }
    });
}

inline void v_cycle(std::vector<MgLevel> &levels, size_t l) {
    MgLevel &lv = levels[l];
    size_t n = size_t(lv.w) * size_t(lv.h);
    parallel_for(0, int64_t(n), [&](int64_t i) { lv.x[size_t(i)] = 0.0; });
    if (l + 1 == levels.size()) {
        jacobi_sweeps(lv, 60);
        return;
    }
    jacobi_sweeps(lv, 2);
    masked_laplacian(lv.w, lv.h, lv.valid.data(), lv.x.data(), lv.t.data());
    parallel_for(0, int64_t(n), [&](int64_t i) {
        lv.r[size_t(i)] = lv.valid[size_t(i)] ? lv.b[size_t(i)] - lv.t[size_t(i)] : 0.0;
    });
    mg_restrict(lv, levels[l + 1]);
    v_cycle(levels, l + 1);
    mg_prolong_add(lv, levels[l + 1]);
    jacobi_sweeps(lv, 2);
}

struct CgOutcome {
    double rel_residual = 0.0;
    long iterations = 0;
    bool converged = false;
};

// Conjugate gradients on the masked Poisson system, optionally preconditioned
// by one multigrid V-cycle per iteration. The residual certificate is always
// the true relative residual ||b - A x|| / ||b||.
inline CgOutcome preconditioned_cg(const SlopeField &s, const std::vector<double> &b,
                                   std::vector<double> &x, const std::vector<int32_t> &label,
                                   int components, double tolerance, long max_iterations,
                                   bool use_mg) {
    size_t n = b.size();
    std::vector<double> r(n, 0.0), z(n, 0.0), pdir(n, 0.0), ap(n, 0.0);
    std::vector<MgLevel> levels;
    if (use_mg)
        levels = build_mg_levels(s.width, s.height, s.valid);

    auto dotv = [&](const std::vector<double> &a, const std::vector<double> &c) {
        return deterministic_sum(int64_t(n), [&](int64_t i) {
            return s.valid[size_t(i)] ? a[size_t(i)] * c[size_t(i)] : 0.0;
        });
    };
    auto precondition = [&](const std::vector<double> &rin, std::vector<double> &zout) {
        if (!use_mg) {
            zout = rin;
            return;
        }
        MgLevel &fine = levels[0];
        parallel_for(0, int64_t(n), [&](int64_t i) { fine.b[size_t(i)] = rin[size_t(i)]; });
        v_cycle(levels, 0);
        parallel_for(0, int64_t(n), [&](int64_t i) { zout[size_t(i)] = fine.x[size_t(i)]; });
        remove_component_means(zout, label, components);
    };

    masked_laplacian(s.width, s.height, s.valid.data(), x.data(), ap.data());
    parallel_for(0, int64_t(n), [&](int64_t i) {
        r[size_t(i)] = s.valid[size_t(i)] ? b[size_t(i)] - ap[size_t(i)] : 0.0;
    });
    double bnorm = std::sqrt(dotv(b, b));
    CgOutcome out;
    if (bnorm == 0.0) {
        std::fill(x.begin(), x.end(), 0.0);
        out.converged = true;
        return out;
    }
    out.rel_residual = std::sqrt(dotv(r, r)) / bnorm;
    if (out.rel_residual <= tolerance) {
        out.converged = true;
        return out;
    }

    precondition(r, z);
    pdir = z;
    double rz = dotv(r, z);
    for (long it = 0; it < max_iterations; ++it) {
        masked_laplacian(s.width, s.height, s.valid.data(), pdir.data(), ap.data());
        double pap = dotv(pdir, ap);
        if (pap <= 0.0)
            break;
        double alpha = rz / pap;
        parallel_for(0, int64_t(n), [&](int64_t i) {
            if (s.valid[size_t(i)]) {
                x[size_t(i)] += alpha * pdir[size_t(i)];
                r[size_t(i)] -= alpha * ap[size_t(i)];
            }
        });
        out.iterations = it + 1;
        out.rel_residual = std::sqrt(dotv(r, r)) / bnorm;
        if (out.rel_residual <= tolerance) {
            out.converged = true;
            return out;
        }
        precondition(r, z);
        double rz_next = dotv(r, z);
        double beta = rz_next / rz;
        rz = rz_next;
        parallel_for(0, int64_t(n), [&](int64_t i) {
            pdir[size_t(i)] = s.valid[size_t(i)] ? z[size_t(i)] + beta * pdir[size_t(i)] : 0.0;
        });
    }
    return out;
}

} // namespace detail

// Least-squares integration of forward-difference slopes with Neumann
// boundaries: the 5-point Poisson system solved by conjugate gradients per
// connected component, gauge-fixed to zero mean. Throws if the residual
// target is missed at the iteration cap.
inline IntegrateResult integrate(const SlopeField &slopes, IntegrateSettings cfg = {}) {
    size_t n = size_t(slopes.width) * size_t(slopes.height);
    long valid_count = 0;
    for (size_t i = 0; i < n; ++i)
        if (slopes.valid[i])
            ++valid_count;
    require(valid_count > 0, "integrate: no valid texels");

    std::vector<int32_t> label;
    int components = detail::label_components(slopes.width, slopes.height, slopes.valid, label);

    std::vector<double> b(n, 0.0);
    detail::build_rhs(slopes, b);
    detail::remove_component_means(b, label, components);

    long cap = cfg.max_iterations > 0 ? cfg.max_iterations
                                      : long(10.0 * std::sqrt(double(valid_count))) + 1;
    bool use_mg = std::max(slopes.width, slopes.height) > cfg.mg_threshold;
    std::vector<double> x(n, 0.0);
    detail::CgOutcome outcome =
        detail::preconditioned_cg(slopes, b, x, label, components, cfg.tolerance, cap, use_mg);
    if (!outcome.converged)
        fail("integrate: conjugate gradients stalled at relative residual " +
             std::to_string(outcome.rel_residual));
    detail::remove_component_means(x, label, components);

    RasterMap d = make_map(slopes.width, slopes.height, MapKind::Displacement, Colorspace::Raw);
    d.mask.assign(slopes.valid.begin(), slopes.valid.end());
    for (int y = 0; y < slopes.height; ++y)
        for (int x2 = 0; x2 < slopes.width; ++x2)
            d.at(x2, y, 0) = float(x[slopes.index(x2, y)]);

    IntegrateResult res;
    res.displacement = std::move(d);
    res.rel_residual = outcome.rel_residual;
    res.iterations = outcome.iterations;
    return res;
}

} // namespace reflkit
