#pragma once

#include <algorithm>
#include <limits>
#include <vector>

#include "reflkit/mesh.hpp"
#include "reflkit/vec.hpp"

namespace reflkit {

struct Ray {
    Vec3f origin;
    Vec3f dir;
    float tmin = 1e-4f;
    float tmax = std::numeric_limits<float>::infinity();
};

struct RayHit {
    float t = std::numeric_limits<float>::infinity();
    int tri = -1;
    float w1 = 0.0f, w2 = 0.0f; // barycentric weights of triangle vertices 1, 2
};

// Median-split BVH, built single-threaded with index tie-breaks so the tree
// is identical run to run.
class Bvh {
public:
    explicit Bvh(const Mesh &mesh) : mesh_(&mesh) {
        int n = mesh.triangle_count();
        order_.resize(size_t(n));
        for (int i = 0; i < n; ++i)
            order_[size_t(i)] = i;
        centroids_.resize(size_t(n));
        for (int i = 0; i < n; ++i) {
            const auto &t = mesh.triangles[size_t(i)];
            centroids_[size_t(i)] = (mesh.positions[size_t(t[0])] +
                                     mesh.positions[size_t(t[1])] +
                                     mesh.positions[size_t(t[2])]) * (1.0f / 3.0f);
        }
        nodes_.reserve(size_t(2 * n));
        build_node(0, n);
        centroids_.clear();
        centroids_.shrink_to_fit();
    }

    bool intersect(const Ray &ray, RayHit &hit) const {
        hit = RayHit{};
        hit.t = ray.tmax;
        bool found = false;
        traverse(ray, [&](int tri, float t, float w1, float w2) {
            if (t < hit.t) {
                hit.t = t;
                hit.tri = tri;
                hit.w1 = w1;
                hit.w2 = w2;
                found = true;
            }
            return false; // keep going, want nearest
        }, hit.t);
        return found;
    }

    // Any-hit test for the open segment between two points, with endpoint
    // offsets to step off the originating surfaces.
    bool occluded(const Vec3f &from, const Vec3f &to, float eps = 1e-4f) const {
        Vec3f d = to - from;
        float dist = length(d);
        if (dist <= 2.0f * eps)
            return false;
        Ray ray;
        ray.origin = from;
        ray.dir = d / dist;
        ray.tmin = eps;
        ray.tmax = dist - eps;
        bool blocked = false;
        float limit = ray.tmax;
        traverse(ray, [&](int, float, float, float) {
            blocked = true;
            return true; // stop at first hit
        }, limit);
        return blocked;
    }

    // Number of triangle crossings along the ray; odd from a point means the
    // point is inside a closed surface.
    int count_intersections(const Ray &ray) const {
        if (nodes_.empty())
            return 0;
        Vec3f inv_dir(1.0f / ray.dir.x, 1.0f / ray.dir.y, 1.0f / ray.dir.z);
        int count = 0;
        int stack[64];
        int top = 0;
        stack[top++] = 0;
        while (top > 0) {
            const Node &n = nodes_[size_t(stack[--top])];
            if (!box_hit(n, ray, inv_dir, ray.tmax))
                continue;
            if (n.count > 0) {
                for (int i = n.start; i < n.start + n.count; ++i) {
                    float t, w1, w2;
                    if (triangle_hit(order_[size_t(i)], ray, ray.tmax, t, w1, w2))
                        ++count;
                }
            } else {
                stack[top++] = n.right;
                stack[top++] = n.left;
            }
        }
        return count;
    }

private:
    struct Node {
        Vec3f bmin, bmax;
        int left = -1;   // internal: child node indices
        int right = -1;
        int start = 0;   // leaf: range in order_
        int count = 0;
    };

    static constexpr int kLeafSize = 4;

    const Mesh *mesh_;
    std::vector<Node> nodes_;
    std::vector<int> order_;
    std::vector<Vec3f> centroids_;

    void grow(Vec3f &bmin, Vec3f &bmax, const Vec3f &p) const {
        bmin = Vec3f(std::fmin(bmin.x, p.x), std::fmin(bmin.y, p.y), std::fmin(bmin.z, p.z));
        bmax = Vec3f(std::fmax(bmax.x, p.x), std::fmax(bmax.y, p.y), std::fmax(bmax.z, p.z));
    }

    int build_node(int start, int count) {
        Node node;
        node.bmin = Vec3f(std::numeric_limits<float>::infinity());
        node.bmax = -node.bmin;
        Vec3f cmin = node.bmin, cmax = node.bmax;
        for (int i = start; i < start + count; ++i) {
            const auto &t = mesh_->triangles[size_t(order_[size_t(i)])];
            for (int k = 0; k < 3; ++k)
                grow(node.bmin, node.bmax, mesh_->positions[size_t(t[k])]);
            grow(cmin, cmax, centroids_[size_t(order_[size_t(i)])]);
        }
        int index = int(nodes_.size());
        nodes_.push_back(node);
        if (count <= kLeafSize) {
            nodes_[size_t(index)].start = start;
            nodes_[size_t(index)].count = count;
            return index;
        }
        Vec3f extent = cmax - cmin;
        int axis = extent.x >= extent.y && extent.x >= extent.z ? 0
                 : extent.y >= extent.z                          ? 1
                                                                 : 2;
        int mid = start + count / 2;
        std::nth_element(order_.begin() + start, order_.begin() + mid,
                         order_.begin() + start + count, [&](int a, int b) {
                             float ca = centroids_[size_t(a)][axis];
                             float cb = centroids_[size_t(b)][axis];
                             return ca < cb || (ca == cb && a < b);
                         });
        int left = build_node(start, mid - start);
        int right = build_node(mid, start + count - mid);
        nodes_[size_t(index)].left = left;
        nodes_[size_t(index)].right = right;
        return index;
    }

    bool box_hit(const Node &n, const Ray &ray, const Vec3f &inv_dir, float tmax) const {
        float t0 = ray.tmin, t1 = tmax;
        for (int a = 0; a < 3; ++a) {
            float lo = (n.bmin[a] - ray.origin[a]) * inv_dir[a];
            float hi = (n.bmax[a] - ray.origin[a]) * inv_dir[a];
            if (lo > hi)
                std::swap(lo, hi);
            t0 = std::fmax(t0, lo);
            t1 = std::fmin(t1, hi);
            if (t0 > t1)
                return false;
        }
        return true;
    }

    // Moller-Trumbore; returns barycentric weights for vertices 1 and 2.
    bool triangle_hit(int tri, const Ray &ray, float tmax, float &t, float &w1, float &w2) const {
        const auto &idx = mesh_->triangles[size_t(tri)];
        const Vec3f &p0 = mesh_->positions[size_t(idx[0])];
        Vec3f e1 = mesh_->positions[size_t(idx[1])] - p0;
        Vec3f e2 = mesh_->positions[size_t(idx[2])] - p0;
        Vec3f pvec = cross(ray.dir, e2);
        float det = dot(e1, pvec);
        if (std::fabs(det) < 1e-12f)
            return false;
        float inv = 1.0f / det;
        Vec3f tvec = ray.origin - p0;
        float u = dot(tvec, pvec) * inv;
        if (u < 0.0f || u > 1.0f)
            return false;
        Vec3f qvec = cross(tvec, e1);
        float v = dot(ray.dir, qvec) * inv;
        if (v < 0.0f || u + v > 1.0f)
            return false;
        float tt = dot(e2, qvec) * inv;
        if (tt < ray.tmin || tt > tmax)
            return false;
        t = tt;
        w1 = u;
        w2 = v;
        return true;
    }

    template<typename Callback>
    void traverse(const Ray &ray, Callback &&cb, float &tmax) const {
        if (nodes_.empty())
            return;
        Vec3f inv_dir(1.0f / ray.dir.x, 1.0f / ray.dir.y, 1.0f / ray.dir.z);
        int stack[64];
        int top = 0;
        stack[top++] = 0;
        while (top > 0) {
            const Node &n = nodes_[size_t(stack[--top])];
            if (!box_hit(n, ray, inv_dir, tmax))
                continue;
            if (n.count > 0) {
                for (int i = n.start; i < n.start + n.count; ++i) {
                    int tri = order_[size_t(i)];
                    float t, w1, w2;
                    if (triangle_hit(tri, ray, tmax, t, w1, w2)) {
                        if (cb(tri, t, w1, w2))
                            return;
                        if (t < tmax)
                            tmax = t;
                    }
                }
            } else {
                stack[top++] = n.right;
                stack[top++] = n.left;
            }
        }
    }
};

} // namespace reflkit
