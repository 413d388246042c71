#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <vector>

#include "misrob/errors.hpp"
#include "misrob/gaussian.hpp"
#include "misrob/rng.hpp"

namespace misrob {

// Finite set of unit directions forming a maximal packing at the given radius.
// Maximality makes the packing a covering at the same radius, which is what
// the variational estimators need.
struct SphereNet {
    int dim = 0;
    double radius = 0.0;
    std::vector<Eigen::VectorXd> directions;

    std::size_t size() const { return directions.size(); }
};

inline Eigen::VectorXd sample_unit_vector(Rng& rng, int d) {
    Eigen::VectorXd v(d);
    double norm2 = 0.0;
    do {
        for (int j = 0; j < d; ++j) v[j] = sample_normal(rng);
        norm2 = v.squaredNorm();
    } while (norm2 < 1e-24);
    return v / std::sqrt(norm2);
}

// Greedy random maximal packing: sample uniform unit vectors, accept a
// candidate iff it is >= radius from every accepted direction, and stop after
// max_rejections consecutive rejections. The rejection budget controls how
// close to maximal (hence how reliable the covering property is) the result
// gets.
inline SphereNet make_net(int d, double radius, std::uint64_t seed,
                          int max_rejections = 20000) {
    if (d < 1) throw ConfigError("make_net: d must be >= 1");
    if (!(radius > 0.0 && radius < 1.0)) throw ConfigError("make_net: radius must be in (0,1)");

    SphereNet net;
    net.dim = d;
    net.radius = radius;

    if (d == 1) {
        net.directions.push_back(Eigen::VectorXd::Constant(1, 1.0));
        net.directions.push_back(Eigen::VectorXd::Constant(1, -1.0));
        return net;
    }

    Rng rng = Rng(seed).derive("sphere-net");
    const double r2 = radius * radius;
    int rejections = 0;
    while (rejections < max_rejections) {
        Eigen::VectorXd cand = sample_unit_vector(rng, d);
        bool ok = true;
        for (const auto& v : net.directions) {
            if ((cand - v).squaredNorm() < r2) {
                ok = false;
                break;
            }
        }
        if (ok) {
            net.directions.push_back(std::move(cand));
            rejections = 0;
        } else {
            ++rejections;
        }
    }
    return net;
}

}  // namespace misrob
