#pragma once

#include "cforge/synthesis.hpp"

// The three-pendulum instance used throughout the tests: agents on a path
// 1-2-3, leader pinned at node 1, unit tracking weight, R = 0.1.
inline cforge::NetworkSpec pendulum_spec() {
    using cforge::Matrix;
    cforge::NetworkSpec spec;
    spec.n = 2;
    spec.m_in = 1;
    spec.A = (Matrix(2, 2) << 0.0, 1.0, -10.0, 0.0).finished();
    spec.B1 = (Matrix(2, 1) << 0.0, -4.0).finished();
    spec.B2 = (Matrix(2, 2) << 0.0, 0.0, 1.0, 0.0).finished();
    spec.Q = Matrix::Identity(2, 2);
    spec.R = (Matrix(1, 1) << 0.1).finished();
    spec.graph = cforge::Graph::path(3);
    spec.pinning = cforge::Pinning::single(3, 1);
    spec.d = 0.0;
    return spec;
}

inline cforge::NetworkSpec pendulum_spec_with_offsets() {
    cforge::NetworkSpec spec = pendulum_spec();
    cforge::Matrix e0(2, 3);
    for (int i = 0; i < 3; ++i) {
        e0(0, i) = 0.1;
        e0(1, i) = 0.0;
    }
    spec.e0 = e0;
    return spec;
}
