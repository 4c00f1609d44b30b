#pragma once

#include <cstdint>
#include <string>

#include "qbmor/system.hpp"

namespace qbmor {

// Diode RC ladder with g(v) = exp(40 v) - 1, unit capacitances and
// conductances, current input and voltage output at node 1. Lifted exactly
// to a QB system of order 2N with z_1 = g(v_1), z_k = g(v_{k-1} - v_k); the
// origin stays an equilibrium.
QBSystem build_rc(Index nodes);

struct BurgersSpec {
  Index n = 1000;
  double nu = 0.05;
  double alpha = 1.0;  // alpha v(0,t) + beta v_x(0,t) = u(t)
  double beta = 0.0;
  std::string output = "mean";  // "mean" or "right" (v at the last node)
};

// Central differences on x_i = i / (n + 1), i = 1..n; v_x(1, t) = 0 through
// v_{n+1} = v_n.
QBSystem build_burgers(const BurgersSpec& spec);

struct FhnSpec {
  Index nbar = 750;
  double epsilon = 0.015;
  double h = 0.5;
  double gamma = 0.05;
};

// FitzHugh-Nagumo cable, nbar nodes on [0, 1] including both ends, states
// (v, w, z = v^2), inputs (i0, g), outputs (v(0), w(0)). E is scaled to the
// identity.
QBSystem build_fhn(const FhnSpec& spec);

struct RandomSystemSpec {
  Index n = 30;
  double density = 0.05;
  Index inputs = 1;
  Index outputs = 1;
  std::uint64_t seed = 1;
};

// Seeded random sparse QB system with E close to the identity and a strictly
// diagonally dominant, negative-diagonal A.
QBSystem random_qb_system(const RandomSystemSpec& spec);

}  // namespace qbmor
