#pragma once

// Ground-truth linear networks
//
//   x(t+1) = A x(t) + B_u u(t) + B_e e(t),   y(t) = [I 0] x(t)
//
// with the first `observed` states measured and the rest hidden, their
// dynamical-structure-function (DSF) topology, and time-series simulation.

#include <cstdint>
#include <string>

#include <Eigen/Core>

namespace netinf {

using Adjacency = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

struct StateSpaceModel {
  Eigen::MatrixXd a;
  Eigen::MatrixXd b_u;
  Eigen::MatrixXd b_e;
  int observed = 0;

  // Generator metadata, echoed into serialized models.
  std::string topology = "custom";
  std::uint64_t seed = 0;
  double density = 0.0;

  int nodes() const { return static_cast<int>(a.rows()); }
  int hidden() const { return nodes() - observed; }
  int inputs() const { return static_cast<int>(b_u.cols()); }
  int noise_channels() const { return static_cast<int>(b_e.cols()); }

  /// Dimension consistency only; stability is checked by the generators.
  void validate() const;
};

/// Zero structure of Q (observed x observed, zero diagonal) and P
/// (observed x inputs).
struct DsfStructure {
  Adjacency q_adj;
  Adjacency p_adj;

  int observed() const { return static_cast<int>(q_adj.rows()); }
  int inputs() const { return static_cast<int>(p_adj.cols()); }
  int link_count() const;
  bool operator==(const DsfStructure&) const = default;
};

enum class SnrKind { kFinite, kNoNoise, kNoInput };

/// Simulation noise setting. SNR is 10 log10(var_u / var_e) with var_u = 1.
struct SnrSetting {
  SnrKind kind = SnrKind::kNoNoise;
  double db = 0.0;

  static SnrSetting finite(double db) { return {SnrKind::kFinite, db}; }
  static SnrSetting no_noise() { return {SnrKind::kNoNoise, 0.0}; }
  /// Inputs switched off; the network is driven by unit-variance noise only.
  static SnrSetting no_input() { return {SnrKind::kNoInput, 0.0}; }

  /// Accepts a number (dB), "none" or "pure-noise".
  static SnrSetting parse(const std::string& text);
  std::string to_string() const;

  double input_variance() const;
  double noise_variance() const;
  bool operator==(const SnrSetting&) const = default;
};

struct Experiment {
  Eigen::MatrixXd y;  // observed x N
  Eigen::MatrixXd u;  // inputs x N
  SnrSetting snr;
  std::uint64_t seed = 0;

  int n_points() const { return static_cast<int>(y.cols()); }
  int observed() const { return static_cast<int>(y.rows()); }
  int inputs() const { return static_cast<int>(u.rows()); }
  void validate() const;
};

double spectral_radius(const Eigen::MatrixXd& a);

/// sprandn-style A with round(density * n^2) N(0,1) entries at distinct
/// random positions, redrawn until rho(A) < 1 and every observed node
/// takes part in at least one DSF link. B_u drives each observed node with
/// its own input. Process noise enters each observed node through its own
/// channel; with `hidden_noise` every state gets one (B_e = I), which
/// generally makes H non-diagonal.
StateSpaceModel generate_random_network(int nodes, int observed, double density,
                                        std::uint64_t seed, bool hidden_noise = false,
                                        int max_attempts = 1000);

/// Observed nodes 0 -> 1 -> ... -> p-1 -> 0 in a single directed cycle. The
/// `hidden` hidden nodes are spliced into evenly spaced cycle edges
/// (j -> h -> j+1). One input enters through `input_node`; every state gets
/// its own process noise.
StateSpaceModel generate_ring_network(int observed, int hidden, std::uint64_t seed,
                                      int input_node = 0, int max_attempts = 1000);

/// Structural (boolean reachability) DSF topology.
DsfStructure derive_dsf_structure(const StateSpaceModel& model);

/// x(0) = 0; inputs and process noise are independent white Gaussian
/// sequences drawn from separate seeded streams.
Experiment simulate(const StateSpaceModel& model, int n_points, SnrSetting snr,
                    std::uint64_t seed);

}  // namespace netinf
