// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 the pointprop authors
//
// Particle swarm optimizer (maximization) with per-particle random streams:
// results are bit-identical for a fixed seed no matter how the objective
// evaluations are parallelized.

#ifndef POINTPROP_PSO_HPP
#define POINTPROP_PSO_HPP

#include <fstream>
#include <functional>
#include <vector>

#include "pointprop/core.hpp"
#include "pointprop/parallel.hpp"

namespace pointprop {

struct PsoConfig {
  double inertia = 0.72;        // alpha
  double accel_global = 1.49;   // lambda
  double accel_personal = 1.49; // theta
  int particles = 50;
  int generations = 1000;
  std::vector<std::pair<double, double>> range;  // per-dimension [lo, hi]
  std::uint64_t seed = 1;
  int threads = 1;  // objective evaluation only

  void validate() const {
    if (particles < 1 || generations < 1) {
      throw std::invalid_argument("pso: counts must be >= 1");
    }
    if (range.empty()) throw std::invalid_argument("pso: empty search range");
    for (const auto& [lo, hi] : range) {
      if (!(lo < hi)) throw std::invalid_argument("pso: range min < max");
    }
  }
};

struct Particle {
  std::vector<double> position;
  std::vector<double> velocity;
  std::vector<double> best_position;
  double best_fitness = -std::numeric_limits<double>::infinity();
};

struct PsoGeneration {
  int generation = 0;
  double best_fitness = 0;
  std::vector<double> best_position;
};

struct PsoResult {
  std::vector<double> best_position;
  double best_fitness = -std::numeric_limits<double>::infinity();
  std::vector<PsoGeneration> history;  // global best after each generation
};

/// Maximize `objective` over the configured box. Per generation: evaluate
/// all particles, update personal/global bests, then update velocities with
/// fresh uniform r1, r2 per particle per dimension and move. Particles that
/// leave the box are re-drawn uniformly inside it.
inline PsoResult pso_optimize(
    const std::function<double(const std::vector<double>&)>& objective,
    const PsoConfig& cfg) {
  cfg.validate();
  const std::size_t dim = cfg.range.size();

  std::vector<Rng> streams;
  streams.reserve(static_cast<std::size_t>(cfg.particles));
  Rng master(cfg.seed);
  for (int i = 0; i < cfg.particles; ++i) {
    streams.push_back(master.substream(static_cast<std::uint64_t>(i) + 1));
  }

  std::vector<Particle> swarm(static_cast<std::size_t>(cfg.particles));
  for (int i = 0; i < cfg.particles; ++i) {
    Particle& p = swarm[static_cast<std::size_t>(i)];
    Rng& rng = streams[static_cast<std::size_t>(i)];
    p.position.resize(dim);
    p.velocity.resize(dim);
    for (std::size_t d = 0; d < dim; ++d) {
      const auto [lo, hi] = cfg.range[d];
      p.position[d] = rng.uniform(lo, hi);
      p.velocity[d] = rng.uniform(-(hi - lo) / 2, (hi - lo) / 2);
    }
    p.best_position = p.position;
  }

  PsoResult result;
  std::vector<double> fitness(static_cast<std::size_t>(cfg.particles));

  for (int gen = 0; gen < cfg.generations; ++gen) {
    parallel_for(static_cast<std::size_t>(cfg.particles), cfg.threads,
                 [&](std::size_t i) { fitness[i] = objective(swarm[i].position); });

    for (std::size_t i = 0; i < swarm.size(); ++i) {
      Particle& p = swarm[i];
      if (fitness[i] > p.best_fitness) {
        p.best_fitness = fitness[i];
        p.best_position = p.position;
      }
      if (fitness[i] > result.best_fitness) {
        result.best_fitness = fitness[i];
        result.best_position = p.position;
      }
    }

    for (std::size_t i = 0; i < swarm.size(); ++i) {
      Particle& p = swarm[i];
      Rng& rng = streams[i];
      bool out_of_range = false;
      for (std::size_t d = 0; d < dim; ++d) {
        const double r1 = rng.uniform();
        const double r2 = rng.uniform();
        p.velocity[d] =
            cfg.inertia * p.velocity[d] +
            cfg.accel_global * r1 * (result.best_position[d] - p.position[d]) +
            cfg.accel_personal * r2 * (p.best_position[d] - p.position[d]);
        p.position[d] += p.velocity[d];
        const auto [lo, hi] = cfg.range[d];
        if (p.position[d] < lo || p.position[d] > hi) out_of_range = true;
      }
      if (out_of_range) {
        for (std::size_t d = 0; d < dim; ++d) {
          const auto [lo, hi] = cfg.range[d];
          p.position[d] = rng.uniform(lo, hi);
        }
      }
    }

    result.history.push_back({gen, result.best_fitness, result.best_position});
  }
  return result;
}

/// Tuning history CSV: generation,best_fitness,best_position...
inline void export_pso_history_csv(const PsoResult& result,
                                   const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("pso csv: cannot write " + path);
  out << "generation,best_fitness";
  if (!result.history.empty()) {
    for (std::size_t d = 0; d < result.history.front().best_position.size(); ++d) {
      out << ",x" << d;
    }
  }
  out << '\n';
  out.precision(12);
  for (const PsoGeneration& g : result.history) {
    out << g.generation << ',' << g.best_fitness;
    for (double x : g.best_position) out << ',' << x;
    out << '\n';
  }
}

}  // namespace pointprop

#endif  // POINTPROP_PSO_HPP
