#pragma once

// Static problem data for the two-hop relay assignment problem: annular
// geometry, distance-based channel gains, relay traffic and weights.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sidelink/rng.hpp"

namespace sidelink {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

inline double distance(Point2 a, Point2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

enum class Fading { None, Rayleigh };

struct ModelConfig {
  std::size_t n_outer = 4;
  std::size_t n_inner = 4;
  double inner_r_min = 1.5;
  double inner_r_max = 2.5;
  double outer_r_min = 3.5;
  double outer_r_max = 4.5;
  double alpha = 2.0;   // path-loss exponent
  double noise = 1.0;   // sigma^2
  double power = 100.0; // transmit power of every UE (20 dB SNR at unit distance)
  double r_max = 0.0;   // relay traffic is drawn from Uniform[0, r_max]
  Fading fading = Fading::None;
  std::uint64_t seed = 1;

  void validate() const {
    auto fail = [](const std::string& what) {
      throw std::invalid_argument("invalid model config: " + what);
    };
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) fail("alpha must be >= 0");
    if (!(noise > 0.0) || !std::isfinite(noise)) fail("noise must be > 0");
    if (!(power > 0.0) || !std::isfinite(power)) fail("power must be > 0");
    if (!(r_max >= 0.0) || !std::isfinite(r_max)) fail("r_max must be >= 0");
    if (!(inner_r_min >= 0.0 && inner_r_min <= inner_r_max && inner_r_max < outer_r_min &&
          outer_r_min <= outer_r_max)) {
      fail("radii must satisfy 0 <= R_in_min <= R_in_max < R_out_min <= R_out_max");
    }
  }
};

struct Topology {
  Point2 gnb{};
  std::vector<Point2> inner;
  std::vector<Point2> outer;
};

// Channel gains and powers. h1(i, j) is outer i -> inner j; h2[j] is
// inner j -> its serving gNodeB.
struct GainTable {
  Matrix h1;
  std::vector<double> h2;
  std::vector<double> p_outer;
  std::vector<double> p_inner;
  double noise = 1.0;

  friend bool operator==(const GainTable&, const GainTable&) = default;
};

struct ProblemInstance {
  GainTable gains;
  std::vector<double> relay_traffic;  // r_j^(2), one per inner UE
  std::vector<double> weights;        // w_i, one per outer UE
  std::vector<std::size_t> gnb_of;    // serving gNodeB of each inner UE

  std::size_t n_outer() const noexcept { return gains.h1.rows(); }
  std::size_t n_inner() const noexcept { return gains.h1.cols(); }

  // Checks dimensions and value domains. Weights must be strictly positive
  // here; the fair scheduler builds per-slot copies with zero weights
  // directly and never routes them through this check.
  void validate() const {
    auto fail = [](const std::string& what) {
      throw std::invalid_argument("invalid problem instance: " + what);
    };
    const std::size_t no = n_outer();
    const std::size_t ni = n_inner();
    if (gains.h2.size() != ni || gains.p_inner.size() != ni || relay_traffic.size() != ni ||
        gnb_of.size() != ni) {
      fail("inner-UE vectors must have n_i entries");
    }
    if (gains.p_outer.size() != no || weights.size() != no) {
      fail("outer-UE vectors must have n_o entries");
    }
    if (!(gains.noise > 0.0) || !std::isfinite(gains.noise)) fail("noise must be > 0");
    auto positive = [](double v) { return v > 0.0 && std::isfinite(v); };
    for (std::size_t i = 0; i < no; ++i) {
      for (double g : gains.h1.row(i)) {
        if (!positive(g)) fail("h1 gains must be positive and finite");
      }
      if (!positive(gains.p_outer[i])) fail("outer powers must be positive");
      if (!positive(weights[i])) fail("weights must be positive");
    }
    for (std::size_t j = 0; j < ni; ++j) {
      if (!positive(gains.h2[j])) fail("h2 gains must be positive and finite");
      if (!positive(gains.p_inner[j])) fail("inner powers must be positive");
      if (!(relay_traffic[j] >= 0.0) || !std::isfinite(relay_traffic[j])) {
        fail("relay traffic must be >= 0");
      }
    }
  }

  friend bool operator==(const ProblemInstance&, const ProblemInstance&) = default;
};

namespace detail {

// Uniform-in-area sample from the annulus r_min <= |p| <= r_max via the
// inverse CDF of the radius, F(r) = (r^2 - r_min^2) / (r_max^2 - r_min^2).
inline Point2 sample_annulus(double r_min, double r_max, Rng& rng) {
  const double u = uniform01(rng);
  const double r2 = r_min * r_min + u * (r_max * r_max - r_min * r_min);
  const double r = std::clamp(std::sqrt(r2), r_min, r_max);
  const double theta = 2.0 * std::numbers::pi * uniform01(rng);
  return {r * std::cos(theta), r * std::sin(theta)};
}

}  // namespace detail

inline Topology gen_topology(const ModelConfig& cfg, Rng& rng) {
  cfg.validate();
  Topology topo;
  topo.inner.reserve(cfg.n_inner);
  topo.outer.reserve(cfg.n_outer);
  for (std::size_t j = 0; j < cfg.n_inner; ++j) {
    topo.inner.push_back(detail::sample_annulus(cfg.inner_r_min, cfg.inner_r_max, rng));
  }
  for (std::size_t i = 0; i < cfg.n_outer; ++i) {
    topo.outer.push_back(detail::sample_annulus(cfg.outer_r_min, cfg.outer_r_max, rng));
  }
  return topo;
}

// Deterministic path loss d^(-alpha).
inline double path_gain(double d, double alpha) {
  if (!(d > 0.0)) throw std::runtime_error("degenerate geometry: zero link distance");
  return std::pow(d, -alpha);
}

inline GainTable gains_from_topology(const Topology& topo, const ModelConfig& cfg) {
  const std::size_t no = topo.outer.size();
  const std::size_t ni = topo.inner.size();
  GainTable g;
  g.h1 = Matrix(no, ni);
  for (std::size_t i = 0; i < no; ++i) {
    for (std::size_t j = 0; j < ni; ++j) {
      g.h1(i, j) = path_gain(distance(topo.outer[i], topo.inner[j]), cfg.alpha);
    }
  }
  g.h2.reserve(ni);
  for (const Point2& p : topo.inner) g.h2.push_back(path_gain(distance(p, topo.gnb), cfg.alpha));
  g.p_outer.assign(no, cfg.power);
  g.p_inner.assign(ni, cfg.power);
  g.noise = cfg.noise;
  return g;
}

inline ProblemInstance instance_from_topology(const Topology& topo, const ModelConfig& cfg,
                                              Rng& rng) {
  ProblemInstance inst;
  inst.gains = gains_from_topology(topo, cfg);
  if (cfg.fading == Fading::Rayleigh) {
    // Unit-mean exponential power fading on every link.
    std::exponential_distribution<double> fade(1.0);
    for (std::size_t i = 0; i < inst.n_outer(); ++i) {
      for (double& h : inst.gains.h1.row(i)) h *= fade(rng);
    }
    for (double& h : inst.gains.h2) h *= fade(rng);
  }
  inst.relay_traffic.resize(topo.inner.size());
  std::uniform_real_distribution<double> traffic(0.0, cfg.r_max);
  for (double& r : inst.relay_traffic) r = cfg.r_max > 0.0 ? traffic(rng) : 0.0;
  inst.weights.assign(topo.outer.size(), 1.0);
  inst.gnb_of.assign(topo.inner.size(), 0);
  return inst;
}

inline ProblemInstance gen_instance(const ModelConfig& cfg, Rng& rng) {
  const Topology topo = gen_topology(cfg, rng);
  return instance_from_topology(topo, cfg, rng);
}

// ---------------------------------------------------------------------------
// JSON

inline nlohmann::json to_json(const ProblemInstance& inst) {
  nlohmann::json h1 = nlohmann::json::array();
  for (std::size_t i = 0; i < inst.n_outer(); ++i) {
    const auto row = inst.gains.h1.row(i);
    h1.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return {
      {"n_o", inst.n_outer()},
      {"n_i", inst.n_inner()},
      {"h1", std::move(h1)},
      {"h2", inst.gains.h2},
      {"p_outer", inst.gains.p_outer},
      {"p_inner", inst.gains.p_inner},
      {"noise", inst.gains.noise},
      {"relay_traffic", inst.relay_traffic},
      {"weights", inst.weights},
      {"gnb_of", inst.gnb_of},
  };
}

inline ProblemInstance instance_from_json(const nlohmann::json& j) {
  ProblemInstance inst;
  const auto no = j.at("n_o").get<std::size_t>();
  const auto ni = j.at("n_i").get<std::size_t>();
  const auto& h1 = j.at("h1");
  if (!h1.is_array() || h1.size() != no) {
    throw std::invalid_argument("invalid problem instance: h1 must have n_o rows");
  }
  inst.gains.h1 = Matrix(no, ni);
  for (std::size_t i = 0; i < no; ++i) {
    const auto row = h1[i].get<std::vector<double>>();
    if (row.size() != ni) {
      throw std::invalid_argument("invalid problem instance: h1 rows must have n_i entries");
    }
    std::copy(row.begin(), row.end(), inst.gains.h1.row(i).begin());
  }
  inst.gains.h2 = j.at("h2").get<std::vector<double>>();
  inst.gains.p_outer = j.at("p_outer").get<std::vector<double>>();
  inst.gains.p_inner = j.at("p_inner").get<std::vector<double>>();
  inst.gains.noise = j.at("noise").get<double>();
  inst.relay_traffic = j.at("relay_traffic").get<std::vector<double>>();
  inst.weights = j.at("weights").get<std::vector<double>>();
  inst.gnb_of = j.at("gnb_of").get<std::vector<std::size_t>>();
  inst.validate();
  return inst;
}

inline nlohmann::json to_json(const ModelConfig& cfg) {
  return {
      {"n_o", cfg.n_outer},
      {"n_i", cfg.n_inner},
      {"r_in_min", cfg.inner_r_min},
      {"r_in_max", cfg.inner_r_max},
      {"r_out_min", cfg.outer_r_min},
      {"r_out_max", cfg.outer_r_max},
      {"alpha", cfg.alpha},
      {"noise", cfg.noise},
      {"power", cfg.power},
      {"r_max", cfg.r_max},
      {"fading", cfg.fading == Fading::Rayleigh ? "rayleigh" : "none"},
      {"seed", cfg.seed},
  };
}

// Missing keys keep their defaults. When only n_o is given, n_i follows it.
inline ModelConfig model_config_from_json(const nlohmann::json& j, ModelConfig cfg = {}) {
  if (j.contains("n_o")) {
    cfg.n_outer = j.at("n_o").get<std::size_t>();
    if (!j.contains("n_i")) cfg.n_inner = cfg.n_outer;
  }
  if (j.contains("n_i")) cfg.n_inner = j.at("n_i").get<std::size_t>();
  cfg.inner_r_min = j.value("r_in_min", cfg.inner_r_min);
  cfg.inner_r_max = j.value("r_in_max", cfg.inner_r_max);
  cfg.outer_r_min = j.value("r_out_min", cfg.outer_r_min);
  cfg.outer_r_max = j.value("r_out_max", cfg.outer_r_max);
  cfg.alpha = j.value("alpha", cfg.alpha);
  cfg.noise = j.value("noise", cfg.noise);
  cfg.power = j.value("power", cfg.power);
  cfg.r_max = j.value("r_max", cfg.r_max);
  cfg.seed = j.value("seed", cfg.seed);
  if (j.contains("fading")) {
    const auto f = j.at("fading").get<std::string>();
    if (f == "none") {
      cfg.fading = Fading::None;
    } else if (f == "rayleigh") {
      cfg.fading = Fading::Rayleigh;
    } else {
      throw std::invalid_argument("invalid model config: unknown fading '" + f + "'");
    }
  }
  cfg.validate();
  return cfg;
}

}  // namespace sidelink
