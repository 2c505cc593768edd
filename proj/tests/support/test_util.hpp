#pragma once

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "mjo/grid.hpp"
#include "mjo/rng.hpp"
#include "mjo/tensor.hpp"

namespace testutil {

/// Unique scratch directory, removed on destruction.
class TempDir {
public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("mjo_test_" + tag + "_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter.fetch_add(1)));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

private:
  std::filesystem::path path_;
};

inline mjo::AnomalyField random_field(mjo::Rng& rng, const mjo::GridSpec& grid, int n_leads,
                                      std::int64_t init_date, double scale = 1.0) {
  mjo::AnomalyField f = mjo::AnomalyField::zeros(grid, n_leads, init_date);
  for (auto& v : f.values) v = scale * rng.normal();
  return f;
}

inline mjo::GridSpec tiny_grid(int n_lat = 5, int n_lon = 12) {
  mjo::GridSpec g;
  g.n_lat = n_lat;
  g.n_lon = n_lon;
  g.lat_start_deg = -20.0;
  g.lat_step_deg = 40.0 / (n_lat - 1);
  g.lon_start_deg = 0.0;
  g.lon_step_deg = 360.0 / n_lon;
  return g;
}

/// Central finite difference of a scalar function at x along index i.
inline double central_diff(const std::function<double(const std::vector<double>&)>& f,
                           std::vector<double> x, std::size_t i, double h = 1e-5) {
  const double orig = x[i];
  x[i] = orig + h;
  const double fp = f(x);
  x[i] = orig - h;
  const double fm = f(x);
  return (fp - fm) / (2.0 * h);
}

/// Gradcheck driver: the callback builds a fresh graph from raw input
/// values and returns (scalar loss tensor, differentiated input tensor).
struct BuiltGraph {
  mjo::ad::Tensor loss;
  mjo::ad::Tensor input;
};

inline double max_rel_grad_error(
    const std::function<BuiltGraph(const std::vector<double>&)>& build,
    const std::vector<double>& x0, double h = 1e-5, double denom_floor = 1e-6) {
  BuiltGraph g = build(x0);
  g.loss.backward();
  std::vector<double> analytic(g.input.grad().begin(), g.input.grad().end());

  double max_rel = 0.0;
  for (std::size_t i = 0; i < x0.size(); ++i) {
    auto eval = [&](const std::vector<double>& x) { return build(x).loss.item(); };
    const double numeric = central_diff(eval, x0, i, h);
    const double denom = std::max({std::fabs(analytic[i]), std::fabs(numeric), denom_floor});
    max_rel = std::max(max_rel, std::fabs(analytic[i] - numeric) / denom);
  }
  return max_rel;
}

/// Dense symmetric eigensolver by cyclic Jacobi rotations; the test-side
/// oracle for the power-iteration EOF path. Returns eigenvalues in
/// descending order with matching eigenvectors in the columns of V.
struct EigResult {
  std::vector<double> values;
  std::vector<double> vectors;  // column-major: vectors[i + dim*k] is component i of vector k
};

inline EigResult jacobi_eigh(std::vector<double> a, int n) {
  std::vector<double> v(static_cast<std::size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i) * n + i] = 1.0;

  auto at = [&](std::vector<double>& m, int r, int c) -> double& {
    return m[static_cast<std::size_t>(r) * n + c];
  };
  for (int sweep = 0; sweep < 200; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) off += at(a, p, q) * at(a, p, q);
    if (off < 1e-26) break;
    for (int p = 0; p < n; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double apq = at(a, p, q);
        if (std::fabs(apq) < 1e-300) continue;
        const double theta = (at(a, q, q) - at(a, p, p)) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int k = 0; k < n; ++k) {
          const double akp = at(a, k, p), akq = at(a, k, q);
          at(a, k, p) = c * akp - s * akq;
          at(a, k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          const double apk = at(a, p, k), aqk = at(a, q, k);
          at(a, p, k) = c * apk - s * aqk;
          at(a, q, k) = s * apk + c * aqk;
        }
        for (int k = 0; k < n; ++k) {
          const double vkp = v[static_cast<std::size_t>(k) * n + p];
          const double vkq = v[static_cast<std::size_t>(k) * n + q];
          v[static_cast<std::size_t>(k) * n + p] = c * vkp - s * vkq;
          v[static_cast<std::size_t>(k) * n + q] = s * vkp + c * vkq;
        }
      }
    }
  }
  // Sort eigenpairs by descending eigenvalue.
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](int x, int y) {
    return a[static_cast<std::size_t>(x) * n + x] > a[static_cast<std::size_t>(y) * n + y];
  });
  EigResult res;
  res.values.resize(n);
  res.vectors.resize(static_cast<std::size_t>(n) * n);
  for (int k = 0; k < n; ++k) {
    res.values[k] = a[static_cast<std::size_t>(order[k]) * n + order[k]];
    for (int i = 0; i < n; ++i)
      res.vectors[static_cast<std::size_t>(i) + static_cast<std::size_t>(n) * k] =
          v[static_cast<std::size_t>(i) * n + order[k]];
  }
  return res;
}

}  // namespace testutil
