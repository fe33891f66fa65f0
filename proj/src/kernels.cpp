#include "promissing/kernels.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "promissing/errors.hpp"

namespace promissing::kernels {

namespace {

// Below this many multiply-adds the fork/join costs more than it saves.
constexpr std::size_t kParallelWork = 1u << 15;

void check_shapes(std::size_t x_rows, std::size_t x_cols, const Matrix& w,
                  std::span<const double> b, std::span<const double> wc, const Matrix& pre) {
  if (x_cols != w.cols() || b.size() != w.rows() || (!wc.empty() && wc.size() != w.rows()) ||
      pre.rows() != x_rows || pre.cols() != w.rows()) {
    throw ShapeError("layer kernel shape mismatch: input width " + std::to_string(x_cols) +
                     ", weights " + std::to_string(w.rows()) + "x" + std::to_string(w.cols()));
  }
}

inline void nan_dense_row(const MaskedMatrix& x, std::size_t i, const Matrix& w,
                          std::span<const double> b, std::span<const double> wc, Matrix& pre) {
  const std::size_t p = x.cols();
  const auto xs = x.row_payload(i);
  const auto ms = x.row_mask(i);
  const std::size_t q = x.observed_in_row(i);
  const double q_frac = static_cast<double>(q) / static_cast<double>(p);
  const double r_frac = static_cast<double>(p - q) / static_cast<double>(p);
  for (std::size_t k = 0; k < w.rows(); ++k) {
    const auto wk = w.row(k);
    double acc = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
      if (!ms[j]) acc += xs[j] * wk[j];
    }
    pre(i, k) = wc.empty() ? acc + b[k] * q_frac : acc + (b[k] * q_frac + wc[k] * r_frac);
  }
}

inline void dense_row(const Matrix& x, std::size_t i, const Matrix& w, std::span<const double> b,
                      Matrix& pre) {
  const auto xs = x.row(i);
  for (std::size_t k = 0; k < w.rows(); ++k) {
    const auto wk = w.row(k);
    double acc = 0.0;
    for (std::size_t j = 0; j < xs.size(); ++j) acc += xs[j] * wk[j];
    pre(i, k) = acc + b[k];
  }
}

inline void nan_dense_grad_neuron(const MaskedMatrix& x, const Matrix& dpre, std::size_t k,
                                  Matrix& dw, std::span<double> db, std::span<double> dwc) {
  const std::size_t p = x.cols();
  auto dwk = dw.row(k);
  std::fill(dwk.begin(), dwk.end(), 0.0);
  double gb = 0.0;
  double gc = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const double g = dpre(i, k);
    const auto xs = x.row_payload(i);
    const auto ms = x.row_mask(i);
    std::size_t q = 0;
    for (std::size_t j = 0; j < p; ++j) {
      if (!ms[j]) {
        dwk[j] += g * xs[j];
        ++q;
      }
    }
    gb += g * (static_cast<double>(q) / static_cast<double>(p));
    gc += g * (static_cast<double>(p - q) / static_cast<double>(p));
  }
  db[k] = gb;
  if (!dwc.empty()) dwc[k] = gc;
}

inline void dense_grad_neuron(const Matrix& x, const Matrix& dpre, std::size_t k, Matrix& dw,
                              std::span<double> db) {
  auto dwk = dw.row(k);
  std::fill(dwk.begin(), dwk.end(), 0.0);
  double gb = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const double g = dpre(i, k);
    const auto xs = x.row(i);
    for (std::size_t j = 0; j < xs.size(); ++j) dwk[j] += g * xs[j];
    gb += g;
  }
  db[k] = gb;
}

inline void input_grad_row(const Matrix& dpre, const Matrix& w, std::size_t i, Matrix& dx) {
  auto out = dx.row(i);
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t k = 0; k < w.rows(); ++k) {
    const double g = dpre(i, k);
    const auto wk = w.row(k);
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += g * wk[j];
  }
}

void check_grad_shapes(std::size_t n, std::size_t p, const Matrix& dpre, const Matrix& dw,
                       std::span<double> db, std::span<double> dwc) {
  if (dpre.rows() != n || dw.cols() != p || dw.rows() != dpre.cols() || db.size() != dw.rows() ||
      (!dwc.empty() && dwc.size() != dw.rows())) {
    throw ShapeError("gradient kernel shape mismatch");
  }
}

}  // namespace

void nan_dense_preactivation_serial(const MaskedMatrix& x, const Matrix& w,
                                    std::span<const double> b, std::span<const double> wc,
                                    Matrix& pre) {
  check_shapes(x.rows(), x.cols(), w, b, wc, pre);
  for (std::size_t i = 0; i < x.rows(); ++i) nan_dense_row(x, i, w, b, wc, pre);
}

void nan_dense_preactivation(const MaskedMatrix& x, const Matrix& w, std::span<const double> b,
                             std::span<const double> wc, Matrix& pre) {
  check_shapes(x.rows(), x.cols(), w, b, wc, pre);
  const std::size_t n = x.rows();
#pragma omp parallel for schedule(static) if (n * w.size() > kParallelWork)
  for (std::size_t i = 0; i < n; ++i) nan_dense_row(x, i, w, b, wc, pre);
}

void dense_preactivation_serial(const Matrix& x, const Matrix& w, std::span<const double> b,
                                Matrix& pre) {
  check_shapes(x.rows(), x.cols(), w, b, {}, pre);
  for (std::size_t i = 0; i < x.rows(); ++i) dense_row(x, i, w, b, pre);
}

void dense_preactivation(const Matrix& x, const Matrix& w, std::span<const double> b,
                         Matrix& pre) {
  check_shapes(x.rows(), x.cols(), w, b, {}, pre);
  const std::size_t n = x.rows();
#pragma omp parallel for schedule(static) if (n * w.size() > kParallelWork)
  for (std::size_t i = 0; i < n; ++i) dense_row(x, i, w, b, pre);
}

void nan_dense_param_grad_serial(const MaskedMatrix& x, const Matrix& dpre, Matrix& dw,
                                 std::span<double> db, std::span<double> dwc) {
  check_grad_shapes(x.rows(), x.cols(), dpre, dw, db, dwc);
  for (std::size_t k = 0; k < dw.rows(); ++k) nan_dense_grad_neuron(x, dpre, k, dw, db, dwc);
}

void nan_dense_param_grad(const MaskedMatrix& x, const Matrix& dpre, Matrix& dw,
                          std::span<double> db, std::span<double> dwc) {
  check_grad_shapes(x.rows(), x.cols(), dpre, dw, db, dwc);
  const std::size_t s = dw.rows();
  // Split over neurons: each neuron's row sum keeps its serial order.
#pragma omp parallel for schedule(static) if (x.rows() * dw.size() > kParallelWork)
  for (std::size_t k = 0; k < s; ++k) nan_dense_grad_neuron(x, dpre, k, dw, db, dwc);
}

void dense_param_grad_serial(const Matrix& x, const Matrix& dpre, Matrix& dw,
                             std::span<double> db) {
  check_grad_shapes(x.rows(), x.cols(), dpre, dw, db, {});
  for (std::size_t k = 0; k < dw.rows(); ++k) dense_grad_neuron(x, dpre, k, dw, db);
}

void dense_param_grad(const Matrix& x, const Matrix& dpre, Matrix& dw, std::span<double> db) {
  check_grad_shapes(x.rows(), x.cols(), dpre, dw, db, {});
  const std::size_t s = dw.rows();
#pragma omp parallel for schedule(static) if (x.rows() * dw.size() > kParallelWork)
  for (std::size_t k = 0; k < s; ++k) dense_grad_neuron(x, dpre, k, dw, db);
}

void input_grad_serial(const Matrix& dpre, const Matrix& w, Matrix& dx) {
  if (dx.rows() != dpre.rows() || dx.cols() != w.cols() || dpre.cols() != w.rows()) {
    throw ShapeError("input gradient shape mismatch");
  }
  for (std::size_t i = 0; i < dpre.rows(); ++i) input_grad_row(dpre, w, i, dx);
}

void input_grad(const Matrix& dpre, const Matrix& w, Matrix& dx) {
  if (dx.rows() != dpre.rows() || dx.cols() != w.cols() || dpre.cols() != w.rows()) {
    throw ShapeError("input gradient shape mismatch");
  }
  const std::size_t n = dpre.rows();
#pragma omp parallel for schedule(static) if (n * w.size() > kParallelWork)
  for (std::size_t i = 0; i < n; ++i) input_grad_row(dpre, w, i, dx);
}

void masked_input_grad(const MaskedMatrix& x, const Matrix& dpre, const Matrix& w, Matrix& dx) {
  input_grad(dpre, w, dx);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t j = 0; j < x.cols(); ++j) {
      if (x.is_missing(i, j)) dx(i, j) = 0.0;
    }
  }
}

// ---------------------------------------------------------------- knn

double nan_euclidean_sq(std::span<const double> a, std::span<const std::uint8_t> ma,
                        std::span<const double> b, std::span<const std::uint8_t> mb) {
  double ss = 0.0;
  std::size_t co = 0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    if (ma[j] || mb[j]) continue;
    const double d = a[j] - b[j];
    ss += d * d;
    ++co;
  }
  if (co == 0) return std::numeric_limits<double>::infinity();
  return static_cast<double>(a.size()) / static_cast<double>(co) * ss;
}

namespace {

// Returns false when some missing cell of row i has no donor.
bool knn_fill_row(const MaskedMatrix& donors, const MaskedMatrix& x, std::size_t k,
                  std::size_t i, Matrix& out, std::vector<double>& dist,
                  std::vector<std::size_t>& order) {
  auto dst = out.row(i);
  const auto xs = x.row_payload(i);
  const auto ms = x.row_mask(i);
  std::copy(xs.begin(), xs.end(), dst.begin());
  if (std::none_of(ms.begin(), ms.end(), [](std::uint8_t m) { return m != 0; })) return true;

  const std::size_t nd = donors.rows();
  dist.resize(nd);
  for (std::size_t d = 0; d < nd; ++d) {
    dist[d] = nan_euclidean_sq(xs, ms, donors.row_payload(d), donors.row_mask(d));
  }
  order.resize(nd);
  for (std::size_t d = 0; d < nd; ++d) order[d] = d;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return dist[a] < dist[b]; });

  for (std::size_t j = 0; j < x.cols(); ++j) {
    if (!ms[j]) continue;
    double sum = 0.0;
    std::size_t used = 0;
    for (const auto d : order) {
      if (used == k || std::isinf(dist[d])) break;
      if (donors.is_missing(d, j)) continue;
      sum += donors.payload(d, j);
      ++used;
    }
    if (used == 0) return false;
    dst[j] = sum / static_cast<double>(used);
  }
  return true;
}

void check_knn(const MaskedMatrix& donors, const MaskedMatrix& x, std::size_t k,
               const Matrix& out) {
  if (k == 0) throw ImputeError("knn needs k >= 1");
  if (donors.cols() != x.cols() || out.rows() != x.rows() || out.cols() != x.cols()) {
    throw ShapeError("knn fill shape mismatch");
  }
}

}  // namespace

void knn_fill_serial(const MaskedMatrix& donors, const MaskedMatrix& x, std::size_t k,
                     Matrix& out) {
  check_knn(donors, x, k, out);
  std::vector<double> dist;
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    if (!knn_fill_row(donors, x, k, i, out, dist, order)) {
      throw ImputeError("row " + std::to_string(i) + " has no co-observed donor");
    }
  }
}

void knn_fill(const MaskedMatrix& donors, const MaskedMatrix& x, std::size_t k, Matrix& out) {
  check_knn(donors, x, k, out);
  const std::size_t n = x.rows();
  std::atomic<std::size_t> failed{n};
#pragma omp parallel if (n * donors.rows() * x.cols() > kParallelWork)
  {
    std::vector<double> dist;
    std::vector<std::size_t> order;
#pragma omp for schedule(dynamic, 8)
    for (std::size_t i = 0; i < n; ++i) {
      if (!knn_fill_row(donors, x, k, i, out, dist, order)) {
        std::size_t cur = failed.load();
        while (i < cur && !failed.compare_exchange_weak(cur, i)) {
        }
      }
    }
  }
  if (failed.load() != n) {
    throw ImputeError("row " + std::to_string(failed.load()) + " has no co-observed donor");
  }
}

}  // namespace promissing::kernels
