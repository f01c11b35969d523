#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "fxlab/errors.hpp"
#include "fxlab/matrix.hpp"
#include "fxlab/models/spec.hpp"

#include <json.hpp>

namespace fxlab {

// ---------------------------------------------------------------------------
// Column scalers (population statistics, fitted on training rows only).

struct Standardizer {
  std::vector<double> mean;
  std::vector<double> sigma;           // population convention
  std::vector<std::uint8_t> constant;  // sigma == 0

  static Standardizer fit(const Matrix& X) {
    if (X.rows() == 0) throw DataError("Standardizer: empty training matrix");
    Standardizer s;
    s.mean.assign(X.cols(), 0);
    s.sigma.assign(X.cols(), 0);
    s.constant.assign(X.cols(), 0);
    for (std::size_t j = 0; j < X.cols(); ++j) {
      double acc = 0;
      for (std::size_t r = 0; r < X.rows(); ++r) acc += X(r, j);
      s.mean[j] = acc / X.rows();
      double var = 0;
      for (std::size_t r = 0; r < X.rows(); ++r) {
        const double d = X(r, j) - s.mean[j];
        var += d * d;
      }
      s.sigma[j] = std::sqrt(var / X.rows());
      s.constant[j] = s.sigma[j] == 0 ? 1 : 0;
    }
    return s;
  }

  Matrix apply(const Matrix& X) const {
    if (X.cols() != mean.size()) throw ValidationError("Standardizer: column count mismatch");
    Matrix out(X.rows(), X.cols());
    for (std::size_t r = 0; r < X.rows(); ++r) {
      for (std::size_t j = 0; j < X.cols(); ++j) {
        out(r, j) = constant[j] ? 0.0 : (X(r, j) - mean[j]) / sigma[j];
      }
    }
    return out;
  }
};

struct MinMaxScaler {
  std::vector<double> min;
  std::vector<double> max;

  static MinMaxScaler fit(const Matrix& X) {
    if (X.rows() == 0) throw DataError("MinMaxScaler: empty training matrix");
    MinMaxScaler s;
    s.min.assign(X.cols(), 0);
    s.max.assign(X.cols(), 0);
    for (std::size_t j = 0; j < X.cols(); ++j) {
      double lo = X(0, j), hi = X(0, j);
      for (std::size_t r = 1; r < X.rows(); ++r) {
        lo = std::min(lo, X(r, j));
        hi = std::max(hi, X(r, j));
      }
      s.min[j] = lo;
      s.max[j] = hi;
    }
    return s;
  }

  // Training columns land in [0, 1]; unseen data may fall outside (no clamp).
  Matrix apply(const Matrix& X) const {
    if (X.cols() != min.size()) throw ValidationError("MinMaxScaler: column count mismatch");
    Matrix out(X.rows(), X.cols());
    for (std::size_t r = 0; r < X.rows(); ++r) {
      for (std::size_t j = 0; j < X.cols(); ++j) {
        const double span = max[j] - min[j];
        out(r, j) = span == 0 ? 0.0 : (X(r, j) - min[j]) / span;
      }
    }
    return out;
  }
};

// ---------------------------------------------------------------------------
// Full-rank PCA via a cyclic Jacobi eigen-solver on the training covariance.

namespace detail {

// Diagonalizes symmetric A in place; V accumulates rotations (columns are
// eigenvectors). Throws after `max_sweeps` full sweeps without convergence.
inline void jacobi_eigen(Matrix& A, Matrix& V, double tol = 1e-12, int max_sweeps = 100) {
  const std::size_t n = A.rows();
  V = Matrix(n, n);
  for (std::size_t i = 0; i < n; ++i) V(i, i) = 1.0;
  if (n <= 1) return;

  double scale = 0;
  for (std::size_t i = 0; i < n; ++i) scale = std::max(scale, std::fabs(A(i, i)));
  scale = std::max(scale, 1e-300);

  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) off = std::max(off, std::fabs(A(p, q)));
    }
    if (off <= tol * scale) return;

    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = A(p, q);
        if (std::fabs(apq) <= tol * scale * 1e-3) continue;
        const double theta = (A(q, q) - A(p, p)) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;

        for (std::size_t k = 0; k < n; ++k) {
          const double akp = A(k, p), akq = A(k, q);
          A(k, p) = c * akp - s * akq;
          A(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = A(p, k), aqk = A(q, k);
          A(p, k) = c * apk - s * aqk;
          A(q, k) = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = V(k, p), vkq = V(k, q);
          V(k, p) = c * vkp - s * vkq;
          V(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  throw NumericError("Jacobi eigen-solver did not converge within " +
                     std::to_string(max_sweeps) + " sweeps");
}

}  // namespace detail

struct PcaTransform {
  Matrix components;  // columns are orthonormal directions, variance-descending
  std::vector<double> eigenvalues;

  // Expects standardized input (the pipeline below enforces the ordering).
  static PcaTransform fit(const Matrix& X) {
    if (X.rows() < 2) throw DataError("PCA: need at least 2 rows");
    const std::size_t n = X.rows(), f = X.cols();

    std::vector<double> mu(f, 0);
    for (std::size_t j = 0; j < f; ++j) {
      for (std::size_t r = 0; r < n; ++r) mu[j] += X(r, j);
      mu[j] /= n;
    }
    Matrix cov(f, f);
    for (std::size_t a = 0; a < f; ++a) {
      for (std::size_t b = a; b < f; ++b) {
        double acc = 0;
        for (std::size_t r = 0; r < n; ++r) acc += (X(r, a) - mu[a]) * (X(r, b) - mu[b]);
        cov(a, b) = cov(b, a) = acc / n;
      }
    }

    Matrix V;
    detail::jacobi_eigen(cov, V);

    std::vector<std::size_t> order(f);
    for (std::size_t i = 0; i < f; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return cov(a, a) > cov(b, b); });

    PcaTransform pca;
    pca.components = Matrix(f, f);
    pca.eigenvalues.resize(f);
    for (std::size_t c = 0; c < f; ++c) {
      const std::size_t src = order[c];
      pca.eigenvalues[c] = cov(src, src);
      // Sign convention: largest-magnitude coordinate is positive.
      std::size_t arg = 0;
      for (std::size_t r = 1; r < f; ++r) {
        if (std::fabs(V(r, src)) > std::fabs(V(arg, src))) arg = r;
      }
      const double flip = V(arg, src) < 0 ? -1.0 : 1.0;
      for (std::size_t r = 0; r < f; ++r) pca.components(r, c) = flip * V(r, src);
    }
    return pca;
  }

  Matrix apply(const Matrix& X) const {
    if (X.cols() != components.rows()) throw ValidationError("PCA: column count mismatch");
    return matmul(X, components);
  }

  Matrix inverse_apply(const Matrix& Y) const {
    if (Y.cols() != components.cols()) throw ValidationError("PCA: column count mismatch");
    return matmul(Y, transpose(components));
  }
};

// ---------------------------------------------------------------------------
// Policy selection and the fitted pipeline.

enum class ScalingStage { STANDARDIZE, MINMAX, PCA };

struct ScalingPolicy {
  std::vector<ScalingStage> stages;
};

inline ScalingPolicy select_policy(const ModelSpec& spec, bool use_pca) {
  if (use_pca) return {{ScalingStage::STANDARDIZE, ScalingStage::PCA}};
  ModelFamily f = spec.family;
  if (f == ModelFamily::BAGGING) {
    if (!spec.inner) throw ConfigError("BAGGING spec requires an inner model");
    f = spec.inner->family;
  }
  if (f == ModelFamily::SVM || f == ModelFamily::LOGISTIC) {
    return {{ScalingStage::STANDARDIZE}};
  }
  return {{ScalingStage::MINMAX}};
}

struct FittedScaler {
  ScalingPolicy policy;
  Standardizer standardizer;
  MinMaxScaler minmax;
  PcaTransform pca;

  static FittedScaler fit(const ScalingPolicy& policy, const Matrix& X_train) {
    FittedScaler out;
    out.policy = policy;
    Matrix cur = X_train;
    for (ScalingStage stage : policy.stages) {
      switch (stage) {
        case ScalingStage::STANDARDIZE:
          out.standardizer = Standardizer::fit(cur);
          cur = out.standardizer.apply(cur);
          break;
        case ScalingStage::MINMAX:
          out.minmax = MinMaxScaler::fit(cur);
          cur = out.minmax.apply(cur);
          break;
        case ScalingStage::PCA:
          out.pca = PcaTransform::fit(cur);
          cur = out.pca.apply(cur);
          break;
      }
    }
    return out;
  }

  Matrix apply(const Matrix& X) const {
    Matrix cur = X;
    for (ScalingStage stage : policy.stages) {
      switch (stage) {
        case ScalingStage::STANDARDIZE: cur = standardizer.apply(cur); break;
        case ScalingStage::MINMAX: cur = minmax.apply(cur); break;
        case ScalingStage::PCA: cur = pca.apply(cur); break;
      }
    }
    return cur;
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    nlohmann::json stages = nlohmann::json::array();
    for (ScalingStage s : policy.stages) {
      stages.push_back(s == ScalingStage::STANDARDIZE ? "standardize"
                       : s == ScalingStage::MINMAX    ? "minmax"
                                                      : "pca");
    }
    j["stages"] = stages;
    j["mean"] = standardizer.mean;
    j["sigma"] = standardizer.sigma;
    j["min"] = minmax.min;
    j["max"] = minmax.max;
    j["eigenvalues"] = pca.eigenvalues;
    j["components_rows"] = pca.components.rows();
    j["components"] = pca.components.data();
    return j;
  }

  static FittedScaler from_json(const nlohmann::json& j) {
    FittedScaler out;
    for (const auto& s : j.at("stages")) {
      const std::string name = s.get<std::string>();
      if (name == "standardize") {
        out.policy.stages.push_back(ScalingStage::STANDARDIZE);
      } else if (name == "minmax") {
        out.policy.stages.push_back(ScalingStage::MINMAX);
      } else if (name == "pca") {
        out.policy.stages.push_back(ScalingStage::PCA);
      } else {
        throw ConfigError("unknown scaling stage: " + name);
      }
    }
    out.standardizer.mean = j.at("mean").get<std::vector<double>>();
    out.standardizer.sigma = j.at("sigma").get<std::vector<double>>();
    out.standardizer.constant.resize(out.standardizer.sigma.size());
    for (std::size_t i = 0; i < out.standardizer.sigma.size(); ++i) {
      out.standardizer.constant[i] = out.standardizer.sigma[i] == 0 ? 1 : 0;
    }
    out.minmax.min = j.at("min").get<std::vector<double>>();
    out.minmax.max = j.at("max").get<std::vector<double>>();
    out.pca.eigenvalues = j.at("eigenvalues").get<std::vector<double>>();
    const std::size_t rows = j.at("components_rows").get<std::size_t>();
    const auto flat = j.at("components").get<std::vector<double>>();
    const std::size_t cols = rows == 0 ? 0 : flat.size() / rows;
    out.pca.components = Matrix(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < cols; ++c) out.pca.components(r, c) = flat[r * cols + c];
    }
    return out;
  }
};

}  // namespace fxlab
