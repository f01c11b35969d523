#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "fxlab/models/model.hpp"

namespace fxlab {

enum class SvmKernel { LINEAR, RBF, SIGMOID, POLYNOMIAL };

inline SvmKernel parse_svm_kernel(const std::string& s) {
  if (s == "linear") return SvmKernel::LINEAR;
  if (s == "rbf") return SvmKernel::RBF;
  if (s == "sigmoid") return SvmKernel::SIGMOID;
  if (s == "polynomial") return SvmKernel::POLYNOMIAL;
  throw ConfigError("unknown SVM kernel: " + s);
}

inline const char* svm_kernel_name(SvmKernel k) {
  switch (k) {
    case SvmKernel::LINEAR: return "linear";
    case SvmKernel::RBF: return "rbf";
    case SvmKernel::SIGMOID: return "sigmoid";
    case SvmKernel::POLYNOMIAL: return "polynomial";
  }
  throw ConfigError("unknown SVM kernel");
}

// C-SVM trained by sequential minimal optimization with maximal-violating-
// pair working-set selection. Indefinite kernels (sigmoid, and polynomial
// with even degree) are handled by exact endpoint evaluation of the
// two-variable subproblem, which keeps the dual objective monotone.
class SvmModel : public Model {
 public:
  explicit SvmModel(const ModelSpec& spec)
      : kernel_(parse_svm_kernel(spec.get_str("kernel", "rbf"))),
        c_(spec.get_real("c", 1.0)),
        gamma_(spec.get_real("gamma", 0.1)),
        degree_(spec.get_int("degree", 3)),
        coef0_(spec.get_real("coef0", 0.0)),
        tol_(spec.get_real("tol", 1e-3)) {
    seed_ = spec.seed;
    if (c_ <= 0) throw ConfigError("SVM: C must be > 0");
    if (gamma_ <= 0) throw ConfigError("SVM: gamma must be > 0");
    if (degree_ < 1) throw ConfigError("SVM: degree must be >= 1");
  }

  // Dual objective (maximization form) after every SMO iteration; filled
  // only when tracing was requested before fit.
  void record_trace(bool on) { record_trace_ = on; }
  const std::vector<double>& dual_trace() const { return trace_; }
  std::size_t iterations() const { return iterations_; }

  std::vector<double> decision_scores(const Matrix& X) const override {
    check_input(X);
    std::vector<double> out(X.rows());
    for (std::size_t q = 0; q < X.rows(); ++q) {
      const double* row = X.row_ptr(q);
      double f = b_;
      for (std::size_t s = 0; s < sv_.rows(); ++s) {
        f += coef_[s] * kernel_value(sv_.row_ptr(s), row, n_features_);
      }
      out[q] = f;
    }
    return out;
  }

  double threshold() const override { return 0.0; }
  ModelFamily family() const override { return ModelFamily::SVM; }

  double bias() const { return b_; }
  std::size_t support_vector_count() const { return sv_.rows(); }

  // Maximal KKT violation (m - M) of the solved dual; for tests.
  double final_violation() const { return final_violation_; }

  nlohmann::json to_json() const override {
    nlohmann::json j;
    j["family"] = "SVM";
    j["kernel"] = svm_kernel_name(kernel_);
    j["c"] = c_;
    j["gamma"] = gamma_;
    j["degree"] = degree_;
    j["coef0"] = coef0_;
    j["tol"] = tol_;
    j["seed"] = seed_;
    j["features"] = n_features_;
    j["rows"] = n_rows_;
    j["b"] = b_;
    j["coef"] = coef_;
    j["sv"] = sv_.data();
    return j;
  }

  static std::unique_ptr<SvmModel> from_json(const nlohmann::json& j) {
    ModelSpec spec;
    spec.family = ModelFamily::SVM;
    spec.hyper["kernel"] = j.at("kernel").get<std::string>();
    spec.hyper["c"] = j.at("c").get<double>();
    spec.hyper["gamma"] = j.at("gamma").get<double>();
    spec.hyper["degree"] = j.at("degree").get<std::int64_t>();
    spec.hyper["coef0"] = j.at("coef0").get<double>();
    spec.hyper["tol"] = j.at("tol").get<double>();
    spec.seed = j.value("seed", std::uint64_t{0});
    auto model = std::make_unique<SvmModel>(spec);
    model->b_ = j.at("b").get<double>();
    model->coef_ = j.at("coef").get<std::vector<double>>();
    const std::size_t features = j.at("features").get<std::size_t>();
    const auto flat = j.at("sv").get<std::vector<double>>();
    const std::size_t rows = features == 0 ? 0 : flat.size() / features;
    model->sv_ = Matrix(rows, features);
    model->sv_.data() = flat;
    model->restore_shape(features, j.at("rows").get<std::size_t>(), spec.seed);
    return model;
  }

 protected:
  void do_fit(const Matrix& X, const std::vector<int>& y01) override {
    require_both_classes(y01, "SVM");
    const std::size_t n = X.rows();
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = y01[i] ? 1.0 : -1.0;

    // Kernel access: full matrix for moderate n, recompute otherwise.
    const bool cache = n <= 2500;
    std::vector<double> kmat;
    std::vector<double> kdiag(n);
    for (std::size_t i = 0; i < n; ++i) kdiag[i] = kernel_value(X.row_ptr(i), X.row_ptr(i), X.cols());
    if (cache) {
      kmat.resize(n * n);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) {
          const double v = kernel_value(X.row_ptr(i), X.row_ptr(j), X.cols());
          kmat[i * n + j] = kmat[j * n + i] = v;
        }
      }
    }
    std::vector<double> row_i(n), row_j(n);
    auto kernel_row = [&](std::size_t r, std::vector<double>& buf) -> const double* {
      if (cache) return &kmat[r * n];
      for (std::size_t k = 0; k < n; ++k) {
        buf[k] = kernel_value(X.row_ptr(r), X.row_ptr(k), X.cols());
      }
      return buf.data();
    };

    std::vector<double> alpha(n, 0.0);
    std::vector<double> g(n, -1.0);  // gradient of the minimized dual
    trace_.clear();
    iterations_ = 0;

    constexpr std::size_t kMaxIter = 2'000'000;
    while (true) {
      // Maximal violating pair.
      double m = -std::numeric_limits<double>::infinity();
      double M = std::numeric_limits<double>::infinity();
      std::size_t i = n, j = n;
      for (std::size_t t = 0; t < n; ++t) {
        const double v = -y[t] * g[t];
        const bool in_up = (y[t] > 0 && alpha[t] < c_) || (y[t] < 0 && alpha[t] > 0);
        const bool in_low = (y[t] > 0 && alpha[t] > 0) || (y[t] < 0 && alpha[t] < c_);
        if (in_up && v > m) {
          m = v;
          i = t;
        }
        if (in_low && v < M) {
          M = v;
          j = t;
        }
      }
      final_violation_ = m - M;
      if (m - M <= tol_ || i == n || j == n) break;
      if (++iterations_ > kMaxIter) {
        throw NumericError("SMO did not converge within " + std::to_string(kMaxIter) +
                           " iterations (violation " + std::to_string(m - M) + ")");
      }

      const double* ki = kernel_row(i, row_i);
      const double* kj = kernel_row(j, row_j);
      const double s = y[i] * y[j];
      const double eta = kdiag[i] + kdiag[j] - 2.0 * ki[j];

      double lo, hi;  // feasible interval for alpha[j]
      if (s < 0) {
        lo = std::max(0.0, alpha[j] - alpha[i]);
        hi = std::min(c_, c_ + alpha[j] - alpha[i]);
      } else {
        lo = std::max(0.0, alpha[i] + alpha[j] - c_);
        hi = std::min(c_, alpha[i] + alpha[j]);
      }

      // Objective change for alpha[j] += t (alpha[i] -= s*t):
      //   delta(t) = t*(g[j] - s*g[i]) + 0.5*eta*t^2
      const double lin = g[j] - s * g[i];
      double t_step;
      if (eta > 0) {
        t_step = std::clamp(alpha[j] - lin / eta, lo, hi) - alpha[j];
      } else {
        const double t_lo = lo - alpha[j], t_hi = hi - alpha[j];
        const double d_lo = t_lo * lin + 0.5 * eta * t_lo * t_lo;
        const double d_hi = t_hi * lin + 0.5 * eta * t_hi * t_hi;
        t_step = d_lo < d_hi ? t_lo : t_hi;
      }

      double aj = alpha[j] + t_step;
      double ai = alpha[i] - s * t_step;
      // Snap bound-adjacent values so the working-set membership stays clean.
      const double snap = 1e-12 * c_;
      if (aj < snap) aj = 0;
      if (aj > c_ - snap) aj = c_;
      if (ai < snap) ai = 0;
      if (ai > c_ - snap) ai = c_;
      const double dai = ai - alpha[i], daj = aj - alpha[j];
      alpha[i] = ai;
      alpha[j] = aj;

      for (std::size_t t = 0; t < n; ++t) {
        g[t] += y[t] * y[i] * ki[t] * dai + y[t] * y[j] * kj[t] * daj;
      }

      if (record_trace_) {
        double obj_min = 0;
        for (std::size_t t = 0; t < n; ++t) obj_min += alpha[t] * (g[t] - 1.0);
        trace_.push_back(-0.5 * obj_min);  // maximization form
      }
    }

    // Bias from free support vectors, else the violation midpoint.
    double free_sum = 0;
    std::size_t free_count = 0;
    for (std::size_t t = 0; t < n; ++t) {
      if (alpha[t] > 0 && alpha[t] < c_) {
        free_sum += -y[t] * g[t];
        ++free_count;
      }
    }
    if (free_count > 0) {
      b_ = free_sum / free_count;
    } else {
      double m = -std::numeric_limits<double>::infinity();
      double M = std::numeric_limits<double>::infinity();
      for (std::size_t t = 0; t < n; ++t) {
        const double v = -y[t] * g[t];
        const bool in_up = (y[t] > 0 && alpha[t] < c_) || (y[t] < 0 && alpha[t] > 0);
        const bool in_low = (y[t] > 0 && alpha[t] > 0) || (y[t] < 0 && alpha[t] < c_);
        if (in_up) m = std::max(m, v);
        if (in_low) M = std::min(M, v);
      }
      b_ = (m + M) / 2.0;
    }

    std::vector<std::size_t> sv_idx;
    for (std::size_t t = 0; t < n; ++t) {
      if (alpha[t] > 0) sv_idx.push_back(t);
    }
    sv_ = X.select_rows(sv_idx);
    coef_.resize(sv_idx.size());
    for (std::size_t s2 = 0; s2 < sv_idx.size(); ++s2) {
      coef_[s2] = alpha[sv_idx[s2]] * y[sv_idx[s2]];
    }
  }

 private:
  double kernel_value(const double* a, const double* b, std::size_t f) const {
    double dot = 0;
    switch (kernel_) {
      case SvmKernel::RBF: {
        double d2 = 0;
        for (std::size_t k = 0; k < f; ++k) {
          const double d = a[k] - b[k];
          d2 += d * d;
        }
        return std::exp(-gamma_ * d2);
      }
      case SvmKernel::LINEAR:
        for (std::size_t k = 0; k < f; ++k) dot += a[k] * b[k];
        return dot;
      case SvmKernel::SIGMOID:
        for (std::size_t k = 0; k < f; ++k) dot += a[k] * b[k];
        return std::tanh(gamma_ * dot + coef0_);
      case SvmKernel::POLYNOMIAL:
        for (std::size_t k = 0; k < f; ++k) dot += a[k] * b[k];
        return std::pow(gamma_ * dot + coef0_, static_cast<double>(degree_));
    }
    throw ConfigError("unknown SVM kernel");
  }

  SvmKernel kernel_;
  double c_;
  double gamma_;
  std::int64_t degree_;
  double coef0_;
  double tol_;

  Matrix sv_;
  std::vector<double> coef_;  // alpha_i * y_i per support vector
  double b_ = 0;

  bool record_trace_ = false;
  std::vector<double> trace_;
  std::size_t iterations_ = 0;
  double final_violation_ = 0;
};

}  // namespace fxlab
