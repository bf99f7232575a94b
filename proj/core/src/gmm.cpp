// Copyright 2026 The cstl Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cstl/gmm.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "cstl/error.hpp"
#include "cstl/seed.hpp"

namespace cstl {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;  // ln(2 pi)

[[noreturn]] void invalid(const std::string& what) { throw Error(ErrorKind::kInvalidArgument, "gmm", what); }

double log_sum_exp(const Eigen::Ref<const Vector>& v) {
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((v.array() - m).exp().sum());
}

// k-means++ seeding. Draws are mapped through cumulative weights so that
// repeating every sample in place leaves the chosen centers unchanged.
std::vector<Vector> seed_centers(const FeatureMatrix& x, int count, Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const auto n = x.rows();
  std::vector<Vector> centers;
  auto first = static_cast<Eigen::Index>(unif(rng) * static_cast<double>(n));
  centers.push_back(x.row(std::min(first, n - 1)).transpose());

  Vector dist2 = (x.rowwise() - centers.back().transpose()).rowwise().squaredNorm();
  while (static_cast<int>(centers.size()) < count) {
    const double total = dist2.sum();
    const double u = unif(rng);
    Eigen::Index pick = n - 1;
    if (total > 0.0) {
      const double threshold = u * total;
      double cum = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        cum += dist2[i];
        if (cum > threshold) {
          pick = i;
          break;
        }
      }
    } else {
      pick = std::min(static_cast<Eigen::Index>(u * static_cast<double>(n)), n - 1);
    }
    centers.push_back(x.row(pick).transpose());
    dist2 = dist2.cwiseMin((x.rowwise() - centers.back().transpose()).rowwise().squaredNorm());
  }
  return centers;
}

}  // namespace

std::string_view to_string(DomainTag tag) { return tag == DomainTag::kSource ? "source" : "target"; }

Vector ClassGmmBank::class_mean(int c) const {
  const auto& comps = per_class.at(static_cast<std::size_t>(c));
  Vector m = Vector::Zero(comps.front().mean.size());
  for (const auto& g : comps) m += g.weight * g.mean;
  return m;
}

Vector ClassGmmBank::class_variance(int c) const {
  const auto& comps = per_class.at(static_cast<std::size_t>(c));
  const Vector m = class_mean(c);
  Vector second = Vector::Zero(m.size());
  for (const auto& g : comps) second += g.weight * (g.var + g.mean.cwiseProduct(g.mean));
  return (second - m.cwiseProduct(m)).cwiseMax(0.0);
}

double component_loglik(const GaussianComponent& c, const Eigen::Ref<const Vector>& f) {
  if (f.size() != c.mean.size()) {
    invalid("dimension mismatch: sample has " + std::to_string(f.size()) + ", component has " +
            std::to_string(c.mean.size()));
  }
  double acc = 0.0;
  for (Eigen::Index d = 0; d < f.size(); ++d) {
    const double diff = f[d] - c.mean[d];
    acc += kLog2Pi + std::log(c.var[d]) + diff * diff / c.var[d];
  }
  return -0.5 * acc;
}

Vector component_posteriors(std::span<const GaussianComponent> comps, const Eigen::Ref<const Vector>& f) {
  Vector logp(static_cast<Eigen::Index>(comps.size()));
  for (std::size_t j = 0; j < comps.size(); ++j) {
    logp[static_cast<Eigen::Index>(j)] = std::log(comps[j].weight) + component_loglik(comps[j], f);
  }
  const double norm = log_sum_exp(logp);
  if (!std::isfinite(norm)) throw Error(ErrorKind::kNumeric, "gmm", "all component likelihoods vanish");
  return (logp.array() - norm).exp().matrix();
}

std::vector<GaussianComponent> fit_gmm(const FeatureMatrix& x, const GmmOptions& opts, std::uint64_t seed,
                                       EmTrace* trace) {
  const int G = opts.components;
  if (G < 1) invalid("components per class must be >= 1");
  if (x.rows() < G) {
    invalid("only " + std::to_string(x.rows()) + " samples for " + std::to_string(G) + " components");
  }
  if (!(opts.var_floor > 0.0)) invalid("var_floor must be > 0");

  const auto n = x.rows();
  const auto k = x.cols();
  Rng rng(seed);

  const Vector global_mean = x.colwise().mean().transpose();
  const Vector global_var =
      ((x.rowwise() - global_mean.transpose()).array().square().colwise().sum() / static_cast<double>(n))
          .matrix()
          .transpose()
          .cwiseMax(opts.var_floor);

  std::vector<GaussianComponent> comps;
  for (auto& c : seed_centers(x, G, rng)) comps.push_back({std::move(c), global_var, 1.0 / G});

  EmTrace local;
  EmTrace& tr = trace ? *trace : local;
  tr = EmTrace{};

  Eigen::MatrixXd logp(n, G);
  Eigen::MatrixXd resp(n, G);
  double previous = -std::numeric_limits<double>::infinity();

  for (int iter = 0; iter < opts.max_iter; ++iter) {
    // E-step.
    for (int j = 0; j < G; ++j) {
      const auto& c = comps[static_cast<std::size_t>(j)];
      const double log_w = std::log(c.weight);
      const double log_norm = -0.5 * (static_cast<double>(k) * kLog2Pi + c.var.array().log().sum());
      const Eigen::ArrayXd inv_var = c.var.array().inverse();
      for (Eigen::Index i = 0; i < n; ++i) {
        const double maha = ((x.row(i).transpose().array() - c.mean.array()).square() * inv_var).sum();
        logp(i, j) = log_w + log_norm - 0.5 * maha;
      }
    }
    double loglik = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double lse = log_sum_exp(logp.row(i).transpose());
      loglik += lse;
      resp.row(i) = (logp.row(i).array() - lse).exp();
    }
    if (!std::isfinite(loglik)) throw Error(ErrorKind::kNumeric, "gmm", "non-finite log-likelihood");
    tr.loglik.push_back(loglik);
    tr.iterations = iter + 1;
    if (iter > 0 && (loglik - previous) / static_cast<double>(n) < opts.tol) break;
    previous = loglik;

    // M-step.
    const Vector nk = resp.colwise().sum().transpose();
    bool reseeded = false;
    for (int j = 0; j < G; ++j) {
      auto& c = comps[static_cast<std::size_t>(j)];
      if (nk[j] <= 1e-10 * static_cast<double>(n)) {
        if (++tr.reseeds > 3) throw Error(ErrorKind::kNumeric, "gmm", "component collapsed after 3 reseeds");
        // Reseed from the sample farthest from every current mean.
        Vector best = Vector::Constant(n, std::numeric_limits<double>::infinity());
        for (const auto& other : comps) {
          best = best.cwiseMin((x.rowwise() - other.mean.transpose()).rowwise().squaredNorm());
        }
        Eigen::Index far;
        best.maxCoeff(&far);
        c.mean = x.row(far).transpose();
        c.var = global_var;
        c.weight = 1.0 / static_cast<double>(n);
        reseeded = true;
        continue;
      }
      c.weight = nk[j] / static_cast<double>(n);
      c.mean = (resp.col(j).transpose() * x).transpose() / nk[j];
      Vector var = Vector::Zero(k);
      for (Eigen::Index i = 0; i < n; ++i) {
        var += resp(i, j) * (x.row(i).transpose() - c.mean).array().square().matrix();
      }
      c.var = (var / nk[j]).cwiseMax(opts.var_floor);
    }
    if (reseeded) {
      double total = 0.0;
      for (const auto& c : comps) total += c.weight;
      for (auto& c : comps) c.weight /= total;
      tr.loglik.clear();
      previous = -std::numeric_limits<double>::infinity();
    }
  }
  return comps;
}

ClassGmmBank fit_class_gmms(const FeatureSet& fs, const GmmOptions& opts, std::uint64_t seed, DomainTag domain,
                            std::vector<EmTrace>* traces) {
  ClassGmmBank bank;
  bank.domain = domain;
  bank.components = opts.components;
  if (traces) traces->assign(static_cast<std::size_t>(fs.num_classes()), EmTrace{});
  for (int c = 0; c < fs.num_classes(); ++c) {
    const auto rows = fs.rows_of_class(c);
    if (rows.size() < static_cast<std::size_t>(opts.components)) {
      invalid("class '" + fs.class_names[static_cast<std::size_t>(c)] + "' has " + std::to_string(rows.size()) +
              " samples, fewer than G = " + std::to_string(opts.components));
    }
    FeatureMatrix samples(static_cast<Eigen::Index>(rows.size()), fs.features.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      samples.row(static_cast<Eigen::Index>(i)) = fs.features.row(static_cast<Eigen::Index>(rows[i]));
    }
    bank.per_class.push_back(fit_gmm(samples, opts, derive_seed(seed, static_cast<std::uint64_t>(c)),
                                     traces ? &(*traces)[static_cast<std::size_t>(c)] : nullptr));
  }
  return bank;
}

Vector fisher_displacement(const ClassGmmBank& target_bank, int c, const FeatureMatrix& source_class_samples) {
  if (c < 0 || c >= target_bank.num_classes()) invalid("class " + std::to_string(c) + " is absent from the bank");
  if (source_class_samples.rows() < 1) invalid("fisher_displacement needs at least one source sample");
  const auto& comps = target_bank.per_class[static_cast<std::size_t>(c)];
  const auto k = comps.front().mean.size();
  if (source_class_samples.cols() != k) invalid("sample width does not match the bank");

  const double S = static_cast<double>(source_class_samples.rows());
  Vector u = Vector::Zero(k);
  std::vector<Vector> sums(comps.size(), Vector::Zero(k));
  for (Eigen::Index i = 0; i < source_class_samples.rows(); ++i) {
    const Vector f = source_class_samples.row(i).transpose();
    const Vector gamma = component_posteriors(comps, f);
    for (std::size_t j = 0; j < comps.size(); ++j) {
      sums[j] += gamma[static_cast<Eigen::Index>(j)] *
                 ((f - comps[j].mean).array() / comps[j].var.array().sqrt()).matrix();
    }
  }
  for (std::size_t j = 0; j < comps.size(); ++j) u -= sums[j] / (S * std::sqrt(comps[j].weight));
  return u;
}

}  // namespace cstl
