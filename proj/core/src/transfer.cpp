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

#include "cstl/transfer.hpp"

#include <cmath>

#include "cstl/error.hpp"
#include "cstl/nelder_mead.hpp"
#include "cstl/parallel.hpp"
#include "cstl/seed.hpp"

namespace cstl {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

[[noreturn]] void invalid(const std::string& what) { throw Error(ErrorKind::kInvalidArgument, "transfer", what); }

// Joint normalization of log terms into an N x G matrix.
Eigen::MatrixXd normalize_joint(const Vector& logp, int n_classes, int components) {
  const double m = logp.maxCoeff();
  if (!std::isfinite(m)) {
    throw Error(ErrorKind::kNumeric, "transfer", "degenerate input: every component likelihood underflows");
  }
  const Eigen::ArrayXd e = (logp.array() - m).exp();
  const double total = e.sum();
  Eigen::MatrixXd out(n_classes, components);
  for (int i = 0; i < n_classes; ++i) {
    for (int j = 0; j < components; ++j) out(i, j) = e[i * components + j] / total;
  }
  return out;
}

}  // namespace

std::string_view to_string(Psi psi) { return psi == Psi::kExp ? "exp" : "identity_plus_one"; }

Psi parse_psi(std::string_view s) {
  if (s == "exp") return Psi::kExp;
  if (s == "identity_plus_one") return Psi::kIdentityPlusOne;
  invalid("unknown psi '" + std::string(s) + "' (expected exp or identity_plus_one)");
}

void TransferConfig::validate() const {
  if (!(norm_power >= 1.0)) invalid("norm_power must be >= 1");
  if (!(spread_tol > 0.0)) invalid("spread_tol must be > 0");
  if (max_eval_factor < 1) invalid("max_eval_factor must be >= 1");
  if (!(init_step_frac > 0.0)) invalid("init_step_frac must be > 0");
  if (!tau.centroid_match && !std::isfinite(tau.fixed)) invalid("fixed tau must be finite");
}

// ---------------------------------------------------------------------------

BankEvaluator::BankEvaluator(const ClassGmmBank& bank)
    : n_classes_(bank.num_classes()), components_(bank.components) {
  if (n_classes_ < 1 || components_ < 1) invalid("empty mixture bank");
  const auto k = bank.dims();
  const auto rows = static_cast<Eigen::Index>(n_classes_) * components_;
  means_.resize(rows, k);
  inv_var_.resize(rows, k);
  log_const_.resize(rows);
  Eigen::Index r = 0;
  for (const auto& comps : bank.per_class) {
    if (static_cast<int>(comps.size()) != components_) invalid("every class must have G components");
    for (const auto& c : comps) {
      means_.row(r) = c.mean.transpose();
      inv_var_.row(r) = c.var.cwiseInverse().transpose();
      log_const_[r] = std::log(c.weight) - 0.5 * (static_cast<double>(k) * kLog2Pi + c.var.array().log().sum());
      ++r;
    }
  }
}

void BankEvaluator::log_terms(const Eigen::Ref<const Vector>& f, Eigen::Ref<Vector> out) const {
  if (f.size() != means_.cols()) {
    invalid("dimension mismatch: feature has " + std::to_string(f.size()) + ", bank has " +
            std::to_string(means_.cols()));
  }
  for (Eigen::Index r = 0; r < means_.rows(); ++r) {
    double maha = 0.0;
    for (Eigen::Index d = 0; d < f.size(); ++d) {
      const double diff = f[d] - means_(r, d);
      maha += diff * diff * inv_var_(r, d);
    }
    out[r] = log_const_[r] - 0.5 * maha;
  }
}

Eigen::MatrixXd BankEvaluator::responsibilities(const Eigen::Ref<const Vector>& f,
                                                const Vector* class_log_offsets) const {
  Vector logp(means_.rows());
  log_terms(f, logp);
  if (class_log_offsets) {
    for (int i = 0; i < n_classes_; ++i) {
      for (int j = 0; j < components_; ++j) logp[i * components_ + j] += (*class_log_offsets)[i];
    }
  }
  return normalize_joint(logp, n_classes_, components_);
}

Vector cost_log_offsets(const CostMatrix& phi, int label, Psi psi) {
  if (label < 0 || label >= phi.size()) invalid("label " + std::to_string(label) + " outside the cost matrix");
  Vector out(phi.size());
  for (int i = 0; i < phi.size(); ++i) {
    const double cost = phi(i, label);
    out[i] = psi == Psi::kExp ? cost : std::log1p(cost);
  }
  return out.array() - out.minCoeff();
}

Eigen::MatrixXd responsibilities(const ClassGmmBank& bank, const Eigen::Ref<const Vector>& f) {
  return BankEvaluator(bank).responsibilities(f);
}

Eigen::MatrixXd weighted_responsibilities(const ClassGmmBank& bank, const Eigen::Ref<const Vector>& f, int label,
                                          const CostMatrix& phi, Psi psi) {
  if (phi.size() != bank.num_classes()) invalid("cost matrix size differs from the number of classes");
  const Vector offsets = cost_log_offsets(phi, label, psi);
  return BankEvaluator(bank).responsibilities(f, &offsets);
}

double transfer_objective(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double norm_power) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) invalid("responsibility matrix shapes differ");
  const Eigen::ArrayXXd diff = (a - b).array().abs();
  if (norm_power == 3.0) return (diff * diff * diff).sum();
  return diff.pow(norm_power).sum();
}

double embedding_scale(const Vector& u, int label, const TauMode& mode, const ClassGmmBank& src_bank,
                       const ClassGmmBank& tar_bank) {
  if (!mode.centroid_match) return mode.fixed;
  const double uu = u.squaredNorm();
  if (std::sqrt(uu) < 1e-12) return 0.0;
  return u.dot(tar_bank.class_mean(label) - src_bank.class_mean(label)) / uu;
}

Vector initial_embedding(const Vector& f, int label, const std::vector<Vector>& u_by_class, const TauMode& mode,
                         const ClassGmmBank& src_bank, const ClassGmmBank& tar_bank) {
  if (label < 0 || static_cast<std::size_t>(label) >= u_by_class.size()) {
    invalid("no displacement available for class " + std::to_string(label));
  }
  const Vector& u = u_by_class[static_cast<std::size_t>(label)];
  return f + embedding_scale(u, label, mode, src_bank, tar_bank) * u;
}

namespace {

FeatureTransfer transfer_one(const Vector& f, const Vector& start, int /*label*/, const BankEvaluator& src_eval,
                             const BankEvaluator& tar_eval, const Vector& offsets, const Vector& steps,
                             const TransferConfig& cfg) {
  const Eigen::MatrixXd f_src = src_eval.responsibilities(f);
  auto objective = [&](const Vector& g) {
    return transfer_objective(f_src, tar_eval.responsibilities(g, &offsets), cfg.norm_power);
  };
  SimplexOptions opts;
  opts.spread_tol = cfg.spread_tol;
  opts.max_evals = cfg.max_eval_factor * static_cast<int>(f.size());
  auto r = nelder_mead(objective, start, steps, opts);
  return {std::move(r.x), r.start_value, r.value, r.evals, std::move(r.best_trace)};
}

Vector simplex_steps(const ClassGmmBank& tar_bank, int label, double frac) {
  return frac * tar_bank.class_variance(label).cwiseSqrt().cwiseMax(1e-12);
}

}  // namespace

FeatureTransfer transfer_feature(const Vector& f, const Vector& start, int label, const ClassGmmBank& src_bank,
                                 const ClassGmmBank& tar_bank, const CostMatrix& phi, const TransferConfig& cfg) {
  cfg.validate();
  if (src_bank.dims() != tar_bank.dims()) invalid("source and target banks differ in dimension");
  if (phi.size() != tar_bank.num_classes() || src_bank.num_classes() != tar_bank.num_classes()) {
    invalid("banks and cost matrix disagree on the number of classes");
  }
  const BankEvaluator src_eval(src_bank), tar_eval(tar_bank);
  return transfer_one(f, start, label, src_eval, tar_eval, cost_log_offsets(phi, label, cfg.psi),
                      simplex_steps(tar_bank, label, cfg.init_step_frac), cfg);
}

TransferBanks fit_transfer_banks(const FeatureSet& src, const FeatureSet& tar, const GmmOptions& gmm,
                                 std::uint64_t seed) {
  if (src.class_names != tar.class_names) invalid("source and target class spaces differ");
  return {fit_class_gmms(src, gmm, derive_seed(seed, seed_tag::kSourceGmm), DomainTag::kSource),
          fit_class_gmms(tar, gmm, derive_seed(seed, seed_tag::kTargetGmm), DomainTag::kTarget)};
}

TransferResult transfer_with_banks(const FeatureSet& src, const TransferBanks& banks, const CostMatrix& phi,
                                   const TransferConfig& cfg, unsigned threads) {
  cfg.validate();
  phi.validate();
  if (src.size() == 0) invalid("source feature set is empty");
  const int N = src.num_classes();
  if (banks.source.num_classes() != N || banks.target.num_classes() != N || phi.size() != N) {
    invalid("source data, banks and cost matrix disagree on the number of classes");
  }
  if (banks.source.dims() != static_cast<Eigen::Index>(src.dims()) || banks.target.dims() != banks.source.dims()) {
    invalid("banks were fitted in a different space than the source features");
  }

  TransferResult result;
  result.displacement.resize(static_cast<std::size_t>(N));
  result.tau.assign(static_cast<std::size_t>(N), 0.0);
  std::vector<Vector> offsets(static_cast<std::size_t>(N));
  std::vector<Vector> steps(static_cast<std::size_t>(N));
  for (int c = 0; c < N; ++c) {
    const auto rows = src.rows_of_class(c);
    if (rows.empty()) invalid("class '" + src.class_names[static_cast<std::size_t>(c)] + "' has no source samples");
    FeatureMatrix samples(static_cast<Eigen::Index>(rows.size()), src.features.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      samples.row(static_cast<Eigen::Index>(i)) = src.features.row(static_cast<Eigen::Index>(rows[i]));
    }
    const auto cu = static_cast<std::size_t>(c);
    result.displacement[cu] = fisher_displacement(banks.target, c, samples);
    result.tau[cu] = embedding_scale(result.displacement[cu], c, cfg.tau, banks.source, banks.target);
    offsets[cu] = cost_log_offsets(phi, c, cfg.psi);
    steps[cu] = simplex_steps(banks.target, c, cfg.init_step_frac);
  }

  const BankEvaluator src_eval(banks.source), tar_eval(banks.target);
  const auto S = src.size();
  FeatureMatrix moved(src.features.rows(), src.features.cols());
  result.objective_before.resize(S);
  result.objective_after.resize(S);
  result.eval_counts.resize(S);

  parallel_for(S, threads, [&](std::size_t i) {
    const auto row = static_cast<Eigen::Index>(i);
    const auto label = static_cast<std::size_t>(src.labels[i]);
    const Vector f = src.features.row(row).transpose();
    const Vector start = f + result.tau[label] * result.displacement[label];
    auto t = transfer_one(f, start, src.labels[i], src_eval, tar_eval, offsets[label], steps[label], cfg);
    moved.row(row) = t.transferred.transpose();
    result.objective_before[i] = t.before;
    result.objective_after[i] = t.after;
    result.eval_counts[i] = t.evals;
  });

  result.transferred = src.with_features(std::move(moved));
  return result;
}

TransferResult transfer_all(const FeatureSet& src, const FeatureSet& tar, const CostMatrix& phi,
                            const TransferConfig& cfg, const GmmOptions& gmm, std::uint64_t seed, unsigned threads) {
  if (src.size() == 0) invalid("source feature set is empty");
  const auto counts = tar.class_counts();
  for (std::size_t c = 0; c < counts.size(); ++c) {
    if (counts[c] == 0) invalid("class '" + tar.class_names[c] + "' has no target samples");
  }
  return transfer_with_banks(src, fit_transfer_banks(src, tar, gmm, seed), phi, cfg, threads);
}

double mean_own_class_mass(const ClassGmmBank& bank, const FeatureSet& fs) {
  const BankEvaluator eval(bank);
  double total = 0.0;
  for (std::size_t i = 0; i < fs.size(); ++i) {
    const Eigen::MatrixXd F = eval.responsibilities(fs.features.row(static_cast<Eigen::Index>(i)).transpose());
    total += F.row(fs.labels[i]).sum();
  }
  return total / static_cast<double>(fs.size());
}

}  // namespace cstl
