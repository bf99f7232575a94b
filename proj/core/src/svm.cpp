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

#include "cstl/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cstl/error.hpp"
#include "cstl/parallel.hpp"
#include "cstl/seed.hpp"

namespace cstl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTau = 1e-12;

[[noreturn]] void invalid(const std::string& what) { throw Error(ErrorKind::kInvalidArgument, "classify", what); }

struct DualSolution {
  Vector alpha;
  double rho = 0.0;
  long long iterations = 0;
  double gap = 0.0;
};

// SMO over the sub-problem `rows` of a precomputed Gram matrix. Follows the
// LIBSVM solver without shrinking.
DualSolution solve_smo(const Eigen::MatrixXd& gram, std::span<const std::size_t> rows, std::span<const int> y,
                       std::span<const double> cap, const SmoOptions& opts) {
  const auto n = static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXd Q(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      Q(i, j) = y[static_cast<std::size_t>(i)] * y[static_cast<std::size_t>(j)] *
                gram(static_cast<Eigen::Index>(rows[static_cast<std::size_t>(i)]),
                     static_cast<Eigen::Index>(rows[static_cast<std::size_t>(j)]));
    }
  }
  const Vector QD = Q.diagonal();

  DualSolution sol;
  sol.alpha = Vector::Zero(n);
  Vector G = Vector::Constant(n, -1.0);
  auto& alpha = sol.alpha;
  auto C = [&](Eigen::Index t) { return cap[static_cast<std::size_t>(t)]; };
  auto Y = [&](Eigen::Index t) { return y[static_cast<std::size_t>(t)]; };
  auto upper = [&](Eigen::Index t) { return alpha[t] >= C(t); };
  auto lower = [&](Eigen::Index t) { return alpha[t] <= 0.0; };

  const long long max_iter =
      opts.max_iter > 0 ? opts.max_iter : std::max<long long>(10000000LL, 100LL * static_cast<long long>(n));

  while (true) {
    // Working set selection (second order).
    double gmax = -kInf, gmax2 = -kInf, obj_min = kInf;
    Eigen::Index i = -1, j = -1;
    for (Eigen::Index t = 0; t < n; ++t) {
      if (Y(t) == 1) {
        if (!upper(t) && -G[t] >= gmax) {
          gmax = -G[t];
          i = t;
        }
      } else if (!lower(t) && G[t] >= gmax) {
        gmax = G[t];
        i = t;
      }
    }
    for (Eigen::Index t = 0; t < n; ++t) {
      if (Y(t) == 1) {
        if (!lower(t)) {
          const double grad_diff = gmax + G[t];
          gmax2 = std::max(gmax2, G[t]);
          if (i >= 0 && grad_diff > 0.0) {
            const double quad = QD[i] + QD[t] - 2.0 * Y(i) * Q(i, t);
            const double obj = -(grad_diff * grad_diff) / (quad > 0.0 ? quad : kTau);
            if (obj <= obj_min) {
              j = t;
              obj_min = obj;
            }
          }
        }
      } else if (!upper(t)) {
        const double grad_diff = gmax - G[t];
        gmax2 = std::max(gmax2, -G[t]);
        if (i >= 0 && grad_diff > 0.0) {
          const double quad = QD[i] + QD[t] + 2.0 * Y(i) * Q(i, t);
          const double obj = -(grad_diff * grad_diff) / (quad > 0.0 ? quad : kTau);
          if (obj <= obj_min) {
            j = t;
            obj_min = obj;
          }
        }
      }
    }
    sol.gap = gmax + gmax2;
    if (sol.gap < opts.tol || j < 0 || i < 0) break;
    if (++sol.iterations > max_iter) {
      throw Error(ErrorKind::kNumeric, "classify",
                  "SMO did not converge within " + std::to_string(max_iter) + " iterations (gap " +
                      std::to_string(sol.gap) + ")");
    }

    const double old_i = alpha[i], old_j = alpha[j];
    const double Ci = C(i), Cj = C(j);
    if (Y(i) != Y(j)) {
      double quad = QD[i] + QD[j] + 2.0 * Q(i, j);
      if (quad <= 0.0) quad = kTau;
      const double delta = (-G[i] - G[j]) / quad;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0.0) {
        if (alpha[j] < 0.0) {
          alpha[j] = 0.0;
          alpha[i] = diff;
        }
      } else if (alpha[i] < 0.0) {
        alpha[i] = 0.0;
        alpha[j] = -diff;
      }
      if (diff > Ci - Cj) {
        if (alpha[i] > Ci) {
          alpha[i] = Ci;
          alpha[j] = Ci - diff;
        }
      } else if (alpha[j] > Cj) {
        alpha[j] = Cj;
        alpha[i] = Cj + diff;
      }
    } else {
      double quad = QD[i] + QD[j] - 2.0 * Q(i, j);
      if (quad <= 0.0) quad = kTau;
      const double delta = (G[i] - G[j]) / quad;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > Ci) {
        if (alpha[i] > Ci) {
          alpha[i] = Ci;
          alpha[j] = sum - Ci;
        }
      } else if (alpha[j] < 0.0) {
        alpha[j] = 0.0;
        alpha[i] = sum;
      }
      if (sum > Cj) {
        if (alpha[j] > Cj) {
          alpha[j] = Cj;
          alpha[i] = sum - Cj;
        }
      } else if (alpha[i] < 0.0) {
        alpha[i] = 0.0;
        alpha[j] = sum;
      }
    }
    const double di = alpha[i] - old_i, dj = alpha[j] - old_j;
    G.noalias() += di * Q.col(i) + dj * Q.col(j);
  }

  // Bias from free vectors, or the midpoint of the feasible interval.
  double ub = kInf, lb = -kInf, sum_free = 0.0;
  int free_count = 0;
  for (Eigen::Index t = 0; t < n; ++t) {
    const double yg = Y(t) * G[t];
    if (upper(t)) {
      if (Y(t) == -1) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else if (lower(t)) {
      if (Y(t) == 1) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else {
      ++free_count;
      sum_free += yg;
    }
  }
  sol.rho = free_count > 0 ? sum_free / free_count : (ub + lb) / 2.0;
  return sol;
}

BinarySvm train_on_gram(const Eigen::MatrixXd& gram, const FeatureMatrix& features,
                        std::span<const std::size_t> rows, std::span<const int> labels,
                        std::span<const double> weights, const KernelParams& params, const SmoOptions& opts,
                        SmoStats* stats) {
  bool has_pos = false, has_neg = false;
  std::vector<double> cap(rows.size());
  for (std::size_t t = 0; t < rows.size(); ++t) {
    if (labels[t] != 1 && labels[t] != -1) invalid("binary labels must be +1 or -1");
    if (!(weights[t] > 0.0)) invalid("pair problem contains a non-positive weight");
    (labels[t] == 1 ? has_pos : has_neg) = true;
    cap[t] = params.c * weights[t];
  }
  if (!has_pos || !has_neg) invalid("binary training needs both classes among positive-weight examples");

  const auto sol = solve_smo(gram, rows, labels, cap, opts);
  if (stats) *stats = {sol.iterations, sol.gap};

  BinarySvm svm;
  svm.params = params;
  svm.bias = -sol.rho;
  std::vector<Eigen::Index> sv;
  for (Eigen::Index t = 0; t < sol.alpha.size(); ++t) {
    if (sol.alpha[t] > 0.0) sv.push_back(t);
  }
  svm.support_vectors.resize(static_cast<Eigen::Index>(sv.size()), features.cols());
  svm.coef.resize(static_cast<Eigen::Index>(sv.size()));
  for (std::size_t s = 0; s < sv.size(); ++s) {
    const auto t = static_cast<std::size_t>(sv[s]);
    svm.support_vectors.row(static_cast<Eigen::Index>(s)) = features.row(static_cast<Eigen::Index>(rows[t]));
    svm.coef[static_cast<Eigen::Index>(s)] = sol.alpha[sv[s]] * labels[t];
    svm.sv_indices.push_back(static_cast<int>(rows[t]));
  }
  return svm;
}

}  // namespace

void KernelParams::validate() const {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) invalid("gamma must be positive and finite");
  if (!(c > 0.0) || !std::isfinite(c)) invalid("c must be positive and finite");
}

double BinarySvm::decision(const Eigen::Ref<const Vector>& x) const {
  double acc = bias;
  for (Eigen::Index s = 0; s < support_vectors.rows(); ++s) {
    acc += coef[s] * std::exp(-params.gamma * (support_vectors.row(s).transpose() - x).squaredNorm());
  }
  return acc;
}

Eigen::MatrixXd rbf_gram(const FeatureMatrix& a, const FeatureMatrix& b, double gamma) {
  const Vector an = a.rowwise().squaredNorm();
  const Vector bn = b.rowwise().squaredNorm();
  Eigen::MatrixXd d2 = -2.0 * (a * b.transpose());
  d2.colwise() += an;
  d2.rowwise() += bn.transpose();
  return (-gamma * d2.cwiseMax(0.0)).array().exp().matrix();
}

BinarySvm train_binary(const FeatureMatrix& features, std::span<const int> labels, std::span<const double> weights,
                       const KernelParams& params, const SmoOptions& opts, SmoStats* stats) {
  params.validate();
  const auto n = static_cast<std::size_t>(features.rows());
  if (labels.size() != n || weights.size() != n) invalid("labels and weights must match the feature rows");
  std::vector<std::size_t> rows;
  std::vector<int> y;
  std::vector<double> w;
  for (std::size_t t = 0; t < n; ++t) {
    if (weights[t] < 0.0 || !std::isfinite(weights[t])) invalid("weights must be finite and >= 0");
    if (weights[t] > 0.0) {
      rows.push_back(t);
      y.push_back(labels[t]);
      w.push_back(weights[t]);
    }
  }
  const Eigen::MatrixXd gram = rbf_gram(features, features, params.gamma);
  return train_on_gram(gram, features, rows, y, w, params, opts, stats);
}

double kkt_violation(const BinarySvm& svm, const FeatureMatrix& features, std::span<const int> labels,
                     std::span<const double> weights) {
  const auto n = static_cast<std::size_t>(features.rows());
  Vector alpha = Vector::Zero(static_cast<Eigen::Index>(n));
  for (std::size_t s = 0; s < svm.sv_indices.size(); ++s) {
    const auto r = static_cast<std::size_t>(svm.sv_indices[s]);
    alpha[static_cast<Eigen::Index>(r)] = svm.coef[static_cast<Eigen::Index>(s)] * labels[r];
  }
  double gmax = -kInf, gmin = kInf;
  for (std::size_t t = 0; t < n; ++t) {
    if (!(weights[t] > 0.0)) continue;
    const double cap = svm.params.c * weights[t];
    const double a = alpha[static_cast<Eigen::Index>(t)];
    const Vector x = features.row(static_cast<Eigen::Index>(t)).transpose();
    // Gradient of the dual: y_t (f(x_t) - b) - 1.
    const double grad = labels[t] * (svm.decision(x) - svm.bias) - 1.0;
    const double v = -labels[t] * grad;
    const bool up = (labels[t] == 1 && a < cap) || (labels[t] == -1 && a > 0.0);
    const bool low = (labels[t] == 1 && a > 0.0) || (labels[t] == -1 && a < cap);
    if (up) gmax = std::max(gmax, v);
    if (low) gmin = std::min(gmin, v);
  }
  return gmax - gmin;
}

std::string_view to_string(MulticlassMode mode) { return mode == MulticlassMode::kOvo ? "ovo" : "csovo"; }

MulticlassMode parse_mode(std::string_view s) {
  if (s == "ovo") return MulticlassMode::kOvo;
  if (s == "csovo") return MulticlassMode::kCsovo;
  invalid("unknown multiclass mode '" + std::string(s) + "'");
}

PairProblem pair_problem(std::span<const int> labels, int u, int v, MulticlassMode mode, const CostMatrix* phi) {
  PairProblem p;
  for (std::size_t t = 0; t < labels.size(); ++t) {
    const int y = labels[t];
    if (mode == MulticlassMode::kOvo) {
      if (y == u || y == v) {
        p.rows.push_back(t);
        p.labels.push_back(y == u ? 1 : -1);
        p.weights.push_back(1.0);
      }
    } else {
      const double cu = (*phi)(y, u), cv = (*phi)(y, v);
      const double w = std::abs(cu - cv);
      if (w > 0.0) {
        p.rows.push_back(t);
        p.labels.push_back(cu < cv ? 1 : -1);
        p.weights.push_back(w);
      }
    }
  }
  return p;
}

namespace {

bool both_sides(const PairProblem& p) {
  const bool pos = std::find(p.labels.begin(), p.labels.end(), 1) != p.labels.end();
  const bool neg = std::find(p.labels.begin(), p.labels.end(), -1) != p.labels.end();
  return pos && neg;
}

// Trains on the rows `subset` of `fs`, with `gram` covering all rows of `fs`.
MulticlassModel train_multiclass_on(const FeatureSet& fs, std::span<const std::size_t> subset,
                                    const Eigen::MatrixXd& gram, MulticlassMode mode,
                                    const std::optional<CostMatrix>& phi, const KernelParams& params,
                                    unsigned threads) {
  const int N = fs.num_classes();
  if (N < 2) invalid("at least two classes are required");
  if (mode == MulticlassMode::kCsovo) {
    if (!phi) invalid("csovo mode requires a cost matrix");
    if (phi->size() != N) invalid("cost matrix size differs from the number of classes");
  }

  std::vector<int> labels(subset.size());
  for (std::size_t t = 0; t < subset.size(); ++t) labels[t] = fs.labels[subset[t]];

  std::vector<std::pair<int, int>> pairs;
  std::vector<PairProblem> problems;
  for (int u = 0; u < N; ++u) {
    for (int v = u + 1; v < N; ++v) {
      auto p = pair_problem(labels, u, v, mode, phi ? &*phi : nullptr);
      if (!both_sides(p)) continue;
      for (auto& r : p.rows) r = subset[r];
      pairs.emplace_back(u, v);
      problems.push_back(std::move(p));
    }
  }
  if (problems.empty()) invalid("no trainable pairs");

  MulticlassModel model;
  model.mode = mode;
  model.params = params;
  model.class_names = fs.class_names;
  if (mode == MulticlassMode::kCsovo) model.phi = phi;
  model.pairs.resize(problems.size());
  parallel_for(problems.size(), threads, [&](std::size_t i) {
    const auto& p = problems[i];
    model.pairs[i] = {pairs[i].first, pairs[i].second,
                      train_on_gram(gram, fs.features, p.rows, p.labels, p.weights, params, SmoOptions{}, nullptr)};
  });
  return model;
}

}  // namespace

MulticlassModel train_multiclass(const FeatureSet& fs, MulticlassMode mode, const std::optional<CostMatrix>& phi,
                                 const KernelParams& params, unsigned threads) {
  params.validate();
  fs.validate();
  std::vector<std::size_t> all(fs.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  const Eigen::MatrixXd gram = rbf_gram(fs.features, fs.features, params.gamma);
  auto model = train_multiclass_on(fs, all, gram, mode, phi, params, threads);
  return model;
}

int predict(const MulticlassModel& model, const Eigen::Ref<const Vector>& f) {
  if (model.pairs.empty()) invalid("model has no pairwise machines");
  if (f.size() != model.pairs.front().svm.support_vectors.cols()) invalid("feature dimension does not match model");
  std::vector<int> votes(static_cast<std::size_t>(model.num_classes()), 0);
  for (const auto& p : model.pairs) ++votes[static_cast<std::size_t>(p.svm.decision(f) > 0.0 ? p.u : p.v)];
  return static_cast<int>(std::max_element(votes.begin(), votes.end()) - votes.begin());
}

std::vector<int> predict_all(const MulticlassModel& model, const FeatureMatrix& features) {
  std::vector<int> out(static_cast<std::size_t>(features.rows()));
  for (Eigen::Index i = 0; i < features.rows(); ++i) out[static_cast<std::size_t>(i)] = predict(model, features.row(i).transpose());
  return out;
}

ParamGrid ParamGrid::defaults() {
  ParamGrid g;
  for (int e = -7; e <= 3; ++e) g.gamma.push_back(std::ldexp(1.0, e));
  for (int e = -3; e <= 7; ++e) g.c.push_back(std::ldexp(1.0, e));
  return g;
}

GridSearchResult grid_search_detailed(const FeatureSet& fs, const ParamGrid& grid, int folds, std::uint64_t seed,
                                      MulticlassMode mode, const std::optional<CostMatrix>& phi, unsigned threads) {
  if (grid.gamma.empty() || grid.c.empty()) invalid("parameter grid is empty");
  if (folds < 2) invalid("at least 2 folds are required");
  fs.validate();
  const auto fold_of = group_folds(fs.groups, folds, seed);

  std::vector<std::vector<std::size_t>> train_rows(static_cast<std::size_t>(folds)), test_rows(static_cast<std::size_t>(folds));
  for (std::size_t i = 0; i < fs.size(); ++i) {
    for (int f = 0; f < folds; ++f) (fold_of[i] == f ? test_rows : train_rows)[static_cast<std::size_t>(f)].push_back(i);
  }

  GridSearchResult result;
  for (double g : grid.gamma) {
    for (double c : grid.c) result.cells.push_back({{g, c}, 0.0, 0});
  }
  for (const auto& cell : result.cells) cell.params.validate();

  // One Gram matrix per gamma, shared by every c and fold.
  for (double gamma : grid.gamma) {
    const Eigen::MatrixXd gram = rbf_gram(fs.features, fs.features, gamma);
    std::vector<std::size_t> cell_ids;
    for (std::size_t i = 0; i < result.cells.size(); ++i) {
      if (result.cells[i].params.gamma == gamma) cell_ids.push_back(i);
    }
    const std::size_t jobs = cell_ids.size() * static_cast<std::size_t>(folds);
    std::vector<double> fold_score(jobs, 0.0);
    std::vector<char> fold_failed(jobs, 0);
    parallel_for(jobs, threads, [&](std::size_t job) {
      const auto& cell = result.cells[cell_ids[job / static_cast<std::size_t>(folds)]];
      const auto f = job % static_cast<std::size_t>(folds);
      try {
        const auto model = train_multiclass_on(fs, train_rows[f], gram, mode, phi, cell.params, 1);
        std::size_t good = 0;
        for (auto r : test_rows[f]) {
          const int pred = predict(model, fs.features.row(static_cast<Eigen::Index>(r)).transpose());
          const int truth = fs.labels[r];
          good += phi ? ((*phi)(truth, pred) == 0.0) : (pred == truth);
        }
        fold_score[job] = static_cast<double>(good) / static_cast<double>(test_rows[f].size());
      } catch (const Error&) {
        fold_failed[job] = 1;
      }
    });
    for (std::size_t k = 0; k < cell_ids.size(); ++k) {
      auto& cell = result.cells[cell_ids[k]];
      double total = 0.0;
      for (std::size_t f = 0; f < static_cast<std::size_t>(folds); ++f) {
        total += fold_score[k * static_cast<std::size_t>(folds) + f];
        cell.failed_folds += fold_failed[k * static_cast<std::size_t>(folds) + f];
      }
      cell.score = total / folds;
    }
  }

  const GridCell* best = nullptr;
  for (const auto& cell : result.cells) {
    if (cell.failed_folds == folds) {
      invalid("grid cell gamma=" + std::to_string(cell.params.gamma) + " c=" + std::to_string(cell.params.c) +
              " failed to train on every fold");
    }
    if (!best || cell.score > best->score ||
        (cell.score == best->score &&
         (cell.params.c < best->params.c || (cell.params.c == best->params.c && cell.params.gamma < best->params.gamma)))) {
      best = &cell;
    }
  }
  result.best = best->params;
  return result;
}

KernelParams grid_search(const FeatureSet& fs, const ParamGrid& grid, int folds, std::uint64_t seed,
                         MulticlassMode mode, const std::optional<CostMatrix>& phi, unsigned threads) {
  return grid_search_detailed(fs, grid, folds, seed, mode, phi, threads).best;
}

}  // namespace cstl
