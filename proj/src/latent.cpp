#include "dexp/latent.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "dexp/error.hpp"
#include "dexp/numerics.hpp"
#include "dexp/parallel.hpp"

namespace dexp {

Tensor LatentBasis::column(std::size_t j) const {
  const std::size_t d = dim();
  Tensor out({d});
  for (std::size_t i = 0; i < d; ++i) out[i] = v(i, j);
  return out;
}

LatentBasis factorize(const Tensor& w1, const Tensor& mean) {
  if (w1.rank() != 2) throw std::invalid_argument("factorize: w1 is a matrix");
  const std::size_t d = w1.cols();
  if (mean.size() != d) throw std::invalid_argument("factorize: mean length");

  const SvdResult decomp = svd(w1);
  const std::size_t r = decomp.s.size();

  LatentBasis basis;
  basis.mean = mean;
  basis.s = Tensor({d});
  basis.v = Tensor({d, d});
  for (std::size_t j = 0; j < r; ++j) {
    basis.s[j] = decomp.s[j];
    for (std::size_t i = 0; i < d; ++i) basis.v(i, j) = decomp.vt(j, i);
  }
  if (r < d) {
    // Null-space completion: orthogonalize coordinate vectors against the
    // known columns; singular values stay zero.
    std::size_t filled = r;
    for (std::size_t trial = 0; trial < d && filled < d; ++trial) {
      std::vector<double> cand(d, 0.0);
      cand[trial] = 1.0;
      for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t k = 0; k < filled; ++k) {
          double proj = 0.0;
          for (std::size_t i = 0; i < d; ++i) proj += cand[i] * basis.v(i, k);
          for (std::size_t i = 0; i < d; ++i) cand[i] -= proj * basis.v(i, k);
        }
      }
      double nrm = 0.0;
      for (double x : cand) nrm += x * x;
      nrm = std::sqrt(nrm);
      if (nrm > 0.5) {
        for (std::size_t i = 0; i < d; ++i) basis.v(i, filled) = cand[i] / nrm;
        ++filled;
      }
    }
    if (filled < d) throw NumericError("factorize: basis completion failed");
  }
  return basis;
}

std::vector<double> dormancy_scores(const Architecture& arch,
                                    const GeneratorParams& params,
                                    const LatentBasis& basis,
                                    std::size_t n_samples, double scale,
                                    Rng& rng) {
  if (n_samples < 1) {
    throw std::invalid_argument("dormancy_scores: n_samples >= 1");
  }
  const std::size_t d = basis.dim();
  Tensor zs({n_samples, d});
  for (std::size_t j = 0; j < n_samples; ++j) {
    for (std::size_t i = 0; i < d; ++i) zs(j, i) = basis.mean[i] + rng.normal();
  }
  // One row of displacements per sample; reduce in index order.
  auto per_sample = parallel_map(n_samples, [&](std::size_t j) {
    const Tensor z = zs.row(j);
    const PointCloud base = forward(arch, params, z);
    std::vector<double> row(d);
    for (std::size_t i = 0; i < d; ++i) {
      Tensor shifted = z;
      for (std::size_t k = 0; k < d; ++k) {
        shifted[k] += scale * basis.v(k, i);
      }
      const PointCloud moved = forward(arch, params, shifted);
      row[i] = norm(moved.points - base.points);
    }
    return row;
  });
  std::vector<double> scores(d, 0.0);
  for (std::size_t j = 0; j < n_samples; ++j) {
    for (std::size_t i = 0; i < d; ++i) scores[i] += per_sample[j][i];
  }
  for (double& s : scores) s /= static_cast<double>(n_samples);
  return scores;
}

DirectionPolicy parse_direction_policy(const std::string& name) {
  if (name == "last") return DirectionPolicy::last;
  if (name == "explicit") return DirectionPolicy::explicit_list;
  if (name == "lowest-score") return DirectionPolicy::lowest_score;
  throw ConfigError("unknown direction policy: " + name);
}

const char* to_string(DirectionPolicy policy) {
  switch (policy) {
    case DirectionPolicy::last:
      return "last";
    case DirectionPolicy::explicit_list:
      return "explicit";
    case DirectionPolicy::lowest_score:
      return "lowest-score";
  }
  return "?";
}

std::vector<std::size_t> select_directions(
    const LatentBasis& basis, const std::vector<double>& scores, std::size_t n,
    DirectionPolicy policy, const std::vector<std::size_t>& explicit_indices) {
  const std::size_t d = basis.dim();
  if (n > d) throw std::invalid_argument("select_directions: N > D");
  switch (policy) {
    case DirectionPolicy::last: {
      std::vector<std::size_t> out(n);
      std::iota(out.begin(), out.end(), d - n);
      return out;
    }
    case DirectionPolicy::explicit_list: {
      if (explicit_indices.size() != n) {
        throw std::invalid_argument("select_directions: explicit list size");
      }
      std::vector<std::size_t> sorted = explicit_indices;
      std::sort(sorted.begin(), sorted.end());
      if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
        throw std::invalid_argument("select_directions: duplicate indices");
      }
      for (std::size_t idx : explicit_indices) {
        if (idx >= d) {
          throw std::invalid_argument("select_directions: index out of range");
        }
      }
      return explicit_indices;
    }
    case DirectionPolicy::lowest_score: {
      if (scores.size() != d) {
        throw std::invalid_argument("select_directions: scores length");
      }
      std::vector<std::size_t> order(d);
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) {
                         return scores[a] < scores[b];
                       });
      order.resize(n);
      return order;
    }
  }
  throw std::invalid_argument("select_directions: bad policy");
}

SubspaceRegistry::SubspaceRegistry(double shift) : shift_(shift) {
  if (!(shift_ > 0.0)) {
    throw std::invalid_argument("registry: shift must be positive");
  }
}

void SubspaceRegistry::assign(const std::string& domain_id,
                              std::size_t index) {
  if (assignments_.count(domain_id)) {
    throw std::invalid_argument("registry: duplicate domain " + domain_id);
  }
  for (const auto& [id, idx] : assignments_) {
    if (idx == index) {
      throw std::invalid_argument("registry: index already assigned to " + id);
    }
  }
  assignments_[domain_id] = index;
}

std::size_t SubspaceRegistry::index_of(const std::string& domain_id) const {
  auto it = assignments_.find(domain_id);
  if (it == assignments_.end()) {
    throw std::invalid_argument("registry: unknown domain " + domain_id);
  }
  return it->second;
}

bool SubspaceRegistry::has(const std::string& domain_id) const {
  return assignments_.count(domain_id) > 0;
}

bool SubspaceRegistry::is_repurposed(std::size_t index) const {
  for (const auto& [id, idx] : assignments_) {
    if (idx == index) return true;
  }
  return false;
}

Tensor project_base(const Tensor& z, const LatentBasis& basis,
                    const SubspaceRegistry& registry) {
  const std::size_t d = basis.dim();
  if (z.size() != d) throw std::invalid_argument("project_base: z length");
  // Coefficients in the V frame with repurposed entries zeroed.
  Tensor centered = z - basis.mean;
  Tensor coeff({d});
  for (std::size_t j = 0; j < d; ++j) {
    if (registry.is_repurposed(j)) continue;
    double c = 0.0;
    for (std::size_t i = 0; i < d; ++i) c += basis.v(i, j) * centered[i];
    coeff[j] = c;
  }
  Tensor out = basis.mean;
  for (std::size_t j = 0; j < d; ++j) {
    const double c = coeff[j];
    if (c == 0.0) continue;
    for (std::size_t i = 0; i < d; ++i) out[i] += c * basis.v(i, j);
  }
  return out;
}

Tensor project_repurposed(const Tensor& z, const LatentBasis& basis,
                          const SubspaceRegistry& registry,
                          const std::string& domain_id) {
  const std::size_t index = registry.index_of(domain_id);
  return traverse(project_base(z, basis, registry), basis, index,
                  registry.shift());
}

Tensor traverse(const Tensor& z, const LatentBasis& basis, std::size_t index,
                double alpha) {
  const std::size_t d = basis.dim();
  if (z.size() != d) throw std::invalid_argument("traverse: z length");
  if (index >= d) throw std::invalid_argument("traverse: index out of range");
  Tensor out = z;
  for (std::size_t i = 0; i < d; ++i) out[i] += alpha * basis.v(i, index);
  return out;
}

Tensor compose(const Tensor& z, const LatentBasis& basis,
               const std::vector<std::pair<std::size_t, double>>& moves) {
  std::vector<std::pair<std::size_t, double>> sorted = moves;
  std::sort(sorted.begin(), sorted.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i].first == sorted[i - 1].first) {
      throw std::invalid_argument("compose: duplicate direction index");
    }
  }
  Tensor out = z;
  for (const auto& [index, alpha] : sorted) {
    out = traverse(out, basis, index, alpha);
  }
  return out;
}

}  // namespace dexp
