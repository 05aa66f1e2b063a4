#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "dexp/generator.hpp"
#include "dexp/rng.hpp"
#include "dexp/tensor.hpp"

namespace dexp {

// Orthonormal latent directions from the first-layer factorization,
// ordered by descending singular value, plus the latent sampler mean.
struct LatentBasis {
  Tensor v;     // D x D, columns are directions
  Tensor s;     // D singular values, descending, zero-padded past rank
  Tensor mean;  // D

  std::size_t dim() const { return mean.size(); }
  Tensor column(std::size_t j) const;
};

// Right singular vectors of the first layer; columns beyond rank(w1) are
// completed to an orthonormal basis with singular value zero.
LatentBasis factorize(const Tensor& w1, const Tensor& mean);

// Mean output displacement |G(z + scale * v_i) - G(z)| over z from the
// source sampler; the perceptual-displacement analog for a 3-sigma
// traversal when scale = 3.
std::vector<double> dormancy_scores(const Architecture& arch,
                                    const GeneratorParams& params,
                                    const LatentBasis& basis,
                                    std::size_t n_samples, double scale,
                                    Rng& rng);

enum class DirectionPolicy { last, explicit_list, lowest_score };

DirectionPolicy parse_direction_policy(const std::string& name);
const char* to_string(DirectionPolicy policy);

// `last` returns the trailing N indices; `explicit_list` passes indices
// through unchecked against dormancy (repurposing active directions
// rewrites their behavior); `lowest_score` sorts by dormancy ascending.
std::vector<std::size_t> select_directions(
    const LatentBasis& basis, const std::vector<double>& scores,
    std::size_t n, DirectionPolicy policy,
    const std::vector<std::size_t>& explicit_indices = {});

// Domain id -> repurposed basis column, plus the shift magnitude s.
class SubspaceRegistry {
 public:
  explicit SubspaceRegistry(double shift = 20.0);

  void assign(const std::string& domain_id, std::size_t index);
  double shift() const { return shift_; }
  std::size_t size() const { return assignments_.size(); }
  std::size_t index_of(const std::string& domain_id) const;
  bool has(const std::string& domain_id) const;
  bool is_repurposed(std::size_t index) const;
  const std::map<std::string, std::size_t>& assignments() const {
    return assignments_;
  }

 private:
  double shift_;
  std::map<std::string, std::size_t> assignments_;
};

// z' = mean + sum over non-repurposed j of <v_j, z - mean> v_j.
Tensor project_base(const Tensor& z, const LatentBasis& basis,
                    const SubspaceRegistry& registry);

// project_base(z) + s * v_i, computed exactly as that sum.
Tensor project_repurposed(const Tensor& z, const LatentBasis& basis,
                          const SubspaceRegistry& registry,
                          const std::string& domain_id);

// z + alpha * v_i; alpha unrestricted.
Tensor traverse(const Tensor& z, const LatentBasis& basis, std::size_t index,
                double alpha);

// z + sum of alpha_i * v_i over distinct indices, accumulated in ascending
// index order so the result is order-independent bit-for-bit.
Tensor compose(const Tensor& z, const LatentBasis& basis,
               const std::vector<std::pair<std::size_t, double>>& moves);

}  // namespace dexp
