#pragma once

// Independent loop-based reference implementations used as test oracles.
// Nothing here calls into the library's numeric code.

#include "genderbias/container.hpp"

#include <cstddef>
#include <vector>

namespace genderbias::testing::naive {

using Grid = std::vector<std::vector<double>>;

Grid from_flat(const std::vector<double>& flat, std::size_t rows, std::size_t cols);
Grid matmul(const Grid& a, const Grid& b);
Grid transpose(const Grid& a);
Grid softmax_rows(const Grid& m);
Grid layer_norm(const Grid& m, const std::vector<double>& gamma, const std::vector<double>& beta,
                double eps);
double gelu(double x);

struct LayerOut {
  Grid q, k, v, avg, out;
};

struct Forward {
  Grid embedding;
  std::vector<LayerOut> layers;
};

/// Full encoder forward pass read straight from the raw container tensors.
Forward forward(const RawContainer& raw, const std::vector<int>& token_ids);

/// Brute-force degree for one captured matrix pair at one head:
/// explicit Q = K = X slice, softmax(QK^T / sqrt(d)), tendency sums at the
/// occupation row, L2-normalized difference, product over the swap pair.
struct IndexSet {
  std::vector<std::size_t> male;
  std::vector<std::size_t> female;
  std::size_t occupation = 0;
};

double degree(const Grid& x, const Grid& x_swap, const IndexSet& g, const IndexSet& g_swap,
              std::size_t num_heads, std::size_t head, bool row_orientation = true);

}  // namespace genderbias::testing::naive
