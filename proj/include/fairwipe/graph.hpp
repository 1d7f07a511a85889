#pragma once

// Graph data model, the row-normalized propagation operator, SGC/GPR
// aggregation and structural edits.

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <algorithm>
#include <compare>
#include <cstddef>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace fairwipe {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using Mask = std::vector<bool>;

/// Undirected edge, stored with u < v.
struct Edge {
  Index u{0};
  Index v{0};

  friend auto operator<=>(const Edge&, const Edge&) = default;
};

inline Edge make_edge(Index a, Index b) { return a < b ? Edge{a, b} : Edge{b, a}; }

struct GraphDataset {
  Matrix features;  // N x F
  std::vector<int> sensitive;
  std::vector<int> labels;
  Mask train_mask;
  Mask val_mask;
  Mask test_mask;

  Index num_nodes() const { return features.rows(); }
  Index num_features() const { return features.cols(); }
  Index num_edges() const { return adjacency().nonZeros() / 2; }

  /// Symmetric, zero diagonal, positive entries. Copies of a dataset share
  /// one immutable adjacency; structural edits install a new one.
  const SparseMatrix& adjacency() const {
    static const SparseMatrix empty;
    return adjacency_ ? *adjacency_ : empty;
  }
  void set_adjacency(SparseMatrix a) { adjacency_ = std::make_shared<const SparseMatrix>(std::move(a)); }

 private:
  std::shared_ptr<const SparseMatrix> adjacency_;
};

inline Mask full_mask(Index n, bool value) { return Mask(static_cast<std::size_t>(n), value); }

inline Index count(const Mask& mask) {
  return static_cast<Index>(std::count(mask.begin(), mask.end(), true));
}

inline std::vector<Index> indices_of(const Mask& mask) {
  std::vector<Index> out;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i]) out.push_back(static_cast<Index>(i));
  }
  return out;
}

inline Mask mask_of(Index n, std::span<const Index> members) {
  Mask mask = full_mask(n, false);
  for (Index i : members) {
    if (i < 0 || i >= n) throw std::out_of_range("mask index " + std::to_string(i) + " out of range");
    mask[static_cast<std::size_t>(i)] = true;
  }
  return mask;
}

/// Symmetric unweighted adjacency from an undirected edge list. Duplicates
/// collapse to a single edge; self-loops are rejected.
inline SparseMatrix adjacency_from_edges(Index n, std::span<const Edge> edges) {
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(edges.size() * 2);
  for (const Edge& e : edges) {
    if (e.u < 0 || e.v < 0 || e.u >= n || e.v >= n) {
      throw std::out_of_range("edge endpoint out of range");
    }
    if (e.u == e.v) throw std::invalid_argument("self-loop in edge list");
    triplets.emplace_back(e.u, e.v, 1.0);
    triplets.emplace_back(e.v, e.u, 1.0);
  }
  SparseMatrix adjacency(n, n);
  // keep the last value for duplicates so weights stay binary
  adjacency.setFromTriplets(triplets.begin(), triplets.end(),
                            [](const double&, const double& b) { return b; });
  adjacency.makeCompressed();
  return adjacency;
}

/// Upper-triangular edge list, sorted lexicographically.
inline std::vector<Edge> edge_list(const SparseMatrix& adjacency) {
  std::vector<Edge> edges;
  edges.reserve(static_cast<std::size_t>(adjacency.nonZeros() / 2));
  for (Index i = 0; i < adjacency.outerSize(); ++i) {
    for (SparseMatrix::InnerIterator it(adjacency, i); it; ++it) {
      if (it.col() > i) edges.push_back({i, it.col()});
    }
  }
  return edges;
}

inline bool has_edge(const SparseMatrix& adjacency, Index u, Index v) {
  if (u < 0 || v < 0 || u >= adjacency.rows() || v >= adjacency.cols()) return false;
  return adjacency.coeff(u, v) > 0.0;
}

/// Structural checks that hold for every dataset, split or not.
inline void validate_structure(const GraphDataset& ds) {
  const Index n = ds.num_nodes();
  if (ds.adjacency().rows() != n || ds.adjacency().cols() != n) {
    throw std::invalid_argument("adjacency shape does not match feature rows");
  }
  if (static_cast<Index>(ds.sensitive.size()) != n || static_cast<Index>(ds.labels.size()) != n) {
    throw std::invalid_argument("sensitive/label vectors must have one entry per node");
  }
  for (Index i = 0; i < n; ++i) {
    const int s = ds.sensitive[static_cast<std::size_t>(i)];
    const int y = ds.labels[static_cast<std::size_t>(i)];
    if ((s != 0 && s != 1) || (y != 0 && y != 1)) {
      throw std::invalid_argument("sensitive attribute and labels must be in {0,1}");
    }
  }
  for (Index i = 0; i < ds.adjacency().outerSize(); ++i) {
    for (SparseMatrix::InnerIterator it(ds.adjacency(), i); it; ++it) {
      if (it.col() == i) throw std::invalid_argument("adjacency has a self-loop");
      if (!(it.value() > 0.0)) throw std::invalid_argument("adjacency entries must be positive");
      if (ds.adjacency().coeff(it.col(), i) != it.value()) {
        throw std::invalid_argument("adjacency is not symmetric");
      }
    }
  }
}

/// Split masks: correct length, pairwise disjoint, non-empty training set.
inline void validate_splits(const GraphDataset& ds) {
  const auto n = static_cast<std::size_t>(ds.num_nodes());
  if (ds.train_mask.size() != n || ds.val_mask.size() != n || ds.test_mask.size() != n) {
    throw std::invalid_argument("split masks must have one entry per node");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (int(ds.train_mask[i]) + int(ds.val_mask[i]) + int(ds.test_mask[i]) > 1) {
      throw std::invalid_argument("split masks overlap at node " + std::to_string(i));
    }
  }
  if (count(ds.train_mask) == 0) throw std::invalid_argument("training set is empty");
}

// ---------------------------------------------------------------------------
// Propagation and aggregation

struct PropagationOperator {
  SparseMatrix matrix;  // D̄^{-1}(A + I), row-stochastic
  int hops{0};
};

/// P = D̄⁻¹(A + I). The self-loop keeps every row sum positive. Built
/// directly in CSR form: A's pattern plus the diagonal, rows stay sorted.
inline PropagationOperator build_propagation(const GraphDataset& ds, int hops) {
  if (hops < 0) throw std::invalid_argument("hop count must be non-negative");
  const SparseMatrix* source = &ds.adjacency();
  SparseMatrix compressed;
  if (!source->isCompressed()) {
    compressed = *source;
    compressed.makeCompressed();
    source = &compressed;
  }
  const SparseMatrix& a = *source;
  const Index n = a.rows();
  PropagationOperator op;
  op.hops = hops;
  op.matrix.resize(n, n);
  op.matrix.resizeNonZeros(a.nonZeros() + n);
  auto* outer = op.matrix.outerIndexPtr();
  auto* inner = op.matrix.innerIndexPtr();
  double* values = op.matrix.valuePtr();
  const auto* a_outer = a.outerIndexPtr();
  const auto* a_inner = a.innerIndexPtr();
  const double* a_values = a.valuePtr();
  Index k = 0;
  for (Index i = 0; i < n; ++i) {
    outer[i] = static_cast<SparseMatrix::StorageIndex>(k);
    double row_sum = 1.0;
    for (auto p = a_outer[i]; p < a_outer[i + 1]; ++p) row_sum += a_values[p];
    const double inv = 1.0 / row_sum;
    bool diagonal_done = false;
    for (auto p = a_outer[i]; p < a_outer[i + 1]; ++p) {
      if (!diagonal_done && a_inner[p] > i) {
        inner[k] = static_cast<SparseMatrix::StorageIndex>(i);
        values[k++] = inv;
        diagonal_done = true;
      }
      inner[k] = a_inner[p];
      values[k++] = a_values[p] * inv;
    }
    if (!diagonal_done) {
      inner[k] = static_cast<SparseMatrix::StorageIndex>(i);
      values[k++] = inv;
    }
  }
  outer[n] = static_cast<SparseMatrix::StorageIndex>(k);
  return op;
}

enum class Scheme { sgc, gpr };

inline std::string to_string(Scheme scheme) { return scheme == Scheme::sgc ? "sgc" : "gpr"; }

struct AggregatedFeatures {
  Matrix values;
  Scheme scheme{Scheme::sgc};
  Index base_features{0};  // F, columns of the input feature matrix
  int hops{0};

  Index rows() const { return values.rows(); }
  Index width() const { return values.cols(); }

  /// Columns of `values` that carry input feature f (one per GPR block).
  std::vector<Index> columns_of(Index f) const {
    if (scheme == Scheme::sgc) return {f};
    std::vector<Index> cols;
    for (int l = 0; l <= hops; ++l) cols.push_back(static_cast<Index>(l) * base_features + f);
    return cols;
  }
};

/// SGC: Pᴸ X. GPR: (1/(L+1)) [X, PX, ..., Pᴸ X].
inline AggregatedFeatures aggregate(const Matrix& features, const PropagationOperator& prop, Scheme scheme) {
  if (prop.matrix.cols() != features.rows()) {
    throw std::invalid_argument("propagation operator and feature matrix dimensions differ");
  }
  const Index n = features.rows();
  const Index f = features.cols();
  AggregatedFeatures out;
  out.scheme = scheme;
  out.base_features = f;
  out.hops = prop.hops;
  if (scheme == Scheme::sgc) {
    Matrix current = features;
    for (int l = 0; l < prop.hops; ++l) current = prop.matrix * current;
    out.values = std::move(current);
    return out;
  }
  const double scale = 1.0 / static_cast<double>(prop.hops + 1);
  out.values.resize(n, f * (prop.hops + 1));
  Matrix current = features;
  for (int l = 0; l <= prop.hops; ++l) {
    if (l > 0) current = prop.matrix * current;
    out.values.middleCols(static_cast<Index>(l) * f, f) = scale * current;
  }
  return out;
}

inline AggregatedFeatures aggregate(const GraphDataset& ds, const PropagationOperator& prop, Scheme scheme) {
  return aggregate(ds.features, prop, scheme);
}

/// Propagation is row-wise, so zeroing input columns commutes with
/// aggregation: this equals re-aggregating the column-zeroed features.
inline AggregatedFeatures zero_feature_columns(const AggregatedFeatures& z, std::span<const Index> features) {
  AggregatedFeatures out = z;
  for (Index f : features) {
    if (f < 0 || f >= z.base_features) throw std::out_of_range("feature index out of range");
    for (Index c : z.columns_of(f)) out.values.col(c).setZero();
  }
  return out;
}

// ---------------------------------------------------------------------------
// Structural edits. All return a new dataset.

inline GraphDataset remove_features(const GraphDataset& ds, std::span<const Index> features) {
  GraphDataset out = ds;
  for (Index f : features) {
    if (f < 0 || f >= ds.num_features()) {
      throw std::out_of_range("feature index " + std::to_string(f) + " out of range");
    }
    out.features.col(f).setZero();
  }
  return out;
}

/// Deletes both directed entries of every listed pair. The request is
/// atomic: if any pair is not an edge nothing is removed.
inline GraphDataset remove_edges(const GraphDataset& ds, std::span<const Edge> edges) {
  std::vector<Edge> removed;
  removed.reserve(edges.size());
  for (const Edge& e : edges) {
    if (!has_edge(ds.adjacency(), e.u, e.v)) {
      throw std::invalid_argument("edge (" + std::to_string(e.u) + ", " + std::to_string(e.v) +
                                  ") is not in the graph");
    }
    removed.push_back(make_edge(e.u, e.v));
  }
  std::sort(removed.begin(), removed.end());
  GraphDataset out = ds;
  if (removed.empty()) return out;

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(ds.adjacency().nonZeros()));
  for (Index i = 0; i < ds.adjacency().outerSize(); ++i) {
    for (SparseMatrix::InnerIterator it(ds.adjacency(), i); it; ++it) {
      if (std::binary_search(removed.begin(), removed.end(), make_edge(i, it.col()))) continue;
      triplets.emplace_back(i, it.col(), it.value());
    }
  }
  SparseMatrix a(ds.num_nodes(), ds.num_nodes());
  a.setFromTriplets(triplets.begin(), triplets.end());
  a.makeCompressed();
  out.set_adjacency(std::move(a));
  return out;
}

/// Node indices are kept stable: a removed node loses its incident edges,
/// its feature row is zeroed and it is cleared from every split mask.
inline GraphDataset remove_nodes(const GraphDataset& ds, std::span<const Index> nodes) {
  const Index n = ds.num_nodes();
  Mask gone = full_mask(n, false);
  for (Index v : nodes) {
    if (v < 0 || v >= n) throw std::out_of_range("node index " + std::to_string(v) + " out of range");
    gone[static_cast<std::size_t>(v)] = true;
  }
  GraphDataset out = ds;
  if (nodes.empty()) return out;

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(ds.adjacency().nonZeros()));
  for (Index i = 0; i < ds.adjacency().outerSize(); ++i) {
    if (gone[static_cast<std::size_t>(i)]) continue;
    for (SparseMatrix::InnerIterator it(ds.adjacency(), i); it; ++it) {
      if (!gone[static_cast<std::size_t>(it.col())]) triplets.emplace_back(i, it.col(), it.value());
    }
  }
  SparseMatrix a(n, n);
  a.setFromTriplets(triplets.begin(), triplets.end());
  a.makeCompressed();
  out.set_adjacency(std::move(a));
  for (Index v : nodes) {
    const auto i = static_cast<std::size_t>(v);
    out.features.row(v).setZero();
    if (!out.train_mask.empty()) out.train_mask[i] = false;
    if (!out.val_mask.empty()) out.val_mask[i] = false;
    if (!out.test_mask.empty()) out.test_mask[i] = false;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Degree statistics by sensitive group. Degrees count edges of A, never the
// self-loops added by propagation.

struct DegreeStats {
  std::vector<Index> degree;
  std::vector<Index> inter_degree;  // edges to the other group (χ)
  std::vector<Index> intra_degree;  // edges within the group (ω)
  Index group_size[2]{0, 0};
  Index boundary_size[2]{0, 0};  // nodes with at least one inter-edge
  Index inter_edges{0};
  Index intra_edges{0};
};

inline DegreeStats degree_stats(const GraphDataset& ds) {
  const Index n = ds.num_nodes();
  const auto nn = static_cast<std::size_t>(n);
  if (ds.sensitive.size() != nn) throw std::invalid_argument("sensitive vector has wrong length");
  DegreeStats st;
  st.degree.assign(nn, 0);
  st.inter_degree.assign(nn, 0);
  st.intra_degree.assign(nn, 0);
  for (Index i = 0; i < n; ++i) {
    const int si = ds.sensitive[static_cast<std::size_t>(i)];
    if (si != 0 && si != 1) throw std::invalid_argument("sensitive attribute must be binary");
    ++st.group_size[si];
  }
  for (Index i = 0; i < ds.adjacency().outerSize(); ++i) {
    const auto ui = static_cast<std::size_t>(i);
    for (SparseMatrix::InnerIterator it(ds.adjacency(), i); it; ++it) {
      const auto j = static_cast<std::size_t>(it.col());
      ++st.degree[ui];
      const bool inter = ds.sensitive[ui] != ds.sensitive[j];
      if (inter) {
        ++st.inter_degree[ui];
      } else {
        ++st.intra_degree[ui];
      }
      if (it.col() > i) {
        if (inter) {
          ++st.inter_edges;
        } else {
          ++st.intra_edges;
        }
      }
    }
  }
  for (std::size_t i = 0; i < nn; ++i) {
    if (st.inter_degree[i] > 0) ++st.boundary_size[ds.sensitive[i]];
  }
  return st;
}

}  // namespace fairwipe
