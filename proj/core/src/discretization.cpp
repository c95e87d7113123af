#include "evoel/discretization.hpp"

#include "evoel/error.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>

namespace evoel {

using namespace tensor;

Grid::Grid(Index n, double h) : n_(n), h_(h) {
  if (n < 2) throw ShapeError("grid needs n >= 2");
  if (!(h > 0.0) || !std::isfinite(h)) throw ShapeError("grid needs h > 0");
}

std::array<Index, 3> Grid::indices(Index node) const {
  return {node / (n_ * n_), (node / n_) % n_, node % n_};
}

std::array<double, 3> Grid::position(Index node) const {
  const auto i = indices(node);
  return {static_cast<double>(i[0] + 1) * h_, static_cast<double>(i[1] + 1) * h_, static_cast<double>(i[2] + 1) * h_};
}

TensorField::TensorField(Grid grid, int order, Subspace subspace, Vector values)
    : grid_(grid), order_(order), subspace_(subspace), values_(std::move(values)) {
  if (order < 0 || order > 3) throw ShapeError("TensorField: order must be in {0,1,2,3}");
  if (values_.size() != grid_.nodes() * node_dim()) throw ShapeError("TensorField: value length mismatch");
}

TensorField TensorField::zero(Grid grid, int order, Subspace subspace) {
  return TensorField(grid, order, subspace, Vector::Zero(grid.nodes() * subspace_dim(order, subspace)));
}

TensorField TensorField::sample(Grid grid, int order, Subspace subspace,
                                const std::function<Vector(const std::array<double, 3>&)>& f) {
  const Matrix e = embedding(order, subspace);
  const Index d = e.cols();
  Vector v(grid.nodes() * d);
  for (Index p = 0; p < grid.nodes(); ++p) {
    const Vector full = f(grid.position(p));
    if (full.size() != entries_of_order(order)) throw ShapeError("TensorField::sample: wrong entry count");
    v.segment(p * d, d) = e.transpose() * full;
  }
  return TensorField(grid, order, subspace, std::move(v));
}

TensorValue TensorField::at(Index node) const {
  return TensorValue(order_, embedding(order_, subspace_) * node_values(node));
}

SparseMatrix grad_matrix(const Grid& grid, int order) {
  if (order < 0 || order > 2) throw ShapeError("grad_matrix: order must be 0, 1 or 2");
  const Index comps = entries_of_order(order);
  const Index n = grid.n();
  const Index nodes = grid.nodes();
  const double inv_h = 1.0 / grid.h();
  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(nodes * 3 * comps * 2));
  for (Index p = 0; p < nodes; ++p) {
    const auto idx = grid.indices(p);
    for (Index d = 0; d < 3; ++d) {
      const bool has_next = idx[d] + 1 < n;
      const Index stride = d == 0 ? n * n : (d == 1 ? n : 1);
      for (Index c = 0; c < comps; ++c) {
        const Index row = p * 3 * comps + d * comps + c;
        t.emplace_back(row, p * comps + c, -inv_h);
        if (has_next) t.emplace_back(row, (p + stride) * comps + c, inv_h);
      }
    }
  }
  SparseMatrix g(nodes * 3 * comps, nodes * comps);
  g.setFromTriplets(t.begin(), t.end());
  g.makeCompressed();
  return g;
}

SparseMatrix div_matrix(const Grid& grid, int order) {
  if (order < 1 || order > 3) throw ShapeError("div_matrix: order must be 1, 2 or 3");
  SparseMatrix d = -SparseMatrix(grad_matrix(grid, order - 1).transpose());
  d.makeCompressed();
  return d;
}

SparseMatrix lift_pointwise(const Matrix& node_map, const Grid& grid) { return kron_identity(grid.nodes(), node_map); }

SparseMatrix lift_pointwise(const std::function<Matrix(Index)>& node_map, Index rows, Index cols, const Grid& grid) {
  std::vector<Triplet> t;
  for (Index p = 0; p < grid.nodes(); ++p) {
    const Matrix m = node_map(p);
    if (m.rows() != rows || m.cols() != cols) throw ShapeError("lift_pointwise: per-node map has the wrong shape");
    for (Index c = 0; c < cols; ++c)
      for (Index r = 0; r < rows; ++r)
        if (m(r, c) != 0.0) t.emplace_back(p * rows + r, p * cols + c, m(r, c));
  }
  SparseMatrix out(grid.nodes() * rows, grid.nodes() * cols);
  out.setFromTriplets(t.begin(), t.end());
  out.makeCompressed();
  return out;
}

BlockOperator lift_pointwise(const BlockOperator& node_op, const Grid& grid) {
  auto scale = [&grid](std::vector<Space> s) {
    for (auto& x : s) x.dim *= grid.nodes();
    return s;
  };
  BlockOperator out(scale(node_op.row_spaces()), scale(node_op.col_spaces()));
  for (const auto& [key, blk] : node_op.blocks()) {
    SparseMatrix lifted = lift_pointwise(node_op.dense_block(key.first, key.second), grid);
    if (lifted.rows() <= kDenseLimit && lifted.cols() <= kDenseLimit) out.set_block(key.first, key.second, Matrix(lifted));
    else out.set_block(key.first, key.second, std::move(lifted));
  }
  return out;
}

BlockOperator assemble_A(const StateLayout& layout, const std::vector<GradientCoupling>& couplings, const Grid& grid) {
  BlockOperator a = BlockOperator::square(layout.grid_spaces(grid.nodes()));
  std::vector<bool> used(layout.blocks().size(), false);
  for (const auto& c : couplings) {
    const auto fi = layout.index(c.flux);
    const auto ki = layout.index(c.kinetic);
    const BlockSpec& flux = layout.blocks()[fi];
    const BlockSpec& kin = layout.blocks()[ki];
    if (flux.order != kin.order + 1)
      throw ShapeError("coupling " + c.kinetic + " -> " + c.flux + ": flux order must be kinetic order + 1");
    if (flux.role != Role::flux || kin.role != Role::kinetic)
      throw ShapeError("coupling " + c.kinetic + " -> " + c.flux + ": roles do not match the layout");
    if (used[fi] || used[ki]) throw ShapeError("block used by more than one gradient coupling");
    used[fi] = used[ki] = true;
    const SparseMatrix ef = lift_pointwise(Matrix(flux.embedding().transpose()), grid);
    const SparseMatrix ek = lift_pointwise(kin.embedding(), grid);
    SparseMatrix g = -(ef * grad_matrix(grid, kin.order) * ek);
    g.prune(0.0);
    SparseMatrix gt = -SparseMatrix(g.transpose());
    a.set_block(fi, ki, std::move(g));
    a.set_block(ki, fi, std::move(gt));
  }
  return a;
}

void check_grad_div_pairs(const BlockOperator& a) {
  for (const auto& [key, blk] : a.blocks()) {
    if (key.first == key.second) throw ShapeError("A has a diagonal block at '" + a.row_spaces()[key.first].label + "'");
    if (!a.has_block(key.second, key.first))
      throw ShapeError("A block (" + a.row_spaces()[key.first].label + "," + a.col_spaces()[key.second].label +
                       ") has no transposed partner");
    const SparseMatrix s = a.sparse_block(key.first, key.second);
    const SparseMatrix p = a.sparse_block(key.second, key.first);
    const SparseMatrix sum = SparseMatrix(s.transpose()) + p;
    for (Index k = 0; k < sum.nonZeros(); ++k)
      if (sum.valuePtr()[k] != 0.0)
        throw ShapeError("A block (" + a.row_spaces()[key.first].label + "," + a.col_spaces()[key.second].label +
                         ") is not the negative transpose of its partner");
  }
}

namespace {

// Per-node rows: for each node, the coefficients of every block in layout order.
std::vector<std::pair<Index, Index>> block_ranges(const StateLayout& layout, const Grid& grid, const Vector& state) {
  std::vector<std::pair<Index, Index>> ranges;
  Index off = 0;
  for (const auto& b : layout.blocks()) {
    ranges.emplace_back(off, b.node_dim());
    off += grid.nodes() * b.node_dim();
  }
  if (off != state.size()) throw ShapeError("snapshot: state length does not match layout and grid");
  return ranges;
}

}  // namespace

void write_snapshot_csv(const std::string& path, const StateLayout& layout, const Grid& grid, const Vector& state) {
  const auto ranges = block_ranges(layout, grid, state);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "node,x1,x2,x3";
  for (const auto& b : layout.blocks())
    for (Index c = 0; c < b.node_dim(); ++c) out << ',' << b.label << '_' << c;
  out << '\n' << std::setprecision(16) << std::scientific;
  for (Index p = 0; p < grid.nodes(); ++p) {
    const auto x = grid.position(p);
    out << p << ',' << x[0] << ',' << x[1] << ',' << x[2];
    for (const auto& [off, d] : ranges)
      for (Index c = 0; c < d; ++c) out << ',' << state(off + p * d + c);
    out << '\n';
  }
}

void write_snapshot_binary(const std::string& path, const StateLayout& layout, const Grid& grid, const Vector& state) {
  const auto ranges = block_ranges(layout, grid, state);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path);
  for (Index p = 0; p < grid.nodes(); ++p)
    for (const auto& [off, d] : ranges)
      for (Index c = 0; c < d; ++c) {
        const double v = state(off + p * d + c);
        out.write(reinterpret_cast<const char*>(&v), sizeof(double));
      }
}

std::string snapshot_sidecar(const StateLayout& layout, const Grid& grid, double time) {
  nlohmann::json j;
  j["time"] = time;
  j["grid"] = {{"n", grid.n()}, {"h", grid.h()}};
  j["ordering"] = "node-major, slot-minor";
  j["value_type"] = "float64 little-endian";
  j["blocks"] = nlohmann::json::array();
  for (const auto& b : layout.blocks())
    j["blocks"].push_back({{"label", b.label},
                           {"order", b.order},
                           {"subspace", std::string(to_string(b.subspace))},
                           {"node_dim", b.node_dim()}});
  return j.dump(2);
}

}  // namespace evoel
