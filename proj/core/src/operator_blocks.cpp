#include "evoel/operator_blocks.hpp"

#include "evoel/error.hpp"

#include <json.hpp>

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace evoel {

namespace {

Index total(const std::vector<Space>& spaces) {
  Index n = 0;
  for (const auto& s : spaces) n += s.dim;
  return n;
}

std::size_t find_label(const std::vector<Space>& spaces, const std::string& label) {
  for (std::size_t i = 0; i < spaces.size(); ++i)
    if (spaces[i].label == label) return i;
  throw ShapeError("unknown block label '" + label + "'");
}

BlockOperator::Block normalize(Matrix m) {
  if (m.rows() > kDenseLimit || m.cols() > kDenseLimit) return SparseMatrix(m.sparseView());
  return m;
}

BlockOperator::Block normalize(SparseMatrix m) {
  if (m.rows() <= kDenseLimit && m.cols() <= kDenseLimit) return Matrix(m);
  m.makeCompressed();
  return m;
}

Index block_rows(const BlockOperator::Block& b) {
  return std::visit([](const auto& m) { return m.rows(); }, b);
}

Index block_cols(const BlockOperator::Block& b) {
  return std::visit([](const auto& m) { return m.cols(); }, b);
}

Matrix solve_checked(const Matrix& a, const Matrix& rhs, const char* what) {
  Eigen::FullPivLU<Matrix> lu(a);
  lu.setThreshold(1e-13);
  if (!lu.isInvertible()) throw SingularError(std::string(what) + " is singular");
  return lu.solve(rhs);
}

Matrix sub_by_labels(const BlockOperator& b, const std::vector<std::string>& rows,
                     const std::vector<std::string>& cols) {
  Index nr = 0, nc = 0;
  for (const auto& r : rows) nr += b.row_spaces()[b.row_index(r)].dim;
  for (const auto& c : cols) nc += b.col_spaces()[b.col_index(c)].dim;
  Matrix out = Matrix::Zero(nr, nc);
  Index ro = 0;
  for (const auto& r : rows) {
    const auto i = b.row_index(r);
    Index co = 0;
    for (const auto& c : cols) {
      const auto j = b.col_index(c);
      const Matrix blk = b.dense_block(i, j);
      out.block(ro, co, blk.rows(), blk.cols()) = blk;
      co += b.col_spaces()[j].dim;
    }
    ro += b.row_spaces()[i].dim;
  }
  return out;
}

}  // namespace

BlockOperator::BlockOperator(std::vector<Space> row_spaces, std::vector<Space> col_spaces)
    : rows_(std::move(row_spaces)), cols_(std::move(col_spaces)) {
  for (const auto& s : rows_)
    if (s.dim < 0) throw ShapeError("negative space dimension");
  for (const auto& s : cols_)
    if (s.dim < 0) throw ShapeError("negative space dimension");
}

BlockOperator BlockOperator::square(std::vector<Space> spaces) {
  auto copy = spaces;
  return BlockOperator(std::move(spaces), std::move(copy));
}

BlockOperator BlockOperator::from_dense(std::vector<Space> rows, std::vector<Space> cols, const Matrix& m) {
  BlockOperator b(std::move(rows), std::move(cols));
  if (m.rows() != b.rows() || m.cols() != b.cols()) throw ShapeError("from_dense: matrix shape does not match spaces");
  for (std::size_t i = 0; i < b.rows_.size(); ++i)
    for (std::size_t j = 0; j < b.cols_.size(); ++j) {
      Matrix blk = m.block(b.row_offset(i), b.col_offset(j), b.rows_[i].dim, b.cols_[j].dim);
      if (blk.size() > 0 && blk.cwiseAbs().maxCoeff() != 0.0) b.set_block(i, j, normalize(std::move(blk)));
    }
  return b;
}

BlockOperator BlockOperator::from_sparse(std::vector<Space> rows, std::vector<Space> cols, const SparseMatrix& m) {
  BlockOperator b(std::move(rows), std::move(cols));
  if (m.rows() != b.rows() || m.cols() != b.cols()) throw ShapeError("from_sparse: matrix shape does not match spaces");
  std::vector<Index> row_start, col_start;
  for (std::size_t i = 0; i < b.rows_.size(); ++i) row_start.push_back(b.row_offset(i));
  for (std::size_t j = 0; j < b.cols_.size(); ++j) col_start.push_back(b.col_offset(j));
  std::map<std::pair<std::size_t, std::size_t>, std::vector<Triplet>> trips;
  for (Index c = 0; c < m.outerSize(); ++c)
    for (SparseMatrix::InnerIterator it(m, c); it; ++it) {
      if (it.value() == 0.0) continue;
      // last space starting at or before the index; step back over empty ones
      std::size_t i = std::upper_bound(row_start.begin(), row_start.end(), it.row()) - row_start.begin() - 1;
      while (b.rows_[i].dim == 0 || it.row() >= row_start[i] + b.rows_[i].dim) --i;
      std::size_t j = std::upper_bound(col_start.begin(), col_start.end(), it.col()) - col_start.begin() - 1;
      while (b.cols_[j].dim == 0 || it.col() >= col_start[j] + b.cols_[j].dim) --j;
      trips[{i, j}].emplace_back(it.row() - row_start[i], it.col() - col_start[j], it.value());
    }
  for (auto& [key, t] : trips) {
    SparseMatrix blk(b.rows_[key.first].dim, b.cols_[key.second].dim);
    blk.setFromTriplets(t.begin(), t.end());
    b.set_block(key.first, key.second, normalize(std::move(blk)));
  }
  return b;
}

Index BlockOperator::rows() const { return total(rows_); }
Index BlockOperator::cols() const { return total(cols_); }

std::size_t BlockOperator::row_index(const std::string& label) const { return find_label(rows_, label); }
std::size_t BlockOperator::col_index(const std::string& label) const { return find_label(cols_, label); }

Index BlockOperator::row_offset(std::size_t i) const {
  Index o = 0;
  for (std::size_t k = 0; k < i; ++k) o += rows_[k].dim;
  return o;
}

Index BlockOperator::col_offset(std::size_t j) const {
  Index o = 0;
  for (std::size_t k = 0; k < j; ++k) o += cols_[k].dim;
  return o;
}

void BlockOperator::check_shape(std::size_t i, std::size_t j, Index r, Index c) const {
  if (i >= rows_.size() || j >= cols_.size()) throw ShapeError("block index out of range");
  if (rows_[i].dim != r || cols_[j].dim != c) {
    throw ShapeError("block (" + rows_[i].label + "," + cols_[j].label + ") expects " +
                     std::to_string(rows_[i].dim) + "x" + std::to_string(cols_[j].dim) + ", got " +
                     std::to_string(r) + "x" + std::to_string(c));
  }
}

void BlockOperator::set_block(const std::string& row, const std::string& col, Matrix m) {
  set_block(row_index(row), col_index(col), normalize(std::move(m)));
}

void BlockOperator::set_block(const std::string& row, const std::string& col, SparseMatrix m) {
  set_block(row_index(row), col_index(col), normalize(std::move(m)));
}

void BlockOperator::set_block(std::size_t i, std::size_t j, Block b) {
  check_shape(i, j, block_rows(b), block_cols(b));
  if (block_rows(b) == 0 || block_cols(b) == 0) {
    blocks_.erase({i, j});
    return;
  }
  blocks_[{i, j}] = std::move(b);
}

void BlockOperator::clear_block(const std::string& row, const std::string& col) {
  blocks_.erase({row_index(row), col_index(col)});
}

bool BlockOperator::has_block(std::size_t i, std::size_t j) const { return blocks_.count({i, j}) > 0; }

bool BlockOperator::has_block(const std::string& row, const std::string& col) const {
  return has_block(row_index(row), col_index(col));
}

Matrix BlockOperator::dense_block(std::size_t i, std::size_t j) const {
  auto it = blocks_.find({i, j});
  if (it == blocks_.end()) return Matrix::Zero(rows_.at(i).dim, cols_.at(j).dim);
  return std::visit([](const auto& m) { return Matrix(m); }, it->second);
}

Matrix BlockOperator::dense_block(const std::string& row, const std::string& col) const {
  return dense_block(row_index(row), col_index(col));
}

SparseMatrix BlockOperator::sparse_block(std::size_t i, std::size_t j) const {
  auto it = blocks_.find({i, j});
  if (it == blocks_.end()) return SparseMatrix(rows_.at(i).dim, cols_.at(j).dim);
  if (const auto* d = std::get_if<Matrix>(&it->second)) return SparseMatrix(d->sparseView());
  return std::get<SparseMatrix>(it->second);
}

SparseMatrix BlockOperator::sparse_block(const std::string& row, const std::string& col) const {
  return sparse_block(row_index(row), col_index(col));
}

Matrix BlockOperator::to_dense() const {
  Matrix out = Matrix::Zero(rows(), cols());
  for (const auto& [key, blk] : blocks_) {
    const Matrix d = dense_block(key.first, key.second);
    out.block(row_offset(key.first), col_offset(key.second), d.rows(), d.cols()) = d;
  }
  return out;
}

SparseMatrix BlockOperator::to_sparse() const {
  std::vector<Triplet> trips;
  for (const auto& [key, blk] : blocks_) {
    const Index ro = row_offset(key.first);
    const Index co = col_offset(key.second);
    if (const auto* d = std::get_if<Matrix>(&blk)) {
      for (Index c = 0; c < d->cols(); ++c)
        for (Index r = 0; r < d->rows(); ++r)
          if ((*d)(r, c) != 0.0) trips.emplace_back(ro + r, co + c, (*d)(r, c));
    } else {
      const auto& s = std::get<SparseMatrix>(blk);
      for (Index c = 0; c < s.outerSize(); ++c)
        for (SparseMatrix::InnerIterator it(s, c); it; ++it) trips.emplace_back(ro + it.row(), co + it.col(), it.value());
    }
  }
  SparseMatrix out(rows(), cols());
  out.setFromTriplets(trips.begin(), trips.end());
  out.makeCompressed();
  return out;
}

BlockOperator BlockOperator::transpose() const {
  BlockOperator t(cols_, rows_);
  for (const auto& [key, blk] : blocks_) {
    Block tb = std::visit([](const auto& m) -> Block {
      using T = std::decay_t<decltype(m)>;
      return T(m.transpose());
    }, blk);
    t.set_block(key.second, key.first, std::move(tb));
  }
  return t;
}

BlockOperator BlockOperator::scaled(double s) const {
  BlockOperator out(rows_, cols_);
  for (const auto& [key, blk] : blocks_) {
    Block sb = std::visit([s](const auto& m) -> Block {
      using T = std::decay_t<decltype(m)>;
      return T(s * m);
    }, blk);
    out.set_block(key.first, key.second, std::move(sb));
  }
  return out;
}

double BlockOperator::max_abs() const {
  double m = 0.0;
  for (const auto& [key, blk] : blocks_) {
    std::visit([&m](const auto& x) {
      using T = std::decay_t<decltype(x)>;
      if constexpr (std::is_same_v<T, Matrix>) {
        if (x.size() > 0) m = std::max(m, x.cwiseAbs().maxCoeff());
      } else {
        for (Index k = 0; k < x.nonZeros(); ++k) m = std::max(m, std::abs(x.valuePtr()[k]));
      }
    }, blk);
  }
  return m;
}

BlockOperator BlockOperator::operator+(const BlockOperator& other) const {
  if (rows_ != other.rows_ || cols_ != other.cols_) throw ShapeError("operator+: space mismatch");
  BlockOperator out = *this;
  for (const auto& [key, blk] : other.blocks_) {
    if (!out.has_block(key.first, key.second)) {
      out.blocks_[key] = blk;
      continue;
    }
    const bool large = rows_[key.first].dim > kDenseLimit || cols_[key.second].dim > kDenseLimit;
    if (large) {
      out.set_block(key.first, key.second, normalize(SparseMatrix(sparse_block(key.first, key.second) + other.sparse_block(key.first, key.second))));
    } else {
      out.set_block(key.first, key.second, normalize(Matrix(dense_block(key.first, key.second) + other.dense_block(key.first, key.second))));
    }
  }
  return out;
}

BlockOperator BlockOperator::operator-(const BlockOperator& other) const { return *this + other.scaled(-1.0); }

Matrix assemble(const BlockOperator& b) { return b.to_dense(); }

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::pos: return "pos";
    case Verdict::indef: return "indef";
    case Verdict::marginal: return "marginal";
  }
  return "indef";
}

std::string Classification::symmetry() const {
  if (selfadjoint && skew) return "zero";
  if (selfadjoint) return "selfadjoint";
  if (skew) return "skew";
  return "neither";
}

Verdict definiteness(const Matrix& symmetric, double band_factor) {
  if (symmetric.size() == 0) return Verdict::pos;
  const double scale = symmetric.cwiseAbs().maxCoeff();
  if (scale == 0.0) return Verdict::marginal;
  const double band = band_factor * scale;
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetric, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  if (lo > band) return Verdict::pos;
  if (lo < -band) return Verdict::indef;
  return Verdict::marginal;
}

Classification classify(const Matrix& m, double tol) {
  if (m.rows() != m.cols()) throw ShapeError("classify: operator is not square");
  Classification c;
  const double norm = m.norm();
  c.selfadjoint = (m - m.transpose()).norm() <= tol * norm;
  c.skew = (m + m.transpose()).norm() <= tol * norm;
  const Matrix sym = 0.5 * (m + m.transpose());
  c.definiteness = definiteness(sym);
  return c;
}

Classification classify(const SparseMatrix& m, double tol) {
  if (m.rows() != m.cols()) throw ShapeError("classify: operator is not square");
  if (m.rows() <= kDenseLimit) return classify(Matrix(m), tol);
  Classification c;
  const SparseMatrix mt = m.transpose();
  const double norm = m.norm();
  c.selfadjoint = SparseMatrix(m - mt).norm() <= tol * norm;
  c.skew = SparseMatrix(m + mt).norm() <= tol * norm;
  const SparseMatrix sym = 0.5 * (m + mt);
  double scale = 0.0;
  for (Index k = 0; k < sym.nonZeros(); ++k) scale = std::max(scale, std::abs(sym.valuePtr()[k]));
  if (scale == 0.0) {
    c.definiteness = Verdict::marginal;
    return c;
  }
  const double band = 1e-10 * scale;
  Eigen::SimplicialLDLT<SparseMatrix> ldlt(sym);
  if (ldlt.info() != Eigen::Success) {
    c.definiteness = Verdict::marginal;
    return c;
  }
  const Vector d = ldlt.vectorD();
  if (d.minCoeff() > band) c.definiteness = Verdict::pos;
  else if (d.minCoeff() < -band) c.definiteness = Verdict::indef;
  else c.definiteness = Verdict::marginal;
  return c;
}

Classification classify(const BlockOperator& b, double tol) {
  if (!b.is_square()) throw ShapeError("classify: operator is not square");
  if (b.rows() <= kDenseLimit) return classify(b.to_dense(), tol);
  return classify(b.to_sparse(), tol);
}

Matrix schur_complement(const BlockOperator& b, const std::vector<std::string>& top,
                        const std::vector<std::string>& bottom) {
  const Matrix c0 = sub_by_labels(b, top, top);
  const Matrix es = sub_by_labels(b, top, bottom);
  const Matrix e = sub_by_labels(b, bottom, top);
  const Matrix c2 = sub_by_labels(b, bottom, bottom);
  return c2 - e * solve_checked(c0, es, "top-left block");
}

BlockOperator block_inverse_2x2(const BlockOperator& b) {
  if (b.row_spaces().size() != 2 || b.col_spaces().size() != 2)
    throw ShapeError("block_inverse_2x2 needs a 2x2 block operator");
  const Matrix c0 = b.dense_block(0, 0);
  const Matrix es = b.dense_block(0, 1);
  const Matrix e = b.dense_block(1, 0);
  const Matrix c2 = b.dense_block(1, 1);
  const Index n0 = c0.rows();
  const Matrix c0_inv = solve_checked(c0, Matrix::Identity(n0, n0), "C0");
  const Matrix s = c2 - e * c0_inv * es;
  const Matrix s_inv = solve_checked(s, Matrix::Identity(s.rows(), s.cols()), "Schur complement");
  BlockOperator out(b.col_spaces(), b.row_spaces());
  out.set_block(0, 0, c0_inv + c0_inv * es * s_inv * e * c0_inv);
  out.set_block(0, 1, Matrix(-c0_inv * es * s_inv));
  out.set_block(1, 0, Matrix(-s_inv * e * c0_inv));
  out.set_block(1, 1, s_inv);
  return out;
}

BlockOperator conjugate(const BlockOperator& b, const BlockOperator& s) {
  if (s.cols() != b.rows() || s.cols() != b.cols()) throw ShapeError("conjugate: dimension mismatch");
  const bool dense = s.rows() <= kDenseLimit && s.cols() <= kDenseLimit;
  if (dense) {
    const Matrix sd = s.to_dense();
    return BlockOperator::from_dense(s.row_spaces(), s.row_spaces(), sd * b.to_dense() * sd.transpose());
  }
  const SparseMatrix ss = s.to_sparse();
  const SparseMatrix st = ss.transpose();
  const SparseMatrix prod = ss * b.to_sparse() * st;
  return BlockOperator::from_sparse(s.row_spaces(), s.row_spaces(), prod);
}

Isometry::Isometry(BlockOperator s, double tol) : s_(std::move(s)) {
  const SparseMatrix m = s_.to_sparse();
  auto is_identity = [tol](const SparseMatrix& p) {
    SparseMatrix id(p.rows(), p.cols());
    id.setIdentity();
    return SparseMatrix(p - id).norm() <= tol * std::sqrt(static_cast<double>(std::max<Index>(p.rows(), 1)));
  };
  const bool rows_ok = is_identity(SparseMatrix(m * m.transpose()));
  const bool cols_ok = is_identity(SparseMatrix(m.transpose() * m));
  if (rows_ok && cols_ok) kind_ = Kind::unitary;
  else if (rows_ok) kind_ = Kind::coisometry;
  else if (cols_ok) kind_ = Kind::isometry;
  else throw ShapeError("Isometry: neither S S^T nor S^T S is the identity");
}

std::string to_json(const BlockOperator& b) {
  using nlohmann::json;
  auto spaces = [](const std::vector<Space>& v) {
    json a = json::array();
    for (const auto& s : v) a.push_back({{"label", s.label}, {"dim", s.dim}});
    return a;
  };
  json j;
  j["row_spaces"] = spaces(b.row_spaces());
  j["col_spaces"] = spaces(b.col_spaces());
  j["blocks"] = json::array();
  for (const auto& [key, blk] : b.blocks()) {
    json e;
    e["row"] = b.row_spaces()[key.first].label;
    e["col"] = b.col_spaces()[key.second].label;
    if (const auto* d = std::get_if<Matrix>(&blk)) {
      e["format"] = "dense";
      json rows = json::array();
      for (Index r = 0; r < d->rows(); ++r) {
        json row = json::array();
        for (Index c = 0; c < d->cols(); ++c) row.push_back((*d)(r, c));
        rows.push_back(std::move(row));
      }
      e["data"] = std::move(rows);
    } else {
      e["format"] = "coo";
      json trips = json::array();
      const auto& s = std::get<SparseMatrix>(blk);
      for (Index c = 0; c < s.outerSize(); ++c)
        for (SparseMatrix::InnerIterator it(s, c); it; ++it) trips.push_back({it.row(), it.col(), it.value()});
      e["data"] = std::move(trips);
    }
    j["blocks"].push_back(std::move(e));
  }
  return j.dump();
}

BlockOperator block_operator_from_json(const std::string& text) {
  using nlohmann::json;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ShapeError(std::string("block operator JSON: ") + e.what());
  }
  auto spaces = [](const json& a) {
    std::vector<Space> v;
    for (const auto& s : a) v.push_back({s.at("label").get<std::string>(), s.at("dim").get<Index>()});
    return v;
  };
  try {
    BlockOperator b(spaces(j.at("row_spaces")), spaces(j.at("col_spaces")));
    for (const auto& e : j.at("blocks")) {
      const auto i = b.row_index(e.at("row").get<std::string>());
      const auto k = b.col_index(e.at("col").get<std::string>());
      const std::string format = e.at("format").get<std::string>();
      const Index nr = b.row_spaces()[i].dim, nc = b.col_spaces()[k].dim;
      if (format == "dense") {
        const auto& rows = e.at("data");
        if (static_cast<Index>(rows.size()) != nr) throw ShapeError("dense block row count mismatch");
        Matrix m(nr, nc);
        for (Index r = 0; r < nr; ++r) {
          if (static_cast<Index>(rows[r].size()) != nc) throw ShapeError("dense block column count mismatch");
          for (Index c = 0; c < nc; ++c) m(r, c) = rows[r][c].get<double>();
        }
        b.set_block(i, k, normalize(std::move(m)));
      } else if (format == "coo") {
        std::vector<Triplet> t;
        for (const auto& x : e.at("data")) {
          const Index r = x.at(0).get<Index>(), c = x.at(1).get<Index>();
          if (r < 0 || r >= nr || c < 0 || c >= nc) throw ShapeError("coo entry out of range");
          t.emplace_back(r, c, x.at(2).get<double>());
        }
        SparseMatrix m(nr, nc);
        m.setFromTriplets(t.begin(), t.end());
        b.set_block(i, k, normalize(std::move(m)));
      } else {
        throw ShapeError("unknown block format '" + format + "'");
      }
    }
    return b;
  } catch (const json::exception& e) {
    throw ShapeError(std::string("block operator JSON: ") + e.what());
  }
}

double max_deviation(const BlockOperator& a, const BlockOperator& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw ShapeError("max_deviation: shape mismatch");
  const SparseMatrix d = a.to_sparse() - b.to_sparse();
  double m = 0.0;
  for (Index k = 0; k < d.nonZeros(); ++k) m = std::max(m, std::abs(d.valuePtr()[k]));
  return m;
}

BlockOperator drop_empty_spaces(const BlockOperator& b) {
  std::vector<Space> rows, cols;
  std::vector<std::size_t> rmap(b.row_spaces().size()), cmap(b.col_spaces().size());
  for (std::size_t i = 0; i < b.row_spaces().size(); ++i) {
    rmap[i] = rows.size();
    if (b.row_spaces()[i].dim > 0) rows.push_back(b.row_spaces()[i]);
  }
  for (std::size_t j = 0; j < b.col_spaces().size(); ++j) {
    cmap[j] = cols.size();
    if (b.col_spaces()[j].dim > 0) cols.push_back(b.col_spaces()[j]);
  }
  BlockOperator out(rows, cols);
  for (const auto& [key, blk] : b.blocks()) out.set_block(rmap[key.first], cmap[key.second], blk);
  return out;
}

SparseMatrix kron_identity(Index count, const Matrix& m) {
  std::vector<Triplet> trips;
  std::vector<std::pair<Index, Index>> nz;
  for (Index c = 0; c < m.cols(); ++c)
    for (Index r = 0; r < m.rows(); ++r)
      if (m(r, c) != 0.0) nz.emplace_back(r, c);
  trips.reserve(nz.size() * static_cast<std::size_t>(count));
  for (Index k = 0; k < count; ++k)
    for (const auto& [r, c] : nz) trips.emplace_back(k * m.rows() + r, k * m.cols() + c, m(r, c));
  SparseMatrix out(count * m.rows(), count * m.cols());
  out.setFromTriplets(trips.begin(), trips.end());
  out.makeCompressed();
  return out;
}

}  // namespace evoel
