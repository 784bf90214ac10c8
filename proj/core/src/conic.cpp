#include "cran/conic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>

namespace cran {

namespace {

constexpr double kSqrt2 = 1.4142135623730951;
constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

// ---------------------------------------------------------------------------
// Layout and svec helpers

int ConeLayout::psd_offset(int block) const {
  int off = 0;
  for (int j = 0; j < block; ++j) off += svec_size(psd_sizes[j]);
  return off;
}

int ConeLayout::nonneg_offset() const { return psd_offset(static_cast<int>(psd_sizes.size())); }

int ConeLayout::dimension() const { return nonneg_offset() + nonneg; }

int svec_size(int n) { return n * (n + 1) / 2; }

int svec_index(int n, int i, int j) {
  if (i < j) std::swap(i, j);
  return j * (2 * n - j + 1) / 2 + (i - j);
}

Eigen::VectorXd svec(const Eigen::MatrixXd& m) {
  const int n = static_cast<int>(m.rows());
  Eigen::VectorXd v(svec_size(n));
  int k = 0;
  for (int j = 0; j < n; ++j) {
    v(k++) = m(j, j);
    for (int i = j + 1; i < n; ++i) v(k++) = kSqrt2 * 0.5 * (m(i, j) + m(j, i));
  }
  return v;
}

Eigen::MatrixXd smat(const Eigen::Ref<const Eigen::VectorXd>& v, int n) {
  Eigen::MatrixXd m(n, n);
  int k = 0;
  for (int j = 0; j < n; ++j) {
    m(j, j) = v(k++);
    for (int i = j + 1; i < n; ++i) {
      m(i, j) = m(j, i) = v(k++) / kSqrt2;
    }
  }
  return m;
}

std::string to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::infeasible: return "infeasible";
    case SolveStatus::unbounded: return "unbounded";
    case SolveStatus::max_iterations: return "max_iterations";
  }
  return "unknown";
}

void ConicProblem::validate() const {
  for (int n : cones.psd_sizes) {
    if (n < 1) throw std::invalid_argument("PSD block size must be >= 1");
  }
  if (cones.nonneg < 0) throw std::invalid_argument("nonnegative count must be >= 0");
  const int n = cones.dimension();
  if (c.size() != n) throw std::invalid_argument("objective length does not match cone layout");
  if (static_cast<int>(senses.size()) != rows()) {
    throw std::invalid_argument("row senses do not match right-hand side length");
  }
  for (const auto& t : entries) {
    if (t.row < 0 || t.row >= rows() || t.col < 0 || t.col >= n) {
      throw std::invalid_argument("constraint triplet out of range");
    }
    if (!std::isfinite(t.value)) throw std::invalid_argument("non-finite constraint coefficient");
  }
  if (!c.allFinite() || !b.allFinite()) throw std::invalid_argument("non-finite problem data");
}

int ConicProblem::add_row(RowSense sense, double rhs) {
  const int r = rows();
  b.conservativeResize(r + 1);
  b(r) = rhs;
  senses.push_back(sense);
  return r;
}

void ConicProblem::add_psd_entry(int row, int block, int i, int j, double value) {
  const int n = cones.psd_sizes.at(block);
  const int col = cones.psd_offset(block) + svec_index(n, i, j);
  add_entry(row, col, i == j ? value : kSqrt2 * value);
}

// ---------------------------------------------------------------------------
// Solver internals
//
// The user problem is rewritten as
//   min c'x  s.t.  A x = b,  G x + s = h,  s in K
// where x = (X_1..X_k Hermitian matrices, scalars), the PSD cone rows of G
// are -I on each X_j, and the orthant rows of G hold the inequality rows and
// the scalar bounds. Rows touching PSD blocks ("Schur rows") are kept in a
// dense Schur complement; scalar-only rows are eliminated through the
// block-diagonal matrix Q = G2' H^-1 G2.

//
// Blocks are held as complex Hermitian matrices. A real block of size 2n
// whose data all have the form [[A, -B], [B, A]] is the real embedding of an
// n x n Hermitian problem; it is solved in that smaller form with the data
// doubled, so that Re tr(C X) matches the embedded inner product. The
// central path is the same up to a factor 2 in mu. Other blocks are kept at
// full size with zero imaginary part.

namespace {

using Mat = Eigen::MatrixXcd;

struct Block {
  int n = 0;        // internal (complex) size
  int user_n = 0;   // size in the problem's svec layout
  bool embedded = false;
  int offset = 0;
  Mat C;
  std::vector<int> rows;
  std::vector<Mat> coef;
  Mat V;
  Eigen::VectorXd sv;
  std::vector<int> owner;
};

struct ScalarRow {
  std::vector<std::pair<int, double>> terms;
  double rhs = 0.0;
};

struct Model {
  int n_eq = 0;
  int n_g1 = 0;
  int n_g2 = 0;
  int nz = 0;
  std::vector<Block> blocks;
  std::vector<ScalarRow> schur;  // n_eq + n_g1 rows
  std::vector<ScalarRow> g2;
  Eigen::VectorXd cz;
  Eigen::MatrixXd F1;  // (n_eq + n_g1) x nz
  std::vector<int> user_of_schur;
  std::vector<double> sign_of_schur;
  std::vector<int> user_of_g2;  // -1 for bound rows
  std::vector<double> sign_of_g2;
  std::vector<std::vector<int>> comp_vars;
  std::vector<std::vector<int>> comp_rows;
  std::vector<int> local_index;  // variable -> position inside its component

  int m1() const { return n_eq + n_g1; }
  int nl() const { return n_g1 + n_g2; }
};

struct PVec {
  std::vector<Mat> X;
  Eigen::VectorXd z;
};

struct CVec {
  Eigen::VectorXd lp;
  std::vector<Mat> psd;
};

// Re tr(a^H b)
double frob_dot(const Mat& a, const Mat& b) {
  const auto n = a.size();
  const double* pa = reinterpret_cast<const double*>(a.data());
  const double* pb = reinterpret_cast<const double*>(b.data());
  return Eigen::Map<const Eigen::VectorXd>(pa, 2 * n).dot(Eigen::Map<const Eigen::VectorXd>(pb, 2 * n));
}

double dot(const PVec& a, const PVec& b) {
  double d = a.z.dot(b.z);
  for (size_t j = 0; j < a.X.size(); ++j) d += frob_dot(a.X[j], b.X[j]);
  return d;
}

double dot(const CVec& a, const CVec& b) {
  double d = a.lp.dot(b.lp);
  for (size_t j = 0; j < a.psd.size(); ++j) d += frob_dot(a.psd[j], b.psd[j]);
  return d;
}

double norm(const PVec& a) { return std::sqrt(dot(a, a)); }
double norm(const CVec& a) { return std::sqrt(dot(a, a)); }

void axpy(double alpha, const PVec& x, PVec& y) {
  y.z += alpha * x.z;
  for (size_t j = 0; j < x.X.size(); ++j) y.X[j] += alpha * x.X[j];
}

void axpy(double alpha, const CVec& x, CVec& y) {
  y.lp += alpha * x.lp;
  for (size_t j = 0; j < x.psd.size(); ++j) y.psd[j] += alpha * x.psd[j];
}

PVec scaled(const PVec& x, double alpha) {
  PVec r = x;
  r.z *= alpha;
  for (auto& m : r.X) m *= alpha;
  return r;
}

CVec scaled(const CVec& x, double alpha) {
  CVec r = x;
  r.lp *= alpha;
  for (auto& m : r.psd) m *= alpha;
  return r;
}

PVec zero_primal(const Model& m) {
  PVec p;
  for (const auto& blk : m.blocks) p.X.push_back(Mat::Zero(blk.n, blk.n));
  p.z = Eigen::VectorXd::Zero(m.nz);
  return p;
}

CVec zero_cone(const Model& m) {
  CVec c;
  c.lp = Eigen::VectorXd::Zero(m.nl());
  for (const auto& blk : m.blocks) c.psd.push_back(Mat::Zero(blk.n, blk.n));
  return c;
}

CVec identity_cone(const Model& m) {
  CVec c;
  c.lp = Eigen::VectorXd::Ones(m.nl());
  for (const auto& blk : m.blocks) c.psd.push_back(Mat::Identity(blk.n, blk.n));
  return c;
}

// True when a (even size 2n) equals [[A, -B], [B, A]].
bool is_embedding(const Eigen::MatrixXd& a) {
  const auto n2 = a.rows();
  if (n2 == 0 || n2 % 2 != 0) return false;
  const auto n = n2 / 2;
  const double tol = 1e-14 * std::max(1.0, a.cwiseAbs().maxCoeff());
  return (a.topLeftCorner(n, n) - a.bottomRightCorner(n, n)).cwiseAbs().maxCoeff() <= tol &&
         (a.topRightCorner(n, n) + a.bottomLeftCorner(n, n)).cwiseAbs().maxCoeff() <= tol;
}

Mat to_internal(const Eigen::MatrixXd& a, bool embedded) {
  if (!embedded) return a.cast<std::complex<double>>();
  const auto n = a.rows() / 2;
  const Eigen::MatrixXd re = a.topLeftCorner(n, n) + a.bottomRightCorner(n, n);
  const Eigen::MatrixXd im = a.bottomLeftCorner(n, n) - a.topRightCorner(n, n);
  // Doubled: Re tr(C X) then equals tr of the embedded pair.
  Mat out(n, n);
  out.real() = re;
  out.imag() = im;
  return out;
}

Eigen::MatrixXd to_user_block(const Mat& x, bool embedded) {
  if (!embedded) return x.real();
  const auto n = x.rows();
  Eigen::MatrixXd out(2 * n, 2 * n);
  out << x.real(), -x.imag(), x.imag(), x.real();
  return out;
}

Model build_model(const ConicProblem& p) {
  p.validate();
  Model m;
  const auto& cones = p.cones;
  const int nblocks = static_cast<int>(cones.psd_sizes.size());
  const int nn_off = cones.nonneg_offset();
  m.nz = cones.nonneg;

  // svec column -> (block, i, j)
  std::vector<int> col_block(nn_off), col_i(nn_off), col_j(nn_off);
  for (int b = 0; b < nblocks; ++b) {
    const int n = cones.psd_sizes[b];
    const int off = cones.psd_offset(b);
    for (int j = 0; j < n; ++j) {
      for (int i = j; i < n; ++i) {
        const int k = off + svec_index(n, i, j);
        col_block[k] = b;
        col_i[k] = i;
        col_j[k] = j;
      }
    }
  }

  const int nrows = p.rows();
  std::vector<std::vector<int>> row_entries(nrows);
  for (int k = 0; k < static_cast<int>(p.entries.size()); ++k) {
    row_entries[p.entries[k].row].push_back(k);
  }
  std::vector<bool> touches_psd(nrows, false);
  for (const auto& t : p.entries) {
    if (t.col < nn_off && t.value != 0.0) touches_psd[t.row] = true;
  }

  std::vector<int> eq_rows, g1_rows, g2_rows;
  for (int r = 0; r < nrows; ++r) {
    if (p.senses[r] == RowSense::eq) {
      eq_rows.push_back(r);
    } else if (touches_psd[r]) {
      g1_rows.push_back(r);
    } else {
      g2_rows.push_back(r);
    }
  }
  m.n_eq = static_cast<int>(eq_rows.size());
  m.n_g1 = static_cast<int>(g1_rows.size());

  m.blocks.resize(nblocks);
  std::vector<Eigen::MatrixXd> real_c(nblocks);
  std::vector<std::vector<Eigen::MatrixXd>> real_coef(nblocks);
  for (int b = 0; b < nblocks; ++b) {
    auto& blk = m.blocks[b];
    blk.user_n = cones.psd_sizes[b];
    blk.offset = cones.psd_offset(b);
    real_c[b] = smat(p.c.segment(blk.offset, svec_size(blk.user_n)), blk.user_n);
  }
  m.cz = p.c.tail(m.nz);

  auto row_sign = [&](int r) { return p.senses[r] == RowSense::ge ? -1.0 : 1.0; };

  auto fill_row = [&](int user_row, int schur_index, ScalarRow& out) {
    const double sign = row_sign(user_row);
    out.rhs = sign * p.b(user_row);
    std::map<int, double> scal;
    std::map<int, Eigen::MatrixXd> mats;
    for (int k : row_entries[user_row]) {
      const auto& t = p.entries[k];
      const double v = sign * t.value;
      if (t.col >= nn_off) {
        scal[t.col - nn_off] += v;
      } else {
        const int b = col_block[t.col];
        auto it = mats.find(b);
        if (it == mats.end()) {
          it = mats.emplace(b, Eigen::MatrixXd::Zero(m.blocks[b].user_n, m.blocks[b].user_n)).first;
        }
        const int i = col_i[t.col], j = col_j[t.col];
        if (i == j) {
          it->second(i, i) += v;
        } else {
          it->second(i, j) += v / kSqrt2;
          it->second(j, i) += v / kSqrt2;
        }
      }
    }
    for (const auto& [var, v] : scal) {
      if (v != 0.0) out.terms.emplace_back(var, v);
    }
    if (schur_index >= 0) {
      for (auto& [b, mat] : mats) {
        m.blocks[b].rows.push_back(schur_index);
        real_coef[b].push_back(std::move(mat));
      }
    }
  };

  for (int r : eq_rows) {
    ScalarRow sr;
    fill_row(r, static_cast<int>(m.schur.size()), sr);
    m.schur.push_back(std::move(sr));
    m.user_of_schur.push_back(r);
    m.sign_of_schur.push_back(1.0);
  }
  for (int r : g1_rows) {
    ScalarRow sr;
    fill_row(r, static_cast<int>(m.schur.size()), sr);
    m.schur.push_back(std::move(sr));
    m.user_of_schur.push_back(r);
    m.sign_of_schur.push_back(row_sign(r));
  }
  for (int r : g2_rows) {
    ScalarRow sr;
    fill_row(r, -1, sr);
    m.g2.push_back(std::move(sr));
    m.user_of_g2.push_back(r);
    m.sign_of_g2.push_back(row_sign(r));
  }
  for (int k = 0; k < m.nz; ++k) {
    ScalarRow sr;
    sr.terms.emplace_back(k, -1.0);
    sr.rhs = 0.0;
    m.g2.push_back(std::move(sr));
    m.user_of_g2.push_back(-1);
    m.sign_of_g2.push_back(1.0);
  }
  m.n_g2 = static_cast<int>(m.g2.size());

  m.F1 = Eigen::MatrixXd::Zero(m.m1(), m.nz);
  for (int r = 0; r < m.m1(); ++r) {
    for (const auto& [var, v] : m.schur[r].terms) m.F1(r, var) += v;
  }

  for (int b = 0; b < nblocks; ++b) {
    auto& blk = m.blocks[b];
    blk.embedded = is_embedding(real_c[b]);
    for (const auto& a : real_coef[b]) blk.embedded = blk.embedded && is_embedding(a);
    blk.n = blk.embedded ? blk.user_n / 2 : blk.user_n;
    blk.C = to_internal(real_c[b], blk.embedded);
    for (const auto& a : real_coef[b]) blk.coef.push_back(to_internal(a, blk.embedded));
  }

  // Eigen factors of the block coefficients for the Schur complement.
  for (auto& blk : m.blocks) {
    std::vector<Eigen::VectorXcd> vecs;
    std::vector<double> vals;
    for (int r = 0; r < static_cast<int>(blk.coef.size()); ++r) {
      Eigen::SelfAdjointEigenSolver<Mat> es(blk.coef[r]);
      const double scale = es.eigenvalues().cwiseAbs().maxCoeff();
      for (int k = 0; k < blk.n; ++k) {
        const double ev = es.eigenvalues()(k);
        if (scale > 0.0 && std::abs(ev) > 1e-14 * scale) {
          vecs.push_back(es.eigenvectors().col(k));
          vals.push_back(ev);
          blk.owner.push_back(r);
        }
      }
    }
    blk.V.resize(blk.n, static_cast<int>(vecs.size()));
    blk.sv.resize(static_cast<int>(vals.size()));
    for (size_t k = 0; k < vecs.size(); ++k) {
      blk.V.col(static_cast<int>(k)) = vecs[k];
      blk.sv(static_cast<int>(k)) = vals[k];
    }
  }

  // Connected components of scalar variables through scalar-only rows.
  std::vector<int> parent(m.nz);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int v) {
    while (parent[v] != v) {
      parent[v] = parent[parent[v]];
      v = parent[v];
    }
    return v;
  };
  for (const auto& row : m.g2) {
    for (size_t k = 1; k < row.terms.size(); ++k) {
      const int a = find(row.terms[0].first), b = find(row.terms[k].first);
      if (a != b) parent[a] = b;
    }
  }
  std::vector<int> comp_id(m.nz, -1);
  m.local_index.assign(m.nz, 0);
  for (int v = 0; v < m.nz; ++v) {
    const int root = find(v);
    if (comp_id[root] < 0) {
      comp_id[root] = static_cast<int>(m.comp_vars.size());
      m.comp_vars.emplace_back();
      m.comp_rows.emplace_back();
    }
    const int c = comp_id[root];
    m.local_index[v] = static_cast<int>(m.comp_vars[c].size());
    m.comp_vars[c].push_back(v);
  }
  for (int k = 0; k < m.n_g2; ++k) {
    if (m.g2[k].terms.empty()) continue;
    m.comp_rows[comp_id[find(m.g2[k].terms[0].first)]].push_back(k);
  }
  return m;
}

// Linear operators ------------------------------------------------------------

// Values of the Schur rows (equality rows then PSD-touching inequalities).
Eigen::VectorXd schur_apply(const Model& m, const PVec& x) {
  Eigen::VectorXd v = m.F1 * x.z;
  for (size_t b = 0; b < m.blocks.size(); ++b) {
    const auto& blk = m.blocks[b];
    for (size_t r = 0; r < blk.rows.size(); ++r) v(blk.rows[r]) += frob_dot(blk.coef[r], x.X[b]);
  }
  return v;
}

Eigen::VectorXd A_apply(const Model& m, const PVec& x) { return schur_apply(m, x).head(m.n_eq); }

CVec G_apply(const Model& m, const PVec& x) {
  CVec out;
  out.lp.resize(m.nl());
  const Eigen::VectorXd sv = schur_apply(m, x);
  out.lp.head(m.n_g1) = sv.tail(m.n_g1);
  for (int k = 0; k < m.n_g2; ++k) {
    double acc = 0.0;
    for (const auto& [var, v] : m.g2[k].terms) acc += v * x.z(var);
    out.lp(m.n_g1 + k) = acc;
  }
  for (const auto& X : x.X) out.psd.push_back(-X);
  return out;
}

// A'y + G'z
PVec adjoint(const Model& m, const Eigen::VectorXd& y, const CVec& z) {
  Eigen::VectorXd nu(m.m1());
  nu.head(m.n_eq) = y;
  nu.tail(m.n_g1) = z.lp.head(m.n_g1);
  PVec out;
  out.z = m.F1.transpose() * nu;
  for (int k = 0; k < m.n_g2; ++k) {
    const double w = z.lp(m.n_g1 + k);
    for (const auto& [var, v] : m.g2[k].terms) out.z(var) += v * w;
  }
  for (size_t b = 0; b < m.blocks.size(); ++b) {
    const auto& blk = m.blocks[b];
    Mat X = -z.psd[b];
    for (size_t r = 0; r < blk.rows.size(); ++r) X += nu(blk.rows[r]) * blk.coef[r];
    out.X.push_back(std::move(X));
  }
  return out;
}

PVec objective_vec(const Model& m) {
  PVec c;
  for (const auto& blk : m.blocks) c.X.push_back(blk.C);
  c.z = m.cz;
  return c;
}

Eigen::VectorXd b_vec(const Model& m) {
  Eigen::VectorXd b(m.n_eq);
  for (int r = 0; r < m.n_eq; ++r) b(r) = m.schur[r].rhs;
  return b;
}

CVec h_vec(const Model& m) {
  CVec h = zero_cone(m);
  for (int r = 0; r < m.n_g1; ++r) h.lp(r) = m.schur[m.n_eq + r].rhs;
  for (int k = 0; k < m.n_g2; ++k) h.lp(m.n_g1 + k) = m.g2[k].rhs;
  return h;
}

// Scaling ---------------------------------------------------------------------

struct Scaling {
  Eigen::VectorXd d;    // s / z
  Eigen::VectorXd w;    // sqrt(d)
  Eigen::VectorXd lam;  // sqrt(s z)
  std::vector<Mat> r;
  std::vector<Mat> what;  // r r'
  std::vector<Eigen::VectorXd> lam_psd;
};

Scaling identity_scaling(const Model& m) {
  Scaling sc;
  sc.d = Eigen::VectorXd::Ones(m.nl());
  sc.w = sc.d;
  sc.lam = sc.d;
  for (const auto& blk : m.blocks) {
    sc.r.push_back(Mat::Identity(blk.n, blk.n));
    sc.what.push_back(Mat::Identity(blk.n, blk.n));
    sc.lam_psd.push_back(Eigen::VectorXd::Ones(blk.n));
  }
  return sc;
}

bool nt_scaling(const Model& m, const CVec& s, const CVec& z, Scaling& sc) {
  if (m.nl() > 0 && (s.lp.minCoeff() <= 0.0 || z.lp.minCoeff() <= 0.0)) return false;
  sc.d = s.lp.cwiseQuotient(z.lp);
  sc.w = sc.d.cwiseSqrt();
  sc.lam = s.lp.cwiseProduct(z.lp).cwiseSqrt();
  const size_t nb = m.blocks.size();
  sc.r.resize(nb);
  sc.what.resize(nb);
  sc.lam_psd.resize(nb);
  for (size_t b = 0; b < nb; ++b) {
    Eigen::LLT<Mat> ls(s.psd[b]), lz(z.psd[b]);
    if (ls.info() != Eigen::Success || lz.info() != Eigen::Success) return false;
    const Mat Ls = ls.matrixL();
    const Mat Lz = lz.matrixL();
    // Right singular pairs of Lz' Ls from the eigenvectors of its Gram matrix. Near
    // the central path all singular values share one scale, so squaring them
    // costs little accuracy.
    const Mat K = Lz.adjoint() * Ls;
    Eigen::SelfAdjointEigenSolver<Mat> es(K.adjoint() * K);
    if (es.info() != Eigen::Success || es.eigenvalues().minCoeff() <= 0.0) return false;
    const Eigen::VectorXd sig = es.eigenvalues().cwiseSqrt();
    const Mat& V = es.eigenvectors();
    const Eigen::VectorXd isq = sig.cwiseSqrt().cwiseInverse();
    sc.r[b] = Ls * V * isq.asDiagonal();
    sc.what[b] = sc.r[b] * sc.r[b].adjoint();
    sc.lam_psd[b] = sig;
  }
  return true;
}

// W dz
CVec scale_w(const Scaling& sc, const CVec& v) {
  CVec out;
  out.lp = sc.w.cwiseProduct(v.lp);
  for (size_t b = 0; b < v.psd.size(); ++b) {
    out.psd.push_back(sc.r[b].adjoint() * v.psd[b] * sc.r[b]);
  }
  return out;
}

// W^T u
CVec scale_wt(const Scaling& sc, const CVec& v) {
  CVec out;
  out.lp = sc.w.cwiseProduct(v.lp);
  for (size_t b = 0; b < v.psd.size(); ++b) {
    out.psd.push_back(sc.r[b] * v.psd[b] * sc.r[b].adjoint());
  }
  return out;
}

// W^T W dz
CVec apply_h(const Scaling& sc, const CVec& v) {
  CVec out;
  out.lp = sc.d.cwiseProduct(v.lp);
  for (size_t b = 0; b < v.psd.size(); ++b) {
    out.psd.push_back(sc.what[b] * v.psd[b] * sc.what[b]);
  }
  return out;
}

// Inverse of the Jordan product with the diagonal lambda.
CVec lam_divide(const Scaling& sc, const CVec& d) {
  CVec out;
  out.lp = d.lp.cwiseQuotient(sc.lam);
  for (size_t b = 0; b < d.psd.size(); ++b) {
    const auto& l = sc.lam_psd[b];
    const int n = static_cast<int>(l.size());
    Mat u(n, n);
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < n; ++i) u(i, j) = 2.0 * d.psd[b](i, j) / (l(i) + l(j));
    }
    out.psd.push_back(std::move(u));
  }
  return out;
}

CVec jordan(const CVec& a, const CVec& b) {
  CVec out;
  out.lp = a.lp.cwiseProduct(b.lp);
  for (size_t k = 0; k < a.psd.size(); ++k) {
    out.psd.push_back(0.5 * (a.psd[k] * b.psd[k] + b.psd[k] * a.psd[k]));
  }
  return out;
}

// Largest alpha with lambda + alpha * d in the cone (scaled space).
double max_step_scaled(const Scaling& sc, const CVec& d) {
  double alpha = kInf;
  for (int i = 0; i < d.lp.size(); ++i) {
    if (d.lp(i) < 0.0) alpha = std::min(alpha, -sc.lam(i) / d.lp(i));
  }
  for (size_t b = 0; b < d.psd.size(); ++b) {
    const Eigen::VectorXd isq = sc.lam_psd[b].cwiseSqrt().cwiseInverse();
    Mat t = isq.asDiagonal() * d.psd[b] * isq.asDiagonal();
    t = 0.5 * (t + t.adjoint()).eval();
    const double e = Eigen::SelfAdjointEigenSolver<Mat>(t, Eigen::EigenvaluesOnly)
                         .eigenvalues()
                         .minCoeff();
    if (e < 0.0) alpha = std::min(alpha, -1.0 / e);
  }
  return alpha;
}

double min_eig(const CVec& v) {
  double e = kInf;
  if (v.lp.size() > 0) e = v.lp.minCoeff();
  for (const auto& m : v.psd) {
    const Mat sym = 0.5 * (m + m.adjoint());
    e = std::min(e, Eigen::SelfAdjointEigenSolver<Mat>(sym, Eigen::EigenvaluesOnly)
                        .eigenvalues()
                        .minCoeff());
  }
  return e;
}

// Reduced KKT factorization --------------------------------------------------

// Cholesky of D^-1/2 A D^-1/2 with D = diag(A), so the static shift acts on a
// unit diagonal. The shift grows until the factorization succeeds.
class ScaledCholesky {
 public:
  bool compute(const Eigen::MatrixXd& a, double reg) {
    d_ = a.diagonal().cwiseAbs().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
    const Eigen::MatrixXd t = d_.asDiagonal() * a * d_.asDiagonal();
    double shift = reg;
    for (int attempt = 0; attempt < 8; ++attempt) {
      Eigen::MatrixXd u = t;
      u.diagonal().array() += shift;
      llt_.compute(u);
      if (llt_.info() == Eigen::Success) return true;
      shift = std::max(shift * 1e2, 1e-14);
    }
    return false;
  }

  template <typename Rhs>
  Eigen::MatrixXd solve(const Rhs& rhs) const {
    Eigen::MatrixXd r = d_.asDiagonal() * rhs;
    return d_.asDiagonal() * llt_.solve(r);
  }

 private:
  Eigen::VectorXd d_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
};

class KktSolver {
 public:
  KktSolver(const Model& m, double reg) : m_(m), reg_(reg) {}

  bool factor(const Scaling& sc) {
    sc_ = &sc;
    const int m1 = m_.m1();
    // Q blocks
    q_llt_.clear();
    for (size_t c = 0; c < m_.comp_vars.size(); ++c) {
      const int n = static_cast<int>(m_.comp_vars[c].size());
      Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(n, n);
      for (int k : m_.comp_rows[c]) {
        const double inv = 1.0 / sc.d(m_.n_g1 + k);
        const auto& terms = m_.g2[k].terms;
        for (const auto& [va, a] : terms) {
          for (const auto& [vb, bb] : terms) {
            Q(m_.local_index[va], m_.local_index[vb]) += a * bb * inv;
          }
        }
      }
      q_llt_.emplace_back();
      if (!q_llt_.back().compute(Q, reg_)) return false;
    }
    qinv_f1t_ = apply_qinv_cols(m_.F1.transpose());

    Eigen::MatrixXd S = m_.F1 * qinv_f1t_;
    for (int i = 0; i < m_.n_g1; ++i) S(m_.n_eq + i, m_.n_eq + i) += sc.d(i);
    for (size_t b = 0; b < m_.blocks.size(); ++b) add_block_schur(b, S);
    return m1 == 0 || s_llt_.compute(S, reg_);
  }

  // Solves [0 A' G'; A 0 0; G 0 -H] (dx, dy, dz) = (bx, by, bz) with
  // one step of iterative refinement.
  void solve(const PVec& bx, const Eigen::VectorXd& by, const CVec& bz, PVec& dx,
             Eigen::VectorXd& dy, CVec& dz) const {
    solve_once(bx, by, bz, dx, dy, dz);
    double last = kInf;
    for (int it = 0; it < 1; ++it) {
      PVec ex = bx;
      axpy(-1.0, adjoint(m_, dy, dz), ex);
      Eigen::VectorXd ey = by - A_apply(m_, dx);
      CVec ez = bz;
      CVec gdx = G_apply(m_, dx);
      axpy(-1.0, gdx, ez);
      axpy(1.0, apply_h(*sc_, dz), ez);
      const double err = std::sqrt(dot(ex, ex) + ey.squaredNorm() + dot(ez, ez));
      const double ref = std::sqrt(dot(bx, bx) + by.squaredNorm() + dot(bz, bz));
      // Stop once refinement stalls; one step is usually enough.
      if (!(err > 1e-14 * (1.0 + ref)) || err > 0.25 * last) break;
      last = err;
      PVec cx;
      Eigen::VectorXd cy;
      CVec cz;
      solve_once(ex, ey, ez, cx, cy, cz);
      axpy(1.0, cx, dx);
      dy += cy;
      axpy(1.0, cz, dz);
    }
  }

 private:
  Eigen::MatrixXd apply_qinv_cols(const Eigen::MatrixXd& rhs) const {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(rhs.rows(), rhs.cols());
    for (size_t c = 0; c < m_.comp_vars.size(); ++c) {
      const auto& vars = m_.comp_vars[c];
      Eigen::MatrixXd local(vars.size(), rhs.cols());
      for (size_t k = 0; k < vars.size(); ++k) local.row(k) = rhs.row(vars[k]);
      local = q_llt_[c].solve(local);
      for (size_t k = 0; k < vars.size(); ++k) out.row(vars[k]) = local.row(k);
    }
    return out;
  }

  Eigen::VectorXd apply_qinv(const Eigen::VectorXd& rhs) const {
    Eigen::MatrixXd r = rhs;
    return apply_qinv_cols(r).col(0);
  }

  void add_block_schur(size_t b, Eigen::MatrixXd& S) const {
    const auto& blk = m_.blocks[b];
    const int K = static_cast<int>(blk.V.cols());
    if (K == 0) return;
    const int R = static_cast<int>(blk.rows.size());
    const Mat WV = sc_->what[b] * blk.V;
    const Eigen::MatrixXd P2 = (blk.V.adjoint() * WV).cwiseAbs2();
    // Y(:, r) = sum over factor columns owned by row r of sv * P2(:, col)
    Eigen::MatrixXd Y = Eigen::MatrixXd::Zero(K, R);
    for (int k = 0; k < K; ++k) Y.col(blk.owner[k]) += blk.sv(k) * P2.col(k);
    Eigen::MatrixXd local = Eigen::MatrixXd::Zero(R, R);
    for (int k = 0; k < K; ++k) local.row(blk.owner[k]) += blk.sv(k) * Y.row(k);
    for (int i = 0; i < R; ++i) {
      for (int j = 0; j < R; ++j) S(blk.rows[i], blk.rows[j]) += local(i, j);
    }
  }

  void solve_once(const PVec& bx, const Eigen::VectorXd& by, const CVec& bz, PVec& dx,
                  Eigen::VectorXd& dy, CVec& dz) const {
    const Scaling& sc = *sc_;
    const int m1 = m_.m1();
    Eigen::VectorXd r1(m1);
    r1.head(m_.n_eq) = by;
    r1.tail(m_.n_g1) = bz.lp.head(m_.n_g1);
    for (size_t b = 0; b < m_.blocks.size(); ++b) {
      const auto& blk = m_.blocks[b];
      const Mat U = sc.what[b] * bx.X[b] * sc.what[b] - bz.psd[b];
      for (size_t r = 0; r < blk.rows.size(); ++r) r1(blk.rows[r]) -= frob_dot(blk.coef[r], U);
    }
    Eigen::VectorXd r2 = bx.z;
    for (int k = 0; k < m_.n_g2; ++k) {
      const double w = bz.lp(m_.n_g1 + k) / sc.d(m_.n_g1 + k);
      for (const auto& [var, v] : m_.g2[k].terms) r2(var) += v * w;
    }
    const Eigen::VectorXd qr2 = apply_qinv(r2);
    const Eigen::VectorXd rhs = m_.F1 * qr2 - r1;
    const Eigen::VectorXd nu = m1 > 0 ? Eigen::VectorXd(s_llt_.solve(rhs).col(0)) : Eigen::VectorXd();
    dx = PVec{};
    dx.z = m1 > 0 ? Eigen::VectorXd(qr2 - qinv_f1t_ * nu) : qr2;
    dy = nu.head(m_.n_eq);
    dz = CVec{};
    dz.lp.resize(m_.nl());
    dz.lp.head(m_.n_g1) = nu.tail(m_.n_g1);
    for (int k = 0; k < m_.n_g2; ++k) {
      double acc = -bz.lp(m_.n_g1 + k);
      for (const auto& [var, v] : m_.g2[k].terms) acc += v * dx.z(var);
      dz.lp(m_.n_g1 + k) = acc / sc.d(m_.n_g1 + k);
    }
    for (size_t b = 0; b < m_.blocks.size(); ++b) {
      const auto& blk = m_.blocks[b];
      Mat Zp = -bx.X[b];
      for (size_t r = 0; r < blk.rows.size(); ++r) Zp += nu(blk.rows[r]) * blk.coef[r];
      dx.X.push_back(-sc.what[b] * Zp * sc.what[b] - bz.psd[b]);
      dz.psd.push_back(std::move(Zp));
    }
  }

  const Model& m_;
  double reg_;
  const Scaling* sc_ = nullptr;
  std::vector<ScaledCholesky> q_llt_;
  Eigen::MatrixXd qinv_f1t_;
  ScaledCholesky s_llt_;
};

struct UserPoint {
  Eigen::VectorXd x, y, s;
};

UserPoint to_user(const ConicProblem& p, const Model& m, const PVec& x, const Eigen::VectorXd& y,
                  const CVec& s, const CVec& z, double tau) {
  UserPoint u;
  u.x.resize(p.cols());
  for (size_t b = 0; b < m.blocks.size(); ++b) {
    u.x.segment(m.blocks[b].offset, svec_size(m.blocks[b].user_n)) = svec(to_user_block(x.X[b], m.blocks[b].embedded) / tau);
  }
  u.x.tail(m.nz) = x.z / tau;
  u.y = Eigen::VectorXd::Zero(p.rows());
  u.s = Eigen::VectorXd::Zero(p.rows());
  for (int r = 0; r < m.n_eq; ++r) u.y(m.user_of_schur[r]) = -y(r) / tau;
  for (int i = 0; i < m.n_g1; ++i) {
    const int r = m.user_of_schur[m.n_eq + i];
    u.y(r) = -m.sign_of_schur[m.n_eq + i] * z.lp(i) / tau;
    u.s(r) = s.lp(i) / tau;
  }
  for (int k = 0; k < m.n_g2; ++k) {
    const int r = m.user_of_g2[k];
    if (r < 0) continue;
    u.y(r) = -m.sign_of_g2[k] * z.lp(m.n_g1 + k) / tau;
    u.s(r) = s.lp(m.n_g1 + k) / tau;
  }
  return u;
}

void shift_into_cone(CVec& v) {
  const double e = min_eig(v);
  const double nrm = norm(v);
  if (e <= 1e-8 * std::max(nrm, 1.0)) {
    const double shift = 1.0 - e;
    v.lp.array() += shift;
    for (auto& m : v.psd) m.diagonal().array() += shift;
  }
}

}  // namespace

ConicSolution solve(const ConicProblem& problem, const SolverSettings& settings) {
  if (!(settings.tolerance > 0.0)) throw std::invalid_argument("solver tolerance must be positive");
  const Model m = build_model(problem);

  const PVec c = objective_vec(m);
  const Eigen::VectorXd b = b_vec(m);
  const CVec h = h_vec(m);
  const double resx0 = std::max(1.0, norm(c));
  const double resy0 = std::max(1.0, b.norm());
  const double resz0 = std::max(1.0, norm(h));
  int degree = m.nl();
  for (const auto& blk : m.blocks) degree += blk.n;

  ConicSolution out;
  auto finish_user = [&](const PVec& x, const Eigen::VectorXd& y, const CVec& s, const CVec& z,
                         double tau) {
    const UserPoint u = to_user(problem, m, x, y, s, z, tau);
    out.x = u.x;
    out.y = u.y;
    out.s = u.s;
    out.primal_objective = problem.c.dot(out.x);
    out.dual_objective = problem.b.dot(out.y);
    out.residuals = kkt_residuals(problem, out.x, out.y);
  };

  KktSolver kkt(m, settings.regularization);
  Scaling sc = identity_scaling(m);
  if (!kkt.factor(sc)) throw std::runtime_error("conic solver: initial factorization failed");

  PVec x, x_tmp;
  Eigen::VectorXd y, y_tmp;
  CVec s, z, z_tmp;
  kkt.solve(zero_primal(m), b, h, x, y_tmp, z_tmp);
  s = scaled(z_tmp, -1.0);
  kkt.solve(scaled(c, -1.0), Eigen::VectorXd::Zero(m.n_eq), zero_cone(m), x_tmp, y, z);
  shift_into_cone(s);
  shift_into_cone(z);
  double tau = 1.0, kappa = 1.0;

  const double tol = settings.tolerance;
  int small_steps = 0;
  double best_worst = kInf;
  ConicSolution best;
  for (int iter = 0;; ++iter) {
    const CVec Gx = G_apply(m, x);
    const Eigen::VectorXd ry = -A_apply(m, x) + tau * b;
    CVec rz = s;
    axpy(1.0, Gx, rz);
    axpy(-tau, h, rz);
    PVec rx = adjoint(m, y, z);
    axpy(tau, c, rx);
    const double cx = dot(c, x);
    const double by = b.dot(y);
    const double hz = dot(h, z);
    const double rt = kappa + cx + by + hz;
    const double sz = dot(s, z);

    const double pcost = cx / tau;
    const double dcost = -(by + hz) / tau;
    const double pres = std::max(ry.norm() / resy0, norm(rz) / resz0) / tau;
    const double dres = norm(rx) / resx0 / tau;
    const double gap = sz / (tau * tau);

    if (settings.on_iteration) {
      IterationInfo info;
      info.iteration = iter;
      info.primal_objective = pcost;
      info.dual_objective = dcost;
      info.gap = gap;
      info.primal_residual = pres;
      info.dual_residual = dres;
      info.tau = tau;
      info.kappa = kappa;
      info.min_cone_eig_s = min_eig(s);
      info.min_cone_eig_z = min_eig(z);
      settings.on_iteration(info);
    }
    out.iterations = iter;

    // The internal residuals also carry slack drift that the user-space
    // point does not have, so the final test is on the user residuals.
    if (pres <= 100.0 * tol && dres <= 100.0 * tol && gap <= 100.0 * tol * (1.0 + std::abs(pcost))) {
      finish_user(x, y, s, z, tau);
      const double worst = std::max({out.residuals.primal, out.residuals.dual, out.residuals.gap});
      if (worst <= tol) {
        out.status = SolveStatus::optimal;
        return out;
      }
      if (worst < best_worst) {
        best_worst = worst;
        best = out;
      }
    }
    // Infeasibility certificates.
    if (by + hz < 0.0) {
      PVec ag = adjoint(m, y, z);
      const double pinf = norm(ag) / resx0 / (-(by + hz));
      if (pinf <= tol) {
        finish_user(x, y, s, z, tau);
        const UserPoint u = to_user(problem, m, x, y, s, z, -(by + hz));
        out.y = u.y;
        out.status = SolveStatus::infeasible;
        return out;
      }
    }
    if (cx < 0.0) {
      CVec gs = Gx;
      axpy(1.0, s, gs);
      const double dinf =
          std::max(A_apply(m, x).norm() / resy0, norm(gs) / resz0) / (-cx);
      if (dinf <= tol) {
        finish_user(x, y, s, z, -cx);
        out.status = SolveStatus::unbounded;
        return out;
      }
    }
    if (iter >= settings.max_iterations || small_steps >= 5) break;

    if (!nt_scaling(m, s, z, sc) || !kkt.factor(sc)) break;

    PVec x1, x2;
    Eigen::VectorXd y1, y2;
    CVec z1, z2;
    kkt.solve(scaled(c, -1.0), b, h, x1, y1, z1);
    const double denom = dot(c, x1) + b.dot(y1) + dot(h, z1) - kappa / tau;

    CVec lam_sq;
    lam_sq.lp = sc.lam.cwiseProduct(sc.lam);
    for (const auto& l : sc.lam_psd) lam_sq.psd.push_back(Mat(l.cwiseProduct(l).cast<std::complex<double>>().asDiagonal()));

    struct Direction {
      PVec dx;
      Eigen::VectorXd dy;
      CVec dz, ds_scaled, dz_scaled;
      double dtau = 0.0, dkappa = 0.0;
    };

    auto direction = [&](const CVec& ds, double dk, double eta) {
      Direction d;
      const CVec ldiv = lam_divide(sc, ds);
      CVec bz = scaled(rz, -eta);
      axpy(-1.0, scale_wt(sc, ldiv), bz);
      kkt.solve(scaled(rx, -eta), eta * ry, bz, x2, y2, z2);
      d.dtau = (-eta * rt - dot(c, x2) - b.dot(y2) - dot(h, z2) - dk / tau) / denom;
      d.dx = x2;
      axpy(d.dtau, x1, d.dx);
      d.dy = y2 + d.dtau * y1;
      d.dz = z2;
      axpy(d.dtau, z1, d.dz);
      d.dz_scaled = scale_w(sc, d.dz);
      d.ds_scaled = ldiv;
      axpy(-1.0, d.dz_scaled, d.ds_scaled);
      d.dkappa = (dk - kappa * d.dtau) / tau;
      return d;
    };

    auto step_limit = [&](const Direction& d) {
      double a = std::min(max_step_scaled(sc, d.ds_scaled), max_step_scaled(sc, d.dz_scaled));
      if (d.dtau < 0.0) a = std::min(a, -tau / d.dtau);
      if (d.dkappa < 0.0) a = std::min(a, -kappa / d.dkappa);
      return a;
    };

    // Predictor.
    const Direction aff = direction(scaled(lam_sq, -1.0), -tau * kappa, 1.0);
    const double alpha_aff = std::min(1.0, step_limit(aff));
    const double mu = (sz + tau * kappa) / (degree + 1);
    const double sigma = std::clamp(std::pow(1.0 - alpha_aff, 3), 0.0, 1.0);

    // Corrector.
    CVec ds = scaled(lam_sq, -1.0);
    axpy(-1.0, jordan(aff.ds_scaled, aff.dz_scaled), ds);
    const CVec e = identity_cone(m);
    axpy(sigma * mu, e, ds);
    const double dk = -tau * kappa - aff.dtau * aff.dkappa + sigma * mu;
    const Direction dir = direction(ds, dk, 1.0 - sigma);
    const double alpha = std::min(1.0, 0.99 * step_limit(dir));
    if (!(alpha > 0.0) || !std::isfinite(alpha)) break;
    small_steps = alpha < 1e-8 ? small_steps + 1 : 0;

    // Unscaled ds = W^T * ds_scaled
    const CVec ds_unscaled = scale_wt(sc, dir.ds_scaled);
    axpy(alpha, dir.dx, x);
    y += alpha * dir.dy;
    axpy(alpha, ds_unscaled, s);
    axpy(alpha, dir.dz, z);
    for (auto& mtx : s.psd) mtx = 0.5 * (mtx + mtx.adjoint()).eval();
    for (auto& mtx : z.psd) mtx = 0.5 * (mtx + mtx.adjoint()).eval();
    tau += alpha * dir.dtau;
    kappa += alpha * dir.dkappa;
    out.iterations = iter + 1;
  }

  finish_user(x, y, s, z, tau);
  out.status = SolveStatus::max_iterations;
  const double worst = std::max({out.residuals.primal, out.residuals.dual, out.residuals.gap});
  if (best_worst < worst) {
    const int iterations = out.iterations;
    out = best;
    out.iterations = iterations;
    out.status = SolveStatus::max_iterations;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Residuals

Residuals kkt_residuals(const ConicProblem& p, const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  p.validate();
  if (x.size() != p.cols() || y.size() != p.rows()) {
    throw std::invalid_argument("kkt_residuals: dimension mismatch");
  }
  Eigen::VectorXd ax = Eigen::VectorXd::Zero(p.rows());
  Eigen::VectorXd aty = Eigen::VectorXd::Zero(p.cols());
  for (const auto& t : p.entries) {
    ax(t.row) += t.value * x(t.col);
    aty(t.col) += t.value * y(t.row);
  }
  double pviol = 0.0, dviol = 0.0;
  for (int r = 0; r < p.rows(); ++r) {
    double v = 0.0, dv = 0.0;
    switch (p.senses[r]) {
      case RowSense::eq: v = ax(r) - p.b(r); break;
      case RowSense::le:
        v = std::max(0.0, ax(r) - p.b(r));
        dv = std::max(0.0, y(r));
        break;
      case RowSense::ge:
        v = std::max(0.0, p.b(r) - ax(r));
        dv = std::max(0.0, -y(r));
        break;
    }
    pviol += v * v;
    dviol += dv * dv;
  }
  const Eigen::VectorXd zd = p.c - aty;
  const auto& cones = p.cones;
  for (size_t k = 0; k < cones.psd_sizes.size(); ++k) {
    const int n = cones.psd_sizes[k];
    const int off = cones.psd_offset(static_cast<int>(k));
    const Eigen::VectorXd ex =
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(smat(x.segment(off, svec_size(n)), n),
                                                       Eigen::EigenvaluesOnly)
            .eigenvalues();
    const Eigen::VectorXd ez =
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(smat(zd.segment(off, svec_size(n)), n),
                                                       Eigen::EigenvaluesOnly)
            .eigenvalues();
    for (int i = 0; i < n; ++i) {
      if (ex(i) < 0.0) pviol += ex(i) * ex(i);
      if (ez(i) < 0.0) dviol += ez(i) * ez(i);
    }
  }
  const int off = cones.nonneg_offset();
  for (int i = 0; i < cones.nonneg; ++i) {
    if (x(off + i) < 0.0) pviol += x(off + i) * x(off + i);
    if (zd(off + i) < 0.0) dviol += zd(off + i) * zd(off + i);
  }
  Residuals r;
  r.primal = std::sqrt(pviol) / (1.0 + p.b.norm());
  r.dual = std::sqrt(dviol) / (1.0 + p.c.norm());
  const double cx = p.c.dot(x), by = p.b.dot(y);
  r.gap = std::abs(cx - by) / (1.0 + std::abs(cx) + std::abs(by));
  return r;
}

Residuals kkt_residuals(const ConicProblem& problem, const ConicSolution& solution) {
  return kkt_residuals(problem, solution.x, solution.y);
}

// ---------------------------------------------------------------------------
// JSON

namespace {

std::string sense_name(RowSense s) {
  switch (s) {
    case RowSense::eq: return "=";
    case RowSense::le: return "<=";
    case RowSense::ge: return ">=";
  }
  return "=";
}

RowSense parse_sense(const std::string& s) {
  if (s == "=") return RowSense::eq;
  if (s == "<=") return RowSense::le;
  if (s == ">=") return RowSense::ge;
  throw std::invalid_argument("unknown row sense: " + s);
}

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

Eigen::VectorXd from_std(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

nlohmann::json to_json(const ConicProblem& p) {
  nlohmann::json j;
  j["format"] = "cran-conic-standard-form";
  j["version"] = 1;
  j["description"] =
      "minimize c'x subject to rows A x (sense) b, x in PSD blocks (svec, lower triangle "
      "column-major, off-diagonals scaled by sqrt(2)) followed by the nonnegative orthant";
  j["cones"] = {{"psd", p.cones.psd_sizes}, {"nonneg", p.cones.nonneg}};
  j["c"] = to_std(p.c);
  j["b"] = to_std(p.b);
  std::vector<std::string> senses;
  for (auto s : p.senses) senses.push_back(sense_name(s));
  j["senses"] = senses;
  std::vector<int> rows, cols;
  std::vector<double> vals;
  for (const auto& t : p.entries) {
    rows.push_back(t.row);
    cols.push_back(t.col);
    vals.push_back(t.value);
  }
  j["A"] = {{"rows", rows}, {"cols", cols}, {"values", vals}};
  return j;
}

ConicProblem conic_problem_from_json(const nlohmann::json& j) {
  ConicProblem p;
  p.cones.psd_sizes = j.at("cones").at("psd").get<std::vector<int>>();
  p.cones.nonneg = j.at("cones").at("nonneg").get<int>();
  p.c = from_std(j.at("c").get<std::vector<double>>());
  p.b = from_std(j.at("b").get<std::vector<double>>());
  for (const auto& s : j.at("senses")) p.senses.push_back(parse_sense(s.get<std::string>()));
  const auto rows = j.at("A").at("rows").get<std::vector<int>>();
  const auto cols = j.at("A").at("cols").get<std::vector<int>>();
  const auto vals = j.at("A").at("values").get<std::vector<double>>();
  if (rows.size() != cols.size() || rows.size() != vals.size()) {
    throw std::invalid_argument("triplet arrays differ in length");
  }
  for (size_t k = 0; k < rows.size(); ++k) p.entries.push_back({rows[k], cols[k], vals[k]});
  p.validate();
  return p;
}

nlohmann::json to_json(const ConicSolution& s) {
  nlohmann::json j;
  j["status"] = to_string(s.status);
  j["iterations"] = s.iterations;
  j["primal_objective"] = s.primal_objective;
  j["dual_objective"] = s.dual_objective;
  j["residuals"] = {{"primal", s.residuals.primal}, {"dual", s.residuals.dual}, {"gap", s.residuals.gap}};
  j["x"] = to_std(s.x);
  j["y"] = to_std(s.y);
  j["s"] = to_std(s.s);
  return j;
}

}  // namespace cran
