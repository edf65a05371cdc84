#include "tasep/consistency_basis.hpp"

#include <map>
#include <mutex>
#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/OrderingMethods>
#include <Eigen/SparseQR>

namespace tasep {

Eigen::SparseMatrix<double> consistency_matrix(const IndexLayout& layout) {
  const ConsistencySystem sys = consistency_system(layout);
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(sys.entries.size());
  for (const auto& e : sys.entries)
    trip.emplace_back(static_cast<Eigen::Index>(e[0]), static_cast<Eigen::Index>(e[1]), e[2]);
  Eigen::SparseMatrix<double> c(static_cast<Eigen::Index>(sys.rows), static_cast<Eigen::Index>(sys.cols));
  c.setFromTriplets(trip.begin(), trip.end());
  c.makeCompressed();
  return c;
}

Eigen::VectorXd consistency_rhs(const IndexLayout& layout) {
  const ConsistencySystem sys = consistency_system(layout);
  return Eigen::Map<const Eigen::VectorXd>(sys.rhs.data(), static_cast<Eigen::Index>(sys.rhs.size()));
}

namespace {

using SparseQr = Eigen::SparseQR<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>>;

void factor_transpose(const IndexLayout& layout, SparseQr& qr) {
  Eigen::SparseMatrix<double> ct = consistency_matrix(layout).transpose();
  ct.makeCompressed();
  qr.compute(ct);
  if (qr.info() != Eigen::Success) throw std::runtime_error("consistency basis: QR factorisation failed");
}

}  // namespace

std::size_t consistency_null_dimension(const IndexLayout& layout) {
  SparseQr qr;
  factor_transpose(layout, qr);
  return layout.size() - static_cast<std::size_t>(qr.rank());
}

ConsistencyBasis consistency_basis(const IndexLayout& layout) {
  SparseQr qr;
  factor_transpose(layout, qr);
  const auto total = static_cast<Eigen::Index>(layout.size());
  const Eigen::Index rank = qr.rank();
  const Eigen::Index k = total - rank;
  const auto expected = consistent_space_dimension(layout.sites(), layout.max_order());
  if (static_cast<std::size_t>(k) != expected)
    throw std::logic_error("consistency basis: null space has dimension " + std::to_string(k) + ", expected " +
                           std::to_string(expected));
  Eigen::MatrixXd sel = Eigen::MatrixXd::Zero(total, k);
  sel.bottomRows(k).setIdentity();
  ConsistencyBasis out{layout, Eigen::MatrixXd(qr.matrixQ() * sel)};
  return out;
}

std::shared_ptr<const ConsistencyBasis> shared_consistency_basis(const IndexLayout& layout) {
  static std::mutex mu;
  static std::map<std::pair<int, int>, std::shared_ptr<const ConsistencyBasis>> cache;
  const std::pair<int, int> key{layout.sites(), layout.max_order()};
  {
    std::lock_guard lock(mu);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
  }
  auto built = std::make_shared<const ConsistencyBasis>(consistency_basis(layout));
  std::lock_guard lock(mu);
  return cache.emplace(key, std::move(built)).first->second;
}

}  // namespace tasep
