#include "dwlab/lapack.hpp"

#include <complex>
#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>

#include <string>

namespace dwlab::lapack {

Eigendecomposition eigen_decompose(const Eigen::MatrixXcd& matrix, bool want_vectors) {
  const lapack_int n = static_cast<lapack_int>(matrix.rows());
  Eigendecomposition out;
  if (n == 0) return out;
  Eigen::MatrixXcd a = matrix;  // zgeev overwrites its input; column-major like Eigen
  std::vector<lapack_complex_double> w(n);
  if (want_vectors) out.vectors.resize(n, n);
  lapack_complex_double dummy;
  const lapack_int info = LAPACKE_zgeev(
      LAPACK_COL_MAJOR, 'N', want_vectors ? 'V' : 'N', n,
      reinterpret_cast<lapack_complex_double*>(a.data()), n, w.data(), &dummy, 1,
      want_vectors ? reinterpret_cast<lapack_complex_double*>(out.vectors.data()) : &dummy,
      want_vectors ? n : 1);
  if (info > 0) {
    throw ConvergenceError("zgeev: QR iteration failed; " + std::to_string(info) +
                           " eigenvalues did not converge (n = " + std::to_string(n) + ")");
  }
  if (info < 0) throw Error("zgeev: illegal argument " + std::to_string(-info));
  out.values.resize(n);
  for (lapack_int i = 0; i < n; ++i) out.values[i] = w[i];
  return out;
}

}  // namespace dwlab::lapack
