# cython: boundscheck=False, wraparound=False, initializedcheck=False, cdivision=True
"""Compiled propagation and time-averaging kernels.

Mirrors ``urcontrol.engine.numpy_backend`` (the reference implementation)
function by function; see that module for the full docstrings.  These loops
dominate the runtime of pulse optimizations, which evaluate the functionals
tens of thousands of times inside quasi-Newton searches.
"""
import numpy as np

cimport numpy as cnp
from libc.math cimport cos, fabs, sin
from libc.string cimport memcpy, memset
from scipy.linalg.cython_lapack cimport zheevd

cnp.import_array()

ctypedef double complex zdouble


cdef inline void _mm_nn(int d, zdouble* a, zdouble* b, zdouble* out) noexcept nogil:
    # out = a @ b
    cdef int i, j, k
    cdef zdouble acc
    for i in range(d):
        for j in range(d):
            acc = 0
            for k in range(d):
                acc = acc + a[i * d + k] * b[k * d + j]
            out[i * d + j] = acc


cdef inline void _mm_cn(int d, zdouble* a, zdouble* b, zdouble* out) noexcept nogil:
    # out = a^dag @ b
    cdef int i, j, k
    cdef zdouble acc
    for i in range(d):
        for j in range(d):
            acc = 0
            for k in range(d):
                acc = acc + a[k * d + i].conjugate() * b[k * d + j]
            out[i * d + j] = acc


cdef inline void _mm_nc(int d, zdouble* a, zdouble* b, zdouble* out) noexcept nogil:
    # out = a @ b^dag
    cdef int i, j, k
    cdef zdouble acc
    for i in range(d):
        for j in range(d):
            acc = 0
            for k in range(d):
                acc = acc + a[i * d + k] * b[j * d + k].conjugate()
            out[i * d + j] = acc


cdef int _eigh_inplace(int d, zdouble* a, double* w,
                       zdouble* work, int lwork, double* rwork, int lrwork,
                       int* iwork, int liwork) noexcept nogil:
    # Hermitian eigendecomposition of the C-ordered matrix in `a`.
    # LAPACK sees the transpose (= conjugate for Hermitian input), so after
    # the call the C-ordered buffer holds W^dag, where the columns of W are
    # the eigenvectors of the original matrix.
    cdef int info = 0
    cdef char jobz = b'V'
    cdef char uplo = b'L'
    zheevd(&jobz, &uplo, &d, a, &d, w, work, &lwork, rwork, &lrwork,
           iwork, &liwork, &info)
    return info


cdef inline void _segment_unitary(int d, zdouble* bdag, double* ev, double dt,
                                  zdouble* u) noexcept nogil:
    # u = W exp(-i ev dt) W^dag with bdag holding W^dag row-major
    cdef int i, j, k
    cdef zdouble acc, p
    for i in range(d):
        for j in range(d):
            acc = 0
            for k in range(d):
                p = cos(ev[k] * dt) - 1j * sin(ev[k] * dt)
                acc = acc + bdag[k * d + i].conjugate() * p * bdag[k * d + j]
            u[i * d + j] = acc


cdef inline void _phase_integrals(int d, double* ev, double dt, zdouble* g) noexcept nogil:
    # g[a,b] = dt * sinc(x) * exp(i x), x = (ev[a]-ev[b]) dt / 2
    cdef int a, b
    cdef double x, s
    for a in range(d):
        for b in range(d):
            x = (ev[a] - ev[b]) * dt * 0.5
            if fabs(x) < 1e-8:
                s = 1.0 - x * x / 6.0
            else:
                s = sin(x) / x
            g[a * d + b] = dt * s * (cos(x) + 1j * sin(x))


def propagate(zdouble[:, :, ::1] h, double dt):
    """Compiled twin of numpy_backend.propagate."""
    cdef int n = h.shape[0]
    cdef int d = h.shape[1]
    cdef cnp.ndarray u_arr = np.empty((n, d, d), dtype=np.complex128)
    cdef cnp.ndarray c_arr = np.empty((n + 1, d, d), dtype=np.complex128)
    cdef zdouble[:, :, ::1] u = u_arr
    cdef zdouble[:, :, ::1] c = c_arr

    cdef int lwork = d * d + 2 * d + 8
    cdef int lrwork = 2 * d * d + 5 * d + 8
    cdef int liwork = 5 * d + 8
    cdef cnp.ndarray bdag_a = np.empty((d, d), dtype=np.complex128)
    cdef cnp.ndarray ev_a = np.empty(d, dtype=np.float64)
    cdef cnp.ndarray work_a = np.empty(lwork, dtype=np.complex128)
    cdef cnp.ndarray rwork_a = np.empty(lrwork, dtype=np.float64)
    cdef cnp.ndarray iwork_a = np.empty(liwork, dtype=np.intc)
    cdef zdouble[:, ::1] bdag = bdag_a
    cdef double[::1] ev = ev_a
    cdef zdouble[::1] work = work_a
    cdef double[::1] rwork = rwork_a
    cdef int[::1] iwork = iwork_a

    cdef int i, j, info
    for i in range(d):
        for j in range(d):
            c[0, i, j] = 1.0 if i == j else 0.0
    for j in range(n):
        memcpy(&bdag[0, 0], &h[j, 0, 0], d * d * sizeof(zdouble))
        info = _eigh_inplace(d, &bdag[0, 0], &ev[0], &work[0], lwork,
                             &rwork[0], lrwork, &iwork[0], liwork)
        if info != 0:
            raise RuntimeError(f"eigendecomposition failed (info={info}) at segment {j}")
        _segment_unitary(d, &bdag[0, 0], &ev[0], dt, &u[j, 0, 0])
        _mm_nn(d, &u[j, 0, 0], &c[j, 0, 0], &c[j + 1, 0, 0])
    return u_arr, c_arr


def averaged_ops(zdouble[:, :, ::1] h, double dt, zdouble[:, :, ::1] ops):
    """Compiled twin of numpy_backend.averaged_ops."""
    cdef int n = h.shape[0]
    cdef int d = h.shape[1]
    cdef int m = ops.shape[0]
    cdef cnp.ndarray avg_arr = np.zeros((m, d, d), dtype=np.complex128)
    cdef cnp.ndarray c_arr = np.empty((n + 1, d, d), dtype=np.complex128)
    cdef zdouble[:, :, ::1] avg = avg_arr
    cdef zdouble[:, :, ::1] c = c_arr

    cdef int lwork = d * d + 2 * d + 8
    cdef int lrwork = 2 * d * d + 5 * d + 8
    cdef int liwork = 5 * d + 8
    cdef cnp.ndarray bdag_a = np.empty((d, d), dtype=np.complex128)
    cdef cnp.ndarray ev_a = np.empty(d, dtype=np.float64)
    cdef cnp.ndarray work_a = np.empty(lwork, dtype=np.complex128)
    cdef cnp.ndarray rwork_a = np.empty(lrwork, dtype=np.float64)
    cdef cnp.ndarray iwork_a = np.empty(liwork, dtype=np.intc)
    cdef cnp.ndarray scratch_a = np.empty((5, d, d), dtype=np.complex128)
    cdef zdouble[:, ::1] bdag = bdag_a
    cdef double[::1] ev = ev_a
    cdef zdouble[::1] work = work_a
    cdef double[::1] rwork = rwork_a
    cdef int[::1] iwork = iwork_a
    cdef zdouble[:, :, ::1] scratch = scratch_a
    cdef zdouble* g = &scratch[0, 0, 0]
    cdef zdouble* t1 = &scratch[1, 0, 0]
    cdef zdouble* t2 = &scratch[2, 0, 0]
    cdef zdouble* useg = &scratch[3, 0, 0]
    cdef zdouble* cnew = &scratch[4, 0, 0]

    cdef int i, j, k, info, a, b
    cdef double inv
    for i in range(d):
        for j in range(d):
            c[0, i, j] = 1.0 if i == j else 0.0
    for j in range(n):
        memcpy(&bdag[0, 0], &h[j, 0, 0], d * d * sizeof(zdouble))
        info = _eigh_inplace(d, &bdag[0, 0], &ev[0], &work[0], lwork,
                             &rwork[0], lrwork, &iwork[0], liwork)
        if info != 0:
            raise RuntimeError(f"eigendecomposition failed (info={info}) at segment {j}")
        _segment_unitary(d, &bdag[0, 0], &ev[0], dt, useg)
        _phase_integrals(d, &ev[0], dt, g)
        for k in range(m):
            # t2 = (W^dag V W) o g, in the eigenbasis
            _mm_nn(d, &bdag[0, 0], &ops[k, 0, 0], t1)
            _mm_nc(d, t1, &bdag[0, 0], t2)
            for a in range(d):
                for b in range(d):
                    t2[a * d + b] = t2[a * d + b] * g[a * d + b]
            # t2 back to the lab frame: W t2 W^dag
            _mm_cn(d, &bdag[0, 0], t2, t1)
            _mm_nn(d, t1, &bdag[0, 0], t2)
            # sandwich with the cumulative propagator up to this segment
            _mm_cn(d, &c[j, 0, 0], t2, t1)
            _mm_nn(d, t1, &c[j, 0, 0], t2)
            for a in range(d):
                for b in range(d):
                    avg[k, a, b] = avg[k, a, b] + t2[a * d + b]
        _mm_nn(d, useg, &c[j, 0, 0], cnew)
        memcpy(&c[j + 1, 0, 0], cnew, d * d * sizeof(zdouble))
    inv = 1.0 / (n * dt)
    for k in range(m):
        for a in range(d):
            for b in range(d):
                avg[k, a, b] = avg[k, a, b] * inv
    return avg_arr, c_arr
