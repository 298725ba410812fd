# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled see-saw kernels.  Same contract as ``bentlab._kernels_py``."""
import numpy as np

from libc.math cimport sqrt
from scipy.linalg.cython_lapack cimport zheevr

BACKEND = "cython"

cdef double _SMALL = 1e-12


cdef inline double _abs2(double complex z) nogil:
    return z.real * z.real + z.imag * z.imag


cdef void _orth(double complex[:, ::1] Q) noexcept nogil:
    # modified Gram-Schmidt on columns, completing with standard basis vectors
    cdef Py_ssize_t m = Q.shape[0], k = Q.shape[1]
    cdef Py_ssize_t i, j, r, rep, e = 0
    cdef double complex dot
    cdef double nrm, scale = 0.0, s
    for j in range(k):
        s = 0.0
        for r in range(m):
            s += _abs2(Q[r, j])
        if s > scale:
            scale = s
    scale = sqrt(scale)
    if scale < 1e-300:
        scale = 1e-300
    for j in range(k):
        while True:
            for rep in range(2):
                for i in range(j):
                    dot = 0.0
                    for r in range(m):
                        dot = dot + Q[r, i].conjugate() * Q[r, j]
                    for r in range(m):
                        Q[r, j] = Q[r, j] - dot * Q[r, i]
            nrm = 0.0
            for r in range(m):
                nrm += _abs2(Q[r, j])
            nrm = sqrt(nrm)
            if nrm > _SMALL * scale:
                break
            for r in range(m):
                Q[r, j] = 0.0
            Q[e, j] = 1.0
            e += 1
            scale = 1.0
        for r in range(m):
            Q[r, j] = Q[r, j] / nrm


cdef struct EigWork:
    int n
    double complex* z
    double* w
    double complex* work
    int lwork
    double* rwork
    int lrwork
    int* iwork
    int liwork
    int* isuppz


cdef int _min_eig(double complex* K, int n, EigWork* ws, bint vectors) noexcept nogil:
    # smallest eigenpair of the column-major K; ws.z holds the phase-fixed vector
    cdef char jobz = b'V' if vectors else b'N'
    cdef char rng = b'I'
    cdef char uplo = b'U'
    cdef int info = 0, i, piv = 0, il = 1, iu = 1, m = 0
    cdef double vl = 0.0, vu = 0.0, abstol = 0.0, best = -1.0, mag
    cdef double complex ph
    zheevr(&jobz, &rng, &uplo, &n, K, &n, &vl, &vu, &il, &iu, &abstol, &m, ws.w,
           ws.z, &n, ws.isuppz, ws.work, &ws.lwork, ws.rwork, &ws.lrwork,
           ws.iwork, &ws.liwork, &info)
    if info != 0 or not vectors:
        return info
    for i in range(n):
        mag = _abs2(ws.z[i])
        if mag > best:
            best = mag
            piv = i
    mag = sqrt(best)
    ph = ws.z[piv].conjugate() / mag
    for i in range(n):
        ws.z[i] = ws.z[i] * ph
    return 0


cdef class _Workspace:
    cdef object arrays
    cdef EigWork ws

    def __cinit__(self, int n):
        cdef double complex[::1] z = np.zeros(n, dtype=np.complex128)
        cdef double[::1] w = np.zeros(n)
        cdef double complex[::1] work = np.zeros(64 * n, dtype=np.complex128)
        cdef double[::1] rwork = np.zeros(24 * n)
        cdef int[::1] iwork = np.zeros(10 * n, dtype=np.intc)
        cdef int[::1] isuppz = np.zeros(2 * n, dtype=np.intc)
        self.arrays = (z, w, work, rwork, iwork, isuppz)
        self.ws.n = n
        self.ws.z = &z[0]
        self.ws.w = &w[0]
        self.ws.work = &work[0]
        self.ws.lwork = 64 * n
        self.ws.rwork = &rwork[0]
        self.ws.lrwork = 24 * n
        self.ws.iwork = &iwork[0]
        self.ws.liwork = 10 * n
        self.ws.isuppz = &isuppz[0]


cdef void _compress_alice(const double complex* M, Py_ssize_t DA, Py_ssize_t DB,
                          const double complex* V, Py_ssize_t k,
                          double complex* tmp, double complex* K) noexcept nogil:
    # K[(s,b),(t,d)] = sum_{a,c} conj(V[a,s]) M[a,b,c,d] V[c,t], K column-major
    cdef Py_ssize_t a, b, c, d, s, t, i, n = k * DB
    cdef const double complex* row
    cdef double complex* out
    cdef double complex v
    # tmp[((a*DB + b)*k + t)*DB + d] = sum_c M[a,b,c,d] V[c,t]
    for a in range(DA):
        for b in range(DB):
            for t in range(k):
                out = tmp + ((a * DB + b) * k + t) * DB
                for d in range(DB):
                    out[d] = 0.0
                for c in range(DA):
                    v = V[c * k + t]
                    row = M + ((a * DB + b) * DA + c) * DB
                    for d in range(DB):
                        out[d] = out[d] + row[d] * v
    for i in range(n * n):
        K[i] = 0.0
    for a in range(DA):
        for s in range(k):
            v = V[a * k + s].conjugate()
            for b in range(DB):
                for t in range(k):
                    row = tmp + ((a * DB + b) * k + t) * DB
                    out = K + (s * DB + b) + n * t * DB
                    for d in range(DB):
                        out[n * d] = out[n * d] + v * row[d]


cdef void _compress_bob(const double complex* M, Py_ssize_t DA, Py_ssize_t DB,
                        const double complex* W, Py_ssize_t k,
                        double complex* tmp, double complex* K) noexcept nogil:
    # K[(a,s),(c,t)] = sum_{b,d} conj(W[b,s]) M[a,b,c,d] W[d,t], K column-major
    cdef Py_ssize_t a, b, c, d, s, t, i, n = DA * k
    cdef const double complex* row
    cdef double complex acc, v
    # tmp[((a*DB + b)*DA + c)*k + t] = sum_d M[a,b,c,d] W[d,t]
    for a in range(DA):
        for b in range(DB):
            for c in range(DA):
                row = M + ((a * DB + b) * DA + c) * DB
                for t in range(k):
                    acc = 0.0
                    for d in range(DB):
                        acc = acc + row[d] * W[d * k + t]
                    tmp[((a * DB + b) * DA + c) * k + t] = acc
    for i in range(n * n):
        K[i] = 0.0
    for a in range(DA):
        for b in range(DB):
            for s in range(k):
                v = W[b * k + s].conjugate()
                for c in range(DA):
                    for t in range(k):
                        K[(a * k + s) + n * (c * k + t)] = (
                            K[(a * k + s) + n * (c * k + t)]
                            + v * tmp[((a * DB + b) * DA + c) * k + t])


def seesaw_restart(M4, V0, int max_iters, double tol, int patience):
    cdef const double complex[:, :, :, ::1] M = np.ascontiguousarray(M4, dtype=np.complex128)
    cdef Py_ssize_t DA = M.shape[0], DB = M.shape[1]
    cdef double complex[:, ::1] V = np.array(V0, dtype=np.complex128, order="C")
    cdef Py_ssize_t k = V.shape[1]
    cdef double complex[:, ::1] W = np.zeros((DB, k), dtype=np.complex128)
    cdef double complex[:, ::1] psi = np.zeros((DA, DB), dtype=np.complex128)
    cdef int nmax = <int>max(k * DB, DA * k)
    cdef double complex[::1] tmp = np.zeros(DA * DB * max(DA, DB) * k, dtype=np.complex128)
    cdef double complex[::1] K = np.zeros(nmax * nmax, dtype=np.complex128)
    cdef _Workspace space = _Workspace(nmax)
    cdef EigWork* ws = &space.ws
    cdef double[::1] hist = np.zeros(max(max_iters, 1))
    cdef int it, info = 0, n, stall = 0, count = 0
    cdef Py_ssize_t a, b, s
    cdef double val, prev = np.inf
    cdef double complex acc
    with nogil:
        _orth(V)
        for it in range(max_iters):
            if it % 2 == 0:
                n = <int>(k * DB)
                _compress_alice(&M[0, 0, 0, 0], DA, DB, &V[0, 0], k, &tmp[0], &K[0])
                info = _min_eig(&K[0], n, ws, True)
                if info != 0:
                    break
                for b in range(DB):
                    for s in range(k):
                        W[b, s] = ws.z[s * DB + b]
                for a in range(DA):
                    for b in range(DB):
                        acc = 0.0
                        for s in range(k):
                            acc = acc + V[a, s] * W[b, s]
                        psi[a, b] = acc
                _orth(W)
            else:
                n = <int>(DA * k)
                _compress_bob(&M[0, 0, 0, 0], DA, DB, &W[0, 0], k, &tmp[0], &K[0])
                info = _min_eig(&K[0], n, ws, True)
                if info != 0:
                    break
                for a in range(DA):
                    for s in range(k):
                        V[a, s] = ws.z[a * k + s]
                for a in range(DA):
                    for b in range(DB):
                        acc = 0.0
                        for s in range(k):
                            acc = acc + V[a, s] * W[b, s]
                        psi[a, b] = acc
                _orth(V)
            val = ws.w[0]
            hist[count] = val
            count += 1
            if prev - val < tol:
                stall += 1
            else:
                stall = 0
            prev = val
            if stall >= patience:
                break
    if info != 0:
        raise np.linalg.LinAlgError(f"zheevr failed with info={info}")
    h = np.asarray(hist)[:count].copy()
    return float(h[count - 1]), np.asarray(psi).reshape(-1).copy(), count, h


def grid_plane_min(M4, planes):
    cdef const double complex[:, :, :, ::1] M = np.ascontiguousarray(M4, dtype=np.complex128)
    cdef const double complex[:, :, ::1] P = np.ascontiguousarray(planes, dtype=np.complex128)
    cdef Py_ssize_t DA = M.shape[0], DB = M.shape[1], k = P.shape[2], N = P.shape[0], j
    cdef int n = <int>(k * DB)
    cdef double complex[::1] tmp = np.zeros(DA * DB * DB * k, dtype=np.complex128)
    cdef double complex[::1] K = np.zeros(n * n, dtype=np.complex128)
    cdef _Workspace space = _Workspace(n)
    cdef EigWork* ws = &space.ws
    cdef double[::1] out = np.zeros(N)
    cdef int info = 0
    with nogil:
        for j in range(N):
            _compress_alice(&M[0, 0, 0, 0], DA, DB, &P[j, 0, 0], k, &tmp[0], &K[0])
            info = _min_eig(&K[0], n, ws, False)
            if info != 0:
                break
            out[j] = ws.w[0]
    if info != 0:
        raise np.linalg.LinAlgError(f"zheevr failed with info={info}")
    return np.asarray(out)
