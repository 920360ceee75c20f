# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled dual-loop kernel; see ``_reference.dual_segment`` for the contract."""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, fabs

cnp.import_array()

DEF EUCLIDEAN = 0


def dual_segment(const double[:, :] rewards, const double[:, :, :] consumption,
                 const long long[:] n_actions, const double[:] rho, mu0, rem0,
                 double eta, int kind, double shift, const double[:] mu_max,
                 Py_ssize_t lo, Py_ssize_t hi):
    cdef Py_ssize_t n = hi - lo
    cdef Py_ssize_t m = rho.shape[0]
    cdef cnp.ndarray[cnp.int64_t, ndim=1] actions_arr = np.empty(n, dtype=np.int64)
    cdef cnp.ndarray[double, ndim=2] mu_used_arr = np.empty((n, m), dtype=np.float64)
    cdef cnp.ndarray[double, ndim=2] rem_out_arr = np.empty((n, m), dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] phi_sq_arr = np.empty(n, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] mu_arr = np.array(mu0, dtype=np.float64).reshape(-1).copy()
    cdef cnp.ndarray[double, ndim=1] rem_arr = np.array(rem0, dtype=np.float64).reshape(-1).copy()
    cdef long long[:] actions = actions_arr
    cdef double[:, :] mu_used = mu_used_arr
    cdef double[:, :] rem_out = rem_out_arr
    cdef double[:] phi_sq = phi_sq_arr
    cdef double[:] mu = mu_arr
    cdef double[:] rem = rem_arr
    cdef Py_ssize_t i, t, a, j, best
    cdef double s, best_score, best_reward, phi, big, v
    cdef bint ok
    for i in range(n):
        t = lo + i
        best = -1
        best_score = 0.0
        best_reward = 0.0
        for a in range(n_actions[t]):
            ok = True
            for j in range(m):
                if consumption[t, a, j] > rem[j]:
                    ok = False
                    break
            if not ok:
                continue
            s = rewards[t, a]
            for j in range(m):
                s -= mu[j] * consumption[t, a, j]
            if best < 0 or s > best_score or (s == best_score and rewards[t, a] > best_reward):
                best = a
                best_score = s
                best_reward = rewards[t, a]
        actions[i] = best
        big = 0.0
        for j in range(m):
            mu_used[i, j] = mu[j]
            rem[j] -= consumption[t, best, j]
            rem_out[i, j] = rem[j]
            phi = rho[j] - consumption[t, best, j]
            if fabs(phi) > big:
                big = fabs(phi)
            if eta > 0.0:
                if kind == EUCLIDEAN:
                    v = mu[j] - eta * phi
                else:
                    v = (mu[j] + shift) * exp(-eta * phi) - shift
                if v < 0.0:
                    v = 0.0
                elif v > mu_max[j]:
                    v = mu_max[j]
                mu[j] = v
        phi_sq[i] = big * big
    return actions_arr, mu_used_arr, rem_out_arr, phi_sq_arr, mu_arr
