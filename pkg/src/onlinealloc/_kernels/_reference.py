"""Pure-Python dual-loop kernel.

Same contract as the compiled ``_core`` module; used when the extension is
not built or ``ONLINEALLOC_PURE=1`` is set.
"""

import math

import numpy as np

EUCLIDEAN = 0
SHIFTED_ENTROPY = 1


def dual_segment(rewards, consumption, n_actions, rho, mu0, rem0, eta, kind, shift,
                 mu_max, lo, hi):
    """Run the greedy/mirror-descent loop over requests ``lo..hi-1``.

    Returns ``(actions, mu_used, remaining, phi_sq, mu_final)`` where
    ``actions`` holds menu slots, ``mu_used[i]`` is the dual used at step
    ``lo+i``, ``remaining[i]`` is the budget after that step and
    ``phi_sq[i]`` the squared max-norm of the subgradient.
    """
    n = hi - lo
    m = len(rho)
    R = rewards[lo:hi].tolist()
    G = consumption[lo:hi].tolist()
    na = n_actions[lo:hi].tolist()
    rho_l = [float(x) for x in rho]
    mmax = [float(x) for x in mu_max]
    mu = [float(x) for x in mu0]
    rem = [float(x) for x in rem0]
    eta = float(eta)
    actions = [0] * n
    mu_used = [None] * n
    rem_out = [None] * n
    phi_sq = [0.0] * n
    exp = math.exp
    for i in range(n):
        Ri, Gi = R[i], G[i]
        best = -1
        best_score = 0.0
        best_reward = 0.0
        for a in range(na[i]):
            g = Gi[a]
            ok = True
            for j in range(m):
                if g[j] > rem[j]:
                    ok = False
                    break
            if not ok:
                continue
            s = Ri[a]
            for j in range(m):
                s -= mu[j] * g[j]
            if best < 0 or s > best_score or (s == best_score and Ri[a] > best_reward):
                best, best_score, best_reward = a, s, Ri[a]
        actions[i] = best
        mu_used[i] = list(mu)
        g = Gi[best]
        big = 0.0
        for j in range(m):
            rem[j] -= g[j]
            phi = rho_l[j] - g[j]
            if abs(phi) > big:
                big = abs(phi)
            if eta > 0.0:
                if kind == EUCLIDEAN:
                    v = mu[j] - eta * phi
                else:
                    v = (mu[j] + shift) * exp(-eta * phi) - shift
                if v < 0.0:
                    v = 0.0
                elif v > mmax[j]:
                    v = mmax[j]
                mu[j] = v
        rem_out[i] = list(rem)
        phi_sq[i] = big * big
    return (np.array(actions, dtype=np.int64),
            np.array(mu_used, dtype=float).reshape(n, m),
            np.array(rem_out, dtype=float).reshape(n, m),
            np.array(phi_sq, dtype=float),
            np.array(mu, dtype=float))
