"""Compiled simulation loops.

One loop serves both algorithms. ``reward_mode`` selects the reward:

* ``SELECTED``: change of the selected objective, rejected moves earn 0,
  and, when ``use_penalty`` is set, accepted moves that leave the selected
  objective unchanged earn ``-penalty``. With the penalty this is LRSAO.
* ``TARGET``: change of Jump between consecutive individuals, with the same
  optional penalty branch.

The arithmetic of the Q update and the order of random draws must stay in
lockstep with ``agent.q_update`` and ``engine.lrsao_step``.
"""

import numpy as np
from numba import njit

SELECTED = 0
TARGET = 1

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_INV53 = 1.0 / 9007199254740992.0
_TINY = 5e-324  # smallest positive subnormal double


@njit(cache=True)
def next_u64(st):
    st[0] += _GOLDEN
    z = st[0]
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@njit(cache=True)
def next_float(st):
    return np.float64(next_u64(st) >> _S11) * _INV53


@njit(cache=True)
def below(st, k):
    i = np.int64(next_float(st) * k)
    if i >= k:
        i = k - 1
    return i


@njit(cache=True)
def objective(a, w, n, ell):
    if a == 0:
        return w if w <= ell + 1 else 0
    if a == 1:
        if (ell + 1 <= w and w <= n - ell - 1) or w == n:
            return w
        return 0
    return w if w >= n - ell - 1 else 0


@njit(cache=True)
def _grow(a):
    b = np.zeros((2 * a.shape[0], a.shape[1]), dtype=a.dtype)
    b[: a.shape[0]] = a
    return b


@njit(cache=True)
def simulate(
    n,
    ell,
    alpha,
    gamma,
    penalty,
    use_penalty,
    reward_mode,
    restart_cutoff,
    max_iters,
    bitstring,
    seed,
    record,
    stop_weight,
):
    """Run one trajectory from the all-zeros string.

    Returns ``(T, t1, t12, censored, w, visits, action_counts, q, n_restarts,
    trace_ints, trace_floats, n_records)``. ``t1``/``t12`` are -1 when the
    weights ``ell + 1`` / ``n - ell`` were never reached. ``trace_ints``
    columns: w_before, dir, action, accepted, s_before, s_after, restart.
    ``trace_floats`` columns: reward, q_new.
    """
    st = np.empty(1, dtype=np.uint64)
    st[0] = np.uint64(seed)
    q = np.zeros((n + 1, 3), dtype=np.float64)
    bits = np.zeros(n if bitstring else 1, dtype=np.uint8)
    visits = np.zeros(n + 1, dtype=np.int64)
    visits[0] = 1
    counts = np.zeros((n + 1, 3), dtype=np.int64)

    cap = 1024 if record else 1
    tint = np.zeros((cap, 7), dtype=np.int64)
    tflt = np.zeros((cap, 2), dtype=np.float64)
    n_rec = 0

    w = 0
    s = 0
    t = 0
    t1 = -1
    t12 = -1
    censored = False
    best = 0
    since = 0
    n_restarts = 0
    cand = np.empty(3, dtype=np.int64)

    while s < n and w != stop_weight:
        if t >= max_iters:
            censored = True
            break
        # (1) mutation draw
        i = below(st, n)
        if bitstring:
            up = bits[i] == 0
        else:
            up = i >= w
        w_new = w + 1 if up else w - 1

        # (2) greedy selection, tie draw only when needed
        m = q[s, 0]
        if q[s, 1] > m:
            m = q[s, 1]
        if q[s, 2] > m:
            m = q[s, 2]
        k = 0
        for a in range(3):
            if q[s, a] == m:
                cand[k] = a
                k += 1
        if k == 1:
            a = cand[0]
        else:
            a = cand[below(st, k)]

        f_old = objective(a, w, n, ell)
        f_new = objective(a, w_new, n, ell)
        accepted = f_new >= f_old
        w_next = w_new if accepted else w
        s_next = objective(1, w_next, n, ell)

        if accepted and f_new == f_old and use_penalty:
            reward = -penalty
        elif reward_mode == SELECTED:
            reward = np.float64(f_new - f_old) if accepted else 0.0
        else:
            reward = np.float64(s_next - s)

        mx = q[s_next, 0]
        if q[s_next, 1] > mx:
            mx = q[s_next, 1]
        if q[s_next, 2] > mx:
            mx = q[s_next, 2]
        old = q[s, a]
        new = (1.0 - alpha) * old + alpha * (reward + gamma * mx)
        # keep the sign the exact update would have when underflow flushes it to zero
        if new == 0.0:
            if old > 0.0 and reward >= 0.0 and mx >= 0.0:
                new = _TINY
            elif old < 0.0 and reward <= 0.0 and mx <= 0.0:
                new = -_TINY
        q[s, a] = new
        counts[s, a] += 1

        if record:
            if n_rec == tint.shape[0]:
                tint = _grow(tint)
                tflt = _grow(tflt)
            tint[n_rec, 0] = w
            tint[n_rec, 1] = 1 if up else -1
            tint[n_rec, 2] = a
            tint[n_rec, 3] = 1 if accepted else 0
            tint[n_rec, 4] = s
            tint[n_rec, 5] = s_next
            tint[n_rec, 6] = 0
            tflt[n_rec, 0] = reward
            tflt[n_rec, 1] = new
            n_rec += 1

        if accepted and bitstring:
            bits[i] ^= 1
        if w_next != w:
            visits[w_next] += 1
        w = w_next
        s = s_next
        t += 1
        if t1 < 0 and w == ell + 1:
            t1 = t
        if t12 < 0 and w == n - ell:
            t12 = t

        if restart_cutoff > 0 and s < n:
            if s > best:
                best = s
                since = 0
            else:
                since += 1
                if since >= restart_cutoff:
                    n_restarts += 1
                    w = 0
                    s = 0
                    best = 0
                    since = 0
                    q[:, :] = 0.0
                    bits[:] = 0
                    visits[0] += 1
                    if record:
                        tint[n_rec - 1, 6] = 1

    return (t, t1, t12, censored, w, visits, counts, q, n_restarts,
            tint[:n_rec], tflt[:n_rec], n_rec)


@njit(cache=True)
def simulate_batch(
    n,
    ell,
    alpha,
    gamma,
    penalty,
    use_penalty,
    reward_mode,
    restart_cutoff,
    max_iters,
    bitstring,
    seeds,
    stop_weight,
):
    """Untraced runs, one per seed. Returns an ``(m, 5)`` array of
    ``T, T1, T1+T2, censored, n_restarts`` per run."""
    m = seeds.shape[0]
    out = np.empty((m, 5), dtype=np.int64)
    for j in range(m):
        res = simulate(n, ell, alpha, gamma, penalty, use_penalty, reward_mode,
                       restart_cutoff, max_iters, bitstring, seeds[j], False, stop_weight)
        out[j, 0] = res[0]
        out[j, 1] = res[1]
        out[j, 2] = res[2]
        out[j, 3] = 1 if res[3] else 0
        out[j, 4] = res[8]
    return out
