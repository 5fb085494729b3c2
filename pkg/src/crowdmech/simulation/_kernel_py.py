"""Vectorised numpy implementation of the slot loop (fallback backend).

Mirrors ``_kernel.pyx`` operation for operation so that both backends
return bit-identical arrays for the same inputs.
"""
from __future__ import annotations

import numpy as np

from . import _rng as R

TRAIN_CHUNK = 64


def run(key, population, horizon, cutoff, n_tasks, has_training,
        beta_w, alpha_w, eps, alpha_t, delta, pi0, q_w, q_t,
        util_accept, util_reject, util_train):
    pop = population
    all_w = np.arange(pop, dtype=np.int64)

    counts = np.zeros((horizon, 9), dtype=np.int64)
    occupancy = np.zeros(horizon + 1, dtype=np.int64)
    life_vals = np.empty(pop * (cutoff + 1) + pop, dtype=np.float64)
    life_start = np.empty(life_vals.shape[0], dtype=np.int8)
    n_life = 0

    state = (R.uniforms(key, 0, pop, all_w, R.INITIAL) < pi0).astype(np.int8)
    start_state = state.copy()
    born = np.zeros(pop, dtype=np.int64)
    acc = np.zeros(pop, dtype=np.float64)

    for t in range(horizon):
        nxt = state.copy()
        widx = np.flatnonzero(state == 1)
        n_work = widx.shape[0]
        occupancy[t] = n_work
        acceptable = np.zeros(pop, dtype=bool)
        acceptable[widx] = R.uniforms(key, t, pop, widx, R.QUALITY) < q_w

        accepted = np.zeros(n_work, dtype=bool)
        to_acc = R.uniforms(key, t, pop, widx, R.ROUTE) < beta_w

        # spot-checked submissions
        ai = np.flatnonzero(to_acc)
        aw = widx[ai]
        sampled = R.uniforms(key, t, pop, aw, R.SAMPLE) < alpha_w
        flip = R.uniforms(key, t, pop, aw, R.ERROR) < eps
        ok = np.where(sampled, acceptable[aw] ^ flip, True)
        accepted[ai] = ok

        # consensus triads
        ci = np.flatnonzero(~to_acc)
        cw = widx[ci]
        cons_accept = cons_paid = 0
        if ci.shape[0] and n_work >= 2:
            j1 = (R.uniforms(key, t, pop, cw, R.PEER1) * (n_work - 1)).astype(np.int64)
            j2 = (R.uniforms(key, t, pop, cw, R.PEER2) * (n_work - 1)).astype(np.int64)
            j1 += j1 >= ci
            j2 += j2 >= ci
            own = acceptable[cw]
            n_ok = own.astype(np.int64) + acceptable[widx[j1]] + acceptable[widx[j2]]
            agree = n_ok >= 2
            accepted[ci] = own & agree
            cons_accept = int(np.count_nonzero(accepted[ci]))
            cons_paid = int(n_ok[agree].sum())

        acc[widx] += np.where(accepted, util_accept, util_reject)
        if has_training:
            nxt[widx[~accepted]] = 0

        # training rounds
        tidx = np.flatnonzero(state == 0)
        n_sel = n_pass = 0
        if tidx.shape[0]:
            sel = R.uniforms(key, t, pop, tidx, R.TRAIN_SELECT) < alpha_t
            passed = ~sel
            alive = tidx[sel]
            for k0 in range(0, n_tasks, TRAIN_CHUNK):
                if alive.shape[0] == 0:
                    break
                ks = np.arange(k0, min(k0 + TRAIN_CHUNK, n_tasks), dtype=np.int64)
                qs = R.uniforms(key, t, pop, alive[:, None], R.TRAIN_BASE + 2 * ks[None, :]) < q_t
                es = R.uniforms(key, t, pop, alive[:, None], R.TRAIN_BASE + 1 + 2 * ks[None, :]) < eps
                alive = alive[np.all(qs ^ es, axis=1)]
            passed_w = np.concatenate([tidx[~sel], alive])
            n_sel = int(np.count_nonzero(sel))
            n_pass = passed_w.shape[0]
            nxt[passed_w] = 1
            acc[tidx] += util_train

        counts[t] = (ai.shape[0], int(np.count_nonzero(accepted[ai])), int(np.count_nonzero(sampled)),
                     ci.shape[0], cons_accept, cons_paid, tidx.shape[0], n_sel, n_pass)

        # churn
        leave = R.uniforms(key, t, pop, all_w, R.LEAVE) >= delta
        dep = np.flatnonzero(leave)
        rec = dep[born[dep] <= cutoff]
        life_vals[n_life:n_life + rec.shape[0]] = acc[rec]
        life_start[n_life:n_life + rec.shape[0]] = start_state[rec]
        n_life += rec.shape[0]
        entry = (R.uniforms(key, t, pop, dep, R.ENTRY) < pi0).astype(np.int8)
        nxt[dep] = entry
        start_state[dep] = entry
        acc[dep] = 0.0
        born[dep] = t + 1
        state = nxt

    occupancy[horizon] = np.count_nonzero(state == 1)
    rec = np.flatnonzero(born <= cutoff)
    life_vals[n_life:n_life + rec.shape[0]] = acc[rec]
    life_start[n_life:n_life + rec.shape[0]] = start_state[rec]
    n_life += rec.shape[0]
    return counts, occupancy, life_vals[:n_life].copy(), life_start[:n_life].copy()
