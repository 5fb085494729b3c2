# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled slot loop.  Same inputs, outputs and draws as ``_kernel_py.run``."""
import numpy as np
cimport numpy as cnp
from libc.stdint cimport uint64_t, int64_t, int8_t

cnp.import_array()

cdef enum:
    ROUTE = 0
    QUALITY = 1
    SAMPLE = 2
    ERROR = 3
    PEER1 = 4
    PEER2 = 5
    LEAVE = 6
    ENTRY = 7
    TRAIN_SELECT = 8
    INITIAL = 9
    TRAIN_BASE = 16


cdef inline double _u(uint64_t key, uint64_t slot, uint64_t pop, uint64_t w, uint64_t stream) nogil:
    cdef uint64_t ctr = ((slot * pop + w) << 16) | stream
    cdef uint64_t z = key + (ctr + 1) * <uint64_t>0x9E3779B97F4A7C15ULL
    z = (z ^ (z >> 30)) * <uint64_t>0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * <uint64_t>0x94D049BB133111EBULL
    z = z ^ (z >> 31)
    return <double>(z >> 11) * (1.0 / 9007199254740992.0)


def run(uint64_t key, Py_ssize_t population, Py_ssize_t horizon, Py_ssize_t cutoff,
        Py_ssize_t n_tasks, bint has_training,
        double beta_w, double alpha_w, double eps, double alpha_t, double delta,
        double pi0, double q_w, double q_t,
        double util_accept, double util_reject, double util_train):
    cdef Py_ssize_t pop = population
    cdef cnp.ndarray[int64_t, ndim=2] counts_a = np.zeros((horizon, 9), dtype=np.int64)
    cdef cnp.ndarray[int64_t, ndim=1] occ_a = np.zeros(horizon + 1, dtype=np.int64)
    cdef Py_ssize_t cap = pop * (cutoff + 1) + pop
    cdef cnp.ndarray[double, ndim=1] life_vals_a = np.empty(cap, dtype=np.float64)
    cdef cnp.ndarray[int8_t, ndim=1] life_start_a = np.empty(cap, dtype=np.int8)

    cdef int64_t[:, :] counts = counts_a
    cdef int64_t[:] occ = occ_a
    cdef double[:] life_vals = life_vals_a
    cdef int8_t[:] life_start = life_start_a

    cdef int8_t[:] state = np.empty(pop, dtype=np.int8)
    cdef int8_t[:] nxt = np.empty(pop, dtype=np.int8)
    cdef int8_t[:] start_state = np.empty(pop, dtype=np.int8)
    cdef int64_t[:] born = np.zeros(pop, dtype=np.int64)
    cdef double[:] acc = np.zeros(pop, dtype=np.float64)
    cdef int8_t[:] acceptable = np.zeros(pop, dtype=np.int8)
    cdef int64_t[:] widx = np.empty(pop, dtype=np.int64)

    cdef Py_ssize_t n_life = 0, t, w, i, k, n_work, j1, j2
    cdef int64_t acc_tasks, acc_accept, acc_sampled, cons_tasks, cons_accept, cons_paid
    cdef int64_t train_rounds, train_sel, train_pass
    cdef int own, n_ok, accepted, passed, ok
    cdef uint64_t upop = <uint64_t>pop

    with nogil:
        for w in range(pop):
            state[w] = 1 if _u(key, 0, upop, w, INITIAL) < pi0 else 0
            start_state[w] = state[w]

        for t in range(horizon):
            n_work = 0
            for w in range(pop):
                nxt[w] = state[w]
                if state[w] == 1:
                    widx[n_work] = w
                    n_work += 1
                    acceptable[w] = 1 if _u(key, t, upop, w, QUALITY) < q_w else 0
            occ[t] = n_work

            acc_tasks = acc_accept = acc_sampled = 0
            cons_tasks = cons_accept = cons_paid = 0
            train_rounds = train_sel = train_pass = 0

            for i in range(n_work):
                w = widx[i]
                own = acceptable[w]
                if _u(key, t, upop, w, ROUTE) < beta_w:
                    acc_tasks += 1
                    if _u(key, t, upop, w, SAMPLE) < alpha_w:
                        acc_sampled += 1
                        accepted = own ^ (1 if _u(key, t, upop, w, ERROR) < eps else 0)
                    else:
                        accepted = 1
                    acc_accept += accepted
                else:
                    cons_tasks += 1
                    accepted = 0
                    if n_work >= 2:
                        j1 = <Py_ssize_t>(_u(key, t, upop, w, PEER1) * <double>(n_work - 1))
                        j2 = <Py_ssize_t>(_u(key, t, upop, w, PEER2) * <double>(n_work - 1))
                        if j1 >= i:
                            j1 += 1
                        if j2 >= i:
                            j2 += 1
                        n_ok = own + acceptable[widx[j1]] + acceptable[widx[j2]]
                        if n_ok >= 2:
                            accepted = own
                            cons_paid += n_ok
                    cons_accept += accepted
                if accepted:
                    acc[w] += util_accept
                else:
                    acc[w] += util_reject
                    if has_training:
                        nxt[w] = 0

            for w in range(pop):
                if state[w] != 0:
                    continue
                train_rounds += 1
                passed = 1
                if _u(key, t, upop, w, TRAIN_SELECT) < alpha_t:
                    train_sel += 1
                    for k in range(n_tasks):
                        ok = (1 if _u(key, t, upop, w, TRAIN_BASE + 2 * k) < q_t else 0) ^ \
                             (1 if _u(key, t, upop, w, TRAIN_BASE + 1 + 2 * k) < eps else 0)
                        if not ok:
                            passed = 0
                            break
                if passed:
                    train_pass += 1
                    nxt[w] = 1
                acc[w] += util_train

            counts[t, 0] = acc_tasks
            counts[t, 1] = acc_accept
            counts[t, 2] = acc_sampled
            counts[t, 3] = cons_tasks
            counts[t, 4] = cons_accept
            counts[t, 5] = cons_paid
            counts[t, 6] = train_rounds
            counts[t, 7] = train_sel
            counts[t, 8] = train_pass

            for w in range(pop):
                if _u(key, t, upop, w, LEAVE) >= delta:
                    if born[w] <= cutoff:
                        life_vals[n_life] = acc[w]
                        life_start[n_life] = start_state[w]
                        n_life += 1
                    nxt[w] = 1 if _u(key, t, upop, w, ENTRY) < pi0 else 0
                    start_state[w] = nxt[w]
                    acc[w] = 0.0
                    born[w] = t + 1
            for w in range(pop):
                state[w] = nxt[w]

        n_work = 0
        for w in range(pop):
            if state[w] == 1:
                n_work += 1
            if born[w] <= cutoff:
                life_vals[n_life] = acc[w]
                life_start[n_life] = start_state[w]
                n_life += 1
        occ[horizon] = n_work

    return counts_a, occ_a, life_vals_a[:n_life].copy(), life_start_a[:n_life].copy()
