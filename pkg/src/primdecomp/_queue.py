"""Array-backed binary min-heap of merge candidates with lazy invalidation.

An entry is ``(cost, merged_size, seq, a, b, gen_a, gen_b)``, ordered by the
first three fields. Popping skips entries whose generation stamps no longer
match the caller's ``gen`` array.
"""
from __future__ import annotations

import numpy as np
from numba import njit

# integer columns
_SIZE, _SEQ, _A, _B, _GA, _GB = range(6)


@njit(cache=True)
def _less(kc, ki, i, j):
    if kc[i] != kc[j]:
        return kc[i] < kc[j]
    if ki[i, _SIZE] != ki[j, _SIZE]:
        return ki[i, _SIZE] < ki[j, _SIZE]
    return ki[i, _SEQ] < ki[j, _SEQ]


@njit(cache=True)
def _swap(kc, ki, i, j):
    t = kc[i]
    kc[i] = kc[j]
    kc[j] = t
    for c in range(6):
        u = ki[i, c]
        ki[i, c] = ki[j, c]
        ki[j, c] = u


@njit(cache=True)
def _sift_up(kc, ki, i):
    while i > 0:
        p = (i - 1) >> 1
        if _less(kc, ki, i, p):
            _swap(kc, ki, i, p)
            i = p
        else:
            break


@njit(cache=True)
def _sift_down(kc, ki, i, n):
    while True:
        l = 2 * i + 1
        if l >= n:
            break
        m = l
        r = l + 1
        if r < n and _less(kc, ki, r, l):
            m = r
        if _less(kc, ki, m, i):
            _swap(kc, ki, i, m)
            i = m
        else:
            break


@njit(cache=True)
def push_batch(kc, ki, n, cost, size, seq, a, b, ga, gb):
    for j in range(cost.shape[0]):
        kc[n] = cost[j]
        ki[n, _SIZE] = size[j]
        ki[n, _SEQ] = seq[j]
        ki[n, _A] = a[j]
        ki[n, _B] = b[j]
        ki[n, _GA] = ga[j]
        ki[n, _GB] = gb[j]
        _sift_up(kc, ki, n)
        n += 1
    return n


@njit(cache=True)
def pop_valid(kc, ki, n, gen):
    """Pop until a live entry surfaces. Returns ``(n, found, cost, a, b, popped)``."""
    popped = 0
    while n > 0:
        cost = kc[0]
        a = ki[0, _A]
        b = ki[0, _B]
        live = gen[a] == ki[0, _GA] and gen[b] == ki[0, _GB]
        n -= 1
        if n > 0:
            kc[0] = kc[n]
            for c in range(6):
                ki[0, c] = ki[n, c]
            _sift_down(kc, ki, 0, n)
        popped += 1
        if live:
            return n, True, cost, a, b, popped
    return n, False, 0.0, -1, -1, popped


class MergeQueue:
    def __init__(self, capacity: int = 1024):
        capacity = max(int(capacity), 16)
        self.kc = np.empty(capacity)
        self.ki = np.empty((capacity, 6), dtype=np.int64)
        self.n = 0

    def __len__(self) -> int:
        return self.n

    def _reserve(self, extra: int) -> None:
        need = self.n + extra
        if need <= len(self.kc):
            return
        cap = max(need, 2 * len(self.kc))
        kc = np.empty(cap)
        ki = np.empty((cap, 6), dtype=np.int64)
        kc[: self.n] = self.kc[: self.n]
        ki[: self.n] = self.ki[: self.n]
        self.kc, self.ki = kc, ki

    def push(self, cost, size, seq, a, b, ga, gb) -> None:
        m = len(cost)
        if m == 0:
            return
        self._reserve(m)
        self.n = push_batch(self.kc, self.ki, self.n, cost, size, seq, a, b, ga, gb)

    def pop(self, gen: np.ndarray):
        """``(found, cost, a, b, popped)`` for the cheapest live entry."""
        self.n, found, cost, a, b, popped = pop_valid(self.kc, self.ki, self.n, gen)
        return found, float(cost), int(a), int(b), int(popped)
