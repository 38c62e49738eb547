"""Compiled sampling kernels.

All randomness inside a kernel comes from numba's per-thread MT19937, which
every run reseeds from its own 32-bit seed.  A run is therefore a pure
function of ``(seed, inputs)`` no matter which thread executes it.
"""
import numpy as np
from numba import njit

# Inversion is used while the binomial mean stays at or below this value.
INVERSION_MEAN = 10.0


@njit(cache=True, nogil=True)
def _binomial_inversion(n, p):
    if n <= 0 or p <= 0.0:
        return 0
    if p >= 1.0:
        return n
    if p > 0.5:
        return n - _binomial_inversion(n, 1.0 - p)
    q = 1.0 - p
    ratio = p / q
    p0 = q**n
    while True:
        u = np.random.random()
        px = p0
        x = 0
        while x <= n:
            if u <= px:
                return x
            u -= px
            x += 1
            px *= (n - x + 1) * ratio / x
        # rounding left u above the total mass; draw again


@njit(cache=True, nogil=True)
def binomial(n, p):
    """Exact ``Bin(n, p)`` draw.

    Large means are reduced by conditioning on an order statistic of the
    ``n`` underlying uniforms (a Beta draw) until inversion is cheap.
    """
    if n <= 0 or p <= 0.0:
        return 0
    if p >= 1.0:
        return n
    total = 0
    while n * min(p, 1.0 - p) > INVERSION_MEAN:
        a = n // 2 + 1
        x = np.random.beta(a, n + 1 - a)
        if x >= p:
            n = a - 1
            p = p / x
        else:
            total += a
            n = n - a
            p = (p - x) / (1.0 - x)
    return total + _binomial_inversion(n, p)


@njit(cache=True, nogil=True)
def distinct_uniform(k, m, out):
    """Fill ``out[:k]`` with a uniform ``k``-subset of ``0..m-1`` (sorted)."""
    filled = 0
    while filled < k:
        for i in range(filled, k):
            out[i] = np.random.randint(0, m)
        out[:k].sort()
        # compact duplicates; the procedure is permutation invariant, so the
        # resulting subset is uniform
        w = 1
        for i in range(1, k):
            if out[i] != out[w - 1]:
                out[w] = out[i]
                w += 1
        filled = w if k > 0 else 0
    return k


@njit(cache=True, nogil=True)
def _draw_hits(K, sizes, probs, starts):
    """Pre-draw every ring hit of a ``K``-step walk.

    For ring ``r`` the ``K * N_r`` (step, member) slots are independent
    Bernoulli(``p_r``) trials; we draw their count and a uniform subset.
    Returns hits grouped by step: ``ptr`` (length ``K + 1``) and the global
    ring-table index of every hit.
    """
    R = sizes.shape[0] - 1
    counts = np.zeros(R + 1, dtype=np.int64)
    total = 0
    for r in range(1, R + 1):
        if probs[r] > 0.0 and sizes[r] > 0:
            h = binomial(K * sizes[r], probs[r])
            counts[r] = h
            total += h
    step = np.empty(total, dtype=np.int64)
    gidx = np.empty(total, dtype=np.int64)
    pos = 0
    for r in range(1, R + 1):
        h = counts[r]
        if h == 0:
            continue
        slots = np.empty(h, dtype=np.int64)
        distinct_uniform(h, K * sizes[r], slots)
        for i in range(h):
            s = slots[i]
            step[pos] = s // sizes[r]
            gidx[pos] = starts[r] + s % sizes[r]
            pos += 1
    ptr = np.zeros(K + 1, dtype=np.int64)
    for i in range(total):
        ptr[step[i] + 1] += 1
    for k in range(K):
        ptr[k + 1] += ptr[k]
    fill = ptr[:K].copy()
    ordered = np.empty(total, dtype=np.int64)
    for i in range(total):
        ordered[fill[step[i]]] = gidx[i]
        fill[step[i]] += 1
    return ptr, ordered


@njit(cache=True, nogil=True)
def explore_run(seed, N, K, first_root, sizes, probs, starts, dx, dy,
                used, pool, where, queue, parent, depth,
                z, revealed, isize, active, processed):
    """One breadth-first walk of at most ``K`` steps.  Returns steps taken.

    Workspaces (length ``n``): ``used, pool, where, queue, parent, depth``.
    Outputs: ``z`` (length ``K + 1``) and per-step ``revealed, isize,
    active, processed`` (length ``K``).
    """
    np.random.seed(seed)
    n = N * N
    for i in range(n):
        used[i] = False
        pool[i] = i
        where[i] = i
        parent[i] = -2
        depth[i] = -1
    pool_size = n
    ptr, hits = _draw_hits(K, sizes, probs, starts)
    head = 0
    tail = 0
    gen_end = 0
    z[0] = 0
    steps = 0
    for k in range(K):
        if head < tail:
            if head == gen_end:
                gen_end = tail
            j = np.random.randint(head, gen_end)
            v = queue[j]
            queue[j] = queue[head]
            queue[head] = v
            head += 1
        elif pool_size > 0:
            if k == 0 and first_root >= 0:
                v = first_root
            else:
                v = pool[np.random.randint(0, pool_size)]
            last = pool[pool_size - 1]
            pool[where[v]] = last
            where[last] = where[v]
            pool_size -= 1
            used[v] = True
            parent[v] = -1
            depth[v] = 0
        else:
            break
        processed[k] = v
        vx = v // N
        vy = v - vx * N
        cnt = 0
        for h in range(ptr[k], ptr[k + 1]):
            g = hits[h]
            ux = vx + dx[g]
            if ux >= N:
                ux -= N
            uy = vy + dy[g]
            if uy >= N:
                uy -= N
            u = ux * N + uy
            if not used[u]:
                used[u] = True
                last = pool[pool_size - 1]
                pool[where[u]] = last
                where[last] = where[u]
                pool_size -= 1
                parent[u] = v
                depth[u] = depth[v] + 1
                queue[tail] = u
                tail += 1
                cnt += 1
        revealed[k] = cnt
        z[k + 1] = z[k] - 1 + cnt
        isize[k] = n - pool_size
        active[k] = tail - head
        steps = k + 1
    return steps


@njit(cache=True, nogil=True)
def explore_batch(seeds, N, K, sizes, probs, starts, dx, dy,
                  z, revealed, isize, active, processed, steps):
    """Run ``len(seeds)`` independent walks, writing row ``i`` of each output."""
    n = N * N
    used = np.zeros(n, dtype=np.bool_)
    pool = np.empty(n, dtype=np.int64)
    where = np.empty(n, dtype=np.int64)
    queue = np.empty(n, dtype=np.int64)
    parent = np.empty(n, dtype=np.int64)
    depth = np.empty(n, dtype=np.int64)
    zr = np.empty(K + 1, dtype=np.int64)
    rv = np.empty(K, dtype=np.int64)
    iz = np.empty(K, dtype=np.int64)
    ac = np.empty(K, dtype=np.int64)
    pr = np.empty(K, dtype=np.int64)
    for i in range(seeds.shape[0]):
        s = explore_run(seeds[i], N, K, -1, sizes, probs, starts, dx, dy,
                        used, pool, where, queue, parent, depth,
                        zr, rv, iz, ac, pr)
        steps[i] = s
        for k in range(s + 1):
            z[i, k] = zr[k]
        for k in range(s):
            revealed[i, k] = rv[k]
            isize[i, k] = iz[k]
            active[i, k] = ac[k]
            processed[i, k] = pr[k]


@njit(cache=True, nogil=True)
def offspring_sums(seed, sizes, probs, count, out):
    """``out[i] = sum_r Bin(N_r, p_r)`` drawn directly, ring by ring."""
    np.random.seed(seed)
    R = sizes.shape[0]
    for i in range(count):
        t = 0
        for r in range(R):
            t += binomial(sizes[r], probs[r])
        out[i] = t


@njit(cache=True, nogil=True)
def binomial_fill(seed, n, p, out):
    np.random.seed(seed)
    for i in range(out.shape[0]):
        out[i] = binomial(n, p)
