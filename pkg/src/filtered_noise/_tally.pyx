# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled partition walker; see ``_tally_py`` for the reference version."""

DEF MAXN = 64

cdef struct Walk:
    int n
    bint relative
    bint adapted_only
    bint pair_only
    int nsub
    int open_blocks
    int color[MAXN]
    unsigned char blocked[MAXN][MAXN]
    int label[MAXN]
    int sub[MAXN]
    int sub_size[MAXN]
    int sub_color[MAXN]
    int block_size[MAXN]


cdef void _setup(Walk* w, color_ids, blocked, bint relative, bint adapted_only,
                 bint pair_only) except *:
    cdef int n = len(color_ids)
    cdef int i, m
    if n > MAXN:
        raise ValueError("ground set too large for the compiled walker")
    w.n = n
    w.relative = relative
    w.adapted_only = adapted_only
    w.pair_only = pair_only
    w.nsub = 0
    w.open_blocks = 0
    for i in range(n):
        w.color[i] = color_ids[i]
        row = blocked[i]
        for m in range(n):
            w.blocked[i][m] = 1 if row[m] else 0


cdef int _sub_for(Walk* w, int j, int b, int p) nogil:
    """Sub-block joined by position j when labelled b; -1 for a fresh one."""
    cdef int i, m
    cdef int cj = w.color[j]
    if b >= p:
        return -1
    i = j - 1
    while i >= 0 and not (w.label[i] == b and w.color[i] == cj):
        i -= 1
    if i < 0:
        return -1
    for m in range(i + 1, j):
        if w.blocked[i][m] and (not w.relative or w.label[m] != b):
            return -1
    return w.sub[i]


cdef object _profile(Walk* w, int p):
    cdef int s
    cdef int n1 = w.n + 1
    codes = sorted([w.sub_color[s] * n1 + w.sub_size[s] for s in range(w.nsub)])
    return (p, tuple(codes))


cdef void _place(Walk* w, int j, int p, dict counts, list rows) except *:
    cdef int b, s, k
    cdef bint fresh
    if j == w.n:
        if w.pair_only and w.open_blocks:
            return
        if rows is not None:
            rows.append(tuple([w.label[k] for k in range(w.n)]))
        else:
            key = _profile(w, p)
            counts[key] = counts.get(key, 0) + 1
        return
    for b in range(p + 1):
        if w.pair_only:
            if b < p and w.block_size[b] != 1:
                continue
            if b == p and w.open_blocks + 1 > w.n - j - 1:
                continue
        s = _sub_for(w, j, b, p)
        if s < 0 and b < p and w.adapted_only:
            continue
        w.label[j] = b
        fresh = s < 0
        if fresh:
            s = w.nsub
            w.sub_size[s] = 0
            w.sub_color[s] = w.color[j]
            w.nsub += 1
        w.sub[j] = s
        w.sub_size[s] += 1
        w.block_size[b] += 1
        if w.pair_only:
            w.open_blocks += 1 if w.block_size[b] == 1 else -1
        _place(w, j + 1, p + 1 if b == p else p, counts, rows)
        if w.pair_only:
            w.open_blocks -= 1 if w.block_size[b] == 1 else -1
        w.block_size[b] -= 1
        w.sub_size[s] -= 1
        if fresh:
            w.nsub -= 1


def tally(color_ids, blocked, relative, adapted_only, pair_only):
    cdef Walk w
    cdef dict counts = {}
    _setup(&w, color_ids, blocked, relative, adapted_only, pair_only)
    for k in range(w.n):
        w.block_size[k] = 0
    if w.n:
        _place(&w, 0, 0, counts, None)
    return counts


def collect(color_ids, blocked, relative, adapted_only, pair_only):
    cdef Walk w
    cdef list rows = []
    _setup(&w, color_ids, blocked, relative, adapted_only, pair_only)
    for k in range(w.n):
        w.block_size[k] = 0
    if w.n:
        _place(&w, 0, 0, {}, rows)
    return rows
