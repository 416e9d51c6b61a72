"""Pure-Python partition walker; mirrors ``_tally.pyx`` line for line.

Both kernels walk restricted-growth strings depth first, building the
color/filter refinement incrementally: the sub-block of position j depends
only on positions before j, so it is settled as soon as j gets its label.
"""


def _walk(color_ids, blocked, relative, adapted_only, pair_only, leaf):
    n = len(color_ids)
    label = [0] * n
    sub = [0] * n
    sub_size = [0] * n
    sub_color = [0] * n
    block_size = [0] * n
    state = {"nsub": 0, "open": 0}

    def place(j, p):
        if j == n:
            if pair_only and state["open"]:
                return
            leaf(label, p, sub_size, sub_color, state["nsub"])
            return
        cj = color_ids[j]
        for b in range(p + 1):
            if pair_only:
                if b < p and block_size[b] != 1:
                    continue
                if b == p and state["open"] + 1 > n - j - 1:
                    continue
            s = -1
            if b < p:
                i = j - 1
                while i >= 0 and not (label[i] == b and color_ids[i] == cj):
                    i -= 1
                if i >= 0:
                    row = blocked[i]
                    cut = False
                    for m in range(i + 1, j):
                        if row[m] and (not relative or label[m] != b):
                            cut = True
                            break
                    if not cut:
                        s = sub[i]
                if s < 0 and adapted_only:
                    continue
            label[j] = b
            if s < 0:
                s = state["nsub"]
                sub_size[s] = 0
                sub_color[s] = cj
                state["nsub"] += 1
                fresh = True
            else:
                fresh = False
            sub[j] = s
            sub_size[s] += 1
            block_size[b] += 1
            if pair_only:
                state["open"] += 1 if block_size[b] == 1 else -1
            place(j + 1, p + 1 if b == p else p)
            if pair_only:
                state["open"] -= 1 if block_size[b] == 1 else -1
            block_size[b] -= 1
            sub_size[s] -= 1
            if fresh:
                state["nsub"] -= 1

    if n:
        place(0, 0)


def tally(color_ids, blocked, relative, adapted_only, pair_only):
    n = len(color_ids)
    out = {}

    def leaf(label, p, sub_size, sub_color, nsub):
        key = (p, tuple(sorted(sub_color[s] * (n + 1) + sub_size[s] for s in range(nsub))))
        out[key] = out.get(key, 0) + 1

    _walk(color_ids, blocked, relative, adapted_only, pair_only, leaf)
    return out


def collect(color_ids, blocked, relative, adapted_only, pair_only):
    out = []

    def leaf(label, p, sub_size, sub_color, nsub):
        out.append(tuple(label))

    _walk(color_ids, blocked, relative, adapted_only, pair_only, leaf)
    return out
