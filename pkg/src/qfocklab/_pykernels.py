"""Pure-Python/numpy versions of the hot loops in ``_ckernels.pyx``.

Same signatures and results; used when the compiled extension is missing or
``QFOCKLAB_PURE_PYTHON`` is set.
"""

import numpy as np


def gram_level(n, d, q, prev_block_of, prev_pos, prev_size, prev_data_off,
               prev_data, members, member_off, data_off):
    """Assemble the level-n Gram blocks from the level-(n-1) blocks.

    Uses G_n[w, v] = sum_{j : v_j = w_0} q**j G_{n-1}[tail(w), v minus j].
    Returns the flat float64 array of all blocks (row-major, laid out by
    ``data_off``).
    """
    out = np.zeros(int(data_off[-1]), dtype=np.float64)
    if n == 0:
        out[:] = 1.0
        return out
    pw = np.array([d ** k for k in range(n + 1)], dtype=np.int64)
    dn1 = pw[n - 1]
    qpow = q ** np.arange(n)
    for b in range(len(member_off) - 1):
        mem = members[member_off[b]:member_off[b + 1]]
        nb = len(mem)
        # letters of the column words and positions of their one-letter deletions
        los = pw[n - 1::-1][:n]
        vdig = (mem[:, None] // los[None, :]) % d
        dele = (mem[:, None] // pw[None, n:0:-1]) * los[None, :] + mem[:, None] % los[None, :]
        dpos = prev_pos[dele]
        first = mem // dn1
        tail = mem % dn1
        block = np.zeros((nb, nb))
        for a in np.unique(first):
            rows = np.flatnonzero(first == a)
            # all tails starting with letter a share one previous-level block
            tb = prev_block_of[tail[rows[0]]]
            m = prev_size[tb]
            prev = prev_data[prev_data_off[tb]:prev_data_off[tb] + m * m].reshape(m, m)
            sub = prev[prev_pos[tail[rows]]]
            acc = np.zeros((len(rows), nb))
            for j in range(n):
                cols = np.flatnonzero(vdig[:, j] == a)
                if len(cols):
                    acc[:, cols] += qpow[j] * sub[:, dpos[cols, j]]
            block[rows] = acc
        out[data_off[b]:data_off[b + 1]] = block.ravel()
    return out


def crossing_histogram(n):
    """Counts of pair partitions of {0..n-1} by number of crossings."""
    half = n // 2
    hist = [0] * (half * (half - 1) // 2 + 1)
    matched = [False] * n

    def rec(cross):
        i = 0
        while i < n and matched[i]:
            i += 1
        if i == n:
            hist[cross] += 1
            return
        matched[i] = True
        between = 0  # closers of open arcs strictly between i and j
        for j in range(i + 1, n):
            if matched[j]:
                between += 1
                continue
            matched[j] = True
            rec(cross + between)
            matched[j] = False
        matched[i] = False

    rec(0)
    return hist
