"""Pure-numpy belief-propagation kernel, the fallback for bitlink._core.

Same update rules and clipping as the compiled kernel; the check-node
exclusion uses division by the edge's own tanh (zero-aware) instead of
prefix/suffix products, which can differ from the compiled path in the
last few bits but never in the decision semantics.
"""

import numpy as np

MSG_CLIP = 36.0
_ATANH_LIMIT = np.nextafter(1.0, 0.0)


def bp_decode(llr, row_ptr, edge_col, max_iter, min_sum, offset, max_degree):
    """Decode one frame; returns (hard_bits, iterations_used, parity_ok)."""
    llr = np.asarray(llr, dtype=np.float64)
    row_ptr = np.asarray(row_ptr)
    edge_col = np.asarray(edge_col)
    n = llr.shape[0]
    m = len(row_ptr) - 1
    n_edges = len(edge_col)
    starts = row_ptr[:-1]
    row_of_edge = np.repeat(np.arange(m), np.diff(row_ptr))
    edge_pos = np.arange(n_edges)
    msg = np.zeros(n_edges)
    hard = np.zeros(n, dtype=np.uint8)
    ok = 0
    iterations = 0
    for it in range(max_iter + 1):
        post = llr + np.bincount(edge_col, weights=msg, minlength=n)
        hard = (post < 0).astype(np.uint8)
        syn = np.add.reduceat(hard[edge_col].astype(np.int64), starts) & 1
        ok = 0 if syn.any() else 1
        iterations = it
        if ok or it == max_iter:
            break
        v = np.clip(post[edge_col] - msg, -MSG_CLIP, MSG_CLIP)
        if min_sum:
            a = np.abs(v)
            min1 = np.minimum.reduceat(a, starts)
            is_min = a == min1[row_of_edge]
            first_min = np.minimum.reduceat(
                np.where(is_min, edge_pos, n_edges), starts
            )
            a_excl = a.copy()
            a_excl[first_min] = np.inf
            min2 = np.minimum.reduceat(a_excl, starts)
            mags = min1[row_of_edge]
            mags[first_min] = min2
            mags = np.maximum(mags - offset, 0.0)
            neg_parity = np.add.reduceat((v < 0).astype(np.int64), starts) & 1
            row_sign = 1.0 - 2.0 * neg_parity
            sign = np.where(v >= 0, 1.0, -1.0) * row_sign[row_of_edge]
            msg = sign * mags
        else:
            t = np.tanh(0.5 * v)
            zero = t == 0.0
            t_safe = np.where(zero, 1.0, t)
            prod = np.multiply.reduceat(t_safe, starts)
            zcount = np.add.reduceat(zero.astype(np.int64), starts)
            prod_e = prod[row_of_edge]
            zc_e = zcount[row_of_edge]
            excl = np.where(
                zc_e == 0,
                prod_e / t_safe,
                np.where((zc_e == 1) & zero, prod_e, 0.0),
            )
            np.clip(excl, -_ATANH_LIMIT, _ATANH_LIMIT, out=excl)
            msg = 2.0 * np.arctanh(excl)
    return hard, int(iterations), int(ok)
