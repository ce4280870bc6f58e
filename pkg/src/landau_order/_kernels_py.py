"""Pure numpy fallback for the compiled kernels in ``_kernels.pyx``."""

import numpy as np

# n-block width per vectorized pass; bounds the (points x block) scratch array
_BLOCK_ELEMENTS = 1 << 22


def _cell(r2, dz, nucleus_charge, ball_charge, ball_radius, ball_offset):
    v = np.zeros(np.broadcast(r2, dz).shape)
    if nucleus_charge != 0.0:
        v -= nucleus_charge / np.sqrt(r2 + dz * dz)
    if ball_charge != 0.0:
        s = np.sqrt(r2 + (dz - ball_offset) ** 2)
        R = ball_radius
        inside = ball_charge * (3.0 * R * R - s * s) / (2.0 * R**3)
        with np.errstate(divide="ignore"):
            v += np.where(s < R, inside, ball_charge / s)
    return v


def chain_sum(r, z, period, nucleus_charge, ball_charge, ball_radius, ball_offset,
              log_coef, tol, n_max):
    r = np.ascontiguousarray(r, dtype=np.float64)
    z = np.ascontiguousarray(z, dtype=np.float64)
    args = (nucleus_charge, ball_charge, ball_radius, ball_offset)
    r2 = r * r
    s = _cell(r2, z, *args) + _cell(r2, z - period, *args) + _cell(r2, z + period, *args)
    val = s.copy()
    prev = s.copy()
    used = np.ones(r.shape, dtype=np.int64)
    ok = np.zeros(r.shape, dtype=bool)
    active = np.arange(r.size)
    N = 1
    while N < n_max and active.size:
        ra2 = r2[active, None]
        za = z[active, None]
        width = max(1, _BLOCK_ELEMENTS // active.size)
        acc = s[active]
        for lo in range(N + 1, 2 * N + 1, width):
            k = np.arange(lo, min(lo + width, 2 * N + 1), dtype=np.float64)[None, :]
            block = _cell(ra2, za - k * period, *args) + _cell(ra2, za + k * period, *args)
            acc = acc + block.sum(axis=1)
        s[active] = acc
        N *= 2
        edge = 0.5 * (_cell(r2[active], z[active] - N * period, *args)
                      + _cell(r2[active], z[active] + N * period, *args))
        new = acc - edge + log_coef * np.log(float(N))
        prev[active] = val[active]
        val[active] = new
        used[active] = N
        hit = np.abs(new - prev[active]) < tol
        ok[active[hit]] = True
        active = active[~hit]
    return val, prev, used, ok
