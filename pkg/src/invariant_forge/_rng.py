"""Seeded Gaussian sampling via the polar (Marsaglia) rejection method.

The uniform stream comes from numpy's PCG64; the normal transform is done
here rather than through ``Generator.normal`` so the produced stream is a
fixed, documented function of the seed alone.
"""

import numpy as np


def generator(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def standard_normals(rng: np.random.Generator, count: int) -> np.ndarray:
    """Draw ``count`` N(0,1) variates with the polar method.

    Accepted pairs are consumed in (z1, z2) order; leftovers from the final
    batch are discarded, so the output is a deterministic function of the
    generator state on entry.
    """
    out = np.empty(count, dtype=np.float64)
    filled = 0
    while filled < count:
        need = count - filled
        # acceptance rate is pi/4; oversize the batch to finish in ~1 round
        npairs = max(32, (need * 2) // 3 + 16)
        u = 2.0 * rng.random((2, npairs)) - 1.0
        s = u[0] * u[0] + u[1] * u[1]
        keep = (s > 0.0) & (s < 1.0)
        s_k = s[keep]
        f = np.sqrt(-2.0 * np.log(s_k) / s_k)
        z = np.empty(2 * s_k.size)
        z[0::2] = u[0, keep] * f
        z[1::2] = u[1, keep] * f
        take = min(z.size, need)
        out[filled : filled + take] = z[:take]
        filled += take
    return out


def unit_sphere_vector(rng: np.random.Generator, n: int) -> np.ndarray:
    """Uniform direction on the unit sphere in R^n."""
    while True:
        v = standard_normals(rng, n)
        norm = float(np.linalg.norm(v))
        if norm > 1e-12:
            return v / norm
