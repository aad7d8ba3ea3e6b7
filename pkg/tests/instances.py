import numpy as np

from mmselflabel.marginals import invert_permutation


def planted_alignment(seed, k=8, n=500, noise=0.05):
    """Log-posteriors with ``p_a[planted[y]] ~= p_b[y]`` plus posterior noise."""
    rng = np.random.default_rng(seed)
    z = rng.normal(size=(k, n))
    p_b = np.exp(z - z.max(axis=0))
    p_b /= p_b.sum(axis=0)
    planted = rng.permutation(k)
    p_a = p_b[invert_permutation(planted)] + rng.normal(scale=noise, size=(k, n))
    p_a = np.clip(p_a, 1e-6, None)
    p_a /= p_a.sum(axis=0)
    return np.log(p_a), np.log(p_b), planted
