import numpy as np


def interior_points(geometry, n=50, seed=0):
    """Random chart points strictly inside a model geometry."""
    rng = np.random.default_rng(seed)
    u, v = rng.uniform(0.05, 0.95, n), rng.uniform(0, 2 * np.pi, n)
    if geometry.kind == "disk":
        r = geometry.radius * np.sqrt(u)
        return np.column_stack([r * np.cos(v), r * np.sin(v)])
    if geometry.kind == "annulus":
        return np.column_stack([geometry.r0 + u * (geometry.r1 - geometry.r0), v])
    return np.column_stack([u * geometry.theta0, v])
