"""
Information measures on discrete joint distributions (base 2).
"""

import numpy as np
from scipy.stats import entropy


def H(p) -> float:
    """Shannon entropy of a distribution; zero cells contribute nothing."""
    p = np.asarray(p, dtype=float).reshape(-1)
    return float(entropy(p[p > 0], base=2))


def mutual_information(joint) -> float:
    """I(X;Y) = H(X) + H(Y) - H(X,Y) for a joint table p(x, y) with rows x and columns y."""
    joint = np.asarray(joint, dtype=float)
    total = joint.sum()
    if not np.isclose(total, 1.0, atol=1e-9):
        raise ValueError(f"joint distribution sums to {total}, expected 1")
    return H(joint.sum(axis=1)) + H(joint.sum(axis=0)) - H(joint)
