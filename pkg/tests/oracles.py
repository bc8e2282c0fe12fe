"""Independent closed-form references shared by several test modules."""
import math

import numpy as np


def gaussian_moments(a, b, c, n):
    """Exact <x^i, y^j> for exp(-a x^2 - b y^2 + c x y), 0 <= i, j < n.

    Uses the Gaussian integration-by-parts recursion
    E[x^i y^j] = (i-1) Sxx E[x^(i-2) y^j] + j Sxy E[x^(i-1) y^(j-1)]
    and E[y^j] = (j-1) Syy E[y^(j-2)].
    """
    prec = np.array([[2 * a, -c], [-c, 2 * b]])
    cov = np.linalg.inv(prec)
    Z = 2 * math.pi / math.sqrt(np.linalg.det(prec))
    E = np.zeros((n + 1, n + 1))
    E[0, 0] = 1.0
    for j in range(n + 1):
        if j >= 2:
            E[0, j] = (j - 1) * cov[1, 1] * E[0, j - 2]
        for i in range(1, n + 1):
            E[i, j] = (i - 1) * cov[0, 0] * (E[i - 2, j] if i >= 2 else 0.0) + (
                j * cov[0, 1] * E[i - 1, j - 1] if j >= 1 else 0.0
            )
    return Z * E[:n, :n]


def shifted_gaussian_moments(b, lin, n):
    """int s^j exp(-b s^2 + lin s) ds for j < n (closed form)."""
    m = lin / (2 * b)
    var = 1 / (2 * b)
    Z = math.sqrt(math.pi / b) * math.exp(lin * lin / (4 * b))
    # raw moments of N(m, var): M_j = m M_{j-1} + (j-1) var M_{j-2}
    out = [1.0, m]
    for j in range(2, n):
        out.append(m * out[j - 1] + (j - 1) * var * out[j - 2])
    return Z * np.array(out[:n])
