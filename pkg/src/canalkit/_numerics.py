"""Small numeric kernels: Gauss-Legendre tails, finite-difference stencils."""

import numpy as np

_GL_X, _GL_W = np.polynomial.legendre.leggauss(20)


def gl_integrate(fun, a, b):
    """Integrate ``fun`` over [a, b] elementwise with 20-point Gauss-Legendre.

    ``a`` and ``b`` broadcast; ``fun`` must accept an array of nodes with
    shape ``broadcast(a, b).shape + (20,)`` and return the same shape.
    """
    a = np.asarray(a, dtype=float)[..., None]
    b = np.asarray(b, dtype=float)[..., None]
    half = 0.5 * (b - a)
    nodes = a + half * (_GL_X + 1.0)
    return np.sum(fun(nodes) * _GL_W, axis=-1) * half[..., 0]


def adaptive_gl(fun, a, b, tol=1e-13, depth=0, max_depth=30):
    """Adaptive Gauss-Legendre: bisect until the 20-point rule agrees with its halves."""
    whole = float(gl_integrate(fun, a, b))
    m = 0.5 * (a + b)
    left, right = float(gl_integrate(fun, a, m)), float(gl_integrate(fun, m, b))
    if abs(left + right - whole) <= tol or depth >= max_depth:
        return left + right
    return (adaptive_gl(fun, a, m, 0.5 * tol, depth + 1, max_depth)
            + adaptive_gl(fun, m, b, 0.5 * tol, depth + 1, max_depth))


def fd5(fun, x, h, order):
    """Five-point central difference of ``fun`` at ``x`` (order 1, 2 or 3).

    The result has shape ``np.shape(fun(x))``.
    """
    x = np.asarray(x, dtype=float)
    fm2, fm1, fp1, fp2 = (np.asarray(fun(x + k * h)) for k in (-2, -1, 1, 2))
    if order == 1:
        return (fm2 - 8 * fm1 + 8 * fp1 - fp2) / (12 * h)
    if order == 2:
        f0 = np.asarray(fun(x))
        return (-fm2 + 16 * fm1 - 30 * f0 + 16 * fp1 - fp2) / (12 * h * h)
    if order == 3:
        return (-fm2 + 2 * fm1 - 2 * fp1 + fp2) / (2 * h ** 3)
    raise ValueError("order must be 1, 2 or 3")


def wrap_angle(theta):
    return np.mod(theta, 2 * np.pi)
