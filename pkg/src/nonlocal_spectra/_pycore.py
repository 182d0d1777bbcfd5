"""Numpy implementations of the hot loops.

Same signatures and return conventions as the compiled ``_core`` module;
used when the extension is not built or NONLOCAL_SPECTRA_BACKEND=python.
"""
import numpy as np

# monotone_loop status codes
CONVERGED, MAX_ITER, NOT_MONOTONE, BELOW_FLOOR = 0, 1, 2, 3


def direct_convolve(f, g, dx):
    """Full discrete convolution dx * sum_j f[j] g[i - j]."""
    return dx * np.convolve(np.asarray(f, dtype=float), np.asarray(g, dtype=float))


def _window_weights(w, theta):
    weights = np.zeros(2 * w + 3)
    c = w + 1
    weights[c - w + 1:c + w] = 1.0
    weights[c - w] = weights[c + w] = 0.5 + theta - 0.5 * theta * theta
    weights[0] = weights[-1] = 0.5 * theta * theta
    return weights / (2.0 * (w + theta))


def window_average(u, w, theta, periodic):
    """Mean of the linear interpolant of ``u`` over +-(w + theta) cells."""
    u = np.asarray(u, dtype=float)
    weights = _window_weights(w, theta)
    pad = w + 1
    if periodic:
        padded = np.pad(u, pad, mode="wrap")
    else:
        padded = np.pad(u, pad)
    return np.convolve(padded, weights, mode="valid")


def power_iterate(B, x0, scale, tol, max_iter):
    """Plain power iteration x <- Bx/|Bx|.

    Returns (x, mu, residual, iterations); ``x`` has unit 2-norm and the
    residual is scale * |Bx - mu x|_inf, measured before the final update.
    ``iterations == max_iter`` with residual > tol means no convergence.
    """
    x = np.array(x0, dtype=float)
    x /= np.linalg.norm(x)
    mu = res = np.inf
    for it in range(1, max_iter + 1):
        y = B @ x
        mu = float(x @ y)
        res = scale * float(np.max(np.abs(y - mu * x)))
        if res <= tol:
            return x, mu, res, it
        x = y / np.linalg.norm(y)
    return x, mu, res, max_iter


def monotone_loop(W, rhs, u0, tau, tol, max_iter, direction, floor, mono_tol):
    """u <- u + tau * (W u - u + rhs(u)) until the sup-norm step drops below tol.

    Returns (u, iterations, steps, status, witness). ``witness`` is the
    index that broke monotonicity (status NOT_MONOTONE), else -1.
    """
    u = np.array(u0, dtype=float)
    steps = np.empty(max_iter)
    for it in range(1, max_iter + 1):
        du = tau * (W @ u - u + rhs(u))
        bad = du.min() < -mono_tol if direction > 0 else du.max() > mono_tol
        if bad:
            witness = int(np.argmin(du) if direction > 0 else np.argmax(du))
            return u, it, steps[:it - 1], NOT_MONOTONE, witness
        u += du
        s = float(np.max(np.abs(du)))
        steps[it - 1] = s
        if s < tol:
            return u, it, steps[:it], CONVERGED, -1
        if floor > 0 and u.max() <= floor:
            return u, it, steps[:it], BELOW_FLOOR, -1
    return u, max_iter, steps, MAX_ITER, -1


def kpp_monotone(W, a, u0, tau, tol, max_iter, direction, floor, mono_tol):
    """monotone_loop specialised to f(x, u) = u (a(x) - u)."""
    a = np.asarray(a, dtype=float)
    return monotone_loop(W, lambda u: u * (a - u), u0, tau, tol, max_iter, direction, floor, mono_tol)
