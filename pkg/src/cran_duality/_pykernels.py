"""NumPy implementations of the inner-loop kernels.

Signatures mirror ``_ckernels``; both are selected through ``cran_duality.kernels``.
"""
import numpy as np

CONVERGED, DIVERGED, MAX_ITERS = 0, 1, 2
RATIO_WINDOW = 8


def _mmse_gains(H, p, eta, sigma2):
    """``h_k^H (sum_{j!=k} p_j h_j h_j^H + Q(p) + sigma2 I)^{-1} h_k`` for every user.

    ``Q(p)`` is the diagonal quantization covariance at full fronthaul usage.
    """
    M, K = H.shape
    gains = np.abs(H) ** 2
    q = (gains @ p + sigma2) / eta
    outer = H.T[:, :, None] * H.T.conj()[:, None, :]  # outer[k] = h_k h_k^H
    full = np.tensordot(p, outer, axes=1)
    base = np.diag(q + sigma2)
    cov = full[None, :, :] - p[:, None, None] * outer + base[None, :, :]
    L = np.linalg.cholesky(cov)
    z = np.linalg.solve(L, H.T[:, :, None])[:, :, 0]
    return np.sum(np.abs(z) ** 2, axis=1)


def gamma_map(H, p, gamma, eta, sigma2):
    """Evaluate the SINR-target interference map at power vector ``p``."""
    H = np.asarray(H, dtype=complex)
    p = np.asarray(p, dtype=float)
    gamma = np.asarray(gamma, dtype=float)
    t = _mmse_gains(H, p, np.asarray(eta, dtype=float), float(sigma2))
    out = np.zeros_like(p)
    active = gamma > 0
    out[active] = gamma[active] / t[active]
    return out


def fixed_point(H, gamma, eta, sigma2, tol, max_iters, div_power):
    """Iterate ``p <- gamma_map(p)`` from ``p = 0``.

    Returns ``(p, iterations, status)`` with status one of ``CONVERGED``,
    ``DIVERGED`` (some component exceeded ``div_power``) or ``MAX_ITERS``.
    """
    K = H.shape[1]
    p = np.zeros(K)
    floor = sigma2 * 1e-15
    for it in range(1, max_iters + 1):
        nxt = gamma_map(H, p, gamma, eta, sigma2)
        if not np.all(np.isfinite(nxt)) or np.any(nxt > div_power):
            return nxt, it, DIVERGED
        change = np.max(np.abs(nxt - p) / np.maximum(nxt, floor), initial=0.0)
        p = nxt
        if change <= tol:
            return p, it, CONVERGED
    return p, max_iters, MAX_ITERS


def perron_root(A, tol, max_iters):
    """Dominant eigenvalue of a nonnegative matrix by shifted power iteration.

    Returns ``(rho, iterations, converged)``. The shift ``c I`` keeps the
    iteration aperiodic; ``rho(A + c I) = rho(A) + c`` for nonnegative ``A``.
    """
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    bound = min(A.sum(axis=1).max(), A.sum(axis=0).max())
    if bound == 0.0:
        return 0.0, 0, True
    c = 0.1 * bound
    B = A + c * np.eye(n)
    x = np.full(n, 1.0 / n)
    lam_prev = np.nan
    delta_prev = np.nan
    calm = 0
    recent = np.zeros(RATIO_WINDOW)  # last few contraction ratios, for a cautious rate estimate
    for it in range(1, max_iters + 1):
        y = B @ x
        lam = y.sum()
        ratios = y / x
        lo, hi = ratios.min(), ratios.max()
        # tolerances refer to the unshifted root; the floor lets rho = 0 terminate
        scale = max(lam - c, 1e-3 * c)
        if hi - lo <= tol * max(lo - c, 1e-3 * c):
            return 0.5 * (lo + hi) - c, it, True
        delta = abs(lam - lam_prev)
        if delta == 0.0:
            return lam - c, it, True
        if delta_prev > 0:
            recent[it % RATIO_WINDOW] = min(delta / delta_prev, 0.999999)
            # oscillating error (complex subdominant pair) can fake one small step
            calm = calm + 1 if delta / (1.0 - recent.max()) <= tol * scale else 0
            if it > RATIO_WINDOW + 1 and calm >= RATIO_WINDOW:
                return lam - c, it, True
        lam_prev, delta_prev = lam, delta
        x = y / lam
    return lam - c, max_iters, False
