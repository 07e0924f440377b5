"""Pure-Python kernel for the entrywise template subproblem.

Minimizes, for one matrix entry,

    f(x) = a_sum * x^2 - 2 * s_val * x + lambda1 * |x| + lambda2 * sum_j h_j(x)

where ``a_sum`` and ``s_val`` summarize the weighted quadratic data term and
``h_j`` is either ``max(|x - b_j| - gamma_j, 0)`` (literal mode) or
``max(gamma_j - |x - b_j|, 0)`` (separation mode).  Outside the quadratic
term f is piecewise linear, so every global minimizer lies at a kink of the
linear part or at a stationary point of one quadratic piece.  Both candidate
families are enumerated exhaustively; no iteration, no tolerance on the
argument.

The compiled extension replicates this arithmetic operation-for-operation
(same candidate order, same accumulation order) so the two backends return
bit-identical results.
"""

from __future__ import annotations

BACKEND_NAME = "python"

# Slope combinations are enumerated over 3**n_hinges cases; beyond this many
# hinge terms the exhaustive sweep is no longer sensible.
MAX_HINGES = 8

_TIE_REL = 1e-12


def _penalized_value(a_sum, s_val, bs, gammas, lambda1, lambda2, separation, x):
    g = a_sum * x * x - 2.0 * s_val * x + lambda1 * abs(x)
    for j in range(len(bs)):
        d = abs(x - bs[j])
        t = gammas[j] - d if separation else d - gammas[j]
        if t > 0.0:
            g += lambda2 * t
    return g


def solve_piecewise(a_sum, s_val, bs, gammas, lambda1, lambda2, separation):
    """Exact scalar minimizer; ties go to smallest |x|, then smallest x."""
    if a_sum <= 0.0:
        raise ValueError(f"quadratic coefficient must be positive, got {a_sum}")
    n_h = len(bs)
    if n_h > MAX_HINGES:
        raise ValueError(f"at most {MAX_HINGES} hinge terms supported, got {n_h}")

    candidates = [0.0]
    for j in range(n_h):
        candidates.append(bs[j] - gammas[j])
        candidates.append(bs[j] + gammas[j])
        if separation:
            candidates.append(bs[j])
    n_combo = 3**n_h
    for sign0 in (-1.0, 1.0):
        for combo in range(n_combo):
            sigma = sign0 * lambda1
            rest = combo
            for _ in range(n_h):
                sigma += float(rest % 3 - 1) * lambda2
                rest //= 3
            candidates.append((2.0 * s_val - sigma) / (2.0 * a_sum))

    best_x = candidates[0]
    best_g = _penalized_value(
        a_sum, s_val, bs, gammas, lambda1, lambda2, separation, best_x
    )
    for x in candidates[1:]:
        g = _penalized_value(a_sum, s_val, bs, gammas, lambda1, lambda2, separation, x)
        tol = _TIE_REL * (1.0 + abs(best_g))
        if g < best_g - tol:
            best_x = x
            best_g = g
        elif abs(g - best_g) <= tol:
            ax = abs(x)
            abx = abs(best_x)
            if ax < abx or (ax == abx and x < best_x):
                best_x = x
                best_g = g
    return best_x


def solve_entries(a_sum, s, b, lambda1, lambda2, gamma, separation):
    """Solve one subproblem per entry.

    Parameters
    ----------
    a_sum : float
        Shared positive quadratic coefficient (sum of subject weights).
    s : (P,) ndarray
        Weighted data sums, one per entry.
    b : (H, P) ndarray
        Hinge centers, one row per competing template (H may be 0).
    lambda1, lambda2, gamma : float
        Sparsity weight, hinge weight, and shared hinge margin.
    separation : bool
        Hinge mode shared by all terms.

    Returns
    -------
    (P,) ndarray of minimizers.
    """
    import numpy as np

    s = np.asarray(s, dtype=float)
    b = np.asarray(b, dtype=float)
    n_entries = s.shape[0]
    n_h = b.shape[0]
    gammas = [float(gamma)] * n_h
    out = np.empty(n_entries)
    sep = bool(separation)
    l1 = float(lambda1)
    l2 = float(lambda2)
    a = float(a_sum)
    for p in range(n_entries):
        bs = [float(b[j, p]) for j in range(n_h)]
        out[p] = solve_piecewise(a, float(s[p]), bs, gammas, l1, l2, sep)
    return out
