"""Channel estimators.

* :func:`ls_estimate` - per-subcarrier least squares on the antenna domain.
* :func:`somp` - simultaneous OMP (common support across subcarriers).
* :func:`pcsbl_core` - pattern-coupled SBL on one measurement vector.
* :func:`sc_pcsbl` - :func:`pcsbl_core` run independently per subcarrier with
  frequency-dependent dictionaries.
* :func:`pcsbl_2d` - joint pattern-coupled SBL over the support x subcarrier
  grid with one common dictionary.
* :func:`oracle_ls` - least squares on a known support (genie baseline).

All sparse solvers take a sensing matrix ``Phi = F D`` and optionally the
dictionary ``D`` so that the antenna-domain estimate ``H_hat = D B_hat`` can
be formed; without a dictionary ``H_hat`` is the coefficient estimate itself.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .config import PcsblParams

# Woodbury-branch regulariser for noiseless runs, relative to unit-RMS data.
_NOISE_FLOOR = 1e-12


class NumericalFailure(ArithmeticError):
    """Non-finite values appeared inside an iterative solver."""

    def __init__(self, iteration: int, column=None, detail: str = "non-finite values"):
        where = f" (column {column})" if column is not None else ""
        super().__init__(f"{detail} at iteration {iteration}{where}")
        self.iteration = iteration
        self.column = column


@dataclass
class RecoveryResult:
    H_hat: np.ndarray
    B_hat: np.ndarray | None
    iters_used: int
    method_tag: str
    wallclock: float = 0.0
    support: np.ndarray | None = None
    residuals: list = field(default_factory=list)
    noise_var: float | None = None


def _apply_dictionary(B, dictionary):
    if dictionary is None:
        return B
    D = getattr(dictionary, "matrix", dictionary)
    return D @ B


def _as_matrix(Y):
    Y = np.asarray(Y)
    return Y[:, None] if Y.ndim == 1 else Y


# --------------------------------------------------------------------------- LS


def ls_estimate(Y, F) -> RecoveryResult:
    """Least-squares channel estimate; needs ``T >= N`` and full column rank ``F``."""
    t0 = time.perf_counter()
    F = np.asarray(F)
    T, N = F.shape
    if T < N:
        raise ValueError(f"least squares needs T >= N (got T={T}, N={N})")
    X, _, rank, _ = np.linalg.lstsq(F, _as_matrix(Y), rcond=None)
    if rank < N:
        raise ValueError(f"precoder is rank deficient (rank {rank} < N={N})")
    return RecoveryResult(X, None, 1, "ls", time.perf_counter() - t0)


def oracle_ls(Y, Phi, support, dictionary=None) -> RecoveryResult:
    """Least squares restricted to a known support.

    ``support`` is either one index array shared by every column, a list with
    one index array per column, or a boolean ``(M, P)`` mask.
    """
    t0 = time.perf_counter()
    Y = _as_matrix(Y)
    T, M = Phi.shape
    P = Y.shape[1]
    if isinstance(support, (list, tuple)) and any(np.ndim(s) > 0 for s in support):
        per_col = [np.asarray(s, dtype=int).ravel() for s in support]
    elif np.asarray(support).dtype == bool and np.ndim(support) == 2:
        per_col = [np.flatnonzero(np.asarray(support)[:, p]) for p in range(P)]
    else:
        per_col = None
    B = np.zeros((M, P), dtype=complex)
    if per_col is None:
        idx = np.asarray(support, dtype=int).ravel()
        if idx.size > T:
            raise ValueError(f"support of size {idx.size} exceeds T={T}")
        if idx.size:
            B[idx] = np.linalg.lstsq(Phi[:, idx], Y, rcond=None)[0]
    else:
        if len(per_col) != P:
            raise ValueError("need one support per column")
        for p, idx in enumerate(per_col):
            if idx.size > T:
                raise ValueError(f"support of size {idx.size} exceeds T={T} in column {p}")
            if idx.size:
                B[idx, p] = np.linalg.lstsq(Phi[:, idx], Y[:, p], rcond=None)[0]
    return RecoveryResult(_apply_dictionary(B, dictionary), B, 1, "oracle_ls", time.perf_counter() - t0)


# ------------------------------------------------------------------------- SOMP


def somp(Y, Phi, K: int, residual_tol: float = 1e-6, *, noise_var: float | None = None, dictionary=None):
    """Simultaneous OMP with a common support for all columns of ``Y``.

    Each iteration adds the atom maximising ``sum_p |<phi_m, r_p>| / ||phi_m||``
    (lowest index on ties) and refits all columns jointly on the selected set.
    Stops after ``K`` atoms, when the residual energy drops below
    ``residual_tol * ||Y||_F^2``, or, if ``noise_var`` is given, below the
    expected noise energy ``T * P * noise_var``.
    """
    t0 = time.perf_counter()
    Y = _as_matrix(Y)
    T, M = Phi.shape
    P = Y.shape[1]
    if K > T:
        raise ValueError(f"SOMP budget K={K} exceeds the number of measurements T={T}")
    norms = np.linalg.norm(Phi, axis=0)
    norms[norms == 0] = np.inf
    total = float(np.sum(np.abs(Y) ** 2))
    stop = residual_tol * total
    if noise_var:
        stop = max(stop, T * P * noise_var)
    R = Y.copy()
    support: list[int] = []
    residuals = [total]
    coef = np.zeros((0, P), dtype=complex)
    while len(support) < K and residuals[-1] > stop:
        scores = np.sum(np.abs(Phi.conj().T @ R), axis=1) / norms
        scores[support] = -np.inf
        m = int(np.argmax(scores))
        support.append(m)
        A = Phi[:, support]
        coef = np.linalg.lstsq(A, Y, rcond=None)[0]
        R = Y - A @ coef
        residuals.append(float(np.sum(np.abs(R) ** 2)))
    B = np.zeros((M, P), dtype=complex)
    if support:
        B[support] = coef
    return RecoveryResult(
        _apply_dictionary(B, dictionary), B, len(support), "nf_somp", time.perf_counter() - t0,
        support=np.array(support, dtype=int), residuals=residuals,
    )


# ------------------------------------------------------------------------ PCSBL


class PcsblState(NamedTuple):
    mean: np.ndarray
    second_moments: np.ndarray
    alpha: np.ndarray
    iters: np.ndarray
    noise_var: np.ndarray


def _support_neighbor_sum(X, graph):
    if graph is None:
        return np.zeros_like(X)
    if isinstance(graph, str):
        if graph != "chain":
            raise ValueError(f"unknown neighbour graph {graph!r}")
        out = np.zeros_like(X)
        out[1:] += X[:-1]
        out[:-1] += X[1:]
        return out
    return graph @ X


def _neighbor_sum(X, graph, couple_columns):
    out = _support_neighbor_sum(X, graph)
    if couple_columns:
        out[:, 1:] += X[:, :-1]
        out[:, :-1] += X[:, 1:]
    return out


def _estep(Y, Phi, s2, gamma):
    """Posterior mean and marginal variances for each column.

    ``Y`` is ``(T, K)``, ``gamma`` the ``(M, K)`` prior precisions, ``s2`` the
    ``(K,)`` noise powers and ``Phi`` either ``(T, M)`` or ``(K, T, M)``.
    For ``T < M`` the T x T matrix-inversion-lemma form is used.
    """
    T, K = Y.shape
    M = gamma.shape[0]
    Pb = Phi if Phi.ndim == 3 else Phi[None]
    gi = (1.0 / gamma).T  # (K, M)
    if T < M:
        PG = Pb * gi[:, None, :]
        C = PG @ np.swapaxes(Pb.conj(), 1, 2)
        s2f = np.maximum(s2, _NOISE_FLOOR)
        C[:, np.arange(T), np.arange(T)] += s2f[:, None]
        rhs = np.concatenate([Y.T[:, :, None], np.broadcast_to(Pb, (K, T, M))], axis=2)
        X = np.linalg.solve(C, rhs)
        q = np.einsum("ktm,kt->km", Pb.conj(), X[:, :, 0])
        d = np.einsum("ktm,ktm->km", Pb.conj(), X[:, :, 1:]).real
        mean = gi * q
        var = gi - gi**2 * d
    else:
        G = np.swapaxes(Pb.conj(), 1, 2) @ Pb
        G = np.broadcast_to(G, (K, M, M)).copy()
        G[:, np.arange(M), np.arange(M)] += s2[:, None] * gamma.T
        rhs = np.einsum("ktm,kt->km", Pb.conj(), Y.T)
        sol = np.linalg.solve(G, np.concatenate([rhs[:, :, None], np.broadcast_to(np.eye(M), (K, M, M))], axis=2))
        mean = sol[:, :, 0]
        var = s2[:, None] * np.diagonal(sol[:, :, 1:], axis1=1, axis2=2).real
    return mean.T, np.maximum(var, 0.0).T


def _pcsbl_em(Y, Phi, noise_var, params: PcsblParams, graph, couple_columns: bool) -> PcsblState:
    """EM iterations shared by every pattern-coupled solver.

    With column coupling the whole grid is one problem (one data scale, one
    stopping rule). Without it each column is an independent problem with its
    own scale and its own convergence test, so a run over P columns matches P
    separate single-column runs.
    """
    Y = _as_matrix(Y).astype(complex)
    T, P = Y.shape
    M = Phi.shape[-1]
    if Phi.shape[-2] != T or (Phi.ndim == 3 and Phi.shape[0] != P):
        raise ValueError(f"sensing matrix shape {Phi.shape} does not match observations {Y.shape}")
    kappa = params.kappa
    coupled = bool(couple_columns and kappa > 0 and P > 1)
    use_graph = graph if kappa > 0 else None
    sigma2 = np.broadcast_to(np.asarray(noise_var, dtype=float), (P,)).copy()
    if np.any(sigma2 < 0):
        raise ValueError("noise variance must be non-negative")

    col_energy = np.sum(np.abs(Y) ** 2, axis=0)
    if coupled:
        scale = np.full(P, np.sqrt(col_energy.sum() / (T * P)))
    else:
        scale = np.sqrt(col_energy / T)
    active = scale > 0
    safe = np.where(active, scale, 1.0)
    Yn = Y / safe
    s2n = sigma2 / safe**2

    phi_energy = np.sum(np.abs(Phi) ** 2, axis=(-2, -1))
    alpha = np.empty((M, P))
    alpha[:] = np.broadcast_to(phi_energy / T, (P,))
    alpha[:, ~active] = params.alpha_cap
    mean = np.zeros((M, P), dtype=complex)
    second = np.zeros((M, P))
    iters = np.zeros(P, dtype=int)

    for it in range(1, params.max_iters + 1):
        cols = np.flatnonzero(active)
        if cols.size == 0:
            break
        a_sub = alpha[:, cols]
        gamma = a_sub + kappa * _neighbor_sum(a_sub, use_graph, coupled)
        Phi_sub = Phi[cols] if Phi.ndim == 3 else Phi
        m_new, var = _estep(Yn[:, cols], Phi_sub, s2n[cols], gamma)
        if not (np.all(np.isfinite(m_new)) and np.all(np.isfinite(var))):
            bad = cols[~np.all(np.isfinite(m_new), axis=0)]
            raise NumericalFailure(it, column=int(bad[0]) if bad.size else None)
        e2 = np.abs(m_new) ** 2 + var
        omega = e2 + kappa * _neighbor_sum(e2, use_graph, coupled)
        alpha[:, cols] = np.minimum((params.a + 1) / (params.b + omega), params.alpha_cap)

        if params.learn_noise:
            if Phi.ndim == 3:
                resid = Yn[:, cols] - np.einsum("ktm,mk->tk", Phi_sub, m_new)
            else:
                resid = Yn[:, cols] - Phi @ m_new
            upd = (np.sum(np.abs(resid) ** 2, axis=0) + s2n[cols] * np.sum(1 - gamma * var, axis=0)) / T
            upd = np.maximum(upd, _NOISE_FLOOR)
            s2n[cols] = upd.mean() if coupled else upd

        old = mean[:, cols]
        if coupled:
            den = np.linalg.norm(old)
            change = np.full(cols.size, np.linalg.norm(m_new - old) / den if den > 0 else np.inf)
        else:
            den = np.linalg.norm(old, axis=0)
            with np.errstate(divide="ignore", invalid="ignore"):
                change = np.where(den > 0, np.linalg.norm(m_new - old, axis=0) / den, np.inf)
        mean[:, cols] = m_new
        second[:, cols] = e2
        iters[cols] = it
        active[cols[change < params.tol]] = False

    mean *= scale
    second *= scale**2
    return PcsblState(mean, second, alpha, iters, s2n * scale**2)


def pcsbl_core(y, Phi, params: PcsblParams | None = None, neighbor_graph="chain", *, noise_var: float = 0.0):
    """Pattern-coupled SBL for a single measurement vector.

    Returns ``(mean, second_moments, iters)`` where ``second_moments`` holds
    the posterior ``E|beta_i|^2``. ``neighbor_graph`` is ``"chain"``, ``None``
    or an ``(M, M)`` adjacency matrix (dense or scipy.sparse).
    """
    params = params or PcsblParams()
    y = np.asarray(y)
    if y.ndim != 1:
        raise ValueError("pcsbl_core takes a single measurement vector")
    st = _pcsbl_em(y[:, None], np.asarray(Phi), noise_var, params, neighbor_graph, False)
    return st.mean[:, 0], st.second_moments[:, 0], int(st.iters[0])


def sc_pcsbl(Y, F, freq_dicts, params: PcsblParams | None = None, *, noise_var: float = 0.0) -> RecoveryResult:
    """Subcarrier-by-subcarrier PCSBL with one dictionary per subcarrier."""
    t0 = time.perf_counter()
    params = params or PcsblParams()
    Y = _as_matrix(Y)
    P = Y.shape[1]
    if len(freq_dicts) != P:
        raise ValueError(f"need {P} dictionaries, got {len(freq_dicts)}")
    Ds = np.stack([getattr(d, "matrix", d) for d in freq_dicts])
    Phi = np.asarray(F)[None] @ Ds
    try:
        st = _pcsbl_em(Y, Phi, noise_var, params, "chain", False)
    except NumericalFailure as exc:
        raise NumericalFailure(exc.iteration, exc.column, "SC-PCSBL diverged") from exc
    H_hat = np.einsum("pnm,mp->np", Ds, st.mean)
    return RecoveryResult(
        H_hat, st.mean, int(st.iters.max()), "sc_pcsbl", time.perf_counter() - t0,
        noise_var=float(st.noise_var.mean()),
    )


def pcsbl_2d(Y, Phi, params: PcsblParams | None = None, *, noise_var: float = 0.0, dictionary=None):
    """Joint PCSBL over the support x subcarrier grid.

    The prior precision of entry ``(i, p)`` couples its up/down neighbours on
    the support axis and left/right neighbours on the subcarrier axis.
    """
    t0 = time.perf_counter()
    params = params or PcsblParams()
    st = _pcsbl_em(_as_matrix(Y), np.asarray(Phi), noise_var, params, "chain", True)
    return RecoveryResult(
        _apply_dictionary(st.mean, dictionary), st.mean, int(st.iters.max()), "pcsbl_2d",
        time.perf_counter() - t0, noise_var=float(st.noise_var.mean()),
    )
