"""Haar sampling of SO(2N) and USp(2N) with Monte Carlo estimators.

Samples are drawn in batches.  Batch ``b`` of a run with seed ``s`` and
stream index ``k`` draws from its own generator seeded by
``SeedSequence(s, spawn_key=(k, b))``, so results do not depend on which
worker runs which batch.  Batch sums are combined by a fixed pairwise tree
and standard errors come from a jackknife over the batches.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import permutations

import numpy as np

from .errors import NumericalBreakdown
from .shiftcalc import GroupSpec

__all__ = [
    "RngStream",
    "EigenangleSample",
    "haar_orthogonal",
    "haar_symplectic",
    "sample_angles",
    "sample_eigenangles",
    "fold_angles",
    "mc_ratio",
    "mc_logderiv",
    "mc_mean",
    "empirical_density",
    "pairwise_sum",
    "jackknife",
]

N_BATCHES = 100
CHUNK = 2048
STRUCTURE_TOL = 1e-10
PAIRING_TOL = 1e-8


@dataclass(frozen=True)
class RngStream:
    """Seed plus stream index; batch generators derive from both."""

    seed: int
    stream_index: int = 0

    def generator(self, batch=0):
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream_index, batch))
        return np.random.Generator(np.random.PCG64(ss))


@dataclass
class EigenangleSample:
    angles: np.ndarray
    structure_residual: float
    det_check: float


def haar_orthogonal(count, n2, rng):
    """Haar-distributed matrices in SO(n2), shape (count, n2, n2).

    Gaussian matrices are QR-factorized, each column is divided by the sign
    of the matching diagonal entry of R, and matrices with determinant -1
    are multiplied on the right by diag(-1, 1, ..., 1).
    """
    X = rng.standard_normal((count, n2, n2))
    Q, R = np.linalg.qr(X)
    s = np.sign(np.diagonal(R, axis1=1, axis2=2))
    s[s == 0] = 1.0
    Q = Q * s[:, None, :]
    det = np.linalg.det(Q)
    Q[det < 0, :, 0] *= -1.0
    return Q


def _qmul(a1, b1, a2, b2):
    """Quaternion product (a1 + b1 j)(a2 + b2 j) with complex components."""
    return a1 * a2 - b1 * np.conj(b2), a1 * b2 + b1 * np.conj(a2)


def haar_symplectic(count, N, rng):
    """Haar-distributed matrices in USp(2N), shape (count, 2N, 2N).

    A quaternion Ginibre matrix A + B j is reduced by quaternionic
    Householder reflections; column k of the unitary factor is then
    multiplied on the right by the unit quaternion of R_kk, and the result
    is embedded as [[A, B], [-conj(B), conj(A)]].
    """
    g = rng.standard_normal((count, N, N, 4))
    A = g[..., 0] + 1j * g[..., 1]
    B = g[..., 2] + 1j * g[..., 3]
    QA = np.broadcast_to(np.eye(N, dtype=complex), (count, N, N)).copy()
    QB = np.zeros((count, N, N), dtype=complex)
    diag_a = np.empty((count, N), dtype=complex)
    diag_b = np.empty((count, N), dtype=complex)
    for k in range(N):
        xa, xb = A[:, k:, k], B[:, k:, k]
        norm = np.sqrt(np.sum(np.abs(xa) ** 2 + np.abs(xb) ** 2, axis=1))
        x0 = np.sqrt(np.abs(xa[:, 0]) ** 2 + np.abs(xb[:, 0]) ** 2)
        safe = np.where(x0 > 0, x0, 1.0)
        ua = np.where(x0 > 0, xa[:, 0] / safe, 1.0)
        ub = np.where(x0 > 0, xb[:, 0] / safe, 0.0)
        va, vb = xa.copy(), xb.copy()
        va[:, 0] += ua * norm
        vb[:, 0] += ub * norm
        vnorm2 = np.sum(np.abs(va) ** 2 + np.abs(vb) ** 2, axis=1)
        # M <- M - 2 v (v* M) / |v|^2 on the trailing block, with v* = conj(va) - vb j
        sa, sb = A[:, k:, k:], B[:, k:, k:]
        ca, cb = np.conj(va), -vb
        wa = np.einsum("ci,cij->cj", ca, sa) - np.einsum("ci,cij->cj", cb, np.conj(sb))
        wb = np.einsum("ci,cij->cj", ca, sb) + np.einsum("ci,cij->cj", cb, np.conj(sa))
        scale = (2.0 / vnorm2)[:, None, None]
        pa, pb = _qmul(va[:, :, None], vb[:, :, None], wa[:, None, :], wb[:, None, :])
        A[:, k:, k:] = sa - scale * pa
        B[:, k:, k:] = sb - scale * pb
        # Q <- Q H, acting on columns k: of Q
        qa, qb = QA[:, :, k:], QB[:, :, k:]
        ta = np.einsum("cri,ci->cr", qa, va) - np.einsum("cri,ci->cr", qb, np.conj(vb))
        tb = np.einsum("cri,ci->cr", qa, vb) + np.einsum("cri,ci->cr", qb, np.conj(va))
        # (Q v) v*: entry (r, i) = t_r * conj(v_i) where conj(v) = conj(va) - vb j
        ra, rb = _qmul(ta[:, :, None], tb[:, :, None], ca[:, None, :], cb[:, None, :])
        QA[:, :, k:] = qa - scale * ra
        QB[:, :, k:] = qb - scale * rb
        diag_a[:, k] = A[:, k, k]
        diag_b[:, k] = B[:, k, k]
    mag = np.sqrt(np.abs(diag_a) ** 2 + np.abs(diag_b) ** 2)
    da, db = diag_a / mag, diag_b / mag
    QA, QB = _qmul(QA, QB, da[:, None, :], db[:, None, :])
    top = np.concatenate([QA, QB], axis=2)
    bottom = np.concatenate([-np.conj(QB), np.conj(QA)], axis=2)
    return np.concatenate([top, bottom], axis=1)


def _structure(U, symplectic):
    n2 = U.shape[-1]
    eye = np.eye(n2)
    if not symplectic:
        r = np.abs(U @ np.swapaxes(U, 1, 2) - eye).max(axis=(1, 2))
        d = np.abs(np.linalg.det(U) - 1.0)
        return r, d
    N = n2 // 2
    J = np.zeros((n2, n2))
    J[:N, N:] = np.eye(N)
    J[N:, :N] = -np.eye(N)
    unit = np.abs(U @ np.conj(np.swapaxes(U, 1, 2)) - eye).max(axis=(1, 2))
    sym = np.abs(U @ J @ np.swapaxes(U, 1, 2) - J).max(axis=(1, 2))
    return np.maximum(unit, sym), np.abs(np.linalg.det(U) - 1.0)


def fold_angles(eigenvalues):
    """Fold conjugate eigenvalue pairs to N angles in [0, pi].

    Raises
    ------
    NumericalBreakdown
        If eigenvalues leave the unit circle by more than 1e-10 or the sorted
        absolute angles fail to pair within 1e-8.
    """
    lam = np.asarray(eigenvalues)
    dev = np.abs(np.abs(lam) - 1.0).max()
    if dev > STRUCTURE_TOL:
        raise NumericalBreakdown(f"eigenvalue modulus deviates by {dev:.2e}")
    th = np.sort(np.abs(np.angle(lam)), axis=-1)
    lo, hi = th[..., 0::2], th[..., 1::2]
    gap = np.abs(hi - lo).max() if lo.size else 0.0
    if gap > PAIRING_TOL:
        raise NumericalBreakdown(f"conjugate pairing gap {gap:.2e}")
    return 0.5 * (lo + hi)


def sample_angles(g, count, rng):
    """Draw ``count`` samples; returns (angles, structure_residual, det_check)."""
    if g.symmetry == "SO_even":
        U = haar_orthogonal(count, 2 * g.N, rng)
    else:
        U = haar_symplectic(count, g.N, rng)
    res, det = _structure(U, g.symmetry == "USp")
    if res.max() > STRUCTURE_TOL or det.max() > STRUCTURE_TOL:
        raise NumericalBreakdown(f"structure residual {res.max():.2e}, det deviation {det.max():.2e}")
    return fold_angles(np.linalg.eigvals(U)), res, det


def sample_eigenangles(g, rng):
    """One Haar draw as an :class:`EigenangleSample`."""
    gen = rng.generator() if isinstance(rng, RngStream) else rng
    ang, res, det = sample_angles(g, 1, gen)
    return EigenangleSample(ang[0], float(res[0]), float(det[0]))


def pairwise_sum(values):
    """Sum a sequence by a fixed balanced binary tree."""
    vals = list(values)
    if not vals:
        return 0.0
    while len(vals) > 1:
        nxt = [vals[i] + vals[i + 1] for i in range(0, len(vals) - 1, 2)]
        if len(vals) % 2:
            nxt.append(vals[-1])
        vals = nxt
    return vals[0]


def jackknife(sums, counts):
    """Mean and jackknife standard error from per-batch sums and sizes."""
    sums = np.asarray(sums)
    counts = np.asarray(counts, dtype=float)
    total = pairwise_sum(sums)
    n = pairwise_sum(counts)
    mean = total / n
    nb = len(sums)
    if nb < 2:
        return mean, float("nan")
    loo = (total - sums) / (n - counts)
    dev = np.abs(loo - pairwise_sum(loo) / nb) ** 2
    return mean, float(np.sqrt((nb - 1) / nb * pairwise_sum(dev)))


def _batch_sizes(samples):
    nb = min(N_BATCHES, samples)
    base, extra = divmod(samples, nb)
    return [base + (1 if b < extra else 0) for b in range(nb)]


def mc_mean(g, statistic, samples, rng, threads=1):
    """Monte Carlo mean of ``statistic(angles)`` over Haar samples.

    Parameters
    ----------
    g : GroupSpec
    statistic : callable
        Maps an (m, N) array of angles to m per-sample values.
    samples : int
    rng : RngStream or int
        An int is used as the seed of stream 0.
    threads : int
        Worker threads; the result does not depend on this value.

    Returns
    -------
    mean, stderr
    """
    if samples < 1:
        raise ValueError("samples must be at least 1")
    stream = rng if isinstance(rng, RngStream) else RngStream(int(rng))
    sizes = _batch_sizes(samples)

    def run(b):
        gen = stream.generator(b)
        parts = []
        left = sizes[b]
        while left:
            m = min(CHUNK, left)
            ang, _, _ = sample_angles(g, m, gen)
            parts.append(np.sum(np.asarray(statistic(ang))))
            left -= m
        return pairwise_sum(parts)

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            sums = list(pool.map(run, range(len(sizes))))
    else:
        sums = [run(b) for b in range(len(sizes))]
    return jackknife(sums, sizes)


def _char_poly(angles, alpha):
    w = np.exp(-complex(alpha))
    return np.prod(1.0 - 2.0 * w * np.cos(angles) + w * w, axis=-1)


def _ratio_stat(A, B):
    def stat(angles):
        num = np.ones(angles.shape[0], dtype=complex)
        den = np.ones(angles.shape[0], dtype=complex)
        for a in A:
            num = num * _char_poly(angles, a)
        for b in B:
            den = den * _char_poly(angles, b)
        return num / den
    return stat


def _logderiv_stat(A):
    def stat(angles):
        out = np.ones(angles.shape[0], dtype=complex)
        c = np.cos(angles)
        for a in A:
            w = np.exp(-complex(a))
            out = out * np.sum((2 * w * c - 2 * w * w) / (1 - 2 * w * c + w * w), axis=-1)
        return out
    return stat


def mc_ratio(g, A, B, samples, rng, threads=1):
    """Monte Carlo estimate of the ratio average; returns (mean, stderr)."""
    if any(np.real(b) <= 0 for b in B):
        raise ValueError("shifts in B need positive real part")
    return mc_mean(g, _ratio_stat(list(A), list(B)), samples, rng, threads)


def mc_logderiv(g, A, samples, rng, threads=1):
    """Monte Carlo estimate of the log-derivative product; (mean, stderr)."""
    if any(np.real(a) <= 0 for a in A):
        raise ValueError("shifts in A need positive real part")
    if len(A) > g.N:
        raise ValueError("|A| must not exceed N")
    return mc_mean(g, _logderiv_stat(list(A)), samples, rng, threads)


def tuple_sum(angles, f, n, distinct=True):
    """Per-sample sum of f over n-tuples of angle indices.

    Brute force over all index tuples: used as the oracle side of the
    density comparisons, independent of any inclusion-exclusion.
    """
    m, N = angles.shape
    grids = np.meshgrid(*([np.arange(N)] * n), indexing="ij")
    idx = np.stack([gr.ravel() for gr in grids], axis=1)
    if distinct:
        keep = np.ones(len(idx), dtype=bool)
        for i in range(n):
            for j in range(i + 1, n):
                keep &= idx[:, i] != idx[:, j]
        idx = idx[keep]
    if len(idx) == 0:
        return np.zeros(m)
    args = [angles[:, idx[:, i]] for i in range(n)]
    return np.real(np.sum(f(*args), axis=1))


def empirical_density(g, f, n, distinct, samples, rng, threads=1):
    """Monte Carlo average of sum over n-tuples of eigenangles of f.

    Parameters
    ----------
    g : GroupSpec
    f : callable
        Vectorized, even in each of its n arguments.
    n : int
        Tuple length, at most N.
    distinct : bool
        Restrict to tuples of distinct indices.

    Returns
    -------
    mean, stderr
    """
    if n > g.N and distinct:
        raise ValueError("n must not exceed N")
    return mc_mean(g, lambda ang: tuple_sum(ang, f, n, distinct), samples, rng, threads)
