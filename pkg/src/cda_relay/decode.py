"""Exhaustive maximum-likelihood decoding and distance analysis tools.

Every noiseless signal in the package flows through one code path
(`_block_signals`), so the decoder's hypothesis bank and the per-trial
channel application are byte-identical by construction.

The analysis helpers expose the quantities the error-probability
arguments rest on: the exact pairwise receive distance, the mismatched
eigenvalue lower bound pairing ascending channel eigenvalues with
descending difference eigenvalues, the rate-margin statistic delta_J,
eigenvalue interlacing between row-deleted and full codeword
differences, and the two-phase distance decomposition of the
single-relay Alamouti scheme.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ValidationError
from .fieldtower import FieldElement, Tower

__all__ = [
    "EffectiveChannel",
    "effective_channel",
    "apply_channel",
    "ml_decode",
    "ml_decode_batch",
    "pairwise_distance_sq",
    "mismatched_bound",
    "delta_J",
    "interlacing_holds",
    "inclusion_check",
    "alamouti_delta_energies",
    "broadcast_phase_distance_sq",
    "broadcast_phase_bound",
    "cooperation_phase_distance_sq",
]

_NEG_EIG_TOL = 1e-9


def _block_signals(h_blocks: Sequence[np.ndarray], theta: float,
                   blocks_batch: np.ndarray) -> np.ndarray:
    """Noiseless received signals for a batch of assembled codewords.

    blocks_batch has shape (size, B, rows, T); h_blocks holds B channel
    matrices of shape (n_r, rows).  Returns (size, B*n_r*T) with block
    signals concatenated in block order.
    """
    size = blocks_batch.shape[0]
    outs = []
    for b, h in enumerate(h_blocks):
        h2 = np.atleast_2d(np.asarray(h, dtype=complex))
        if h2.shape[1] != blocks_batch.shape[2]:
            raise ValidationError(
                f"block {b}: channel expects {h2.shape[1]} transmit rows, "
                f"codeword has {blocks_batch.shape[2]}"
            )
        sig = np.einsum("rn,knt->krt", h2, blocks_batch[:, b])
        outs.append((theta * sig).reshape(size, -1))
    return np.concatenate(outs, axis=1)


@dataclass(frozen=True)
class EffectiveChannel:
    """A codebook flattened through one channel draw."""

    h_blocks: tuple
    theta: float
    signals: np.ndarray      # (size, total_signal_len)
    norms_sq: np.ndarray     # (size,)


def effective_channel(h_blocks: Sequence[np.ndarray], blocks_batch: np.ndarray,
                      theta: float) -> EffectiveChannel:
    if blocks_batch.ndim != 4:
        raise ValidationError("blocks_batch must be (size, B, rows, T)")
    if len(h_blocks) != blocks_batch.shape[1]:
        raise ValidationError(
            f"{len(h_blocks)} channel blocks for {blocks_batch.shape[1]} codeword blocks"
        )
    signals = _block_signals(h_blocks, theta, blocks_batch)
    norms = np.sum(np.abs(signals) ** 2, axis=1).real
    return EffectiveChannel(h_blocks=tuple(np.atleast_2d(np.asarray(h, dtype=complex))
                                           for h in h_blocks),
                            theta=theta, signals=signals, norms_sq=norms)


def apply_channel(h_blocks: Sequence[np.ndarray], blocks: Sequence[np.ndarray],
                  theta: float) -> np.ndarray:
    """Noiseless signal of one assembled codeword; same path as the bank."""
    batch = np.asarray(blocks, dtype=complex)[None, ...]
    if len(h_blocks) != batch.shape[1]:
        raise ValidationError(
            f"{len(h_blocks)} channel blocks for {batch.shape[1]} codeword blocks"
        )
    return _block_signals(h_blocks, theta, batch)[0]


def ml_decode(received: np.ndarray, eff: EffectiveChannel) -> int:
    """Index of the closest hypothesis; ties go to the lowest index."""
    received = np.asarray(received, dtype=complex).ravel()
    if received.shape[0] != eff.signals.shape[1]:
        raise ValidationError(
            f"received length {received.shape[0]} != signal length {eff.signals.shape[1]}"
        )
    d = np.sum(np.abs(received[None, :] - eff.signals) ** 2, axis=1)
    return int(np.argmin(d))


def ml_decode_batch(received: np.ndarray, eff: EffectiveChannel) -> np.ndarray:
    """Vectorized decoder for many received vectors at once.

    Uses the expanded metric |r|^2 - 2 Re<r, s> + |s|^2 (dropping |r|^2),
    which matters only through floating-point rounding; agreement with
    ml_decode is a tested property, not a structural identity.
    """
    received = np.asarray(received, dtype=complex)
    if received.ndim != 2 or received.shape[1] != eff.signals.shape[1]:
        raise ValidationError("received must be (n_trials, signal_len)")
    gram = received @ eff.signals.conj().T
    metric = eff.norms_sq[None, :] - 2.0 * gram.real
    return np.argmin(metric, axis=1)


# ---------------------------------------------------------------------------
# distance analysis
# ---------------------------------------------------------------------------

def pairwise_distance_sq(c1: np.ndarray, c2: np.ndarray, lam: np.ndarray,
                         theta: float) -> float:
    """||lam . theta (c1 - c2)||_F^2, the exact receive distance."""
    c1 = np.asarray(c1, dtype=complex)
    c2 = np.asarray(c2, dtype=complex)
    if c1.shape != c2.shape:
        raise ValidationError(f"codeword shapes differ: {c1.shape} vs {c2.shape}")
    lam = np.asarray(lam, dtype=complex)
    if lam.shape[1] != c1.shape[0]:
        raise ValidationError(
            f"channel has {lam.shape[1]} columns, codeword {c1.shape[0]} rows"
        )
    d = lam @ (theta * (c1 - c2))
    return float(np.sum(np.abs(d) ** 2))


def mismatched_bound(lams_ascending: Sequence[float], mus_descending: Sequence[float],
                     theta: float) -> float:
    """theta^2 sum_i lam_i mu_i with opposite sort orders.

    Pairing the weakest channel directions with the strongest difference
    directions lower-bounds the exact distance for any unitary mismatch.
    """
    lams = np.asarray(lams_ascending, dtype=float)
    mus = np.asarray(mus_descending, dtype=float)
    if lams.shape != mus.shape:
        raise ValidationError("eigenvalue lists must have equal length")
    for name, v in (("channel", lams), ("difference", mus)):
        if np.any(v < -_NEG_EIG_TOL):
            raise ValidationError(f"{name} eigenvalues are negative beyond tolerance")
    lams = np.clip(lams, 0.0, None)
    mus = np.clip(mus, 0.0, None)
    return float(theta * theta * np.sum(np.sort(lams) * -np.sort(-mus)))


def delta_J(alphas: Sequence[float], J: int, r: float, B: int) -> float:
    """Rate margin over the J+1 strongest directions.

    alphas are the q = B n_t eigen-exponents; they are sorted
    non-increasing internally and the last J+1 entries (the smallest
    exponents, i.e. the strongest channel directions) enter the sum.
    """
    alphas = [float(a) for a in alphas]
    if not all(math.isfinite(a) for a in alphas):
        raise ValidationError("delta_J needs finite exponents; drop +inf entries first")
    q = len(alphas)
    if not 0 <= J <= q - 1:
        raise ValidationError(f"J must lie in 0..{q - 1}")
    ordered = sorted(alphas, reverse=True)
    tail = ordered[q - J - 1:]
    return sum(1.0 - a for a in tail) - r * B


def interlacing_holds(mu_descending: Sequence[float], nu_descending: Sequence[float],
                      rtol: float = 1e-9) -> bool:
    """Tail-aligned comparison mu[-k] >= nu[-k] for k = 1..len(mu).

    Both lists are trusted to be in descending order (so the tails hold
    the smallest values); a misordered input is meant to fail the check,
    which is what the negative-control tests rely on.
    """
    mu = [float(v) for v in mu_descending]
    nu = [float(v) for v in nu_descending]
    if len(mu) > len(nu):
        raise ValidationError("mu cannot be longer than nu")
    scale = max(max(nu, default=0.0), 1e-30)
    return all(mu[-k] >= nu[-k] - rtol * scale for k in range(1, len(mu) + 1))


def inclusion_check(delta_s: np.ndarray, delta_s_hat: np.ndarray,
                    rtol: float = 1e-9) -> bool:
    """Eigenvalue interlacing between a row-deleted difference and its full form."""
    ds = np.asarray(delta_s, dtype=complex)
    dsh = np.asarray(delta_s_hat, dtype=complex)
    if ds.ndim != 2 or dsh.ndim != 2 or ds.shape[1] != dsh.shape[1]:
        raise ValidationError("difference matrices must share a column count")
    if ds.shape[0] > dsh.shape[0]:
        raise ValidationError("row-deleted matrix cannot have more rows than the full one")
    mu = np.linalg.eigvalsh(ds @ ds.conj().T)[::-1]
    nu = np.linalg.eigvalsh(dsh @ dsh.conj().T)[::-1]
    return interlacing_holds(mu, nu, rtol=rtol)


# ---------------------------------------------------------------------------
# single-relay two-phase decomposition
# ---------------------------------------------------------------------------

def alamouti_delta_energies(tower: Tower, coeffs_a: Sequence[complex],
                            coeffs_b: Sequence[complex]) -> np.ndarray:
    """Conjugate-block difference energies phi^i(l), i < m.

    l is the field element |dl0|^2 + |dl1|^2 (which equals the codeword
    difference determinant when gamma = -1 and sigma conjugates), so each
    conjugate block of the difference has both rows at energy phi^i(l).
    """
    if tower.T != 2:
        raise ValidationError("two-phase analysis needs a T = 2 tower")
    gm = tower.gamma_coords
    minus_one = [-c for c in tower.one().coords]
    if list(gm) != minus_one:
        raise ValidationError("two-phase analysis needs gamma = -1")
    d = tower.symbol_dim
    delta = [complex(a) - complex(b) for a, b in zip(coeffs_a, coeffs_b)]
    if len(delta) != 2 * d:
        raise ValidationError(f"expected {2 * d} coefficients")
    l0 = tower.from_gaussian_coeffs(delta[:d])
    l1 = tower.from_gaussian_coeffs(delta[d:])
    ell = tower.add_raw(
        tower.mul_raw(l0, tower.sigma_raw(l0, 1)),
        tower.mul_raw(l1, tower.sigma_raw(l1, 1)),
    )
    out = []
    for i in range(tower.m):
        v = tower.embed_raw(tower.phi_raw(ell, i))
        if abs(v.imag) > 1e-9 * (1.0 + abs(v.real)):
            raise ValidationError("block energy embedded off the real axis")
        out.append(max(v.real, 0.0))
    return np.array(out)


def broadcast_phase_distance_sq(theta: float, h_sr_sq: float,
                                energies: Sequence[float]) -> float:
    """Exact relay-side distance over the source-only blocks."""
    return float(theta * theta * h_sr_sq * np.sum(np.asarray(energies, dtype=float)))


def broadcast_phase_bound(theta: float, h_sr_sq: float,
                          energies: Sequence[float]) -> float:
    """Geometric-mean lower bound on the broadcast-phase distance.

    For k listened blocks the bound is theta^2 |h_sr|^2 k (prod e_i)^(1/k),
    which never exceeds the arithmetic sum.
    """
    e = np.asarray(energies, dtype=float)
    k = len(e)
    if k == 0:
        return 0.0
    if np.any(e < 0):
        raise ValidationError("block energies must be nonnegative")
    return float(theta * theta * h_sr_sq * k * np.prod(e) ** (1.0 / k))


def cooperation_phase_distance_sq(theta: float, h_sd_sq: float, h_rd_sq: float,
                                  energies: Sequence[float],
                                  activation_block: int) -> float:
    """Destination distance split at the relay's first transmit block.

    Blocks before activation_block (0-indexed) carry only the source row;
    later blocks add the relay row, and Alamouti row orthogonality makes
    each block's contribution proportional to its energy.
    """
    e = np.asarray(energies, dtype=float)
    if not 0 <= activation_block <= len(e):
        raise ValidationError("activation block out of range")
    solo = float(np.sum(e[:activation_block]))
    coop = float(np.sum(e[activation_block:]))
    return theta * theta * (h_sd_sq * solo + (h_sd_sq + h_rd_sq) * coop)
