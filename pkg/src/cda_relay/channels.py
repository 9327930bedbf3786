"""Channel sampling, outage evaluation, and eigen-exponent bookkeeping.

Four channel kinds share one realization type: quasi-static block fading
(B matrices held for T uses each), parallel subchannels, OFDM tones
derived from a short uniform-power tap profile, and the relay network's
pairwise coefficient set h(m, n) for 1 <= m < n <= N+1.

Outage always compares the per-block mutual-information sum

    sum_b log2 det(I + rho H_b H_b^dag)  <  r B log2(rho)

so a composite threshold (parallel and OFDM runs rate their r against a
single channel use) is handled by the caller rescaling r, not here.
Logs are base 2 throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError

__all__ = [
    "FadingRealization",
    "OutageReport",
    "sample",
    "outage",
    "relay_channel_view",
    "siso_rayleigh_outage_probability",
    "cn_sample",
]

KINDS = ("block-fading", "parallel", "ofdm", "relay-network")

# eigenvalues below max_eig times this are reported as structural zeros
# (alpha = +inf); rank deficiency from row deletion lands around 1e-16
# relative, while genuine fades of continuous distributions almost never do
_EIG_RTOL = 1e-12


def cn_sample(rng: np.random.Generator, shape) -> np.ndarray:
    """Circularly symmetric complex Gaussian, unit variance per entry."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2)


def _draw(rng: np.random.Generator, shape, distribution: str) -> np.ndarray:
    """One unit-power fading draw per entry.

    rayleigh: CN(0,1).  rician:K adds a fixed-phase line-of-sight part so
    that E|h|^2 stays 1.  nakagami:m draws |h|^2 from Gamma(m, 1/m) with
    an independent uniform phase.
    """
    if distribution == "rayleigh":
        return cn_sample(rng, shape)
    if distribution.startswith("rician:"):
        K = float(distribution.split(":", 1)[1])
        if K < 0:
            raise ValidationError("Rician K-factor must be >= 0")
        los = math.sqrt(K / (K + 1.0))
        return los + cn_sample(rng, shape) / math.sqrt(K + 1.0)
    if distribution.startswith("nakagami:"):
        m = float(distribution.split(":", 1)[1])
        if m <= 0:
            raise ValidationError("Nakagami m must be positive")
        power = rng.gamma(shape=m, scale=1.0 / m, size=shape)
        phase = rng.uniform(0.0, 2.0 * math.pi, size=shape)
        return np.sqrt(power) * np.exp(1j * phase)
    raise ValidationError(f"unknown fading distribution {distribution!r}")


@dataclass(frozen=True)
class FadingRealization:
    """One quasi-static draw of a channel.

    matrices holds H_1..H_B (or H_0..H_{Q-1} for OFDM tones); the
    relay-network kind instead fills relay_coeffs with the C(N+1, 2)
    pairwise gains keyed (m, n), m < n, and n_nodes = N + 1.
    """

    kind: str
    matrices: tuple = ()
    relay_coeffs: dict = field(default_factory=dict)
    n_nodes: int = 0

    def relay_vector(self) -> np.ndarray:
        """The coefficient vector in canonical lexicographic key order."""
        keys = sorted(self.relay_coeffs)
        return np.array([self.relay_coeffs[k] for k in keys], dtype=complex)


def sample(
    kind: str,
    rng: np.random.Generator,
    n_t: int = 1,
    n_r: int = 1,
    B: int = 1,
    Q: int = 0,
    L_taps: int = 1,
    N: int = 0,
    distribution: str = "rayleigh",
) -> FadingRealization:
    """Draw one FadingRealization; deterministic for a given rng state."""
    if kind not in KINDS:
        raise ValidationError(f"unknown channel kind {kind!r}; known: {', '.join(KINDS)}")
    if kind in ("block-fading", "parallel"):
        if n_t < 1 or n_r < 1 or B < 1:
            raise ValidationError("block dims must be positive")
        mats = tuple(_draw(rng, (n_r, n_t), distribution) for _ in range(B))
        return FadingRealization(kind=kind, matrices=mats)
    if kind == "ofdm":
        if n_t < 1 or n_r < 1 or Q < 1 or L_taps < 1:
            raise ValidationError("ofdm needs positive n_t, n_r, Q, L_taps")
        if L_taps > Q:
            raise ValidationError("tap count cannot exceed the number of tones")
        taps = [_draw(rng, (n_r, n_t), distribution) / math.sqrt(L_taps)
                for _ in range(L_taps)]
        tones = []
        for l in range(Q):
            h = np.zeros((n_r, n_t), dtype=complex)
            for tau, g in enumerate(taps):
                h = h + g * np.exp(-2j * math.pi * l * tau / Q)
            tones.append(h)
        return FadingRealization(kind=kind, matrices=tuple(tones))
    # relay network: N relays, nodes 1..N+1 with 1 the source and N+1 the
    # destination; one coefficient per unordered node pair
    if N < 1:
        raise ValidationError("relay network needs N >= 1")
    coeffs = {}
    for a in range(1, N + 2):
        for b in range(a + 1, N + 2):
            coeffs[(a, b)] = complex(_draw(rng, (), distribution))
    return FadingRealization(kind=kind, relay_coeffs=coeffs, n_nodes=N + 1)


@dataclass(frozen=True)
class OutageReport:
    """Outage verdict plus the eigen-exponents behind it.

    alphas follow the ascending-eigenvalue indexing of Lambda_H^dag
    Lambda_H, so they are non-increasing; exact zero eigenvalues appear
    first as +inf sentinels.
    """

    mi_sum: float
    threshold: float
    in_outage: bool
    alphas: tuple


def outage(real: FadingRealization, r: float, rho: float, B: int | None = None) -> OutageReport:
    """Evaluate the block-fading outage test on a sampled realization."""
    if real.kind == "relay-network":
        raise ValidationError(
            "relay-network realizations have no matrix form; build per-block "
            "vectors with relay_channel_view first"
        )
    if rho <= 1:
        raise ValidationError("rho must exceed 1 so log2(rho) is positive")
    if r < 0:
        raise ValidationError("multiplexing gain must be >= 0")
    mats = real.matrices
    if B is None:
        B = len(mats)
    elif B != len(mats):
        raise ValidationError(f"realization has {len(mats)} blocks, not {B}")

    log_rho = math.log2(rho)
    mi = 0.0
    eigs: list[float] = []
    for h in mats:
        h = np.atleast_2d(np.asarray(h, dtype=complex))
        gram = h.conj().T @ h
        ev = np.linalg.eigvalsh(gram)
        ev = np.where(ev < 0, 0.0, ev)
        eigs.extend(float(v) for v in ev)
        sign, logdet = np.linalg.slogdet(np.eye(h.shape[0]) + rho * (h @ h.conj().T))
        mi += logdet / math.log(2.0)
    eigs.sort()
    ln_rho = math.log(rho)
    floor = (eigs[-1] if eigs else 0.0) * _EIG_RTOL
    alphas = tuple(
        math.inf if v <= floor else -math.log(v) / ln_rho for v in eigs
    )
    threshold = r * B * log_rho
    return OutageReport(mi_sum=mi, threshold=threshold,
                        in_outage=mi < threshold, alphas=alphas)


def siso_rayleigh_outage_probability(r: float, rho: float) -> float:
    """Closed-form single-block SISO Rayleigh outage probability.

    log2(1 + rho |h|^2) < r log2(rho) with |h|^2 exponential(1) gives
    1 - exp(-(rho^r - 1)/rho).
    """
    if rho <= 1:
        raise ValidationError("rho must exceed 1")
    return 1.0 - math.exp(-(rho ** r - 1.0) / rho)


def relay_channel_view(real: FadingRealization, schedule, node: int, upto: int) -> list:
    """Extended per-block coefficient vectors h_hat_1(node)..h_hat_upto(node).

    Each vector has length N (transmit positions 1..N); position m holds
    the pairwise gain between node m and `node` when m is active in that
    block, zero otherwise.  A node never holds a coefficient to itself.
    """
    if real.kind != "relay-network":
        raise ValidationError("relay_channel_view needs a relay-network realization")
    n_nodes = real.n_nodes
    if not 2 <= node <= n_nodes:
        raise ValidationError(f"node must lie in 2..{n_nodes}")
    sets = schedule.active_sets if hasattr(schedule, "active_sets") else tuple(schedule)
    if upto > len(sets):
        raise ValidationError(f"schedule covers {len(sets)} blocks, asked for {upto}")
    N = n_nodes - 1
    out = []
    for l in range(upto):
        v = np.zeros(N, dtype=complex)
        for m in sets[l]:
            if m == node:
                continue
            v[m - 1] = real.relay_coeffs[(min(m, node), max(m, node))]
        out.append(v)
    return out
