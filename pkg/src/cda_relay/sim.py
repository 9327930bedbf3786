"""Monte Carlo harness: outage and coded-error curves, slope readouts.

Runs are chunked: trial chunk c of grid point p draws from
default_rng([seed, p, c]) with a fixed chunk size, so results never
depend on how chunks are spread over workers (CDA_RELAY_WORKERS sets
the thread count and nothing else).  Counts are integers keyed by
chunk, which makes the final aggregation order-free and CSV output
byte-reproducible.

The single-relay protocol scenario has a vectorized engine that groups
trials by the relay's activation block and decodes each group with one
Gram-metric pass over the codebook.  Its channel, message, and noise
draws replicate the per-trial reference engine stream for Rayleigh and
Rician fading, and the outage and activation flags are computed with
scalar arithmetic identical to the protocol module's, so both engines
produce the same counts under a matched seed (cross-checked in tests;
Nakagami runs use their own documented draw order).
"""

from __future__ import annotations

import csv
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.stats import beta as _beta_dist

from .channels import _draw, cn_sample, outage, sample
from .ddf import compute_schedule, transmit_trial
from .decode import effective_channel, ml_decode
from .errors import InsufficientDataError, ResourceLimitError, ValidationError
from .fieldtower import tower_from_catalog
from .stcode import embedded_codebook_blocks, enumerate_codebook, make_code_params

__all__ = [
    "CHUNK_TRIALS",
    "CODEBOOK_GUARD",
    "SCENARIOS",
    "ExperimentConfig",
    "CurvePoint",
    "SlopeFit",
    "run_curve",
    "fit_slope",
    "compare_exponents",
    "binomial_interval",
]

CHUNK_TRIALS = 2048
CODEBOOK_GUARD = 1 << 16
SCENARIOS = ("block-fading", "parallel", "ofdm", "ddf", "ddf-alamouti")
CONFIG_VERSION = 1

_SQRT2 = math.sqrt(2.0)


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment: a scenario, an SNR grid, and code parameters.

    mode "outage" estimates channel outage only (no codebook); "coded"
    also transmits random messages and counts decode errors.  T and m
    are optional cross-checks against the named tower.  noise_scale
    exists for zero-noise sanity runs and stays at 1.0 for real curves.
    """

    scenario: str
    snr_db_grid: tuple
    r: float
    trials: int
    seed: int
    distribution: str = "rayleigh"
    mode: str = "coded"
    tower: str | None = None
    B: int = 1
    n_t: int = 1
    n_r: int = 1
    nodes: int | None = None
    T: int | None = None
    m: int | None = None
    m_policy: str = "fixed:2"
    theta_mode: str = "normalized"
    restrict: int | None = None
    l_taps: int = 1
    q_tones: int = 0
    noise_scale: float = 1.0
    out: str | None = None
    version: int = CONFIG_VERSION

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        extra = set(data) - known
        if extra:
            raise ValidationError(f"unknown config keys: {sorted(extra)}")
        if "snr_db_grid" in data:
            data = dict(data)
            data["snr_db_grid"] = tuple(float(v) for v in data["snr_db_grid"])
        try:
            cfg = cls(**data)
        except TypeError as exc:
            raise ValidationError(f"incomplete config: {exc}")
        cfg.validate()
        return cfg

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
        if not isinstance(data, dict):
            raise ValidationError("config file must hold a JSON object")
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            out[f.name] = list(v) if isinstance(v, tuple) else v
        return out

    def validate(self) -> None:
        if self.version != CONFIG_VERSION:
            raise ValidationError(
                f"config version {self.version} unsupported (expected {CONFIG_VERSION})"
            )
        if self.scenario not in SCENARIOS:
            raise ValidationError(
                f"unknown scenario {self.scenario!r}; known: {', '.join(SCENARIOS)}"
            )
        if self.mode not in ("coded", "outage"):
            raise ValidationError("mode must be 'coded' or 'outage'")
        if self.trials < 1:
            raise ValidationError("trials must be >= 1")
        if not self.snr_db_grid:
            raise ValidationError("snr grid must not be empty")
        if any(b <= a for a, b in zip(self.snr_db_grid, self.snr_db_grid[1:])):
            raise ValidationError("snr grid must be strictly increasing")
        if not 0 <= self.seed < 2 ** 63:
            raise ValidationError("seed must fit in a non-negative 63-bit integer")
        if self.r < 0:
            raise ValidationError("multiplexing gain must be >= 0")
        if self.noise_scale < 0:
            raise ValidationError("noise_scale must be >= 0")
        try:
            _draw(np.random.default_rng(0), (), self.distribution)
        except ValidationError:
            raise
        except ValueError as exc:
            raise ValidationError(
                f"bad fading distribution {self.distribution!r}: {exc}"
            )
        if self.scenario in ("ddf", "ddf-alamouti"):
            if self.mode != "coded":
                raise ValidationError("relay scenarios are always coded runs")
            if self.nodes is None or self.nodes < 3:
                raise ValidationError("relay runs need nodes >= 3 (source, relay, destination)")
            if self.n_r != 1:
                raise ValidationError("relay nodes carry one antenna each")
        if self.scenario == "ofdm":
            if self.q_tones < 1:
                raise ValidationError("ofdm needs q_tones >= 1")
            if not 1 <= self.l_taps <= self.q_tones:
                raise ValidationError("need 1 <= l_taps <= q_tones")
        if self.mode == "coded" or self.tower is not None:
            if self.tower is None:
                raise ValidationError("coded runs need a tower id")
            tower = tower_from_catalog(self.tower)
            if self.T is not None and self.T != tower.T:
                raise ValidationError(
                    f"config says T={self.T} but tower {self.tower} has T={tower.T}"
                )
            if self.m is not None and self.m != tower.m:
                raise ValidationError(
                    f"config says m={self.m} but tower {self.tower} has m={tower.m}"
                )
            blocks = self._code_blocks()
            if tower.m < blocks:
                raise ValidationError(
                    f"tower {self.tower} supports at most m={tower.m} blocks, need {blocks}"
                )
            if self.scenario in ("ddf", "ddf-alamouti"):
                if self.nodes - 1 != tower.T:
                    raise ValidationError(
                        f"ddf needs T = nodes-1 transmit rows; tower has T={tower.T}"
                    )
                if self.scenario == "ddf-alamouti" and tower.T != 2:
                    raise ValidationError("ddf-alamouti requires a T=2 tower")
            elif self.n_t > tower.T:
                raise ValidationError("n_t cannot exceed the tower's T")

    def _code_blocks(self) -> int:
        """Number of codeword blocks the scenario spans."""
        return self.q_tones if self.scenario == "ofdm" else self.B

    def _outage_rate(self) -> float:
        """Effective r fed to the shared outage primitive.

        Parallel and OFDM runs rate r against a single channel use, so
        their threshold is r log2(rho) rather than r B log2(rho).
        """
        if self.scenario in ("parallel", "ofdm"):
            return self.r / self._code_blocks()
        return self.r


@dataclass(frozen=True)
class CurvePoint:
    """Estimates for one SNR grid point (wall time never hits the files)."""

    snr_db: float
    trials: int
    outage_count: int
    outage_prob: float
    error_count: int | None = None
    coded_error_prob: float | None = None
    relay_activated: int | None = None
    relay_error_count: int | None = None
    relay_conditional_error: float | None = None
    histogram: tuple = ()
    wall_time: float = field(default=0.0, compare=False)


# ---------------------------------------------------------------------------
# per-point engines (each consumes one chunk rng and returns integer counts)
# ---------------------------------------------------------------------------

class _PointContext:
    """Code tables for one grid point, shared by all of its chunks."""

    def __init__(self, cfg: ExperimentConfig, rho: float):
        self.cfg = cfg
        self.rho = rho
        self.blocks = cfg._code_blocks()
        self.book = None
        self.bank = None
        self.theta = 0.0
        if cfg.mode == "coded":
            tower = tower_from_catalog(cfg.tower)
            n_t = cfg.nodes - 1 if cfg.scenario in ("ddf", "ddf-alamouti") else cfg.n_t
            params = make_code_params(
                tower, B=self.blocks, n_t=n_t, r=cfg.r, rho=rho,
                m_policy=cfg.m_policy, theta_mode=cfg.theta_mode,
            )
            self.book = enumerate_codebook(params, CODEBOOK_GUARD, cfg.restrict)
            self.bank = embedded_codebook_blocks(self.book, self.blocks)
            self.theta = params.theta
        if cfg.scenario in ("ddf", "ddf-alamouti") and cfg.nodes == 3:
            self._prepare_single_relay()

    def _prepare_single_relay(self):
        B = self.blocks
        size = self.book.size
        # theta-scaled source and relay rows, flattened over (block, use)
        self.src = (self.theta * self.bank[:, :, 0, :]).reshape(size, -1)
        self.rel_full = (self.theta * self.bank[:, :, 1, :]).reshape(size, B, -1)
        self.src_normsq = np.sum(np.abs(self.src) ** 2, axis=1).real
        # per activation block a: relay row zeroed before block a
        self.rel_by_a = {}
        for a in range(2, B + 1):
            rel = self.rel_full.copy()
            rel[:, : a - 1, :] = 0.0
            rel = rel.reshape(size, -1)
            self.rel_by_a[a] = (
                rel,
                np.sum(np.abs(rel) ** 2, axis=1).real,
                np.sum(self.src * rel.conj(), axis=1),
            )
        self.signature_by_a = {}
        for a in list(range(2, B + 1)) + [B + 1]:
            sets = ["1"] * (a - 1) + ["1,2"] * (B - a + 1)
            self.signature_by_a[a] = "|".join(sets)


def _single_relay_flags(h_sr, h_sd, h_rd, rho: float, r: float, B: int):
    """Activation block and destination outage, one trial.

    Scalar arithmetic mirrors the protocol module exactly (same float
    expressions in the same order) so the vectorized engine agrees with
    the reference engine trial for trial.
    """
    thr = r * B * math.log2(rho)
    per = math.log2(1.0 + rho * (float(np.abs(h_sr) ** 2) + 0.0))
    a = B + 1
    acc = 0.0
    for k in range(1, B):
        acc += per
        if acc >= thr:
            a = k + 1
            break
    asd = float(np.abs(h_sd) ** 2)
    ard = float(np.abs(h_rd) ** 2)
    mi = 0.0
    for b in range(1, B + 1):
        p = asd + ard if b >= a else asd + 0.0
        mi += math.log2(1.0 + rho * p)
    return a, mi < thr


def _ddf_fast_chunk(ctx: _PointContext, rng: np.random.Generator, n: int) -> dict:
    cfg = ctx.cfg
    B, rho, theta = ctx.blocks, ctx.rho, ctx.theta
    T = ctx.bank.shape[3]
    size = ctx.book.size
    nbt = 2 * B * T

    msgs = rng.integers(0, size, size=n)
    dist = cfg.distribution
    if dist.startswith("nakagami:"):
        mm = float(dist.split(":", 1)[1])
        power = rng.gamma(shape=mm, scale=1.0 / mm, size=(n, 3))
        phase = rng.uniform(0.0, 2.0 * math.pi, size=(n, 3))
        coeffs = np.sqrt(power) * np.exp(1j * phase)
        flat = rng.standard_normal(n * 2 * nbt).reshape(n, 2 * nbt)
        noise_cols = flat
    else:
        flat = rng.standard_normal(n * (6 + 2 * nbt)).reshape(n, 6 + 2 * nbt)
        coeffs = (flat[:, 0:6:2] + 1j * flat[:, 1:7:2]) / _SQRT2
        if dist.startswith("rician:"):
            K = float(dist.split(":", 1)[1])
            coeffs = math.sqrt(K / (K + 1.0)) + coeffs / math.sqrt(K + 1.0)
        noise_cols = flat[:, 6:]
    # pair keys in lexicographic order: (1,2)=s-r, (1,3)=s-d, (2,3)=r-d
    h_sr, h_sd, h_rd = coeffs[:, 0], coeffs[:, 1], coeffs[:, 2]
    noise = (noise_cols[:, :nbt] + 1j * noise_cols[:, nbt:]) / _SQRT2
    noise = cfg.noise_scale * noise.reshape(n, 2, B * T)

    act = np.empty(n, dtype=np.int64)
    out_flags = np.empty(n, dtype=bool)
    for i in range(n):
        act[i], out_flags[i] = _single_relay_flags(
            h_sr[i], h_sd[i], h_rd[i], rho, cfg.r, B
        )

    scored = np.zeros(n, dtype=bool)
    relay_err_total = 0
    hist = {}
    for a in list(range(2, B + 1)) + [B + 1]:
        idx = np.flatnonzero(act == a)
        if idx.size == 0:
            continue
        hist[ctx.signature_by_a[a]] = int(idx.size)
        m_g = msgs[idx]
        if a <= B:
            # relay ML over blocks 1..a-1 (source row only on the air)
            pre = ctx.src.reshape(size, B, T)[:, : a - 1, :].reshape(size, -1)
            y_r = h_sr[idx, None] * pre[m_g] + noise[idx, 0, : (a - 1) * T]
            corr = y_r @ pre.conj().T
            metric = (
                -2.0 * (np.conj(h_sr[idx])[:, None] * corr).real
                + (np.abs(h_sr[idx]) ** 2)[:, None]
                * np.sum(np.abs(pre) ** 2, axis=1).real[None, :]
            )
            dec_r = np.argmin(metric, axis=1)
            r_err = dec_r != m_g
            relay_err_total += int(np.count_nonzero(r_err))
            rel, rel_nsq, cross = ctx.rel_by_a[a]
            tx_rel = rel[dec_r]
        else:
            r_err = np.zeros(idx.size, dtype=bool)
            rel = rel_nsq = cross = None
            tx_rel = 0.0
        # destination observes the true transmissions (relay may be wrong)
        y_d = h_sd[idx, None] * ctx.src[m_g] + noise[idx, 1, :]
        if a <= B:
            y_d = y_d + h_rd[idx, None] * tx_rel
            corr_rel = y_d @ rel.conj().T
        corr_src = y_d @ ctx.src.conj().T
        metric = (
            -2.0 * (np.conj(h_sd[idx])[:, None] * corr_src).real
            + (np.abs(h_sd[idx]) ** 2)[:, None] * ctx.src_normsq[None, :]
        )
        if a <= B:
            metric += (
                -2.0 * (np.conj(h_rd[idx])[:, None] * corr_rel).real
                + (np.abs(h_rd[idx]) ** 2)[:, None] * rel_nsq[None, :]
                + 2.0 * ((h_sd[idx] * np.conj(h_rd[idx]))[:, None] * cross[None, :]).real
            )
        dec_d = np.argmin(metric, axis=1)
        scored[idx] = (dec_d != m_g) | r_err

    return {
        "outage": int(np.count_nonzero(out_flags)),
        "error": int(np.count_nonzero(scored)),
        "activated": int(np.count_nonzero(act <= B)),
        "relay_error": relay_err_total,
        "hist": hist,
    }


def _ddf_generic_chunk(ctx: _PointContext, rng: np.random.Generator, n: int) -> dict:
    cfg = ctx.cfg
    N = cfg.nodes - 1
    size = ctx.book.size
    msgs = rng.integers(0, size, size=n)
    counts = {"outage": 0, "error": 0, "activated": 0, "relay_error": 0, "hist": {}}
    for i in range(n):
        real = sample("relay-network", rng, N=N, distribution=cfg.distribution)
        out = transmit_trial(
            ctx.book, ctx.bank, int(msgs[i]), real, cfg.r, ctx.rho, rng,
            noise_scale=cfg.noise_scale,
        )
        counts["outage"] += out.destination_in_outage
        counts["error"] += out.scored_error
        counts["activated"] += bool(out.schedule.decode_block)
        counts["relay_error"] += bool(out.relay_decode_errors)
        sig = out.schedule.signature()
        counts["hist"][sig] = counts["hist"].get(sig, 0) + 1
    return counts


def _sample_point_channel(ctx: _PointContext, rng: np.random.Generator):
    cfg = ctx.cfg
    if cfg.scenario == "ofdm":
        return sample(
            "ofdm", rng, n_t=cfg.n_t, n_r=cfg.n_r, Q=cfg.q_tones,
            L_taps=cfg.l_taps, distribution=cfg.distribution,
        )
    return sample(
        cfg.scenario, rng, n_t=cfg.n_t, n_r=cfg.n_r, B=cfg.B,
        distribution=cfg.distribution,
    )


def _outage_chunk(ctx: _PointContext, rng: np.random.Generator, n: int) -> dict:
    cfg = ctx.cfg
    r_eff = cfg._outage_rate()
    count = 0
    for _ in range(n):
        real = _sample_point_channel(ctx, rng)
        count += outage(real, r_eff, ctx.rho, ctx.blocks).in_outage
    return {"outage": count}


def _coded_chunk(ctx: _PointContext, rng: np.random.Generator, n: int) -> dict:
    cfg = ctx.cfg
    r_eff = cfg._outage_rate()
    size = ctx.book.size
    msgs = rng.integers(0, size, size=n)
    out_len = ctx.blocks * cfg.n_r * ctx.bank.shape[3]
    outages = 0
    errors = 0
    for i in range(n):
        real = _sample_point_channel(ctx, rng)
        noise = cfg.noise_scale * cn_sample(rng, (out_len,))
        eff = effective_channel(list(real.matrices), ctx.bank, ctx.theta)
        received = eff.signals[msgs[i]] + noise
        outages += outage(real, r_eff, ctx.rho, ctx.blocks).in_outage
        errors += ml_decode(received, eff) != msgs[i]
    return {"outage": outages, "error": errors}


def _merge(total: dict, part: dict) -> None:
    for k, v in part.items():
        if k == "hist":
            h = total.setdefault("hist", {})
            for sig, c in v.items():
                h[sig] = h.get(sig, 0) + c
        else:
            total[k] = total.get(k, 0) + v


def _point_engine(cfg: ExperimentConfig, force_generic: bool):
    if cfg.mode == "outage":
        return _outage_chunk
    if cfg.scenario in ("ddf", "ddf-alamouti"):
        if cfg.nodes == 3 and not force_generic:
            return _ddf_fast_chunk
        return _ddf_generic_chunk
    return _coded_chunk


# ---------------------------------------------------------------------------
# curve driver
# ---------------------------------------------------------------------------

def run_curve(cfg: ExperimentConfig, force_generic: bool = False) -> list:
    """Estimate every grid point and (when configured) write CSV + sidecar."""
    cfg.validate()
    workers = os.environ.get("CDA_RELAY_WORKERS", "1")
    try:
        workers = int(workers)
    except ValueError:
        raise ValidationError("CDA_RELAY_WORKERS must be an integer")
    if workers < 1:
        raise ValidationError("CDA_RELAY_WORKERS must be >= 1")

    engine = _point_engine(cfg, force_generic)
    chunks = [CHUNK_TRIALS] * (cfg.trials // CHUNK_TRIALS)
    if cfg.trials % CHUNK_TRIALS:
        chunks.append(cfg.trials % CHUNK_TRIALS)

    points = []
    for p_idx, snr_db in enumerate(cfg.snr_db_grid):
        t0 = time.perf_counter()
        rho = 10.0 ** (snr_db / 10.0)
        ctx = _PointContext(cfg, rho)

        def task(c_idx: int):
            rng = np.random.default_rng([cfg.seed, p_idx, c_idx])
            return engine(ctx, rng, chunks[c_idx])

        total: dict = {}
        if workers == 1:
            for c_idx in range(len(chunks)):
                _merge(total, task(c_idx))
        else:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                for part in pool.map(task, range(len(chunks))):
                    _merge(total, part)

        outage_count = total.get("outage", 0)
        point = CurvePoint(
            snr_db=float(snr_db),
            trials=cfg.trials,
            outage_count=outage_count,
            outage_prob=outage_count / cfg.trials,
            wall_time=time.perf_counter() - t0,
        )
        if cfg.mode == "coded":
            err = total.get("error", 0)
            point = replace(point, error_count=err,
                            coded_error_prob=err / cfg.trials)
        if cfg.scenario in ("ddf", "ddf-alamouti"):
            activated = total.get("activated", 0)
            r_err = total.get("relay_error", 0)
            point = replace(
                point,
                relay_activated=activated,
                relay_error_count=r_err,
                relay_conditional_error=(r_err / activated) if activated else None,
                histogram=tuple(sorted(total.get("hist", {}).items())),
            )
        points.append(point)

    if cfg.out is not None:
        write_outputs(cfg, points)
    return points


# ---------------------------------------------------------------------------
# output files
# ---------------------------------------------------------------------------

def write_outputs(cfg: ExperimentConfig, points: Sequence[CurvePoint]) -> Path:
    """Write the CSV (path = cfg.out) and its JSON config sidecar."""
    if cfg.out is None:
        raise ValidationError("config has no output path")
    path = Path(cfg.out)
    if cfg.mode == "outage":
        columns = ["snr_db", "trials", "outage_count", "outage_prob"]
        rows = [
            [str(p.snr_db), str(p.trials), str(p.outage_count), str(p.outage_prob)]
            for p in points
        ]
    else:
        columns = [
            "snr_db", "trials", "relay_activation_histogram",
            "destination_outage_prob", "scored_error_prob",
        ]
        rows = []
        for p in points:
            hist = json.dumps(dict(p.histogram), sort_keys=True,
                              separators=(",", ":"))
            rows.append([
                str(p.snr_db), str(p.trials), hist,
                str(p.outage_prob), str(p.coded_error_prob),
            ])
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        writer.writerows(rows)
    sidecar = {"format_version": CONFIG_VERSION, "columns": columns,
               "config": cfg.to_dict()}
    side_path = path.with_suffix(".json")
    with open(side_path, "w", encoding="utf-8") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


# ---------------------------------------------------------------------------
# slope readouts and intervals
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SlopeFit:
    estimate: float
    stderr: float
    n_points: int


def _select(points: Sequence[CurvePoint], window, which: str):
    lo, hi = window
    picked = []
    for p in points:
        if not lo <= p.snr_db <= hi:
            continue
        if which == "outage":
            count, prob = p.outage_count, p.outage_prob
        elif which == "coded":
            count, prob = p.error_count, p.coded_error_prob
        else:
            raise ValidationError("which must be 'outage' or 'coded'")
        if count is None:
            raise ValidationError(f"points carry no {which} counts")
        if count > 0:
            picked.append((p.snr_db, prob))
    return picked


def fit_slope(points: Sequence[CurvePoint], window, which: str = "coded") -> SlopeFit:
    """Least-squares diversity slope -d log10(p) / d log10(rho) in a window."""
    picked = _select(points, window, which)
    if len(picked) < 3:
        raise InsufficientDataError(
            f"need >= 3 points with nonzero {which} counts in {window}, "
            f"have {len(picked)}"
        )
    x = np.array([s / 10.0 for s, _ in picked])        # log10(rho)
    y = np.array([math.log10(p) for _, p in picked])
    xc = x - x.mean()
    slope = float(np.dot(xc, y - y.mean()) / np.dot(xc, xc))
    resid = (y - y.mean()) - slope * xc
    dof = len(picked) - 2
    var = float(np.dot(resid, resid) / dof / np.dot(xc, xc)) if dof else 0.0
    return SlopeFit(estimate=-slope, stderr=math.sqrt(max(var, 0.0)),
                    n_points=len(picked))


def compare_exponents(outage_points: Sequence[CurvePoint],
                      coded_points: Sequence[CurvePoint]) -> float:
    """Largest per-point decade gap |log10 coded - log10 outage|."""
    if [p.snr_db for p in outage_points] != [p.snr_db for p in coded_points]:
        raise ValidationError("curves must share the same SNR grid")
    gap = 0.0
    for po, pc in zip(outage_points, coded_points):
        if pc.error_count is None:
            raise ValidationError("coded points carry no error counts")
        if po.outage_count == 0 or pc.error_count == 0:
            raise InsufficientDataError(
                f"zero event count at {po.snr_db} dB; add trials"
            )
        gap = max(gap, abs(math.log10(pc.coded_error_prob)
                           - math.log10(po.outage_prob)))
    return gap


def binomial_interval(count: int, trials: int, confidence: float = 0.95):
    """Exact Clopper-Pearson interval for a binomial proportion.

    Conservative by construction: per-point coverage is at least the
    requested confidence, so calibration runs against analytic oracles
    stay honest even at moderate counts where a normal approximation
    would undercover.
    """
    if not 0 <= count <= trials or trials < 1:
        raise ValidationError("need 0 <= count <= trials, trials >= 1")
    if not 0.0 < confidence < 1.0:
        raise ValidationError("confidence must lie in (0, 1)")
    alpha = 1.0 - confidence
    lo = 0.0 if count == 0 else float(
        _beta_dist.ppf(alpha / 2.0, count, trials - count + 1)
    )
    hi = 1.0 if count == trials else float(
        _beta_dist.ppf(1.0 - alpha / 2.0, count + 1, trials - count)
    )
    return lo, hi
