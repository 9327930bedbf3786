"""Dynamic decode-and-forward protocol: activation, decoding, scoring.

Nodes are numbered 1..N+1: node 1 is the source, nodes 2..N are relays,
node N+1 is the destination.  The codeword matrix has T = N rows, one
per potential transmitter.  Block 1 always carries the source alone;
at the end of each block every still-listening relay runs an outage
test on its accumulated mutual information and, on success, transmits
its own codeword row in every later block.

A relay that decodes wrongly still transmits (rows of the codeword for
ITS message), so one relay error corrupts the destination's observation;
a trial is scored as an error if the destination decodes wrongly or any
activated relay did.  Receivers know the realized activation schedule
when forming maximum-likelihood hypotheses (a genie assumption; the
schedule is determined by channel state the receivers are not otherwise
shown).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .channels import FadingRealization, cn_sample, relay_channel_view
from .decode import apply_channel, effective_channel, ml_decode
from .errors import ValidationError
from .stcode import Codebook

__all__ = [
    "ActivationSchedule",
    "TrialOutcome",
    "make_schedule",
    "relay_outage_test",
    "compute_schedule",
    "destination_outage",
    "transmit_trial",
]


@dataclass(frozen=True)
class ActivationSchedule:
    """Nested transmit sets I_1..I_B plus each relay's decode block."""

    active_sets: tuple          # tuple of sorted node tuples
    decode_block: Mapping[int, int] = field(default_factory=dict)

    @property
    def B(self) -> int:
        return len(self.active_sets)

    def activation_block(self, node: int) -> int | None:
        """1-based block at which the node starts transmitting, if ever."""
        b = self.decode_block.get(node)
        return None if b is None else b + 1

    def signature(self) -> str:
        return "|".join(",".join(str(n) for n in s) for s in self.active_sets)


def make_schedule(sets: Sequence[Sequence[int]],
                  decode_block: Mapping[int, int] | None = None) -> ActivationSchedule:
    """Validate and freeze an activation-set sequence.

    decode_block defaults to first-appearance inference: a node entering
    I_b decoded at the end of block b-1.
    """
    norm = tuple(tuple(sorted(set(s))) for s in sets)
    if not norm:
        raise ValidationError("schedule needs at least one block")
    if norm[0] != (1,):
        raise ValidationError("block 1 must carry exactly the source, I_1 = {1}")
    for a, b in zip(norm, norm[1:]):
        if not set(a) <= set(b):
            raise ValidationError(f"activation sets must be nested, {a} is not in {b}")
    inferred: dict[int, int] = {}
    for b in range(1, len(norm)):
        for n in set(norm[b]) - set(norm[b - 1]):
            inferred[n] = b  # decoded at the end of block b (1-based block index b)
    if decode_block is None:
        decode_block = inferred
    else:
        if dict(decode_block) != inferred:
            raise ValidationError(
                "decode_block disagrees with first appearances in the sets"
            )
    return ActivationSchedule(active_sets=norm, decode_block=dict(decode_block))


@dataclass(frozen=True)
class TrialOutcome:
    schedule: ActivationSchedule
    relay_decode_errors: frozenset
    destination_in_outage: bool
    destination_decode_error: bool
    scored_error: bool


def _accumulated_mi(views, rho: float) -> float:
    return sum(math.log2(1.0 + rho * float(np.sum(np.abs(v) ** 2))) for v in views)


def relay_outage_test(n: int, b_minus_1: int, realization: FadingRealization,
                      schedule_so_far, r: float, rho: float, B: int) -> bool:
    """True when relay n is still in outage after blocks 1..b_minus_1.

    The accumulated per-block mutual information is compared with the
    full message rate rB log2(rho); equality counts as decodable.
    """
    if rho <= 1:
        raise ValidationError("rho must exceed 1")
    if not 1 <= b_minus_1 <= B:
        raise ValidationError(f"listened block count must lie in 1..{B}")
    views = relay_channel_view(realization, schedule_so_far, n, b_minus_1)
    return _accumulated_mi(views, rho) < r * B * math.log2(rho)


def compute_schedule(realization: FadingRealization, r: float, rho: float,
                     B: int, N: int) -> ActivationSchedule:
    """Recursively determine the activation sets for one realization."""
    if realization.kind != "relay-network":
        raise ValidationError("compute_schedule needs a relay-network realization")
    if realization.n_nodes != N + 1:
        raise ValidationError(
            f"realization has {realization.n_nodes} nodes, expected {N + 1}"
        )
    sets = [(1,)]
    decode_block: dict[int, int] = {}
    for b in range(2, B + 1):
        prev = sets[-1]
        joiners = []
        for n in range(2, N + 1):
            if n in prev:
                continue
            if not relay_outage_test(n, b - 1, realization, sets, r, rho, B):
                joiners.append(n)
                decode_block[n] = b - 1
        sets.append(tuple(sorted(set(prev) | set(joiners))))
    return ActivationSchedule(active_sets=tuple(sets), decode_block=decode_block)


def destination_outage(realization: FadingRealization, schedule: ActivationSchedule,
                       r: float, rho: float, B: int | None = None) -> bool:
    """Outage of the destination's B-block accumulated mutual information."""
    if B is None:
        B = schedule.B
    views = relay_channel_view(realization, schedule, realization.n_nodes, B)
    return _accumulated_mi(views, rho) < r * B * math.log2(rho)


def _actual_blocks(blocks_full: np.ndarray, schedule: ActivationSchedule,
                   node_messages: Mapping[int, int], upto: int) -> list:
    """Transmit matrices for blocks 1..upto when nodes carry their own messages.

    Row k-1 of block l is row k-1 of phi^(l-1) of node k's own decoded
    codeword while k is active, zero otherwise.  Nodes activating after
    block upto need no message yet, so upto keeps the lookup causal.
    """
    n_rows, T = blocks_full.shape[2:]
    out = []
    for l in range(upto):
        blk = np.zeros((n_rows, T), dtype=complex)
        for k in schedule.active_sets[l]:
            blk[k - 1, :] = blocks_full[node_messages[k], l, k - 1, :]
        out.append(blk)
    return out


def transmit_trial(
    book: Codebook,
    blocks_full: np.ndarray,
    message: int,
    realization: FadingRealization,
    r: float,
    rho: float,
    rng: np.random.Generator,
    forced_schedule: ActivationSchedule | None = None,
    forced_relay_messages: Mapping[int, int] | None = None,
    noise_scale: float = 1.0,
) -> TrialOutcome:
    """Simulate one DDF codeword end to end.

    blocks_full is the un-zeroed conjugate-block codebook
    (size, B, N, T) from embedded_codebook_blocks; the schedule zeroing
    happens here per trial.  Noise is unit-variance circularly symmetric
    Gaussian at every receiver (scale it with noise_scale), with signal
    power carried entirely by theta.
    """
    params = book.params
    theta = params.theta
    size, B, n_rows, T = blocks_full.shape
    if size != book.size:
        raise ValidationError("codebook and embedded blocks disagree on size")
    if B != params.B or n_rows != params.n_t or T != params.T:
        raise ValidationError("embedded blocks do not match the code parameters")
    N = n_rows
    if realization.kind != "relay-network" or realization.n_nodes != N + 1:
        raise ValidationError(f"need a relay-network realization with {N + 1} nodes")
    if not 0 <= message < size:
        raise ValidationError("message index out of range")

    # one noise tensor for receivers 2..N+1, drawn in fixed order so a
    # forced schedule does not shift anyone's stream
    noise = cn_sample(rng, (N, B, T)) * noise_scale

    schedule = forced_schedule if forced_schedule is not None else compute_schedule(
        realization, r, rho, B, N
    )
    if schedule.B != B:
        raise ValidationError("schedule block count does not match the code")

    masked = blocks_full.copy()
    for l, active in enumerate(schedule.active_sets):
        for row in range(n_rows):
            if (row + 1) not in active:
                masked[:, l, row, :] = 0.0

    node_messages: dict[int, int] = {1: message}
    relay_errors = set()
    forced_relay_messages = dict(forced_relay_messages or {})

    for n in sorted(schedule.decode_block, key=schedule.decode_block.get):
        upto = schedule.decode_block[n]  # listened blocks 1..upto
        if n in forced_relay_messages:
            decoded = forced_relay_messages[n]
        else:
            views = relay_channel_view(realization, schedule, n, upto)
            h_blocks = [v.reshape(1, N) for v in views]
            actual = _actual_blocks(blocks_full, schedule, node_messages, upto)
            noiseless = apply_channel(h_blocks, actual, theta)
            received = noiseless + noise[n - 2, :upto, :].ravel()
            eff = effective_channel(h_blocks, masked[:, :upto], theta)
            decoded = ml_decode(received, eff)
        node_messages[n] = decoded
        if decoded != message:
            relay_errors.add(n)

    dest = N + 1
    views_d = relay_channel_view(realization, schedule, dest, B)
    h_blocks_d = [v.reshape(1, N) for v in views_d]
    actual_d = _actual_blocks(blocks_full, schedule, node_messages, B)
    noiseless_d = apply_channel(h_blocks_d, actual_d, theta)
    received_d = noiseless_d + noise[dest - 2].ravel()
    eff_d = effective_channel(h_blocks_d, masked, theta)
    decoded_d = ml_decode(received_d, eff_d)

    dest_error = decoded_d != message
    in_outage = destination_outage(realization, schedule, r, rho, B)
    return TrialOutcome(
        schedule=schedule,
        relay_decode_errors=frozenset(relay_errors),
        destination_in_outage=in_outage,
        destination_decode_error=dest_error,
        scored_error=dest_error or bool(relay_errors),
    )
