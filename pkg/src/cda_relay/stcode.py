"""Space-time codeword construction, assembly, and determinant certificates.

A codeword starts life as T field elements ell_0..ell_{T-1}, each a
Z[i]-combination of the tower's symbol basis with QAM coefficients.  The
T x T matrix form places sigma^j(ell_{(i-j) mod T}) at row i, column j,
with the non-norm element gamma multiplying the strict upper triangle of
the cyclic shift:

    [ ell_0              gamma sigma(ell_{T-1})   gamma sigma^2(ell_{T-2}) ... ]
    [ ell_1              sigma(ell_0)             gamma sigma^2(ell_{T-1}) ... ]
    [ ...                                                                      ]
    [ ell_{T-1}          sigma(ell_{T-2})         sigma^2(ell_{T-3})       ... ]

Row deletion keeps the first n_t rows for transmission; determinant
certificates always use the full T x T matrix.  Larger signal spaces are
assembled from conjugate blocks phi^b(X): block-diagonally for block
fading, stacked for parallel channels, and with activation-dependent row
patterns for decode-and-forward relaying.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Sequence

import numpy as np

from .errors import ResourceLimitError, ValidationError
from .fieldtower import FieldElement, Tower

__all__ = [
    "QamConstellation",
    "CodeParams",
    "CodewordX",
    "AssembledCodeword",
    "NvdReport",
    "qam",
    "qam_side_auto",
    "theta_exponent",
    "theta_normalized",
    "make_code_params",
    "encode_x",
    "det_exact",
    "assemble",
    "Codebook",
    "enumerate_codebook",
    "embedded_codebook",
    "mean_entry_energy",
    "nvd_min",
]

LAYOUTS = ("block-diagonal", "stacked", "ddf", "alamouti-ddf")


# ---------------------------------------------------------------------------
# QAM constellations
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class QamConstellation:
    """Side-M QAM with odd integer coordinates, |a|,|b| <= M-1."""

    M: int
    points: tuple[complex, ...]

    @property
    def size(self) -> int:
        return len(self.points)

    def differences(self) -> tuple[complex, ...]:
        """All pairwise differences, zero included, deterministic order."""
        vals = sorted(
            {(p - q).real + 1j * (p - q).imag for p in self.points for q in self.points},
            key=lambda z: (z.real, z.imag),
        )
        return tuple(vals)


def qam(M: int) -> QamConstellation:
    """Build the side-M QAM constellation (M even, M^2 points)."""
    if M < 2 or M % 2:
        raise ValidationError(f"QAM side must be even and >= 2, got {M}")
    coords = range(-(M - 1), M, 2)
    pts = tuple(a + 1j * b for a in coords for b in coords)
    return QamConstellation(M=M, points=pts)


def qam_side_auto(rho: float, r: float, B: int, symbol_dim: int) -> int:
    """Smallest even M with M^2 >= rho^(rB/symbol_dim)."""
    target = rho ** (r * B / symbol_dim)
    M = 2
    while M * M < target:
        M += 2
    return M


def theta_exponent(rho: float, r: float, B: int, symbol_dim: int) -> float:
    """theta with theta^2 = rho^(1 - rB/symbol_dim), the pure exponent form."""
    return float(rho) ** (0.5 * (1.0 - r * B / symbol_dim))


def theta_normalized(rho: float, energy: float) -> float:
    """theta with theta^2 * (mean entry energy) = rho exactly."""
    if energy <= 0:
        raise ValidationError("mean entry energy must be positive")
    return (float(rho) / energy) ** 0.5


# ---------------------------------------------------------------------------
# code parameters
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CodeParams:
    """Everything needed to map messages to transmit matrices."""

    tower: Tower
    B: int
    n_t: int
    r: float
    rho: float
    M: int
    theta: float

    @property
    def T(self) -> int:
        return self.tower.T

    @property
    def m(self) -> int:
        return self.tower.m

    @property
    def symbol_dim(self) -> int:
        return self.tower.symbol_dim

    @property
    def coeff_count(self) -> int:
        return self.T * self.tower.symbol_dim


def make_code_params(
    tower: Tower,
    B: int,
    n_t: int,
    r: float,
    rho: float,
    m_policy: str = "auto",
    theta_mode: str = "normalized",
) -> CodeParams:
    """Resolve the constellation side and scale factor for one SNR point.

    m_policy is "auto" (discretize M^2 = rho^(rB/d)) or "fixed:<M>".
    theta_mode "exponent" uses theta^2 = rho^(1 - rB/d); "normalized"
    calibrates theta so the mean transmitted entry energy equals rho.
    Both keep the same growth exponent since the codebook's mean energy
    scales with M^2.
    """
    if B < 1 or n_t < 1 or n_t > tower.T:
        raise ValidationError("need B >= 1 and 1 <= n_t <= T")
    if tower.m < B:
        raise ValidationError(f"tower has m={tower.m} < B={B}")
    if rho <= 1:
        raise ValidationError("rho must exceed 1 (0 dB) for threshold arithmetic")
    d = tower.symbol_dim
    if m_policy == "auto":
        M = qam_side_auto(rho, r, B, d)
    elif m_policy.startswith("fixed:"):
        M = int(m_policy.split(":", 1)[1])
        if M < 2 or M % 2:
            raise ValidationError(f"fixed M must be even and >= 2, got {M}")
    else:
        raise ValidationError(f"unknown M policy {m_policy!r}")
    params = CodeParams(tower=tower, B=B, n_t=n_t, r=r, rho=rho, M=M, theta=1.0)
    if theta_mode == "exponent":
        theta = theta_exponent(rho, r, B, d)
    elif theta_mode == "normalized":
        theta = theta_normalized(rho, mean_entry_energy(params))
    else:
        raise ValidationError(f"unknown theta mode {theta_mode!r}")
    return CodeParams(tower=tower, B=B, n_t=n_t, r=r, rho=rho, M=M, theta=theta)


# ---------------------------------------------------------------------------
# codewords
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CodewordX:
    """One codeword: exact T x T matrix plus row-deleted complex entries."""

    coeffs: tuple[tuple[int, int], ...]       # T*d Gaussian-integer pairs
    ell: tuple[FieldElement, ...]             # length T
    matrix: tuple[tuple[FieldElement, ...], ...]  # full T x T exact form
    entries: tuple[tuple[complex, ...], ...]  # n_t x T embedded rows

    def entries_array(self) -> np.ndarray:
        return np.array(self.entries, dtype=complex)


def encode_x(tower: Tower, coeffs: Sequence, n_t: int | None = None) -> CodewordX:
    """Map T*d Gaussian-integer coefficients to a codeword.

    coeffs may hold complex numbers or (a, b) pairs with integer parts;
    coefficient block i (d entries) builds ell_i over the symbol basis.
    """
    T = tower.T
    d = tower.symbol_dim
    pairs = []
    for z in coeffs:
        if isinstance(z, complex):
            a, b = z.real, z.imag
        elif isinstance(z, (tuple, list)):
            a, b = z
        else:
            a, b = z, 0
        if a != int(a) or b != int(b):
            raise ValidationError("codeword coefficients must be Gaussian integers")
        pairs.append((int(a), int(b)))
    if len(pairs) != T * d:
        raise ValidationError(f"expected {T * d} coefficients, got {len(pairs)}")
    if n_t is None:
        n_t = T
    if not 1 <= n_t <= T:
        raise ValidationError(f"n_t must lie in 1..{T}")

    ell_raw = [
        tower.from_gaussian_coeffs([complex(a, b) for a, b in pairs[i * d:(i + 1) * d]])
        for i in range(T)
    ]
    gamma = tower.gamma_coords
    matrix_raw = []
    for i in range(T):
        row = []
        for j in range(T):
            v = tower.sigma_raw(ell_raw[(i - j) % T], j) if j else list(ell_raw[i])
            if i < j:
                v = tower.mul_raw(gamma, v)
            row.append(v)
        matrix_raw.append(row)

    ell = tuple(FieldElement(tower, tuple(v)) for v in ell_raw)
    matrix = tuple(
        tuple(FieldElement(tower, tuple(v)) for v in row) for row in matrix_raw
    )
    entries = tuple(
        tuple(complex(tower.embed_raw(matrix_raw[i][j])) for j in range(T))
        for i in range(n_t)
    )
    return CodewordX(coeffs=tuple(pairs), ell=ell, matrix=matrix, entries=entries)


def det_exact(tower: Tower, matrix: Sequence[Sequence[FieldElement]]) -> FieldElement:
    """Leibniz determinant of a small matrix of field elements."""
    n = len(matrix)
    total = tower.zero_raw()
    for perm in itertools.permutations(range(n)):
        sign = _perm_sign(perm)
        term = None
        for r in range(n):
            c = matrix[r][perm[r]].coords
            term = list(c) if term is None else tower.mul_raw(term, c)
        if sign < 0:
            term = [-v for v in term]
        total = tower.add_raw(total, term)
    return FieldElement(tower, tuple(total))


def _perm_sign(perm) -> int:
    sign = 1
    seen = [False] * len(perm)
    for s in range(len(perm)):
        if seen[s]:
            continue
        ln, j = 0, s
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            ln += 1
        if ln % 2 == 0:
            sign = -sign
    return sign


# ---------------------------------------------------------------------------
# assembly
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AssembledCodeword:
    """A codeword laid out over B fading blocks."""

    layout: str
    theta: float
    blocks: tuple[np.ndarray, ...]   # B matrices, rows x T each

    def full(self) -> np.ndarray:
        """Block-diagonal (Bn x BT) or stacked (Bn x T) matrix."""
        if self.layout == "stacked":
            return np.vstack(self.blocks)
        n = self.blocks[0].shape[0]
        B = len(self.blocks)
        T = self.blocks[0].shape[1]
        out = np.zeros((B * n, B * T), dtype=complex)
        for b, blk in enumerate(self.blocks):
            out[b * n:(b + 1) * n, b * T:(b + 1) * T] = blk
        return out


def assemble(
    tower: Tower,
    codeword: CodewordX,
    layout: str,
    theta: float,
    B: int,
    n_t: int | None = None,
    schedule=None,
) -> AssembledCodeword:
    """Lay a codeword out over B blocks.

    block-diagonal / stacked: block b is theta * phi^b(X) row-deleted to
    n_t rows.  ddf (and its alamouti-ddf alias, which requires T = 2):
    block b keeps row n of theta * phi^b(X) for every node n active in
    block b+1 (1-based) of the schedule and zeroes the other rows.
    """
    if layout not in LAYOUTS:
        raise ValidationError(f"unknown layout {layout!r}; known: {', '.join(LAYOUTS)}")
    if tower.m < B:
        raise ValidationError(f"tower has m={tower.m} < B={B}")
    T = tower.T
    if n_t is None:
        n_t = len(codeword.entries)
    if layout == "alamouti-ddf" and T != 2:
        raise ValidationError("alamouti-ddf layout needs T = 2")
    if layout in ("ddf", "alamouti-ddf"):
        if schedule is None:
            raise ValidationError("ddf layouts need an activation schedule")
        if len(schedule.active_sets) != B:
            raise ValidationError("schedule length must equal B")

    blocks = []
    for b in range(B):
        rows = []
        for i in range(n_t):
            row = [
                complex(tower.embed_raw(tower.phi_raw(codeword.matrix[i][j].coords, b)))
                for j in range(T)
            ]
            rows.append(row)
        blk = theta * np.array(rows, dtype=complex)
        if layout in ("ddf", "alamouti-ddf"):
            active = schedule.active_sets[b]
            for i in range(n_t):
                if (i + 1) not in active:
                    blk[i, :] = 0.0
        blocks.append(blk)
    return AssembledCodeword(layout=layout, theta=theta, blocks=tuple(blocks))


# ---------------------------------------------------------------------------
# codebooks
# ---------------------------------------------------------------------------

class Codebook:
    """Deterministic enumeration of the codeword lattice points.

    Coefficient positions are ordered ell-block-major (all of ell_0's
    symbol coordinates first); position 0 varies slowest.  Per position
    the QAM points are ordered lexicographically by (re, im).  With a
    restriction only the first `free` positions vary, the rest are pinned
    to the first constellation point.
    """

    def __init__(self, params: CodeParams, free: int | None = None):
        self.params = params
        self.constellation = qam(params.M)
        self.coeff_count = params.coeff_count
        self.free = self.coeff_count if free is None else free
        if not 1 <= self.free <= self.coeff_count:
            raise ValidationError(
                f"free coefficient count must lie in 1..{self.coeff_count}"
            )
        self.size = self.constellation.size ** self.free

    def coeffs_of_index(self, idx: int) -> tuple[complex, ...]:
        if not 0 <= idx < self.size:
            raise ValidationError(f"codeword index {idx} out of range")
        pts = self.constellation.points
        q = self.constellation.size
        digits = []
        v = idx
        for _ in range(self.free):
            digits.append(v % q)
            v //= q
        digits.reverse()
        pinned = pts[0]
        out = [pts[digit] for digit in digits]
        out.extend([pinned] * (self.coeff_count - self.free))
        return tuple(out)

    def codeword(self, idx: int) -> CodewordX:
        return encode_x(self.params.tower, self.coeffs_of_index(idx), self.params.n_t)

    def __len__(self) -> int:
        return self.size

    def __iter__(self) -> Iterator[CodewordX]:
        for idx in range(self.size):
            yield self.codeword(idx)


def enumerate_codebook(
    params: CodeParams, limit: int, restrict: int | None = None
) -> Codebook:
    """Build the codebook, guarding against non-desk-scale sizes.

    Raises ResourceLimitError when the (possibly restricted) codebook
    would exceed `limit` codewords.
    """
    book = Codebook(params, free=restrict)
    if book.size > limit:
        raise ResourceLimitError(
            f"codebook holds {book.size} codewords, over the limit of {limit}; "
            "restrict the free coefficient count or lower M"
        )
    return book


def _coeff_parts(book: Codebook) -> np.ndarray:
    """(size, 2*coeff_count) real/imag coefficient matrix, index order."""
    pts = np.array(book.constellation.points)
    q = len(pts)
    cc = book.coeff_count
    digits = np.zeros((book.size, book.free), dtype=np.int64)
    v = np.arange(book.size, dtype=np.int64)
    for j in range(book.free - 1, -1, -1):
        digits[:, j] = v % q
        v //= q
    coeff_mat = np.zeros((book.size, cc), dtype=complex)
    coeff_mat[:, :book.free] = pts[digits]
    if cc > book.free:
        coeff_mat[:, book.free:] = pts[0]
    parts = np.empty((book.size, 2 * cc))
    parts[:, 0::2] = coeff_mat.real
    parts[:, 1::2] = coeff_mat.imag
    return parts


def embedded_codebook(book: Codebook) -> np.ndarray:
    """All codeword entry matrices as one (size, n_t, T) complex array.

    Entries are linear in the real and imaginary coefficient parts, so
    the whole codebook is a single matrix product against a basis tensor.
    """
    params = book.params
    tower = params.tower
    T, n_t = params.T, params.n_t
    cc = book.coeff_count

    basis = np.zeros((2 * cc, n_t, T), dtype=complex)
    for pos in range(cc):
        for part in range(2):
            coeffs = [0j] * cc
            coeffs[pos] = 1.0 if part == 0 else 1.0j
            cw = encode_x(tower, coeffs, n_t)
            basis[2 * pos + part] = cw.entries_array()
    return np.tensordot(_coeff_parts(book), basis, axes=(1, 0))


def embedded_codebook_blocks(book: Codebook, B: int,
                             schedule=None) -> np.ndarray:
    """Conjugate-block codebook as a (size, B, n_t, T) complex array.

    Block b holds phi^b of every codeword's entry matrix (row-deleted to
    n_t).  With an activation schedule, rows of non-transmitting nodes
    are zeroed per block, matching the ddf assembly layout.
    """
    params = book.params
    tower = params.tower
    if tower.m < B:
        raise ValidationError(f"tower has m={tower.m} < B={B}")
    T, n_t = params.T, params.n_t
    cc = book.coeff_count
    if schedule is not None and len(schedule.active_sets) != B:
        raise ValidationError("schedule length must equal B")

    basis = np.zeros((2 * cc, B, n_t, T), dtype=complex)
    for pos in range(cc):
        for part in range(2):
            coeffs = [0j] * cc
            coeffs[pos] = 1.0 if part == 0 else 1.0j
            cw = encode_x(tower, coeffs, n_t)
            for b in range(B):
                for i in range(n_t):
                    for j in range(T):
                        basis[2 * pos + part, b, i, j] = tower.embed_raw(
                            tower.phi_raw(cw.matrix[i][j].coords, b)
                        )
    out = np.tensordot(_coeff_parts(book), basis, axes=(1, 0))
    if schedule is not None:
        for b, active in enumerate(schedule.active_sets):
            for i in range(n_t):
                if (i + 1) not in active:
                    out[:, b, i, :] = 0.0
    return out


def mean_entry_energy(params: CodeParams, layout_blocks: int | None = None) -> float:
    """Mean |entry|^2 over the codebook and its B conjugate blocks.

    Coefficients are i.i.d. uniform QAM, so the mean is a weighted sum of
    the embedded basis-tensor magnitudes; no enumeration is needed.
    """
    tower = params.tower
    B = params.B if layout_blocks is None else layout_blocks
    T, n_t, d = params.T, params.n_t, tower.symbol_dim
    cc = params.coeff_count
    per_coeff = (params.M * params.M - 1) * 2.0 / 3.0  # E|a+ib|^2, parts odd in [-(M-1), M-1]
    total = 0.0
    for b in range(B):
        for pos in range(cc):
            coeffs = [0j] * cc
            coeffs[pos] = 1.0
            cw = encode_x(tower, coeffs, n_t)
            for i in range(n_t):
                for j in range(T):
                    v = tower.embed_raw(tower.phi_raw(cw.matrix[i][j].coords, b))
                    total += per_coeff * abs(v) ** 2
    return total / (B * n_t * T)


# ---------------------------------------------------------------------------
# non-vanishing determinant certificates
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NvdReport:
    min_value: Fraction
    pairs_checked: int
    mode: str
    argmin_coeffs: tuple[complex, ...] | None

    @property
    def min_value_str(self) -> str:
        return f"{self.min_value.numerator}/{self.min_value.denominator}"


def _nvd_of_delta(tower: Tower, delta: Sequence[complex]) -> Fraction:
    """|prod_i phi^i(det(DeltaX))|^2 for one coefficient difference vector."""
    T, d = tower.T, tower.symbol_dim
    ell = [tower.from_gaussian_coeffs(delta[i * d:(i + 1) * d]) for i in range(T)]
    gamma = tower.gamma_coords
    if T == 2:
        det = tower.sub_raw(
            tower.mul_raw(ell[0], tower.sigma_raw(ell[0], 1)),
            tower.mul_raw(gamma, tower.mul_raw(tower.sigma_raw(ell[1], 1), ell[1])),
        )
    else:
        rows = []
        for i in range(T):
            row = []
            for j in range(T):
                v = tower.sigma_raw(ell[(i - j) % T], j) if j else list(ell[i])
                if i < j:
                    v = tower.mul_raw(gamma, v)
                row.append(FieldElement(tower, tuple(v)))
            rows.append(row)
        det = det_exact(tower, rows).coords
    acc = list(det)
    cur = list(det)
    for _ in range(1, tower.m):
        cur = tower.phi_raw(cur)
        acc = tower.mul_raw(acc, cur)
    re, im = tower.base_pair(FieldElement(tower, tuple(acc)))
    return re * re + im * im


def nvd_min(
    tower: Tower,
    book: Codebook,
    mode: str = "auto",
    random_pairs: int = 100_000,
    seed: int = 0,
    exhaustive_cap: int = 2_000_000,
) -> NvdReport:
    """Minimum determinant-product magnitude over distinct codeword pairs.

    The code is linear in its coefficients, so the minimum over pairs
    equals the minimum over nonzero coefficient-difference vectors; the
    exhaustive mode enumerates that difference lattice exactly.  When the
    difference space is too large, `restricted` checks every difference
    with at most two nonzero coefficient positions exhaustively plus a
    seeded sample of random pairs.
    """
    diffs = book.constellation.differences()
    nonzero = [z for z in diffs if z != 0]
    free = book.free
    space = len(diffs) ** free
    if mode == "auto":
        mode = "exhaustive" if space <= exhaustive_cap else "restricted"
    if mode not in ("exhaustive", "restricted"):
        raise ValidationError(f"unknown nvd mode {mode!r}")

    cc = book.coeff_count
    best: Fraction | None = None
    arg = None
    checked = 0

    if mode == "exhaustive":
        if space > exhaustive_cap:
            raise ResourceLimitError(
                f"difference space holds {space} vectors, over the cap {exhaustive_cap}"
            )
        for combo in itertools.product(diffs, repeat=free):
            if all(z == 0 for z in combo):
                continue
            delta = list(combo) + [0j] * (cc - free)
            val = _nvd_of_delta(tower, delta)
            checked += 1
            if best is None or val < best:
                best, arg = val, tuple(delta)
        return NvdReport(best, checked, "exhaustive", arg)

    # restricted: all differences with <= 2 nonzero positions
    for p in range(free):
        for z in nonzero:
            delta = [0j] * cc
            delta[p] = z
            val = _nvd_of_delta(tower, delta)
            checked += 1
            if best is None or val < best:
                best, arg = val, tuple(delta)
    for p, q_pos in itertools.combinations(range(free), 2):
        for zp in nonzero:
            for zq in nonzero:
                delta = [0j] * cc
                delta[p] = zp
                delta[q_pos] = zq
                val = _nvd_of_delta(tower, delta)
                checked += 1
                if best is None or val < best:
                    best, arg = val, tuple(delta)
    rng = random.Random(seed)
    for _ in range(random_pairs):
        ia = rng.randrange(book.size)
        ib = rng.randrange(book.size)
        if ia == ib:
            continue
        ca = book.coeffs_of_index(ia)
        cb = book.coeffs_of_index(ib)
        delta = [a - b for a, b in zip(ca, cb)]
        val = _nvd_of_delta(tower, delta)
        checked += 1
        if best is None or val < best:
            best, arg = val, tuple(delta)
    return NvdReport(best, checked, "restricted", arg)
