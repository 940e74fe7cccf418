"""Decision-landscape statistics and PUF metrics over fingerprint datasets.

Sheets and samples are indexed from 0 in this module (``n`` in ``range(N)``,
``t`` in ``range(T)``, ``l`` in ``range(L)``).
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import kernels
from .errors import DegenerateInputError, InputError, ParameterError
from .texture import Fingerprint

DEFAULT_THRESHOLD = 0.4


@dataclass
class DatasetIndex:
    bits: np.ndarray  # (N, T, L) uint8
    masks: np.ndarray  # (N, T, L) uint8
    sheet_ids: list[str] = field(default_factory=list)
    sample_ids: list[list[str]] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.bits = np.asarray(self.bits, dtype=np.uint8)
        self.masks = np.asarray(self.masks, dtype=np.uint8)
        if self.bits.ndim != 3 or self.bits.shape != self.masks.shape:
            raise InputError("bits and masks must both be (N, T, L)")
        n, t, _ = self.bits.shape
        if not self.sheet_ids:
            self.sheet_ids = [str(i) for i in range(n)]
        if not self.sample_ids:
            self.sample_ids = [[str(j) for j in range(t)] for _ in range(n)]
        if len(self.sheet_ids) != n or any(len(s) != t for s in self.sample_ids):
            raise InputError("id lists do not match the (N, T) layout")

    @property
    def shape(self) -> tuple[int, int, int]:
        return tuple(self.bits.shape)  # type: ignore[return-value]

    @classmethod
    def from_fingerprints(cls, fingerprints: dict) -> "DatasetIndex":
        """Build from ``{(sheet_id, sample_id): Fingerprint}``; every sheet needs the same T."""
        by_sheet: dict[str, dict[str, Fingerprint]] = {}
        for (sheet, sample), fp in fingerprints.items():
            by_sheet.setdefault(sheet, {})[sample] = fp
        if not by_sheet:
            raise InputError("empty dataset")
        sheets = sorted(by_sheet)
        counts = {len(by_sheet[s]) for s in sheets}
        if len(counts) != 1:
            raise InputError(f"incomplete index: samples per sheet vary {sorted(counts)}")
        sample_ids = [sorted(by_sheet[s]) for s in sheets]
        bits = np.array([[by_sheet[s][t].bits for t in ts] for s, ts in zip(sheets, sample_ids)])
        masks = np.array([[by_sheet[s][t].mask for t in ts] for s, ts in zip(sheets, sample_ids)])
        return cls(bits, masks, sheets, sample_ids)

    def effective_bits(self, masked: bool = False) -> np.ndarray:
        """Bits used by the PUF metrics: raw, or only positions valid in every mask."""
        if not masked:
            return self.bits
        keep = self.masks.all(axis=(0, 1))
        if not keep.any():
            raise DegenerateInputError("no bit position is valid in every fingerprint")
        return self.bits[:, :, keep]


@dataclass
class DistributionSummary:
    mean: float
    std: float  # population standard deviation
    count: int = 0
    min: float = math.nan
    max: float = math.nan

    @classmethod
    def of(cls, values) -> "DistributionSummary":
        v = np.asarray(values, dtype=np.float64)
        if v.size == 0:
            raise InputError("cannot summarise an empty distribution")
        return cls(float(v.mean()), float(v.std()), int(v.size), float(v.min()), float(v.max()))


@dataclass
class PairwiseDistances:
    same: np.ndarray
    different: np.ndarray
    same_pairs: np.ndarray  # (k, 4) rows of (n1, t1, n2, t2)
    different_pairs: np.ndarray
    excluded: int = 0


def pairwise_distances(ds: DatasetIndex, chunk: int = 512) -> PairwiseDistances:
    """Masked fractional distance for every unordered pair, split by origin."""
    n, t, length = ds.shape
    flat_bits = kernels.pack_bits(ds.bits.reshape(n * t, length))
    flat_mask = kernels.pack_bits(ds.masks.reshape(n * t, length))
    sheet_of = np.repeat(np.arange(n), t)
    sample_of = np.tile(np.arange(t), n)
    total = n * t
    hd_parts, a_parts, b_parts = [], [], []
    excluded = 0
    for start in range(0, total, chunk):
        stop = min(start + chunk, total)
        diff, joint = kernels.cross_counts(
            flat_bits[start:stop], flat_mask[start:stop], flat_bits[start:], flat_mask[start:]
        )
        ia, ib = np.nonzero(np.triu(np.ones(diff.shape, dtype=bool), k=1))
        d, j = diff[ia, ib], joint[ia, ib]
        ok = j > 0
        excluded += int((~ok).sum())
        hd_parts.append(d[ok] / j[ok])
        a_parts.append(ia[ok] + start)
        b_parts.append(ib[ok] + start)
    hd = np.concatenate(hd_parts) if hd_parts else np.empty(0)
    a = np.concatenate(a_parts) if a_parts else np.empty(0, dtype=np.int64)
    b = np.concatenate(b_parts) if b_parts else np.empty(0, dtype=np.int64)
    if excluded:
        warnings.warn(f"{excluded} incomparable pairs (empty joint mask) excluded", stacklevel=2)
    pairs = np.column_stack([sheet_of[a], sample_of[a], sheet_of[b], sample_of[b]])
    same = pairs[:, 0] == pairs[:, 2]
    return PairwiseDistances(hd[same], hd[~same], pairs[same], pairs[~same], excluded)


def summarize_distributions(ds: DatasetIndex) -> tuple[DistributionSummary, DistributionSummary]:
    """Same-group and different-group HD summaries (requires N >= 2 and T >= 2)."""
    n, t, _ = ds.shape
    if n < 2 or t < 2:
        raise InputError("need at least two sheets with two samples each")
    pd = pairwise_distances(ds)
    return DistributionSummary.of(pd.same), DistributionSummary.of(pd.different)


def decidability(s1: DistributionSummary, s2: DistributionSummary) -> float:
    """Daugman's d' = |mu1 - mu2| / sqrt((sigma1^2 + sigma2^2) / 2)."""
    pooled = (s1.std**2 + s2.std**2) / 2.0
    if pooled <= 0:
        raise DegenerateInputError("both distributions have zero spread")
    return abs(s1.mean - s2.mean) / math.sqrt(pooled)


def degrees_of_freedom(different: DistributionSummary) -> float:
    """Binomial fit N = mu (1 - mu) / sigma^2 of the different-group distribution."""
    mu, sigma = different.mean, different.std
    if not 0.0 < mu < 1.0:
        raise ParameterError(f"mean {mu} must lie in (0, 1)")
    if not sigma > 0.0:
        raise ParameterError("standard deviation must be positive")
    return mu * (1.0 - mu) / sigma**2


def error_rates_at_threshold(same, different, threshold: float) -> tuple[float, float]:
    """(FAR, FRR): different-group HDs <= threshold, same-group HDs > threshold."""
    if not 0.0 < threshold < 1.0:
        raise ParameterError("threshold must lie in (0, 1)")
    same = np.asarray(same, dtype=np.float64)
    different = np.asarray(different, dtype=np.float64)
    if same.size == 0 or different.size == 0:
        raise InputError("need non-empty same- and different-group distances")
    far = float(np.count_nonzero(different <= threshold) / different.size)
    frr = float(np.count_nonzero(same > threshold) / same.size)
    return far, frr


def _accept_count(dof: int, threshold: float) -> int:
    # guards floor() against values like 0.29 * 100 = 28.999999999999996
    return math.floor(threshold * dof + 1e-9)


def binomial_far(dof: int, threshold: float, p: float = 0.5, exact: bool | None = None) -> float:
    """P(X <= floor(threshold * dof)) for X ~ Binomial(dof, p).

    Exact rational summation by default (``dof <= 20000``); otherwise a
    log-domain sum.  Both avoid the underflow of naive float accumulation.
    """
    if dof < 1:
        raise ParameterError("degrees of freedom must be >= 1")
    if not 0.0 < threshold < 1.0:
        raise ParameterError("threshold must lie in (0, 1)")
    if not 0.0 <= p <= 1.0:
        raise ParameterError("p must lie in [0, 1]")
    k = _accept_count(dof, threshold)
    if exact is None:
        exact = dof <= 20000
    if exact:
        q = Fraction(p)
        total = sum(math.comb(dof, i) * q**i * (1 - q) ** (dof - i) for i in range(k + 1))
        return float(total)
    if p in (0.0, 1.0):
        return 1.0 if p == 0.0 or k >= dof else 0.0
    i = np.arange(k + 1, dtype=np.float64)
    logs = (
        math.lgamma(dof + 1)
        - np.array([math.lgamma(v + 1) for v in i])
        - np.array([math.lgamma(dof - v + 1) for v in i])
        + i * math.log(p)
        + (dof - i) * math.log1p(-p)
    )
    top = logs.max()
    return float(min(1.0, math.exp(top) * np.exp(logs - top).sum()))


@dataclass
class AccumulatedFAR:
    exact: float  # 1 - (1 - p1)^n
    linear: float  # n * p1


def accumulated_far(p1: float, n: float) -> AccumulatedFAR:
    """One-to-many false acceptance over a database of ``n`` templates."""
    if not 0.0 <= p1 <= 1.0:
        raise ParameterError("p1 must lie in [0, 1]")
    if n < 1:
        raise ParameterError("n must be >= 1")
    exact = 1.0 if p1 == 1.0 else -math.expm1(n * math.log1p(-p1))
    return AccumulatedFAR(exact, n * p1)


def max_database_size(p1: float, target: float = 1e-6) -> float:
    """Largest n with ``1 - (1 - p1)^n < target``."""
    if p1 <= 0.0:
        return math.inf
    if not 0.0 < target < 1.0:
        raise ParameterError("target must lie in (0, 1)")
    n = math.floor(math.log1p(-target) / math.log1p(-p1))
    while n > 1 and accumulated_far(p1, n).exact >= target:
        n -= 1
    return float(n)


# ---------------------------------------------------------------------------
# PUF metrics (space, time and device dimensions)


def _check_sheet(r: np.ndarray, n: int) -> None:
    if not 0 <= n < r.shape[0]:
        raise InputError(f"sheet index {n} out of range 0..{r.shape[0] - 1}")


def uniformity(ds: DatasetIndex, n: int, t: int, masked: bool = False) -> float:
    r = ds.effective_bits(masked)
    _check_sheet(r, n)
    if not 0 <= t < r.shape[1]:
        raise InputError(f"sample index {t} out of range")
    return float(r[n, t].mean())


def randomness(ds: DatasetIndex, n: int, masked: bool = False) -> float:
    r = ds.effective_bits(masked)
    _check_sheet(r, n)
    p = float(r[n].mean())
    return -math.log2(max(p, 1.0 - p))


def reliability(ds: DatasetIndex, n: int, masked: bool = False) -> float:
    r = ds.effective_bits(masked)
    _check_sheet(r, n)
    t, length = r.shape[1], r.shape[2]
    if t < 2:
        raise InputError("reliability needs at least two samples per sheet")
    ones = r[n].sum(axis=0, dtype=np.int64)
    # pairs disagreeing at a bit = ones * zeros
    disagreements = int((ones * (t - ones)).sum())
    return 1.0 - 2.0 * disagreements / (t * (t - 1) * length)


def steadiness(ds: DatasetIndex, n: int, masked: bool = False) -> float:
    r = ds.effective_bits(masked)
    _check_sheet(r, n)
    p = r[n].mean(axis=0)
    return float(1.0 + np.log2(np.maximum(p, 1.0 - p)).mean())


def uniqueness(ds: DatasetIndex, n: int, masked: bool = False) -> float:
    r = ds.effective_bits(masked)
    _check_sheet(r, n)
    big_n, t, length = r.shape
    if big_n < 2:
        raise InputError("uniqueness needs at least two sheets")
    own = r[n].sum(axis=0, dtype=np.int64)
    others = r.sum(axis=(0, 1), dtype=np.int64) - own
    other_count = (big_n - 1) * t
    xor_total = int((own * (other_count - others) + (t - own) * others).sum())
    return xor_total / (t * t * length * (big_n - 1))


def bit_aliasing(ds: DatasetIndex, l: int, masked: bool = False) -> float:
    r = ds.effective_bits(masked)
    if not 0 <= l < r.shape[2]:
        raise InputError(f"bit index {l} out of range")
    return float(r[:, :, l].mean())


def puf_averages(ds: DatasetIndex, masked: bool = False) -> dict[str, float]:
    """Dataset averages of the six PUF metrics."""
    r = ds.effective_bits(masked)
    big_n, t, length = r.shape
    out = {
        "uniformity": float(np.mean([uniformity(ds, i, j, masked) for i in range(big_n) for j in range(t)])),
        "randomness": float(np.mean([randomness(ds, i, masked) for i in range(big_n)])),
        "steadiness": float(np.mean([steadiness(ds, i, masked) for i in range(big_n)])),
        "bit_aliasing": float(r.mean(axis=(0, 1)).mean()),
    }
    out["reliability"] = (
        float(np.mean([reliability(ds, i, masked) for i in range(big_n)])) if t >= 2 else math.nan
    )
    out["uniqueness"] = (
        float(np.mean([uniqueness(ds, i, masked) for i in range(big_n)])) if big_n >= 2 else math.nan
    )
    return out


# ---------------------------------------------------------------------------
# Report


@dataclass
class MetricsReport:
    same_group: DistributionSummary
    different_group: DistributionSummary
    decidability: float
    degrees_of_freedom: float
    threshold: float
    far_at_threshold: float
    frr_at_threshold: float
    puf_uniformity_avg: float
    puf_randomness_avg: float
    puf_reliability_avg: float
    puf_steadiness_avg: float
    puf_uniqueness_avg: float
    puf_bit_aliasing_avg: float
    excluded_pairs: int = 0
    warnings: list[str] = field(default_factory=list)

    def to_text(self) -> str:
        lines = []
        for prefix, s in (("same", self.same_group), ("different", self.different_group)):
            lines += [
                f"{prefix}.count={s.count}",
                f"{prefix}.mean={s.mean:.6f}",
                f"{prefix}.std={s.std:.6f}",
                f"{prefix}.min={s.min:.6f}",
                f"{prefix}.max={s.max:.6f}",
            ]
        lines += [
            f"decidability={self.decidability:.6f}",
            f"degrees_of_freedom={self.degrees_of_freedom:.3f}",
            f"threshold={self.threshold}",
            f"far={self.far_at_threshold:.6g}",
            f"frr={self.frr_at_threshold:.6g}",
            f"puf.uniformity={self.puf_uniformity_avg:.6f}",
            f"puf.randomness={self.puf_randomness_avg:.6f}",
            f"puf.reliability={self.puf_reliability_avg:.6f}",
            f"puf.steadiness={self.puf_steadiness_avg:.6f}",
            f"puf.uniqueness={self.puf_uniqueness_avg:.6f}",
            f"puf.bit_aliasing={self.puf_bit_aliasing_avg:.6f}",
            f"excluded_pairs={self.excluded_pairs}",
        ]
        lines += [f"warning={w}" for w in self.warnings]
        return "\n".join(lines) + "\n"


def evaluate(
    ds: DatasetIndex, threshold: float = DEFAULT_THRESHOLD, masked_puf: bool = False
) -> tuple[MetricsReport, PairwiseDistances]:
    """All biometric and PUF metrics for one dataset.

    Degenerate statistics (zero spread, mean outside (0, 1)) become NaN with a
    warning in the report instead of aborting the evaluation.
    """
    n, t, _ = ds.shape
    if n < 2 or t < 2:
        raise InputError("evaluation needs at least two sheets with two samples each")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        pd = pairwise_distances(ds)
    notes: list[str] = []
    if pd.excluded:
        notes.append(f"{pd.excluded} incomparable pairs excluded")
    same, diff = DistributionSummary.of(pd.same), DistributionSummary.of(pd.different)
    try:
        d_prime = decidability(same, diff)
    except DegenerateInputError as exc:
        d_prime = math.nan
        notes.append(f"decidability undefined: {exc}")
    try:
        dof = degrees_of_freedom(diff)
    except ParameterError as exc:
        dof = math.nan
        notes.append(f"degrees of freedom undefined: {exc}")
    far, frr = error_rates_at_threshold(pd.same, pd.different, threshold)
    puf = puf_averages(ds, masked_puf)
    report = MetricsReport(
        same_group=same,
        different_group=diff,
        decidability=d_prime,
        degrees_of_freedom=dof,
        threshold=threshold,
        far_at_threshold=far,
        frr_at_threshold=frr,
        puf_uniformity_avg=puf["uniformity"],
        puf_randomness_avg=puf["randomness"],
        puf_reliability_avg=puf["reliability"],
        puf_steadiness_avg=puf["steadiness"],
        puf_uniqueness_avg=puf["uniqueness"],
        puf_bit_aliasing_avg=puf["bit_aliasing"],
        excluded_pairs=pd.excluded,
        warnings=notes,
    )
    return report, pd


def write_pairs_csv(path: str | Path, ds: DatasetIndex, pd: PairwiseDistances) -> None:
    """CSV ``pair_type,n1,t1,n2,t2,hd`` with sheet and sample ids."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["pair_type", "n1", "t1", "n2", "t2", "hd"])
        for kind, pairs, hds in (
            ("same", pd.same_pairs, pd.same),
            ("different", pd.different_pairs, pd.different),
        ):
            for (n1, t1, n2, t2), hd in zip(pairs.tolist(), hds.tolist()):
                w.writerow(
                    [kind, ds.sheet_ids[n1], ds.sample_ids[n1][t1], ds.sheet_ids[n2],
                     ds.sample_ids[n2][t2], f"{hd:.6f}"]
                )
