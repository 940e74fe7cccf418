"""File-backed template store: one PTFP1 file per template under ``<root>/<id>.ptfp``."""

from __future__ import annotations

import math
import os
import re
import tempfile
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import kernels
from .errors import ConflictError, InputError, NotFoundError, StoreError
from .metrics import DEFAULT_THRESHOLD, accumulated_far, binomial_far
from .prep import Capture
from .texture import Fingerprint, GaborParams, extract_fingerprint, fractional_hamming, from_ptfp, to_ptfp

_ID_PATTERN = re.compile(r"^[A-Za-z0-9_-][A-Za-z0-9._-]{0,127}$")
SUFFIX = ".ptfp"
DEFAULT_DOF = 807


def check_id(template_id: str) -> str:
    if not isinstance(template_id, str) or not _ID_PATTERN.match(template_id):
        raise InputError(
            f"invalid template id {template_id!r}: use letters, digits, '.', '_' or '-' "
            "(not starting with '.')"
        )
    return template_id


class TemplateStore:
    """Directory of templates; all state lives on disk so the store survives restarts.

    Writes are atomic: the file is written and synced under a temporary name,
    then hard-linked to its final name (which fails if the id exists).
    """

    def __init__(self, root: str | Path, create: bool = True) -> None:
        self.root = Path(root)
        if create:
            self.root.mkdir(parents=True, exist_ok=True)
        elif not self.root.is_dir():
            raise StoreError(f"store {self.root} does not exist")

    def path(self, template_id: str) -> Path:
        return self.root / f"{check_id(template_id)}{SUFFIX}"

    def __contains__(self, template_id: str) -> bool:
        return self.path(template_id).is_file()

    def __len__(self) -> int:
        return len(self.ids())

    def ids(self) -> list[str]:
        # temp files of interrupted writers start with '.' and are never valid ids
        names = (p.name[: -len(SUFFIX)] for p in self.root.glob(f"*{SUFFIX}") if p.is_file())
        return sorted(n for n in names if _ID_PATTERN.match(n))

    def add(self, template_id: str, fp: Fingerprint) -> Path:
        target = self.path(template_id)
        if target.exists():
            raise ConflictError(f"template {template_id!r} already exists")
        fd, tmp = tempfile.mkstemp(prefix=".tmp-", suffix=SUFFIX, dir=self.root)
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                fh.write(to_ptfp(fp))
                fh.flush()
                os.fsync(fh.fileno())
            try:
                os.link(tmp, target)
            except FileExistsError:
                raise ConflictError(f"template {template_id!r} already exists") from None
        finally:
            os.unlink(tmp)
        return target

    def get(self, template_id: str) -> Fingerprint:
        p = self.path(template_id)
        try:
            text = p.read_text(encoding="utf-8")
        except FileNotFoundError:
            raise NotFoundError(f"no template {template_id!r}") from None
        return from_ptfp(text)

    def load_all(self) -> tuple[list[str], list[Fingerprint]]:
        ids = self.ids()
        return ids, [self.get(i) for i in ids]


def _as_fingerprint(probe, params: GaborParams | None, min_component_area: int) -> Fingerprint:
    if isinstance(probe, Fingerprint):
        return probe
    if isinstance(probe, Capture):
        return extract_fingerprint(probe, params or GaborParams(), min_component_area)
    raise InputError("probe must be a Capture or a Fingerprint")


def enroll(
    store: TemplateStore,
    capture,
    template_id: str,
    params: GaborParams | None = None,
    min_component_area: int = 100,
) -> str:
    check_id(template_id)
    if template_id in store:
        raise ConflictError(f"template {template_id!r} already exists")
    fp = _as_fingerprint(capture, params, min_component_area)
    meta = dict(fp.meta)
    meta["enrolled_at"] = datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")
    store.add(template_id, Fingerprint(fp.bits, fp.mask, fp.params, meta))
    return template_id


@dataclass
class MatchResult:
    accepted: bool
    hd: float
    template_id: str | None = None


def verify_claim(
    store: TemplateStore,
    probe,
    template_id: str,
    threshold: float = DEFAULT_THRESHOLD,
    params: GaborParams | None = None,
    min_component_area: int = 100,
) -> MatchResult:
    """One-to-one: accept iff the distance to the claimed template is <= threshold."""
    template = store.get(template_id)
    fp = _as_fingerprint(probe, params, min_component_area)
    hd = fractional_hamming(fp, template)
    return MatchResult(hd <= threshold, hd, template_id)


@dataclass
class IdentifyResult:
    match: str | None
    hd: float  # best distance found (nan if nothing comparable)
    candidates: int
    pairwise_far: float  # P1 at the threshold from the binomial model
    accumulated_far: float  # n * P1

    @property
    def accepted(self) -> bool:
        return self.match is not None


def identify(
    store: TemplateStore,
    probe,
    threshold: float = DEFAULT_THRESHOLD,
    params: GaborParams | None = None,
    min_component_area: int = 100,
    dof: int = DEFAULT_DOF,
) -> IdentifyResult:
    """Exhaustive one-to-many search; ties go to the lexicographically smallest id."""
    ids, templates = store.load_all()
    if not ids:
        raise StoreError("cannot identify against an empty store")
    fp = _as_fingerprint(probe, params, min_component_area)
    diff, joint = kernels.cross_counts(
        kernels.pack_bits(fp.bits),
        kernels.pack_bits(fp.mask),
        kernels.pack_bits(np.array([t.bits for t in templates])),
        kernels.pack_bits(np.array([t.mask for t in templates])),
    )
    diff, joint = diff[0], joint[0]
    best, best_hd = None, math.inf
    for i, tid in enumerate(ids):  # ids are sorted, strict < keeps the first of ties
        if joint[i] == 0:
            continue
        hd = diff[i] / joint[i]
        if hd < best_hd:
            best, best_hd = tid, float(hd)
    p1 = binomial_far(dof, threshold)
    acc = accumulated_far(p1, len(ids)).linear
    match = best if best is not None and best_hd <= threshold else None
    return IdentifyResult(match, best_hd if best is not None else math.nan, len(ids), p1, acc)
