"""Experiment records: canonical ids, JSON-lines persistence, validation.

Each experiment emits one immutable record carrying the geometry family,
its similarity dimension, the degeneracy order, scalar outputs, and enough
provenance (seed, version, wall time) to reproduce the run. Records are
appended to a JSON-lines stream; sweeps use the id set for resumption.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

from .simsys import koch_snowflake, vicsek, cantor_dust, similarity_dimension, critical_delta

_MAKERS = {
    "koch": lambda lam, dim, depth: koch_snowflake(lam, depth),
    "vicsek": lambda lam, dim, depth: vicsek(lam, dim, depth),
    "cantor-dust": lambda lam, dim, depth: cantor_dust(lam, dim, depth),
}

_VALIDATION_TOL = 1e-9


def make_geometry(family: str, lam: float, dim: int, depth: int):
    """Realize a named family; `cantor` is accepted for `cantor-dust`."""
    key = "cantor-dust" if family == "cantor" else family
    if key not in _MAKERS:
        raise ValueError(f"unknown family {family!r}")
    if key == "koch" and dim != 2:
        raise ValueError("koch snowflakes are planar; use --d 2")
    return _MAKERS[key](lam, dim, depth)


def family_dimension(family: str, lam: float, dim: int) -> float:
    """Similarity dimension of a named family, via the moment equation."""
    system = make_geometry(family, lam, dim, 1).system
    return similarity_dimension(system)


@dataclass(frozen=True)
class ExperimentRecord:
    id: str
    op: str
    family: str
    lam: float
    depth: int | None
    dim: int
    s: float
    delta: float | None
    delta_c: float
    resolution: int | None
    outputs: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)
    seed: int = 0
    wall_time: float = 0.0
    version: str = ""

    def to_json(self) -> str:
        payload = {
            "id": self.id,
            "op": self.op,
            "family": self.family,
            "lambda": self.lam,
            "depth": self.depth,
            "d": self.dim,
            "s": self.s,
            "delta": self.delta,
            "delta_c": self.delta_c,
            "resolution": self.resolution,
            "outputs": self.outputs,
            "tolerances": self.tolerances,
            "seed": self.seed,
            "wall_time": self.wall_time,
            "version": self.version,
        }
        return json.dumps(payload, sort_keys=True, allow_nan=False)

    @classmethod
    def from_json(cls, line: str) -> "ExperimentRecord":
        raw = json.loads(line)
        rec = cls(
            id=raw["id"],
            op=raw["op"],
            family=raw["family"],
            lam=raw["lambda"],
            depth=raw["depth"],
            dim=raw["d"],
            s=raw["s"],
            delta=raw["delta"],
            delta_c=raw["delta_c"],
            resolution=raw["resolution"],
            outputs=raw["outputs"],
            tolerances=raw["tolerances"],
            seed=raw["seed"],
            wall_time=raw["wall_time"],
            version=raw["version"],
        )
        s_check = family_dimension(rec.family, rec.lam, rec.dim)
        if abs(s_check - rec.s) > _VALIDATION_TOL:
            raise ValueError(f"record {rec.id}: stored s {rec.s} != recomputed {s_check}")
        dc_check = critical_delta(s_check, rec.dim)
        if abs(dc_check - rec.delta_c) > _VALIDATION_TOL:
            raise ValueError(
                f"record {rec.id}: stored delta_c {rec.delta_c} != recomputed {dc_check}"
            )
        if not rec.version:
            raise ValueError(f"record {rec.id}: missing version tag")
        return rec


def record_id(params: dict) -> str:
    """Stable 16-hex id from the canonical parameter serialization."""
    canon = json.dumps(params, sort_keys=True, allow_nan=False)
    return hashlib.sha1(canon.encode()).hexdigest()[:16]


def derive_seed(top_seed: int, rid: str) -> int:
    """Expand one top-level seed into a per-experiment 63-bit seed."""
    digest = hashlib.sha256(f"{top_seed}:{rid}".encode()).digest()
    return int.from_bytes(digest[:8], "big") >> 1


def append_record(path: str, rec: ExperimentRecord) -> None:
    with open(path, "a", encoding="utf-8") as fh:
        fh.write(rec.to_json() + "\n")


def load_records(path: str) -> list[ExperimentRecord]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(ExperimentRecord.from_json(line))
    return out


def load_ids(path: str) -> set[str]:
    """Ids already present in a record stream; empty if the file is absent."""
    try:
        fh = open(path, encoding="utf-8")
    except FileNotFoundError:
        return set()
    with fh:
        ids = set()
        for line in fh:
            line = line.strip()
            if line:
                ids.add(json.loads(line)["id"])
        return ids
