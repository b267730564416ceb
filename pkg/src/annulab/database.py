"""Append-only line-delimited orbit store."""
from __future__ import annotations

import json
import math
from fractions import Fraction
from pathlib import Path

import numpy as np

from .core import annulus_distance
from .periodic import DEDUP_TOL


def dumps(record: dict) -> str:
    return json.dumps(record, sort_keys=True, separators=(",", ":"))


def _key(r: dict) -> tuple:
    return (r.get("family"), tuple(r.get("params") or ()), r.get("period"), r.get("rotation"))


def _same_points(a: dict, b: dict, tol: float) -> bool:
    pa, pb = np.asarray(a.get("points") or []), np.asarray(b.get("points") or [])
    if pa.shape != pb.shape:
        return False
    if pa.size == 0:
        return True
    d = annulus_distance(pa[:, None, 0], pa[:, None, 1], pb[None, :, 0], pb[None, :, 1])
    return bool(np.all(d.min(axis=1) < tol) and np.all(d.min(axis=0) < tol))


class OrbitDatabase:
    """Orbit records (plain dicts from ``to_dict``) kept in a JSONL file.

    Records are indexed by ``(family, params, period, rotation)``; an insert
    whose point set matches an indexed record within ``tol`` is dropped.
    Existing lines are never rewritten.
    """

    def __init__(self, path, tol: float = DEDUP_TOL):
        self.path = Path(path)
        self.tol = tol
        self.records: list[dict] = []
        self.index: dict[tuple, list[int]] = {}
        if self.path.exists():
            with self.path.open() as fh:
                for line in fh:
                    if line.strip():
                        self._remember(json.loads(line))

    def _remember(self, r: dict):
        self.index.setdefault(_key(r), []).append(len(self.records))
        self.records.append(r)

    def contains(self, r: dict) -> bool:
        return any(_same_points(r, self.records[i], self.tol) for i in self.index.get(_key(r), []))

    def add(self, records) -> int:
        """Append the records not yet present; returns how many were written."""
        new = []
        for r in records:
            d = r if isinstance(r, dict) else r.to_dict()
            if not self.contains(d):
                self._remember(d)
                new.append(d)
        if new:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with self.path.open("a") as fh:
                for d in new:
                    fh.write(dumps(d) + "\n")
        return len(new)

    def query(self, family: str | None = None, symmetric: bool | None = None,
              n0: int | None = None, period: int | None = None) -> list[dict]:
        out = []
        for r in self.records:
            if family is not None and r.get("family") != family:
                continue
            if symmetric is not None and bool(r.get("symmetric")) != symmetric:
                continue
            if n0 is not None and math.gcd(int(r["period"]), n0) != 1:
                continue
            if period is not None and int(r["period"]) != period:
                continue
            out.append(r)
        return out

    def stats(self) -> dict:
        periods: dict[int, int] = {}
        for r in self.records:
            p = r.get("period")
            if isinstance(p, int):
                periods[p] = periods.get(p, 0) + 1
        return {"records": len(self.records), "keys": len(self.index),
                "periods": {str(k): periods[k] for k in sorted(periods)}}

    def __len__(self):
        return len(self.records)


def rotation_of(record: dict) -> Fraction:
    return Fraction(record["rotation"])
