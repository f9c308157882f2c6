"""Named example maps with their error maps and sup constants."""
from __future__ import annotations

import math
from fractions import Fraction
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .additivity import ErrorMap, counterexample_map
from .lattice import Box
from .setmaps import GroupAction, SetMap, birkhoff_map
from .shift import CylinderFunction, SampleSet
from .sequences import cocycle_constant, matrix_cocycle_seq, typewriter_map, weak_gibbs_seq
from .values import ValueSpace

GALLERY = ("counterexample", "typewriter", "cocycle", "bernoulli-birkhoff", "weak-gibbs")

DEFAULT_A0 = ((2.0, 1.0), (1.0, 1.0))
DEFAULT_A1 = ((1.0, 1.0), (1.0, 2.0))


@dataclass
class GalleryEntry:
    name: str
    phi: SetMap
    b: ErrorMap | None
    b_sup: float | None
    phi_sup: float
    notes: dict = field(default_factory=dict)
    extras: dict = field(default_factory=dict)

    @property
    def constants(self) -> tuple[float, float] | None:
        return None if self.b_sup is None else (self.b_sup, self.phi_sup)


def _row_norm(M) -> float:
    return float(np.abs(np.asarray(M, dtype=float)).sum(axis=1).max())


def gallery_entry(name: str, seed: int = 0, samples: int = 8, p: float = 0.5, A0=DEFAULT_A0, A1=DEFAULT_A1,
                  stated_error: bool = False) -> GalleryEntry:
    """Build one gallery map.

    ``samples`` and ``seed`` fix the sample set used as the sup-norm
    estimator on shift-valued maps. ``stated_error`` selects the error map
    ``1 + |F|/log(1 + |F|)`` for the counterexample instead of the valid
    ``2|F|/log(1 + |F|)``.
    """
    if name == "counterexample":
        b = ErrorMap.counterexample_stated() if stated_error else ErrorMap.counterexample_valid()
        return GalleryEntry(name, counterexample_map(), b, float(b(Box([0], [1]))), 1.0,
                            {"phi_sup": "clipped singleton value, attained at |F| = 1"})
    if name == "typewriter":
        return GalleryEntry(name, typewriter_map(), None, None, 1.0,
                            {"error": "no null-density error map: the map is not almost additive"})
    sampler = SampleSet.bernoulli(p, seed, samples)
    if name == "cocycle":
        seq = matrix_cocycle_seq(A0, A1)
        C = cocycle_constant(A0, A1)
        logs = [math.log(_row_norm(A)) for A in (A0, A1)]
        phi_sup = max(max(logs), C - min(logs))
        return GalleryEntry(name, seq.set_map(sampler), ErrorMap.constant(C), C, phi_sup,
                            {"norm": "max row sum", "C": "minimum column ratio bound"}, {"sequence": seq})
    if name == "bernoulli-birkhoff":
        f = CylinderFunction.coordinate(0) - 0.5
        phi = birkhoff_map(f, GroupAction.koopman(1), ValueSpace("sampled", p=math.inf, sampler=sampler),
                           "bernoulli-birkhoff")
        return GalleryEntry(name, phi, ErrorMap.zero(), 0.0, 0.5, {}, {"f": f})
    if name == "weak-gibbs":
        seq = weak_gibbs_seq(p, "weak", seed)
        phi_sup = max(-math.log(p), -math.log1p(-p)) + 1.0
        return GalleryEntry(name, seq.set_map(sampler), ErrorMap.sqrt_size(2.0), 2.0, phi_sup,
                            {"error": "2 sqrt|F| from the triangle inequality on the perturbation"},
                            {"sequence": seq})
    raise KeyError(f"unknown gallery map {name!r}; choose from {', '.join(GALLERY)}")


def _parse_params(text: str) -> dict:
    out = {}
    for item in filter(None, (t.strip() for t in text.split(","))):
        if "=" not in item:
            raise ValueError(f"expected key=value, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def parse_map_spec(spec: str, dim: int = 1, **kw) -> GalleryEntry:
    """Resolve ``name`` or ``name:key=value,...``.

    Besides the gallery names, ``birkhoff:const=c`` is the additive scalar map
    ``F ↦ c|F|`` under the trivial action (error map zero).
    """
    name, _, rest = spec.partition(":")
    params = _parse_params(rest)
    if name == "birkhoff":
        unknown = set(params) - {"const"}
        if unknown:
            raise ValueError(f"unknown birkhoff parameter(s): {', '.join(sorted(unknown))}")
        raw = params.get("const", "1")
        c = Fraction(raw)
        c = int(c) if c.denominator == 1 else c
        phi = birkhoff_map(c, GroupAction.trivial(dim), ValueSpace("scalar"), f"birkhoff:const={raw}")
        return GalleryEntry(spec, phi, ErrorMap.zero(), 0.0, float(abs(c)), {"action": "trivial"})
    if params:
        allowed = {"p", "samples", "seed"}
        unknown = set(params) - allowed
        if unknown:
            raise ValueError(f"unknown map parameter(s): {', '.join(sorted(unknown))}")
        for k in ("samples", "seed"):
            if k in params:
                kw[k] = int(params[k])
        if "p" in params:
            kw["p"] = float(params["p"])
    return gallery_entry(name, **kw)


def describe(entry: GalleryEntry) -> dict[str, Any]:
    return {"name": entry.name, "b": None if entry.b is None else entry.b.name, "b_sup": entry.b_sup,
            "phi_sup": entry.phi_sup, "domain": entry.phi.domain, "space": entry.phi.space.kind,
            "action": entry.phi.action.kind, "notes": entry.notes}
