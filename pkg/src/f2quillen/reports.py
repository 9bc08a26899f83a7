"""Report assembly and text rendering.

Every report is a plain JSON-ready dictionary; the text renderers read
only that dictionary, so rendering a report re-read from JSON gives the
same text as rendering it fresh.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .groups import Group, catalog_entries, elementary_abelian_subgroups, get_group, max_elementary_abelian_rank
from .limits import (
    DEFAULT_BUDGET,
    DEFAULT_S_MAX,
    BudgetExceeded,
    coefficient_system,
    edge_map,
    family_data,
    higher_limits,
    limit0,
    nilpotence_check,
    power_in_image_check,
)
from . import limits, resolve, ring
from .resolve import DEFAULT_MAX_DEGREE, minimal_resolution
from .ring import ring_table

SCHEMA_VERSION = 1
CONVENTION = "family includes the trivial subgroup; verdicts hold through the stated degree"


class ConfigError(ValueError):
    """Inconsistent run configuration."""


@dataclass
class RunConfig:
    groups: list[str] = field(default_factory=list)
    max_degree: int = DEFAULT_MAX_DEGREE
    nilpotence_k: int = 4
    power_e: int = 3
    power_degree: int | None = None
    s_max: int = DEFAULT_S_MAX
    limits_degree: int = 1
    budget: int = DEFAULT_BUDGET
    cache_dir: str | None = None
    jobs: int = 1
    timing: bool = False

    def __post_init__(self) -> None:
        if self.power_degree is None:
            self.power_degree = 2 << self.power_e if self.power_e >= 0 else 0

    def validate(self) -> None:
        if self.max_degree < 0 or self.max_degree > 20:
            raise ConfigError("max degree must lie in 0..20")
        if self.nilpotence_k < 1:
            raise ConfigError("nilpotence k must be positive")
        if self.max_degree < self.nilpotence_k:
            raise ConfigError("max degree must be at least the nilpotence k")
        if self.power_e < 0:
            raise ConfigError("power exponent must be non-negative")
        if self.power_degree < (1 << self.power_e) or self.power_degree > 20:
            raise ConfigError("power degree must lie in 2^e..20")
        if not 0 <= self.s_max <= 6:
            raise ConfigError("s_max must lie in 0..6")
        if self.limits_degree < 0 or self.limits_degree > self.max_degree:
            raise ConfigError("limits degree must lie in 0..max degree")
        if self.jobs < 1:
            raise ConfigError("jobs must be positive")
        for gid in self.groups:
            try:
                get_group(gid)
            except KeyError as exc:
                raise ConfigError(str(exc)) from exc

    def as_json(self) -> dict[str, Any]:
        return {
            "max_degree": self.max_degree,
            "nilpotence_k": self.nilpotence_k,
            "power_e": self.power_e,
            "power_degree": self.power_degree,
            "s_max": self.s_max,
            "limits_degree": self.limits_degree,
            "budget": self.budget,
        }


def _hex_rows(m: np.ndarray) -> list[str]:
    out = []
    for row in np.asarray(m, dtype=np.uint8):
        v = 0
        for i in np.flatnonzero(row):
            v |= 1 << int(i)
        out.append(format(v, "x"))
    return out


def clear_memos() -> None:
    """Drop every in-process memo so the next report is computed cold (disk cache aside)."""
    resolve.clear_memo()
    ring.clear_caches()
    limits.clear_caches()


def dumps(doc: dict[str, Any]) -> str:
    return json.dumps(doc, sort_keys=True, indent=1) + "\n"


# catalog ---------------------------------------------------------------------

def catalog_report(order: int | None = None) -> dict[str, Any]:
    entries = catalog_entries(order)
    return {
        "schema": "f2quillen.catalog",
        "schema_version": SCHEMA_VERSION,
        "order_filter": order,
        "groups": [{"id": e["id"], "order": e["order"], "spec": e["spec"]} for e in entries],
    }


def render_catalog(doc: dict[str, Any]) -> str:
    lines = [f"{len(doc['groups'])} groups"]
    for e in doc["groups"]:
        spec = json.dumps(e["spec"], sort_keys=True, separators=(",", ":"))
        lines.append(f"{e['id']:<12} {e['order']:>3}  {spec}")
    return "\n".join(lines) + "\n"


# cohomology -------------------------------------------------------------------

def cohomology_report(g: Group, n: int, cache_dir: str | None = None, products: bool = True) -> dict[str, Any]:
    table = ring_table(g, n, cache_dir=cache_dir)
    gens = []
    names = table.generator_names()
    for name, cls in zip(names, table.generator_classes()):
        gens.append({"name": name, "degree": cls.degree, "coords": format(cls.coords, "x")})
    doc: dict[str, Any] = {
        "schema": "f2quillen.cohomology",
        "schema_version": SCHEMA_VERSION,
        "group": g.id,
        "order": g.order,
        "max_degree": n,
        "dims": list(table.dims),
        "generator_counts": {str(d): c for d, c in table.generator_counts().items()},
        "generators": gens,
    }
    if products:
        prods = []
        for s in range(n + 1):
            for t in range(n + 1 - s):
                blk = table.block(s, t)
                rows = [[format(int.from_bytes(blk[i, j].tobytes(), "little"), "x") for j in range(blk.shape[1])] for i in range(blk.shape[0])]
                prods.append({"s": s, "t": t, "rows": rows})
        doc["products"] = prods
    return doc


def render_cohomology(doc: dict[str, Any]) -> str:
    lines = [
        f"H^*({doc['group']}; F2) through degree {doc['max_degree']}",
        "dims: " + " ".join(str(d) for d in doc["dims"]),
        "generators by degree: " + (", ".join(f"{d}:{c}" for d, c in sorted(doc["generator_counts"].items(), key=lambda kv: int(kv[0]))) or "none"),
    ]
    for gen in doc["generators"]:
        lines.append(f"  {gen['name']}  degree {gen['degree']}  coords {gen['coords']}")
    return "\n".join(lines) + "\n"


# quillen -------------------------------------------------------------------------

def _limits_entry(g: Group, t: int, cfg: RunConfig, cs=None) -> dict[str, Any]:
    cs = cs if cs is not None else coefficient_system(g, t, cfg.max_degree, cfg.cache_dir)
    hl = higher_limits(cs, cfg.s_max, cfg.budget, allow_partial=True)
    dims: list[int | None] = list(hl.dims) + [None] * (cfg.s_max + 1 - len(hl.dims))
    return {
        "t": t,
        "dims": dims,
        "cochain_dims": hl.cochain_dims,
        "dd_zero": hl.dd_zero,
        "skipped_from": hl.skipped_from,
    }


def quillen_report(g: Group, cfg: RunConfig, matrices: bool = True) -> dict[str, Any]:
    """Edge map, kernel, nilpotence and power verdicts, and low higher limits."""
    start = time.perf_counter()
    n = cfg.max_degree
    top = max(n, cfg.power_degree)
    minimal_resolution(g, top, cache_dir=cfg.cache_dir)
    data = family_data(g, top, cfg.cache_dir)
    cat = data.category
    degrees = []
    kernels = {}
    lim_entries = []
    for t in range(n + 1):
        cs = coefficient_system(g, t, top, cfg.cache_dir)
        ed = edge_map(g, t, top, cfg.cache_dir, cs=cs)
        kernels[t] = ed.kernel
        entry = {
            "t": t,
            "dim_H": int(ed.matrix.shape[1]),
            "dim_lim0": ed.lim0.dim,
            "edge_rank": ed.rank,
            "kernel_dim": ed.kernel_dim,
        }
        if matrices:
            entry["edge_matrix"] = _hex_rows(ed.lim0_coordinates())
        degrees.append(entry)
        if t <= cfg.limits_degree:
            lim_entries.append(_limits_entry(g, t, cfg, cs))
    nil = nilpotence_check(g, cfg.nilpotence_k, n, cfg.cache_dir, kernels=kernels)
    power = power_in_image_check(g, cfg.power_e, cfg.power_degree, cfg.cache_dir)
    doc: dict[str, Any] = {
        "schema": "f2quillen.quillen",
        "schema_version": SCHEMA_VERSION,
        "group": g.id,
        "order": g.order,
        "convention": CONVENTION,
        "config": cfg.as_json(),
        "family": {
            "objects": len(cat.objects),
            "morphisms": len(cat.morphisms),
            "max_rank": max_elementary_abelian_rank(g),
            "includes_trivial": True,
        },
        "degrees": degrees,
        "kernel_dims": [d["kernel_dim"] for d in degrees[1:]],
        "nilpotence": {
            "k": nil.k,
            "max_degree": nil.max_degree,
            "verdict": nil.verdict,
            "stage_dims": [[st[t] for t in range(1, n + 1)] for st in nil.stage_dims],
        },
        "power": {
            "e": power.e,
            "max_degree": power.max_degree,
            "degrees": power.degrees,
            "verdict": power.verdict,
            "failures": [list(f) for f in power.failures],
            "additivity_checked": power.additivity_checked,
        },
        "higher_limits": lim_entries,
    }
    if cfg.timing:
        doc["wall_time"] = round(time.perf_counter() - start, 3)
    return doc


def render_quillen(doc: dict[str, Any]) -> str:
    nil, power = doc["nilpotence"], doc["power"]
    fam = doc["family"]
    lines = [
        f"Quillen comparison for {doc['group']} (order {doc['order']})",
        f"family: {fam['objects']} elementary abelian subgroups (trivial included), {fam['morphisms']} morphisms, max rank {fam['max_rank']}",
        " t  dim H  dim lim0  rank  ker",
    ]
    for d in doc["degrees"]:
        lines.append(f"{d['t']:>2}  {d['dim_H']:>5}  {d['dim_lim0']:>8}  {d['edge_rank']:>4}  {d['kernel_dim']:>3}")
    lines.append(
        f"nilpotence: I^{nil['k']} {'vanishes' if nil['verdict'] else 'does not vanish'} through degree {nil['max_degree']}"
    )
    lines.append("  stage dims: " + " | ".join(",".join(str(x) for x in st) for st in nil["stage_dims"]))
    lines.append(
        f"power: v^{2 ** power['e']} in the image for lim0 degrees {','.join(str(t) for t in power['degrees'])}: "
        + ("yes" if power["verdict"] else "no")
    )
    for h in doc["higher_limits"]:
        lines.append(f"lim^s of H^{h['t']}: " + " ".join("-" if x is None else str(x) for x in h["dims"]))
    if "wall_time" in doc:
        lines.append(f"wall time: {doc['wall_time']}s")
    lines.append(f"convention: {doc['convention']}")
    return "\n".join(lines) + "\n"


# higher limits -----------------------------------------------------------------

def higher_limits_report(g: Group, t: int, s_max: int, budget: int = DEFAULT_BUDGET, cache_dir: str | None = None) -> dict[str, Any]:
    cs = coefficient_system(g, t, t, cache_dir)
    hl = higher_limits(cs, s_max, budget)
    return {
        "schema": "f2quillen.higher_limits",
        "schema_version": SCHEMA_VERSION,
        "group": g.id,
        "coeff_degree": t,
        "s_max": s_max,
        "budget": budget,
        "convention": CONVENTION,
        "dims": hl.dims,
        "cochain_dims": hl.cochain_dims,
        "dd_zero": hl.dd_zero,
        "lim0_equalizer": limit0(cs).dim,
    }


def render_higher_limits(doc: dict[str, Any]) -> str:
    lines = [
        f"higher limits of H^{doc['coeff_degree']} over the family of {doc['group']}",
        " s  dim C^s  dim lim^s",
    ]
    for s, (c, d) in enumerate(zip(doc["cochain_dims"], doc["dims"])):
        lines.append(f"{s:>2}  {c:>7}  {d:>9}")
    lines.append(f"d o d = 0: {'yes' if doc['dd_zero'] else 'no'}; equalizer lim0 dim {doc['lim0_equalizer']}")
    return "\n".join(lines) + "\n"


# batch table ---------------------------------------------------------------------

def group_summary(gid: str, cfg: RunConfig) -> dict[str, Any]:
    g = get_group(gid)
    start = time.perf_counter()
    q = quillen_report(g, cfg, matrices=False)
    out = {
        "group": gid,
        "order": g.order,
        "ea_subgroups": len(elementary_abelian_subgroups(g)),
        "max_rank": q["family"]["max_rank"],
        "kernel_dims": q["kernel_dims"],
        "nilpotence": q["nilpotence"]["verdict"],
        "power": q["power"]["verdict"],
        "power_degrees": q["power"]["degrees"],
        "lim": {str(h["t"]): h["dims"] for h in q["higher_limits"]},
        "dd_zero": all(h["dd_zero"] for h in q["higher_limits"]),
        "lim0_match": all(
            d["dim_lim0"] == h["dims"][0] for d, h in zip(q["degrees"], q["higher_limits"]) if h["dims"][0] is not None
        ),
    }
    if cfg.timing:
        out["wall_time"] = round(time.perf_counter() - start, 3)
    return out


def _summary_worker(args: tuple[str, RunConfig]) -> dict[str, Any]:
    return group_summary(*args)


def table_report(cfg: RunConfig) -> dict[str, Any]:
    ids = cfg.groups or [e["id"] for e in catalog_entries() if e["order"] <= 16]
    if cfg.jobs > 1 and len(ids) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            rows = list(pool.map(_summary_worker, [(gid, cfg) for gid in ids]))
    else:
        rows = [group_summary(gid, cfg) for gid in ids]
    return {
        "schema": "f2quillen.table",
        "schema_version": SCHEMA_VERSION,
        "convention": CONVENTION,
        "config": cfg.as_json(),
        "groups": rows,
        "all_verdicts": all(r["nilpotence"] and r["power"] for r in rows),
    }


def render_table(doc: dict[str, Any]) -> str:
    cfg = doc["config"]
    lines = [
        f"N={cfg['max_degree']} k={cfg['nilpotence_k']} e={cfg['power_e']} (power degree {cfg['power_degree']}) s_max={cfg['s_max']}",
        f"{'group':<12} {'order':>5} {'#E':>4} {'rk':>2}  {'nil':<4} {'pow':<4} kernel dims",
    ]
    timed = any("wall_time" in r for r in doc["groups"])
    for r in doc["groups"]:
        ker = ",".join(str(x) for x in r["kernel_dims"])
        line = f"{r['group']:<12} {r['order']:>5} {r['ea_subgroups']:>4} {r['max_rank']:>2}  {_yn(r['nilpotence']):<4} {_yn(r['power']):<4} {ker}"
        if timed:
            line += f"  {r.get('wall_time', 0)}s"
        lines.append(line)
    lines.append("lim^s dims (coefficient degree: s = 0..s_max; - means over budget)")
    for r in doc["groups"]:
        parts = [f"H^{t}: " + " ".join("-" if x is None else str(x) for x in dims) for t, dims in sorted(r["lim"].items(), key=lambda kv: int(kv[0]))]
        lines.append(f"  {r['group']:<12} " + "; ".join(parts))
    lines.append("all verdicts true" if doc["all_verdicts"] else "some verdicts false")
    lines.append(f"convention: {doc['convention']}")
    return "\n".join(lines) + "\n"


def _yn(v: bool) -> str:
    return "yes" if v else "no"


def table_csv(doc: dict[str, Any]) -> str:
    import csv
    import io

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    lim_keys = sorted({t for r in doc["groups"] for t in r["lim"]}, key=int)
    w.writerow(["group", "order", "ea_subgroups", "max_rank", "kernel_dims", "nilpotence", "power"] + [f"lim_H{t}" for t in lim_keys])
    for r in doc["groups"]:
        w.writerow(
            [r["group"], r["order"], r["ea_subgroups"], r["max_rank"], ";".join(str(x) for x in r["kernel_dims"]),
             str(r["nilpotence"]).lower(), str(r["power"]).lower()]
            + [";".join("" if x is None else str(x) for x in r["lim"].get(t, [])) for t in lim_keys]
        )
    return buf.getvalue()


RENDERERS = {
    "f2quillen.catalog": render_catalog,
    "f2quillen.cohomology": render_cohomology,
    "f2quillen.quillen": render_quillen,
    "f2quillen.higher_limits": render_higher_limits,
    "f2quillen.table": render_table,
}


def render(doc: dict[str, Any]) -> str:
    try:
        fn = RENDERERS[doc["schema"]]
    except KeyError as exc:
        raise ValueError("unknown report schema") from exc
    return fn(doc)


__all__ = [
    "BudgetExceeded",
    "ConfigError",
    "RunConfig",
    "catalog_report",
    "clear_memos",
    "cohomology_report",
    "dumps",
    "group_summary",
    "higher_limits_report",
    "quillen_report",
    "render",
    "table_csv",
    "table_report",
]
