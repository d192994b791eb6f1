"""Command-line front end: eval, certify, descend, santalo and scan."""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from . import polygon as pg
from . import polytope as pt
from .descent import DescentOptions, descend, parallelogram_fit
from .errors import MahlerError, NotCritical, ParseError
from .formats import (
    _load,
    body_from_dict,
    certificate_to_dict,
    dumps,
    error_report,
    read_polytope,
    trace_csv,
    write_body,
)
from .functional import area, check_concavity_bound, polar_area
from .support import (
    CONVEX_TOL,
    DEFAULT_N,
    GridSupport,
    cell_masses,
    is_convex,
    random_half_perturbation,
    random_perturbation,
    random_smooth_body,
)

log = logging.getLogger("mahler")

EXIT_OK = 0
EXIT_NO_CERTIFICATE = 1
EXIT_ERROR = 2
SCAN_KINDS = ("mahler-bounds", "concavity", "duality", "kuperberg-3d")


@dataclass(frozen=True)
class RunConfig:
    command: str
    input: Optional[Path] = None
    output: Optional[Path] = None
    seed: int = 0
    grid_n: int = DEFAULT_N
    tol: float = 1e-8
    max_iters: int = 2000
    snapshot_every: int = 0
    kind: Optional[str] = None
    count: int = 100

    def __post_init__(self):
        if self.tol <= 0:
            raise MahlerError(f"--tol must be positive, got {self.tol}", invariant="tol > 0")
        if self.grid_n < 8 or self.grid_n % 2:
            raise MahlerError(f"--grid-n must be even and >= 8, got {self.grid_n}",
                              invariant="n even >= 8")
        if self.max_iters < 0 or self.count < 0 or self.snapshot_every < 0:
            raise MahlerError("iteration caps and counts must be non-negative",
                              invariant="non-negative caps")


def _emit(cfg: RunConfig, report: dict):
    text = dumps(report)
    if cfg.output is not None and cfg.command != "descend":
        Path(cfg.output).write_text(text)
    sys.stdout.write(text)


def _require_input(cfg: RunConfig) -> dict:
    if cfg.input is None:
        raise ParseError(f"{cfg.command} needs --input")
    return _load(cfg.input)


def cmd_eval(cfg: RunConfig) -> int:
    data = _require_input(cfg)
    if "dim" in data and "type" not in data:
        P = read_polytope(cfg.input)
        vol, pvol = pt.volume(P), pt.volume(pt.polar(P))
        _emit(cfg, {"type": "polytope", "dim": P.dim, "vertices": P.n_vertices,
                    "facets": P.n_facets, "volume": vol, "polar_volume": pvol,
                    "M": vol * pvol, "kuperberg_gap": pt.kuperberg_gap(P)})
        return EXIT_OK
    body = body_from_dict(data)
    if isinstance(body, GridSupport):
        mu = cell_masses(body.samples)
        a, b = area(body, check=False), polar_area(body)
        report = {"type": "grid", "n": body.n, "A": a, "B": b, "M": a * b,
                  "symmetric": body.is_symmetric(1e-9),
                  "convex": is_convex(body, CONVEX_TOL),
                  "min_cell_mass": float(mu.min()),
                  "min_support": float(body.samples.min())}
    else:
        a, b = pg.area_exact(body), pg.polar_area_exact(body)
        sym = body.is_symmetric()
        report = {"type": "polygon", "m": body.m, "A": a, "B": b, "M": a * b,
                  "symmetric": sym, "convex": True,
                  "min_edge_length": float(body.masses.min()),
                  "foc_residual": pg.foc_residual(body) if sym else None}
    _emit(cfg, report)
    return EXIT_OK


def cmd_certify(cfg: RunConfig) -> int:
    body = body_from_dict(_require_input(cfg))
    if not isinstance(body, pg.PolygonSupport):
        raise ParseError("certify needs a polygon body")
    try:
        cert = pg.certify_nonminimal(body, tol=cfg.tol)
    except NotCritical as exc:
        res = float(np.abs(pg.foc_residual(body)).max())
        raise NotCritical(f"not critical: first-order condition residual {res:.3e} "
                          f"exceeds tolerance {cfg.tol:g}",
                          invariant="first-order criticality") from exc
    if cert is None:
        _emit(cfg, {"certified": False, "parallelogram": pg.is_parallelogram(body),
                    "M": pg.mahler_exact(body)})
        return EXIT_NO_CERTIFICATE
    fd = pg.deformation_second_difference(body, cert.vertex_index)
    report = {"certified": True, "M": pg.mahler_exact(body)}
    report.update(certificate_to_dict(cert))
    report["finite_difference"] = fd
    report["finite_difference_relative_error"] = abs(fd - cert.quadratic_form) / abs(cert.quadratic_form)
    _emit(cfg, report)
    return EXIT_OK


def _start_body(cfg: RunConfig) -> GridSupport:
    if cfg.input is None:
        return GridSupport.constant(1.0, cfg.grid_n)
    body = body_from_dict(_load(cfg.input))
    if isinstance(body, pg.PolygonSupport):
        return GridSupport(pg.sample_support(body, cfg.grid_n))
    return body


def cmd_descend(cfg: RunConfig) -> int:
    h0 = _start_body(cfg)
    out = Path(cfg.output) if cfg.output is not None else None
    snaps = []

    def snapshot(k, body):
        if cfg.snapshot_every and k % cfg.snapshot_every == 0:
            snaps.append((k, body))

    opts = DescentOptions(max_iters=cfg.max_iters, tol_grad=cfg.tol, seed=cfg.seed)
    trace = descend(h0, opts, callback=snapshot)
    fit = parallelogram_fit(trace.final)
    conc = trace.concentration[-1]
    summary = {"iterations": len(trace.values) - 1, "stop_reason": trace.stop_reason,
               "initial_M": trace.values[0], "final_M": trace.values[-1],
               "topk_fraction": conc.topk_fraction, "atom_count": conc.atom_count,
               "parallelogram_distance": fit.distance, "parallelogram_normals": fit.normals}
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        (out / "trace.csv").write_text(trace_csv(trace))
        write_body(out / "final.json", trace.final)
        for k, body in snaps:
            write_body(out / f"snapshot_{k:06d}.json", body)
        (out / "summary.json").write_text(dumps(summary))
    _emit(cfg, summary)
    return EXIT_OK


def cmd_santalo(cfg: RunConfig) -> int:
    body = body_from_dict(_require_input(cfg))
    if not isinstance(body, pg.PolygonSupport):
        raise ParseError("santalo needs a polygon body")
    res = pg.santalo_point(body)
    c = pg.centroid(body)
    _emit(cfg, {"point": res.point, "value": res.value, "gradient_norm": res.gradient_norm,
                "iterations": res.iterations, "centroid": c,
                "distance_to_centroid": float(np.linalg.norm(res.point - c))})
    return EXIT_OK


def _scan_item(kind: str, seed: int, n: int) -> tuple[float, bool]:
    """One randomized check; returns the recorded value and whether it violates."""
    rng = np.random.default_rng(seed)
    if kind == "mahler-bounds":
        P = pg.make_random_symmetric(int(rng.integers(2, 9)), seed=rng)
        m = pg.mahler_exact(P)
        return m, not (8.0 - 1e-9 <= m <= np.pi ** 2 + 1e-9)
    if kind == "duality":
        P = pg.make_random_symmetric(int(rng.integers(2, 9)), seed=rng)
        m = pg.mahler_exact(P)
        dual = abs(pg.mahler_exact(pg.polar(P)) - m)
        while True:
            T = rng.normal(size=(2, 2))
            if np.linalg.cond(T) <= 100:
                break
        lin = abs(pg.mahler_exact(pg.linear_image(P, T)) - m)
        return max(dual, lin), dual > 1e-10 or lin > 1e-8
    if kind == "concavity":
        sym = bool(rng.integers(2))
        h = random_smooth_body(rng, n, symmetric=sym)
        v = random_half_perturbation(rng, n) if sym else random_perturbation(rng, n)
        chk = check_concavity_bound(h, v, symmetric=sym)
        return chk.rhs - chk.lhs, not chk.holds
    if kind == "kuperberg-3d":
        gap = pt.kuperberg_gap(pt.random_symmetric(rng))
        return gap, gap < -1e-9
    raise MahlerError(f"unknown scan kind {kind!r}", invariant="kind in " + ", ".join(SCAN_KINDS))


def cmd_scan(cfg: RunConfig) -> int:
    if cfg.kind not in SCAN_KINDS:
        raise MahlerError(f"--kind must be one of {', '.join(SCAN_KINDS)}",
                          invariant="known scan kind")
    values, bad = [], []
    for i in range(cfg.count):
        val, violated = _scan_item(cfg.kind, cfg.seed + i, cfg.grid_n)
        values.append(val)
        if violated:
            bad.append(i)
    summary = {"kind": cfg.kind, "count": cfg.count, "seed": cfg.seed,
               "min": min(values) if values else None,
               "max": max(values) if values else None,
               "violations": len(bad), "violating_items": bad, "values": values}
    _emit(cfg, summary)
    return EXIT_NO_CERTIFICATE if bad else EXIT_OK


COMMANDS = {"eval": cmd_eval, "certify": cmd_certify, "descend": cmd_descend,
            "santalo": cmd_santalo, "scan": cmd_scan}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mahler", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--input", type=Path)
        p.add_argument("--output", type=Path)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--grid-n", type=int, default=DEFAULT_N)
        p.add_argument("--tol", type=float, default=1e-7 if name == "descend" else 1e-8)
        p.add_argument("--max-iters", type=int, default=2000)
        p.add_argument("--snapshot-every", type=int, default=0)
        p.add_argument("--kind", choices=SCAN_KINDS)
        p.add_argument("--count", type=int, default=100)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = RunConfig(command=args.command, input=args.input, output=args.output,
                        seed=args.seed, grid_n=args.grid_n, tol=args.tol,
                        max_iters=args.max_iters, snapshot_every=args.snapshot_every,
                        kind=args.kind, count=args.count)
        return COMMANDS[args.command](cfg)
    except MahlerError as exc:
        sys.stderr.write(dumps(error_report(exc)))
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
