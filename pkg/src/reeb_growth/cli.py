"""Command-line entry point: ``reeb-growth <subcommand> ...``.

Every run prints a single ``#`` header line (tool version, input hash,
parameters) before TSV output; JSON output carries the same data under
``header`` plus ``"schema": 1``.  Exit codes: 0 success, 1 domain error,
2 usage error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from . import betti as betti_mod
from . import gromov, growth, hamflow, loops, maslov
from .loopmodel import build_model, parse_spec

SCHEMA = 1


def _sha(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


class _Out:
    def __init__(self, fmt: str, inputs: bytes, params: dict, stream):
        self.fmt = fmt
        self.header = {"tool": f"reeb-growth {__version__}", "input_sha256": _sha(inputs), "params": params}
        self.stream = stream

    def tsv(self, rows):
        w = self.stream.write
        h = self.header
        w(f"# {h['tool']}\tinput_sha256={h['input_sha256']}\tparams={json.dumps(h['params'], sort_keys=True)}\n")
        for row in rows:
            w("\t".join(str(x) for x in row) + "\n")

    def json(self, payload: dict):
        doc = {"schema": SCHEMA, "header": self.header, **payload}
        self.stream.write(json.dumps(doc, sort_keys=True) + "\n")

    def emit(self, rows, payload):
        if self.fmt == "json":
            self.json(payload)
        else:
            self.tsv(rows)


def _read(path: str) -> bytes:
    return Path(path).read_bytes()


def _half(x: Fraction) -> str:
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


# ---------------------------------------------------------------- commands ----
def cmd_betti(a, out):
    spec = parse_spec(a.space)
    dga = build_model(spec, a.max + 2)
    table = betti_mod.betti_numbers(dga, a.max, workers=a.workers)
    o = _Out(a.format, str(spec).encode(), {"space": str(spec), "max": a.max}, out)
    o.emit(enumerate(table.values), table.to_dict(str(spec)))


def cmd_growth(a, out):
    params = {"mode": a.mode}
    if a.target == "free-group":
        seq = growth.count_conjugacy_classes_free_group(a.rank, a.max_len)
        params.update(rank=a.rank, max_len=a.max_len)
        data = f"free-group {a.rank} {a.max_len}".encode()
    elif a.input:
        data = _read(a.input)
        seq = growth.read_counts_tsv(data.decode())
    elif a.space:
        spec = parse_spec(a.space)
        table = betti_mod.betti_numbers(build_model(spec, a.max + 2), a.max, workers=a.workers)
        seq = growth.partial_sum_sequence(table.values)
        params.update(space=str(spec), max=a.max)
        data = str(spec).encode()
    else:
        raise SystemExit(_usage("growth needs free-group, --input or --space"))
    rate = {"exp": growth.exp_growth_rate, "poly": growth.poly_growth_rate,
            "linear": growth.linear_growth_rate}[a.mode](seq)
    o = _Out(a.format, data, params, out)
    rows = [(growth._fmt(s), c) for s, c in zip(seq.scales, seq.counts)] + [(f"rate_{a.mode}", repr(rate))]
    o.emit(rows, {"scales": list(seq.scales), "counts": list(seq.counts), "mode": a.mode, "rate": rate})


def _load_path(data: bytes) -> dict:
    doc = json.loads(data)
    if "dim" not in doc or "samples" not in doc:
        raise ValueError("path file needs 'dim' and 'samples'")
    return doc


def cmd_cz(a, out):
    data = _read(a.path)
    path = maslov.SymplecticPath.from_dict(_load_path(data), tolerance=a.tolerance)
    cz = maslov.cz_index(path)
    delta = maslov.delta_winding(path)
    o = _Out(a.format, data, {"path": Path(a.path).name, "tolerance": a.tolerance}, out)
    o.emit([(_half(cz),)], {"cz_index": _half(cz), "delta": delta,
                             "nondegenerate": bool(maslov.is_nondegenerate(path(path.t_end)))})


def cmd_rs(a, out):
    data = _read(a.path)
    vdata = _read(a.V)
    doc = _load_path(data)
    V = maslov.LagrangianFrame.from_dict(json.loads(vdata))
    k = int(doc["dim"])
    samples = doc["samples"]
    times = np.array([float(s["t"]) for s in samples])
    flat = np.array([s["matrix"] for s in samples], dtype=float)
    if flat.shape[1] == k * k:
        sp = maslov.SymplecticPath(times, flat.reshape(-1, k, k), tolerance=a.tolerance)
        L0 = maslov.LagrangianFrame.horizontal(k // 2).frame
        frame = lambda t: sp(t) @ L0
        grid = sp._scan_grid()
    elif flat.shape[1] == k * (k // 2):
        from scipy.interpolate import CubicSpline

        spline = CubicSpline(times, flat.reshape(-1, k, k // 2), axis=0)
        frame = spline
        grid = np.linspace(times[0], times[-1], 4 * (len(times) - 1) + 1)
    else:
        raise ValueError("path samples must be dim×dim symplectic matrices or dim×(dim/2) frames")
    lp = maslov.LagrangianPath(frame, times[0], times[-1], grid=grid)
    idx = maslov.rs_index(lp, V)
    o = _Out(a.format, data + vdata, {"path": Path(a.path).name, "V": Path(a.V).name}, out)
    o.emit([(_half(idx),)], {"rs_index": _half(idx)})


def cmd_flow(a, out):
    x0 = np.array([float(x) for x in a.x0.split(",")])
    if len(x0) % 2:
        raise ValueError("--x0 must list q then p, of even length")
    n = len(x0) // 2
    H = hamflow.parse_hamiltonian(a.H, n)
    space = hamflow.PhaseSpace(a.space, n)
    orbit = hamflow.integrate_flow(H, x0, a.T, a.dt, space)
    summary = {"period": orbit.period, "closure_defect": orbit.closure_defect(), "energy_drift": orbit.energy_drift}
    if orbit.closure_defect() <= a.closure_tol:
        summary["action"] = hamflow.action(H, orbit, a.closure_tol)
    if a.out:
        Path(a.out).write_text(orbit.to_json())
    params = {"space": a.space, "H": a.H, "x0": a.x0, "T": a.T, "dt": a.dt}
    o = _Out(a.format, json.dumps(params, sort_keys=True).encode(), params, out)
    o.emit(sorted((k, repr(v)) for k, v in summary.items()), summary)


def cmd_loop(a, out):
    data = _read(a.input)
    loop = loops.DiscreteLoop.from_dict(json.loads(data))
    params = {"action": a.action}
    result_loop = None
    if a.action == "measure":
        E, L = loops.measure(loop)
        payload = {"energy": E, "length": L, "N": loop.N}
    elif a.action == "reparam":
        result_loop = loops.arclength_reparametrize(loop)
        E, L = loops.measure(result_loop)
        payload = {"energy": E, "length": L, "N": result_loop.N}
    elif a.action == "lift":
        result_loop = loops.arclength_reparametrize(loops.lift_to_product_circle(loop))
        E, predicted = loops.lift_energy_identity(loop)
        payload = {"energy": E, "predicted": predicted, "N": result_loop.N}
    else:
        if not a.input2 or a.eps is None:
            raise SystemExit(_usage("loop concat needs --input2 and --eps"))
        d2 = _read(a.input2)
        data += d2
        other = loops.DiscreteLoop.from_dict(json.loads(d2))
        result_loop = loops.concat_eps(loop, other, a.eps)
        payload = {"energy": loops.measure(result_loop)[0],
                   "predicted": loops.concat_energy_prediction(loop, other, a.eps), "N": result_loop.N}
        params["eps"] = a.eps
    if result_loop is not None and a.out:
        Path(a.out).write_text(result_loop.to_json())
    o = _Out(a.format, data, params, out)
    o.emit(sorted((k, repr(v)) for k, v in payload.items()), payload)


def cmd_gromov(a, out):
    data = _read(a.mesh)
    tri = gromov.Triangulation.from_off(data.decode())
    cover = gromov.star_cover(tri)
    enum = gromov.enumerate_Bk(tri, cover, a.k, maximal_only=a.maximal, workers=a.workers)
    report = gromov.leg_bound_report(enum.cells)
    if a.report:
        lines = ["faces\tdimension\tlegs_outside_1_skeleton\tbound\tpass"]
        for c in enum.cells:
            n = c.legs_outside_1_skeleton()
            faces = " ".join("-".join(map(str, f)) for f in c.faces)
            lines.append(f"{faces}\t{c.dimension}\t{n}\t{2 * c.dimension}\t{int(n <= 2 * c.dimension)}")
        Path(a.report).write_text("\n".join(lines) + "\n")
    params = {"mesh": Path(a.mesh).name, "k": a.k, "maximal": a.maximal}
    o = _Out(a.format, data, params, out)
    rows = [(r.dimension, r.cells, r.max_legs, r.bound, "pass" if r.passed else "FAIL") for r in report]
    payload = {
        "cells": len(enum.cells),
        "partial": enum.partial,
        "report": [{"dimension": r.dimension, "cells": r.cells, "max_legs": r.max_legs, "bound": r.bound,
                    "pass": r.passed} for r in report],
    }
    if a.kappa is not None:
        payload["kappa"] = gromov.kappa_estimate(tri, cover, a.kappa)
        rows.append(("kappa", repr(payload["kappa"])))
    if enum.partial:
        rows.append(("partial", "true"))
    o.emit(rows, payload)


# ------------------------------------------------------------------ parser ----
def _usage(msg: str) -> int:
    sys.stderr.write(f"usage error: {msg}\n")
    return 2


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="reeb-growth", description="Loop-space growth and index toolkit.")
    p.add_argument("--version", action="version", version=f"reeb-growth {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--format", choices=("tsv", "json"), default="tsv")
        return sp

    b = common(sub.add_parser("betti", help="rational Betti numbers of a model space"))
    b.add_argument("--space", required=True)
    b.add_argument("--max", type=int, required=True)
    b.add_argument("--workers", type=int)
    b.set_defaults(func=cmd_betti)

    g = common(sub.add_parser("growth", help="finite-scale growth rates"))
    g.add_argument("target", nargs="?", choices=("free-group",))
    g.add_argument("--mode", choices=("exp", "poly", "linear"), default="exp")
    g.add_argument("--input")
    g.add_argument("--space")
    g.add_argument("--max", type=int, default=30)
    g.add_argument("--rank", type=int, default=2)
    g.add_argument("--max-len", type=int, default=10)
    g.add_argument("--workers", type=int)
    g.set_defaults(func=cmd_growth)

    c = common(sub.add_parser("cz-index", help="Conley-Zehnder index of a symplectic path"))
    c.add_argument("--path", required=True)
    c.add_argument("--tolerance", type=float, default=1e-6)
    c.set_defaults(func=cmd_cz)

    r = common(sub.add_parser("rs-index", help="Robbin-Salamon index of a Lagrangian path"))
    r.add_argument("--path", required=True)
    r.add_argument("--V", required=True)
    r.add_argument("--tolerance", type=float, default=1e-6)
    r.set_defaults(func=cmd_rs)

    f = common(sub.add_parser("flow", help="integrate a Hamiltonian flow"))
    f.add_argument("--space", choices=("euclidean", "torus"), default="euclidean")
    f.add_argument("--H", required=True)
    f.add_argument("--x0", required=True)
    f.add_argument("--T", type=float, required=True)
    f.add_argument("--dt", type=float, default=1e-3)
    f.add_argument("--closure-tol", type=float, default=1e-6)
    f.add_argument("--out")
    f.set_defaults(func=cmd_flow)

    lp = common(sub.add_parser("loop", help="discrete loop functionals"))
    lp.add_argument("action", choices=("measure", "reparam", "lift", "concat"))
    lp.add_argument("--input", required=True)
    lp.add_argument("--input2")
    lp.add_argument("--eps", type=float)
    lp.add_argument("--out")
    lp.set_defaults(func=cmd_loop)

    gr = common(sub.add_parser("gromov", help="broken-geodesic complex and leg bound"))
    gr.add_argument("--mesh", required=True)
    gr.add_argument("--k", type=int, default=1)
    gr.add_argument("--maximal", action="store_true")
    gr.add_argument("--kappa", type=float, help="Lipschitz constant K; reports κ = 2K·max star diameter")
    gr.add_argument("--report")
    gr.add_argument("--workers", type=int)
    gr.set_defaults(func=cmd_gromov)
    return p


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        args.func(args, out)
    except SystemExit as e:
        return int(e.code)
    except (ValueError, OSError, ZeroDivisionError, np.linalg.LinAlgError) as e:
        sys.stderr.write(f"error: {e}\n")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
