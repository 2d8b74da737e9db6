"""Command line interface and system file format.

A system file is a JSON document::

    {"label": "example", "F": [[1, 0], [0, 0]], "G": [[0.5, 0], [0, 1]], "y0": [1, 1]}

Entries are real numbers or ``[re, im]`` pairs.  ``y0`` and ``label`` are
optional.  Reports are JSON on standard output; trajectories are CSV.

Exit status: 0 success, 1 I/O error, 2 singular pencil, 3 parse or shape
error, 4 missing initial condition, 5 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import numbers
import sys
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .errors import (
    DescriptorError,
    DimensionMismatch,
    IllConditionedStructure,
    MissingInitialCondition,
    ParseError,
    RankDeficient,
    ReconstructionFailure,
    ShapeError,
    SingularPencil,
)
from .numerics import DEFAULT_TOLERANCES, Tolerances
from .pencil import certify_regularity, finite_spectrum, verify_decomposition, weierstrass_decompose
from .solution import check_consistency, optimal_trajectory
from .stability import classify_stability, equilibrium_set

__all__ = [
    "SystemDescription",
    "parse_system_file",
    "parse_system_text",
    "dump_system",
    "cmd_analyze",
    "cmd_simulate",
    "cmd_decompose",
    "cmd_equilibria",
    "main",
]

EXIT_OK = 0
EXIT_IO = 1
EXIT_SINGULAR = 2
EXIT_PARSE = 3
EXIT_MISSING_Y0 = 4
EXIT_NUMERIC = 5

_EXIT_CODES = [
    (SingularPencil, EXIT_SINGULAR),
    (ParseError, EXIT_PARSE),
    (ShapeError, EXIT_PARSE),
    (DimensionMismatch, EXIT_PARSE),
    (MissingInitialCondition, EXIT_MISSING_Y0),
    (RankDeficient, EXIT_NUMERIC),
    (IllConditionedStructure, EXIT_NUMERIC),
    (ReconstructionFailure, EXIT_NUMERIC),
    (OSError, EXIT_IO),
]


@dataclass(frozen=True)
class SystemDescription:
    F: np.ndarray = field(repr=False)
    G: np.ndarray = field(repr=False)
    y0: np.ndarray | None = field(default=None, repr=False)
    label: str = ""

    @property
    def m(self) -> int:
        return self.F.shape[0]

    def __eq__(self, other):
        if not isinstance(other, SystemDescription):
            return NotImplemented
        same_y0 = (self.y0 is None and other.y0 is None) or (
            self.y0 is not None and other.y0 is not None and np.array_equal(self.y0, other.y0))
        return (self.label == other.label and np.array_equal(self.F, other.F)
                and np.array_equal(self.G, other.G) and same_y0)

    __hash__ = None


# --------------------------------------------------------------------------
# parsing


def _scalar(value, where):
    if isinstance(value, bool):
        raise ParseError(f"{where}: expected a number, got a boolean")
    if isinstance(value, numbers.Real):
        return complex(float(value), 0.0)
    if (isinstance(value, list) and len(value) == 2
            and all(isinstance(v, numbers.Real) and not isinstance(v, bool) for v in value)):
        return complex(float(value[0]), float(value[1]))
    raise ParseError(f"{where}: expected a number or an [re, im] pair, got {value!r}")


def _matrix(doc, key):
    if key not in doc:
        raise ParseError(f'missing required key "{key}"')
    rows = doc[key]
    if not isinstance(rows, list) or not rows or not all(isinstance(r, list) for r in rows):
        raise ParseError(f'"{key}" must be a non-empty array of arrays')
    widths = [len(r) for r in rows]
    if len(set(widths)) != 1:
        raise ShapeError(f'"{key}" has rows of unequal length {widths}', {key: widths})
    values = [[_scalar(v, f"{key}[{i}][{j}]") for j, v in enumerate(r)] for i, r in enumerate(rows)]
    A = np.array(values, dtype=np.complex128)
    if not np.all(np.isfinite(A)):
        raise ParseError(f'"{key}" contains non-finite entries')
    return A


def parse_system_text(text: str) -> SystemDescription:
    """Parse a system document.

    Raises
    ------
    ParseError
        Malformed JSON (with line and column) or wrongly typed fields.
    ShapeError
        Non-square or mismatched ``F``, ``G`` or ``y0``.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.lineno, exc.colno) from None
    if not isinstance(doc, dict):
        raise ParseError("top level must be an object")
    F = _matrix(doc, "F")
    G = _matrix(doc, "G")
    shapes = {"F": list(F.shape), "G": list(G.shape)}
    if F.shape[0] != F.shape[1] or G.shape[0] != G.shape[1]:
        raise ShapeError(f"F and G must be square, got F {F.shape} and G {G.shape}", shapes)
    if F.shape != G.shape:
        raise ShapeError(f"F {F.shape} and G {G.shape} differ in size", shapes)
    y0 = None
    if doc.get("y0") is not None:
        raw = doc["y0"]
        if not isinstance(raw, list):
            raise ParseError('"y0" must be an array')
        y0 = np.array([_scalar(v, f"y0[{i}]") for i, v in enumerate(raw)], dtype=np.complex128)
        if y0.shape[0] != F.shape[0]:
            raise ShapeError(f"y0 has length {y0.shape[0]}, expected {F.shape[0]}",
                             dict(shapes, y0=[y0.shape[0]]))
        if not np.all(np.isfinite(y0)):
            raise ParseError('"y0" contains non-finite entries')
    label = doc.get("label", "")
    if not isinstance(label, str):
        raise ParseError('"label" must be a string')
    return SystemDescription(F, G, y0, label)


def parse_system_file(path) -> SystemDescription:
    with open(path, encoding="utf-8") as fh:
        return parse_system_text(fh.read())


# --------------------------------------------------------------------------
# encoding


def _float(x):
    x = float(x)
    return x if math.isfinite(x) else ("inf" if x > 0 else "-inf" if x < 0 else "nan")


def _is_real(values, tol):
    arr = np.asarray(values)
    return arr.size == 0 or not np.iscomplexobj(arr) or float(np.max(np.abs(arr.imag))) <= tol.residual_abs


def _map(arr, fn):
    if arr.ndim == 0:
        return fn(arr.item())
    return [_map(a, fn) for a in arr]


def _encode(values, tol):
    """Nested lists of floats, or of ``[re, im]`` pairs when any part is complex."""
    arr = np.asarray(values, dtype=np.complex128)
    if _is_real(arr, tol):
        return _map(arr.real, _float)
    return _map(arr, _pair)


def _pair(z):
    z = complex(z)
    return [_float(z.real), _float(z.imag)]


def dump_system(desc: SystemDescription) -> str:
    """Serialize ``desc`` losslessly (inverse of :func:`parse_system_text`)."""
    def enc(A):
        return [[_pair(z) for z in row] for row in A]

    doc = {"label": desc.label, "F": enc(desc.F), "G": enc(desc.G)}
    if desc.y0 is not None:
        doc["y0"] = [_pair(z) for z in desc.y0]
    return json.dumps(doc)


def _dumps(doc) -> str:
    return json.dumps(doc, indent=2) + "\n"


def _tolerance_doc(tol):
    return {"rank_rel": tol.rank_rel, "cluster_abs": tol.cluster_abs, "residual_abs": tol.residual_abs}


def _error_doc(exc):
    doc = {"type": type(exc).__name__, "message": str(exc)}
    if isinstance(exc, SingularPencil):
        doc["probes"] = [{"s": _pair(s), "witness_ratio": _float(r)} for s, r in exc.probes]
    if isinstance(exc, ShapeError):
        doc["shapes"] = exc.shapes
    if isinstance(exc, ParseError) and exc.line is not None:
        doc["line"], doc["column"] = exc.line, exc.column
    return {"tool": {"name": "descsys", "version": __version__}, "error": doc}


def _exit_code(exc):
    for cls, code in _EXIT_CODES:
        if isinstance(exc, cls):
            return code
    return EXIT_NUMERIC


def _guard(run):
    """Run ``run()`` and map library errors to ``(status, error report)``."""
    try:
        return run()
    except (DescriptorError, OSError) as exc:
        return _exit_code(exc), _dumps(_error_doc(exc))


# --------------------------------------------------------------------------
# commands


def _pipeline(desc, tol):
    sys_ = certify_regularity(desc.F, desc.G, tol)
    w = weierstrass_decompose(sys_, tol)
    return sys_, w


def _eigen_doc(blocks, tol):
    values = [a for a, _ in blocks]
    real = _is_real(np.array(values, dtype=np.complex128), tol)
    return [{"value": _float(a.real) if real else _pair(a), "block_size": int(k)} for a, k in blocks]


def _header(desc, tol):
    return {
        "tool": {"name": "descsys", "version": __version__},
        "label": desc.label,
        "m": desc.m,
        "tolerances": _tolerance_doc(tol),
    }


def _regularity_doc(sys_):
    return {"certificate": _pair(sys_.certificate), "witness_ratio": _float(sys_.witness_ratio)}


def cmd_analyze(path, tol: Tolerances = DEFAULT_TOLERANCES):
    """Full analysis report.  Returns ``(exit status, JSON text)``."""
    def run():
        desc = parse_system_file(path)
        sys_, w = _pipeline(desc, tol)
        spec = finite_spectrum(sys_, tol)
        rF, rG = verify_decomposition(sys_, w, tol)
        eq = equilibrium_set(sys_, w, tol)
        verdict = classify_stability(sys_, w, spec, tol)
        doc = _header(desc, tol)
        doc["regularity"] = _regularity_doc(sys_)
        doc["spectrum"] = {
            "finite_eigenvalues": _eigen_doc(spec.finite_eigs, tol),
            "nu": spec.nu,
            "p": spec.p,
            "q": spec.q,
            "infinite_block_sizes": list(spec.infinite_blocks),
        }
        doc["decomposition"] = {
            "p": w.p, "q": w.q, "nilpotency_index": w.nilpotency_index,
            "residual_F": _float(rF), "residual_G": _float(rG),
        }
        if desc.y0 is not None:
            rep = check_consistency(desc.y0, w, tol)
            doc["consistency"] = {
                "consistent": rep.consistent,
                "distance": _float(rep.distance),
                "projected_y0": _encode(rep.projected_Y0, tol),
            }
        else:
            doc["consistency"] = None
        doc["equilibria"] = {
            "dimension": eq.dimension,
            "one_is_eigenvalue": eq.one_is_eigenvalue,
            "basis": _encode(eq.basis, tol),
        }
        doc["stability"] = {
            "classification": verdict.classification.value,
            "spectral_radius": _float(verdict.spectral_radius),
            "boundary_blocks_trivial": verdict.boundary_blocks_trivial,
            "power_bound_estimate": _float(verdict.power_bound_estimate),
            "evidence_horizon": verdict.evidence_horizon,
        }
        return EXIT_OK, _dumps(doc)

    return _guard(run)


def trajectory_table(traj, tol: Tolerances = DEFAULT_TOLERANCES) -> str:
    """CSV text: ``k, y_1..y_m, residual`` with 17 significant digits.

    The residual on row ``k >= 1`` is ``||F Y_k - G Y_{k-1}||``; row 0 has
    no incoming step and carries 0.  Complex trajectories split every
    component into ``_re`` and ``_im`` columns.
    """
    states = traj.states
    m = states.shape[1]
    real = _is_real(states, tol)
    if real:
        header = ["k"] + [f"y_{i + 1}" for i in range(m)] + ["residual"]
    else:
        header = ["k"] + [f"y_{i + 1}_{part}" for i in range(m) for part in ("re", "im")] + ["residual"]
    residuals = np.concatenate([[0.0], traj.residuals])
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for k, y in enumerate(states):
        if real:
            cells = [f"{v.real:.17g}" for v in y]
        else:
            cells = [f"{part:.17g}" for v in y for part in (v.real, v.imag)]
        writer.writerow([str(k)] + cells + [f"{residuals[k]:.17g}"])
    return buf.getvalue()


def cmd_simulate(path, steps: int, out=None, tol: Tolerances = DEFAULT_TOLERANCES):
    """Optimal trajectory over ``k = 0..steps``.

    Returns ``(exit status, text)``: the CSV table when ``out`` is None,
    otherwise a short JSON summary after writing the table to ``out``.
    """
    def run():
        desc = parse_system_file(path)
        if desc.y0 is None:
            raise MissingInitialCondition("simulate requires \"y0\" in the system file")
        if steps < 0:
            raise ValueError(f"steps must be >= 0, got {steps}")
        sys_, w = _pipeline(desc, tol)
        traj = optimal_trajectory(desc.y0, w, steps, tol)
        table = trajectory_table(traj, tol)
        if out is None:
            return EXIT_OK, table
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(table)
        doc = _header(desc, tol)
        doc["trajectory"] = {
            "path": str(out),
            "rows": traj.K + 1,
            "max_residual": _float(np.max(traj.residuals, initial=0.0)),
        }
        return EXIT_OK, _dumps(doc)

    return _guard(run)


def cmd_decompose(path, tol: Tolerances = DEFAULT_TOLERANCES):
    """Dump ``P, Q, Jp, Hq`` and the residuals as JSON."""
    def run():
        desc = parse_system_file(path)
        sys_, w = _pipeline(desc, tol)
        rF, rG = verify_decomposition(sys_, w, tol)
        doc = _header(desc, tol)
        doc["regularity"] = _regularity_doc(sys_)
        doc["decomposition"] = {
            "p": w.p, "q": w.q, "nilpotency_index": w.nilpotency_index,
            "finite_blocks": _eigen_doc(w.finite_blocks, tol),
            "infinite_block_sizes": list(w.infinite_blocks),
            "P": _encode(w.P, tol),
            "Q": _encode(w.Q, tol),
            "Jp": _encode(w.Jp, tol),
            "Hq": _encode(w.Hq, tol),
            "residual_F": _float(rF),
            "residual_G": _float(rG),
        }
        return EXIT_OK, _dumps(doc)

    return _guard(run)


def cmd_equilibria(path, tol: Tolerances = DEFAULT_TOLERANCES):
    """Dump the equilibrium set as JSON."""
    def run():
        desc = parse_system_file(path)
        sys_, w = _pipeline(desc, tol)
        eq = equilibrium_set(sys_, w, tol)
        doc = _header(desc, tol)
        doc["equilibria"] = {
            "dimension": eq.dimension,
            "one_is_eigenvalue": eq.one_is_eigenvalue,
            "basis": _encode(eq.basis, tol),
        }
        return EXIT_OK, _dumps(doc)

    return _guard(run)


def _parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("system", help="system file (JSON)")
    common.add_argument("--rank-rel", type=float, default=DEFAULT_TOLERANCES.rank_rel)
    common.add_argument("--cluster-abs", type=float, default=DEFAULT_TOLERANCES.cluster_abs)
    common.add_argument("--residual-abs", type=float, default=DEFAULT_TOLERANCES.residual_abs)

    parser = argparse.ArgumentParser(
        prog="descsys", description="Analyze singular discrete-time systems F y[k+1] = G y[k].")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("analyze", parents=[common], help="spectrum, consistency, equilibria and stability")
    sim = sub.add_parser("simulate", parents=[common], help="optimal trajectory as CSV")
    sim.add_argument("--steps", type=int, default=10)
    sim.add_argument("--out", default=None, help="CSV output path (default: stdout)")
    sub.add_parser("decompose", parents=[common], help="Weierstrass decomposition")
    sub.add_parser("equilibria", parents=[common], help="equilibrium set")
    return parser


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        tol = Tolerances(args.rank_rel, args.cluster_abs, args.residual_abs)
    except ValueError as exc:
        sys.stderr.write(f"descsys: {exc}\n")
        return EXIT_PARSE
    if args.command == "analyze":
        status, text = cmd_analyze(args.system, tol)
    elif args.command == "simulate":
        if args.steps < 0:
            sys.stderr.write("descsys: --steps must be >= 0\n")
            return EXIT_PARSE
        status, text = cmd_simulate(args.system, args.steps, args.out, tol)
    elif args.command == "decompose":
        status, text = cmd_decompose(args.system, tol)
    else:
        status, text = cmd_equilibria(args.system, tol)
    sys.stdout.write(text)
    return status


if __name__ == "__main__":
    sys.exit(main())
