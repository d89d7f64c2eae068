"""Command-line front end: ``invariant-lab <subcommand> ...``.

Results go to stdout (or ``--output``) preceded by ``#`` metadata lines that
echo the version, subcommand and parameters, so identical arguments give
byte-identical output. Exit status is 0 on success, 1 on a computation or
input error and 2 on a usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .circuits import (
    build_cycle_test,
    build_kd_circuit,
    build_otoc_circuit,
    build_psqfi_circuit,
    build_weak_value_circuits,
    estimate_invariant,
    export_circuit,
)
from .estimation import (
    COMPLEXITY_COLUMNS,
    PointerModel,
    compare_sample_complexity,
    estimate_weak_value_cycle,
    fixed_weak_value_instance,
)
from .exceptions import InvariantLabError, StateFormatError, ValidationError
from .invariants import (
    anomaly_check,
    bargmann,
    kd_distribution,
    otoc,
    ps_qfi,
    univariate_traces,
    weak_value,
)
from .nonclassicality import (
    SIGN_PATTERNS,
    OverlapTriple,
    classify_invariant,
    convex_body_check,
    overlap_inequalities,
    real_triple_delta3,
    real_triple_h,
    rebit_region_grid,
)
from .spectrum import NOISE_COLUMNS, largest_eigenvalue_truncated, noise_study, resolve_workers, spectrum_from_traces
from .states import DensityMatrix, OrthonormalBasis, PureState, load_matrix, load_state


def _fmt(x) -> str:
    x = float(x) + 0.0
    return format(x if x != 0 else 0.0, ".12g")


def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


class Output:
    """Collects metadata and a result body, then writes text, csv or json."""

    def __init__(self, args, params: dict):
        self.args = args
        self.meta = {"tool": f"invariant-lab {__version__}", "subcommand": args.command}
        self.meta.update({k: v for k, v in params.items()})

    def header_lines(self) -> list[str]:
        lines = [f"# {self.meta['tool']} {self.meta['subcommand']}"]
        for k, v in self.meta.items():
            if k not in ("tool", "subcommand"):
                lines.append(f"# {k}: {v}")
        return lines

    def emit_lines(self, lines: list[str], payload) -> None:
        if self.args.format == "json":
            text = json.dumps({"meta": self.meta, "result": payload}, sort_keys=True, indent=1) + "\n"
        else:
            text = "\n".join(self.header_lines() + lines) + "\n"
        self._write(text)

    def emit_table(self, columns, rows) -> None:
        if self.args.format == "json":
            payload = [dict(zip(columns, r)) for r in rows]
            text = json.dumps({"meta": self.meta, "result": payload}, sort_keys=True, indent=1) + "\n"
        else:
            buf = io.StringIO()
            buf.write("\n".join(self.header_lines()) + "\n")
            w = csv.writer(buf, lineterminator="\n")
            w.writerow(columns)
            for r in rows:
                w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in r])
            text = buf.getvalue()
        self._write(text)

    def _write(self, text: str) -> None:
        if self.args.output:
            Path(self.args.output).write_text(text)
        else:
            sys.stdout.write(text)


def _require_seed(parser, args):
    if args.seed is None:
        parser.error(f"{args.command}: --seed is required for randomized runs")


def _load_pure(path) -> PureState:
    s = load_state(path)
    if not isinstance(s, PureState):
        raise StateFormatError("expected a state vector", str(path), "re")
    return s


def _load_basis(spec: str, dim: int) -> OrthonormalBasis:
    if spec == "computational":
        return OrthonormalBasis.computational(dim)
    if spec == "fourier":
        return OrthonormalBasis.fourier(dim)
    m = load_matrix(spec)
    try:
        return OrthonormalBasis.from_columns(m)
    except ValidationError as exc:
        raise StateFormatError(str(exc), spec, "re/im") from None


def _load_hermitian(path):
    m = load_matrix(path)
    if m.shape[0] != m.shape[1] or np.max(np.abs(m - m.conj().T)) > 1e-10:
        raise StateFormatError("matrix is not square Hermitian", str(path), "re/im")
    return m


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------


def cmd_invariant(args, parser):
    states = [load_state(p) for p in args.states]
    if args.shots:
        _require_seed(parser, args)
        value = estimate_invariant(states, args.shots, args.seed)
        params = {"backend": "shots", "shots_per_part": args.shots, "seed": args.seed}
    else:
        value = bargmann(states).value
        params = {"backend": "exact"}
    params["states"] = " ".join(args.states)
    out = Output(args, params)
    out.emit_lines([f"{_fmt(value.real)} {_fmt(value.imag)}"], {"re": value.real, "im": value.imag})


def cmd_kd(args, parser):
    rho = load_state(args.state)
    bi = _load_basis(args.basis_i, rho.dim)
    bf = _load_basis(args.basis_f, rho.dim)
    grid = kd_distribution(rho, bi, bf)
    rows = [(i, f, v.real, v.imag) for (i, f), v in np.ndenumerate(grid.values)]
    out = Output(args, {"backend": "exact", "state": args.state, "basis_i": args.basis_i, "basis_f": args.basis_f})
    if args.format == "text":
        out.emit_lines([f"{i} {f} {_fmt(re)} {_fmt(im)}" for i, f, re, im in rows], None)
    else:
        out.emit_table(("i", "f", "re", "im"), rows)


def cmd_weak_value(args, parser):
    A = _load_hermitian(args.observable)
    psi, phi = _load_pure(args.pre), _load_pure(args.post)
    exact = weak_value(A, psi, phi)
    label = anomaly_check(exact, A)
    if args.shots:
        _require_seed(parser, args)
        value = estimate_weak_value_cycle(psi, phi, A, args.shots, args.shots, args.seed)
        params = {"backend": "shots", "shots_per_part": args.shots, "seed": args.seed}
    else:
        value = exact.value
        params = {"backend": "exact"}
    params.update({"observable": args.observable, "pre": args.pre, "post": args.post})
    out = Output(args, params)
    out.emit_lines(
        [f"{_fmt(value.real)} {_fmt(value.imag)}", f"classification: {label}"],
        {"re": value.real, "im": value.imag, "classification": label},
    )


def cmd_spectrum(args, parser):
    if (args.traces is None) == (args.state is None):
        parser.error("spectrum: give exactly one of --traces or --state")
    if args.traces is not None:
        traces = args.traces
    else:
        rho = load_state(args.state)
        rho = rho if isinstance(rho, DensityMatrix) else rho.to_density()
        traces = univariate_traces(rho, rho.dim)
    params = {"backend": "exact", "traces": ",".join(_fmt(t) for t in traces)}
    if args.truncate is not None:
        params["truncate"] = args.truncate
        top = largest_eigenvalue_truncated(traces, len(traces), args.truncate)
        Output(args, params).emit_lines([_fmt(top)], {"largest": top})
        return
    est = spectrum_from_traces(traces)
    Output(args, params).emit_lines(
        [" ".join(_fmt(x) for x in est.eigenvalues)],
        {"eigenvalues": list(est.eigenvalues), "discarded_imag": list(est.discarded_imag)},
    )


def cmd_qfi(args, parser):
    psi = _load_pure(args.state)
    gen = _load_hermitian(args.generator)
    proj = load_matrix(args.post_projector)
    value = ps_qfi(psi, gen, proj, args.theta)
    Output(args, {"backend": "exact", "theta": args.theta}).emit_lines([_fmt(value)], {"qfi": value})


def cmd_otoc(args, parser):
    rho = load_state(args.state)
    W, V = _load_hermitian(args.W), _load_hermitian(args.V)
    U = load_matrix(args.U)
    value = otoc(rho, W, V, U)
    Output(args, {"backend": "exact"}).emit_lines(
        [f"{_fmt(value.real)} {_fmt(value.imag)}"], {"re": value.real, "im": value.imag}
    )


def _pattern(signs) -> str:
    return "(" + ",".join("+" if s > 0 else "-" for s in signs) + ")"


def cmd_witness(args, parser):
    chosen = [x is not None for x in (args.triple, args.states, args.grid)]
    if sum(chosen) != 1:
        parser.error("witness: give exactly one of --triple, --states or --grid")
    if args.grid:
        _witness_grid(args)
        return
    delta3 = None
    if args.states:
        if len(args.states) != 3:
            parser.error("witness: --states needs exactly three files")
        st = [_load_pure(p) for p in args.states]
        t = OverlapTriple.from_states(*st)
        delta3 = bargmann(st).value
    else:
        if len(args.triple) != 3:
            parser.error("witness: --triple needs three comma-separated overlaps")
        t = OverlapTriple(*args.triple)
    rep = overlap_inequalities(t, delta3)
    lines = [
        f"{_pattern(s)} lhs {_fmt(l)} {'violated' if v else 'satisfied'}"
        for s, l, v in zip(SIGN_PATTERNS, rep.inequality_lhs, rep.violated)
    ]
    cb, ok = convex_body_check(t)
    lines.append(f"convex-body lhs {_fmt(cb)} {'satisfied' if ok else 'violated'}")
    payload = {
        "inequality_lhs": list(rep.inequality_lhs),
        "violated": list(rep.violated),
        "convex_body_lhs": cb,
    }
    if delta3 is not None:
        lines.append(f"delta3 {_fmt(delta3.real)} {_fmt(delta3.imag)} {classify_invariant(delta3)}")
        payload["delta3"] = {"re": delta3.real, "im": delta3.imag, "class": rep.classification}
    Output(args, {"backend": "exact"}).emit_lines(lines, payload)


def _witness_grid(args):
    n = args.resolution
    out = Output(args, {"backend": "exact", "grid": args.grid, "resolution": n, "alpha": args.alpha})
    if args.grid == "rebit":
        t, p, labels = rebit_region_grid(n)
        rows = [(t[i], p[i], labels[i]) for i in np.ndindex(t.shape)]
        out.emit_table(("theta", "phi", "region"), rows)
    else:
        g = np.linspace(0.0, np.pi, n)
        b, c = np.meshgrid(g, g, indexing="ij")
        h3 = real_triple_h(args.alpha, b, c)[2]
        d3 = real_triple_delta3(args.alpha, b, c)
        rows = [(b[i], c[i], h3[i], d3[i]) for i in np.ndindex(b.shape)]
        out.emit_table(("beta", "gamma", "h3", "delta3"), rows)


def cmd_noise_study(args, parser):
    _require_seed(parser, args)
    workers = resolve_workers(args.threads)
    rows = noise_study(args.dims, args.epsilons, args.n_states, args.n_noisy, args.seed, args.rank, workers)
    params = {
        "dims": ",".join(map(str, args.dims)),
        "epsilons": ",".join(_fmt(e) for e in args.epsilons),
        "n_states": args.n_states,
        "n_noisy": args.n_noisy,
        "rank": args.rank if args.rank is not None else "full",
        "seed": args.seed,
    }
    Output(args, params).emit_table(NOISE_COLUMNS, [tuple(getattr(r, c) for c in NOISE_COLUMNS) for r in rows])


def cmd_compare_complexity(args, parser):
    _require_seed(parser, args)
    pointer = PointerModel(args.gamma, args.sigma)
    instances = [fixed_weak_value_instance(d) for d in args.delta2]
    rep = compare_sample_complexity(
        instances, args.epsilon, args.seed, args.delta, args.trials, pointer, args.fixed_shots
    )
    params = {
        "delta2": ",".join(_fmt(d) for d in args.delta2),
        "epsilon": ",".join(_fmt(e) for e in args.epsilon),
        "delta": args.delta,
        "trials": args.trials,
        "gamma": args.gamma,
        "sigma": args.sigma,
        "fixed_shots": args.fixed_shots,
        "seed": args.seed,
    }
    for k, v in rep.exponents.items():
        params[f"exponent_{k}"] = _fmt(v)
    rows = [tuple(getattr(r, c) for c in COMPLEXITY_COLUMNS) for r in rep.rows]
    Output(args, params).emit_table(COMPLEXITY_COLUMNS, rows)


def cmd_export_circuit(args, parser):
    kind = args.kind
    if kind == "cycle":
        circ = build_cycle_test(args.order, args.dim, args.s)
    elif kind == "kd":
        circ = build_kd_circuit(args.dim, args.s)
    elif kind == "weak-value":
        circ = build_weak_value_circuits(args.dim, args.s)[0]
    elif kind == "swap":
        circ = build_weak_value_circuits(args.dim, 0)[1]
    elif kind == "psqfi":
        if args.generator is None:
            parser.error("export-circuit: psqfi needs --generator")
        circ = build_psqfi_circuit(args.dim, args.s, args.theta, _load_hermitian(args.generator))
    else:
        if args.unitary is None:
            parser.error("export-circuit: otoc needs --unitary")
        circ = build_otoc_circuit(args.dim, args.s, load_matrix(args.unitary))
    text = export_circuit(circ, args.circuit_format)
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="invariant-lab", description="Bargmann-invariant toolkit")
    p.add_argument("--version", action="version", version=f"invariant-lab {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        sp = sub.add_parser(name, help=help_)
        sp.set_defaults(func=func)
        sp.add_argument("--output", "-o", help="write results to this file")
        sp.add_argument("--format", choices=("text", "csv", "json"), default="text")
        return sp

    sp = add("invariant", cmd_invariant, "Bargmann invariant of a list of states")
    sp.add_argument("--states", nargs="+", required=True)
    sp.add_argument("--shots", type=int, default=0, help="shots per part; 0 = exact")
    sp.add_argument("--seed", type=int)

    sp = add("kd", cmd_kd, "Kirkwood-Dirac distribution")
    sp.add_argument("--state", required=True)
    sp.add_argument("--basis-i", default="computational", help="computational, fourier or a JSON matrix file")
    sp.add_argument("--basis-f", default="fourier")

    sp = add("weak-value", cmd_weak_value, "weak value and its classification")
    sp.add_argument("--observable", required=True)
    sp.add_argument("--pre", required=True)
    sp.add_argument("--post", required=True)
    sp.add_argument("--shots", type=int, default=0)
    sp.add_argument("--seed", type=int)

    sp = add("spectrum", cmd_spectrum, "eigenvalues from power sums")
    sp.add_argument("--traces", type=_floats)
    sp.add_argument("--state")
    sp.add_argument("--truncate", type=int, help="drop this many lowest-degree coefficients")

    sp = add("qfi", cmd_qfi, "post-selected quantum Fisher information")
    sp.add_argument("--state", required=True)
    sp.add_argument("--generator", required=True)
    sp.add_argument("--post-projector", required=True)
    sp.add_argument("--theta", type=float, required=True)

    sp = add("otoc", cmd_otoc, "out-of-time-ordered correlator")
    sp.add_argument("--state", required=True)
    sp.add_argument("--W", required=True)
    sp.add_argument("--V", required=True)
    sp.add_argument("--U", required=True)

    sp = add("witness", cmd_witness, "overlap and convex-body witnesses")
    sp.add_argument("--triple", type=_floats)
    sp.add_argument("--states", nargs="+")
    sp.add_argument("--grid", choices=("rebit", "real"))
    sp.add_argument("--resolution", type=int, default=200)
    sp.add_argument("--alpha", type=float, default=0.11)

    sp = add("noise-study", cmd_noise_study, "RMSE of spectra from noisy traces")
    sp.add_argument("--dims", type=_ints, default=[2, 3, 4, 5, 6, 7, 8])
    sp.add_argument("--epsilons", type=_floats, default=[1e-5, 1e-4, 1e-3])
    sp.add_argument("--n-states", type=int, default=500)
    sp.add_argument("--n-noisy", type=int, default=200)
    sp.add_argument("--rank", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--threads", type=int)

    sp = add("compare-complexity", cmd_compare_complexity, "cycle test vs weak measurement")
    sp.add_argument("--delta2", type=_floats, default=[0.5, 0.1, 0.02])
    sp.add_argument("--epsilon", type=_floats, default=[0.1])
    sp.add_argument("--delta", type=float, default=0.05)
    sp.add_argument("--trials", type=int, default=200)
    sp.add_argument("--gamma", type=float, default=0.01)
    sp.add_argument("--sigma", type=float, default=1.0)
    sp.add_argument("--fixed-shots", type=int, default=10**6)
    sp.add_argument("--seed", type=int)

    sp = sub.add_parser("export-circuit", help="export a circuit as json-ir or qasm-like text")
    sp.set_defaults(func=cmd_export_circuit)
    sp.add_argument("--kind", choices=("cycle", "kd", "weak-value", "swap", "psqfi", "otoc"), default="cycle")
    sp.add_argument("--order", type=int, default=2)
    sp.add_argument("--dim", type=int, default=2)
    sp.add_argument("--s", type=int, choices=(0, 1), default=0)
    sp.add_argument("--theta", type=float, default=0.0)
    sp.add_argument("--generator")
    sp.add_argument("--unitary")
    sp.add_argument("--format", dest="circuit_format", choices=("json-ir", "qasm-like"), default="json-ir")
    sp.add_argument("--output", "-o")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        args.func(args, parser)
    except SystemExit as exc:
        return int(exc.code or 0)
    except InvariantLabError as exc:
        sys.stderr.write(f"error: {type(exc).__name__}: {exc}\n")
        return 1
    except OSError as exc:
        sys.stderr.write(f"error: OSError: {exc}\n")
        return 1
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
