"""Command-line front end.

Exit codes: 0 success, 1 validation failure (non-unitary spec, parity not
found, walk outside the canonical class, ...), 2 usage errors (unknown
subcommand, malformed spec, missing file).  Machine-readable output goes to
the path given by --out (resolved against $QW_OUT_DIR when relative) and a
human summary to stdout.  All subcommands are deterministic for fixed inputs;
the solver takes an explicit --seed.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from pathlib import Path

import numpy as np

from . import dihedral as dih
from .abelian_class import brute_force_scalar_solutions, classify
from .coarse_grain import coarse_grain
from .groups import GroupError, default_tiling, format_presentation, parse_presentation
from .momentum import (
    MomentumError,
    diffusion_coefficient,
    dispersion,
    group_velocity,
    to_momentum,
)
from .plotting import dispersion_plot_script, render_dispersion_csvs
from .specfile import (
    SpecFormatError,
    WalkSpecFile,
    load_walk_spec,
    save_walk_spec,
)
from .walk import (
    WalkError,
    check_quadrangularity,
    check_unitarity,
    delta_state,
    evolve,
)

_FMT = ".17g"


def _out_path(arg: str) -> Path:
    path = Path(arg)
    if not path.is_absolute():
        path = Path(os.environ.get("QW_OUT_DIR", ".")) / path
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def _load(path: str) -> WalkSpecFile:
    if not Path(path).exists():
        raise FileNotFoundError(f"no such spec file: {path}")
    return load_walk_spec(path)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qw", description="quantum walks on Cayley graphs")
    parser.add_argument("--tol", type=float, default=1e-10, help="residual tolerance")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="validate a walk spec (unitarity, pair condition)")
    p.add_argument("spec")

    p = sub.add_parser("evolve", help="evolve a localized state and write site,component,prob")
    p.add_argument("spec")
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--init", default="0", help="site[,component]; multi-axis sites use ':'")
    p.add_argument("--sites", type=int, default=0, help="ring size (auto when omitted)")
    p.add_argument("--allow-wrap", action="store_true")
    p.add_argument("--out", required=True)

    p = sub.add_parser("dispersion", help="sample eigenphase branches over the zone")
    p.add_argument("spec")
    p.add_argument("--samples", type=int, default=1024)
    p.add_argument("--derivatives", action="store_true",
                   help="append group velocity and diffusion coefficient columns")
    p.add_argument("--out", required=True)
    p.add_argument("--plot", default=None, help="also render the branches to this image file")

    p = sub.add_parser("coarse-grain", help="map a dihedral scalar walk to a spinorial walk on Z")
    p.add_argument("spec")
    p.add_argument("--m", type=int, default=0, help="first coset representative offset")
    p.add_argument("--m-prime", type=int, default=0, help="second coset representative offset")
    p.add_argument("--out", required=True)

    p = sub.add_parser("classify", help="classify a scalar walk on an infinite Abelian group")
    p.add_argument("spec")
    p.add_argument("--out", default=None)

    p = sub.add_parser("solve", help="multi-start search for scalar unitarity solutions")
    p.add_argument("presentation", help="presentation file or inline 'family=...; gens: ...'")
    p.add_argument("--starts", type=int, default=256)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("dihedral", help="dihedral walk families and admissible graphs")
    dsub = p.add_subparsers(dest="dihedral_command", required=True)
    pm = dsub.add_parser("make", help="build a walk from family parameters")
    pm.add_argument("--case", required=True, choices=["mu_zero", "ze_zero", "zd_zero", "generic"])
    pm.add_argument("--p", type=float, required=True)
    pm.add_argument("--q", type=float, default=None)
    pm.add_argument("--mu", type=float, default=0.0)
    pm.add_argument("--s1", type=int, default=1, choices=[1, -1])
    pm.add_argument("--s2", type=int, default=1, choices=[1, -1])
    pm.add_argument("--s3", type=int, default=1, choices=[1, -1])
    pm.add_argument("--theta", type=float, default=0.0)
    pm.add_argument("--finite-n", type=int, default=0,
                    help="instantiate on the finite dihedral group of this rotation order")
    pm.add_argument("--out", required=True)
    pe = dsub.add_parser("enumerate", help="enumerate admissible generating sets")
    pe.add_argument("--max-n", type=int, default=2)
    pe.add_argument("--out", default=None)

    p = sub.add_parser("parity", help="search for a reflection symmetry P A_k P+ = A_-k")
    p.add_argument("spec")

    p = sub.add_parser("canonical", help="extract the rotated-mass normal form of a spinorial walk")
    p.add_argument("spec")

    p = sub.add_parser("plot-script", help="emit a standalone plotting script for dispersion CSVs")
    p.add_argument("csv", nargs="+")
    p.add_argument("--out", default=None, help="script path (stdout when omitted)")
    p.add_argument("--render", default=None, help="render the figure directly to this file")

    return parser


# ---------------------------------------------------------------------------
# subcommand bodies

def _cmd_check(args) -> int:
    spec = _load(args.spec)
    if spec.walk.is_scalar:
        quad = check_quadrangularity(spec.walk.graph)
        print(f"pair condition: {'pass' if quad.passed else f'FAIL at {quad.witness}'}")
    report = check_unitarity(spec.walk, args.tol)
    print(report.summary())
    return 0 if report.ok else 1


def _parse_init(text: str) -> tuple:
    parts = text.split(",")
    site_part = parts[0]
    component = int(parts[1]) if len(parts) > 1 else 0
    if ":" in site_part:
        site = tuple(int(v) for v in site_part.split(":"))
    else:
        site = int(site_part)
    return site, component


def _cmd_evolve(args) -> int:
    spec = _load(args.spec)
    walk = spec.walk
    site, component = _parse_init(args.init)
    max_disp = max(
        (max((abs(v) for v in elem.free_part), default=0) for _, elem, _ in walk.items()),
        default=0,
    )
    n_sites = args.sites or (2 * args.steps * max_disp + 9)
    if walk.graph.family.kind == "dihedral_n":
        n_sites = walk.graph.family.order
    state = delta_state(walk, n_sites, site, component)
    final = evolve(walk, state, args.steps, allow_wrap=args.allow_wrap)
    out = _out_path(args.out)
    layout = final.layout
    labels = layout.site_labels()
    probs = np.abs(final.data) ** 2
    with out.open("w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["site", "component", "prob"])
        flat = probs.reshape(-1, probs.shape[-1]) if not walk.graph.family.is_dihedral \
            else probs.reshape(layout.dims[0], 2)
        if walk.graph.family.is_dihedral:
            for i, lab in enumerate(labels):
                for j in range(2):
                    writer.writerow([lab, j, format(float(probs[i, j, 0]), _FMT)])
        else:
            dims = layout.dims
            for flat_idx in range(flat.shape[0]):
                idx = np.unravel_index(flat_idx, dims)
                family = walk.graph.family
                names = []
                for ax, v in enumerate(idx):
                    if ax < len(family.torsion):
                        names.append(str(v))
                    else:
                        names.append(str(labels[v]))
                site_name = ":".join(names)
                for comp in range(walk.coin_dim):
                    writer.writerow([site_name, comp, format(float(flat[flat_idx, comp]), _FMT)])
    print(f"evolved {args.steps} steps on {n_sites} sites; norm {final.norm:.12f}")
    print(f"wrote {out}")
    return 0


def _cmd_dispersion(args) -> int:
    spec = _load(args.spec)
    walk = spec.walk
    if walk.graph.family.is_dihedral:
        raise WalkError("dihedral walks have no direct momentum form; run coarse-grain first")
    mwalk = to_momentum(walk)
    data = dispersion(mwalk, args.samples, tol=args.tol)
    header = ["k", "omega_plus", "omega_minus"]
    columns = [data.ks, data.branches[:, 0], data.branches[:, -1]]
    if args.derivatives:
        vel = group_velocity(data)
        dif = diffusion_coefficient(data)
        header += ["v_group", "diff_coeff"]
        vg = np.where(vel.smooth[:, 0], vel.values[:, 0], np.nan)
        dc = np.where(dif.smooth[:, 0], dif.values[:, 0], np.nan)
        columns += [vg, dc]
    out = _out_path(args.out)
    with out.open("w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in zip(*columns):
            writer.writerow([format(float(v), _FMT) for v in row])
    print(f"sampled {args.samples} wave vectors; wrote {out}")
    if args.plot:
        plot_path = _out_path(args.plot)
        render_dispersion_csvs([str(out)], str(plot_path))
        print(f"rendered {plot_path}")
    return 0


def _cmd_coarse_grain(args) -> int:
    spec = _load(args.spec)
    tiling = default_tiling(spec.walk.graph.family, m=args.m, m_prime=args.m_prime)
    cg = coarse_grain(spec.walk, tiling)
    out = _out_path(args.out)
    name = f"{spec.name}-coarse" if spec.name else None
    save_walk_spec(out, WalkSpecFile(walk=cg.result, name=name, meta=dict(spec.meta)))
    print(f"coarse-grained over representatives (a^{args.m}, a^{args.m_prime} r)")
    print(f"wrote {out}")
    return 0


def _cmd_classify(args) -> int:
    spec = _load(args.spec)
    result = classify(spec.walk, tol=args.tol)
    if not result.ok:
        print(f"classification failed: {result.status.value} {result.detail}")
        return 1
    print(f"trivial: direct sum of {len(result.blocks)} shift block(s)")
    for block in result.blocks:
        shift = ",".join(str(v) for v in block.survivor)
        print(f"  block {block.index}: shift ({shift})  phase {block.phase:.12g}")
    if args.out:
        out = _out_path(args.out)
        with out.open("w", newline="") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(["block", "shift", "phase"])
            for block in result.blocks:
                writer.writerow([
                    ":".join(str(v) for v in block.index),
                    ":".join(str(v) for v in block.survivor),
                    format(block.phase, _FMT),
                ])
        print(f"wrote {out}")
    return 0


def _cmd_solve(args) -> int:
    if Path(args.presentation).exists():
        text = Path(args.presentation).read_text(encoding="utf-8")
    elif "family" in args.presentation:
        text = args.presentation
    else:
        raise FileNotFoundError(f"no such presentation file: {args.presentation}")
    graph = parse_presentation(text)
    solutions = brute_force_scalar_solutions(
        graph, n_starts=args.starts, seed=args.seed, residual_tol=max(args.tol, 1e-12)
    )
    out = _out_path(args.out)
    labels = graph.labels
    with out.open("w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        header = []
        for lab in labels:
            header += [f"{lab}_re", f"{lab}_im"]
        writer.writerow(header + ["residual"])
        for sol in solutions:
            row = []
            for lab in labels:
                row += [format(sol.scalars[lab].real, _FMT), format(sol.scalars[lab].imag, _FMT)]
            writer.writerow(row + [format(sol.residual, _FMT)])
    kinds = sum(1 for s in solutions if not s.is_monoidal())
    print(f"{len(solutions)} solution(s) found ({kinds} with support > 1); wrote {out}")
    return 0


def _cmd_dihedral(args) -> int:
    if args.dihedral_command == "enumerate":
        graphs = dih.enumerate_admissible_graphs(args.max_n)
        lines = [format_presentation(g) for g in graphs]
        for line in lines:
            print(line)
        if args.out:
            out = _out_path(args.out)
            out.write_text("\n".join(lines) + "\n", encoding="utf-8")
            print(f"wrote {out}")
        return 0

    q = args.q
    if args.case == "ze_zero":
        q = args.p
    elif args.case == "zd_zero":
        q = 1.0 - args.p
    elif q is None:
        raise WalkError(f"case {args.case} requires --q")
    params = dih.DihedralParams(
        args.case, args.p, q, args.mu, args.s1,
        -1 if args.case == "zd_zero" else args.s2, args.s3, args.theta,
    )
    if args.finite_n:
        walk = dih.instantiate_finite_dihedral(params, args.finite_n)
    else:
        walk = dih.make_dihedral_walk(params)
    out = _out_path(args.out)
    meta = {"case": params.case, "p": format(params.p, _FMT), "q": format(params.q, _FMT),
            "mu": format(params.mu, _FMT),
            "s1": str(params.s1), "s2": str(params.s2), "s3": str(params.s3)}
    save_walk_spec(out, WalkSpecFile(walk=walk, name=f"dihedral-{params.case}", meta=meta))
    print(f"built {params.case} walk on generators {walk.graph.labels}")
    print(f"wrote {out}")
    return 0


def _cmd_parity(args) -> int:
    spec = _load(args.spec)
    cert = dih.parity_test(spec.walk)
    if cert.found:
        vec = np.round(cert.matrix, 12)
        print(f"parity symmetry found (residual {cert.residual:.3e})")
        print(f"P = [[{vec[0,0]}, {vec[0,1]}], [{vec[1,0]}, {vec[1,1]}]]")
        return 0
    print(f"no parity symmetry (best residual {cert.residual:.3e})")
    return 1


def _cmd_canonical(args) -> int:
    spec = _load(args.spec)
    form = dih.extract_canonical_form(spec.walk)
    if not form.in_class:
        print(f"not in the coarse-grained class (residual {form.residual:.3e})")
        return 1
    print(f"in class (residual {form.residual:.3e})")
    print(f"theta = {form.theta:.12g}  theta' = {form.theta_prime:.12g}")
    print(f"nu = {form.nu:.12g}  mu = {form.mu:.12g}  s = {form.s:+d}  sign = {form.sign:+d}")
    params = form.dihedral_params()
    if params is not None:
        print(f"family case: {params.case} (p={params.p:.12g}, q={params.q:.12g}, "
              f"mu={params.mu:.12g}, s1={params.s1:+d}, s2={params.s2:+d}, s3={params.s3:+d})")
    else:
        print("family case: degenerate boundary (outside the open parameter ranges)")
    try:
        delta, gamma = dih.dispersion_params(spec.walk)
        print(f"dispersion: omega(k) = arccos({delta:.12g} cos k + {gamma:.12g})")
    except dih.NotInClassError:
        pass
    return 0


def _cmd_plot_script(args) -> int:
    for path in args.csv:
        if not Path(path).exists():
            raise FileNotFoundError(f"no such CSV file: {path}")
    default_png = str(Path(args.csv[0]).with_suffix(".png"))
    script = dispersion_plot_script(args.csv, args.render or default_png)
    if args.out:
        out = _out_path(args.out)
        out.write_text(script, encoding="utf-8")
        print(f"wrote {out}")
    else:
        sys.stdout.write(script)
    if args.render:
        render_path = _out_path(args.render)
        render_dispersion_csvs(args.csv, str(render_path))
        print(f"rendered {render_path}")
    return 0


_DISPATCH = {
    "check": _cmd_check,
    "evolve": _cmd_evolve,
    "dispersion": _cmd_dispersion,
    "coarse-grain": _cmd_coarse_grain,
    "classify": _cmd_classify,
    "solve": _cmd_solve,
    "dihedral": _cmd_dihedral,
    "parity": _cmd_parity,
    "canonical": _cmd_canonical,
    "plot-script": _cmd_plot_script,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        return _DISPATCH[args.command](args)
    except (SpecFormatError, FileNotFoundError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (WalkError, GroupError, MomentumError, dih.NotInClassError) as exc:
        print(f"invalid: {exc}", file=sys.stderr)
        return 1


def console_main() -> None:  # pragma: no cover - thin wrapper
    raise SystemExit(main())
