"""Command-line entry point: ``qworkstats {run,plotdata,cost,oracle}``."""
from __future__ import annotations

import argparse
import json
import logging
import sys

from .experiment import (FAMILIES, ConfigError, ExperimentConfig, emit_plotdata, manifest_path,
                         read_results, run_experiment)
from .lattice import GraphError, circuit_cost, graph_diameter, heavy_hex_layout, load_graph
from .oracle import OracleSizeError, exact_tpm_distribution
from .protocol import DriveParams
from .samples import SampleFormatError
from .sim import ResourceLimitError
from .sqt import SubspaceTooLarge
from .workstats import tur_bound

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RESOURCE = 3


def _csv_list(text: str) -> tuple[str, ...]:
    return tuple(s.strip() for s in text.split(",") if s.strip())


def _add_run_flags(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--config", help="TOML experiment file")
    sp.add_argument("--family", choices=FAMILIES)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--shots", type=int)
    sp.add_argument("--out", help="result CSV path (manifest written next to it)")
    sp.add_argument("--samples-in", help="CSV of x_bits,y_bits samples to post-process")
    sp.add_argument("--estimators", type=_csv_list, help="comma list: raw,sqt,ext_sqt,exact,lrt,wn")
    sp.add_argument("--delta", type=float, help="Ext-SQT prune threshold")
    sp.add_argument("--max-statevector-qubits", type=int)
    sp.add_argument("--workers", type=int)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qworkstats", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="verb", required=True)

    run = sub.add_parser("run", help="execute a sweep and write result CSV + manifest")
    _add_run_flags(run)

    pd = sub.add_parser("plotdata", help="slice a result CSV into per-panel CSVs")
    pd.add_argument("results", help="result CSV from `run`")
    pd.add_argument("--family", choices=FAMILIES, default="scan")
    pd.add_argument("--estimators", type=_csv_list)
    pd.add_argument("--out", default="plotdata", help="output directory")
    pd.add_argument("--config", help="take the family from this experiment file")

    cost = sub.add_parser("cost", help="gate counts and depth of the TPM circuit")
    cost.add_argument("--layout", type=int, default=15, help="heavy-hex layout index 1..15")
    cost.add_argument("--graph", "--graph-file", dest="graph",
                      help="edge-list JSON instead of a heavy-hex layout")
    cost.add_argument("--n-trotter", type=int, help="defaults to the graph diameter")
    cost.add_argument("--out", help="write the report as JSON here")

    orc = sub.add_parser("oracle", help="exact moments at one parameter point")
    orc.add_argument("--n-spin", type=int, default=10)
    orc.add_argument("--graph", "--graph-file", dest="graph",
                     help="edge-list JSON instead of a heavy-hex fragment")
    orc.add_argument("--beta", type=float, default=10.0)
    orc.add_argument("--tau", type=float, default=1.0)
    orc.add_argument("--gamma", type=float, default=1.0)
    orc.add_argument("--n-trotter", type=int, default=10)
    orc.add_argument("--continuum", action="store_true", help="time-ordered reference instead of Trotter")
    orc.add_argument("--out", help="write the result as JSON here")
    return ap


def _emit(obj: dict, out: str | None) -> None:
    text = json.dumps(obj, indent=2)
    if out:
        with open(out, "w") as fh:
            fh.write(text + "\n")
    print(text)


def _cmd_run(args) -> int:
    cfg = ExperimentConfig.from_toml(args.config) if args.config else \
        ExperimentConfig.for_family(args.family or "scan")
    if args.config and args.family and args.family != cfg.family:
        raise ConfigError(f"--family {args.family} conflicts with family {cfg.family!r} in {args.config}")
    cfg = cfg.with_overrides(seed=args.seed, shots=args.shots, out=args.out, samples_in=args.samples_in,
                             estimators=args.estimators, delta=args.delta,
                             max_statevector_qubits=args.max_statevector_qubits, workers=args.workers)
    res = run_experiment(cfg)
    print(f"{len(res.rows)} rows from {res.manifest['n_points']} grid points -> {cfg.out} "
          f"(manifest {manifest_path(cfg.out)})")
    return EXIT_OK


def _cmd_plotdata(args) -> int:
    family = ExperimentConfig.from_toml(args.config).family if args.config else args.family
    rows = read_results(args.results)
    if not rows:
        raise ConfigError(f"{args.results} has no rows")
    for path in emit_plotdata(rows, family, args.out, args.estimators):
        print(path)
    return EXIT_OK


def _cmd_cost(args) -> int:
    g = load_graph(args.graph) if args.graph else heavy_hex_layout(layout_index=args.layout)
    n_t = args.n_trotter if args.n_trotter is not None else graph_diameter(g)
    report = circuit_cost(g, n_t)
    _emit({"graph": g.layout_id, **report.as_dict()}, args.out)
    return EXIT_OK


def _cmd_oracle(args) -> int:
    g = load_graph(args.graph) if args.graph else heavy_hex_layout(size_hint=args.n_spin)
    p = DriveParams(args.beta, args.tau, args.gamma, args.n_trotter)
    dist = exact_tpm_distribution(g, p, use_continuum=args.continuum)
    mean, var = dist.moments()
    bound = tur_bound(mean, p.beta) if p.beta > 0 else 0.0
    _emit({"graph": g.layout_id, "n_spin": g.n_vertices, "n_edges": g.n_edges, "beta": p.beta,
           "tau": p.tau, "gamma": p.gamma, "n_T": p.n_trotter, "continuum": args.continuum,
           "mean_W": mean, "var_W": var, "sigma": p.beta * mean, "tur_bound": bound,
           "tur_satisfied": var >= bound - 1e-9}, args.out)
    return EXIT_OK


COMMANDS = {"run": _cmd_run, "plotdata": _cmd_plotdata, "cost": _cmd_cost, "oracle": _cmd_oracle}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.verb](args)
    except (ResourceLimitError, OracleSizeError, SubspaceTooLarge) as exc:
        print(f"resource cap: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (ConfigError, GraphError, SampleFormatError, ValueError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
