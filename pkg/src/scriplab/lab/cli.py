"""Command-line entry point.

Exit codes: 0 success, 1 invalid config, 2 budget exceeded, 3 internal
invariant violation.
"""

from __future__ import annotations

import argparse
import sys

from ..errors import (
    BudgetError,
    ConfigError,
    ConvergenceError,
    DegenerateModelError,
    ReducibleChainError,
    SchemaError,
    StructuralError,
)
from .config import EXPERIMENTS, load_file, resolve
from .experiments import run_experiment, verify_manifest

EXIT_OK, EXIT_CONFIG, EXIT_BUDGET, EXIT_INVARIANT = 0, 1, 2, 3


def parse_seeds(text: str) -> list[int]:
    """``"1,2,5-8"`` -> ``[1, 2, 5, 6, 7, 8]``."""
    seeds: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part:
            lo, hi = part.split("-", 1)
            seeds.extend(range(int(lo), int(hi) + 1))
        else:
            seeds.append(int(part))
    return seeds


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="scriplab", description="Scrip-economy simulator and equilibrium toolkit.")
    p.add_argument("experiment", choices=EXPERIMENTS + ("verify",),
                   help="preset to run, or 'verify' to check a run directory's manifest")
    p.add_argument("--config", metavar="FILE", help="JSON config file; flags override its keys")
    p.add_argument("--n", type=int)
    p.add_argument("--m", type=float, help="money per agent")
    p.add_argument("--k", type=float, help="threshold (support K for entropy)")
    p.add_argument("--beta", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--rounds", type=int)
    p.add_argument("--seeds", type=str, help="comma list with ranges, e.g. 1-10")
    p.add_argument("--out", metavar="DIR")
    p.add_argument("--plot", action="store_true", default=None, help="also write an SVG figure")
    p.add_argument("--workers", type=int)
    p.add_argument("--scale", type=float, help="scale factor for the largest n in fig2/fig3")
    p.add_argument("--budget", type=float, help="round-agent event budget per run")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.experiment == "verify":
        target = args.out or "out"
        try:
            bad = verify_manifest(target)
        except (OSError, ValueError, KeyError) as e:
            print(f"error: cannot read manifest in {target}: {e}", file=sys.stderr)
            return EXIT_CONFIG
        if bad:
            print("checksum mismatch: " + ", ".join(bad), file=sys.stderr)
            return EXIT_INVARIANT
        print(f"{target}: all outputs match the manifest")
        return EXIT_OK

    overrides = {k: getattr(args, k) for k in
                 ("n", "m", "k", "beta", "alpha", "delta", "rounds", "out", "plot", "workers", "scale", "budget")}
    try:
        if args.seeds is not None:
            try:
                overrides["seeds"] = parse_seeds(args.seeds)
            except ValueError:
                raise ConfigError("seeds", f"cannot parse {args.seeds!r}") from None
        file_values = load_file(args.config) if args.config else None
        cfg = resolve(args.experiment, file_values, overrides)
        result = run_experiment(cfg)
    except ConfigError as e:
        print(f"invalid config: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except BudgetError as e:
        print(f"budget exceeded: {e}", file=sys.stderr)
        return EXIT_BUDGET
    except (StructuralError, ConvergenceError, ReducibleChainError, DegenerateModelError,
            SchemaError, AssertionError) as e:
        print(f"invariant violation: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_INVARIANT
    for p in result.outputs:
        print(p)
    print(result.manifest)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
