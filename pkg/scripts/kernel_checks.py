"""Kernel battery across the shipped groups, one summary row per group.

    python scripts/kernel_checks.py --samples 1000 --configs 20
"""
import argparse
import time
from dataclasses import dataclass

from reichlab.cli import RunConfig, run_kernel_check


@dataclass
class Experiment:
    samples: int = 1000
    configs: int = 20
    seed: int = 1
    tol: float = 1e-8


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--samples", type=int, default=Experiment.samples)
    p.add_argument("--configs", type=int, default=Experiment.configs)
    p.add_argument("--seed", type=int, default=Experiment.seed)
    exp = Experiment(**{k: v for k, v in vars(p.parse_args()).items()})

    print(f"{'group':8s} {'invariance':>11s} {'mass id':>8s} {'reproduce':>10s} "
          f"{'min margin':>11s} {'tail bound':>11s} {'time':>7s}")
    for group in ("trivial", "cyclic", "gamma2"):
        cfg = RunConfig(group=group, seed=exp.seed, tol=exp.tol, kernel_samples=exp.samples,
                        mass_configs=exp.configs).validate()
        t = time.perf_counter()
        body, passed = run_kernel_check(cfg)
        c = body["checks"]
        rows = [r for r in c["kernel_mass"]["rows"] if "bound" in r]
        margin = min(r["bound"] - r["measured"] - r["tail"] for r in rows)
        tail = c.get("poincare_series", {}).get("tail_bound", 0.0)
        print(f"{group:8s} {c['invariance']['max_residual']:11.2e} {str(c['mass_identity']['passed']):>8s} "
              f"{max(r['error'] for r in c['reproducing']['rows']):10.2e} {margin:11.3e} {tail:11.3e} "
              f"{time.perf_counter() - t:6.1f}s")


if __name__ == "__main__":
    main()
