"""eps^2 and 1/K scaling of the pole integrals for f = 1 + a / z families.

    python scripts/localesti_scaling.py
"""
from dataclasses import dataclass, field

import numpy as np

from reichlab.reich import PoleFunction, pole_integral_eq1, pole_integral_eq2


@dataclass
class Experiment:
    eps: list = field(default_factory=lambda: [0.5, 0.25, 0.125, 0.0625])
    K: list = field(default_factory=lambda: [100.0, 200.0, 400.0, 800.0, 1600.0])
    residue_fraction: float = 0.25


def main():
    exp = Experiment()
    print("pole_integral_eq1: integral of |f| - Re f over |z| < 1/2, f = 1 + (eps/4) e^{0.9i} / z")
    print(f"{'eps':>8s} {'value':>12s} {'value/eps^2':>12s}")
    for e in exp.eps:
        f = PoleFunction(lambda z: np.ones_like(z), residue=exp.residue_fraction * e * np.exp(0.9j))
        r = pole_integral_eq1(f, e)
        print(f"{e:8.4f} {r.value:12.5e} {r.ratio:12.5f}")

    a = 0.05
    f = PoleFunction(lambda z: np.ones_like(z), residue=a)
    print(f"\npole_integral_eq2: integral of |f| over S_K, f = 1 + {a} / z, oracle 2 pi a^2 / (K - 1)")
    print(f"{'K':>8s} {'value':>12s} {'oracle':>12s} {'value*K':>12s}")
    for K in exp.K:
        r = pole_integral_eq2(f, 0.2, K)
        print(f"{K:8.0f} {r.value:12.5e} {2 * np.pi * a * a / (K - 1):12.5e} {r.value * K:12.5e}")


if __name__ == "__main__":
    main()
