from pathlib import Path

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from soliton_forge.closed_form import WaveConfig

GOLDEN = Path(__file__).parent / "golden"


def printed_equations() -> list[str]:
    lines = (GOLDEN / "printed_system.txt").read_text(encoding="utf-8").splitlines()
    return [ln for ln in lines if ln.strip() and not ln.startswith("#")]


def random_parameters(rng, count, min_gap=0.1):
    """(B, C, n, m, alpha) draws away from the degenerate loci."""
    out = []
    while len(out) < count:
        B, C = rng.uniform(-2.5, 2.5, size=2)
        n, m = rng.uniform(0.5, 1.5, size=2) * rng.choice([-1, 1], size=2)
        alpha = rng.uniform(0.5, 2.0) * rng.choice([-1, 1])
        if abs(B - C - 1) < min_gap or abs(B * B - 4 * C) < min_gap or abs(2 * n + m) < min_gap:
            continue
        out.append((float(B), float(C), float(n), float(m), float(alpha)))
    return out


def random_configs(rng, count, set_tag="SET1", **fixed):
    configs = []
    for B, C, n, m, alpha in random_parameters(rng, count):
        C1, C2 = rng.uniform(0.2, 2.0, size=2) * rng.choice([-1, 1], size=2)
        kw = dict(B=B, C=C, n=n, m=m, alpha=alpha, C1=float(C1), C2=float(C2),
                  A=float(rng.uniform(-3, 3)), set_tag=set_tag)
        kw.update(fixed)
        configs.append(WaveConfig(**kw))
    return configs


def integrate_G(A, B, C, G0, dG0, xi_max, num=2001):
    """G on [0, xi_max] by integrating G'' = -B G' - C G - A C.

    Independent of every closed form in the package.
    """
    xs = np.linspace(0.0, xi_max, num)
    sol = solve_ivp(
        lambda s, y: [y[1], -B * y[1] - C * y[0] - A * C],
        (0.0, xi_max), [G0, dG0], t_eval=xs, method="DOP853", rtol=1e-13, atol=1e-13,
    )
    return xs, sol.y[0], sol.y[1]


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
