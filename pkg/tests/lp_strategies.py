"""Random tiny LPs with small integer data, shared by the property tests.

Most instances are built around a known integer point so that feasible,
infeasible and unbounded outcomes all occur often.
"""
import numpy as np
from hypothesis import strategies as st

from orgnet.lpcore import LpModel

SENSES = ("<=", ">=", "=")


def _rhs_around(A, x0, senses, slack):
    act = A @ x0
    out = act.copy()
    for i, s in enumerate(senses):
        if s == "<=":
            out[i] += slack[i]
        elif s == ">=":
            out[i] -= slack[i]
    return out


@st.composite
def tiny_lps(draw, max_vars=6, max_rows=8, with_upper=True):
    n = draw(st.integers(1, max_vars))
    m = draw(st.integers(1, max_rows))
    coef = st.integers(-2, 2)
    A = np.array(draw(st.lists(st.lists(coef, min_size=n, max_size=n), min_size=m, max_size=m)), dtype=float)
    c = np.array(draw(st.lists(coef, min_size=n, max_size=n)), dtype=float)
    senses = tuple(draw(st.lists(st.sampled_from(SENSES), min_size=m, max_size=m)))
    if draw(st.booleans()):
        x0 = np.array(draw(st.lists(st.integers(0, 2), min_size=n, max_size=n)), dtype=float)
        slack = np.array(draw(st.lists(st.integers(0, 2), min_size=m, max_size=m)), dtype=float)
        b = _rhs_around(A, x0, senses, slack)
    else:
        b = np.array(draw(st.lists(st.integers(-4, 4), min_size=m, max_size=m)), dtype=float)
    upper = None
    if with_upper and draw(st.booleans()):
        upper = np.array(draw(st.lists(st.sampled_from([2.0, 3.0, np.inf]), min_size=n, max_size=n)))
    return LpModel(c, A, senses, b, None, upper)


def random_lp(rng: np.random.Generator, n: int, m: int, upper: bool = False, feasible_bias: float = 0.6) -> LpModel:
    A = rng.integers(-2, 3, size=(m, n)).astype(float)
    c = rng.integers(-2, 3, size=n).astype(float)
    senses = tuple(rng.choice(SENSES, size=m))
    if rng.random() < feasible_bias:
        x0 = rng.integers(0, 3, size=n).astype(float)
        b = _rhs_around(A, x0, senses, rng.integers(0, 3, size=m).astype(float))
    else:
        b = rng.integers(-4, 5, size=m).astype(float)
    hi = rng.choice([2.0, 3.0, np.inf], size=n) if upper else None
    return LpModel(c, A, senses, b, None, hi)
