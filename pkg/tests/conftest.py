import itertools

import numpy as np
from hypothesis import settings

from rabs_isac.link import build_coefficients
from rabs_isac.scenario import ProtectionLevels, RadioConfig, build_scenario

settings.register_profile("ci", max_examples=60, deadline=None)
settings.load_profile("ci")


def tiny_scenario(seed, num_grids=2, num_locations=2, num_subcarriers=3, gamma=None,
                  lam=None, delta=0.0, m_sen=None, m_com=None):
    """Small instance with demands scaled so satisfaction rates are non-trivial."""
    rng = np.random.default_rng(seed)
    area_w = 20.0 * num_grids
    sc = build_scenario(area_w=area_w, area_h=20.0, cell=20.0, num_locations=num_locations,
                        seed=seed, radio=RadioConfig(num_subcarriers=num_subcarriers),
                        m_sen=m_sen if m_sen is not None else float(rng.uniform(0.05, 1.0)),
                        m_com=m_com if m_com is not None else float(rng.uniform(1e6, 3e7)),
                        delta=delta)
    if gamma is not None or lam is not None:
        I = sc.num_grids
        g = np.full(I, gamma if gamma is not None else 0.0)
        l_ = np.full(I, lam if lam is not None else 0.0)
        from dataclasses import replace
        sc = replace(sc, protection=ProtectionLevels(g, l_, delta))
    return sc, build_coefficients(sc)


def brute_protection(values, gamma):
    """max over |S| = floor(gamma) plus a fractional extra item, by exhaustion."""
    v = np.asarray(values, float)
    n = v.size
    g = min(max(gamma, 0.0), n)
    fl = int(np.floor(g))
    frac = g - fl
    best = 0.0
    for S in itertools.combinations(range(n), fl):
        base = float(v[list(S)].sum())
        rest = [t for t in range(n) if t not in S]
        extra = max((frac * v[t] for t in rest), default=0.0)
        best = max(best, base + extra)
    return best


def vertex_oracle(c, A, rel, b, lb, ub, sense):
    """Best vertex of a bounded LP by enumerating every active set of size n."""
    n = len(c)
    rows = [(A[i], b[i]) for i in range(len(b))]
    rows += [(np.eye(n)[j], lb[j]) for j in range(n)] + [(np.eye(n)[j], ub[j]) for j in range(n)]
    best = None
    for combo in itertools.combinations(range(len(rows)), n):
        M = np.array([rows[t][0] for t in combo])
        if abs(np.linalg.det(M)) < 1e-10:
            continue
        x = np.linalg.solve(M, np.array([rows[t][1] for t in combo]))
        if np.any(x < lb - 1e-9) or np.any(x > ub + 1e-9):
            continue
        ok = True
        for i in range(len(b)):
            lhs = A[i] @ x
            if rel[i] == "<=" and lhs > b[i] + 1e-9 or rel[i] == ">=" and lhs < b[i] - 1e-9 \
                    or rel[i] == "=" and abs(lhs - b[i]) > 1e-9:
                ok = False
                break
        if not ok:
            continue
        val = float(c @ x)
        if best is None or (val > best if sense == "max" else val < best):
            best = val
    return best


def random_bounded_lp(rng, max_vars=6, max_rows=6):
    """Random LP with finite bounds on every variable (so an optimum is a vertex)."""
    n = int(rng.integers(1, max_vars + 1))
    m = int(rng.integers(0, max_rows + 1))
    A = rng.integers(-5, 6, (m, n)).astype(float)
    rel = list(rng.choice(["<=", ">=", "="], m, p=[0.5, 0.35, 0.15]))
    b = rng.integers(-5, 10, m).astype(float)
    lb = rng.integers(-4, 2, n).astype(float)
    ub = lb + rng.integers(0, 6, n)
    c = rng.integers(-5, 6, n).astype(float)
    sense = str(rng.choice(["max", "min"]))
    return c, A, rel, b, lb, ub, sense


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
