import numpy as np
import pytest

from gmlight import _kernels
from gmlight.sphere import generate_anchors

KERNEL_NAMES = ("nearest_indices", "gaussian_raster", "gibbs", "ctransform_rows", "ctransform_cols", "sweeps")
_NP = {
    "nearest_indices": _kernels._np_nearest,
    "gaussian_raster": _kernels._np_gaussian_raster,
    "gibbs": _kernels._np_gibbs,
    "ctransform_rows": _kernels._np_ctransform_rows,
    "ctransform_cols": _kernels._np_ctransform_cols,
    "sweeps": _kernels._np_sweeps,
}
_BACKENDS = ["numpy"] + (["numba"] if _kernels.HAVE_NUMBA else [])


@pytest.fixture(params=_BACKENDS)
def backend(request, monkeypatch):
    """Run a test once per kernel backend."""
    if request.param == "numpy":
        for name, fn in _NP.items():
            monkeypatch.setattr(_kernels, name, fn)
    else:
        for name in KERNEL_NAMES:
            monkeypatch.setattr(_kernels, name, getattr(_kernels, "_nb_" + name.replace("_indices", "")))
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


@pytest.fixture(scope="session")
def anchors128():
    return generate_anchors(128)


def random_instance(rng, n, anchors=None):
    """Uniform-random distributions with a geometric cost from depths in [0.5, 5]."""
    from gmlight.ot import geometric_cost

    anchors = anchors or generate_anchors(n)
    u = rng.uniform(size=n)
    v = rng.uniform(size=n)
    cost = geometric_cost(anchors, rng.uniform(0.5, 5.0, n), rng.uniform(0.5, 5.0, n))
    return u / u.sum(), v / v.sum(), cost


def pytest_terminal_summary(terminalreporter):
    rows = []
    for outcome in ("passed", "failed"):
        for rep in terminalreporter.stats.get(outcome, []):
            for key, value in getattr(rep, "user_properties", []):
                if key == "criterion" and rep.when == "call":
                    rows.append(value)
    if not rows:
        return
    terminalreporter.section("acceptance criteria")
    for number, name, ok, detail in sorted(rows):
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {number:>2}. {name}: {detail}")
