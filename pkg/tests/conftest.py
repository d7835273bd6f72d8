import math

import numpy as np
import pytest
from hypothesis import strategies as st

from mlepm.data import Profile, ProfileSet
from mlepm.ml import CnnModel
from mlepm.ml.layers import BN_EPS
from mlepm.tensor import SymTensor3, tke


def random_psd(rng, scale=1.0):
    """Random realizable stress with k well above the floor."""
    while True:
        a = rng.normal(size=(3, 3))
        r = SymTensor3.from_matrix(scale * a @ a.T)
        if tke(r) > 1e-6:
            return r


def random_orthonormal(rng):
    q, r = np.linalg.qr(rng.normal(size=(3, 3)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 2] = -q[:, 2]
    return q


@st.composite
def psd_tensors(draw):
    entries = draw(st.lists(st.floats(-1.0, 1.0, allow_nan=False), min_size=9, max_size=9))
    a = np.array(entries).reshape(3, 3)
    m = a @ a.T + draw(st.floats(1e-3, 1.0)) * np.eye(3)
    return SymTensor3.from_matrix(m)


@pytest.fixture
def rng():
    return np.random.default_rng(20240613)


def oracle_model():
    """Network whose inference output is the centre of a non-increasing window.

    Channel 0 carries the raw signal shifted by +10 through both convolutions
    (batch norm set to identity) so ReLU never clips it; max-pooling keeps the
    first of (x4, x5), which is x4 whenever the profile does not increase.
    """
    model = CnnModel(seed=0)
    model.params[:] = 0.0
    v = model.views()
    v[0]["weight"][0, 0] = [0.0, 0.0, 1.0]
    v[0]["bias"][0] = 10.0
    for i in (1, 4):
        v[i]["gamma"][:] = math.sqrt(1.0 + BN_EPS)
    v[3]["weight"][0, 0] = [0.0, 0.0, 1.0]
    v[8]["weight"][0, 0] = 1.0
    v[10]["weight"][0, 0] = 1.0
    v[10]["bias"][0] = -10.0
    return model.eval()


IDENTITY_STANDARDIZATION = {"in_mean": 0.0, "in_std": 1.0, "out_mean": 0.0, "out_std": 1.0}


def decaying_profile_set(n_profiles=10, points=30, u_inf=1.0):
    """Profiles with k_dns == k_rans and k decreasing away from the wall."""
    profiles = []
    for j in range(n_profiles):
        y = np.linspace(0.0, 2.0, points)
        k = (0.5 + 0.1 * j) * np.exp(-2.0 * y)
        station = round((j + 1) / (n_profiles + 1), 12)
        profiles.append(Profile("decay", station, np.full(points, station), y, k, k.copy()))
    return ProfileSet(profiles, {"decay": u_inf})


# acceptance criteria outcomes, printed in the terminal summary
ACCEPTANCE = {}


@pytest.fixture
def criterion():
    def record(number, title, passed, detail=""):
        ACCEPTANCE[number] = (title, bool(passed), detail)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        title, passed, detail = ACCEPTANCE[number]
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{status}] criterion {number:2d}: {title}  {detail}".rstrip())


def gradient_check(model, windows, targets, loss, h=1e-5, rtol=1e-4, atol=1e-8):
    """Worst mismatch between reverse-mode and central-difference gradients.

    Returns ``(worst_relative, worst_absolute_on_tiny, n_failures)``.
    """
    from mlepm.ml.network import backward, batch_loss

    grad = backward(model, windows, targets, loss)
    worst_rel = worst_abs = 0.0
    failures = 0
    for i in range(grad.size):
        up = model.params.copy()
        down = model.params.copy()
        up[i] += h
        down[i] -= h
        fd = (batch_loss(model, windows, targets, loss, up) - batch_loss(model, windows, targets, loss, down)) / (2 * h)
        if abs(grad[i]) < atol:
            err = abs(fd - grad[i])
            worst_abs = max(worst_abs, err)
            failures += err > atol
        else:
            err = abs(fd - grad[i]) / abs(grad[i])
            worst_rel = max(worst_rel, err)
            failures += err > rtol
    return worst_rel, worst_abs, failures


def random_draw(seed, batch=8):
    """Perturbed initial parameters plus a random batch."""
    from mlepm.ml import CnnModel

    rng = np.random.default_rng(seed)
    model = CnnModel(seed=seed)
    model.params = model.params + rng.normal(0.0, 0.2, size=model.params.size)
    return model.train(), rng.normal(size=(batch, 9)), rng.normal(size=batch)
