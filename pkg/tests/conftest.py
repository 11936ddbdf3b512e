import sys
from pathlib import Path

import numpy as np
import pytest

from svyglm.frame import ModelFrame

sys.path.insert(0, str(Path(__file__).parent))


def make_frame(X, y, w=None, strata=None, psu=None, fpc=None, labels=None):
    """Build a ModelFrame directly from arrays (bypassing CSV plumbing)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float)
    n, p = X.shape
    if w is None:
        w = np.ones(n)
    if strata is None:
        strata = ["0"] * n
    if psu is None:
        psu = [str(i) for i in range(n)]
    if fpc is None:
        fpc = np.zeros(n)
    if labels is None:
        labels = tuple(f"b{j}" for j in range(p))
    return ModelFrame(
        y=y,
        X=X,
        column_labels=tuple(labels),
        kept_rows=np.arange(n),
        weights=np.asarray(w, dtype=float),
        strata=np.asarray(strata, dtype=object),
        psu=np.asarray(psu, dtype=object),
        fpc=np.asarray(fpc, dtype=float),
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)
