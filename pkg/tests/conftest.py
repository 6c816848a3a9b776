import numpy as np
import pytest

from condcharts import Dataset, Subject


def make_random_dataset(rng, n_subjects=6, max_m=8, l=1, t_hi=2.0):
    """Small random dataset for round-trip and invariance tests."""
    subjects = []
    for i in range(n_subjects):
        m = int(rng.integers(1, max_m + 1))
        times = np.sort(rng.uniform(0.0, t_hi, size=m))
        while np.any(np.diff(times) <= 0):
            times = np.sort(rng.uniform(0.0, t_hi, size=m))
        subjects.append(Subject(
            f"subj{i}",
            times,
            rng.normal(10.0, 3.0, size=m),
            rng.normal(0.0, 1.0, size=(m, l)),
        ))
    return Dataset(tuple(subjects), l=l)


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)
