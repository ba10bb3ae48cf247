import pytest

from qcollide import backend


def available_backends():
    names = ["numpy"]
    if backend.numba_available():
        names.append("numba")
    return names


@pytest.fixture(autouse=True)
def _restore_backend():
    # tests may switch backends; always return to the session default
    before = backend.active()
    yield
    backend.use(before)
