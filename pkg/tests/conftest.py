import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from coordplay import _backend


def available_backends():
    return ("pure", "compiled") if _backend.HAVE_CORE else ("pure",)


@pytest.fixture(params=available_backends())
def backend(request):
    """Run a test once per installed backend."""
    return request.param
