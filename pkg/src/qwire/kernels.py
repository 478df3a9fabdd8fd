"""Backend selection for the Pauli propagation kernels.

The compiled extension is used when it imports; set ``QWIRE_PURE_PYTHON=1``
to force the numpy fallback.
"""
import os

from . import _pykernels

python_backend = _pykernels

compiled_backend = None
if os.environ.get("QWIRE_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as compiled_backend  # type: ignore[no-redef]
    except ImportError:  # extension not built
        compiled_backend = None

backend = compiled_backend if compiled_backend is not None else python_backend
BACKEND_NAME = "cython" if backend is compiled_backend else "python"

czbar_inplace = backend.czbar_inplace
hbar_inplace = backend.hbar_inplace
steps_inplace = backend.steps_inplace
