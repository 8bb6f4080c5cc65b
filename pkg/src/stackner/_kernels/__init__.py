"""Backend selection for the hot kernels.

The compiled extension is preferred when present; otherwise the
pure-numpy reference implementation is used. Set STACKNER_KERNELS to
"python" or "native" to force a backend (forcing "native" raises if the
extension was not built).
"""
import os

from . import reference

_requested = os.environ.get("STACKNER_KERNELS", "").strip().lower()

if _requested == "python":
    _impl = reference
elif _requested in ("", "native"):
    try:
        from . import _native as _impl  # type: ignore[no-redef]
    except ImportError:
        if _requested == "native":
            raise
        _impl = reference
else:
    raise ImportError(f"unknown STACKNER_KERNELS value: {_requested!r}")

BACKEND = _impl.BACKEND_NAME

lstm_cell_forward = _impl.lstm_cell_forward
lstm_cell_backward = _impl.lstm_cell_backward
crf_forward = _impl.crf_forward
crf_backward = _impl.crf_backward
crf_viterbi = _impl.crf_viterbi
sgns_step = _impl.sgns_step
