"""Hot numeric kernels for the frame-pooling regressor.

Two interchangeable backends implement the same two functions:

  pooled_scores(feats, offsets, W1, b1, W2, b2, w3, b3) -> zbar[C]
  mse_loss_grad(feats, offsets, labels, W1, b1, W2, b2, w3, b3)
      -> (loss, preds, gW1, gb1, gW2, gb2, gw3, gb3)

``feats`` is the row-concatenation of C clips' feature matrices and
``offsets`` (length C+1, int64) marks each clip's frame range.  The compiled
Cython backend is preferred; the pure NumPy one is selected when the
extension is missing or MOSPOISON_NO_EXT is set.  Both are single-threaded
and deterministic; they agree to floating-point roundoff, not bit-for-bit.
"""

from __future__ import annotations

import os

from . import pure

if os.environ.get("MOSPOISON_NO_EXT"):
    _impl = pure
    BACKEND = "numpy"
else:
    try:
        from . import _fast as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        _impl = pure
        BACKEND = "numpy"

pooled_scores = _impl.pooled_scores
mse_loss_grad = _impl.mse_loss_grad

__all__ = ["BACKEND", "mse_loss_grad", "pooled_scores", "pure"]
