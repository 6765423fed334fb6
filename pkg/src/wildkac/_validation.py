"""Input checks shared by the estimator classes."""

import numpy as np
from sklearn.utils.validation import check_array

from .exceptions import ConfigurationError
from .kernels import Kernel


def check_samples(X, what="X", min_count=1):
    """Return a 1-d float array from a column vector or flat array of finite samples."""
    arr = check_array(X, ensure_2d=False, dtype=np.float64, ensure_all_finite=True,
                      input_name=what)
    if arr.ndim == 2:
        if arr.shape[1] != 1:
            raise ValueError(f"{what} must have a single column of samples, got shape {arr.shape}")
        arr = arr[:, 0]
    if arr.size < min_count:
        raise ValueError(f"{what} needs at least {min_count} samples, got {arr.size}")
    return arr


def check_kernel(kernel):
    if not isinstance(kernel, Kernel):
        raise ConfigurationError(f"kernel must be a Kernel instance, got {type(kernel).__name__}",
                                 "kernel")
    return kernel
