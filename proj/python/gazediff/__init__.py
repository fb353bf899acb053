"""User-specific eye-movement synthesis via conditional diffusion."""

try:
    from ._gazediff import *  # noqa: F401,F403
except ImportError:
    # build-tree layout: extension sits next to the package on sys.path
    from _gazediff import *  # noqa: F401,F403
