"""Fault-injection switches for the verification suite.

These flags deliberately break internal invariants so that ``mlaf verify``
(and the test suite) can demonstrate that the property checks actually
detect the corresponding defects.  They must never be set in production
runs; everything here defaults to off.
"""

from contextlib import contextmanager

# Skip the dealias mask when forming quadratic products. Aliased products
# no longer match the exact truncated convolution.
DISABLE_DEALIASING = False

# Skip the solenoidal projection in the nonlinear term and after each
# integrator step. Divergence then drifts and skew-symmetry breaks down.
SKIP_PROJECTION = False


@contextmanager
def inject(**flags):
    """Temporarily set hook flags, e.g. ``with inject(SKIP_PROJECTION=True)``."""
    saved = {}
    g = globals()
    for name, value in flags.items():
        if name not in g:
            raise AttributeError(f"unknown test hook: {name}")
        saved[name] = g[name]
        g[name] = value
    try:
        yield
    finally:
        g.update(saved)
