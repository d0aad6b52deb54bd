"""Numerical laboratory for the bilinear Hilbert transform and its model sums.

Modules:

- ``tile_geometry``: intervals, tiles, trees, grids and the tile order.
- ``function_core``: sampled functions and the transform ``bht``.
- ``wave_packets``: windows, wave packets, model coefficients and tiles.
- ``maximal``: maximal functions, exceptional sets and tail checks.
- ``trees``: tree selection, counting and the tree CZ decomposition.
- ``exponents``: exact exponent bookkeeping and the closure search.
- ``experiments`` and ``cli``: the ``bht-lab`` harness.
"""

from .function_core import SampledFunction, bht, bht_degenerate

__version__ = "0.1.0"

__all__ = ["SampledFunction", "bht", "bht_degenerate", "__version__"]
