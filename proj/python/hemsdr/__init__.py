"""Home energy management: MILP dispatch, forecasting, and learned strategies.

Thin re-export of the compiled extension. The extension lives inside this
package in an installed wheel, or on PYTHONPATH next to the build tree.
"""

try:
    from hemsdr._hems import *  # noqa: F401,F403
    from hemsdr import _hems as _impl
except ImportError:  # build-tree layout: extension sits on PYTHONPATH
    from _hems import *  # noqa: F401,F403
    import _hems as _impl

__all__ = [name for name in dir(_impl) if not name.startswith("_")]
__version__ = "0.1.0"
