"""Two-stage deconvolution of origin-destination flows from link loads.

The heavy lifting lives in the compiled extension ``odeconv._core``; this
package re-exports its public surface.
"""

from ._core import *  # noqa: F401,F403
from ._core import __doc__ as _core_doc

__doc__ = _core_doc or __doc__
__version__ = "0.1.0"
