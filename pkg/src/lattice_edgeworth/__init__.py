"""Lattice-corrected Edgeworth expansions, exact binomial and Poisson tail
oracles, and an exact checker for where ``P(Bi(n, m/n) <= m)`` is smallest."""

from .chvatal import *  # noqa: F401,F403
from .cumulants import *  # noqa: F401,F403
from .edgeworth import *  # noqa: F401,F403
from .errors import DomainError
from .exactprob import *  # noqa: F401,F403
from .series import *  # noqa: F401,F403

__version__ = "0.1.0"
