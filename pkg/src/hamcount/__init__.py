from importlib.metadata import version

# Import submodules only when installed properly
from . import (
    bregman,
    config,
    digraph,
    errors,
    estimator,
    exact,
    experiments,
    fileio,
    runner,
    sampler,
    scaling,
    types,
)

__all__ = (
    *bregman.__all__,
    *config.__all__,
    *digraph.__all__,
    *errors.__all__,
    *estimator.__all__,
    *exact.__all__,
    *experiments.__all__,
    *fileio.__all__,
    *runner.__all__,
    *sampler.__all__,
    *scaling.__all__,
    *types.__all__,
    "__version__",
)

from .bregman import *  # noqa
from .config import *  # noqa
from .digraph import *  # noqa
from .errors import *  # noqa
from .estimator import *  # noqa
from .exact import *  # noqa
from .experiments import *  # noqa
from .fileio import *  # noqa
from .runner import *  # noqa
from .sampler import *  # noqa
from .scaling import *  # noqa
from .types import *  # noqa

__version__ = version("hamcount")
