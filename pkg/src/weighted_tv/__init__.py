from importlib.metadata import PackageNotFoundError, version

from .backend.solve import minimize, solve_pd, solve_rof

try:
    __version__ = version("weighted-tv")
except PackageNotFoundError:
    # package is not installed
    __version__ = "uninstalled"

__all__ = ("minimize", "solve_pd", "solve_rof")
