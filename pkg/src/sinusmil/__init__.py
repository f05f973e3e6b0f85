"""sinusmil - multiple instance ensembling for region-of-interest anomaly classification."""

try:
    from sinusmil._version import __version__
except ImportError:
    # Fallback for editable installs before first build
    __version__ = "0.0.0+unknown"

__all__ = [
    "__version__",
]
