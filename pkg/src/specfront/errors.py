"""Error types shared across the package."""


class ConfigError(ValueError):
    """Raised when a parameter, factor range, or config file entry is invalid.

    The CLI maps this to exit code 1 (usage/config error); structural
    problems with in-memory data raise plain ValueError and I/O problems
    raise OSError instead.
    """
