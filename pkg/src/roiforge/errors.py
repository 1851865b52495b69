"""Exception types shared across the toolkit."""


class RoiforgeError(Exception):
    """Base class for all toolkit errors."""


class DataError(RoiforgeError):
    """Invalid input data, geometry, or manifest contents.

    The CLI maps this to exit code 2.
    """
