"""Exception hierarchy shared across the package."""


class SplatgenError(Exception):
    """Base class for all package errors."""


class InvalidParameterError(SplatgenError, ValueError):
    """An argument violates a documented precondition."""


class PlyParseError(SplatgenError):
    """Base class for PLY read failures."""


class PlyHeaderError(PlyParseError):
    """The PLY header is malformed."""


class PlyPropertyError(PlyParseError):
    """The PLY vertex properties do not match the expected layout."""


class PlyTruncatedError(PlyParseError):
    """The PLY payload ends before the declared vertex count."""


class GuidanceError(SplatgenError):
    """Base class for guidance failures."""


class GuidanceTransportError(GuidanceError):
    """The remote guidance endpoint could not be reached."""


class GuidanceTimeoutError(GuidanceTransportError):
    """The remote guidance call timed out."""


class GuidanceProtocolError(GuidanceError):
    """The remote guidance endpoint returned a malformed response."""


class GuidanceServerError(GuidanceError):
    """The remote guidance endpoint reported an application error."""
