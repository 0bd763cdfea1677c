"""Exception hierarchy shared by all scriptoria modules.

Every error raised by the library derives from ScriptoriaError so callers
(CLI, HTTP service) can map failures to exit codes / status classes in one
place.
"""

from __future__ import annotations


class ScriptoriaError(Exception):
    """Base class for all library errors."""

    code = "error"


class FormatError(ScriptoriaError):
    """Input bytes are not in a supported/declared format."""

    code = "format"


class ValidationError(ScriptoriaError):
    """A value violates a documented contract (bbox, shape, range...)."""

    code = "validation"


class DegenerateInputError(ScriptoriaError):
    """Input is technically valid but carries no usable signal
    (e.g. constant image under Otsu)."""

    code = "degenerate_input"


class DegeneratePatchError(ScriptoriaError):
    """A patch contains no ink, so no embedding can be formed."""

    code = "degenerate_patch"


class NoFitError(ScriptoriaError):
    """A template is larger than every detected line band."""

    code = "no_fit"


class EmptyDocumentError(ScriptoriaError):
    """No measure list is populated; the document yields no features."""

    code = "empty_document"


class IncomparableDocumentsError(ScriptoriaError):
    """Two feature vectors share no measure id."""

    code = "incomparable_documents"


class CalibrationError(ScriptoriaError):
    """Threshold calibration is impossible (e.g. single-class labels)."""

    code = "calibration"


class NormalizationError(ScriptoriaError):
    """Scale normalization requested but the reference measure is unusable."""

    code = "normalization"


class PageLayoutError(ScriptoriaError):
    """A synthetic page does not fit the configured canvas."""

    code = "page_layout"


class NotFoundError(ScriptoriaError):
    """A referenced document/template id does not exist in the store."""

    code = "not_found"
