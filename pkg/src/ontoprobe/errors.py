"""Exception types shared across the package.

The CLI maps these onto exit codes: parse/configuration/usage problems
exit 2, degenerate statistics exit 3, exhausted transport retries exit 4.
"""


class OntoprobeError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(OntoprobeError):
    """An ontology, occurrence, or run file could not be parsed."""


class ConfigurationError(OntoprobeError):
    """Invalid or incomplete configuration: bad model config, missing
    prompt template, bad credentials, malformed provider response."""


class DegenerateInputError(OntoprobeError):
    """A statistical routine received input it cannot meaningfully
    process (constant series, rank-deficient design matrix)."""


class TransportExhausted(OntoprobeError):
    """An HTTP request kept failing after the full retry budget."""
