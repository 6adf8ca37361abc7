"""Error type shared by every module.

Each failure carries a short machine-readable ``code``; the CLI maps codes to
exit statuses.
"""

INPUT_CODES = frozenset(
    {
        "PARSE",
        "INVALID",
        "DOMAIN",
        "W_EQUALS_NU",
        "REJECTED_RANGE",
        "REJECTED_MEAN",
        "BOUNDARY_ZERO",
    }
)
NUMERIC_CODES = frozenset(
    {"NONCONVERGED", "TRUNCATION", "ROUTE_MISMATCH", "BOUND_VIOLATION"}
)


class MeanCountError(Exception):
    def __init__(self, code: str, message: str = "", diagnostics=None):
        self.code = code
        self.diagnostics = diagnostics
        super().__init__(f"{code}: {message}" if message else code)
