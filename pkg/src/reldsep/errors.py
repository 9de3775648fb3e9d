"""Exception type shared by every module.

Each error carries a machine-readable ``code`` (for example ``UNKNOWN_CLASS``)
that the CLI prints verbatim on the error stream.
"""


class RelDSepError(ValueError):
    def __init__(self, code: str, message: str = ""):
        self.code = code
        self.message = message
        super().__init__(f"{code}: {message}" if message else code)
